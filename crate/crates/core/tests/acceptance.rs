//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use kepler_lrl::verify::{self, CheckResult, SuiteSettings, Tolerances};
use kepler_lrl::{KeplerSystem, Result};

struct Criterion {
    id: u32,
    title: &'static str,
    samples: usize,
    limit: Duration,
    checks: fn(&SuiteSettings, &KeplerSystem) -> Result<Vec<CheckResult>>,
}

fn algebra(set: &SuiteSettings, sys: &KeplerSystem) -> Result<Vec<CheckResult>> {
    let mut out = verify::bracket_structure(set, sys)?;
    out.extend(verify::bracket_identities(set, sys)?);
    Ok(out)
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() -> ExitCode {
    let sys = KeplerSystem::default();
    let criteria = [
        Criterion { id: 1, title: "bracket structure constants", samples: 1000, limit: secs(5), checks: algebra },
        Criterion { id: 2, title: "noether correspondence", samples: 1000, limit: secs(5), checks: verify::noether_correspondence },
        Criterion { id: 3, title: "direction-LRL group", samples: 200, limit: secs(30), checks: verify::direction_group },
        Criterion { id: 4, title: "LRL group", samples: 200, limit: secs(60), checks: verify::lrl_group },
        Criterion { id: 5, title: "solution mapping", samples: 120, limit: secs(30), checks: verify::solution_mapping },
        Criterion { id: 6, title: "gauge condition", samples: 100, limit: secs(10), checks: verify::gauge_condition },
        Criterion { id: 7, title: "orbit integrator", samples: 1, limit: secs(5), checks: verify::orbit_integrator },
        Criterion { id: 8, title: "symmetry action on constants", samples: 500, limit: secs(10), checks: verify::symmetry_action },
        Criterion { id: 9, title: "rk4 convergence order", samples: 1, limit: secs(10), checks: verify::flow_convergence },
    ];

    let total = Instant::now();
    let mut failed = Vec::new();
    for c in &criteria {
        let set = SuiteSettings {
            samples: c.samples,
            seed: 20240611,
            tol: Tolerances::default(),
            ..SuiteSettings::default()
        };
        let start = Instant::now();
        let result = (c.checks)(&set, &sys);
        let elapsed = start.elapsed();
        let (ok, detail) = match &result {
            Ok(checks) => (verify::all_passed(checks), String::new()),
            Err(e) => (false, format!(" error: {e}")),
        };
        let in_time = elapsed <= c.limit;
        let pass = ok && in_time;
        println!(
            "criterion {} {:<30} {}  ({:.2}s, limit {}s){}",
            c.id,
            c.title,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            detail
        );
        if let Ok(checks) = &result {
            for chk in checks {
                println!("    {}", chk.line());
            }
        }
        if !pass {
            failed.push(c.id);
        }
    }
    println!("total {:.2}s", total.elapsed().as_secs_f64());
    if failed.is_empty() {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAIL {failed:?}");
        ExitCode::FAILURE
    }
}
