//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
//! 3 degenerate state, 4 inadmissible transformation parameter.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::brackets;
use crate::error::KeplerError;
use crate::flow::{self, Trajectory};
use crate::generators::Family;
use crate::kepler::{self, ExtendedState, KeplerSystem, PhaseState, Vec3};
use crate::transforms::{self, TransformResult};
use crate::verify::{self, Suite, SuiteSettings, Tolerances};

pub const SCHEMA_VERSION: u32 = 1;
pub const CONFIG_ENV: &str = "KEPLER_LRL_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_INADMISSIBLE: i32 = 4;

/// Settings read from a JSON config file; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kappa: f64,
    pub tolerances: Tolerances,
    pub integrator_tol: f64,
    pub rk_steps: usize,
    pub quad_panels: usize,
    pub seed: u64,
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            tolerances: Tolerances::default(),
            integrator_tol: flow::DEFAULT_ORBIT_TOL,
            rk_steps: flow::DEFAULT_FLOW_STEPS,
            quad_panels: transforms::DEFAULT_QUAD_PANELS,
            seed: 7,
            samples: 100,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    fn validate(&self) -> Result<(), String> {
        let t = &self.tolerances;
        let all = [
            t.bracket, t.bracket_fd, t.noether, t.action, t.antisymmetry, t.jacobi, t.invariance,
            t.flow, t.composition, t.mapping, t.gauge, t.gauge_rate, t.closure, t.energy_drift,
            self.integrator_tol,
        ];
        if all.iter().any(|x| !(*x > 0.0)) {
            return Err("all tolerances must be positive".into());
        }
        if self.samples < 1 || self.rk_steps < 1 || self.quad_panels < 1 {
            return Err("samples, rk_steps and quad_panels must be at least 1".into());
        }
        KeplerSystem::new(self.kappa).map_err(|e| e.to_string())?;
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "kepler-lrl", version, about = "Kepler problem symmetries: conserved quantities, brackets and LRL transformations")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config file (defaults to $KEPLER_LRL_CONFIG when set)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Force constant
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Override every check tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Local tolerance of the orbit integrator
    #[arg(long, global = true)]
    integrator_tol: Option<f64>,
    /// RK4 steps for symmetry flows
    #[arg(long, global = true)]
    rk_steps: Option<usize>,
    /// Initial quadrature panels for the time shift
    #[arg(long, global = true)]
    quad_panels: Option<usize>,
}

#[derive(Debug, Args)]
struct StateArgs {
    /// Position, as x,y,z
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    r: Vec3,
    /// Velocity, as x,y,z
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    v: Vec3,
    /// Initial time
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
}

impl StateArgs {
    fn state(&self) -> ExtendedState {
        ExtendedState::new(self.t, PhaseState::new(self.r, self.v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformKind {
    Rotation,
    Time,
    Lrl,
    LrlDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Lrl,
    LrlDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Algebra,
    Transforms,
    Flows,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy, angular momentum, LRL vector and derived quantities
    Conserved {
        #[command(flatten)]
        state: StateArgs,
    },
    /// Apply a finite symmetry transformation
    Transform {
        #[arg(long, value_enum)]
        kind: TransformKind,
        /// Parameter: x,y,z (a single number for --kind time)
        #[arg(long, allow_hyphen_values = true)]
        eps: String,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Poisson-bracket structure table
    Brackets {
        #[command(flatten)]
        state: StateArgs,
        /// Add the finite-difference cross-check column
        #[arg(long)]
        fd_check: bool,
    },
    /// Run property suites over seeded random states
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate an orbit and write CSV
    Orbit {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 0.01)]
        dt_out: f64,
        /// Output file (standard output when absent)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Orbits of the transformed states along a parameter ray, as CSV
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        eps_axis: Vec3,
        #[arg(long)]
        eps_max: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "1,0,0")]
        r: Vec3,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,1.2,0")]
        v: Vec3,
        /// Span of each orbit (one period for bound orbits, 10 otherwise, when absent)
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        dt_out: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got '{s}'"));
    }
    let mut out = Vec3::zeros();
    for (i, p) in parts.iter().enumerate() {
        let x: f64 = p.parse().map_err(|_| format!("'{p}' is not a number"))?;
        if !x.is_finite() {
            return Err(format!("'{p}' is not finite"));
        }
        out[i] = x;
    }
    Ok(out)
}

fn vec_json(v: &Vec3) -> Value {
    json!([v.x, v.y, v.z])
}

fn state_json(s: &ExtendedState) -> Value {
    json!({ "t": s.t, "r": vec_json(&s.state.r), "v": vec_json(&s.state.v) })
}

fn exit_code(e: &KeplerError) -> i32 {
    match e {
        KeplerError::InvalidInput(_) => EXIT_USAGE,
        KeplerError::Inadmissible { .. } => EXIT_INADMISSIBLE,
        _ => EXIT_DEGENERATE,
    }
}

/// Failure of a command: exit code plus message for the error stream.
struct Failure {
    code: i32,
    message: String,
}

impl From<KeplerError> for Failure {
    fn from(e: KeplerError) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(e: io::Error) -> Failure {
    usage(format!("write failed: {e}"))
}

fn write_json(out: &mut dyn Write, mut doc: Value) -> Result<(), Failure> {
    if let Value::Object(map) = &mut doc {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| usage(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_failure)
}

struct Context {
    config: RunConfig,
    sys: KeplerSystem,
    tol_override: Option<f64>,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn context(common: &CommonArgs) -> Result<Context, Failure> {
    let path = common
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut config = match path {
        Some(p) => RunConfig::load(&p).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(k) = common.kappa {
        config.kappa = k;
    }
    if let Some(t) = common.tol {
        config.tolerances = Tolerances::uniform(t);
    }
    if let Some(t) = common.integrator_tol {
        config.integrator_tol = t;
    }
    if let Some(n) = common.rk_steps {
        config.rk_steps = n;
    }
    if let Some(n) = common.quad_panels {
        config.quad_panels = n;
    }
    config.validate().map_err(usage)?;
    let sys = KeplerSystem::new(config.kappa)?;
    Ok(Context {
        config,
        sys,
        tol_override: common.tol,
    })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut ctx = context(&cli.common)?;
    match cli.command {
        Command::Conserved { state } => cmd_conserved(&ctx, &state.state(), out),
        Command::Transform { kind, eps, state } => cmd_transform(&ctx, kind, &eps, &state.state(), out),
        Command::Brackets { state, fd_check } => cmd_brackets(&ctx, &state.state().state, fd_check, out),
        Command::Verify { suite, samples, seed } => {
            if let Some(n) = samples {
                ctx.config.samples = n;
            }
            if let Some(s) = seed {
                ctx.config.seed = s;
            }
            ctx.config.validate().map_err(usage)?;
            cmd_verify(&ctx, suite, out)
        }
        Command::Orbit {
            state,
            tmax,
            dt_out,
            output,
        } => cmd_orbit(&ctx, &state.state(), tmax, dt_out, output.as_deref(), out),
        Command::Sweep {
            kind,
            eps_axis,
            eps_max,
            grid,
            r,
            v,
            tmax,
            dt_out,
            output,
        } => {
            let family = match kind {
                SweepKind::Lrl => Family::Lrl,
                SweepKind::LrlDirection => Family::LrlDirection,
            };
            let base = ExtendedState::at_origin_time(PhaseState::new(r, v));
            let plan = SweepPlan {
                family,
                axis: eps_axis,
                eps_max,
                grid,
                tmax,
                dt_out,
            };
            cmd_sweep(&ctx, &base, &plan, output.as_deref(), out)
        }
    }
}

fn cmd_conserved(ctx: &Context, state: &ExtendedState, out: &mut dyn Write) -> Result<i32, Failure> {
    let set = kepler::conserved_set(&state.state, &ctx.sys)?;
    let mut doc = serde_json::to_value(&set).map_err(|e| usage(e.to_string()))?;
    if let Value::Object(map) = &mut doc {
        map.insert("kappa".into(), json!(ctx.sys.kappa()));
        map.insert("state".into(), state_json(state));
    }
    write_json(out, doc)?;
    Ok(EXIT_OK)
}

fn transform_json(kind: &str, eps: Value, input: &ExtendedState, res: &TransformResult) -> Value {
    json!({
        "kind": kind,
        "eps": eps,
        "input": state_json(input),
        "out": state_json(&res.out),
        "delta_t": res.delta_t,
        "admissible": res.admissible,
        "constants_out": res.constants_out,
        "diagnostics": res.diagnostics,
        "warnings": res.warnings,
    })
}

/// Transform result for the point symmetries, with invariance diagnostics.
fn point_result(
    input: &ExtendedState,
    image: ExtendedState,
    sys: &KeplerSystem,
    tol: f64,
) -> Result<TransformResult, KeplerError> {
    let c0 = kepler::conserved_set(&input.state, sys)?;
    let c1 = kepler::conserved_set(&image.state, sys)?;
    let mut diagnostics = std::collections::BTreeMap::new();
    diagnostics.insert(
        "energy_invariance".to_string(),
        (c1.energy - c0.energy).abs() / c0.energy.abs().max(1.0),
    );
    diagnostics.insert(
        "angular_momentum_norm_invariance".to_string(),
        (c1.angular_momentum.norm() - c0.angular_momentum.norm()).abs(),
    );
    let admissible = diagnostics.values().all(|&d| d <= tol);
    Ok(TransformResult {
        out: image,
        constants_out: c1,
        delta_t: 0.0,
        admissible,
        diagnostics,
        warnings: Vec::new(),
    })
}

fn cmd_transform(
    ctx: &Context,
    kind: TransformKind,
    eps_text: &str,
    input: &ExtendedState,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let sys = &ctx.sys;
    let label = kind
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    if kind == TransformKind::Time {
        let eps: f64 = eps_text
            .trim()
            .parse()
            .map_err(|_| usage(format!("--eps for a time translation must be a number, got '{eps_text}'")))?;
        let image = transforms::time_translate(input, eps, sys, ctx.config.integrator_tol)?;
        let res = point_result(input, image, sys, 1e3 * ctx.config.integrator_tol)?;
        write_json(out, transform_json(&label, json!(eps), input, &res))?;
        return Ok(if res.admissible { EXIT_OK } else { EXIT_INADMISSIBLE });
    }
    let eps = parse_vec3(eps_text).map_err(usage)?;
    let result = match kind {
        TransformKind::Rotation => {
            let image = transforms::rotate(input, &eps);
            point_result(input, image, sys, ctx.config.tolerances.invariance)
        }
        TransformKind::Lrl => transforms::lrl_transform(input, sys, &eps, ctx.config.quad_panels),
        _ => transforms::direction_lrl_transform(input, sys, &eps, ctx.config.quad_panels),
    };
    match result {
        Ok(res) => {
            write_json(out, transform_json(&label, vec_json(&eps), input, &res))?;
            Ok(if res.admissible { EXIT_OK } else { EXIT_INADMISSIBLE })
        }
        Err(KeplerError::Inadmissible { argument }) => {
            let e = KeplerError::Inadmissible { argument };
            write_json(
                out,
                json!({
                    "kind": label,
                    "eps": vec_json(&eps),
                    "input": state_json(input),
                    "admissible": false,
                    "diagnostics": { "sqrt_argument": argument },
                    "error": e.to_string(),
                }),
            )?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_brackets(
    ctx: &Context,
    state: &PhaseState,
    fd_check: bool,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let report = brackets::structure_table(state, &ctx.sys, fd_check)?;
    let tol = ctx.tol_override.unwrap_or(ctx.config.tolerances.bracket);
    let fd_tol = ctx.tol_override.unwrap_or(ctx.config.tolerances.bracket_fd);
    let pass = report.max_residual <= tol && report.max_fd_residual.is_none_or(|r| r <= fd_tol);
    write_json(
        out,
        json!({
            "kappa": ctx.sys.kappa(),
            "state": { "r": vec_json(&state.r), "v": vec_json(&state.v) },
            "tolerance": tol,
            "fd_tolerance": fd_check.then_some(fd_tol),
            "pass": pass,
            "report": report,
        }),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn cmd_verify(ctx: &Context, suite: SuiteArg, out: &mut dyn Write) -> Result<i32, Failure> {
    let suite = match suite {
        SuiteArg::Algebra => Suite::Algebra,
        SuiteArg::Transforms => Suite::Transforms,
        SuiteArg::Flows => Suite::Flows,
        SuiteArg::All => Suite::All,
    };
    let settings = SuiteSettings {
        samples: ctx.config.samples,
        seed: ctx.config.seed,
        rk_steps: ctx.config.rk_steps,
        quad_panels: ctx.config.quad_panels,
        tol: ctx.config.tolerances,
    };
    writeln!(
        out,
        "schema_version={SCHEMA_VERSION} suite={suite:?} samples={} seed={} kappa={}",
        settings.samples,
        settings.seed,
        ctx.sys.kappa()
    )
    .map_err(io_failure)?;
    match verify::run_suite(suite, &settings, &ctx.sys) {
        Ok(checks) => {
            for c in &checks {
                writeln!(out, "{}", c.line()).map_err(io_failure)?;
            }
            let ok = verify::all_passed(&checks);
            writeln!(out, "overall: {}", if ok { "PASS" } else { "FAIL" }).map_err(io_failure)?;
            Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Err(e) => {
            writeln!(out, "FAIL suite aborted: {e}").map_err(io_failure)?;
            writeln!(out, "overall: FAIL").map_err(io_failure)?;
            Ok(EXIT_VERIFY_FAILED)
        }
    }
}

fn with_output<F>(path: Option<&Path>, out: &mut dyn Write, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Failure>,
{
    match path {
        Some(p) => {
            let mut file = File::create(p).map_err(|e| usage(format!("cannot create {}: {e}", p.display())))?;
            f(&mut file)
        }
        None => f(out),
    }
}

fn cmd_orbit(
    ctx: &Context,
    state: &ExtendedState,
    tmax: f64,
    dt_out: f64,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if !(tmax > 0.0 && dt_out > 0.0) {
        return Err(usage("--tmax and --dt-out must be positive"));
    }
    let traj = flow::integrate_orbit_sampled(state, &ctx.sys, tmax, dt_out, ctx.config.integrator_tol)?;
    with_output(output, out, |w| {
        flow::write_csv(w, &[(None, &traj)], &ctx.sys).map_err(Failure::from)
    })?;
    Ok(EXIT_OK)
}

struct SweepPlan {
    family: Family,
    axis: Vec3,
    eps_max: f64,
    grid: usize,
    tmax: Option<f64>,
    dt_out: f64,
}

fn cmd_sweep(
    ctx: &Context,
    base: &ExtendedState,
    plan: &SweepPlan,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if plan.grid == 0 {
        return Err(usage("--grid must be at least 1"));
    }
    if plan.axis.norm() == 0.0 {
        return Err(usage("--eps-axis must be non-zero"));
    }
    if !(plan.dt_out > 0.0) || plan.tmax.is_some_and(|t| !(t > 0.0)) || !plan.eps_max.is_finite() {
        return Err(usage("--tmax and --dt-out must be positive and --eps-max finite"));
    }
    let axis = plan.axis.normalize();
    let mut families: Vec<(usize, Trajectory)> = Vec::new();
    let mut last_error = None;
    for k in 0..plan.grid {
        let frac = if plan.grid == 1 { 1.0 } else { k as f64 / (plan.grid - 1) as f64 };
        let eps = frac * plan.eps_max * axis;
        let res = match transforms::family_transform(plan.family, base, &ctx.sys, &eps, ctx.config.quad_panels) {
            Ok(r) => r,
            Err(e) => {
                last_error = Some(e);
                continue;
            }
        };
        let span = plan
            .tmax
            .unwrap_or_else(|| res.constants_out.period.unwrap_or(10.0));
        let traj = flow::integrate_orbit_sampled(&res.out, &ctx.sys, span, plan.dt_out, ctx.config.integrator_tol)?;
        families.push((k, traj));
    }
    if families.is_empty() {
        return Err(last_error
            .map(Failure::from)
            .unwrap_or_else(|| usage("empty sweep")));
    }
    let refs: Vec<(Option<usize>, &Trajectory)> = families.iter().map(|(k, t)| (Some(*k), t)).collect();
    with_output(output, out, |w| flow::write_csv(w, &refs, &ctx.sys).map_err(Failure::from))?;
    Ok(EXIT_OK)
}
