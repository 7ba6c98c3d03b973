//! Integration oracles: an adaptive Dormand-Prince orbit integrator, fixed-step
//! RK4 for the symmetry flows, and comparisons against the closed forms.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{KeplerError, Result};
use crate::generators::{self, Family};
use crate::kepler::{self, ConservedSet, ExtendedState, KeplerSystem, PhaseState, Vec3};
use crate::transforms;

/// Integration aborts once `|r|` drops below this.
pub const COLLISION_FLOOR: f64 = 1e-8;
pub const DEFAULT_ORBIT_TOL: f64 = 1e-10;
pub const DEFAULT_FLOW_STEPS: usize = 10_000;

type Y = [f64; 6];

fn kepler_rhs(y: &Y, kappa: f64) -> Y {
    let (x, yy, z) = (y[0], y[1], y[2]);
    let r2 = x * x + yy * yy + z * z;
    let f = -kappa / (r2 * r2.sqrt());
    [y[3], y[4], y[5], f * x, f * yy, f * z]
}

fn axpy(y: &Y, h: f64, terms: &[(f64, &Y)]) -> Y {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..6 {
            out[i] += h * c * k[i];
        }
    }
    out
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes c_i are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince step; returns the 5th-order solution, its derivative
/// (reused as the next first stage) and the embedded error vector.
fn dopri_step(y: &Y, k1: &Y, h: f64, kappa: f64) -> (Y, Y, Y) {
    let k2 = kepler_rhs(&axpy(y, h, &[(A21, k1)]), kappa);
    let k3 = kepler_rhs(&axpy(y, h, &[(A31, k1), (A32, &k2)]), kappa);
    let k4 = kepler_rhs(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]), kappa);
    let k5 = kepler_rhs(
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        kappa,
    );
    let k6 = kepler_rhs(
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        kappa,
    );
    let y5 = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = kepler_rhs(&y5, kappa);
    let mut err = [0.0; 6];
    for i in 0..6 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, k7, err)
}

/// Adaptive Dormand-Prince integrator with PI step-size control.
struct Dopri {
    kappa: f64,
    tol: f64,
    max_step: f64,
    t: f64,
    y: Y,
    k1: Y,
    h: f64,
    err_prev: f64,
}

impl Dopri {
    fn new(t: f64, state: &PhaseState, sys: &KeplerSystem, tol: f64, max_step: f64) -> Result<Self> {
        if !(tol > 0.0 && max_step > 0.0) {
            return Err(KeplerError::InvalidInput(
                "tolerance and max step must be positive".into(),
            ));
        }
        if !state.is_finite() {
            return Err(KeplerError::NonFinite);
        }
        let r_mag = state.radius();
        if r_mag < COLLISION_FLOOR {
            return Err(KeplerError::Collision { t, r_mag });
        }
        let y = state.to_array();
        let k1 = kepler_rhs(&y, sys.kappa());
        // initial step from the local dynamical time scale
        let scale = r_mag / (state.v.norm() + (sys.kappa() / r_mag).sqrt());
        let h = (0.01 * scale * tol.powf(0.2)).min(max_step);
        Ok(Self {
            kappa: sys.kappa(),
            tol,
            max_step,
            t,
            y,
            k1,
            h,
            err_prev: 1e-4,
        })
    }

    fn error_norm(&self, y_new: &Y, err: &Y) -> f64 {
        (0..6)
            .map(|i| err[i].abs() / (self.tol * (1.0 + self.y[i].abs().max(y_new[i].abs()))))
            .fold(0.0, f64::max)
    }

    /// Takes one accepted step, never passing `t_end`.
    fn step(&mut self, t_end: f64) -> Result<()> {
        loop {
            let remaining = t_end - self.t;
            let h = self.h.min(self.max_step).min(remaining);
            if h <= 1e-14 * self.t.abs().max(1.0) && h < remaining {
                return Err(KeplerError::StepUnderflow { t: self.t, h });
            }
            let (y_new, k_new, err) = dopri_step(&self.y, &self.k1, h, self.kappa);
            let en = self.error_norm(&y_new, &err);
            if !en.is_finite() {
                self.h = 0.2 * h;
                continue;
            }
            if en <= 1.0 {
                let en = en.max(1e-10);
                let factor = (0.9 * en.powf(-0.7 / 5.0) * self.err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
                self.err_prev = en;
                self.t = if h == remaining { t_end } else { self.t + h };
                self.y = y_new;
                self.k1 = k_new;
                if h == self.h.min(self.max_step) {
                    self.h = h * factor;
                }
                let state = PhaseState::from_array(&self.y);
                if !state.is_finite() {
                    return Err(KeplerError::NonFinite);
                }
                let r_mag = state.radius();
                if r_mag < COLLISION_FLOOR {
                    return Err(KeplerError::Collision { t: self.t, r_mag });
                }
                return Ok(());
            }
            self.h = h * (0.9 * en.powf(-0.2)).max(0.2);
        }
    }

    fn state(&self) -> ExtendedState {
        ExtendedState::new(self.t, PhaseState::from_array(&self.y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    pub energy: f64,
    pub angular_momentum: f64,
    pub lrl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<ExtendedState>,
    pub drift: Drift,
}

fn drift_of(samples: &[ExtendedState], sys: &KeplerSystem) -> Result<Drift> {
    let c0 = kepler::conserved_set(&samples[0].state, sys)?;
    let mut d = Drift {
        energy: 0.0,
        angular_momentum: 0.0,
        lrl: 0.0,
    };
    for s in samples {
        let c = kepler::conserved_set(&s.state, sys)?;
        d.energy = d.energy.max((c.energy - c0.energy).abs());
        d.angular_momentum = d
            .angular_momentum
            .max((c.angular_momentum - c0.angular_momentum).norm());
        d.lrl = d.lrl.max((c.lrl - c0.lrl).norm());
    }
    Ok(d)
}

/// Integrates the Kepler equations over `[t, t + t_span]`, recording every
/// accepted step.
pub fn integrate_orbit(
    state: &ExtendedState,
    sys: &KeplerSystem,
    t_span: f64,
    tol: f64,
    max_step: f64,
) -> Result<Trajectory> {
    if !(t_span >= 0.0) {
        return Err(KeplerError::InvalidInput(format!(
            "t_span must be non-negative, got {t_span}"
        )));
    }
    let mut dp = Dopri::new(state.t, &state.state, sys, tol, max_step)?;
    let t_end = state.t + t_span;
    let mut samples = vec![*state];
    while dp.t < t_end {
        dp.step(t_end)?;
        samples.push(dp.state());
    }
    let drift = drift_of(&samples, sys)?;
    Ok(Trajectory { samples, drift })
}

/// Integrates over `[t, t + t_span]`, emitting samples every `dt_out`.
pub fn integrate_orbit_sampled(
    state: &ExtendedState,
    sys: &KeplerSystem,
    t_span: f64,
    dt_out: f64,
    tol: f64,
) -> Result<Trajectory> {
    if !(dt_out > 0.0 && t_span >= 0.0) {
        return Err(KeplerError::InvalidInput(
            "dt_out must be positive and t_span non-negative".into(),
        ));
    }
    let mut dp = Dopri::new(state.t, &state.state, sys, tol, f64::INFINITY)?;
    let n = (t_span / dt_out).round() as usize;
    let mut samples = vec![*state];
    for i in 1..=n {
        let target = state.t + (i as f64 * dt_out).min(t_span);
        while dp.t < target {
            dp.step(target)?;
        }
        samples.push(dp.state());
    }
    let drift = drift_of(&samples, sys)?;
    Ok(Trajectory { samples, drift })
}

/// Phase-space point after time `dt` (either sign). Backward propagation uses
/// time reversal `(r, v) -> (r, -v)`.
pub fn propagate(state: &PhaseState, dt: f64, sys: &KeplerSystem, tol: f64) -> Result<PhaseState> {
    if dt == 0.0 {
        return Ok(*state);
    }
    let (start, flip) = if dt < 0.0 {
        (PhaseState::new(state.r, -state.v), true)
    } else {
        (*state, false)
    };
    let mut dp = Dopri::new(0.0, &start, sys, tol, f64::INFINITY)?;
    let t_end = dt.abs();
    while dp.t < t_end {
        dp.step(t_end)?;
    }
    let end = PhaseState::from_array(&dp.y);
    Ok(if flip {
        PhaseState::new(end.r, -end.v)
    } else {
        end
    })
}

/// Time component of a symmetry flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// `tau` chosen so that `|r|` is invariant; singular at apsides.
    RadiusInvariant,
    /// Pure phase-space prolongation, `tau = 0`.
    PhaseSpace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryFlow {
    pub end: ExtendedState,
    /// Flow states at `s = k/100`, `k = 0..=100` (when `steps` is a multiple of 100).
    pub path: Vec<(f64, ExtendedState)>,
    pub r_mag_drift: f64,
}

fn flow_field(
    family: Family,
    eps: &Vec3,
    gauge: Gauge,
    y: &[f64; 7],
    sys: &KeplerSystem,
) -> Result<[f64; 7]> {
    let state = PhaseState::from_arrays([y[1], y[2], y[3]], [y[4], y[5], y[6]]);
    if !state.is_finite() {
        return Err(KeplerError::NonFinite);
    }
    let g = match gauge {
        Gauge::RadiusInvariant => generators::gauge_fixed_family(family, eps, &state, sys)?,
        Gauge::PhaseSpace => generators::family_generator(family, eps, &state, sys)?,
    };
    Ok([
        g.delta_t, g.delta_r.x, g.delta_r.y, g.delta_r.z, g.delta_v.x, g.delta_v.y, g.delta_v.z,
    ])
}

/// Integrates `d(t, r, v)/ds = Y_eps` over `s in [0, 1]` with classical RK4.
pub fn integrate_symmetry_flow(
    family: Family,
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    steps: usize,
    gauge: Gauge,
) -> Result<SymmetryFlow> {
    if steps == 0 {
        return Err(KeplerError::InvalidInput("steps must be positive".into()));
    }
    let pack = |e: &ExtendedState| {
        let a = e.state.to_array();
        [e.t, a[0], a[1], a[2], a[3], a[4], a[5]]
    };
    let unpack = |y: &[f64; 7]| {
        ExtendedState::new(y[0], PhaseState::from_arrays([y[1], y[2], y[3]], [y[4], y[5], y[6]]))
    };
    let r0 = state.state.radius();
    let mut path = vec![(0.0, *state)];
    if *eps == Vec3::zeros() {
        return Ok(SymmetryFlow {
            end: *state,
            path,
            r_mag_drift: 0.0,
        });
    }
    let record = (steps / 100).max(1);
    let h = 1.0 / steps as f64;
    let mut y = pack(state);
    let mut drift: f64 = 0.0;
    let f = |y: &[f64; 7]| flow_field(family, eps, gauge, y, sys);
    let add = |y: &[f64; 7], c: f64, k: &[f64; 7]| {
        let mut o = *y;
        for i in 0..7 {
            o[i] += c * k[i];
        }
        o
    };
    for n in 0..steps {
        let k1 = f(&y)?;
        let k2 = f(&add(&y, 0.5 * h, &k1))?;
        let k3 = f(&add(&y, 0.5 * h, &k2))?;
        let k4 = f(&add(&y, h, &k3))?;
        for i in 0..7 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let e = unpack(&y);
        drift = drift.max((e.state.radius() - r0).abs());
        if (n + 1) % record == 0 {
            path.push(((n + 1) as f64 * h, e));
        }
    }
    Ok(SymmetryFlow {
        end: unpack(&y),
        path,
        r_mag_drift: drift,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub closed_form: ExtendedState,
    pub integrated: ExtendedState,
    pub max_component_residual: f64,
    /// `|r|` drift of the radius-invariant flow, when that flow exists (off apsides).
    pub r_mag_drift: Option<f64>,
    /// Residual of the radius-invariant flow endpoint against the closed form.
    pub gauge_flow_residual: Option<f64>,
}

/// Tolerance used when Kepler-propagating the phase-space flow endpoint.
const ORACLE_TOL: f64 = 1e-13;

/// Closed form against independent integration.
///
/// The primary oracle integrates the phase-space flow (which is smooth even at
/// apsides) and then moves along the orbit by the closed-form time shift; the
/// gauge term only ever adds motion along `D_t`. Off apsides the
/// radius-invariant flow is also integrated and compared directly, including `t`.
pub fn compare_flow_vs_closed_form(
    family: Family,
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    steps: usize,
    quad_panels: usize,
) -> Result<FlowReport> {
    let closed = transforms::family_transform(family, state, sys, eps, quad_panels)?;
    if *eps == Vec3::zeros() {
        return Ok(FlowReport {
            closed_form: closed.out,
            integrated: *state,
            max_component_residual: closed.out.max_abs_diff(state),
            r_mag_drift: Some(0.0),
            gauge_flow_residual: Some(0.0),
        });
    }
    let phase = integrate_symmetry_flow(family, state, sys, eps, steps, Gauge::PhaseSpace)?;
    let moved = propagate(&phase.end.state, closed.delta_t, sys, ORACLE_TOL)?;
    let integrated = ExtendedState::new(state.t + closed.delta_t, moved);
    let gauge = integrate_symmetry_flow(family, state, sys, eps, steps, Gauge::RadiusInvariant).ok();
    Ok(FlowReport {
        closed_form: closed.out,
        integrated,
        max_component_residual: closed.out.max_abs_diff(&integrated),
        r_mag_drift: gauge.as_ref().map(|g| g.r_mag_drift),
        gauge_flow_residual: gauge.as_ref().map(|g| g.end.max_abs_diff(&closed.out)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingReport {
    pub t_span: f64,
    pub energy: f64,
    pub angular_momentum: f64,
    pub lrl: f64,
    pub max_deviation: f64,
}

fn deviation(c: &ConservedSet, target: &ConservedSet) -> (f64, f64, f64) {
    (
        (c.energy - target.energy).abs(),
        (c.angular_momentum - target.angular_momentum).amax(),
        (c.lrl - target.lrl).amax(),
    )
}

/// Re-integrates the orbit through the transformed point and reports how far
/// its constants stray from the predicted ones over `t_span`.
pub fn verify_solution_mapping(
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    family: Family,
    t_span: f64,
    tol: f64,
) -> Result<MappingReport> {
    let res = transforms::family_transform(family, state, sys, eps, transforms::DEFAULT_QUAD_PANELS)?;
    let traj = integrate_orbit(&res.out, sys, t_span, tol, f64::INFINITY)?;
    let mut rep = MappingReport {
        t_span,
        energy: 0.0,
        angular_momentum: 0.0,
        lrl: 0.0,
        max_deviation: 0.0,
    };
    for s in &traj.samples {
        let c = kepler::conserved_set(&s.state, sys)?;
        let (e, l, a) = deviation(&c, &res.constants_out);
        rep.energy = rep.energy.max(e);
        rep.angular_momentum = rep.angular_momentum.max(l);
        rep.lrl = rep.lrl.max(a);
    }
    rep.max_deviation = rep.energy.max(rep.angular_momentum).max(rep.lrl);
    Ok(rep)
}

pub const CSV_HEADER: [&str; 14] = [
    "t", "rx", "ry", "rz", "vx", "vy", "vz", "E", "Lx", "Ly", "Lz", "Ax", "Ay", "Az",
];

fn csv_row(s: &ExtendedState, sys: &KeplerSystem) -> Result<Vec<String>> {
    let c = kepler::conserved_set(&s.state, sys)?;
    let a = s.state.to_array();
    let mut row = vec![s.t];
    row.extend_from_slice(&a);
    row.push(c.energy);
    row.extend(c.angular_momentum.iter());
    row.extend(c.lrl.iter());
    Ok(row.iter().map(|x| format!("{x:.12e}")).collect())
}

fn csv_err(e: csv::Error) -> KeplerError {
    KeplerError::InvalidInput(format!("csv output failed: {e}"))
}

/// Writes one or more trajectories as CSV. With `family` labels a leading
/// `family` column is added.
pub fn write_csv<W: Write>(
    out: W,
    trajectories: &[(Option<usize>, &Trajectory)],
    sys: &KeplerSystem,
) -> Result<()> {
    let labelled = trajectories.iter().any(|(f, _)| f.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::new();
    if labelled {
        header.push("family");
    }
    header.extend(CSV_HEADER);
    w.write_record(&header).map_err(csv_err)?;
    for (family, traj) in trajectories {
        for s in &traj.samples {
            let mut row = Vec::new();
            if labelled {
                row.push(family.unwrap_or(0).to_string());
            }
            row.extend(csv_row(s, sys)?);
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()
        .map_err(|e| KeplerError::InvalidInput(format!("csv output failed: {e}")))?;
    Ok(())
}

/// Named residuals of a flow run, for reports.
pub fn flow_summary(report: &FlowReport) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert("max_component_residual".into(), report.max_component_residual);
    if let Some(d) = report.r_mag_drift {
        m.insert("r_mag_drift".into(), d);
    }
    if let Some(d) = report.gauge_flow_residual {
        m.insert("gauge_flow_residual".into(), d);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;
    use std::f64::consts::PI;

    fn sys() -> KeplerSystem {
        KeplerSystem::default()
    }

    fn st(r: [f64; 3], v: [f64; 3]) -> ExtendedState {
        ExtendedState::at_origin_time(PhaseState::from_arrays(r, v))
    }

    #[test]
    fn circular_orbit_closes() {
        let circ = st([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let tr = integrate_orbit(&circ, &sys(), 2.0 * PI, 1e-10, f64::INFINITY).unwrap();
        let end = tr.samples.last().unwrap();
        assert!((end.t - 2.0 * PI).abs() < 1e-15);
        assert!(end.state.to_array().iter().zip(circ.state.to_array()).all(|(a, b)| (a - b).abs() < 1e-8));
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn elliptic_energy_drift_per_period() {
        let ell = st([1.0, 0.0, 0.0], [0.0, 1.2, 0.0]);
        let c = kepler::conserved_set(&ell.state, &sys()).unwrap();
        let tr = integrate_orbit(&ell, &sys(), c.period.unwrap(), 1e-10, f64::INFINITY).unwrap();
        assert!(tr.drift.energy <= 1e-9, "{}", tr.drift.energy);
        let end = tr.samples.last().unwrap();
        assert!((end.state.r - ell.state.r).norm() < 1e-7);
    }

    #[test]
    fn hyperbolic_orbit_escapes() {
        let hyp = st([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]);
        let tr = integrate_orbit_sampled(&hyp, &sys(), 10.0, 0.1, 1e-10).unwrap();
        assert_eq!(tr.samples.len(), 101);
        assert!(tr.samples.windows(2).all(|w| w[1].state.radius() > w[0].state.radius()));
    }

    #[test]
    fn collision_is_reported() {
        let radial = st([1.0, 0.0, 0.0], [-0.1, 0.0, 0.0]);
        let err = integrate_orbit(&radial, &sys(), 10.0, 1e-10, f64::INFINITY).unwrap_err();
        assert!(matches!(
            err,
            KeplerError::Collision { .. } | KeplerError::StepUnderflow { .. }
        ));
    }

    #[test]
    fn propagation_is_reversible() {
        let s = PhaseState::from_arrays([1.0, 0.3, -0.2], [0.1, 0.9, 0.3]);
        let f = propagate(&s, 1.7, &sys(), 1e-12).unwrap();
        let b = propagate(&f, -1.7, &sys(), 1e-12).unwrap();
        assert!((b.r - s.r).norm() < 1e-10 && (b.v - s.v).norm() < 1e-10);
    }

    #[test]
    fn symmetry_flow_identity_and_reference_case() {
        let ell = st([1.0, 0.0, 0.0], [0.0, 1.2, 0.0]);
        for gauge in [Gauge::PhaseSpace, Gauge::RadiusInvariant] {
            let id = integrate_symmetry_flow(Family::Lrl, &ell, &sys(), &Vec3::zeros(), 100, gauge)
                .unwrap();
            assert_eq!(id.end, ell);
        }
        let rep = compare_flow_vs_closed_form(
            Family::LrlDirection,
            &ell,
            &sys(),
            &Vec3::new(0.0, 0.3, 0.0),
            DEFAULT_FLOW_STEPS,
            64,
        )
        .unwrap();
        assert!(rep.max_component_residual <= 1e-6, "{}", rep.max_component_residual);
        let par = st([1.0, 0.0, 0.0], [0.0, 2f64.sqrt(), 0.0]);
        let rep = compare_flow_vs_closed_form(
            Family::Lrl,
            &par,
            &sys(),
            &Vec3::new(0.0, 0.1, 0.0),
            DEFAULT_FLOW_STEPS,
            64,
        )
        .unwrap();
        assert!(rep.max_component_residual <= 1e-6, "{}", rep.max_component_residual);
        let rep = compare_flow_vs_closed_form(Family::Lrl, &par, &sys(), &Vec3::zeros(), 100, 64)
            .unwrap();
        assert_eq!(rep.max_component_residual, 0.0);
    }

    #[test]
    fn radius_gauge_flow_matches_closed_form_off_apsis() {
        let sys = sys();
        let mut sampler = StateSampler::new(31);
        let mut done = 0;
        while done < 5 {
            let s = ExtendedState::at_origin_time(sampler.next_state(&sys));
            let eps = sampler.parameter(0.2);
            for family in [Family::Lrl, Family::LrlDirection] {
                let Ok(rep) = compare_flow_vs_closed_form(family, &s, &sys, &eps, 2000, 64) else {
                    continue;
                };
                assert!(rep.max_component_residual <= 1e-6);
                assert!(rep.r_mag_drift.unwrap() <= 1e-8);
                assert!(rep.gauge_flow_residual.unwrap() <= 1e-6);
                done += 1;
            }
        }
    }

    #[test]
    fn solution_mapping_reference_case() {
        let ell = st([1.0, 0.0, 0.0], [0.0, 1.2, 0.0]);
        let eps = Vec3::new(0.0, 0.3, 0.0);
        let res = transforms::direction_lrl_transform(&ell, &sys(), &eps, 64).unwrap();
        let period = res.constants_out.period.unwrap();
        let rep = verify_solution_mapping(&ell, &sys(), &eps, Family::LrlDirection, period, 1e-11)
            .unwrap();
        assert!(rep.max_deviation <= 1e-8, "{rep:?}");
        let bad = verify_solution_mapping(&ell, &sys(), &Vec3::new(0.0, 0.0, 0.2), Family::LrlDirection, 1.0, 1e-10);
        assert!(matches!(bad, Err(KeplerError::Inadmissible { .. })));
    }

    #[test]
    fn csv_layout() {
        let ell = st([1.0, 0.0, 0.0], [0.0, 1.2, 0.0]);
        let tr = integrate_orbit_sampled(&ell, &sys(), 1.0, 0.25, 1e-10).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[(None, &tr)], &sys()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 5);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[(Some(0), &tr), (Some(1), &tr)], &sys()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("family,t,"));
        assert_eq!(text.lines().count(), 11);
    }
}
