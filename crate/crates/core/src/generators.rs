//! Infinitesimal symmetry generators attached to E, L, A and Theta.
//!
//! A constant of motion `C` generates the characteristic `P = dC/dv`. Its
//! prolongation to phase space is `P . d_r + D_t P . d_v`, and for a
//! conserved `C` one has `D_t P = -dC/dr`, so the prolonged generator is the
//! Hamiltonian vector field of `C`.
//!
//! In the extended space `(t, r, v)` the generator picks up a gauge term
//! `tau D_t`. Choosing `tau = -(r . P)/(r . v)` makes `|r|` invariant along
//! the flow. That choice is singular at apsides, where `r . v = 0`.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::constants::{Axis, Constant};
use crate::diff;
use crate::error::{KeplerError, Result};
use crate::kepler::{self, KeplerSystem, PhaseState, Vec3, CIRCULAR_TOL};

/// Relative size of `r . v` below which a state counts as an apsis.
pub const APSIS_TOL: f64 = 1e-12;
/// Max-norm deviation of `dP/dv` from `tau I` still accepted as a point symmetry.
pub const POINT_SYMMETRY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorId {
    Energy,
    AngularMomentum(Axis),
    Lrl(Axis),
    LrlDirection(Axis),
}

impl GeneratorId {
    pub fn constant(self) -> Constant {
        match self {
            GeneratorId::Energy => Constant::Energy,
            GeneratorId::AngularMomentum(a) => Constant::AngularMomentum(a),
            GeneratorId::Lrl(a) => Constant::Lrl(a),
            GeneratorId::LrlDirection(a) => Constant::Direction(a),
        }
    }

    pub fn all() -> Vec<GeneratorId> {
        let mut out = vec![GeneratorId::Energy];
        for a in Axis::ALL {
            out.push(GeneratorId::AngularMomentum(a));
        }
        for a in Axis::ALL {
            out.push(GeneratorId::Lrl(a));
        }
        for a in Axis::ALL {
            out.push(GeneratorId::LrlDirection(a));
        }
        out
    }
}

/// The two dynamical symmetry families with closed-form finite transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Lrl,
    LrlDirection,
}

impl Family {
    pub fn generator(self, axis: Axis) -> GeneratorId {
        match self {
            Family::Lrl => GeneratorId::Lrl(axis),
            Family::LrlDirection => GeneratorId::LrlDirection(axis),
        }
    }
}

/// Components `(tau, delta r, delta v)` of a generator at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorValue {
    pub delta_t: f64,
    pub delta_r: Vec3,
    pub delta_v: Vec3,
}

impl GeneratorValue {
    fn scaled(self, s: f64) -> Self {
        Self {
            delta_t: s * self.delta_t,
            delta_r: s * self.delta_r,
            delta_v: s * self.delta_v,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            delta_t: self.delta_t + o.delta_t,
            delta_r: self.delta_r + o.delta_r,
            delta_v: self.delta_v + o.delta_v,
        }
    }

    fn zero() -> Self {
        Self {
            delta_t: 0.0,
            delta_r: Vec3::zeros(),
            delta_v: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    Point,
    Dynamical,
}

/// Quantities reused by the Theta characteristic and its time derivative.
struct DirectionFrame {
    energy: f64,
    a: Vec3,
    a_mag: f64,
    l_sq: f64,
}

impl DirectionFrame {
    fn new(state: &PhaseState, sys: &KeplerSystem) -> Result<Self> {
        let a = kepler::lrl_vector(state, sys)?;
        let a_mag = a.norm();
        if a_mag <= CIRCULAR_TOL * sys.kappa() {
            return Err(KeplerError::DegenerateDirection { a_mag });
        }
        Ok(Self {
            energy: kepler::energy(state, sys)?,
            a,
            a_mag,
            l_sq: state.angular_momentum().norm_squared(),
        })
    }
}

fn lrl_characteristic(state: &PhaseState, j: usize) -> Vec3 {
    let (r, v) = (&state.r, &state.v);
    2.0 * r[j] * v - v[j] * r - state.radial() * Axis::ALL[j].unit()
}

fn lrl_characteristic_rate(state: &PhaseState, sys: &KeplerSystem, j: usize) -> Vec3 {
    let (r, v) = (&state.r, &state.v);
    let rho = r.norm();
    let k = sys.kappa();
    v[j] * v - k / rho.powi(3) * r[j] * r - (v.norm_squared() - k / rho) * Axis::ALL[j].unit()
}

/// Analytic characteristic `P = dC/dv`.
pub fn characteristic(gen: GeneratorId, state: &PhaseState, sys: &KeplerSystem) -> Result<Vec3> {
    sys.check_radius(state.radius())?;
    Ok(match gen {
        GeneratorId::Energy => state.v,
        GeneratorId::AngularMomentum(a) => a.unit().cross(&state.r),
        GeneratorId::Lrl(a) => lrl_characteristic(state, a.index()),
        GeneratorId::LrlDirection(a) => {
            let f = DirectionFrame::new(state, sys)?;
            let j = a.index();
            let (r, v) = (&state.r, &state.v);
            let s = state.radial();
            // d|A|/dv = (|L|^2 v + 2E(|r|^2 v - (r.v) r)) / |A|
            let grad_a_mag =
                (f.l_sq * v + 2.0 * f.energy * (r.norm_squared() * v - s * r)) / f.a_mag;
            (lrl_characteristic(state, j) - f.a[j] / f.a_mag * grad_a_mag) / f.a_mag
        }
    })
}

/// `D_t P` along the Kepler equations of motion.
fn characteristic_rate(gen: GeneratorId, state: &PhaseState, sys: &KeplerSystem) -> Result<Vec3> {
    let acc = kepler::acceleration(state, sys)?;
    Ok(match gen {
        GeneratorId::Energy => acc,
        GeneratorId::AngularMomentum(a) => a.unit().cross(&state.v),
        GeneratorId::Lrl(a) => lrl_characteristic_rate(state, sys, a.index()),
        GeneratorId::LrlDirection(a) => {
            let f = DirectionFrame::new(state, sys)?;
            let j = a.index();
            let (r, v) = (&state.r, &state.v);
            let s = state.radial();
            // E, |A|, |L|^2 are constant; D_t(|r|^2 v - (r.v) r) = (r.v) v - |v|^2 r
            let rate_grad =
                (f.l_sq * acc + 2.0 * f.energy * (s * v - v.norm_squared() * r)) / f.a_mag;
            (lrl_characteristic_rate(state, sys, j) - f.a[j] / f.a_mag * rate_grad) / f.a_mag
        }
    })
}

/// Prolongation of the generator to phase space; `delta_t = 0`.
pub fn prolonged_generator(
    gen: GeneratorId,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<GeneratorValue> {
    Ok(GeneratorValue {
        delta_t: 0.0,
        delta_r: characteristic(gen, state, sys)?,
        delta_v: characteristic_rate(gen, state, sys)?,
    })
}

/// Prolonged generator of `eps . C` for a family, i.e. `sum_j eps_j X_{C^j}`.
pub fn family_generator(
    family: Family,
    eps: &Vec3,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<GeneratorValue> {
    let mut out = GeneratorValue::zero();
    for a in Axis::ALL {
        let w = eps[a.index()];
        if w != 0.0 {
            out = out.add(prolonged_generator(family.generator(a), state, sys)?.scaled(w));
        }
    }
    Ok(out)
}

/// Adds the radius-invariant gauge term `tau D_t` to a prolonged generator.
fn with_radius_gauge(
    prolonged: GeneratorValue,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<GeneratorValue> {
    let radial = state.radial();
    if radial.abs() <= APSIS_TOL * state.radius() * state.v.norm() {
        return Err(KeplerError::ApsisGauge { radial });
    }
    let tau = -state.r.dot(&prolonged.delta_r) / radial;
    let acc = kepler::acceleration(state, sys)?;
    Ok(GeneratorValue {
        delta_t: tau,
        delta_r: prolonged.delta_r + tau * state.v,
        delta_v: prolonged.delta_v + tau * acc,
    })
}

/// Coordinate-space generator with the gauge fixed so that `|r|` is invariant.
pub fn gauge_fixed_generator(
    gen: GeneratorId,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<GeneratorValue> {
    match gen {
        GeneratorId::Lrl(_) | GeneratorId::LrlDirection(_) => {}
        _ => {
            return Err(KeplerError::InvalidInput(
                "gauge fixing applies to the LRL and LRL-direction generators".into(),
            ))
        }
    }
    with_radius_gauge(prolonged_generator(gen, state, sys)?, state, sys)
}

/// Gauge-fixed generator of `eps . C` for a family.
pub fn gauge_fixed_family(
    family: Family,
    eps: &Vec3,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<GeneratorValue> {
    with_radius_gauge(family_generator(family, eps, state, sys)?, state, sys)
}

/// Finite-difference Jacobian `dP/dv` (row i = component i of P).
pub fn characteristic_jacobian(
    gen: GeneratorId,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<Matrix3<f64>> {
    characteristic(gen, state, sys)?;
    let mut jac = Matrix3::zeros();
    for i in 0..3 {
        let f = |p: &PhaseState| characteristic(gen, p, sys).map(|c| c[i]).unwrap_or(f64::NAN);
        let row = diff::gradient_v(&f, state);
        jac.set_row(i, &row.transpose());
    }
    Ok(jac)
}

/// Point iff `dP/dv` is a multiple of the identity.
pub fn classify_generator(
    gen: GeneratorId,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<SymmetryKind> {
    let jac = characteristic_jacobian(gen, state, sys)?;
    let tau = jac.trace() / 3.0;
    let dev = (jac - Matrix3::identity() * tau).amax();
    Ok(if dev <= POINT_SYMMETRY_TOL {
        SymmetryKind::Point
    } else {
        SymmetryKind::Dynamical
    })
}

/// Characteristic recovered from a constant of motion by finite differences in `v`.
pub fn noether_characteristic<F>(constant: F, state: &PhaseState) -> Vec3
where
    F: Fn(&PhaseState) -> f64,
{
    diff::gradient_v(&constant, state)
}
