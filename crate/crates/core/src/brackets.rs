//! Poisson brackets among the constants of motion.
//!
//! `{F, G} = dF/dr . dG/dv - dG/dr . dF/dv`. For the library constants both
//! gradients are analytic; arbitrary closures go through central differences.

use serde::Serialize;

use crate::constants::{contract, Axis, Constant, PhaseGradient};
use crate::diff;
use crate::error::{KeplerError, Result};
use crate::generators::GeneratorId;
use crate::kepler::{self, ConservedSet, EnergyBranch, KeplerSystem, PhaseState, Vec3, RADIAL_TOL};

pub fn bracket_of_gradients(f: &PhaseGradient, g: &PhaseGradient) -> f64 {
    f.r.dot(&g.v) - g.r.dot(&f.v)
}

/// Bracket of two library constants with analytic gradients.
pub fn poisson_bracket(
    f: Constant,
    g: Constant,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<f64> {
    Ok(bracket_of_gradients(
        &f.gradient(state, sys)?,
        &g.gradient(state, sys)?,
    ))
}

/// Bracket of two arbitrary phase-space functions by central differences.
pub fn poisson_bracket_fd<F, G>(f: F, g: G, state: &PhaseState) -> f64
where
    F: Fn(&PhaseState) -> f64,
    G: Fn(&PhaseState) -> f64,
{
    let (fr, fv) = diff::phase_gradient(&f, state);
    let (gr, gv) = diff::phase_gradient(&g, state);
    bracket_of_gradients(&PhaseGradient { r: fr, v: fv }, &PhaseGradient { r: gr, v: gv })
}

/// The constants at one state, as needed by the structure constants.
struct Frame {
    energy: f64,
    l: Vec3,
    a: Vec3,
    a_mag: f64,
    theta: Option<Vec3>,
    /// `sqrt(2|E|)` off the E = 0 branch.
    c: Option<f64>,
    sign: f64,
}

impl Frame {
    fn new(state: &PhaseState, sys: &KeplerSystem) -> Result<Self> {
        let set = kepler::conserved_set(state, sys)?;
        Ok(Self {
            energy: set.energy,
            l: set.angular_momentum,
            a: set.lrl,
            a_mag: set.lrl_mag,
            theta: set.direction,
            c: (set.energy_branch != EnergyBranch::Zero).then(|| (2.0 * set.energy.abs()).sqrt()),
            sign: set.energy_branch.sign(),
        })
    }

    fn theta(&self) -> Result<Vec3> {
        self.theta
            .ok_or(KeplerError::DegenerateDirection { a_mag: self.a_mag })
    }

    fn c(&self) -> Result<f64> {
        self.c.ok_or(KeplerError::ZeroEnergy { energy: self.energy })
    }

    fn m(&self) -> Result<Vec3> {
        Ok(self.a / self.c()?)
    }

    /// `{A^i, Theta^j}`.
    fn a_theta(&self, i: usize, j: usize) -> Result<f64> {
        let th = self.theta()?;
        let txl = th.cross(&self.l);
        Ok(2.0 * self.energy / self.a_mag * (txl[i] * th[j] - contract(i, j, &self.l)))
    }

    /// Structure value of `{f, g}` in terms of the constants themselves.
    fn expected(&self, f: Constant, g: Constant) -> Result<f64> {
        use Constant::*;
        Ok(match (f, g) {
            (Energy, Energy) => 0.0,
            (Energy, Direction(_)) | (Direction(_), Energy) => {
                self.theta()?;
                0.0
            }
            (Energy, Rescaled(_)) | (Rescaled(_), Energy) => {
                self.c()?;
                0.0
            }
            (Energy, _) | (_, Energy) => 0.0,
            (AngularMomentum(a), AngularMomentum(b)) => contract(a.index(), b.index(), &self.l),
            (AngularMomentum(a), Lrl(b)) | (Lrl(a), AngularMomentum(b)) => {
                contract(a.index(), b.index(), &self.a)
            }
            (AngularMomentum(a), Direction(b)) | (Direction(a), AngularMomentum(b)) => {
                contract(a.index(), b.index(), &self.theta()?)
            }
            (AngularMomentum(a), Rescaled(b)) | (Rescaled(a), AngularMomentum(b)) => {
                contract(a.index(), b.index(), &self.m()?)
            }
            (Lrl(a), Lrl(b)) => -2.0 * self.energy * contract(a.index(), b.index(), &self.l),
            (Lrl(a), Direction(b)) => self.a_theta(a.index(), b.index())?,
            (Direction(a), Lrl(b)) => -self.a_theta(b.index(), a.index())?,
            (Lrl(a), Rescaled(b)) => {
                -2.0 * self.energy * contract(a.index(), b.index(), &self.l) / self.c()?
            }
            (Rescaled(a), Lrl(b)) => {
                2.0 * self.energy * contract(b.index(), a.index(), &self.l) / self.c()?
            }
            (Direction(_), Direction(_)) => {
                self.theta()?;
                0.0
            }
            (Direction(a), Rescaled(b)) => -self.a_theta(b.index(), a.index())? / self.c()?,
            (Rescaled(a), Direction(b)) => self.a_theta(a.index(), b.index())? / self.c()?,
            (Rescaled(a), Rescaled(b)) => {
                self.c()?;
                -self.sign * contract(a.index(), b.index(), &self.l)
            }
        })
    }
}

/// `|computed - expected| / max(1, |expected|)`.
pub fn residual(computed: f64, expected: f64) -> f64 {
    (computed - expected).abs() / expected.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketEntry {
    pub left: String,
    pub right: String,
    pub computed: f64,
    pub expected: f64,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_computed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub entries: Vec<BracketEntry>,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_fd_residual: Option<f64>,
}

/// Every pairwise bracket among E, L, A, Theta and (off the E = 0 branch) M.
pub fn structure_table(
    state: &PhaseState,
    sys: &KeplerSystem,
    fd_check: bool,
) -> Result<BracketReport> {
    let frame = Frame::new(state, sys)?;
    let l_mag = frame.l.norm();
    if l_mag <= RADIAL_TOL * (state.radius() * state.v.norm() + 1e-300) {
        return Err(KeplerError::RadialState { l_mag });
    }
    frame.theta()?;
    let labels: Vec<Constant> = Constant::all()
        .into_iter()
        .filter(|c| frame.c.is_some() || !matches!(c, Constant::Rescaled(_)))
        .collect();
    let grads = labels
        .iter()
        .map(|c| c.gradient(state, sys))
        .collect::<Result<Vec<_>>>()?;
    let fd_grads = if fd_check {
        Some(
            labels
                .iter()
                .map(|c| c.gradient_fd(state, sys))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };

    let mut entries = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            let expected = frame.expected(labels[i], labels[j])?;
            let computed = bracket_of_gradients(&grads[i], &grads[j]);
            let fd_computed = fd_grads
                .as_ref()
                .map(|g| bracket_of_gradients(&g[i], &g[j]));
            entries.push(BracketEntry {
                left: labels[i].to_string(),
                right: labels[j].to_string(),
                computed,
                expected,
                residual: residual(computed, expected),
                fd_computed,
                fd_residual: fd_computed.map(|c| residual(c, expected)),
            });
        }
    }
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    let max_fd_residual = fd_check.then(|| {
        entries
            .iter()
            .filter_map(|e| e.fd_residual)
            .fold(0.0, f64::max)
    });
    Ok(BracketReport {
        entries,
        max_residual,
        max_fd_residual,
    })
}

/// Target quantity of a symmetry action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActionTarget {
    Energy,
    AngularMomentum,
    Lrl,
    Direction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionValue {
    Scalar(f64),
    Vector(Vec3),
}

impl ActionValue {
    pub fn max_abs_diff(&self, other: &ActionValue) -> f64 {
        match (self, other) {
            (ActionValue::Scalar(a), ActionValue::Scalar(b)) => (a - b).abs(),
            (ActionValue::Vector(a), ActionValue::Vector(b)) => (a - b).amax(),
            _ => f64::INFINITY,
        }
    }
}

/// Action of the prolonged generator of `gen` on a constant of motion,
/// `X_C(F) = {F, C}`, evaluated from the structure constants.
pub fn symmetry_action(
    gen: GeneratorId,
    target: ActionTarget,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<ActionValue> {
    let frame = Frame::new(state, sys)?;
    let c = gen.constant();
    if matches!(gen, GeneratorId::LrlDirection(_)) {
        frame.theta()?;
    }
    let component = |f: Constant| frame.expected(f, c);
    Ok(match target {
        ActionTarget::Energy => ActionValue::Scalar(component(Constant::Energy)?),
        _ => {
            let mut out = Vec3::zeros();
            for a in Axis::ALL {
                let f = match target {
                    ActionTarget::AngularMomentum => Constant::AngularMomentum(a),
                    ActionTarget::Lrl => Constant::Lrl(a),
                    _ => Constant::Direction(a),
                };
                out[a.index()] = component(f)?;
            }
            ActionValue::Vector(out)
        }
    })
}

/// The value of `target` as a phase-space function, for directional derivatives.
pub fn target_value(target: ActionTarget, state: &PhaseState, sys: &KeplerSystem) -> Result<ActionValue> {
    let set = kepler::conserved_set(state, sys)?;
    Ok(match target {
        ActionTarget::Energy => ActionValue::Scalar(set.energy),
        ActionTarget::AngularMomentum => ActionValue::Vector(set.angular_momentum),
        ActionTarget::Lrl => ActionValue::Vector(set.lrl),
        ActionTarget::Direction => ActionValue::Vector(set.direction_or_err()?),
    })
}

/// `(E^2, |M|^2 - sgn(E)|L|^2)`; the second equals `kappa^2 / (2|E|)`.
pub fn quadratic_invariants(c: &ConservedSet) -> Result<(f64, f64)> {
    let m = c.rescaled_or_err()?;
    let second = m.norm_squared() - c.energy_branch.sign() * c.angular_momentum.norm_squared();
    Ok((c.energy * c.energy, second))
}

/// `{F, G}` for F, G in the closed subalgebra spanned by E, L and M, written
/// as a linear combination of those constants (sgn(E) is locally constant).
pub fn subalgebra_bracket(f: Constant, g: Constant, sign: f64) -> Option<Vec<(f64, Constant)>> {
    use Constant::*;
    let combo = |a: Axis, b: Axis, ctor: fn(Axis) -> Constant, s: f64| {
        Axis::ALL
            .iter()
            .filter_map(|&k| {
                let w = crate::constants::levi_civita(a.index(), b.index(), k.index());
                (w != 0.0).then(|| (s * w, ctor(k)))
            })
            .collect::<Vec<_>>()
    };
    Some(match (f, g) {
        (Energy, Energy | AngularMomentum(_) | Rescaled(_))
        | (AngularMomentum(_) | Rescaled(_), Energy) => Vec::new(),
        (AngularMomentum(a), AngularMomentum(b)) => combo(a, b, AngularMomentum, 1.0),
        (AngularMomentum(a), Rescaled(b)) | (Rescaled(a), AngularMomentum(b)) => {
            combo(a, b, Rescaled, 1.0)
        }
        (Rescaled(a), Rescaled(b)) => combo(a, b, AngularMomentum, -sign),
        _ => return None,
    })
}

/// `{F,{G,H}} + {G,{H,F}} + {H,{F,G}}` for constants in the E, L, M subalgebra.
pub fn jacobi_residual(
    f: Constant,
    g: Constant,
    h: Constant,
    state: &PhaseState,
    sys: &KeplerSystem,
) -> Result<f64> {
    let frame = Frame::new(state, sys)?;
    frame.c()?;
    let outer = |x: Constant, y: Constant, z: Constant| -> Result<f64> {
        let inner = subalgebra_bracket(y, z, frame.sign).ok_or_else(|| {
            KeplerError::InvalidInput(format!("{y} and {z} are outside the E, L, M subalgebra"))
        })?;
        let mut total = 0.0;
        for (w, k) in inner {
            total += w * poisson_bracket(x, k, state, sys)?;
        }
        Ok(total)
    };
    Ok(outer(f, g, h)? + outer(g, h, f)? + outer(h, f, g)?)
}
