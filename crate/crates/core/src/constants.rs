//! The library constants of motion as phase-space functions with analytic
//! gradients.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diff;
use crate::error::{KeplerError, Result};
use crate::kepler::{self, KeplerSystem, PhaseState, Vec3, CIRCULAR_TOL};

/// Cartesian axis, numbered 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Axis::X),
            2 => Ok(Axis::Y),
            3 => Ok(Axis::Z),
            _ => Err(KeplerError::InvalidInput(format!("axis must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn unit(self) -> Vec3 {
        let mut e = Vec3::zeros();
        e[self.index()] = 1.0;
        e
    }
}

/// Levi-Civita symbol on 0-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `eps_{ijk} w_k` summed over k.
pub fn contract(i: usize, j: usize, w: &Vec3) -> f64 {
    (0..3).map(|k| levi_civita(i, j, k) * w[k]).sum()
}

/// The scalar constants of motion: E and the components of L, A, Theta, M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Energy,
    AngularMomentum(Axis),
    Lrl(Axis),
    Direction(Axis),
    Rescaled(Axis),
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Energy => write!(f, "E"),
            Constant::AngularMomentum(a) => write!(f, "L{}", a.number()),
            Constant::Lrl(a) => write!(f, "A{}", a.number()),
            Constant::Direction(a) => write!(f, "Theta{}", a.number()),
            Constant::Rescaled(a) => write!(f, "M{}", a.number()),
        }
    }
}

/// `(dF/dr, dF/dv)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGradient {
    pub r: Vec3,
    pub v: Vec3,
}

/// Values and gradients of A, |A| and E at one state, shared by the Theta and M rows.
struct LrlJet {
    energy: f64,
    grad_e: PhaseGradient,
    a: Vec3,
    a_mag: f64,
    /// Row j holds the gradient of A^j.
    grad_a: [PhaseGradient; 3],
    grad_a_mag: PhaseGradient,
}

fn lrl_gradient(state: &PhaseState, sys: &KeplerSystem, j: usize) -> PhaseGradient {
    let k = sys.kappa();
    let (r, v) = (&state.r, &state.v);
    let rho = r.norm();
    let w = v.norm_squared();
    let s = state.radial();
    let e_j = Axis::ALL[j].unit();
    // dA^j/dr^m = kappa r^m r^j / rho^3 + (w - kappa/rho) delta^{jm} - v^m v^j
    let grad_r = k * r[j] / rho.powi(3) * r + (w - k / rho) * e_j - v[j] * v;
    // dA^j/dv^m = 2 v^m r^j - r^m v^j - (r.v) delta^{jm}
    let grad_v = 2.0 * r[j] * v - v[j] * r - s * e_j;
    PhaseGradient { r: grad_r, v: grad_v }
}

impl LrlJet {
    fn new(state: &PhaseState, sys: &KeplerSystem) -> Result<Self> {
        let rho = state.radius();
        sys.check_radius(rho)?;
        let energy = kepler::energy(state, sys)?;
        let a = kepler::lrl_vector(state, sys)?;
        let a_mag = a.norm();
        let grad_a = [0, 1, 2].map(|j| lrl_gradient(state, sys, j));
        let grad_e = PhaseGradient {
            r: sys.kappa() / rho.powi(3) * state.r,
            v: state.v,
        };
        let grad_a_mag = if a_mag > 0.0 {
            let th = a / a_mag;
            PhaseGradient {
                r: (0..3).map(|j| th[j] * grad_a[j].r).sum(),
                v: (0..3).map(|j| th[j] * grad_a[j].v).sum(),
            }
        } else {
            PhaseGradient {
                r: Vec3::zeros(),
                v: Vec3::zeros(),
            }
        };
        Ok(Self {
            energy,
            grad_e,
            a,
            a_mag,
            grad_a,
            grad_a_mag,
        })
    }

    fn check_direction(&self, sys: &KeplerSystem) -> Result<()> {
        if self.a_mag <= CIRCULAR_TOL * sys.kappa() {
            return Err(KeplerError::DegenerateDirection { a_mag: self.a_mag });
        }
        Ok(())
    }

    fn check_energy(&self, state: &PhaseState, sys: &KeplerSystem) -> Result<()> {
        let threshold = sys.zero_energy_threshold(
            state.angular_momentum().norm_squared(),
            state.radius(),
        );
        if self.energy.abs() <= threshold {
            return Err(KeplerError::ZeroEnergy { energy: self.energy });
        }
        Ok(())
    }
}

impl Constant {
    /// Every scalar constant, in table order; M rows last.
    pub fn all() -> Vec<Constant> {
        let mut out = vec![Constant::Energy];
        for f in [
            Constant::AngularMomentum as fn(Axis) -> Constant,
            Constant::Lrl,
            Constant::Direction,
            Constant::Rescaled,
        ] {
            out.extend(Axis::ALL.iter().map(|&a| f(a)));
        }
        out
    }

    pub fn value(&self, state: &PhaseState, sys: &KeplerSystem) -> Result<f64> {
        match *self {
            Constant::Energy => kepler::energy(state, sys),
            Constant::AngularMomentum(a) => {
                sys.check_radius(state.radius())?;
                Ok(state.angular_momentum()[a.index()])
            }
            Constant::Lrl(a) => Ok(kepler::lrl_vector(state, sys)?[a.index()]),
            Constant::Direction(a) => {
                let jet = LrlJet::new(state, sys)?;
                jet.check_direction(sys)?;
                Ok(jet.a[a.index()] / jet.a_mag)
            }
            Constant::Rescaled(a) => {
                let jet = LrlJet::new(state, sys)?;
                jet.check_energy(state, sys)?;
                Ok(jet.a[a.index()] / (2.0 * jet.energy.abs()).sqrt())
            }
        }
    }

    pub fn gradient(&self, state: &PhaseState, sys: &KeplerSystem) -> Result<PhaseGradient> {
        let rho = state.radius();
        sys.check_radius(rho)?;
        match *self {
            Constant::Energy => Ok(PhaseGradient {
                r: sys.kappa() / rho.powi(3) * state.r,
                v: state.v,
            }),
            Constant::AngularMomentum(a) => {
                let e = a.unit();
                Ok(PhaseGradient {
                    r: state.v.cross(&e),
                    v: e.cross(&state.r),
                })
            }
            Constant::Lrl(a) => Ok(lrl_gradient(state, sys, a.index())),
            Constant::Direction(a) => {
                let jet = LrlJet::new(state, sys)?;
                jet.check_direction(sys)?;
                let j = a.index();
                let th = jet.a[j] / jet.a_mag;
                Ok(PhaseGradient {
                    r: (jet.grad_a[j].r - th * jet.grad_a_mag.r) / jet.a_mag,
                    v: (jet.grad_a[j].v - th * jet.grad_a_mag.v) / jet.a_mag,
                })
            }
            Constant::Rescaled(a) => {
                let jet = LrlJet::new(state, sys)?;
                jet.check_energy(state, sys)?;
                let j = a.index();
                let c = (2.0 * jet.energy.abs()).sqrt();
                let sgn = jet.energy.signum();
                let scale = jet.a[j] * sgn / (c * c * c);
                Ok(PhaseGradient {
                    r: jet.grad_a[j].r / c - scale * jet.grad_e.r,
                    v: jet.grad_a[j].v / c - scale * jet.grad_e.v,
                })
            }
        }
    }

    /// Gradient by central differences of [`Constant::value`].
    pub fn gradient_fd(&self, state: &PhaseState, sys: &KeplerSystem) -> Result<PhaseGradient> {
        self.value(state, sys)?;
        let f = |p: &PhaseState| self.value(p, sys).unwrap_or(f64::NAN);
        let (r, v) = diff::phase_gradient(&f, state);
        Ok(PhaseGradient { r, v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;

    #[test]
    fn levi_civita_matches_cross_product() {
        let a = Vec3::new(0.3, -1.2, 2.0);
        let b = Vec3::new(1.1, 0.4, -0.7);
        let c = a.cross(&b);
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    s += levi_civita(i, j, k) * a[j] * b[k];
                }
            }
            assert!((s - c[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let sys = KeplerSystem::default();
        let mut sampler = StateSampler::new(3);
        for _ in 0..50 {
            let s = sampler.next_state(&sys);
            for c in Constant::all() {
                let ga = c.gradient(&s, &sys).unwrap();
                let gf = c.gradient_fd(&s, &sys).unwrap();
                let scale = 1.0 + ga.r.norm() + ga.v.norm();
                let err = ((ga.r - gf.r).norm() + (ga.v - gf.v).norm()) / scale;
                assert!(err < 1e-6, "{c}: {err:e}");
            }
        }
    }

    #[test]
    fn direction_gradient_is_tangent_to_sphere() {
        let sys = KeplerSystem::default();
        let s = PhaseState::from_arrays([1.0, 0.3, -0.2], [0.1, 1.1, 0.4]);
        let th: Vec3 = Vec3::from_iterator(
            Axis::ALL.iter().map(|&a| Constant::Direction(a).value(&s, &sys).unwrap()),
        );
        let mut gr = Vec3::zeros();
        let mut gv = Vec3::zeros();
        for a in Axis::ALL {
            let g = Constant::Direction(a).gradient(&s, &sys).unwrap();
            gr += th[a.index()] * g.r;
            gv += th[a.index()] * g.v;
        }
        assert!(gr.norm() < 1e-14 && gv.norm() < 1e-14);
    }

    #[test]
    fn degenerate_constants_error() {
        let sys = KeplerSystem::default();
        let circ = PhaseState::from_arrays([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(matches!(
            Constant::Direction(Axis::X).value(&circ, &sys),
            Err(KeplerError::DegenerateDirection { .. })
        ));
        let par = PhaseState::from_arrays([1.0, 0.0, 0.0], [0.0, 2f64.sqrt(), 0.0]);
        assert!(matches!(
            Constant::Rescaled(Axis::Y).gradient(&par, &sys),
            Err(KeplerError::ZeroEnergy { .. })
        ));
    }
}
