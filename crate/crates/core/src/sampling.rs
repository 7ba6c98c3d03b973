//! Seeded random admissible states.
//!
//! Position uniform in the shell `0.5 <= |r| <= 2`, velocity uniform in the
//! shell `0.3 <= |v| <= 2`; states with `|L| < 0.1` or `|A| < 0.05 kappa` are
//! rejected.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::kepler::{self, KeplerSystem, PhaseState, Vec3};

pub const R_SHELL: (f64, f64) = (0.5, 2.0);
pub const V_SHELL: (f64, f64) = (0.3, 2.0);
pub const MIN_ANGULAR_MOMENTUM: f64 = 0.1;
pub const MIN_LRL_FRACTION: f64 = 0.05;
/// States drawn with a definite energy sign keep `|E| >= ENERGY_MARGIN * kappa`;
/// the rescaled LRL vector is badly conditioned near E = 0.
pub const ENERGY_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergySign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone)]
pub struct StateSampler {
    rng: ChaCha8Rng,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn in_shell(&mut self, (lo, hi): (f64, f64)) -> Vec3 {
        let dir: [f64; 3] = UnitSphere.sample(&mut self.rng);
        let u: f64 = self.rng.gen_range(lo.powi(3)..=hi.powi(3));
        u.cbrt() * Vec3::from(dir)
    }

    fn acceptable(state: &PhaseState, sys: &KeplerSystem) -> bool {
        let Ok(a) = kepler::lrl_vector(state, sys) else {
            return false;
        };
        state.angular_momentum().norm() >= MIN_ANGULAR_MOMENTUM
            && a.norm() >= MIN_LRL_FRACTION * sys.kappa()
    }

    /// Next admissible state from the shell scheme.
    pub fn next_state(&mut self, sys: &KeplerSystem) -> PhaseState {
        loop {
            let r = self.in_shell(R_SHELL);
            let v = self.in_shell(V_SHELL);
            let s = PhaseState::new(r, v);
            if Self::acceptable(&s, sys) {
                return s;
            }
        }
    }

    /// Next admissible state whose energy has the requested sign. For
    /// `EnergySign::Zero` the velocity is rescaled to the escape speed.
    pub fn next_with_energy(&mut self, sys: &KeplerSystem, sign: EnergySign) -> PhaseState {
        loop {
            let mut s = self.next_state(sys);
            let e = kepler::energy(&s, sys).unwrap_or(f64::NAN);
            let keep = match sign {
                EnergySign::Negative => e < -ENERGY_MARGIN * sys.kappa(),
                EnergySign::Positive => e > ENERGY_MARGIN * sys.kappa(),
                EnergySign::Zero => {
                    let escape = (2.0 * sys.kappa() / s.radius()).sqrt();
                    s.v *= escape / s.v.norm();
                    Self::acceptable(&s, sys)
                }
            };
            if keep {
                return s;
            }
        }
    }

    /// Uniform vector in the ball of the given radius.
    pub fn parameter(&mut self, max_norm: f64) -> Vec3 {
        let dir: [f64; 3] = UnitSphere.sample(&mut self.rng);
        let u: f64 = self.rng.gen_range(0.0..=1.0);
        max_norm * u.cbrt() * Vec3::from(dir)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_respect_the_scheme_and_are_deterministic() {
        let sys = KeplerSystem::default();
        let mut a = StateSampler::new(42);
        let mut b = StateSampler::new(42);
        let (mut neg, mut pos) = (0, 0);
        for _ in 0..500 {
            let s = a.next_state(&sys);
            assert_eq!(s, b.next_state(&sys));
            assert!((0.5..=2.0).contains(&s.radius()));
            assert!((0.3..=2.0).contains(&s.v.norm()));
            assert!(s.angular_momentum().norm() >= 0.1);
            assert!(kepler::lrl_vector(&s, &sys).unwrap().norm() >= 0.05);
            if kepler::energy(&s, &sys).unwrap() < 0.0 {
                neg += 1;
            } else {
                pos += 1;
            }
        }
        assert!(neg > 50 && pos > 50);
    }

    #[test]
    fn zero_energy_samples_are_parabolic() {
        let sys = KeplerSystem::default();
        let mut a = StateSampler::new(1);
        for _ in 0..20 {
            let s = a.next_with_energy(&sys, EnergySign::Zero);
            let c = kepler::conserved_set(&s, &sys).unwrap();
            assert_eq!(c.orbit_class, kepler::OrbitClass::Parabolic);
        }
    }
}
