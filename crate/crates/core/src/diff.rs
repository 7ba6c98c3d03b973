//! Central finite differences on phase space.
//!
//! Step `h = 1e-6 * max(1, |x|)` per coordinate. These are cross-check
//! oracles only; the library evaluates every physical gradient analytically.

use crate::kepler::{PhaseState, Vec3};

pub const FD_REL_STEP: f64 = 1e-6;

pub fn step_for(x: f64) -> f64 {
    FD_REL_STEP * x.abs().max(1.0)
}

/// Central difference of `f` along coordinate `index` of the packed `(r, v)` vector.
pub fn partial<F>(f: &F, state: &PhaseState, index: usize) -> f64
where
    F: Fn(&PhaseState) -> f64 + ?Sized,
{
    let mut y = state.to_array();
    let x0 = y[index];
    let h = step_for(x0);
    y[index] = x0 + h;
    let plus = f(&PhaseState::from_array(&y));
    y[index] = x0 - h;
    let minus = f(&PhaseState::from_array(&y));
    (plus - minus) / (2.0 * h)
}

/// `(dF/dr, dF/dv)` by central differences.
pub fn phase_gradient<F>(f: &F, state: &PhaseState) -> (Vec3, Vec3)
where
    F: Fn(&PhaseState) -> f64 + ?Sized,
{
    let g: Vec<f64> = (0..6).map(|i| partial(f, state, i)).collect();
    (Vec3::new(g[0], g[1], g[2]), Vec3::new(g[3], g[4], g[5]))
}

pub fn gradient_v<F>(f: &F, state: &PhaseState) -> Vec3
where
    F: Fn(&PhaseState) -> f64 + ?Sized,
{
    Vec3::new(partial(f, state, 3), partial(f, state, 4), partial(f, state, 5))
}

/// Derivative of a vector field along the straight line `state + s * (dr, dv)` at `s = 0`.
pub fn directional<F, T>(f: F, state: &PhaseState, dr: &Vec3, dv: &Vec3, h: f64) -> T
where
    F: Fn(&PhaseState) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let plus = f(&PhaseState::new(state.r + h * dr, state.v + h * dv));
    let minus = f(&PhaseState::new(state.r - h * dr, state.v - h * dv));
    (plus - minus) * (0.5 / h)
}
