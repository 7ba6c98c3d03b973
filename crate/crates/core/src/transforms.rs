//! Finite symmetry transformations in closed form.
//!
//! Rotations and time translations are point symmetries. The direction-LRL
//! and LRL groups are dynamical: they move the constants of motion in closed
//! form, and the transformed point is rebuilt at the same radius from the
//! basis `{Theta, L x Theta}`:
//!
//! ```text
//! r = (alpha_r Theta + beta_r L x Theta) / |A|
//! v = (alpha_v Theta + beta_v L x Theta) / |A|
//! ```
//!
//! with `alpha_r = |L|^2 - kappa rho`, `beta_r = sgn rho w`,
//! `alpha_v = -sgn kappa w`, `beta_v = 2E + kappa/rho` and
//! `w^2 = 2(E + kappa/rho) - |L|^2/rho^2`. The time shift is the integral of
//! the radius-invariant gauge along the ray `s eps`.

use std::collections::BTreeMap;

use nalgebra::Matrix3;

use crate::error::{KeplerError, Result};
use crate::flow;
use crate::generators::{self, Family};
use crate::kepler::{
    self, ConservedSet, EnergyBranch, ExtendedState, KeplerSystem, PhaseState, Vec3, RADIAL_TOL,
};

/// Square-root arguments in `[-ADMISSIBILITY_TOL, 0]` are clamped to zero.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;
pub const DEFAULT_QUAD_PANELS: usize = 64;
/// Panel doubling stops once successive quadratures agree to this.
pub const QUAD_TOL: f64 = 1e-10;
const MAX_QUAD_PANELS: usize = 1 << 14;

// 5-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Rodrigues rotation by angle `|eps|` about `eps`.
pub fn rotation_matrix(eps: &Vec3) -> Matrix3<f64> {
    let angle = eps.norm();
    if angle == 0.0 {
        return Matrix3::identity();
    }
    let n = eps / angle;
    let k = n.cross_matrix();
    Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * k * k
}

pub fn rotate(state: &ExtendedState, eps: &Vec3) -> ExtendedState {
    let rot = rotation_matrix(eps);
    ExtendedState::new(
        state.t,
        PhaseState::new(rot * state.state.r, rot * state.state.v),
    )
}

/// Advances `(r, v)` by `eps` along the Kepler flow; `t` is left unchanged.
pub fn time_translate(
    state: &ExtendedState,
    eps: f64,
    sys: &KeplerSystem,
    tol: f64,
) -> Result<ExtendedState> {
    Ok(ExtendedState::new(
        state.t,
        flow::propagate(&state.state, eps, sys, tol)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisExpansion {
    pub alpha_r: f64,
    pub beta_r: f64,
    pub alpha_v: f64,
    pub beta_v: f64,
    pub theta: Vec3,
    pub l_cross_theta: Vec3,
    pub a_mag: f64,
}

impl BasisExpansion {
    pub fn reconstruct(&self) -> PhaseState {
        PhaseState::new(
            (self.alpha_r * self.theta + self.beta_r * self.l_cross_theta) / self.a_mag,
            (self.alpha_v * self.theta + self.beta_v * self.l_cross_theta) / self.a_mag,
        )
    }
}

fn check_radial(state: &PhaseState) -> Result<()> {
    let l_mag = state.angular_momentum().norm();
    if l_mag <= RADIAL_TOL * (state.radius() * state.v.norm() + 1e-300) {
        return Err(KeplerError::RadialState { l_mag });
    }
    Ok(())
}

pub fn basis_expand(state: &PhaseState, sys: &KeplerSystem) -> Result<BasisExpansion> {
    let set = kepler::conserved_set(state, sys)?;
    check_radial(state)?;
    let theta = set.direction_or_err()?;
    let rho = state.radius();
    let k = sys.kappa();
    Ok(BasisExpansion {
        alpha_r: set.angular_momentum.norm_squared() - k * rho,
        beta_r: state.radial(),
        alpha_v: -k * state.radial() / rho,
        beta_v: state.v.norm_squared() - k / rho,
        theta,
        l_cross_theta: set.angular_momentum.cross(&theta),
        a_mag: set.lrl_mag,
    })
}

/// `w^2 = 2(E + kappa/rho) - |L*|^2/rho^2`, the square of `|r . v| / rho` at the
/// transformed point.
pub fn radial_argument(energy: f64, r_mag: f64, l_star_sq: f64, sys: &KeplerSystem) -> f64 {
    2.0 * (energy + sys.kappa() / r_mag) - l_star_sq / (r_mag * r_mag)
}

/// Whether a transformed state with `|L*|^2 = l_star_sq` exists at radius `r_mag`.
pub fn admissibility(c: &ConservedSet, r_mag: f64, l_star_sq: f64, sys: &KeplerSystem) -> bool {
    let k = sys.kappa();
    let arg = radial_argument(c.energy, r_mag, l_star_sq, sys);
    let lrl_ok = c.energy >= 0.0 || k * k + 2.0 * c.energy * l_star_sq >= ADMISSIBILITY_TOL.powi(2);
    arg >= -ADMISSIBILITY_TOL && lrl_ok
}

fn clamp_argument(arg: f64) -> Result<f64> {
    if arg < -ADMISSIBILITY_TOL || arg.is_nan() {
        return Err(KeplerError::Inadmissible { argument: arg });
    }
    Ok(arg.max(0.0))
}

/// Direction-LRL action on the constants: `L* = L + eps x Theta`, with E and
/// Theta fixed.
pub fn transform_constants_direction(
    c: &ConservedSet,
    eps: &Vec3,
    sys: &KeplerSystem,
) -> Result<ConservedSet> {
    let theta = c.direction_or_err()?;
    if *eps == Vec3::zeros() {
        return Ok(c.clone());
    }
    let l = c.angular_momentum;
    let l_star = l + eps.cross(&theta);
    let e_th = eps.dot(&theta);
    let a_sq = c.lrl_mag * c.lrl_mag
        + 2.0 * c.energy * (2.0 * eps.dot(&theta.cross(&l)) + eps.norm_squared() - e_th * e_th);
    let a_mag = clamp_argument(a_sq)?.sqrt();
    Ok(ConservedSet::assemble(
        c.energy,
        l_star,
        a_mag * theta,
        c.energy_branch,
        c.r_mag,
        sys,
    ))
}

/// LRL action on the constants. For E != 0 the pair `(L, M)` is rotated
/// (E < 0) or boosted (E > 0) by `phi = sqrt(2|E|) |eps|` about `eps`, with the
/// components along `eps` fixed; for E = 0, `L* = L + eps x A` and `A* = A`.
pub fn transform_constants_lrl(
    c: &ConservedSet,
    eps: &Vec3,
    sys: &KeplerSystem,
) -> Result<ConservedSet> {
    c.direction_or_err()?;
    if *eps == Vec3::zeros() {
        return Ok(c.clone());
    }
    let l = c.angular_momentum;
    let (l_star, a_star) = match c.energy_branch {
        EnergyBranch::Zero => (l + eps.cross(&c.lrl), c.lrl),
        branch => {
            let speed = (2.0 * c.energy.abs()).sqrt();
            let m = c.lrl / speed;
            let n = eps.normalize();
            let phi = speed * eps.norm();
            let (l_par, m_par) = (n.dot(&l) * n, n.dot(&m) * n);
            let (l_perp, m_perp) = (l - l_par, m - m_par);
            let (l_rot, m_rot) = if branch == EnergyBranch::Negative {
                let (s, co) = phi.sin_cos();
                (
                    co * l_perp + s * n.cross(&m_perp),
                    co * m_perp + s * n.cross(&l_perp),
                )
            } else {
                let (s, co) = (phi.sinh(), phi.cosh());
                (
                    co * l_perp + s * n.cross(&m_perp),
                    co * m_perp - s * n.cross(&l_perp),
                )
            };
            (l_par + l_rot, speed * (m_par + m_rot))
        }
    };
    Ok(ConservedSet::assemble(
        c.energy,
        l_star,
        a_star,
        c.energy_branch,
        c.r_mag,
        sys,
    ))
}

pub fn transform_constants(
    family: Family,
    c: &ConservedSet,
    eps: &Vec3,
    sys: &KeplerSystem,
) -> Result<ConservedSet> {
    match family {
        Family::LrlDirection => transform_constants_direction(c, eps, sys),
        Family::Lrl => transform_constants_lrl(c, eps, sys),
    }
}

/// Rebuilds the phase-space point at radius `r_mag` carrying the constants `c`.
/// `sign` is the sign of `r . v` of the point.
pub fn reconstruct(c: &ConservedSet, r_mag: f64, sign: f64, sys: &KeplerSystem) -> Result<PhaseState> {
    let theta = c.direction_or_err()?;
    let k = sys.kappa();
    let l_sq = c.angular_momentum.norm_squared();
    let w = clamp_argument(radial_argument(c.energy, r_mag, l_sq, sys))?.sqrt();
    let basis = BasisExpansion {
        alpha_r: l_sq - k * r_mag,
        beta_r: sign * r_mag * w,
        alpha_v: -sign * k * w,
        beta_v: 2.0 * c.energy + k / r_mag,
        theta,
        l_cross_theta: c.angular_momentum.cross(&theta),
        a_mag: c.lrl_mag,
    };
    Ok(basis.reconstruct())
}

fn radial_sign(state: &PhaseState) -> f64 {
    if state.radial() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Closed-form image of `state` (with constants `set`) under the family at `eps`.
pub fn closed_form(
    family: Family,
    state: &PhaseState,
    set: &ConservedSet,
    eps: &Vec3,
    sys: &KeplerSystem,
) -> Result<(PhaseState, ConservedSet)> {
    let out = transform_constants(family, set, eps, sys)?;
    let image = reconstruct(&out, state.radius(), radial_sign(state), sys)?;
    Ok((image, out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub delta_t: f64,
    /// Difference between the last two panel counts.
    pub error_estimate: f64,
    pub panels: usize,
    pub converged: bool,
}

fn gauss_legendre<F>(f: &F, panels: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL_X.iter().zip(GL_W.iter()) {
            total += w * f(mid + 0.5 * h * x)?;
        }
    }
    Ok(0.5 * h * total)
}

/// `Delta t = int_0^1 tau(state*(s eps)) . eps ds`, with `tau` the radius-invariant
/// gauge evaluated at the closed-form image. Integrated in `u = sqrt(s)`, which
/// removes the `1/sqrt(s)` endpoint behavior for rays leaving an apsis.
pub fn time_shift_quadrature(
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    family: Family,
    quad_panels: usize,
) -> Result<Quadrature> {
    if *eps == Vec3::zeros() {
        return Ok(Quadrature {
            delta_t: 0.0,
            error_estimate: 0.0,
            panels: 0,
            converged: true,
        });
    }
    let set = kepler::conserved_set(&state.state, sys)?;
    set.direction_or_err()?;
    let integrand = |u: f64| -> Result<f64> {
        let s = u * u;
        let (image, _) = closed_form(family, &state.state, &set, &(s * eps), sys)?;
        let g = generators::gauge_fixed_family(family, eps, &image, sys)?;
        Ok(2.0 * u * g.delta_t)
    };
    let mut panels = quad_panels.max(1);
    let mut coarse = gauss_legendre(&integrand, panels)?;
    loop {
        let fine = gauss_legendre(&integrand, 2 * panels)?;
        let err = (fine - coarse).abs();
        panels *= 2;
        if err <= QUAD_TOL || panels >= MAX_QUAD_PANELS {
            return Ok(Quadrature {
                delta_t: fine,
                error_estimate: err,
                panels,
                converged: err <= QUAD_TOL,
            });
        }
        coarse = fine;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult {
    pub out: ExtendedState,
    pub constants_out: ConservedSet,
    pub delta_t: f64,
    pub admissible: bool,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Diagnostic tolerance for `admissible`.
pub const DIAGNOSTIC_TOL: f64 = 1e-9;

fn dynamical_transform(
    family: Family,
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    quad_panels: usize,
) -> Result<TransformResult> {
    let set = kepler::conserved_set(&state.state, sys)?;
    check_radial(&state.state)?;
    set.direction_or_err()?;
    let mut warnings = Vec::new();
    if family == Family::Lrl && set.energy_branch == EnergyBranch::Zero {
        warnings.push("energy in the E = 0 branch; using the parabolic closed form".to_string());
    }
    if state.state.radial() == 0.0 && *eps != Vec3::zeros() {
        warnings.push("input at an apsis; sign of r.v taken as +1".to_string());
    }
    let (image, constants_out, quad) = if *eps == Vec3::zeros() {
        (
            state.state,
            set.clone(),
            Quadrature {
                delta_t: 0.0,
                error_estimate: 0.0,
                panels: 0,
                converged: true,
            },
        )
    } else {
        let (image, out) = closed_form(family, &state.state, &set, eps, sys)?;
        let quad = time_shift_quadrature(state, sys, eps, family, quad_panels)?;
        (image, out, quad)
    };
    let recomputed = kepler::conserved_set(&image, sys)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(
        "r_mag_invariance".to_string(),
        (image.radius() - state.state.radius()).abs() / state.state.radius().max(1.0),
    );
    diagnostics.insert(
        "energy_invariance".to_string(),
        (recomputed.energy - set.energy).abs() / set.energy.abs().max(1.0),
    );
    let recon = (recomputed.angular_momentum - constants_out.angular_momentum)
        .amax()
        .max((recomputed.lrl - constants_out.lrl).amax())
        .max((recomputed.energy - constants_out.energy).abs());
    diagnostics.insert("reconstruction_residual".to_string(), recon);
    diagnostics.insert("quadrature_error".to_string(), quad.error_estimate);
    let admissible = diagnostics.values().all(|&d| d <= DIAGNOSTIC_TOL);
    if !quad.converged {
        warnings.push(format!(
            "time-shift quadrature did not converge ({} panels)",
            quad.panels
        ));
    }
    Ok(TransformResult {
        out: ExtendedState::new(state.t + quad.delta_t, image),
        constants_out,
        delta_t: quad.delta_t,
        admissible,
        diagnostics,
        warnings,
    })
}

/// Finite direction-LRL transformation with parameter `eps`.
pub fn direction_lrl_transform(
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    quad_panels: usize,
) -> Result<TransformResult> {
    dynamical_transform(Family::LrlDirection, state, sys, eps, quad_panels)
}

/// Finite LRL transformation with parameter `eps`.
pub fn lrl_transform(
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    quad_panels: usize,
) -> Result<TransformResult> {
    dynamical_transform(Family::Lrl, state, sys, eps, quad_panels)
}

pub fn family_transform(
    family: Family,
    state: &ExtendedState,
    sys: &KeplerSystem,
    eps: &Vec3,
    quad_panels: usize,
) -> Result<TransformResult> {
    dynamical_transform(family, state, sys, eps, quad_panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets;
    use crate::sampling::{EnergySign, StateSampler};
    use approx::assert_relative_eq;
    use nalgebra::{Rotation3, Unit};
    use std::f64::consts::PI;

    fn st(r: [f64; 3], v: [f64; 3]) -> ExtendedState {
        ExtendedState::at_origin_time(PhaseState::from_arrays(r, v))
    }

    fn ell() -> ExtendedState {
        st([1.0, 0.0, 0.0], [0.0, 1.2, 0.0])
    }

    fn par() -> ExtendedState {
        st([1.0, 0.0, 0.0], [0.0, 2f64.sqrt(), 0.0])
    }

    fn sys() -> KeplerSystem {
        KeplerSystem::default()
    }

    #[test]
    fn rodrigues_matches_nalgebra() {
        let mut sampler = StateSampler::new(4);
        for _ in 0..50 {
            let eps = sampler.parameter(3.0);
            let ours = rotation_matrix(&eps);
            let theirs = Rotation3::from_axis_angle(&Unit::new_normalize(eps), eps.norm());
            assert!((ours - theirs.matrix()).amax() < 1e-14);
            assert!((ours.transpose() * ours - Matrix3::identity()).amax() < 1e-14);
            assert_relative_eq!(ours.determinant(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rotation_examples() {
        let out = rotate(&ell(), &Vec3::new(0.0, 0.0, PI / 2.0));
        assert!((out.state.r - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert!((out.state.v - Vec3::new(-1.2, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(rotate(&ell(), &Vec3::zeros()), ell());
        let (a, b) = (0.4, -1.3);
        let two = rotate(&rotate(&ell(), &Vec3::new(0.0, 0.0, a)), &Vec3::new(0.0, 0.0, b));
        let one = rotate(&ell(), &Vec3::new(0.0, 0.0, a + b));
        assert!(two.max_abs_diff(&one) < 1e-12);
    }

    #[test]
    fn time_translation_examples() {
        let circ = st([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert_eq!(time_translate(&circ, 0.0, &sys(), 1e-10).unwrap(), circ);
        let back = time_translate(&circ, 2.0 * PI, &sys(), 1e-12).unwrap();
        assert!(back.max_abs_diff(&circ) < 1e-8);
        let moved = time_translate(&ell(), -0.7, &sys(), 1e-12).unwrap();
        let (c0, c1) = (
            kepler::conserved_set(&ell().state, &sys()).unwrap(),
            kepler::conserved_set(&moved.state, &sys()).unwrap(),
        );
        assert!((c0.energy - c1.energy).abs() < 1e-10);
        assert!((c0.lrl - c1.lrl).norm() < 1e-10);
        let there = time_translate(&moved, 0.7, &sys(), 1e-12).unwrap();
        assert!(there.max_abs_diff(&ell()) < 1e-9);
    }

    #[test]
    fn basis_expansion_examples() {
        let b = basis_expand(&ell().state, &sys()).unwrap();
        assert_relative_eq!(b.alpha_r, 0.44, epsilon = 1e-15);
        assert_eq!(b.beta_r, 0.0);
        assert_eq!(b.alpha_v, 0.0);
        assert_relative_eq!(b.beta_v, 0.44, epsilon = 1e-15);
        let rec = b.reconstruct();
        assert!((rec.r - ell().state.r).norm() < 1e-15);
        assert!((rec.v - ell().state.v).norm() < 1e-15);
        let circ = PhaseState::from_arrays([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(matches!(
            basis_expand(&circ, &sys()),
            Err(KeplerError::DegenerateDirection { .. })
        ));
        let radial = PhaseState::from_arrays([1.0, 0.0, 0.0], [0.5, 0.0, 0.0]);
        assert!(matches!(
            basis_expand(&radial, &sys()),
            Err(KeplerError::RadialState { .. })
        ));
        let mut sampler = StateSampler::new(8);
        for _ in 0..100 {
            let s = sampler.next_state(&sys());
            let rec = basis_expand(&s, &sys()).unwrap().reconstruct();
            assert!((rec.r - s.r).norm() <= 1e-10 * s.radius());
            assert!((rec.v - s.v).norm() <= 1e-10 * s.v.norm().max(1.0));
        }
    }

    #[test]
    fn admissibility_examples() {
        let c = kepler::conserved_set(&ell().state, &sys()).unwrap();
        assert!(admissibility(&c, 1.0, 1.44, &sys()));
        assert!(!admissibility(&c, 1.0, 1.53, &sys()));
        assert!(admissibility(&c, 1.0, 0.81, &sys()));
        assert_relative_eq!(radial_argument(c.energy, 1.0, 0.81, &sys()), 0.63, epsilon = 1e-14);
    }

    #[test]
    fn direction_constants_examples() {
        let c = kepler::conserved_set(&ell().state, &sys()).unwrap();
        let out = transform_constants_direction(&c, &Vec3::new(0.0, 0.3, 0.0), &sys()).unwrap();
        assert!((out.angular_momentum - Vec3::new(0.0, 0.0, 0.9)).norm() < 1e-15);
        assert_relative_eq!(out.lrl_mag, (1.0f64 - 0.4536).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(out.lrl_mag, 0.739188, epsilon = 1e-6);
        assert_eq!(out.direction, c.direction);
        assert_eq!(transform_constants_direction(&c, &Vec3::zeros(), &sys()).unwrap(), c);
        let along = transform_constants_direction(&c, &Vec3::new(0.7, 0.0, 0.0), &sys()).unwrap();
        assert_eq!(along.angular_momentum, c.angular_momentum);
    }

    #[test]
    fn direction_transform_reference_case() {
        let res = direction_lrl_transform(&ell(), &sys(), &Vec3::new(0.0, 0.3, 0.0), 64).unwrap();
        let (r, v) = (res.out.state.r, res.out.state.v);
        // reference values are quoted to five decimals
        assert!((r - Vec3::new(-0.25704, 0.96639, 0.0)).amax() < 2e-5);
        assert!((v - Vec3::new(-1.07378, 0.53572, 0.0)).amax() < 2e-5);
        assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(kepler::energy(&res.out.state, &sys()).unwrap(), -0.28, epsilon = 1e-12);
        assert!((r.cross(&v) - Vec3::new(0.0, 0.0, 0.9)).norm() < 1e-12);
        assert!(res.admissible);
        assert!(res.delta_t.is_finite() && res.delta_t > 0.0);

        let id = direction_lrl_transform(&ell(), &sys(), &Vec3::zeros(), 64).unwrap();
        assert_eq!(id.out, ell());
        assert_eq!(id.delta_t, 0.0);

        let bad = direction_lrl_transform(&ell(), &sys(), &Vec3::new(0.0, 0.0, 0.2), 64);
        match bad {
            Err(KeplerError::Inadmissible { argument }) => {
                assert_relative_eq!(argument, -0.04, epsilon = 1e-12)
            }
            other => panic!("expected inadmissible, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_examples() {
        let q = time_shift_quadrature(&ell(), &sys(), &Vec3::zeros(), Family::Lrl, 64).unwrap();
        assert_eq!(q.delta_t, 0.0);
        let circ = st([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(matches!(
            time_shift_quadrature(&circ, &sys(), &Vec3::new(0.0, 0.1, 0.0), Family::LrlDirection, 64),
            Err(KeplerError::DegenerateDirection { .. })
        ));
        // first-order shift off an apsis: tau . eps at the start point
        let s0 = st([1.0, 0.2, 0.0], [0.3, 1.1, 0.1]);
        let delta = 1e-4;
        let eps = Vec3::new(0.0, delta, 0.0);
        let q = time_shift_quadrature(&s0, &sys(), &eps, Family::Lrl, 64).unwrap();
        let tau = generators::gauge_fixed_family(Family::Lrl, &eps, &s0.state, &sys())
            .unwrap()
            .delta_t;
        assert!((q.delta_t - tau).abs() < 1e-3 * tau.abs());
        assert!(q.converged);
    }

    #[test]
    fn lrl_constants_examples() {
        let c = kepler::conserved_set(&par().state, &sys()).unwrap();
        let out = transform_constants_lrl(&c, &Vec3::new(0.0, 0.0, 0.5), &sys()).unwrap();
        assert_eq!(out.lrl, c.lrl);
        assert!((out.angular_momentum - Vec3::new(0.0, 0.5, 2f64.sqrt())).norm() < 1e-15);

        let c = kepler::conserved_set(&ell().state, &sys()).unwrap();
        let d = 1e-6;
        let out = transform_constants_lrl(&c, &Vec3::new(0.0, 0.0, d), &sys()).unwrap();
        let dl = (out.angular_momentum - c.angular_momentum) / d;
        assert!((dl - Vec3::new(0.0, 0.44, 0.0)).norm() < 1e-5);

        let q = brackets::quadratic_invariants(&c).unwrap().1;
        let mut sampler = StateSampler::new(12);
        for _ in 0..20 {
            let eps = sampler.parameter(2.0);
            let out = transform_constants_lrl(&c, &eps, &sys()).unwrap();
            let m = out.rescaled_lrl.unwrap();
            let sum = out.angular_momentum.norm_squared() + m.norm_squared();
            assert!((sum - 1.0 / 0.56).abs() < 1e-10);
            assert!((brackets::quadratic_invariants(&out).unwrap().1 - q).abs() < 1e-10);
        }
    }

    #[test]
    fn lrl_transform_examples() {
        assert_eq!(lrl_transform(&ell(), &sys(), &Vec3::zeros(), 64).unwrap().out, ell());
        assert!(matches!(
            lrl_transform(&par(), &sys(), &Vec3::new(0.0, 0.0, 0.1), 64),
            Err(KeplerError::Inadmissible { .. })
        ));
        // both states are apsides, so only parameters that lower |L| are admissible
        for base in [par(), ell()] {
            let eps = Vec3::new(0.0, 0.1, 0.0);
            let res = lrl_transform(&base, &sys(), &eps, 64).unwrap();
            let c = kepler::conserved_set(&base.state, &sys()).unwrap();
            let expected = transform_constants_lrl(&c, &eps, &sys()).unwrap();
            let got = kepler::conserved_set(&res.out.state, &sys()).unwrap();
            assert!((got.angular_momentum - expected.angular_momentum).amax() < 1e-9);
            assert!((got.lrl - expected.lrl).amax() < 1e-9);
            assert!((got.energy - expected.energy).abs() < 1e-10);
            assert!(res.diagnostics["reconstruction_residual"] <= 1e-10);
            assert!(res.admissible);
        }
    }

    #[test]
    fn transforms_preserve_radius_and_energy_for_all_signs() {
        let sys = sys();
        let mut sampler = StateSampler::new(21);
        for sign in [EnergySign::Negative, EnergySign::Zero, EnergySign::Positive] {
            let mut done = 0;
            while done < 20 {
                let s = ExtendedState::at_origin_time(sampler.next_with_energy(&sys, sign));
                let eps = sampler.parameter(0.3);
                for family in [Family::Lrl, Family::LrlDirection] {
                    let Ok(res) = family_transform(family, &s, &sys, &eps, 64) else {
                        continue;
                    };
                    assert!(res.diagnostics["r_mag_invariance"] <= 1e-10);
                    assert!(res.diagnostics["energy_invariance"] <= 1e-10);
                    assert!(res.diagnostics["reconstruction_residual"] <= 1e-9);
                    done += 1;
                }
            }
        }
    }
}
