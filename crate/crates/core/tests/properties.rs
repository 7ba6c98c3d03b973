use kepler_lrl::brackets;
use kepler_lrl::flow;
use kepler_lrl::generators::{self, Family, GeneratorId, SymmetryKind};
use kepler_lrl::kepler::{self, ExtendedState, KeplerSystem, PhaseState, Vec3};
use kepler_lrl::transforms;
use kepler_lrl::{Axis, Constant};
use proptest::prelude::*;

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Non-degenerate states in the usual sampling shells.
fn state() -> impl Strategy<Value = PhaseState> {
    (vec3(-2.0, 2.0), vec3(-1.5, 1.5))
        .prop_filter("shells", |(r, v)| {
            let rho = r.norm();
            (0.5..=2.0).contains(&rho) && (0.3..=2.0).contains(&v.norm())
        })
        .prop_map(|(r, v)| PhaseState::new(r, v))
        .prop_filter("degenerate", |s| {
            let sys = KeplerSystem::default();
            let c = kepler::conserved_set(s, &sys).unwrap();
            c.angular_momentum.norm() >= 0.1 && c.lrl_mag >= 0.05
        })
}

fn constants() -> Vec<Constant> {
    let mut out = vec![Constant::Energy];
    for a in Axis::ALL {
        out.extend([Constant::AngularMomentum(a), Constant::Lrl(a), Constant::Direction(a)]);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn angular_momentum_orthogonal_to_lrl(s in state()) {
        let c = kepler::conserved_set(&s, &KeplerSystem::default()).unwrap();
        let scale = c.angular_momentum.norm() * c.lrl_mag;
        prop_assert!(c.angular_momentum.dot(&c.lrl).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn lrl_magnitude_identity(s in state(), kappa in 0.5f64..3.0) {
        let sys = KeplerSystem::new(kappa).unwrap();
        let c = kepler::conserved_set(&s, &sys).unwrap();
        let rhs = kappa * kappa + 2.0 * c.energy * c.angular_momentum.norm_squared();
        prop_assert!((c.lrl_mag.powi(2) - rhs).abs() <= 1e-11 * rhs.abs().max(1.0));
    }

    #[test]
    fn constants_survive_propagation(s in state(), dt in -1.0f64..1.0) {
        let sys = KeplerSystem::default();
        let c0 = kepler::conserved_set(&s, &sys).unwrap();
        let moved = flow::propagate(&s, dt, &sys, 1e-12).unwrap();
        let c1 = kepler::conserved_set(&moved, &sys).unwrap();
        prop_assert!((c1.energy - c0.energy).abs() <= 1e-9);
        prop_assert!((c1.angular_momentum - c0.angular_momentum).amax() <= 1e-9);
        prop_assert!((c1.lrl - c0.lrl).amax() <= 1e-8);
    }

    #[test]
    fn bracket_antisymmetry(s in state()) {
        let sys = KeplerSystem::default();
        for f in constants() {
            for g in constants() {
                let fg = brackets::poisson_bracket(f, g, &s, &sys).unwrap();
                let gf = brackets::poisson_bracket(g, f, &s, &sys).unwrap();
                prop_assert!((fg + gf).abs() <= 1e-12 * fg.abs().max(1.0));
            }
        }
    }

    #[test]
    fn every_constant_commutes_with_energy(s in state()) {
        let sys = KeplerSystem::default();
        for f in constants() {
            let b = brackets::poisson_bracket(f, Constant::Energy, &s, &sys).unwrap();
            prop_assert!(b.abs() <= 1e-10, "{f}: {b}");
        }
    }

    #[test]
    fn classification_is_state_independent(s in state(), axis in 0usize..3) {
        let sys = KeplerSystem::default();
        let a = Axis::ALL[axis];
        let kind = |g| generators::classify_generator(g, &s, &sys).unwrap();
        prop_assert_eq!(kind(GeneratorId::Energy), SymmetryKind::Point);
        prop_assert_eq!(kind(GeneratorId::AngularMomentum(a)), SymmetryKind::Point);
        prop_assert_eq!(kind(GeneratorId::Lrl(a)), SymmetryKind::Dynamical);
    }

    #[test]
    fn gauge_fixed_generator_keeps_radius(s in state(), eps in vec3(-1.0, 1.0)) {
        let sys = KeplerSystem::default();
        prop_assume!(s.radial().abs() >= 0.05 * s.radius() * s.v.norm());
        for family in [Family::Lrl, Family::LrlDirection] {
            let y = generators::gauge_fixed_family(family, &eps, &s, &sys).unwrap();
            let scale = y.delta_r.norm() * s.radius();
            prop_assert!(s.r.dot(&y.delta_r).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn rotation_preserves_invariants(s in state(), eps in vec3(-3.0, 3.0)) {
        let sys = KeplerSystem::default();
        let ext = ExtendedState::at_origin_time(s);
        let out = transforms::rotate(&ext, &eps);
        let c0 = kepler::conserved_set(&s, &sys).unwrap();
        let c1 = kepler::conserved_set(&out.state, &sys).unwrap();
        let rot = transforms::rotation_matrix(&eps);
        prop_assert!((c1.energy - c0.energy).abs() <= 1e-12);
        prop_assert!((c1.angular_momentum - rot * c0.angular_momentum).amax() <= 1e-12);
        prop_assert!((c1.lrl - rot * c0.lrl).amax() <= 1e-12);
    }

    #[test]
    fn dynamical_transforms_keep_energy_and_radius(s in state(), eps in vec3(-0.3, 0.3), lrl in any::<bool>()) {
        let sys = KeplerSystem::default();
        let family = if lrl { Family::Lrl } else { Family::LrlDirection };
        let ext = ExtendedState::at_origin_time(s);
        if let Ok(res) = transforms::family_transform(family, &ext, &sys, &eps, 64) {
            let c0 = kepler::conserved_set(&s, &sys).unwrap();
            prop_assert!((res.constants_out.energy - c0.energy).abs() <= 1e-10);
            prop_assert!((res.out.state.radius() - s.radius()).abs() <= 1e-10);
            let direct = kepler::conserved_set(&res.out.state, &sys).unwrap();
            prop_assert!((direct.lrl - res.constants_out.lrl).amax() <= 1e-9);
        }
    }

    #[test]
    fn direction_group_is_abelian(s in state(), a in vec3(-0.15, 0.15), b in vec3(-0.15, 0.15)) {
        let sys = KeplerSystem::default();
        let ext = ExtendedState::at_origin_time(s);
        let t = |x: &ExtendedState, e: &Vec3| transforms::direction_lrl_transform(x, &sys, e, 64).map(|r| r.out);
        let (Ok(ta), Ok(tb), Ok(tab)) = (t(&ext, &a), t(&ext, &b), t(&ext, &(a + b))) else {
            return Ok(());
        };
        if let (Ok(ab), Ok(ba)) = (t(&ta, &b), t(&tb, &a)) {
            prop_assert!(ab.max_abs_diff(&tab) <= 1e-8);
            prop_assert!(ba.max_abs_diff(&tab) <= 1e-8);
        }
    }

    #[test]
    fn zero_parameter_is_identity(s in state(), t0 in -5.0f64..5.0) {
        let sys = KeplerSystem::default();
        let ext = ExtendedState::new(t0, s);
        for family in [Family::Lrl, Family::LrlDirection] {
            let res = transforms::family_transform(family, &ext, &sys, &Vec3::zeros(), 64).unwrap();
            prop_assert_eq!(res.out, ext);
            prop_assert_eq!(res.delta_t, 0.0);
        }
    }
}
