use approx::assert_relative_eq;
use proptest::prelude::*;

use backaction_lab::quantum::{random_hermitian_with, random_state_with, seeded_rng, unitarity_defect};
use backaction_lab::scenarios::{fp_curvature, fp_min_fluctuation, sg_probability, sg_weak_value, FreeParticleScenario, SternGerlachScenario};
use backaction_lab::uncertainty::{floor_from_curvature, optimal_delta_phi, resolution_bound, total_fluctuation};
use backaction_lab::BackActionContext;

fn context(seed: u64, dim: usize) -> BackActionContext {
    let mut rng = seeded_rng(seed);
    let a = random_hermitian_with(&mut rng, dim);
    let psi = random_state_with(&mut rng, dim);
    let f = random_state_with(&mut rng, dim);
    BackActionContext::new(a, psi, f, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn back_action_is_unitary(seed in any::<u64>(), dim in 1usize..=6, phi in -10.0f64..10.0) {
        let ctx = context(seed, dim);
        prop_assert!(unitarity_defect(&ctx.back_action_unitary(phi)) < 1e-12);
        let p = ctx.probability(phi);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn weak_value_ignores_global_phases(seed in any::<u64>(), dim in 2usize..=6, phi in -3.0f64..3.0, theta in 0.0f64..6.3) {
        let ctx = context(seed, dim);
        prop_assume!(ctx.probability(phi) > 1e-6);
        let moved = BackActionContext::new(
            ctx.observable().clone(),
            ctx.psi().with_global_phase(theta),
            ctx.f().with_global_phase(-0.5 * theta),
            1.0,
        ).unwrap();
        let w = ctx.weak_value(phi).unwrap();
        let v = moved.weak_value(phi).unwrap();
        prop_assert!((w - v).norm() < 1e-9 * (1.0 + w.norm()));
    }

    #[test]
    fn shifting_the_origin_shifts_the_weak_value(seed in any::<u64>(), dim in 2usize..=5, phi_bar in -2.0f64..2.0, phi in -1.0f64..1.0) {
        let ctx = context(seed, dim);
        prop_assume!(ctx.probability(phi_bar + phi) > 1e-6);
        let shifted = ctx.shifted(phi_bar).unwrap();
        let w = ctx.weak_value(phi_bar + phi).unwrap();
        let v = shifted.weak_value(phi).unwrap();
        prop_assert!((w - v).norm() < 1e-8 * (1.0 + w.norm()));
    }

    #[test]
    fn quadrature_sum_never_beats_the_floor(curvature in 1e-3f64..1e3, hbar in 0.1f64..10.0, log_dphi in -6.0f64..6.0) {
        let dphi = log_dphi.exp();
        let total = total_fluctuation(curvature * dphi, resolution_bound(dphi, hbar).unwrap());
        let floor = floor_from_curvature(curvature, hbar);
        prop_assert!(total >= floor * (1.0 - 1e-12));
    }

    #[test]
    fn optimum_reaches_the_floor(curvature in 1e-3f64..1e3, hbar in 0.1f64..10.0) {
        let dphi = optimal_delta_phi(curvature, hbar);
        let total = total_fluctuation(curvature * dphi, resolution_bound(dphi, hbar).unwrap());
        assert_relative_eq!(total, floor_from_curvature(curvature, hbar), max_relative = 1e-12);
    }

    #[test]
    fn stern_gerlach_probability_is_bounded(theta in -3.14f64..3.14, phi in -10.0f64..10.0) {
        let s = SternGerlachScenario::from_angle(theta);
        let p = sg_probability(&s, phi);
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&p));
    }

    #[test]
    fn stern_gerlach_weak_value_is_even(theta in -3.0f64..3.0, phi in 0.01f64..3.0) {
        let s = SternGerlachScenario::from_angle(theta);
        prop_assume!(sg_probability(&s, phi) > 1e-6);
        let plus = sg_weak_value(&s, phi, 1.0).unwrap();
        let minus = sg_weak_value(&s, -phi, 1.0).unwrap();
        assert_relative_eq!(plus, minus, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn free_particle_floor_scales_with_flight_time(m in 0.01f64..100.0, t in 0.01f64..100.0, hbar in 0.1f64..10.0) {
        let s = FreeParticleScenario::new(m, t, 0.0, 0.0).unwrap();
        assert_relative_eq!(fp_curvature(&s), -t / (4.0 * m), max_relative = 1e-15);
        assert_relative_eq!(fp_min_fluctuation(&s, hbar), (hbar * t / (4.0 * m)).sqrt(), max_relative = 1e-15);
    }
}
