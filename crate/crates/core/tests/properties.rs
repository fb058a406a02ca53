//! Randomized invariants of every module.

mod common;

use common::*;
use proptest::prelude::*;
use stochastic_shape::stochastics::TruncNormalParams;

fn mesh_params() -> impl Strategy<Value = (u64, usize, bool, f64)> {
    (any::<u64>(), 16usize..=28, any::<bool>(), 0.0..0.2f64)
}

fn check(r: Check) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mesh_area_deform_and_interfaces((seed, res, two, jitter) in mesh_params()) {
        let m = random_mesh(seed, res, two, jitter);
        check(area_sums_to_one(&m))?;
        check(deform_round_trip(&m, seed))?;
        check(interface_invariant_under_deform(&m, seed))?;
        check(mesh_round_trip(&m))?;
    }

    #[test]
    fn locate_agrees_with_scan((seed, res, two, jitter) in mesh_params()) {
        check(locate_matches_scan(&random_mesh(seed, res, two, jitter), seed, 1000))?;
    }

    #[test]
    fn quality_agrees_with_edge_formula(seed in any::<u64>()) {
        check(quality_matches_independent(seed, 1000))?;
    }

    #[test]
    fn stiffness_symmetric_psd_and_solves((seed, res, two, jitter) in mesh_params()) {
        let m = random_mesh(seed, res, two, jitter);
        check(stiffness_symmetric(&m, seed))?;
        check(stiffness_psd(&m, seed, 100))?;
        check(galerkin_residual(&m, seed))?;
        check(mean_constraint(&m, seed))?;
    }

    #[test]
    fn shape_derivative_structure((seed, res, two, jitter) in mesh_params()) {
        let m = random_mesh(seed, res, two, jitter);
        check(derivative_linear(&m, seed))?;
        check(derivative_restricted(&m, seed))?;
        check(interface_traces_agree(&m, seed))?;
    }

    #[test]
    fn elasticity_operator((seed, res, two, jitter) in mesh_params(), bounds in (0.1..20.0f64, 1.0..3.0f64)) {
        let m = random_mesh(seed, res, two, jitter);
        check(elasticity_spd(&m, seed, 100))?;
        check(elasticity_galerkin(&m, seed, 20))?;
        check(mu_within_bounds(&m, bounds.0, bounds.0 * bounds.1))?;
    }

    #[test]
    fn robbins_monro_step_conditions(alpha in 1.0..2000.0f64, exponent in 0.55..=1.0f64) {
        check(robbins_monro_conditions(alpha, exponent))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn streams_and_estimator_reproducible(seed in any::<u64>()) {
        check(streams_reproducible(seed))?;
        check(estimator_thread_independent(seed))?;
    }

    #[test]
    fn scenario_components_independent(seed in any::<u64>()) {
        check(kappa_g_uncorrelated(seed, 100_000))?;
    }

    #[test]
    fn truncated_normal_matches_cdf(seed in any::<u64>(), (mean, std) in (1.2..1.8f64, 0.01..1.0f64)) {
        let p = TruncNormalParams::new(mean, std, 1.0, 2.0).unwrap();
        check(truncated_normal_ks(seed, p, 100_000))?;
    }

    #[test]
    fn optimizer_histories(seed in any::<u64>()) {
        check(armijo_sufficient_decrease(seed))?;
        check(history_deterministic(seed))?;
        check(guard_sound(seed))?;
        check(outputs_well_formed(seed))?;
    }
}

#[test]
fn deterministic_run_is_plain_descent() {
    check(deterministic_descent_monotone()).unwrap();
}

#[test]
fn manufactured_solution_second_order() {
    let ratio = manufactured_ratio(20).unwrap();
    assert!((3.6..=4.4).contains(&ratio), "{ratio}");
}
