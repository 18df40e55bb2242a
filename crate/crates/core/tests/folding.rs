//! Folding of unfolded chains: invariance of the constraint surface under
//! the evolution, and detection of states that leave it.

use loop_toda::check::{fold_drift, random_system};
use loop_toda::folding::{fold_violation, unfold, verify_fold_invariance, FoldStepScheme};
use loop_toda::gradation::{enumerate_specs, GradationSpec, DEFAULT_ENUM_CAP};
use loop_toda::lie_core::{c64, FamilyKind};
use loop_toda::sampling::{random_fold_state, rng};
use loop_toda::toda_builder::TodaSystem;
use proptest::prelude::*;

/// Folded systems built from every so/sp spec with at least three blocks.
fn folded_specs() -> Vec<GradationSpec> {
    let mut out = Vec::new();
    for (family, n) in [
        (FamilyKind::So, 4),
        (FamilyKind::So, 5),
        (FamilyKind::Sp, 4),
    ] {
        for order in 2..=6 {
            for spec in enumerate_specs(family, n, order, DEFAULT_ENUM_CAP).unwrap() {
                if spec.p() >= 3 {
                    out.push(spec);
                }
            }
        }
    }
    out
}

fn folded_system(spec: &GradationSpec, seed: u64) -> TodaSystem {
    let system = random_system(spec, &mut rng(seed)).unwrap();
    assert!(system.fold.is_some(), "{spec:?} has no fold");
    system
}

#[test]
fn there_are_folded_specs_to_test() {
    assert!(folded_specs().len() >= 5);
}

#[test]
fn zero_steps_report_the_initial_violation_only() {
    for spec in folded_specs() {
        let system = folded_system(&spec, 1);
        let map = system.fold.as_ref().unwrap();
        let state = random_fold_state(map, &system.block_sizes, 0.3, &mut rng(2)).unwrap();
        let v = verify_fold_invariance(
            map,
            &unfold(&system),
            &state,
            0,
            1e-2,
            FoldStepScheme::Euler,
        )
        .unwrap();
        assert!(v < 1e-12, "initial state off the surface by {v}");
    }
}

#[test]
fn multiplicative_steps_stay_on_the_surface() {
    for spec in folded_specs() {
        let system = folded_system(&spec, 3);
        let map = system.fold.as_ref().unwrap();
        let state = random_fold_state(map, &system.block_sizes, 0.3, &mut rng(4)).unwrap();
        let v = verify_fold_invariance(
            map,
            &unfold(&system),
            &state,
            20,
            1e-2,
            FoldStepScheme::Multiplicative,
        )
        .unwrap();
        assert!(v <= 1e-8, "{spec:?}: drift {v}");
    }
}

#[test]
fn a_broken_initial_state_is_detected() {
    for spec in folded_specs() {
        let system = folded_system(&spec, 5);
        let map = system.fold.as_ref().unwrap();
        let mut state = random_fold_state(map, &system.block_sizes, 0.3, &mut rng(6)).unwrap();
        state.gammas[0][(0, 0)] += c64(1e-2, 0.0);
        let v = verify_fold_invariance(
            map,
            &unfold(&system),
            &state,
            5,
            1e-2,
            FoldStepScheme::Multiplicative,
        )
        .unwrap();
        assert!(v >= 1e-3, "{spec:?}: broken constraint reported as {v}");
        assert!(fold_violation(map, &state).unwrap() >= 1e-3);
    }
}

#[test]
fn unfolding_drops_the_fold_and_keeps_the_couplings() {
    for spec in folded_specs() {
        let system = folded_system(&spec, 7);
        let free = unfold(&system);
        assert!(free.fold.is_none());
        assert_eq!(free.p(), system.p());
        assert_eq!(free.c_plus, system.c_plus);
        assert_eq!(free.c_minus, system.c_minus);
        assert_eq!(free.independent_count(), free.p());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn euler_drift_is_second_order_in_the_step(pick in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let list = folded_specs();
        let spec = &list[pick.index(list.len())];
        let system = folded_system(spec, seed);
        let coarse = fold_drift(&system, 4e-4, FoldStepScheme::Euler, &mut rng(seed)).unwrap().unwrap();
        let fine = fold_drift(&system, 2e-4, FoldStepScheme::Euler, &mut rng(seed)).unwrap().unwrap();
        if coarse > 1e-13 {
            let order = (coarse / fine).log2();
            prop_assert!((order - 2.0).abs() < 0.2, "{:?}: order {}", spec, order);
        }
    }
}
