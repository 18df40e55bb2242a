//! Systems built from specs: the block equations agree with the full matrix
//! equation, and built systems respect their constraints.

use std::collections::BTreeSet;

use loop_toda::check::{random_system, run_checks, CheckConfig};
use loop_toda::gradation::{enumerate_specs, DEFAULT_ENUM_CAP};
use loop_toda::lie_core::FamilyKind;
use loop_toda::sampling::{random_constrained_state, rng};
use loop_toda::toda_builder::{rhs_blocks_vs_full, spec_class, TodaSystem};

fn loop_specs() -> Vec<loop_toda::gradation::GradationSpec> {
    let mut out = Vec::new();
    for (family, n) in [
        (FamilyKind::Gl, 3),
        (FamilyKind::Sl, 3),
        (FamilyKind::So, 4),
        (FamilyKind::So, 5),
        (FamilyKind::Sp, 4),
    ] {
        for order in 2..=4 {
            out.extend(
                enumerate_specs(family, n, order, DEFAULT_ENUM_CAP)
                    .unwrap()
                    .into_iter()
                    .filter(|s| s.p() >= 2),
            );
        }
    }
    out
}

#[test]
fn block_equations_match_the_full_matrix_equation() {
    let mut classes = BTreeSet::new();
    for (i, spec) in loop_specs().iter().enumerate() {
        let mut r = rng(i as u64);
        let system: TodaSystem = random_system(spec, &mut r).unwrap();
        assert_eq!(system.class, spec_class(spec));
        classes.insert(system.class.name());
        let state = random_constrained_state(&system, 0.3, &mut r).unwrap();
        assert!(system.state_violation(&state).unwrap() < 1e-10);
        let dev = rhs_blocks_vs_full(&system, &state).unwrap();
        assert!(dev < 1e-12, "{spec:?}: block/full deviation {dev}");
    }
    assert!(classes.len() >= 3, "classes covered: {classes:?}");
}

#[test]
fn system_json_round_trips() {
    for (i, spec) in loop_specs().iter().enumerate().take(10) {
        let system = random_system(spec, &mut rng(i as u64)).unwrap();
        assert_eq!(TodaSystem::from_json(&system.to_json()).unwrap(), system);
    }
}

#[test]
fn invariant_suite_passes_on_loop_specs() {
    for spec in loop_specs().iter().take(12) {
        let report = run_checks(spec, &CheckConfig::default()).unwrap();
        assert!(report.passed(), "{report}");
    }
}
