//! Properties of finite-order automorphisms, their grading projectors and the
//! block index tables, over enumerated specs.

use std::f64::consts::PI;

use loop_toda::gradation::{
    block_index_table, block_offsets, enumerate_specs, grading_components, validate_spec,
    Automorphism, GradationSpec, GradationType, DEFAULT_ENUM_CAP,
};
use loop_toda::lie_core::{c64, commutator, ComplexMatrix, FamilyKind};
use loop_toda::sampling::{random_algebra_element, rng};
use proptest::prelude::*;

fn specs(family: FamilyKind, n: usize, order: u32) -> Vec<GradationSpec> {
    enumerate_specs(family, n, order, DEFAULT_ENUM_CAP).unwrap()
}

/// A valid spec chosen from the enumeration of a random `(family, n, M)`.
fn spec_strategy() -> impl Strategy<Value = GradationSpec> {
    (
        prop::sample::select(vec![
            FamilyKind::Gl,
            FamilyKind::Sl,
            FamilyKind::So,
            FamilyKind::Sp,
        ]),
        1usize..=2,
        1u32..=4,
        any::<prop::sample::Index>(),
    )
        .prop_map(|(family, half, order, pick)| {
            let n = if family == FamilyKind::Sp {
                2 * half
            } else {
                half + 1 + (order as usize % 2)
            };
            let list = specs(family, n, order);
            list[pick.index(list.len())].clone()
        })
}

fn power(aut: &Automorphism, x: &ComplexMatrix, j: u32) -> ComplexMatrix {
    aut.apply_power(x, j).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn automorphism_has_the_declared_order(spec in spec_strategy(), seed in any::<u64>()) {
        let aut = Automorphism::from_spec(&spec).unwrap();
        let x = random_algebra_element(&spec, &mut rng(seed)).unwrap();
        prop_assert!(power(&aut, &x, aut.order).dist_max(&x) < 1e-11);
    }

    #[test]
    fn projectors_are_complete_idempotent_and_covariant(spec in spec_strategy(), seed in any::<u64>()) {
        let aut = Automorphism::from_spec(&spec).unwrap();
        let m = aut.order;
        let x = random_algebra_element(&spec, &mut rng(seed)).unwrap();
        let parts = grading_components(&x, &aut).unwrap();
        let mut sum = ComplexMatrix::zeros(x.rows(), x.cols());
        for (k, part) in parts.iter().enumerate() {
            sum += part;
            // A(x_k) = e^{2πik/M} x_k.
            let phase = c64(0.0, 2.0 * PI * k as f64 / m as f64).exp();
            prop_assert!(aut.apply(part).unwrap().dist_max(&part.scale(phase)) < 1e-11);
            let again = grading_components(part, &aut).unwrap();
            prop_assert!(again[k].dist_max(part) < 1e-11);
        }
        prop_assert!(sum.dist_max(&x) < 1e-11);
    }

    #[test]
    fn grades_add_under_the_bracket(spec in spec_strategy(), seed in any::<u64>(), j in 0u32..8, k in 0u32..8) {
        let aut = Automorphism::from_spec(&spec).unwrap();
        let m = aut.order;
        let mut r = rng(seed);
        let x = &grading_components(&random_algebra_element(&spec, &mut r).unwrap(), &aut).unwrap()[(j % m) as usize];
        let y = &grading_components(&random_algebra_element(&spec, &mut r).unwrap(), &aut).unwrap()[(k % m) as usize];
        let z = commutator(x, y).unwrap();
        let parts = grading_components(&z, &aut).unwrap();
        prop_assert!(parts[((j + k) % m) as usize].dist_max(&z) < 1e-10);
    }

    #[test]
    fn grades_live_in_the_blocks_the_table_allows(spec in spec_strategy(), seed in any::<u64>()) {
        let aut = Automorphism::from_spec(&spec).unwrap();
        let table = block_index_table(&spec).unwrap();
        prop_assert_eq!(table.modulus(), aut.order);
        let x = random_algebra_element(&spec, &mut rng(seed)).unwrap();
        let parts = grading_components(&x, &aut).unwrap();
        let off = block_offsets(&spec.n_list);
        for (k, part) in parts.iter().enumerate() {
            for a in 0..spec.p() {
                for b in 0..spec.p() {
                    if table.allows(a, b, k as i64) {
                        continue;
                    }
                    let block = part.block(off[a], off[b], spec.n_list[a], spec.n_list[b]);
                    prop_assert!(block.norm_max() < 1e-11, "grade {} in block ({}, {})", k, a, b);
                }
            }
        }
    }
}

#[test]
fn enumeration_starts_with_the_trivial_spec_and_is_valid() {
    for (family, n) in [
        (FamilyKind::Gl, 3),
        (FamilyKind::Sl, 3),
        (FamilyKind::So, 4),
        (FamilyKind::Sp, 4),
    ] {
        for order in 1..=4 {
            let list = specs(family, n, order);
            assert_eq!(list[0].gradation_type, GradationType::Trivial);
            assert!(list.iter().all(|s| validate_spec(s).is_empty()));
            let mut sorted = list.clone();
            sorted.dedup();
            assert_eq!(sorted.len(), list.len());
        }
        assert_eq!(specs(family, n, 1).len(), 1);
    }
}

#[test]
fn two_block_gl_table_is_the_cyclic_pattern() {
    let list = specs(FamilyKind::Gl, 2, 2);
    assert_eq!(list.len(), 2);
    let table = block_index_table(&list[1]).unwrap();
    assert_eq!(table.indices(0, 0), vec![0]);
    assert_eq!(table.indices(0, 1), vec![1]);
    assert_eq!(table.indices(1, 0), vec![1]);
    assert_eq!(table.indices(1, 1), vec![0]);
}

#[test]
fn cyclic_gl_table_entries_are_differences_of_offsets() {
    // p = 3 blocks with k = (1, 1) and M = 3: entry (a, b) is (b − a) mod 3.
    let list = specs(FamilyKind::Gl, 3, 3);
    let spec = list.iter().find(|s| s.p() == 3).unwrap();
    let table = block_index_table(spec).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            assert_eq!(table.indices(a, b), vec![((3 + b - a) % 3) as u32]);
        }
    }
}

#[test]
fn spec_json_round_trips() {
    for spec in specs(FamilyKind::So, 4, 4) {
        assert_eq!(GradationSpec::from_json(&spec.to_json()).unwrap(), spec);
    }
}

#[test]
fn symplectic_enumeration_needs_even_dimension() {
    assert!(enumerate_specs(FamilyKind::Sp, 3, 2, DEFAULT_ENUM_CAP).is_err());
    assert!(!specs(FamilyKind::Sp, 4, 2).is_empty());
}

type Data = std::collections::BTreeSet<(Vec<usize>, Vec<u32>)>;

fn data_of(family: FamilyKind, n: usize, order: u32, ty: GradationType) -> Data {
    specs(family, n, order)
        .into_iter()
        .filter(|s| s.gradation_type == ty)
        .map(|s| (s.n_list, s.k_list))
        .collect()
}

#[test]
fn outer_gl_data_coincides_with_symplectic_data() {
    for n in [2, 4, 6] {
        for half in 1..=4 {
            // Type II on Z_2N has the data of sp type I on Z_N.
            assert_eq!(
                data_of(FamilyKind::Gl, n, 2 * half, GradationType::GlOuterII),
                data_of(FamilyKind::Sp, n, half, GradationType::SoSpTypeI),
                "n = {n}, N = {half}"
            );
            // Type III with an even number of blocks and even first block has
            // the data of sp type II on Z_N.
            let outer_iii: Data = data_of(FamilyKind::Gl, n, 2 * half, GradationType::GlOuterIII)
                .into_iter()
                .filter(|(nl, _)| nl.len() % 2 == 0 && nl[0] % 2 == 0)
                .collect();
            assert_eq!(
                outer_iii,
                data_of(FamilyKind::Sp, n, half, GradationType::SoSpTypeII),
                "n = {n}, N = {half}"
            );
        }
    }
}
