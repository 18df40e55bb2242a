//! Matrix functions and classical-algebra identities on random samples.

use loop_toda::lie_core::{
    commutator, is_in_algebra, is_in_group, structure_transpose, AlgebraFamily, ComplexMatrix,
    FamilyKind, StructureKind,
};
use loop_toda::sampling::{random_b_antisymmetric, random_matrix, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn logm_inverts_expm_near_the_identity(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, n, 0.4);
        let back = x.expm().unwrap().logm().unwrap();
        prop_assert!(back.dist_max(&x) < 1e-10, "logm(expm x) off by {}", back.dist_max(&x));
    }

    #[test]
    fn expm_of_sum_of_commuting_parts_factorizes(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, n, 0.5);
        let lhs = x.scale_re(1.5).expm().unwrap();
        let rhs = &x.expm().unwrap() * &x.scale_re(0.5).expm().unwrap();
        prop_assert!(lhs.dist_max(&rhs) < 1e-10);
    }

    #[test]
    fn commutator_obeys_jacobi(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, n, 1.0);
        let y = random_matrix(&mut r, n, n, 1.0);
        let z = random_matrix(&mut r, n, n, 1.0);
        let c = |a: &ComplexMatrix, b: &ComplexMatrix| commutator(a, b).unwrap();
        let sum = &(&c(&x, &c(&y, &z)) + &c(&y, &c(&z, &x))) + &c(&z, &c(&x, &y));
        prop_assert!(sum.norm_max() < 1e-12);
    }

    #[test]
    fn structure_transpose_is_an_involutive_antihomomorphism(
        seed in any::<u64>(),
        half in 1usize..3,
        kind in prop::sample::select(vec![StructureKind::Identity, StructureKind::J, StructureKind::K]),
    ) {
        let n = 2 * half;
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, n, 1.0);
        let y = random_matrix(&mut r, n, n, 1.0);
        let t = |m: &ComplexMatrix| structure_transpose(m, kind).unwrap();
        prop_assert!(t(&t(&x)).dist_max(&x) < 1e-12);
        prop_assert!(t(&(&x * &y)).dist_max(&(&t(&y) * &t(&x))) < 1e-12);
    }

    #[test]
    fn exponentials_of_algebra_elements_lie_in_the_group(seed in any::<u64>(), half in 1usize..3) {
        for kind in [FamilyKind::So, FamilyKind::Sp] {
            let fam = AlgebraFamily::new(kind, 2 * half).unwrap();
            let b = fam.structure().unwrap().matrix();
            let mut r = rng(seed);
            let x = random_b_antisymmetric(&b, &mut r).unwrap();
            prop_assert!(is_in_algebra(&x, &fam, 1e-12));
            prop_assert!(is_in_group(&x.scale_re(0.3).expm().unwrap(), &fam, 1e-10).unwrap());
            let y = random_b_antisymmetric(&b, &mut r).unwrap();
            prop_assert!(is_in_algebra(&commutator(&x, &y).unwrap(), &fam, 1e-12));
        }
    }
}

#[test]
fn singular_matrices_have_no_inverse_or_logarithm() {
    let z = ComplexMatrix::zeros(2, 2);
    assert!(z.inverse().is_err());
    assert!(z.logm().is_err());
}
