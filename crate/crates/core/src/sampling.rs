//! Seeded random instances: algebra elements, homogeneous couplings, loop
//! specs and constrained node values. Used by the invariant suite and the
//! tests; all generators are deterministic for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::folding::{FoldState, FoldingMap, OddFoldData};
use crate::gradation::{
    grading_component, project_to_algebra, validate_spec, Automorphism, GradationSpec,
    GradationType,
};
use crate::lie_core::j_transpose;
use crate::lie_core::{
    b_transpose, c64, structure_transpose, ComplexMatrix, FamilyKind, StructureKind,
};
use crate::toda_builder::{
    extract_arcs, plus_shape, CouplingBlocks, FieldState, GammaRule, TodaSystem,
};

/// The generator used throughout.
pub type SampleRng = ChaCha8Rng;

/// A generator seeded with `seed`.
pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with entries uniform in the unit square of `C`, times `scale`.
pub fn random_matrix(rng: &mut SampleRng, rows: usize, cols: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c64(
            scale * rng.random_range(-1.0..1.0),
            scale * rng.random_range(-1.0..1.0),
        )
    })
}

/// Random element of the algebra of a spec.
pub fn random_algebra_element(spec: &GradationSpec, rng: &mut SampleRng) -> Result<ComplexMatrix> {
    let x = random_matrix(rng, spec.n, spec.n, 1.0);
    project_to_algebra(&x, spec)
}

/// Random element of grade `k`.
pub fn random_grade_element(
    spec: &GradationSpec,
    aut: &Automorphism,
    k: i64,
    rng: &mut SampleRng,
) -> Result<ComplexMatrix> {
    let x = random_algebra_element(spec, rng)?;
    grading_component(&x, k, aut)
}

/// Sets entries that are rounding noise of the grading projector to zero,
/// so that blocks without the requested grade are exactly empty.
fn chop(x: &ComplexMatrix) -> ComplexMatrix {
    let cut = 1e-12 * x.norm_max().max(1.0);
    ComplexMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        if x[(i, j)].norm() < cut {
            c64(0.0, 0.0)
        } else {
            x[(i, j)]
        }
    })
}

/// Random couplings of grades `±L` for a spec, as arc blocks.
pub fn random_couplings(
    spec: &GradationSpec,
    level: u32,
    rng: &mut SampleRng,
) -> Result<CouplingBlocks> {
    let aut = Automorphism::from_spec(spec)?;
    let cp = chop(&random_grade_element(spec, &aut, level as i64, rng)?);
    let cm = chop(&random_grade_element(spec, &aut, -(level as i64), rng)?);
    Ok(CouplingBlocks {
        plus: extract_arcs(&spec.n_list, &cp, true),
        minus: extract_arcs(&spec.n_list, &cm, false),
    })
}

/// A random loop spec (all `k_α = 1`, `L = 1`) of the given type with `p`
/// blocks of size at most `max_block`, or `None` if the type admits none.
///
/// The order is `M = p` for inner types and `M = 2p` for outer types, which
/// places grade `±1` exactly on the cyclic skeleton.
pub fn random_loop_spec(
    family: FamilyKind,
    ty: GradationType,
    p: usize,
    max_block: usize,
    rng: &mut SampleRng,
) -> Option<GradationSpec> {
    let order = if ty.is_outer() {
        2 * p as u32
    } else {
        p as u32
    };
    for _ in 0..200 {
        let mut n_list: Vec<usize> = (0..p).map(|_| rng.random_range(1..=max_block)).collect();
        match ty {
            GradationType::SoSpTypeI | GradationType::GlOuterII => {
                for a in 0..p / 2 {
                    n_list[p - 1 - a] = n_list[a];
                }
            }
            GradationType::SoSpTypeII | GradationType::GlOuterIII => {
                for a in 1..p {
                    let mirror = p - a;
                    if mirror < a {
                        n_list[a] = n_list[mirror];
                    }
                }
            }
            _ => {}
        }
        let spec = GradationSpec::new(family, ty, order, n_list, vec![1; p - 1]);
        if validate_spec(&spec).is_empty() {
            return Some(spec);
        }
    }
    None
}

/// Random node values satisfying the constraints of a system, for its
/// independent nodes. `amplitude` controls the distance from the identity.
pub fn random_constrained_state(
    system: &TodaSystem,
    amplitude: f64,
    rng: &mut SampleRng,
) -> Result<FieldState> {
    let s = system.independent_count();
    let mut gammas = Vec::with_capacity(s);
    for a in 0..s {
        let n = system.block_sizes[a];
        let x = random_matrix(rng, n, n, amplitude);
        let g = match system.constraints.gamma[a] {
            GammaRule::SelfDual { b } => {
                let bt = structure_transpose(&x, b)?;
                (&x - &bt).scale_re(0.5).expm()?
            }
            _ => x.expm()?,
        };
        gammas.push(g);
    }
    if system.constraints.det_product_one {
        // Rescale the first node so that the product of determinants is one.
        let mut prod = c64(1.0, 0.0);
        for g in &gammas {
            prod *= g.det()?;
        }
        let n0 = gammas[0].rows() as f64;
        let full_prod = if gammas.len() == system.p() {
            prod
        } else {
            let full = system.expand_state(&FieldState::new(gammas.clone()))?;
            full.gammas
                .iter()
                .try_fold(c64(1.0, 0.0), |acc, g| g.det().map(|d| acc * d))?
        };
        let factor = full_prod.powf(-1.0 / n0);
        gammas[0] = gammas[0].scale(factor);
    }
    Ok(FieldState::new(gammas))
}

/// Random element of the algebra defined by an arbitrary structure matrix.
pub fn random_b_antisymmetric(b: &ComplexMatrix, rng: &mut SampleRng) -> Result<ComplexMatrix> {
    let n = b.rows();
    let x = random_matrix(rng, n, n, 1.0);
    let bt = b_transpose(&x, b)?;
    Ok((&x - &bt).scale_re(0.5))
}

/// Random `W = Γ⁻¹∂_−Γ` compatible with a fixed node of kind `b`
/// (`^B W = −W`) or free.
pub fn random_node_derivative(
    n: usize,
    b: Option<StructureKind>,
    rng: &mut SampleRng,
) -> Result<ComplexMatrix> {
    let x = random_matrix(rng, n, n, 0.5);
    match b {
        Some(kind) => {
            let bt = structure_transpose(&x, kind)?;
            Ok((&x - &bt).scale_re(0.5))
        }
        None => Ok(x),
    }
}

/// Random full node values and derivatives on the constraint surface of a
/// fold: fixed nodes satisfy `^BΓ = Γ⁻¹` and `^BW = −W`, paired nodes
/// `Γ_σ(α) = ^J(Γ_α⁻¹)` and `W_σ(α) = −^J W_α`.
pub fn random_fold_state(
    map: &FoldingMap,
    sizes: &[usize],
    amplitude: f64,
    rng: &mut SampleRng,
) -> Result<FoldState> {
    let p = map.p;
    let mut gammas = vec![ComplexMatrix::zeros(0, 0); p];
    let mut ws = vec![ComplexMatrix::zeros(0, 0); p];
    for alpha in 1..=p {
        let n = sizes[alpha - 1];
        if let Some(b) = map.fixed_node_kind(alpha) {
            let x = random_node_derivative(n, Some(b), rng)?.scale_re(2.0 * amplitude);
            gammas[alpha - 1] = x.expm()?;
            ws[alpha - 1] = random_node_derivative(n, Some(b), rng)?;
        } else {
            let partner = map.node_pairing[alpha - 1];
            if partner > alpha {
                let g = random_matrix(rng, n, n, amplitude).expm()?;
                let w = random_node_derivative(n, None, rng)?;
                gammas[partner - 1] = j_transpose(&g.inverse()?);
                ws[partner - 1] = -&j_transpose(&w);
                gammas[alpha - 1] = g;
                ws[alpha - 1] = w;
            }
        }
    }
    Ok(FoldState { gammas, ws })
}

/// Random odd-fold data with independent block sizes `n_1, …, n_s`: node `s`
/// satisfies `^BΓ_s = Γ_s⁻¹`, the axis arcs `C_{±0}` satisfy `^J C = C`, and
/// the other nodes and arcs are generic.
pub fn random_odd_fold_data(
    sizes: &[usize],
    b: StructureKind,
    amplitude: f64,
    rng: &mut SampleRng,
) -> Result<OddFoldData> {
    let s = sizes.len();
    let full: Vec<usize> = sizes
        .iter()
        .chain(sizes[..s - 1].iter().rev())
        .copied()
        .collect();
    let mut gammas = Vec::with_capacity(s);
    for (a, &n) in sizes.iter().enumerate() {
        let g = if a + 1 == s {
            random_node_derivative(n, Some(b), rng)?
                .scale_re(2.0 * amplitude)
                .expm()?
        } else {
            random_matrix(rng, n, n, amplitude).expm()?
        };
        gammas.push(g);
    }
    let mut c_plus = Vec::with_capacity(s);
    let mut c_minus = Vec::with_capacity(s);
    for a in 0..s {
        let (r, c) = plus_shape(&full, a);
        let mut cp = random_matrix(rng, r, c, 1.0);
        let mut cm = random_matrix(rng, c, r, 1.0);
        if a == 0 {
            cp = (&cp + &j_transpose(&cp)).scale_re(0.5);
            cm = (&cm + &j_transpose(&cm)).scale_re(0.5);
        }
        c_plus.push(cp);
        c_minus.push(cm);
    }
    Ok(OddFoldData {
        gammas,
        c_plus,
        c_minus,
    })
}
