//! Assembly of loop-group Toda systems in block form.
//!
//! The mapping `γ` is block diagonal, `γ = diag(Γ_1, …, Γ_p)`, and `c_±` live
//! on the cyclic super/sub-diagonal blocks: `C_{+α}` is block `(α, α+1)` with
//! `C_{+0}` the wrap-around block `(p, 1)`, and `C_{−α}` is block `(α+1, α)`
//! with `C_{−0}` at `(1, p)`. Index `p` is identified with index `0`.
//!
//! The general linear right-hand side is
//!
//! ```text
//! ∂_+(Γ_α⁻¹ ∂_− Γ_α) = −Γ_α⁻¹ C_{+α} Γ_{α+1} C_{−α} + C_{−(α−1)} Γ_{α−1}⁻¹ C_{+(α−1)} Γ_α
//! ```
//!
//! and the folded classes replace the eliminated partners by their
//! `J`/`B`-transposes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::folding::{make_fold, FoldDecoration, FoldPattern, FoldingMap, OddVariant, Sign};
use crate::gradation::{
    block_index_table, block_offsets, grading_component, in_spec_algebra, validate_spec,
    Automorphism, GradationSpec, GradationType,
};
use crate::lie_core::{
    c64, commutator, j_transpose, structure_transpose, ComplexMatrix, FamilyKind, StructureKind,
    C64, DEFAULT_TOL,
};

/// The four classes of Toda equations plus the one-block case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationClass {
    /// Cyclic chain of `p` independent blocks.
    GeneralLinear,
    /// `p = 2s` folded through two arcs.
    EvenFold,
    /// `p = 2s − 1` folded through one node and one arc.
    OddFold,
    /// `p = 2s − 2` folded through two nodes.
    DoubleFixedFold,
    /// A single block, `∂_+(γ⁻¹∂_−γ) = [c_−, γ⁻¹c_+γ]`.
    Simplest,
}

impl EquationClass {
    /// Identifier used in reports.
    pub fn name(self) -> &'static str {
        match self {
            EquationClass::GeneralLinear => "general_linear",
            EquationClass::EvenFold => "even_fold",
            EquationClass::OddFold => "odd_fold",
            EquationClass::DoubleFixedFold => "double_fixed_fold",
            EquationClass::Simplest => "simplest",
        }
    }
}

/// Constraint on one node `Γ_α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum GammaRule {
    /// Unconstrained.
    Free,
    /// `^B Γ = Γ⁻¹` with `B` of the given kind.
    SelfDual { b: StructureKind },
    /// Eliminated: `Γ_α = ^J(Γ_source⁻¹)` (1-based source).
    MirrorOf { source: usize },
}

/// Constraint on one arc pair `C_{±a}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ArcRule {
    /// Unconstrained.
    Free,
    /// Fixed by the fold: `^J C_{±a} = ε C_{±a}`.
    Fixed { epsilon: Sign },
    /// Eliminated: `C_{±a} = η · mirror(C_{±source})`.
    MirrorOf { source: usize, eta: Sign },
}

/// All constraints carried by a system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// One rule per node, 1-based node `α` at index `α − 1`.
    pub gamma: Vec<GammaRule>,
    /// One rule per arc, arc `a` at index `a`.
    pub arcs: Vec<ArcRule>,
    /// `Π_α det Γ_α = 1` (sl case).
    pub det_product_one: bool,
}

impl ConstraintSet {
    /// No constraints on `p` nodes.
    pub fn free(p: usize, det_product_one: bool) -> Self {
        Self {
            gamma: vec![GammaRule::Free; p],
            arcs: vec![ArcRule::Free; p],
            det_product_one,
        }
    }
}

/// Where a system came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemOrigin {
    /// Built from a gradation spec.
    Spec { spec: GradationSpec },
    /// The one-block system on a whole group (`outer = true`: `h = I`, `B = J`).
    Simplest {
        family: FamilyKind,
        n: usize,
        outer: bool,
    },
    /// The periodic chain with `p` blocks of size `r`.
    Chain { p: usize, r: usize },
}

/// A fully assembled Toda system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaSystem {
    pub origin: SystemOrigin,
    #[serde(rename = "L")]
    pub level: u32,
    pub block_sizes: Vec<usize>,
    pub class: EquationClass,
    pub constraints: ConstraintSet,
    pub fold: Option<FoldingMap>,
    /// `C_{+0}, …, C_{+(p−1)}`.
    pub c_plus: Vec<ComplexMatrix>,
    /// `C_{−0}, …, C_{−(p−1)}`.
    pub c_minus: Vec<ComplexMatrix>,
}

/// Values of the nodes at one point: either all `p` blocks or only the
/// independent ones of a folded class.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub gammas: Vec<ComplexMatrix>,
}

impl FieldState {
    /// Wraps a list of node values.
    pub fn new(gammas: Vec<ComplexMatrix>) -> Self {
        Self { gammas }
    }

    /// All nodes equal to the identity.
    pub fn identity(sizes: &[usize]) -> Self {
        Self {
            gammas: sizes.iter().map(|&n| ComplexMatrix::identity(n)).collect(),
        }
    }
}

/// Shape `(rows, cols)` of `C_{+a}` for block sizes `n`.
pub fn plus_shape(sizes: &[usize], a: usize) -> (usize, usize) {
    let p = sizes.len();
    let from = if a == 0 { p - 1 } else { a - 1 };
    (sizes[from], sizes[a % p])
}

/// Block coordinates (0-based) of `C_{+a}`.
fn plus_block(p: usize, a: usize) -> (usize, usize) {
    let from = if a == 0 { p - 1 } else { a - 1 };
    (from, a % p)
}

impl TodaSystem {
    /// Number of blocks `p`.
    pub fn p(&self) -> usize {
        self.block_sizes.len()
    }

    /// Matrix size `n = Σ n_α`.
    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Number of independent nodes (`s` for folded classes, `p` otherwise).
    pub fn independent_count(&self) -> usize {
        self.fold.as_ref().map_or(self.p(), |f| f.s)
    }

    /// Sizes of the independent nodes.
    pub fn independent_sizes(&self) -> Vec<usize> {
        self.block_sizes[..self.independent_count()].to_vec()
    }

    /// The gradation spec, when the system was built from one.
    pub fn spec(&self) -> Option<&GradationSpec> {
        match &self.origin {
            SystemOrigin::Spec { spec } => Some(spec),
            _ => None,
        }
    }

    /// Full `n×n` matrix `c_+`.
    pub fn c_plus_matrix(&self) -> ComplexMatrix {
        embed_arcs(&self.block_sizes, &self.c_plus, true)
    }

    /// Full `n×n` matrix `c_−`.
    pub fn c_minus_matrix(&self) -> ComplexMatrix {
        embed_arcs(&self.block_sizes, &self.c_minus, false)
    }

    /// Expands independent node values to all `p` blocks using the mirror
    /// rules; a full state is returned unchanged.
    pub fn expand_state(&self, state: &FieldState) -> Result<FieldState> {
        let p = self.p();
        let s = self.independent_count();
        if state.gammas.len() == p {
            return Ok(state.clone());
        }
        if state.gammas.len() != s {
            return Err(TodaError::InvalidData(format!(
                "expected {s} or {p} node values, got {}",
                state.gammas.len()
            )));
        }
        let mut full = state.gammas.clone();
        for a in s..p {
            match self.constraints.gamma[a] {
                GammaRule::MirrorOf { source } => {
                    let inv = state.gammas[source - 1].inverse()?;
                    full.push(j_transpose(&inv));
                }
                _ => {
                    return Err(TodaError::InvalidSystem(format!(
                        "node {} is neither independent nor a mirror",
                        a + 1
                    )))
                }
            }
        }
        Ok(FieldState { gammas: full })
    }

    /// Largest violation of the node constraints by a full or independent
    /// state.
    pub fn state_violation(&self, state: &FieldState) -> Result<f64> {
        let full = self.expand_state(state)?;
        check_shapes(&self.block_sizes, &full.gammas)?;
        let mut worst: f64 = 0.0;
        for (a, rule) in self.constraints.gamma.iter().enumerate() {
            let g = &full.gammas[a];
            match *rule {
                GammaRule::Free => {}
                GammaRule::SelfDual { b } => {
                    let bt = structure_transpose(g, b)?;
                    worst = worst.max((&bt * g).dist_max(&ComplexMatrix::identity(g.rows())));
                }
                GammaRule::MirrorOf { source } => {
                    let src = &full.gammas[source - 1];
                    let expected = j_transpose(&src.inverse()?);
                    worst = worst.max(g.dist_max(&expected));
                }
            }
        }
        if self.constraints.det_product_one {
            let mut prod = c64(1.0, 0.0);
            for g in &full.gammas {
                prod *= g.det()?;
            }
            worst = worst.max((prod - c64(1.0, 0.0)).norm());
        }
        Ok(worst)
    }
}

fn check_shapes(sizes: &[usize], gammas: &[ComplexMatrix]) -> Result<()> {
    for (a, (g, &n)) in gammas.iter().zip(sizes).enumerate() {
        if g.shape() != (n, n) {
            return Err(TodaError::ShapeMismatch {
                op: "node value",
                left: g.shape(),
                right: (n, n),
            })
            .map_err(|e| TodaError::InvalidData(format!("Γ_{}: {e}", a + 1)));
        }
    }
    Ok(())
}

/// Places arc blocks into a full matrix (`plus = true` for `c_+`).
pub fn embed_arcs(sizes: &[usize], blocks: &[ComplexMatrix], plus: bool) -> ComplexMatrix {
    let p = sizes.len();
    let off = block_offsets(sizes);
    let n = off[p];
    let mut out = ComplexMatrix::zeros(n, n);
    for (a, b) in blocks.iter().enumerate() {
        let (r, c) = plus_block(p, a);
        let (r, c) = if plus { (r, c) } else { (c, r) };
        if p == 1 {
            out += b;
        } else {
            // For p = 2 the two arcs occupy different blocks; accumulate anyway.
            let mut tmp = ComplexMatrix::zeros(n, n);
            tmp.set_block(off[r], off[c], b);
            out += &tmp;
        }
    }
    out
}

/// Block-diagonal `γ = diag(Γ_1, …, Γ_p)`.
pub fn embed_gamma(gammas: &[ComplexMatrix]) -> ComplexMatrix {
    ComplexMatrix::block_diagonal(gammas)
}

/// Extracts `C_{+a}` (or `C_{−a}`) blocks from full matrices.
pub fn extract_arcs(sizes: &[usize], full: &ComplexMatrix, plus: bool) -> Vec<ComplexMatrix> {
    let p = sizes.len();
    let off = block_offsets(sizes);
    (0..p)
        .map(|a| {
            let (r, c) = plus_block(p, a);
            let (r, c) = if plus { (r, c) } else { (c, r) };
            full.block(off[r], off[c], sizes[r], sizes[c])
        })
        .collect()
}

/// The full right-hand side `[c_−, γ⁻¹ c_+ γ]`.
pub fn rhs_full(
    gamma: &ComplexMatrix,
    c_minus: &ComplexMatrix,
    c_plus: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let inv = gamma.inverse()?;
    let conj = inv.try_mul(c_plus)?.try_mul(gamma)?;
    commutator(c_minus, &conj)
}

/// Pre-inverted node values used by the right-hand-side kernels.
pub(crate) struct NodeData<'a> {
    pub gammas: &'a [ComplexMatrix],
    pub inverses: Vec<ComplexMatrix>,
}

impl<'a> NodeData<'a> {
    pub(crate) fn new(gammas: &'a [ComplexMatrix]) -> Result<Self> {
        let inverses = gammas
            .iter()
            .map(|g| g.inverse())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { gammas, inverses })
    }
}

/// Right-hand sides of the independent equations for the given class data.
///
/// `nodes` holds the independent node values (all `p` for unfolded classes),
/// `c_plus`/`c_minus` all `p` arc blocks.
pub(crate) fn class_rhs(
    fold: Option<&FoldingMap>,
    p: usize,
    nodes: &NodeData<'_>,
    c_plus: &[ComplexMatrix],
    c_minus: &[ComplexMatrix],
) -> Result<Vec<ComplexMatrix>> {
    let g = nodes.gammas;
    let gi = &nodes.inverses;
    match fold {
        None => Ok((0..p)
            .map(|a| {
                let next = (a + 1) % p;
                let prev = (a + p - 1) % p;
                let arc_out = (a + 1) % p;
                let arc_in = a;
                let t1 = &(&(&gi[a] * &c_plus[arc_out]) * &g[next]) * &c_minus[arc_out];
                let t2 = &(&(&c_minus[arc_in] * &gi[prev]) * &c_plus[arc_in]) * &g[a];
                &t2 - &t1
            })
            .collect()),
        Some(map) => {
            let s = map.s;
            let mut out = Vec::with_capacity(s);
            for alpha in 1..=s {
                let a = alpha - 1;
                if alpha == 1 && s > 1 {
                    if let Some(b) = map.fixed_node_kind(1) {
                        let y = &(&(&gi[0] * &c_plus[1]) * &g[1]) * &c_minus[1];
                        out.push(&structure_transpose(&y, b)? - &y);
                        continue;
                    }
                }
                if alpha == s && s > 1 {
                    if let Some(b) = map.fixed_node_kind(s) {
                        let x = &(&(&c_minus[s - 1] * &gi[s - 2]) * &c_plus[s - 1]) * &g[s - 1];
                        out.push(&x - &structure_transpose(&x, b)?);
                        continue;
                    }
                }
                let next = if alpha < s {
                    g[a + 1].clone()
                } else {
                    j_transpose(&gi[a])
                };
                let prev_inv = if alpha > 1 {
                    gi[a - 1].clone()
                } else {
                    j_transpose(&g[0])
                };
                let t1 = &(&(&gi[a] * &c_plus[alpha % p]) * &next) * &c_minus[alpha % p];
                let t2 = &(&(&c_minus[a] * &prev_inv) * &c_plus[a]) * &g[a];
                out.push(&t2 - &t1);
            }
            Ok(out)
        }
    }
}

/// Right-hand sides of the system's equations at a state.
///
/// Returns `p` blocks for unfolded classes and `s` blocks (the independent
/// equations in their folded form) for folded classes. A full state is
/// checked against the constraints at [`DEFAULT_TOL`] scaled by its size.
pub fn rhs_blocks(system: &TodaSystem, state: &FieldState) -> Result<Vec<ComplexMatrix>> {
    let s = system.independent_count();
    let full = system.expand_state(state)?;
    check_shapes(&system.block_sizes, &full.gammas)?;
    let scale = full.gammas.iter().map(|g| g.norm_max()).fold(1.0, f64::max);
    let violation = system.state_violation(&full)?;
    if violation > DEFAULT_TOL * scale * scale {
        return Err(TodaError::ConstraintViolation(format!(
            "state violates the node constraints by {violation:.3e}"
        )));
    }
    let nodes = NodeData::new(&full.gammas[..s])?;
    class_rhs(
        system.fold.as_ref(),
        system.p(),
        &nodes,
        &system.c_plus,
        &system.c_minus,
    )
}

/// Cross-checks the block form against `[c_−, γ⁻¹ c_+ γ]`.
///
/// Embeds the (expanded) state into `γ`, evaluates the full commutator and
/// returns the largest deviation from the block right-hand sides, including
/// the off-diagonal blocks of the full form, which must vanish.
pub fn rhs_blocks_vs_full(system: &TodaSystem, state: &FieldState) -> Result<f64> {
    let full = system.expand_state(state)?;
    let blocks = rhs_blocks(system, &full)?;
    let gamma = embed_gamma(&full.gammas);
    let rhs = rhs_full(&gamma, &system.c_minus_matrix(), &system.c_plus_matrix())?;
    let off = block_offsets(&system.block_sizes);
    let p = system.p();
    let mut worst: f64 = 0.0;
    for r in 0..p {
        for c in 0..p {
            let blk = rhs.block(off[r], off[c], system.block_sizes[r], system.block_sizes[c]);
            if r == c && r < blocks.len() {
                worst = worst.max(blk.dist_max(&blocks[r]));
            } else if r != c {
                worst = worst.max(blk.norm_max());
            }
        }
    }
    Ok(worst)
}

/// Mirror transpose of an arc block used by the fold rules.
///
/// For `C_{+a}` of shape `n_α × n_β` the image is `F_β⁻¹ Cᵗ F_α`, where `F`
/// is `J` for ordinary nodes and the node's `B` for fixed nodes; for
/// `C_{−a}` the roles of the endpoints swap.
pub fn arc_mirror(
    map: &FoldingMap,
    a: usize,
    c: &ComplexMatrix,
    plus: bool,
) -> Result<ComplexMatrix> {
    let p = map.p;
    let (from, to) = plus_block(p, a);
    let (left, right) = if plus { (to, from) } else { (from, to) };
    // plus: F_to⁻¹ Cᵗ F_from ; minus: F_from⁻¹ Cᵗ F_to.
    let f_left = map.node_form(left + 1);
    let f_right = map.node_form(right + 1);
    let ct = c.transpose();
    let lhs = form_inverse(f_left, ct.rows())?;
    let rhs = form_matrix(f_right, ct.cols())?;
    Ok(&(&lhs * &ct) * &rhs)
}

fn form_matrix(kind: StructureKind, n: usize) -> Result<ComplexMatrix> {
    Ok(crate::lie_core::StructureMatrix::new(kind, n)?.matrix())
}

fn form_inverse(kind: StructureKind, n: usize) -> Result<ComplexMatrix> {
    let m = form_matrix(kind, n)?;
    Ok(match kind {
        StructureKind::K => -m,
        _ => m,
    })
}

/// Derives the constraint set of a fold, inferring the mirror signs `η`
/// from the supplied arc blocks and checking the fixed-arc signs.
pub(crate) fn fold_constraint_set(
    map: &FoldingMap,
    sizes: &[usize],
    c_plus: &[ComplexMatrix],
    c_minus: &[ComplexMatrix],
    det_product_one: bool,
    tol: f64,
) -> Result<ConstraintSet> {
    let p = map.p;
    if sizes.len() != p {
        return Err(TodaError::InvalidFold(format!(
            "fold has p = {p}, system has {} blocks",
            sizes.len()
        )));
    }
    for a in 1..=p {
        let b = map.node_pairing[a - 1];
        if sizes[a - 1] != sizes[b - 1] {
            return Err(TodaError::InvalidFold(format!(
                "paired nodes {a} and {b} have sizes {} and {}",
                sizes[a - 1],
                sizes[b - 1]
            )));
        }
        if let Some(StructureKind::K) = map.fixed_node_kind(a) {
            if !sizes[a - 1].is_multiple_of(2) {
                return Err(TodaError::InvalidFold(format!(
                    "node {a} fixed with K needs even size, got {}",
                    sizes[a - 1]
                )));
            }
        }
    }
    let mut gamma = vec![GammaRule::Free; p];
    for alpha in 1..=p {
        if let Some(b) = map.fixed_node_kind(alpha) {
            gamma[alpha - 1] = GammaRule::SelfDual { b };
        } else if alpha > map.s {
            gamma[alpha - 1] = GammaRule::MirrorOf {
                source: map.node_pairing[alpha - 1],
            };
        }
    }
    let mut arcs = vec![ArcRule::Free; p];
    for a in 0..p {
        let scale = c_plus[a].norm_max().max(c_minus[a].norm_max()).max(1.0);
        if let Some(eps) = map.fixed_arc_sign(a) {
            for (plus, c) in [(true, &c_plus[a]), (false, &c_minus[a])] {
                let m = arc_mirror(map, a, c, plus)?;
                if m.dist_max(&c.scale_re(eps.value())) > tol * scale {
                    return Err(TodaError::ConstraintViolation(format!(
                        "arc {a} is not fixed with sign {} (C_{}{a})",
                        eps.symbol(),
                        if plus { "+" } else { "−" }
                    )));
                }
            }
            arcs[a] = ArcRule::Fixed { epsilon: eps };
        }
    }
    for &src in &map.source_arcs() {
        if map.fixed_arc_sign(src).is_some() {
            continue;
        }
        let tgt = map.arc_pairing[src];
        let mp = arc_mirror(map, src, &c_plus[src], true)?;
        let mm = arc_mirror(map, src, &c_minus[src], false)?;
        let scale = mp.norm_max().max(mm.norm_max()).max(1.0);
        let eta = [Sign::Plus, Sign::Minus]
            .into_iter()
            .find(|eta| {
                c_plus[tgt].dist_max(&mp.scale_re(eta.value())) <= tol * scale
                    && c_minus[tgt].dist_max(&mm.scale_re(eta.value())) <= tol * scale
            })
            .ok_or_else(|| {
                TodaError::ConstraintViolation(format!(
                    "arc {tgt} is not a signed mirror of arc {src}"
                ))
            })?;
        arcs[tgt] = ArcRule::MirrorOf { source: src, eta };
    }
    Ok(ConstraintSet {
        gamma,
        arcs,
        det_product_one,
    })
}

/// Fold pattern and decoration implied by a spec's type, or `None` for the
/// unfolded classes.
pub fn fold_for_spec(spec: &GradationSpec) -> Option<(FoldPattern, FoldDecoration)> {
    use GradationType::*;
    use StructureKind::{J, K};
    let p = spec.p();
    let even = p.is_multiple_of(2);
    let odd_last = FoldPattern::OddMixed {
        variant: OddVariant::FixedNodeLast,
    };
    match spec.gradation_type {
        Trivial | GlInner => None,
        SoSpTypeI => {
            let deco = if spec.family == FamilyKind::So {
                FoldDecoration::uniform(J, Sign::Minus)
            } else {
                FoldDecoration::uniform(K, Sign::Plus)
            };
            Some((
                if even {
                    FoldPattern::EvenArcFixed
                } else {
                    odd_last
                },
                deco,
            ))
        }
        SoSpTypeII => {
            let b = if spec.family == FamilyKind::So { J } else { K };
            Some((
                FoldPattern::EvenNodeFixed,
                FoldDecoration::uniform(b, Sign::Plus),
            ))
        }
        GlOuterII => Some(if even {
            (
                FoldPattern::EvenArcFixed,
                FoldDecoration {
                    b_first: J,
                    b_last: J,
                    eps_first: Sign::Minus,
                    eps_last: Sign::Plus,
                },
            )
        } else {
            (
                odd_last,
                FoldDecoration {
                    b_first: J,
                    b_last: K,
                    eps_first: Sign::Minus,
                    eps_last: Sign::Plus,
                },
            )
        }),
        GlOuterIII => Some(if even {
            (
                FoldPattern::EvenNodeFixed,
                FoldDecoration {
                    b_first: J,
                    b_last: K,
                    eps_first: Sign::Plus,
                    eps_last: Sign::Plus,
                },
            )
        } else {
            (
                FoldPattern::OddMixed {
                    variant: OddVariant::FixedNodeFirst,
                },
                FoldDecoration {
                    b_first: J,
                    b_last: J,
                    eps_first: Sign::Plus,
                    eps_last: Sign::Plus,
                },
            )
        }),
    }
}

/// Equation class of the systems built from a spec.
pub fn spec_class(spec: &GradationSpec) -> EquationClass {
    if spec.gradation_type == GradationType::Trivial {
        return EquationClass::Simplest;
    }
    fold_for_spec(spec).map_or(EquationClass::GeneralLinear, |(pattern, _)| {
        class_of_pattern(pattern)
    })
}

/// Equation class of a fold pattern.
pub fn class_of_pattern(pattern: FoldPattern) -> EquationClass {
    match pattern {
        FoldPattern::EvenArcFixed => EquationClass::EvenFold,
        FoldPattern::EvenNodeFixed => EquationClass::DoubleFixedFold,
        FoldPattern::OddMixed { .. } => EquationClass::OddFold,
    }
}

/// Coupling blocks `C_{±0}, …, C_{±(p−1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingBlocks {
    pub plus: Vec<ComplexMatrix>,
    pub minus: Vec<ComplexMatrix>,
}

/// Assembles and classifies the Toda system of a spec at level `L`.
///
/// Every supplied block must have the skeleton shape, nonzero blocks must
/// sit at grading index `±[L]`, and the assembled `c_±` must lie in the
/// algebra and in grades `±L`. Trivial specs give a one-block system.
pub fn build_system(spec: &GradationSpec, level: u32, c: &CouplingBlocks) -> Result<TodaSystem> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(TodaError::InvalidSpec(msg.join("; ")));
    }
    if level == 0 {
        return Err(TodaError::InvalidSystem("L must be positive".into()));
    }
    let sizes = spec.n_list.clone();
    let p = sizes.len();
    if c.plus.len() != p || c.minus.len() != p {
        return Err(TodaError::InvalidSystem(format!(
            "expected {p} blocks for each of C_+ and C_−, got {} and {}",
            c.plus.len(),
            c.minus.len()
        )));
    }
    for a in 0..p {
        let (r, cc) = plus_shape(&sizes, a);
        if c.plus[a].shape() != (r, cc) {
            return Err(TodaError::ShapeMismatch {
                op: "C_+ block",
                left: c.plus[a].shape(),
                right: (r, cc),
            });
        }
        if c.minus[a].shape() != (cc, r) {
            return Err(TodaError::ShapeMismatch {
                op: "C_− block",
                left: c.minus[a].shape(),
                right: (cc, r),
            });
        }
    }

    let table = block_index_table(spec)?;
    let lvl = level as i64;
    for a in 0..p {
        let (r, cc) = plus_block(p, a);
        if c.plus[a].norm_max() > 0.0 && !table.allows(r, cc, lvl) {
            return Err(TodaError::InvalidSystem(format!(
                "C_+{a} is nonzero but block ({}, {}) has no grade {level}",
                r + 1,
                cc + 1
            )));
        }
        if c.minus[a].norm_max() > 0.0 && !table.allows(cc, r, -lvl) {
            return Err(TodaError::InvalidSystem(format!(
                "C_−{a} is nonzero but block ({}, {}) has no grade −{level}",
                cc + 1,
                r + 1
            )));
        }
    }

    let det_product_one = spec.family == FamilyKind::Sl;
    let mut system = TodaSystem {
        origin: SystemOrigin::Spec { spec: spec.clone() },
        level,
        block_sizes: sizes.clone(),
        class: EquationClass::GeneralLinear,
        constraints: ConstraintSet::free(p, det_product_one),
        fold: None,
        c_plus: c.plus.clone(),
        c_minus: c.minus.clone(),
    };

    let cp = system.c_plus_matrix();
    let cm = system.c_minus_matrix();
    let scale = cp.norm_max().max(cm.norm_max()).max(1.0);
    let tol = DEFAULT_TOL * scale;
    if !in_spec_algebra(&cp, spec, tol)? || !in_spec_algebra(&cm, spec, tol)? {
        return Err(TodaError::ConstraintViolation(format!(
            "c_± do not lie in {}_{}",
            spec.family, spec.n
        )));
    }
    let aut = Automorphism::from_spec(spec)?;
    if grading_component(&cp, lvl, &aut)?.dist_max(&cp) > tol
        || grading_component(&cm, -lvl, &aut)?.dist_max(&cm) > tol
    {
        return Err(TodaError::ConstraintViolation(format!(
            "c_± are not homogeneous of grades ±{level}"
        )));
    }

    if spec.gradation_type == GradationType::Trivial {
        system.class = EquationClass::Simplest;
        if let Some(b) = spec.algebra()?.structure() {
            system.constraints.gamma[0] = GammaRule::SelfDual { b: b.kind };
        }
        return Ok(system);
    }

    if let Some((pattern, deco)) = fold_for_spec(spec) {
        let map = make_fold(p, pattern, &deco)?;
        system.constraints =
            fold_constraint_set(&map, &sizes, &c.plus, &c.minus, det_product_one, tol)?;
        system.class = class_of_pattern(pattern);
        system.fold = Some(map);
    }
    Ok(system)
}

/// Like [`build_system`], taking full `n×n` matrices `c_±`.
///
/// Entries outside the cyclic skeleton must vanish.
pub fn build_system_from_matrices(
    spec: &GradationSpec,
    level: u32,
    c_plus: &ComplexMatrix,
    c_minus: &ComplexMatrix,
) -> Result<TodaSystem> {
    let sizes = &spec.n_list;
    let plus = extract_arcs(sizes, c_plus, true);
    let minus = extract_arcs(sizes, c_minus, false);
    let rebuilt_p = embed_arcs(sizes, &plus, true);
    let rebuilt_m = embed_arcs(sizes, &minus, false);
    let scale = c_plus.norm_max().max(c_minus.norm_max()).max(1.0);
    if rebuilt_p.dist_max(c_plus) > DEFAULT_TOL * scale
        || rebuilt_m.dist_max(c_minus) > DEFAULT_TOL * scale
    {
        return Err(TodaError::InvalidSystem(
            "c_± have entries outside the cyclic block skeleton".into(),
        ));
    }
    build_system(spec, level, &CouplingBlocks { plus, minus })
}

/// The one-block system `∂_+(γ⁻¹∂_−γ) = [c_−, γ⁻¹c_+γ]`.
///
/// With `outer = false` `γ` ranges over the whole group of `family`; with
/// `outer = true` the automorphism `x ↦ −^J x` is used, `γ` ranges over
/// `SO_n`, and `c_±` must satisfy `^J c = c`.
pub fn build_simplest(
    family: FamilyKind,
    outer: bool,
    c_plus: &ComplexMatrix,
    c_minus: &ComplexMatrix,
) -> Result<TodaSystem> {
    let n = c_plus.rows();
    if !c_plus.is_square() || c_minus.shape() != c_plus.shape() {
        return Err(TodaError::ShapeMismatch {
            op: "build_simplest",
            left: c_plus.shape(),
            right: c_minus.shape(),
        });
    }
    let mut constraints = ConstraintSet::free(1, family == FamilyKind::Sl && !outer);
    if outer {
        if family != FamilyKind::Gl && family != FamilyKind::Sl {
            return Err(TodaError::InvalidSystem(
                "the outer simplest case is defined for gl/sl".into(),
            ));
        }
        let scale = c_plus.norm_max().max(c_minus.norm_max()).max(1.0);
        for (name, c) in [("C_+", c_plus), ("C_−", c_minus)] {
            if j_transpose(c).dist_max(c) > DEFAULT_TOL * scale {
                return Err(TodaError::ConstraintViolation(format!(
                    "{name} must satisfy ^J C = C"
                )));
            }
        }
        constraints.gamma[0] = GammaRule::SelfDual {
            b: StructureKind::J,
        };
        constraints.arcs[0] = ArcRule::Fixed {
            epsilon: Sign::Plus,
        };
    } else {
        let fam = crate::lie_core::AlgebraFamily::new(family, n)?;
        if let Some(b) = fam.structure() {
            constraints.gamma[0] = GammaRule::SelfDual { b: b.kind };
        }
    }
    Ok(TodaSystem {
        origin: SystemOrigin::Simplest { family, n, outer },
        level: 1,
        block_sizes: vec![n],
        class: EquationClass::Simplest,
        constraints,
        fold: None,
        c_plus: vec![c_plus.clone()],
        c_minus: vec![c_minus.clone()],
    })
}

/// Choice of couplings for the periodic chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainCoupling {
    /// `C_{±α} = I_r`.
    Identity,
    /// `C_{+α} = c_+ I_r`, `C_{−α} = c_− I_r`.
    Scaled { plus: [f64; 2], minus: [f64; 2] },
}

/// The periodic chain: `p` blocks of size `r`, `k_α = 1`, `M = p`, `L = 1`.
pub fn build_periodic_chain(p: usize, r: usize, coupling: ChainCoupling) -> Result<TodaSystem> {
    if p < 2 || r == 0 {
        return Err(TodaError::InvalidSystem(format!(
            "periodic chain needs p ≥ 2 and r ≥ 1, got p = {p}, r = {r}"
        )));
    }
    let (cp, cm): (C64, C64) = match coupling {
        ChainCoupling::Identity => (c64(1.0, 0.0), c64(1.0, 0.0)),
        ChainCoupling::Scaled { plus, minus } => (c64(plus[0], plus[1]), c64(minus[0], minus[1])),
    };
    let id = ComplexMatrix::identity(r);
    Ok(TodaSystem {
        origin: SystemOrigin::Chain { p, r },
        level: 1,
        block_sizes: vec![r; p],
        class: EquationClass::GeneralLinear,
        constraints: ConstraintSet::free(p, false),
        fold: None,
        c_plus: vec![id.scale(cp); p],
        c_minus: vec![id.scale(cm); p],
    })
}

/// The gl inner spec underlying a periodic chain.
pub fn chain_spec(p: usize, r: usize) -> GradationSpec {
    GradationSpec::new(
        FamilyKind::Gl,
        GradationType::GlInner,
        p as u32,
        vec![r; p],
        vec![1; p - 1],
    )
}

impl TodaSystem {
    /// Serializes the system to pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serialization cannot fail")
    }

    /// Parses a system from JSON.
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Renders the equations in block form as a LaTeX `align*` environment.
    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "% {} system, p = {}, L = {}",
            self.class.name(),
            self.p(),
            self.level
        );
        out.push_str("\\begin{align*}\n");
        let lhs =
            |a: usize| format!("\\partial_+(\\Gamma_{{{a}}}^{{-1}}\\partial_-\\Gamma_{{{a}}})");
        let p = self.p();
        let lines: Vec<String> = match &self.fold {
            None if self.class == EquationClass::Simplest => vec![format!(
                "\\partial_+(\\gamma^{{-1}}\\partial_-\\gamma) &= [c_-, \\gamma^{{-1}} c_+ \\gamma]"
            )],
            None => (1..=p)
                .map(|a| {
                    let next = a % p + 1;
                    let prev = if a == 1 { p } else { a - 1 };
                    format!(
                        "{} &= -\\Gamma_{{{a}}}^{{-1}} C_{{+{o}}} \\Gamma_{{{next}}} C_{{-{o}}} + C_{{-{i}}} \\Gamma_{{{prev}}}^{{-1}} C_{{+{i}}} \\Gamma_{{{a}}}",
                        lhs(a),
                        o = a % p,
                        i = a - 1
                    )
                })
                .collect(),
            Some(map) => {
                let s = map.s;
                (1..=s)
                    .map(|a| {
                        if a == 1 && s > 1 {
                            if let Some(b) = map.fixed_node_kind(1) {
                                return format!(
                                    "{} &= -Y + {{}}^{{{}}}Y, \\quad Y = \\Gamma_1^{{-1}} C_{{+1}} \\Gamma_2 C_{{-1}}",
                                    lhs(1),
                                    kind_tex(b)
                                );
                            }
                        }
                        if a == s && s > 1 {
                            if let Some(b) = map.fixed_node_kind(s) {
                                return format!(
                                    "{} &= -{{}}^{{{}}}X + X, \\quad X = C_{{-{m}}} \\Gamma_{{{m}}}^{{-1}} C_{{+{m}}} \\Gamma_{{{s}}}",
                                    lhs(s),
                                    kind_tex(b),
                                    m = s - 1
                                );
                            }
                        }
                        let next = if a < s {
                            format!("\\Gamma_{{{}}}", a + 1)
                        } else {
                            format!("{{}}^{{J}}(\\Gamma_{{{a}}}^{{-1}})")
                        };
                        let prev = if a > 1 {
                            format!("\\Gamma_{{{}}}^{{-1}}", a - 1)
                        } else {
                            "{}^{J}\\Gamma_{1}".to_string()
                        };
                        format!(
                            "{} &= -\\Gamma_{{{a}}}^{{-1}} C_{{+{a}}} {next} C_{{-{a}}} + C_{{-{i}}} {prev} C_{{+{i}}} \\Gamma_{{{a}}}",
                            lhs(a),
                            i = a - 1
                        )
                    })
                    .collect()
            }
        };
        out.push_str(&lines.join(", \\\\\n"));
        out.push_str(".\n\\end{align*}\n");
        let mut conditions = Vec::new();
        for (a, rule) in self.constraints.gamma.iter().enumerate() {
            match rule {
                GammaRule::SelfDual { b } => conditions.push(format!(
                    "{{}}^{{{}}}\\Gamma_{{{}}} = \\Gamma_{{{}}}^{{-1}}",
                    kind_tex(*b),
                    a + 1,
                    a + 1
                )),
                GammaRule::MirrorOf { source } => conditions.push(format!(
                    "\\Gamma_{{{}}} = {{}}^{{J}}(\\Gamma_{{{source}}}^{{-1}})",
                    a + 1
                )),
                GammaRule::Free => {}
            }
        }
        for (a, rule) in self.constraints.arcs.iter().enumerate() {
            if let ArcRule::Fixed { epsilon } = rule {
                conditions.push(format!(
                    "{{}}^{{J}}C_{{\\pm {a}}} = {}C_{{\\pm {a}}}",
                    if *epsilon == Sign::Plus { "" } else { "-" }
                ));
            }
        }
        if self.constraints.det_product_one {
            conditions.push("\\prod_\\alpha \\det \\Gamma_\\alpha = 1".into());
        }
        if !conditions.is_empty() {
            let _ = writeln!(out, "% where\n\\[ {} \\]", conditions.join(", \\quad "));
        }
        out
    }
}

fn kind_tex(kind: StructureKind) -> &'static str {
    match kind {
        StructureKind::Identity => "I",
        StructureKind::J => "J",
        StructureKind::K => "K",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::c64;

    fn one() -> ComplexMatrix {
        ComplexMatrix::scalar(c64(1.0, 0.0))
    }

    #[test]
    fn gl_inner_p2_is_general_linear_without_constraints() {
        let spec = GradationSpec::new(
            FamilyKind::Gl,
            GradationType::GlInner,
            2,
            vec![1, 1],
            vec![1],
        );
        let c = CouplingBlocks {
            plus: vec![one(), one()],
            minus: vec![one(), one()],
        };
        let sys = build_system(&spec, 1, &c).unwrap();
        assert_eq!(sys.class, EquationClass::GeneralLinear);
        assert_eq!(sys.constraints, ConstraintSet::free(2, false));
    }

    #[test]
    fn forbidden_grade_is_rejected() {
        // gl_3 with n = (1,1,1), k = (2,1), M = 5: C_{+1} sits at grade 2 ≠ 1.
        let spec = GradationSpec::new(
            FamilyKind::Gl,
            GradationType::GlInner,
            5,
            vec![1, 1, 1],
            vec![2, 1],
        );
        let z = ComplexMatrix::zeros(1, 1);
        let c = CouplingBlocks {
            plus: vec![z.clone(), one(), z.clone()],
            minus: vec![z.clone(), z.clone(), z.clone()],
        };
        assert!(matches!(
            build_system(&spec, 1, &c),
            Err(TodaError::InvalidSystem(_))
        ));
    }

    #[test]
    fn rhs_full_examples() {
        let cp = ComplexMatrix::elementary(2, 2, 0, 1);
        let cm = ComplexMatrix::elementary(2, 2, 1, 0);
        let id = ComplexMatrix::identity(2);
        assert!(rhs_full(&id, &cm, &cp)
            .unwrap()
            .approx_eq(&commutator(&cm, &cp).unwrap(), 0.0));
        assert_eq!(
            rhs_full(&id, &cm, &ComplexMatrix::zeros(2, 2))
                .unwrap()
                .norm_max(),
            0.0
        );
        // γ = diag(a, 1/a): [E21, γ⁻¹E12γ] = a⁻² [E21, E12] = a⁻² diag(−1, 1).
        let a = 1.7;
        let g = ComplexMatrix::from_diagonal(&[c64(a, 0.0), c64(1.0 / a, 0.0)]);
        let r = rhs_full(&g, &cm, &cp).unwrap();
        let expected =
            ComplexMatrix::from_diagonal(&[c64(-1.0 / (a * a), 0.0), c64(1.0 / (a * a), 0.0)]);
        assert!(r.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn scalar_chain_rhs() {
        let sys = build_periodic_chain(2, 1, ChainCoupling::Identity).unwrap();
        let (f1, f2) = (0.3_f64, -0.4_f64);
        let st = FieldState::new(vec![
            ComplexMatrix::scalar(c64(f1.exp(), 0.0)),
            ComplexMatrix::scalar(c64(f2.exp(), 0.0)),
        ]);
        let r = rhs_blocks(&sys, &st).unwrap();
        let expected = -(f2 - f1).exp() + (f1 - f2).exp();
        assert!((r[0][(0, 0)] - c64(expected, 0.0)).norm() < 1e-14);
        assert!((r[1][(0, 0)] + c64(expected, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn chain_is_at_rest_at_identity() {
        let sys = build_periodic_chain(3, 2, ChainCoupling::Identity).unwrap();
        assert_eq!(sys.n(), 6);
        let r = rhs_blocks(&sys, &FieldState::identity(&sys.block_sizes)).unwrap();
        assert!(r.iter().all(|b| b.norm_max() == 0.0));
    }

    #[test]
    fn simplest_systems() {
        let j = crate::lie_core::j_matrix(3);
        let sys = build_simplest(FamilyKind::Gl, true, &j, &j).unwrap();
        assert_eq!(sys.class, EquationClass::Simplest);
        let mut anti = ComplexMatrix::zeros(3, 3);
        anti[(0, 1)] = c64(1.0, 0.0);
        anti[(1, 2)] = c64(-1.0, 0.0);
        assert!(matches!(
            build_simplest(FamilyKind::Gl, true, &anti, &anti),
            Err(TodaError::ConstraintViolation(_))
        ));
        let any = ComplexMatrix::from_fn(2, 2, |i, j| c64((i + 2 * j) as f64, 1.0));
        assert!(build_simplest(FamilyKind::Gl, false, &any, &any).is_ok());
    }

    #[test]
    fn system_json_round_trip_and_latex() {
        let sys = build_periodic_chain(3, 1, ChainCoupling::Identity).unwrap();
        let back = TodaSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(back, sys);
        let tex = sys.to_latex();
        assert!(tex.contains("\\begin{align*}"));
        assert!(tex.contains("C_{+1}"));
    }
}
