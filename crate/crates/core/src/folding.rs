//! Circle diagrams and their foldings.
//!
//! A general linear system with `p` blocks is drawn as a circle with nodes
//! `Γ_1, …, Γ_p` (anticlockwise) and arcs `C_{±α}` between nodes `α` and
//! `α + 1`, arc `0` closing the circle between `Γ_p` and `Γ_1`. Folding the
//! circle along a reflection axis identifies mirror nodes,
//! `Γ_{σ(α)} = ^J(Γ_α⁻¹)`, and mirror arcs; nodes and arcs on the axis
//! acquire the constraints `^B Γ = Γ⁻¹` and `^J C = ε C`. There are three
//! shapes of axis: through two arcs (`p = 2s`), through two nodes
//! (`p = 2s − 2`) and through one node and one arc (`p = 2s − 1`, in two
//! equivalent labelings).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::lie_core::{j_transpose, structure_transpose, ComplexMatrix, StructureKind};
use crate::toda_builder::{
    class_of_pattern, class_rhs, fold_constraint_set, ConstraintSet, EquationClass, NodeData,
    TodaSystem,
};

/// A sign `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `+1.0` or `−1.0`.
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// `"+"` or `"−"`.
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "−",
        }
    }
}

/// Which of the two labelings of the odd fold is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OddVariant {
    /// Node `s` and arc `0` lie on the axis.
    FixedNodeLast,
    /// Node `1` and arc `s` lie on the axis.
    FixedNodeFirst,
}

/// Shape of the folding axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum FoldPattern {
    /// `p = 2s`, arcs `0` and `s` on the axis.
    EvenArcFixed,
    /// `p = 2s − 2`, nodes `1` and `s` on the axis.
    EvenNodeFixed,
    /// `p = 2s − 1`, one node and one arc on the axis.
    OddMixed { variant: OddVariant },
}

impl FoldPattern {
    /// `(fixed nodes, fixed arcs)` of the pattern.
    pub fn fixed_counts(self) -> (usize, usize) {
        match self {
            FoldPattern::EvenArcFixed => (0, 2),
            FoldPattern::EvenNodeFixed => (2, 0),
            FoldPattern::OddMixed { .. } => (1, 1),
        }
    }

    /// The fold parameter `s` for `p` blocks, if the parity matches.
    pub fn fold_parameter(self, p: usize) -> Option<usize> {
        match self {
            FoldPattern::EvenArcFixed => (p.is_multiple_of(2) && p >= 2).then_some(p / 2),
            FoldPattern::EvenNodeFixed => (p.is_multiple_of(2) && p >= 2).then_some(p / 2 + 1),
            FoldPattern::OddMixed { .. } => (p % 2 == 1 && p >= 3).then_some(p.div_ceil(2)),
        }
    }
}

impl fmt::Display for FoldPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldPattern::EvenArcFixed => f.write_str("even_arc_fixed"),
            FoldPattern::EvenNodeFixed => f.write_str("even_node_fixed"),
            FoldPattern::OddMixed {
                variant: OddVariant::FixedNodeLast,
            } => f.write_str("odd_mixed(node s, arc 0)"),
            FoldPattern::OddMixed {
                variant: OddVariant::FixedNodeFirst,
            } => f.write_str("odd_mixed(node 1, arc s)"),
        }
    }
}

/// Decorations of the points on the axis: the structure kind of a fixed
/// node and the sign of a fixed arc, for the first (node 1 / arc 0) and last
/// (node s / arc s) positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldDecoration {
    pub b_first: StructureKind,
    pub b_last: StructureKind,
    pub eps_first: Sign,
    pub eps_last: Sign,
}

impl FoldDecoration {
    /// Same `B` and `ε` at both ends.
    pub fn uniform(b: StructureKind, eps: Sign) -> Self {
        Self {
            b_first: b,
            b_last: b,
            eps_first: eps,
            eps_last: eps,
        }
    }

    /// Orthogonal decoration: `B = J`, `ε = −1`.
    pub fn orthogonal() -> Self {
        Self::uniform(StructureKind::J, Sign::Minus)
    }

    /// Symplectic decoration: `B = K`, `ε = +1`.
    pub fn symplectic() -> Self {
        Self::uniform(StructureKind::K, Sign::Plus)
    }
}

/// A node on the folding axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedNode {
    /// 1-based node index.
    pub node: usize,
    pub b: StructureKind,
}

/// An arc on the folding axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedArc {
    /// Arc index in `0..p`.
    pub arc: usize,
    pub epsilon: Sign,
}

/// Pairing of the nodes and arcs of a circle diagram under a reflection,
/// with decorations on the fixed points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldingMap {
    pub p: usize,
    pub s: usize,
    pub pattern: FoldPattern,
    /// `σ(α)` for `α = 1..p`, stored at index `α − 1` (1-based values).
    pub node_pairing: Vec<usize>,
    /// Image of arc `a` at index `a`.
    pub arc_pairing: Vec<usize>,
    pub fixed_nodes: Vec<FixedNode>,
    pub fixed_arcs: Vec<FixedArc>,
}

impl FoldingMap {
    /// Structure kind of node `α` if it lies on the axis.
    pub fn fixed_node_kind(&self, alpha: usize) -> Option<StructureKind> {
        self.fixed_nodes
            .iter()
            .find(|f| f.node == alpha)
            .map(|f| f.b)
    }

    /// Sign of arc `a` if it lies on the axis.
    pub fn fixed_arc_sign(&self, a: usize) -> Option<Sign> {
        self.fixed_arcs
            .iter()
            .find(|f| f.arc == a)
            .map(|f| f.epsilon)
    }

    /// Form used to transpose blocks at node `α`: its `B` if fixed, `J`
    /// otherwise.
    pub fn node_form(&self, alpha: usize) -> StructureKind {
        self.fixed_node_kind(alpha).unwrap_or(StructureKind::J)
    }

    /// Arcs whose blocks are kept: `1..s−1` plus the fixed arcs.
    pub fn source_arcs(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (1..self.s).collect();
        v.extend(self.fixed_arcs.iter().map(|f| f.arc));
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Equation class produced by the fold.
    pub fn class(&self) -> EquationClass {
        class_of_pattern(self.pattern)
    }
}

fn node_of_arc_start(p: usize, a: usize) -> usize {
    if a == 0 {
        p
    } else {
        a
    }
}

/// Arc pairing induced by a node pairing: arc `a` (from node `a` to `a+1`)
/// maps to the arc starting at `σ(a + 1)`.
fn arcs_from_nodes(p: usize, sigma: &[usize]) -> Vec<usize> {
    (0..p).map(|a| sigma[a % p] % p).collect()
}

/// Builds the folding map of a pattern on a circle with `p` nodes.
pub fn make_fold(p: usize, pattern: FoldPattern, deco: &FoldDecoration) -> Result<FoldingMap> {
    let s = pattern
        .fold_parameter(p)
        .ok_or_else(|| TodaError::InvalidFold(format!("pattern {pattern} does not fit p = {p}")))?;
    let reflect_arcs = |alpha: usize| p + 1 - alpha;
    let reflect_nodes = |alpha: usize| if alpha == 1 { 1 } else { p + 2 - alpha };
    let (sigma, fixed_nodes, fixed_arcs): (Vec<usize>, Vec<FixedNode>, Vec<FixedArc>) =
        match pattern {
            FoldPattern::EvenArcFixed => (
                (1..=p).map(reflect_arcs).collect(),
                vec![],
                vec![
                    FixedArc {
                        arc: 0,
                        epsilon: deco.eps_first,
                    },
                    FixedArc {
                        arc: s,
                        epsilon: deco.eps_last,
                    },
                ],
            ),
            FoldPattern::EvenNodeFixed => (
                (1..=p).map(reflect_nodes).collect(),
                vec![
                    FixedNode {
                        node: 1,
                        b: deco.b_first,
                    },
                    FixedNode {
                        node: s,
                        b: deco.b_last,
                    },
                ],
                vec![],
            ),
            FoldPattern::OddMixed {
                variant: OddVariant::FixedNodeLast,
            } => (
                (1..=p).map(reflect_arcs).collect(),
                vec![FixedNode {
                    node: s,
                    b: deco.b_last,
                }],
                vec![FixedArc {
                    arc: 0,
                    epsilon: deco.eps_first,
                }],
            ),
            FoldPattern::OddMixed {
                variant: OddVariant::FixedNodeFirst,
            } => (
                (1..=p).map(reflect_nodes).collect(),
                vec![FixedNode {
                    node: 1,
                    b: deco.b_first,
                }],
                vec![FixedArc {
                    arc: s,
                    epsilon: deco.eps_last,
                }],
            ),
        };
    let arc_pairing = arcs_from_nodes(p, &sigma);
    Ok(FoldingMap {
        p,
        s,
        pattern,
        node_pairing: sigma,
        arc_pairing,
        fixed_nodes,
        fixed_arcs,
    })
}

/// Restricts an unfolded general linear system to the constrained subsystem
/// of a fold.
///
/// The arc blocks must already be compatible with the fold: fixed arcs
/// satisfy `^J C = ε C` and mirror arcs are signed mirror images of their
/// partners (the sign is inferred). Block sizes must be symmetric.
pub fn fold_constraints(map: &FoldingMap, unfolded: &TodaSystem) -> Result<TodaSystem> {
    if unfolded.class != EquationClass::GeneralLinear {
        return Err(TodaError::InvalidFold(format!(
            "expected a general linear system, got {}",
            unfolded.class.name()
        )));
    }
    if unfolded.p() != map.p {
        return Err(TodaError::InvalidFold(format!(
            "fold has p = {}, system has p = {}",
            map.p,
            unfolded.p()
        )));
    }
    let scale = unfolded
        .c_plus
        .iter()
        .chain(&unfolded.c_minus)
        .map(|c| c.norm_max())
        .fold(1.0, f64::max);
    let constraints = fold_constraint_set(
        map,
        &unfolded.block_sizes,
        &unfolded.c_plus,
        &unfolded.c_minus,
        unfolded.constraints.det_product_one,
        crate::lie_core::DEFAULT_TOL * scale,
    )?;
    Ok(TodaSystem {
        origin: unfolded.origin.clone(),
        level: unfolded.level,
        block_sizes: unfolded.block_sizes.clone(),
        class: map.class(),
        constraints,
        fold: Some(map.clone()),
        c_plus: unfolded.c_plus.clone(),
        c_minus: unfolded.c_minus.clone(),
    })
}

/// The unfolded general-linear chain with the same blocks and couplings as
/// `system`: every node and arc free, no fold attached.
pub fn unfold(system: &TodaSystem) -> TodaSystem {
    TodaSystem {
        class: EquationClass::GeneralLinear,
        constraints: ConstraintSet::free(system.p(), system.constraints.det_product_one),
        fold: None,
        ..system.clone()
    }
}

/// Node values and their `∂_−` logarithmic derivatives `W = Γ⁻¹∂_−Γ` for all
/// `p` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldState {
    pub gammas: Vec<ComplexMatrix>,
    pub ws: Vec<ComplexMatrix>,
}

/// Step rule used by [`verify_fold_invariance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldStepScheme {
    /// `Γ ← Γ + hΓW`: leaves the group at second order per step.
    Euler,
    /// `Γ ← Γ exp(hW)`: stays on the constraint surface up to rounding.
    Multiplicative,
}

/// Largest violation of the fold constraints by a full state, for both the
/// node values and their derivatives.
pub fn fold_violation(map: &FoldingMap, state: &FoldState) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for alpha in 1..=map.p {
        let g = &state.gammas[alpha - 1];
        let w = &state.ws[alpha - 1];
        if let Some(b) = map.fixed_node_kind(alpha) {
            let bt = structure_transpose(g, b)?;
            worst = worst.max((&bt * g).dist_max(&ComplexMatrix::identity(g.rows())));
            worst = worst.max((&structure_transpose(w, b)? + w).norm_max());
        } else {
            let partner = map.node_pairing[alpha - 1];
            if partner > alpha {
                let gp = &state.gammas[partner - 1];
                let wp = &state.ws[partner - 1];
                worst = worst.max(gp.dist_max(&j_transpose(&g.inverse()?)));
                worst = worst.max((wp + &j_transpose(w)).norm_max());
            }
        }
    }
    Ok(worst)
}

/// Evolves the unfolded system along a diagonal light-cone path from a
/// constrained state and reports the largest fold-constraint violation met.
///
/// Each step advances `W ← W + h·rhs(Γ)` and then `Γ` by the chosen scheme,
/// using all `p` equations of the unfolded chain. The result includes the
/// initial violation, so a broken initial state is reported as such.
pub fn verify_fold_invariance(
    map: &FoldingMap,
    unfolded: &TodaSystem,
    initial: &FoldState,
    steps: usize,
    h: f64,
    scheme: FoldStepScheme,
) -> Result<f64> {
    if unfolded.p() != map.p || unfolded.fold.is_some() {
        return Err(TodaError::InvalidFold(
            "verify_fold_invariance needs the unfolded system with matching p".into(),
        ));
    }
    let mut state = initial.clone();
    let mut worst = fold_violation(map, &state)?;
    for _ in 0..steps {
        let nodes = NodeData::new(&state.gammas)?;
        let rhs = class_rhs(None, map.p, &nodes, &unfolded.c_plus, &unfolded.c_minus)?;
        for (w, r) in state.ws.iter_mut().zip(&rhs) {
            *w += &r.scale_re(h);
        }
        for (g, w) in state.gammas.iter_mut().zip(&state.ws) {
            *g = match scheme {
                FoldStepScheme::Euler => g as &ComplexMatrix + &(&*g * &w.scale_re(h)),
                FoldStepScheme::Multiplicative => &*g * &w.scale_re(h).expm()?,
            };
        }
        worst = worst.max(fold_violation(map, &state)?);
    }
    Ok(worst)
}

/// Odd-fold data in the labeling with node `s` and arc `0` on the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct OddFoldData {
    /// `Γ_1, …, Γ_s`.
    pub gammas: Vec<ComplexMatrix>,
    /// `C_{+0}, …, C_{+(s−1)}`.
    pub c_plus: Vec<ComplexMatrix>,
    /// `C_{−0}, …, C_{−(s−1)}`.
    pub c_minus: Vec<ComplexMatrix>,
}

/// Relabels odd-fold data from the "node `s`, arc `0`" picture to the
/// "node `1`, arc `s`" picture:
/// `Γ'_α = ^J(Γ_{s−α+1}⁻¹)` (`Γ'_1 = Γ_s` on the axis) and
/// `C'_{±α} = ^J C_{±(s−α)}`, where the arcs touching the fixed node are
/// transposed with its `B`.
pub fn odd_fold_substitute(data: &OddFoldData, b: StructureKind) -> Result<OddFoldData> {
    let s = data.gammas.len();
    let mut gammas = Vec::with_capacity(s);
    gammas.push(data.gammas[s - 1].clone());
    for alpha in 2..=s {
        gammas.push(j_transpose(&data.gammas[s - alpha].inverse()?));
    }
    // New arcs 1..s; arc s is the old fixed arc 0. Index 0 is unused by the
    // folded equations and filled with zeros of the right shape.
    let mut c_plus = Vec::with_capacity(s + 1);
    let mut c_minus = Vec::with_capacity(s + 1);
    let z = ComplexMatrix::zeros(gammas[s - 1].rows(), gammas[0].rows());
    c_plus.push(z.clone());
    c_minus.push(z.transpose());
    for alpha in 1..=s {
        let old = s - alpha;
        let (cp, cm) = if alpha == 1 {
            // Touching the fixed node: C'_{+1} = B⁻¹ C_{+(s−1)}ᵗ J, C'_{−1} = J C_{−(s−1)}ᵗ B.
            let bp = form(b, data.gammas[s - 1].rows());
            let bi = form_inv(b, data.gammas[s - 1].rows());
            let jp = crate::lie_core::j_matrix(data.c_plus[old].rows());
            (
                &(&bi * &data.c_plus[old].transpose()) * &jp,
                &(&jp * &data.c_minus[old].transpose()) * &bp,
            )
        } else {
            (
                j_transpose(&data.c_plus[old]),
                j_transpose(&data.c_minus[old]),
            )
        };
        c_plus.push(cp);
        c_minus.push(cm);
    }
    Ok(OddFoldData {
        gammas,
        c_plus,
        c_minus,
    })
}

fn form(kind: StructureKind, n: usize) -> ComplexMatrix {
    match kind {
        StructureKind::Identity => ComplexMatrix::identity(n),
        StructureKind::J => crate::lie_core::j_matrix(n),
        StructureKind::K => crate::lie_core::k_matrix(n),
    }
}

fn form_inv(kind: StructureKind, n: usize) -> ComplexMatrix {
    match kind {
        StructureKind::K => -crate::lie_core::k_matrix(n),
        other => form(other, n),
    }
}

/// Evaluates both labelings of the odd fold and returns the largest
/// deviation between corresponding equations.
///
/// With `rhs` the equations of the "node `s`, arc `0`" picture and `rhs'`
/// those of the substituted "node `1`, arc `s`" picture, the relabeling
/// predicts `rhs'_1 = rhs_s` and `rhs'_α = −^J rhs_{s−α+1}` for `α ≥ 2`.
pub fn odd_fold_equivalence(data: &OddFoldData, b: StructureKind) -> Result<f64> {
    let s = data.gammas.len();
    if s < 2 || data.c_plus.len() < s || data.c_minus.len() < s {
        return Err(TodaError::InvalidFold(
            "odd fold data needs s ≥ 2 nodes and arcs 0..s−1".into(),
        ));
    }
    let p = 2 * s - 1;
    let deco = FoldDecoration {
        b_first: b,
        b_last: b,
        eps_first: Sign::Plus,
        eps_last: Sign::Plus,
    };
    let last = make_fold(
        p,
        FoldPattern::OddMixed {
            variant: OddVariant::FixedNodeLast,
        },
        &deco,
    )?;
    let first = make_fold(
        p,
        FoldPattern::OddMixed {
            variant: OddVariant::FixedNodeFirst,
        },
        &deco,
    )?;
    let pad = |v: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
        let mut out = v.to_vec();
        while out.len() < p {
            out.push(ComplexMatrix::zeros(1, 1));
        }
        out
    };
    let nodes = NodeData::new(&data.gammas)?;
    let rhs = class_rhs(
        Some(&last),
        p,
        &nodes,
        &pad(&data.c_plus),
        &pad(&data.c_minus),
    )?;
    let sub = odd_fold_substitute(data, b)?;
    let sub_nodes = NodeData::new(&sub.gammas)?;
    let rhs_sub = class_rhs(
        Some(&first),
        p,
        &sub_nodes,
        &pad(&sub.c_plus),
        &pad(&sub.c_minus),
    )?;
    let mut worst = rhs_sub[0].dist_max(&rhs[s - 1]);
    for alpha in 2..=s {
        let expected = -j_transpose(&rhs[s - alpha]);
        worst = worst.max(rhs_sub[alpha - 1].dist_max(&expected));
    }
    Ok(worst)
}

/// Node and arc labels of a circle diagram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleDiagram {
    pub p: usize,
    pub nodes: Vec<String>,
    pub arcs: Vec<DiagramArc>,
}

/// One arc of a circle diagram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramArc {
    pub index: usize,
    /// 1-based start node.
    pub from: usize,
    /// 1-based end node.
    pub to: usize,
    pub label: String,
}

impl CircleDiagram {
    /// The diagram of the general linear system with `p` nodes.
    pub fn new(p: usize) -> Self {
        Self {
            p,
            nodes: (1..=p).map(|a| format!("Γ_{a}")).collect(),
            arcs: (0..p)
                .map(|a| DiagramArc {
                    index: a,
                    from: node_of_arc_start(p, a),
                    to: a % p + 1,
                    label: format!("C_±{a}"),
                })
                .collect(),
        }
    }
}

/// JSON description of a folded diagram for documentation.
pub fn diagram_json(map: &FoldingMap) -> serde_json::Value {
    let diagram = CircleDiagram::new(map.p);
    serde_json::json!({
        "diagram": diagram,
        "pattern": map.pattern.to_string(),
        "s": map.s,
        "node_pairing": map.node_pairing,
        "arc_pairing": map.arc_pairing,
        "fixed_nodes": map.fixed_nodes,
        "fixed_arcs": map.fixed_arcs,
    })
}

/// One reflection axis of the circle with `p` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisFold {
    /// Reflection `α ↦ c − α (mod p)` on 0-based node labels.
    pub axis: usize,
    pub fixed_nodes: Vec<usize>,
    pub fixed_arcs: Vec<usize>,
    /// Pattern of the axis when its fixed-point counts match one.
    pub pattern: Option<FoldPattern>,
    /// Rotation `t` such that relabeling `α ↦ α + t` turns the axis into the
    /// canonical fold of its pattern.
    pub rotation_to_canonical: Option<usize>,
}

/// Enumerates all `p` reflection axes of the circle, classifies their fixed
/// points and finds the rotation that brings each onto a canonical fold.
pub fn enumerate_fold_axes(p: usize) -> Vec<AxisFold> {
    let canonical: Vec<FoldingMap> = [
        FoldPattern::EvenArcFixed,
        FoldPattern::EvenNodeFixed,
        FoldPattern::OddMixed {
            variant: OddVariant::FixedNodeLast,
        },
        FoldPattern::OddMixed {
            variant: OddVariant::FixedNodeFirst,
        },
    ]
    .into_iter()
    .filter_map(|pat| make_fold(p, pat, &FoldDecoration::orthogonal()).ok())
    .collect();
    (0..p)
        .map(|c| {
            // 0-based node x ↦ c − x; arc a (from node a−1 to a, 0-based
            // a−1 ≡ p−1 for a = 0) ↦ arc starting at c − a.
            let refl = |x: usize| (c + p - x % p) % p;
            let fixed_nodes: Vec<usize> = (0..p).filter(|&x| refl(x) == x).map(|x| x + 1).collect();
            // arc a joins 0-based nodes (a + p − 1) % p and a % p.
            let arc_image = |a: usize| (refl(a % p) + 1) % p;
            let fixed_arcs: Vec<usize> = (0..p).filter(|&a| arc_image(a) == a).collect();
            let pattern = match (fixed_nodes.len(), fixed_arcs.len()) {
                (0, 2) => Some(FoldPattern::EvenArcFixed),
                (2, 0) => Some(FoldPattern::EvenNodeFixed),
                (1, 1) => Some(FoldPattern::OddMixed {
                    variant: OddVariant::FixedNodeLast,
                }),
                _ => None,
            };
            let rotation_to_canonical = pattern.and_then(|pat| {
                let target = canonical.iter().find(|m| m.pattern == pat)?;
                (0..p).find(|&t| {
                    (0..p).all(|x| {
                        // relabel node x as (x + t) % p; conjugate reflection.
                        let y = (x + t) % p;
                        let image = (refl(x) + t) % p;
                        target.node_pairing[y] == image + 1
                    })
                })
            });
            AxisFold {
                axis: c,
                fixed_nodes,
                fixed_arcs,
                pattern,
                rotation_to_canonical,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::StructureKind::{J, K};

    #[test]
    fn even_arc_fold_at_s1() {
        let m = make_fold(2, FoldPattern::EvenArcFixed, &FoldDecoration::orthogonal()).unwrap();
        assert_eq!(m.s, 1);
        assert_eq!(m.node_pairing, vec![2, 1]);
        assert_eq!(m.arc_pairing, vec![0, 1]);
        assert_eq!(m.fixed_arcs.len(), 2);
        assert!(m.fixed_nodes.is_empty());
    }

    #[test]
    fn odd_fold_at_p3() {
        let m = make_fold(
            3,
            FoldPattern::OddMixed {
                variant: OddVariant::FixedNodeLast,
            },
            &FoldDecoration::orthogonal(),
        )
        .unwrap();
        assert_eq!(m.s, 2);
        assert_eq!(m.fixed_nodes, vec![FixedNode { node: 2, b: J }]);
        assert_eq!(
            m.fixed_arcs,
            vec![FixedArc {
                arc: 0,
                epsilon: Sign::Minus
            }]
        );
        assert_eq!(m.node_pairing, vec![3, 2, 1]);
    }

    #[test]
    fn double_node_fold_at_p2() {
        let m = make_fold(2, FoldPattern::EvenNodeFixed, &FoldDecoration::symplectic()).unwrap();
        assert_eq!(m.s, 2);
        assert_eq!(m.node_pairing, vec![1, 2]);
        assert_eq!(
            m.fixed_nodes,
            vec![FixedNode { node: 1, b: K }, FixedNode { node: 2, b: K }]
        );
        assert_eq!(m.arc_pairing, vec![1, 0]);
    }

    #[test]
    fn parity_mismatch_is_an_error() {
        assert!(make_fold(3, FoldPattern::EvenArcFixed, &FoldDecoration::orthogonal()).is_err());
        assert!(make_fold(
            4,
            FoldPattern::OddMixed {
                variant: OddVariant::FixedNodeFirst
            },
            &FoldDecoration::orthogonal()
        )
        .is_err());
    }

    #[test]
    fn pairings_are_involutions_and_sources_cover_all_arcs() {
        for p in 2..=8 {
            for pat in [
                FoldPattern::EvenArcFixed,
                FoldPattern::EvenNodeFixed,
                FoldPattern::OddMixed {
                    variant: OddVariant::FixedNodeLast,
                },
                FoldPattern::OddMixed {
                    variant: OddVariant::FixedNodeFirst,
                },
            ] {
                let Ok(m) = make_fold(p, pat, &FoldDecoration::orthogonal()) else {
                    continue;
                };
                for a in 1..=p {
                    assert_eq!(m.node_pairing[m.node_pairing[a - 1] - 1], a);
                }
                for a in 0..p {
                    assert_eq!(m.arc_pairing[m.arc_pairing[a]], a);
                }
                let mut covered: Vec<usize> = m
                    .source_arcs()
                    .iter()
                    .flat_map(|&a| [a, m.arc_pairing[a]])
                    .collect();
                covered.sort_unstable();
                covered.dedup();
                assert_eq!(covered, (0..p).collect::<Vec<_>>(), "{pat} p={p}");
                let fixed_nodes = (1..=p).filter(|&a| m.node_pairing[a - 1] == a).count();
                let fixed_arcs = (0..p).filter(|&a| m.arc_pairing[a] == a).count();
                assert_eq!((fixed_nodes, fixed_arcs), pat.fixed_counts());
            }
        }
    }

    #[test]
    fn axes_have_three_shapes() {
        for p in 2..=8 {
            for axis in enumerate_fold_axes(p) {
                assert!(axis.pattern.is_some());
                assert!(
                    axis.rotation_to_canonical.is_some(),
                    "p={p} axis={}",
                    axis.axis
                );
            }
        }
    }

    #[test]
    fn diagram_export_lists_pairings() {
        let m = make_fold(4, FoldPattern::EvenArcFixed, &FoldDecoration::orthogonal()).unwrap();
        let v = diagram_json(&m);
        assert_eq!(v["node_pairing"], serde_json::json!([4, 3, 2, 1]));
        assert_eq!(v["diagram"]["arcs"][0]["from"], 4);
    }
}
