//! Finite-order automorphisms of the classical Lie algebras and the
//! `Z_M`-gradations they induce.
//!
//! A gradation is described up to conjugation by a [`GradationSpec`]: the block
//! partition `n_1, …, n_p`, the gaps `k_1, …, k_{p−1}` between consecutive
//! exponents and the order `M`. From it we build the diagonal element `h`, the
//! automorphism (inner `x ↦ h x h⁻¹` or outer `x ↦ −h ^B x h⁻¹`), the grading
//! projectors and the block grading-index tables.

use std::f64::consts::PI;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::lie_core::{
    b_transpose, c64, j_matrix, k_matrix, AlgebraFamily, ComplexMatrix, FamilyKind, C64,
};

/// The kind of gradation described by a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GradationType {
    /// `A = id`: a single block, everything has grade zero.
    #[serde(rename = "trivial")]
    Trivial,
    /// Inner automorphism of gl/sl.
    #[serde(rename = "gl_inner")]
    GlInner,
    /// so/sp, blocks paired as `α ↔ p + 1 − α`.
    #[serde(rename = "sosp_I")]
    SoSpTypeI,
    /// so/sp, first block self-paired and `α ↔ p + 2 − α` for the rest.
    #[serde(rename = "sosp_II")]
    SoSpTypeII,
    /// Outer automorphism of gl/sl built on `K_n`.
    #[serde(rename = "gl_outer_II")]
    GlOuterII,
    /// Outer automorphism of gl/sl built on `diag(J_{n_1}, K_{n−n_1})`.
    #[serde(rename = "gl_outer_III")]
    GlOuterIII,
}

impl GradationType {
    /// Identifier used in file formats.
    pub fn name(self) -> &'static str {
        match self {
            GradationType::Trivial => "trivial",
            GradationType::GlInner => "gl_inner",
            GradationType::SoSpTypeI => "sosp_I",
            GradationType::SoSpTypeII => "sosp_II",
            GradationType::GlOuterII => "gl_outer_II",
            GradationType::GlOuterIII => "gl_outer_III",
        }
    }

    /// True for the outer gl types.
    pub fn is_outer(self) -> bool {
        matches!(self, GradationType::GlOuterII | GradationType::GlOuterIII)
    }
}

impl fmt::Display for GradationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Half-integer shift of the exponents used when the parity of the free
/// exponent forces it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum PhaseOffset {
    #[default]
    Zero,
    Half,
}

impl PhaseOffset {
    /// Numeric value, `0` or `1/2`.
    pub fn value(self) -> f64 {
        match self {
            PhaseOffset::Zero => 0.0,
            PhaseOffset::Half => 0.5,
        }
    }

    fn from_parity(odd: bool) -> Self {
        if odd {
            PhaseOffset::Half
        } else {
            PhaseOffset::Zero
        }
    }
}

impl Serialize for PhaseOffset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PhaseOffset::Zero => s.serialize_u8(0),
            PhaseOffset::Half => s.serialize_f64(0.5),
        }
    }
}

impl<'de> Deserialize<'de> for PhaseOffset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v == 0.0 {
            Ok(PhaseOffset::Zero)
        } else if v == 0.5 {
            Ok(PhaseOffset::Half)
        } else {
            Err(de::Error::custom(format!(
                "phase_offset must be 0 or 0.5, got {v}"
            )))
        }
    }
}

/// Combinatorial data of a `Z_M`-gradation, unique up to conjugation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GradationSpec {
    pub family: FamilyKind,
    pub n: usize,
    #[serde(rename = "type")]
    pub gradation_type: GradationType,
    /// Order of the automorphism. For outer types this is `2N`.
    #[serde(rename = "M")]
    pub order: u32,
    pub n_list: Vec<usize>,
    pub k_list: Vec<u32>,
    #[serde(default)]
    pub phase_offset: PhaseOffset,
}

/// A violated constraint, named so that reports are machine-checkable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.constraint, self.detail)
    }
}

impl GradationSpec {
    /// Builds a spec, deriving the phase offset from the parity rule of the
    /// type (types I and outer II), and zero otherwise.
    pub fn new(
        family: FamilyKind,
        gradation_type: GradationType,
        order: u32,
        n_list: Vec<usize>,
        k_list: Vec<u32>,
    ) -> Self {
        let n = n_list.iter().sum();
        let mut spec = Self {
            family,
            n,
            gradation_type,
            order,
            n_list,
            k_list,
            phase_offset: PhaseOffset::Zero,
        };
        spec.phase_offset = spec.expected_phase();
        spec
    }

    /// The trivial gradation (`A = id`) of a family.
    pub fn trivial(family: FamilyKind, n: usize, order: u32) -> Self {
        Self {
            family,
            n,
            gradation_type: GradationType::Trivial,
            order,
            n_list: vec![n],
            k_list: vec![],
            phase_offset: PhaseOffset::Zero,
        }
    }

    /// Parses a spec from JSON.
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Serializes the spec to compact JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialization cannot fail")
    }

    /// Number of blocks.
    pub fn p(&self) -> usize {
        self.n_list.len()
    }

    /// `N = M/2` for outer types, `M` otherwise.
    pub fn half_order(&self) -> u32 {
        if self.gradation_type.is_outer() {
            self.order / 2
        } else {
            self.order
        }
    }

    /// The algebra the gradation lives in.
    pub fn algebra(&self) -> Result<AlgebraFamily> {
        AlgebraFamily::new(self.family, self.n)
    }

    /// Sum of the gaps.
    pub fn k_sum(&self) -> u32 {
        self.k_list.iter().sum()
    }

    /// Block offsets: `offsets[α]` is the first row of block `α` (0-based),
    /// with a trailing entry equal to `n`.
    pub fn offsets(&self) -> Vec<usize> {
        block_offsets(&self.n_list)
    }

    /// Phase offset implied by the parity of the free exponent.
    pub fn expected_phase(&self) -> PhaseOffset {
        match self.gradation_type {
            GradationType::SoSpTypeI => {
                PhaseOffset::from_parity((self.order as i64 - self.k_sum() as i64) % 2 != 0)
            }
            GradationType::GlOuterII => {
                PhaseOffset::from_parity((self.half_order() as i64 - self.k_sum() as i64) % 2 != 0)
            }
            _ => PhaseOffset::Zero,
        }
    }

    /// The middle block index (0-based) that is its own mirror image, if any.
    fn self_paired_middle(&self) -> Option<usize> {
        let p = self.p();
        match self.gradation_type {
            GradationType::SoSpTypeI | GradationType::GlOuterII => (p % 2 == 1).then_some(p / 2),
            GradationType::SoSpTypeII | GradationType::GlOuterIII => {
                p.is_multiple_of(2).then_some(p / 2)
            }
            _ => None,
        }
    }
}

/// Row offsets of a block partition, with a trailing total.
pub fn block_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    out.push(0);
    for s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

/// Checks every constraint of the claimed gradation type.
///
/// Returns one [`Violation`] per failed constraint; an empty list means the
/// spec defines a gradation of its type.
pub fn validate_spec(spec: &GradationSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut push =
        |constraint: &'static str, detail: String| v.push(Violation { constraint, detail });
    let p = spec.p();
    let m = spec.order;
    let ty = spec.gradation_type;

    if m == 0 {
        push("order_positive", "M must be positive".into());
    }
    if spec.n == 0 {
        push("n_positive", "n must be positive".into());
    }
    if p == 0 {
        push("p_range", "n_list must not be empty".into());
        return v;
    }
    if spec.n_list.contains(&0) {
        push(
            "n_positive",
            format!("block sizes must be positive: {:?}", spec.n_list),
        );
    }
    let n_sum: usize = spec.n_list.iter().sum();
    if n_sum != spec.n {
        push(
            "n_sum",
            format!("sum of n_list is {n_sum}, expected n = {}", spec.n),
        );
    }
    if spec.k_list.len() + 1 != p {
        push(
            "k_length",
            format!(
                "k_list has {} entries, expected p − 1 = {}",
                spec.k_list.len(),
                p - 1
            ),
        );
        return v;
    }
    if spec.k_list.contains(&0) {
        push(
            "k_positive",
            format!("gaps must be positive: {:?}", spec.k_list),
        );
    }
    if spec.family == FamilyKind::Sp && !spec.n.is_multiple_of(2) {
        push("sp_even_n", format!("sp_n requires even n, got {}", spec.n));
    }

    let family_ok = match ty {
        GradationType::Trivial => true,
        GradationType::GlInner | GradationType::GlOuterII | GradationType::GlOuterIII => {
            matches!(spec.family, FamilyKind::Gl | FamilyKind::Sl)
        }
        GradationType::SoSpTypeI | GradationType::SoSpTypeII => spec.family.is_orthosymplectic(),
    };
    if !family_ok {
        push(
            "type_family",
            format!("type {} is not defined for family {}", ty, spec.family),
        );
    }

    if ty == GradationType::Trivial {
        if p != 1 {
            push(
                "trivial_shape",
                format!("trivial gradation has p = 1, got {p}"),
            );
        }
    } else if p < 2 || p > spec.n.max(1) {
        push(
            "p_range",
            format!("need 2 ≤ p ≤ n, got p = {p}, n = {}", spec.n),
        );
    }

    if spec.phase_offset != spec.expected_phase() {
        push(
            "phase_parity",
            format!(
                "phase_offset must be {} for these gaps",
                spec.expected_phase().value()
            ),
        );
    }

    let k_sum = spec.k_sum();
    let n_list = &spec.n_list;
    let k_list = &spec.k_list;
    let mirror_i = |push: &mut dyn FnMut(&'static str, String)| {
        if (0..p).any(|a| n_list[a] != n_list[p - 1 - a]) {
            push(
                "n_palindrome",
                format!("n_list {n_list:?} is not a palindrome"),
            );
        }
        if (0..p - 1).any(|a| k_list[a] != k_list[p - 2 - a]) {
            push(
                "k_palindrome",
                format!("k_list {k_list:?} is not a palindrome"),
            );
        }
    };
    let mirror_ii = |push: &mut dyn FnMut(&'static str, String)| {
        // n_{p−α+2} = n_α for α ≥ 2 and k_{p−α+1} = k_α for α ≥ 2 (1-based).
        if (1..p).any(|a| n_list[a] != n_list[p - a]) {
            push(
                "n_mirror",
                format!("n_2..n_p of {n_list:?} are not a palindrome"),
            );
        }
        if p >= 3 && (1..p - 1).any(|a| k_list[a] != k_list[p - 1 - a]) {
            push(
                "k_mirror",
                format!("k_2..k_(p−1) of {k_list:?} are not a palindrome"),
            );
        }
    };

    match ty {
        GradationType::Trivial => {}
        GradationType::GlInner => {
            if k_sum >= m {
                push("k_sum_bound", format!("Σk = {k_sum} must be < M = {m}"));
            }
        }
        GradationType::SoSpTypeI => {
            if k_sum >= m {
                push("k_sum_bound", format!("Σk = {k_sum} must be < M = {m}"));
            }
            mirror_i(&mut push);
        }
        GradationType::SoSpTypeII => {
            if !p.is_multiple_of(2) {
                push("p_even", format!("type II needs even p, got {p}"));
            }
            if !m.is_multiple_of(2) {
                push("order_even", format!("type II needs even M, got {m}"));
            }
            if k_sum + k_list[0] != m {
                push(
                    "k_sum_closure",
                    format!("Σk + k_1 = {} must equal M = {m}", k_sum + k_list[0]),
                );
            }
            mirror_ii(&mut push);
        }
        GradationType::GlOuterII => {
            if !m.is_multiple_of(2) {
                push(
                    "order_even",
                    format!("outer gradations need even M = 2N, got {m}"),
                );
            }
            if k_sum >= m / 2 {
                push(
                    "k_sum_bound",
                    format!("Σk = {k_sum} must be < N = {}", m / 2),
                );
            }
            if !spec.n.is_multiple_of(2) {
                push("outer_even_n", format!("K_n needs even n, got {}", spec.n));
            }
            mirror_i(&mut push);
        }
        GradationType::GlOuterIII => {
            if !m.is_multiple_of(2) {
                push(
                    "order_even",
                    format!("outer gradations need even M = 2N, got {m}"),
                );
            }
            if k_sum + k_list[0] != m / 2 {
                push(
                    "k_sum_closure",
                    format!("Σk + k_1 = {} must equal N = {}", k_sum + k_list[0], m / 2),
                );
            }
            if !(spec.n - n_list[0].min(spec.n)).is_multiple_of(2) {
                push(
                    "outer_tail_even",
                    format!(
                        "n − n_1 = {} must be even",
                        spec.n.saturating_sub(n_list[0])
                    ),
                );
            }
            mirror_ii(&mut push);
        }
    }

    let symplectic_like = spec.family == FamilyKind::Sp || ty == GradationType::GlOuterII;
    if symplectic_like || ty == GradationType::GlOuterIII {
        if let Some(s) = spec.self_paired_middle() {
            if !n_list[s].is_multiple_of(2) {
                push(
                    "middle_block_even",
                    format!("self-paired block n_{} = {} must be even", s + 1, n_list[s]),
                );
            }
        }
    }
    if spec.family == FamilyKind::Sp
        && ty == GradationType::SoSpTypeII
        && !n_list[0].is_multiple_of(2)
    {
        push(
            "first_block_even",
            format!("n_1 = {} must be even", n_list[0]),
        );
    }
    v
}

fn require_valid(spec: &GradationSpec) -> Result<()> {
    let v = validate_spec(spec);
    if v.is_empty() {
        Ok(())
    } else {
        let msg: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        Err(TodaError::InvalidSpec(msg.join("; ")))
    }
}

/// Exponents `m_1 > … > m_p` with `m_α = Σ_{β ≥ α} k_β + m_p`.
///
/// The free exponent `m_p` is fixed per type: 1 for inner gl, the parity
/// choice for type I and outer II, `k_1` for type II and `k_1 + N` for outer
/// III (so that `μ_1 = 1`). The trivial gradation has `m = (M)`.
pub fn compute_m(spec: &GradationSpec) -> Result<Vec<i64>> {
    require_valid(spec)?;
    let k_sum = spec.k_sum() as i64;
    let m_p: i64 = match spec.gradation_type {
        GradationType::Trivial => spec.order as i64,
        GradationType::GlInner => 1,
        GradationType::SoSpTypeI | GradationType::GlOuterII => {
            let base = spec.half_order() as i64 - k_sum;
            (base + base.rem_euclid(2)) / 2
        }
        GradationType::SoSpTypeII => spec.k_list[0] as i64,
        GradationType::GlOuterIII => spec.k_list[0] as i64 + spec.half_order() as i64,
    };
    let p = spec.p();
    let mut m = vec![0i64; p];
    m[p - 1] = m_p;
    for a in (0..p - 1).rev() {
        m[a] = m[a + 1] + spec.k_list[a] as i64;
    }
    Ok(m)
}

/// Per-block phases `μ_α` of `h`.
///
/// `μ_α = exp(2πi(m_α − φ)/M)` with `φ` the phase offset; the half shift is
/// applied with a minus sign so that mirror blocks satisfy `μ_α μ_{α'} = 1`
/// exactly (the opposite sign only multiplies `h` by a scalar and gives the
/// same automorphism).
pub fn block_phases(spec: &GradationSpec) -> Result<Vec<C64>> {
    let m = compute_m(spec)?;
    let order = spec.order as f64;
    let shift = spec.phase_offset.value();
    Ok(m.iter()
        .map(|&ma| C64::from_polar(1.0, 2.0 * PI * (ma as f64 - shift) / order))
        .collect())
}

/// The diagonal element `h = diag(μ_1 I_{n_1}, …, μ_p I_{n_p})`.
pub fn build_h(spec: &GradationSpec) -> Result<ComplexMatrix> {
    let mu = block_phases(spec)?;
    let mut diag = Vec::with_capacity(spec.n);
    for (a, &na) in spec.n_list.iter().enumerate() {
        diag.extend(std::iter::repeat_n(mu[a], na));
    }
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// Structure matrix `B` entering an outer automorphism, or the ambient form of
/// an orthogonal/symplectic gradation.
pub fn structure_for(spec: &GradationSpec) -> Option<ComplexMatrix> {
    let n = spec.n;
    let n1 = spec.n_list.first().copied().unwrap_or(0);
    match (spec.gradation_type, spec.family) {
        (GradationType::GlOuterII, _) => Some(k_matrix(n)),
        (GradationType::GlOuterIII, _) => Some(ComplexMatrix::block_diagonal(&[
            j_matrix(n1),
            k_matrix(n - n1),
        ])),
        (GradationType::SoSpTypeII, FamilyKind::So) => Some(ComplexMatrix::block_diagonal(&[
            j_matrix(n1),
            j_matrix(n - n1),
        ])),
        (GradationType::SoSpTypeII, FamilyKind::Sp) => Some(ComplexMatrix::block_diagonal(&[
            k_matrix(n1),
            k_matrix(n - n1),
        ])),
        (_, FamilyKind::So) => Some(j_matrix(n)),
        (_, FamilyKind::Sp) => Some(k_matrix(n)),
        _ => None,
    }
}

/// Inner or outer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutomorphismKind {
    Inner,
    Outer,
}

/// A finite-order automorphism `x ↦ h x h⁻¹` or `x ↦ −h ^B x h⁻¹` with
/// diagonal `h`.
#[derive(Debug, Clone)]
pub struct Automorphism {
    pub kind: AutomorphismKind,
    /// Diagonal of `h`.
    pub h_diag: Vec<C64>,
    /// Structure matrix (outer only).
    pub b: Option<ComplexMatrix>,
    b_inv: Option<ComplexMatrix>,
    /// Order `M`.
    pub order: u32,
}

impl Automorphism {
    /// An inner automorphism with diagonal `h`.
    pub fn inner(h_diag: Vec<C64>, order: u32) -> Self {
        Self {
            kind: AutomorphismKind::Inner,
            h_diag,
            b: None,
            b_inv: None,
            order,
        }
    }

    /// An outer automorphism with diagonal `h` and structure `B`.
    pub fn outer(h_diag: Vec<C64>, b: ComplexMatrix, order: u32) -> Result<Self> {
        let b_inv = b
            .inverse()
            .map_err(|_| TodaError::InvalidStructure("B is singular".into()))?;
        if b.rows() != h_diag.len() {
            return Err(TodaError::ShapeMismatch {
                op: "outer automorphism",
                left: b.shape(),
                right: (h_diag.len(), h_diag.len()),
            });
        }
        Ok(Self {
            kind: AutomorphismKind::Outer,
            h_diag,
            b: Some(b),
            b_inv: Some(b_inv),
            order,
        })
    }

    /// The outer automorphism `x ↦ −^J x` of order two (`h = I`, `B = J_n`).
    pub fn outer_simplest(n: usize) -> Self {
        Self::outer(vec![c64(1.0, 0.0); n], j_matrix(n), 2).expect("J_n is invertible")
    }

    /// The automorphism generating the gradation of a spec.
    pub fn from_spec(spec: &GradationSpec) -> Result<Self> {
        let h = block_phases(spec)?;
        let mut diag = Vec::with_capacity(spec.n);
        for (a, &na) in spec.n_list.iter().enumerate() {
            diag.extend(std::iter::repeat_n(h[a], na));
        }
        if spec.gradation_type.is_outer() {
            let b = structure_for(spec).expect("outer types carry B");
            Self::outer(diag, b, spec.order)
        } else {
            Ok(Self::inner(diag, spec.order))
        }
    }

    /// Dimension of the underlying matrices.
    pub fn dim(&self) -> usize {
        self.h_diag.len()
    }

    /// The matrix `h`.
    pub fn h(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.h_diag)
    }

    /// Applies the automorphism once.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim();
        if x.shape() != (n, n) {
            return Err(TodaError::ShapeMismatch {
                op: "apply_automorphism",
                left: x.shape(),
                right: (n, n),
            });
        }
        let base = match self.kind {
            AutomorphismKind::Inner => x.clone(),
            AutomorphismKind::Outer => {
                let b = self.b.as_ref().expect("outer has B");
                let b_inv = self.b_inv.as_ref().expect("outer has B⁻¹");
                -(&(b_inv * &x.transpose()) * b)
            }
        };
        let h = &self.h_diag;
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            base[(i, j)] * h[i] / h[j]
        }))
    }

    /// Applies the automorphism `j` times.
    pub fn apply_power(&self, x: &ComplexMatrix, j: u32) -> Result<ComplexMatrix> {
        let mut y = x.clone();
        for _ in 0..j {
            y = self.apply(&y)?;
        }
        Ok(y)
    }
}

/// Applies an automorphism to a matrix.
pub fn apply_automorphism(aut: &Automorphism, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    aut.apply(x)
}

/// The grading projector
/// `P_k(x) = (1/M) Σ_j e^{−2πijk/M} A^j(x)`.
///
/// `k` is reduced modulo `M`.
pub fn grading_component(x: &ComplexMatrix, k: i64, aut: &Automorphism) -> Result<ComplexMatrix> {
    let m = aut.order as i64;
    let k = k.rem_euclid(m);
    let mut acc = ComplexMatrix::zeros(x.rows(), x.cols());
    let mut power = x.clone();
    for j in 0..m {
        let w = C64::from_polar(1.0, -2.0 * PI * ((j * k) % m) as f64 / m as f64);
        acc += &power.scale(w);
        if j + 1 < m {
            power = aut.apply(&power)?;
        }
    }
    Ok(acc.scale_re(1.0 / m as f64))
}

/// All grading components `P_0(x), …, P_{M−1}(x)` computed with one pass over
/// the powers of the automorphism.
pub fn grading_components(x: &ComplexMatrix, aut: &Automorphism) -> Result<Vec<ComplexMatrix>> {
    let m = aut.order as usize;
    let mut powers = Vec::with_capacity(m);
    powers.push(x.clone());
    for j in 1..m {
        let next = aut.apply(&powers[j - 1])?;
        powers.push(next);
    }
    Ok((0..m)
        .map(|k| {
            let mut acc = ComplexMatrix::zeros(x.rows(), x.cols());
            for (j, pw) in powers.iter().enumerate() {
                let w = C64::from_polar(1.0, -2.0 * PI * ((j * k) % m) as f64 / m as f64);
                acc += &pw.scale(w);
            }
            acc.scale_re(1.0 / m as f64)
        })
        .collect())
}

/// Symmetry selecting one member of an outer block's index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockSymmetry {
    /// `x_{αβ} = −(^B x)_{αβ}`.
    Antisymmetric,
    /// `x_{αβ} = +(^B x)_{αβ}`.
    Symmetric,
}

/// Block grading indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GradingIndexTable {
    /// One residue in `[0, M)` per block.
    Inner {
        modulus: u32,
        entries: Vec<Vec<u32>>,
    },
    /// A base residue `e ∈ [0, 2N)` per block; the block carries the pair
    /// `{e, e + N}` with the symmetry rule of [`GradingIndexTable::symmetry`].
    Outer { half: u32, entries: Vec<Vec<u32>> },
}

impl GradingIndexTable {
    /// Number of blocks.
    pub fn p(&self) -> usize {
        match self {
            GradingIndexTable::Inner { entries, .. } | GradingIndexTable::Outer { entries, .. } => {
                entries.len()
            }
        }
    }

    /// Modulus of the residues (`M`, or `2N` for outer tables).
    pub fn modulus(&self) -> u32 {
        match self {
            GradingIndexTable::Inner { modulus, .. } => *modulus,
            GradingIndexTable::Outer { half, .. } => 2 * half,
        }
    }

    /// Residues carried by block `(α, β)` (0-based), sorted.
    pub fn indices(&self, a: usize, b: usize) -> Vec<u32> {
        match self {
            GradingIndexTable::Inner { entries, .. } => vec![entries[a][b]],
            GradingIndexTable::Outer { half, entries } => {
                let e = entries[a][b];
                let mut v = vec![e, (e + half) % (2 * half)];
                v.sort_unstable();
                v
            }
        }
    }

    /// True when grade `k` may occur in block `(α, β)`.
    pub fn allows(&self, a: usize, b: usize, k: i64) -> bool {
        let k = k.rem_euclid(self.modulus() as i64) as u32;
        self.indices(a, b).contains(&k)
    }

    /// For outer tables, the symmetry of the grade-`k` part of block
    /// `(α, β)`: for `k ∈ [0, N)` blocks on or above the diagonal are
    /// antisymmetric and blocks below it symmetric; for `k ∈ [N, 2N)` the rule
    /// is reversed. Inner tables return `None`.
    pub fn symmetry(&self, a: usize, b: usize, k: u32) -> Option<BlockSymmetry> {
        match self {
            GradingIndexTable::Inner { .. } => None,
            GradingIndexTable::Outer { half, .. } => {
                let upper = a <= b;
                let low_range = k % (2 * half) < *half;
                Some(if upper == low_range {
                    BlockSymmetry::Antisymmetric
                } else {
                    BlockSymmetry::Symmetric
                })
            }
        }
    }
}

impl GradingIndexTable {
    /// Block array of residues in LaTeX: one `[e]_M` per block, or for outer
    /// tables the pair `[e]_{2N}` over `[e + N]_{2N}`.
    pub fn to_latex(&self) -> String {
        let p = self.p();
        let m = self.modulus();
        let cols = vec!["c"; p].join("|");
        let mut out = format!("\\left( \\begin{{array}}{{{cols}}}\n");
        let rows: Vec<String> = (0..p)
            .map(|a| {
                let line = |pick: usize| -> String {
                    (0..p)
                        .map(|b| format!("[{}]_{{{m}}}", self.indices_unsorted(a, b)[pick]))
                        .collect::<Vec<_>>()
                        .join(" & ")
                };
                match self {
                    GradingIndexTable::Inner { .. } => line(0),
                    GradingIndexTable::Outer { .. } => format!("{} \\\\\n{}", line(0), line(1)),
                }
            })
            .collect();
        out.push_str(&rows.join(" \\\\ \\hline\n"));
        out.push_str("\n\\end{array} \\right)\n");
        out
    }

    /// Residues of block `(α, β)` with the base residue first.
    fn indices_unsorted(&self, a: usize, b: usize) -> Vec<u32> {
        match self {
            GradingIndexTable::Inner { entries, .. } => vec![entries[a][b]],
            GradingIndexTable::Outer { half, entries } => {
                let e = entries[a][b];
                vec![e, (e + half) % (2 * half)]
            }
        }
    }
}

/// The canonical block grading-index table of a spec.
///
/// Entry `(α, β)` is `[Σ_{γ=α}^{β−1} k_γ]` above the diagonal, its negative
/// below, and `[0]` on the diagonal; residues are taken modulo `M` (inner) or
/// `2N` (outer, where each block carries the pair `{e, e + N}`).
pub fn block_index_table(spec: &GradationSpec) -> Result<GradingIndexTable> {
    require_valid(spec)?;
    let p = spec.p();
    let modulus = spec.order as i64;
    let prefix: Vec<i64> = std::iter::once(0)
        .chain(spec.k_list.iter().scan(0i64, |acc, &k| {
            *acc += k as i64;
            Some(*acc)
        }))
        .collect();
    let entries: Vec<Vec<u32>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| (prefix[b] - prefix[a]).rem_euclid(modulus) as u32)
                .collect()
        })
        .collect();
    Ok(if spec.gradation_type.is_outer() {
        GradingIndexTable::Outer {
            half: spec.order / 2,
            entries,
        }
    } else {
        GradingIndexTable::Inner {
            modulus: spec.order,
            entries,
        }
    })
}

/// Default cap on enumeration candidates.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of `(n_list, k_list)` candidates examined by [`enumerate_specs`]
/// (compositions of `n` times gap tuples with sum at most `M`).
pub fn enumeration_size(n: usize, order: u32) -> usize {
    (2..=n).fold(1usize, |acc, p| {
        acc.saturating_add(binomial(n - 1, p - 1).saturating_mul(binomial(order as usize, p - 1)))
    })
}

fn compositions(n: usize, parts: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if parts == 0 {
        if n == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for first in 1..=n.saturating_sub(parts - 1) {
        cur.push(first);
        compositions(n - first, parts - 1, out, cur);
        cur.pop();
    }
}

fn gap_tuples(len: usize, max_sum: u32, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>) {
    if len == 0 {
        out.push(cur.clone());
        return;
    }
    let reserve = (len - 1) as u32;
    if max_sum < reserve + 1 {
        return;
    }
    for k in 1..=max_sum - reserve {
        cur.push(k);
        gap_tuples(len - 1, max_sum - k, out, cur);
        cur.pop();
    }
}

/// Every valid gradation spec of `family` on `C^n` with order `M`, including
/// the trivial one, sorted by `(p, n_list, k_list, type)`.
///
/// Fails with [`TodaError::CapExceeded`] when more than `cap` candidates would
/// have to be examined.
pub fn enumerate_specs(
    family: FamilyKind,
    n: usize,
    order: u32,
    cap: usize,
) -> Result<Vec<GradationSpec>> {
    AlgebraFamily::new(family, n)?;
    if order == 0 {
        return Err(TodaError::InvalidSpec("M must be positive".into()));
    }
    let size = enumeration_size(n, order);
    if size > cap {
        return Err(TodaError::CapExceeded { cap });
    }
    let types: &[GradationType] = if family.is_orthosymplectic() {
        &[GradationType::SoSpTypeI, GradationType::SoSpTypeII]
    } else {
        &[
            GradationType::GlInner,
            GradationType::GlOuterII,
            GradationType::GlOuterIII,
        ]
    };
    let mut specs = vec![GradationSpec::trivial(family, n, order)];
    for p in 2..=n {
        let mut ns = Vec::new();
        compositions(n, p, &mut ns, &mut Vec::new());
        let mut ks = Vec::new();
        gap_tuples(p - 1, order, &mut ks, &mut Vec::new());
        for n_list in &ns {
            for k_list in &ks {
                for &ty in types {
                    let spec =
                        GradationSpec::new(family, ty, order, n_list.clone(), k_list.clone());
                    if validate_spec(&spec).is_empty() {
                        specs.push(spec);
                    }
                }
            }
        }
    }
    specs.sort_by(|a, b| {
        (a.p(), &a.n_list, &a.k_list, a.gradation_type).cmp(&(
            b.p(),
            &b.n_list,
            &b.k_list,
            b.gradation_type,
        ))
    });
    specs.dedup();
    Ok(specs)
}

/// Projects `x` onto the algebra of the spec: antisymmetrization for so/sp
/// (with the spec's ambient form), trace removal for sl, identity for gl.
pub fn project_to_algebra(x: &ComplexMatrix, spec: &GradationSpec) -> Result<ComplexMatrix> {
    match spec.family {
        FamilyKind::Gl => Ok(x.clone()),
        FamilyKind::Sl => {
            let n = x.rows() as f64;
            let t = x.trace() / n;
            Ok(x - &ComplexMatrix::identity(x.rows()).scale(t))
        }
        FamilyKind::So | FamilyKind::Sp => {
            let b = structure_for(spec).expect("so/sp carry a form");
            let bt = b_transpose(x, &b)?;
            Ok((x - &bt).scale_re(0.5))
        }
    }
}

/// Membership in the algebra of the spec, using the spec's ambient form.
pub fn in_spec_algebra(x: &ComplexMatrix, spec: &GradationSpec, tol: f64) -> Result<bool> {
    match spec.family {
        FamilyKind::Gl => Ok(true),
        FamilyKind::Sl => Ok(x.trace().norm() <= tol),
        FamilyKind::So | FamilyKind::Sp => {
            let b = structure_for(spec).expect("so/sp carry a form");
            let bt = b_transpose(x, &b)?;
            Ok((&bt + x).norm_max() <= tol)
        }
    }
}
