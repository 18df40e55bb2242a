//! Dense complex matrices, the structure matrices `I`, `J`, `K`, the
//! `B`-transpose and membership tests for the classical groups and algebras.
//!
//! All tolerance checks use the max-absolute-entry norm `‖·‖_max`, which is
//! cheap and independent of the matrix size.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};

/// Complex scalar type used everywhere.
pub type C64 = Complex64;

/// Default tolerance for membership checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative pivot threshold below which a matrix is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-14;

/// Shorthand for a complex number.
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A dense complex matrix.
///
/// Thin wrapper around a dynamically sized `nalgebra` matrix that fixes the
/// scalar type and adds the operations needed by the gradation and Toda
/// machinery.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for r in 0..self.rows() {
            write!(f, "  ")?;
            for c in 0..self.cols() {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(TodaError::ShapeMismatch {
                op: "from_row_slice",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, data)))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// The zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    /// The identity matrix `I_n`.
    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// A `1×1` matrix.
    pub fn scalar(z: C64) -> Self {
        Self(DMatrix::from_element(1, 1, z))
    }

    /// A diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) },
        )
    }

    /// The elementary matrix `E_{ij}` (zero-based indices).
    pub fn elementary(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = c64(1.0, 0.0);
        m
    }

    /// Block-diagonal matrix assembled from square or rectangular blocks.
    pub fn block_diagonal(blocks: &[ComplexMatrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows()).sum();
        let cols = blocks.iter().map(|b| b.cols()).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows();
            c0 += b.cols();
        }
        out
    }

    /// Wraps an existing `nalgebra` matrix.
    pub fn from_nalgebra(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    /// Borrows the underlying `nalgebra` matrix.
    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    /// `(rows, cols)`.
    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    /// True for square matrices.
    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    /// Ordinary transpose.
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Multiplies every entry by `z`.
    pub fn scale(&self, z: C64) -> Self {
        Self(&self.0 * z)
    }

    /// Multiplies every entry by a real number.
    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(c64(x, 0.0))
    }

    /// Applies a function to every entry.
    pub fn map(&self, f: impl FnMut(C64) -> C64) -> Self {
        Self(self.0.map(f))
    }

    /// Checked matrix product.
    pub fn try_mul(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(TodaError::ShapeMismatch {
                op: "mul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    /// Checked matrix sum.
    pub fn try_add(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(TodaError::ShapeMismatch {
                op: "add",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self(&self.0 + &rhs.0))
    }

    /// Checked matrix difference.
    pub fn try_sub(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(TodaError::ShapeMismatch {
                op: "sub",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self(&self.0 - &rhs.0))
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Max absolute entry `‖·‖_max`.
    pub fn norm_max(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// `‖self − other‖_max`; infinite when the shapes differ.
    pub fn dist_max(&self, other: &ComplexMatrix) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Entrywise closeness in the max norm.
    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.dist_max(other) <= tol
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// True when all off-diagonal entries vanish exactly.
    pub fn is_diagonal(&self) -> bool {
        (0..self.rows())
            .all(|r| (0..self.cols()).all(|c| r == c || self[(r, c)] == C64::new(0.0, 0.0)))
    }

    /// Copy of the `nr×nc` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self(self.0.view((r0, c0), (nr, nc)).into_owned())
    }

    /// Overwrites the block starting at `(r0, c0)` with `b`.
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &ComplexMatrix) {
        self.0.view_mut((r0, c0), b.shape()).copy_from(&b.0);
    }

    fn require_square(&self, op: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(TodaError::NotSquare {
                op,
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }

    fn is_numerically_singular(lu_u: &DMatrix<C64>, scale: f64) -> bool {
        let n = lu_u.nrows().min(lu_u.ncols());
        (0..n).any(|i| {
            let piv = lu_u[(i, i)].norm();
            !piv.is_finite() || piv <= SINGULAR_PIVOT * scale
        })
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn det(&self) -> Result<C64> {
        self.require_square("det")?;
        if self.rows() == 0 {
            return Ok(c64(1.0, 0.0));
        }
        Ok(self.0.clone().lu().determinant())
    }

    /// Inverse by LU decomposition with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        self.require_square("inverse")?;
        let n = self.rows();
        if n == 1 {
            let z = self[(0, 0)];
            if z.norm() == 0.0 || !z.is_finite() {
                return Err(TodaError::Singular("inverse"));
            }
            return Ok(Self::scalar(z.inv()));
        }
        let scale = self.norm_max();
        if scale == 0.0 || !scale.is_finite() {
            return Err(TodaError::Singular("inverse"));
        }
        let lu = self.0.clone().lu();
        if Self::is_numerically_singular(&lu.u(), scale) {
            return Err(TodaError::Singular("inverse"));
        }
        lu.try_inverse()
            .map(Self)
            .ok_or(TodaError::Singular("inverse"))
    }

    /// Estimate of the condition number `‖A‖_max ‖A⁻¹‖_max n`.
    pub fn condition_estimate(&self) -> Result<f64> {
        let inv = self.inverse()?;
        Ok(self.norm_max() * inv.norm_max() * self.rows() as f64)
    }

    /// Matrix exponential (Padé approximation with scaling and squaring).
    ///
    /// Diagonal Padé approximants map the classical Lie algebras into the
    /// corresponding groups, so structural constraints survive the update
    /// up to rounding.
    pub fn expm(&self) -> Result<Self> {
        self.require_square("expm")?;
        if self.rows() == 1 {
            return Ok(Self::scalar(self[(0, 0)].exp()));
        }
        Ok(Self(self.0.exp()))
    }

    /// Principal square root by the Denman–Beavers iteration.
    pub fn sqrtm(&self) -> Result<Self> {
        self.require_square("sqrtm")?;
        if self.rows() == 1 {
            return Ok(Self::scalar(self[(0, 0)].sqrt()));
        }
        let mut y = self.clone();
        let mut z = Self::identity(self.rows());
        for _ in 0..100 {
            let y_next = (&y + &z.inverse()?).scale_re(0.5);
            let z_next = (&z + &y.inverse()?).scale_re(0.5);
            let change = y_next.dist_max(&y);
            y = y_next;
            z = z_next;
            if change <= 1e-15 * y.norm_max() {
                return Ok(y);
            }
        }
        Err(TodaError::Singular("sqrtm"))
    }

    /// Principal matrix logarithm by inverse scaling and squaring: square
    /// roots are taken until the matrix is close to the identity, then the
    /// Mercator series is summed to rounding.
    ///
    /// Like [`ComplexMatrix::expm`], it maps the classical groups near the
    /// identity into their Lie algebras.
    pub fn logm(&self) -> Result<Self> {
        self.require_square("logm")?;
        let n = self.rows();
        if n == 1 {
            let z = self[(0, 0)];
            if z.norm() == 0.0 || !z.is_finite() {
                return Err(TodaError::Singular("logm"));
            }
            return Ok(Self::scalar(z.ln()));
        }
        let id = Self::identity(n);
        let mut a = self.clone();
        let mut doublings = 0;
        while (&a - &id).norm_max() * n as f64 > 0.25 {
            if doublings == 40 {
                return Err(TodaError::Singular("logm"));
            }
            a = a.sqrtm()?;
            doublings += 1;
        }
        let e = &a - &id;
        let mut power = e.clone();
        let mut sum = e.clone();
        for m in 2..=80 {
            power = &power * &e;
            let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
            let term = power.scale_re(sign / m as f64);
            sum += &term;
            if term.norm_max() <= 1e-17 * sum.norm_max() {
                break;
            }
        }
        Ok(sum.scale_re(2f64.powi(doublings)))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    /// Matrix product; panics on a shape mismatch (use [`ComplexMatrix::try_mul`]
    /// for a checked version).
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 -= &rhs.0;
    }
}

impl Serialize for ComplexMatrix {
    /// Serialized as nested rows of `[re, im]` pairs.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows())
            .map(|r| {
                (0..self.cols())
                    .map(|c| [self[(r, c)].re, self[(r, c)].im])
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(Self::from_fn(r, c, |i, j| {
            c64(rows[i][j][0], rows[i][j][1])
        }))
    }
}

/// Kind of structure matrix defining an orthogonal or symplectic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructureKind {
    /// The identity matrix.
    Identity,
    /// The symmetric skew-diagonal matrix with unit entries.
    J,
    /// `[[0, J], [−J, 0]]`, skew-symmetric with `K² = −I`.
    K,
}

/// A structure matrix `I_n`, `J_n` or `K_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructureMatrix {
    pub kind: StructureKind,
    pub n: usize,
}

impl StructureMatrix {
    /// Creates a structure matrix; `K` requires an even, positive size.
    pub fn new(kind: StructureKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TodaError::InvalidStructure("size must be positive".into()));
        }
        if kind == StructureKind::K && !n.is_multiple_of(2) {
            return Err(TodaError::InvalidStructure(format!(
                "K_n requires even n, got {n}"
            )));
        }
        Ok(Self { kind, n })
    }

    /// Dense matrix of the structure.
    pub fn matrix(&self) -> ComplexMatrix {
        match self.kind {
            StructureKind::Identity => ComplexMatrix::identity(self.n),
            StructureKind::J => j_matrix(self.n),
            StructureKind::K => k_matrix(self.n),
        }
    }
}

/// The skew-diagonal matrix `J_n` with unit entries.
pub fn j_matrix(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i + j + 1 == n {
            c64(1.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// The matrix `K_n = [[0, J], [−J, 0]]`; `n` must be even.
pub fn k_matrix(n: usize) -> ComplexMatrix {
    let h = n / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i < h && j >= h && i + (j - h) + 1 == h {
            c64(1.0, 0.0)
        } else if i >= h && j < h && (i - h) + j + 1 == h {
            c64(-1.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// Classical matrix algebra families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Gl,
    Sl,
    So,
    Sp,
}

impl FamilyKind {
    /// Lower-case name as used in file formats.
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Gl => "gl",
            FamilyKind::Sl => "sl",
            FamilyKind::So => "so",
            FamilyKind::Sp => "sp",
        }
    }

    /// True for the orthogonal and symplectic families.
    pub fn is_orthosymplectic(self) -> bool {
        matches!(self, FamilyKind::So | FamilyKind::Sp)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = TodaError;

    fn from_str(s: &str) -> Result<Self> {
        [
            FamilyKind::Gl,
            FamilyKind::Sl,
            FamilyKind::So,
            FamilyKind::Sp,
        ]
        .into_iter()
        .find(|f| f.name() == s.to_ascii_lowercase())
        .ok_or_else(|| {
            TodaError::InvalidSpec(format!("unknown family '{s}' (expected gl, sl, so or sp)"))
        })
    }
}

/// A classical algebra `gl_n`, `sl_n`, `so_n` or `sp_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraFamily {
    pub kind: FamilyKind,
    pub n: usize,
}

impl AlgebraFamily {
    /// Creates a family; `sp` requires even `n`.
    pub fn new(kind: FamilyKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TodaError::InvalidStructure("n must be positive".into()));
        }
        if kind == FamilyKind::Sp && !n.is_multiple_of(2) {
            return Err(TodaError::InvalidStructure(format!(
                "sp_n requires even n, got {n}"
            )));
        }
        Ok(Self { kind, n })
    }

    /// The structure matrix `B` (`J` for so, `K` for sp, none for gl/sl).
    pub fn structure(&self) -> Option<StructureMatrix> {
        match self.kind {
            FamilyKind::So => Some(StructureMatrix {
                kind: StructureKind::J,
                n: self.n,
            }),
            FamilyKind::Sp => Some(StructureMatrix {
                kind: StructureKind::K,
                n: self.n,
            }),
            FamilyKind::Gl | FamilyKind::Sl => None,
        }
    }
}

/// The `B`-transpose `^B m = B⁻¹ mᵗ B`.
pub fn b_transpose(m: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !b.is_square() {
        return Err(TodaError::InvalidStructure("B must be square".into()));
    }
    if m.cols() != b.rows() || m.rows() != b.rows() {
        return Err(TodaError::ShapeMismatch {
            op: "b_transpose",
            left: m.shape(),
            right: b.shape(),
        });
    }
    let b_inv = b
        .inverse()
        .map_err(|_| TodaError::InvalidStructure("B is singular".into()))?;
    Ok(&(&b_inv * &m.transpose()) * b)
}

/// The `J`-transpose of a possibly rectangular `r×c` matrix,
/// `J_c mᵗ J_r`, i.e. transposition across the anti-diagonal.
pub fn j_transpose(m: &ComplexMatrix) -> ComplexMatrix {
    let (r, c) = m.shape();
    ComplexMatrix::from_fn(c, r, |a, b| m[(r - 1 - b, c - 1 - a)])
}

/// The `K`-transpose `K⁻¹ mᵗ K` of a square matrix of even size.
pub fn k_transpose(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.rows();
    if !m.is_square() || !n.is_multiple_of(2) {
        return Err(TodaError::InvalidStructure(format!(
            "K-transpose needs an even square matrix, got {:?}",
            m.shape()
        )));
    }
    b_transpose(m, &k_matrix(n))
}

/// Transpose with respect to a structure kind (`Identity` gives the ordinary
/// transpose).
pub fn structure_transpose(m: &ComplexMatrix, kind: StructureKind) -> Result<ComplexMatrix> {
    match kind {
        StructureKind::Identity => Ok(m.transpose()),
        StructureKind::J => {
            if !m.is_square() {
                return Err(TodaError::NotSquare {
                    op: "structure_transpose",
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            Ok(j_transpose(m))
        }
        StructureKind::K => k_transpose(m),
    }
}

/// The Lie bracket `xy − yx`.
pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() || x.shape() != y.shape() {
        return Err(TodaError::ShapeMismatch {
            op: "commutator",
            left: x.shape(),
            right: y.shape(),
        });
    }
    Ok(&(x * y) - &(y * x))
}

/// Membership of `x` in the Lie algebra of the family at tolerance `tol`.
///
/// so/sp: `‖^B x + x‖_max ≤ tol`; sl: `|tr x| ≤ tol`; gl: always true.
/// Returns false when `x` has the wrong shape.
pub fn is_in_algebra(x: &ComplexMatrix, fam: &AlgebraFamily, tol: f64) -> bool {
    if x.shape() != (fam.n, fam.n) {
        return false;
    }
    match fam.kind {
        FamilyKind::Gl => true,
        FamilyKind::Sl => x.trace().norm() <= tol,
        FamilyKind::So | FamilyKind::Sp => {
            let b = fam.structure().expect("so/sp carry a structure").matrix();
            is_in_algebra_with(x, &b, tol).unwrap_or(false)
        }
    }
}

/// `‖^B x + x‖_max ≤ tol` for an arbitrary structure matrix `B`.
pub fn is_in_algebra_with(x: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<bool> {
    let bt = b_transpose(x, b)?;
    Ok((&bt + x).norm_max() <= tol)
}

/// Membership of `g` in the classical group of the family at tolerance `tol`.
///
/// so/sp: `‖^B g · g − I‖_max ≤ tol`; sl: `|det g − 1| ≤ tol`; gl: invertible.
pub fn is_in_group(g: &ComplexMatrix, fam: &AlgebraFamily, tol: f64) -> Result<bool> {
    if g.shape() != (fam.n, fam.n) {
        return Err(TodaError::ShapeMismatch {
            op: "is_in_group",
            left: g.shape(),
            right: (fam.n, fam.n),
        });
    }
    // Invertibility is a precondition for every family.
    g.inverse()
        .map_err(|_| TodaError::Singular("is_in_group"))?;
    match fam.kind {
        FamilyKind::Gl => Ok(true),
        FamilyKind::Sl => Ok((g.det()? - c64(1.0, 0.0)).norm() <= tol),
        FamilyKind::So | FamilyKind::Sp => {
            let b = fam.structure().expect("so/sp carry a structure").matrix();
            is_in_group_with(g, &b, tol)
        }
    }
}

/// `‖^B g · g − I‖_max ≤ tol` for an arbitrary structure matrix `B`.
pub fn is_in_group_with(g: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<bool> {
    let bt = b_transpose(g, b)?;
    let n = g.rows();
    Ok((&bt * g).dist_max(&ComplexMatrix::identity(n)) <= tol)
}

/// Projects onto the algebra defined by `B`: `(x − ^B x)/2`.
pub fn antisymmetrize(x: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let bt = b_transpose(x, b)?;
    Ok((x - &bt).scale_re(0.5))
}
