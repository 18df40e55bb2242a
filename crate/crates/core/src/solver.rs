//! Light-cone integration of Toda systems.
//!
//! The equation `∂_+(Γ⁻¹∂_−Γ) = rhs(Γ)` is solved as a Goursat problem: node
//! values are prescribed on the two characteristics `z^+ = z^+_0` (a *row*)
//! and `z^− = z^−_0` (a *column*) through the lower-left corner of the grid,
//! and the interior is filled rectangle by rectangle. The derivative
//! `W = Γ⁻¹∂_−Γ` is carried as an independent variable and `Γ` is advanced
//! multiplicatively, `Γ ← Γ·exp(h·W̄)`, which keeps it in the group.
//!
//! The module also provides the scalar reductions to the sine- and
//! sinh-Gordon equations, the analytic kink, finite-difference residuals and
//! the reality / determinant drift diagnostics.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::folding::{FoldDecoration, FoldPattern};
use crate::gradation::{GradationSpec, GradationType};
use crate::lie_core::{c64, structure_transpose, ComplexMatrix, FamilyKind, C64};
use crate::toda_builder::{
    build_periodic_chain, build_system, class_rhs, rhs_blocks, ChainCoupling, CouplingBlocks,
    FieldState, GammaRule, NodeData, TodaSystem,
};

/// Relative slack allowed between a range and `count × step`.
const GRID_SLACK: f64 = 1e-9;

/// A rectangular light-cone grid.
///
/// `n_minus` and `n_plus` count steps, so a grid has
/// `(n_minus + 1) × (n_plus + 1)` points. The steps are signed: a positive
/// step marches its axis upwards from the lower end of the range, a negative
/// one downwards from the upper end. The Goursat corner is the point where
/// both marches start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub z_minus: [f64; 2],
    pub z_plus: [f64; 2],
    pub h_minus: f64,
    pub h_plus: f64,
    pub n_minus: usize,
    pub n_plus: usize,
}

fn step_count(range: [f64; 2], h: f64, axis: &str) -> Result<usize> {
    let len = range[1] - range[0];
    if !(h.is_finite() && h != 0.0) {
        return Err(TodaError::InvalidData(format!(
            "{axis} step must be nonzero, got {h}"
        )));
    }
    if !(len.is_finite() && len > 0.0) {
        return Err(TodaError::InvalidData(format!(
            "{axis} range must be increasing, got [{}, {}]",
            range[0], range[1]
        )));
    }
    let h = h.abs();
    let n = (len / h).round();
    if n < 1.0 || (n * h - len).abs() > GRID_SLACK * len.max(1.0) {
        return Err(TodaError::InvalidData(format!(
            "{axis} range of length {len} is not a whole number of steps {h}"
        )));
    }
    Ok(n as usize)
}

impl Grid {
    /// A grid from its ranges and steps; each range must be a whole number
    /// of steps.
    pub fn new(z_minus: [f64; 2], z_plus: [f64; 2], h_minus: f64, h_plus: f64) -> Result<Self> {
        let n_minus = step_count(z_minus, h_minus, "z^-")?;
        let n_plus = step_count(z_plus, h_plus, "z^+")?;
        Ok(Self {
            z_minus,
            z_plus,
            h_minus,
            h_plus,
            n_minus,
            n_plus,
        })
    }

    /// A grid with the given numbers of steps along each axis.
    pub fn with_counts(
        z_minus: [f64; 2],
        z_plus: [f64; 2],
        n_minus: usize,
        n_plus: usize,
    ) -> Result<Self> {
        if n_minus == 0 || n_plus == 0 {
            return Err(TodaError::InvalidData(
                "a grid needs at least one step per axis".into(),
            ));
        }
        Self::new(
            z_minus,
            z_plus,
            (z_minus[1] - z_minus[0]) / n_minus as f64,
            (z_plus[1] - z_plus[0]) / n_plus as f64,
        )
    }

    /// The square `[lo, hi]²` with `n` steps per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::with_counts([lo, hi], [lo, hi], n, n)
    }

    /// `z^−` coordinate of column `i` (counted from the corner).
    pub fn z_minus_at(&self, i: usize) -> f64 {
        let start = if self.h_minus > 0.0 {
            self.z_minus[0]
        } else {
            self.z_minus[1]
        };
        start + i as f64 * self.h_minus
    }

    /// `z^+` coordinate of row `j` (counted from the corner).
    pub fn z_plus_at(&self, j: usize) -> f64 {
        let start = if self.h_plus > 0.0 {
            self.z_plus[0]
        } else {
            self.z_plus[1]
        };
        start + j as f64 * self.h_plus
    }

    /// The same grid marched in the opposite direction along the chosen
    /// axes.
    pub fn flipped(&self, minus: bool, plus: bool) -> Self {
        Self {
            h_minus: if minus { -self.h_minus } else { self.h_minus },
            h_plus: if plus { -self.h_plus } else { self.h_plus },
            ..*self
        }
    }

    /// The same ranges with both steps halved.
    pub fn refined(&self) -> Self {
        Self {
            h_minus: self.h_minus / 2.0,
            h_plus: self.h_plus / 2.0,
            n_minus: self.n_minus * 2,
            n_plus: self.n_plus * 2,
            ..*self
        }
    }
}

impl FromStr for Grid {
    type Err = TodaError;

    /// Parses `"zmin,zmax,wmin,wmax,h-,h+"`, where `z` is `z^−` and `w` is
    /// `z^+`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| TodaError::InvalidData(format!("grid '{s}': {e}")))?;
        if parts.len() != 6 {
            return Err(TodaError::InvalidData(format!(
                "grid '{s}' must have six comma-separated numbers"
            )));
        }
        Self::new(
            [parts[0], parts[1]],
            [parts[2], parts[3]],
            parts[4],
            parts[5],
        )
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.z_minus[0],
            self.z_minus[1],
            self.z_plus[0],
            self.z_plus[1],
            self.h_minus,
            self.h_plus
        )
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Midpoint rule on characteristic rectangles with multiplicative `Γ`
    /// updates; second order in both steps.
    #[default]
    Midpoint,
    /// Forward Euler with additive `Γ` updates; first order, diagnostics
    /// only.
    Euler,
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Tolerance for the initial data: node constraints and corner agreement.
    pub tol_constraint: f64,
    /// Largest condition estimate of a node value before the run halts.
    pub tol_invertibility: f64,
    /// Store every `checkpoint_stride`-th point along each axis.
    pub checkpoint_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Midpoint,
            tol_constraint: 1e-8,
            tol_invertibility: 1e10,
            checkpoint_stride: 1,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol_constraint > 0.0 && self.tol_invertibility > 0.0)
            || self.checkpoint_stride == 0
        {
            return Err(TodaError::InvalidData(
                "solver tolerances and checkpoint stride must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Reality condition imposed on the node values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealFormTag {
    /// No reality condition.
    #[default]
    None,
    /// `Γ = conj(Γ)`.
    RealSplit,
    /// `Γ = (Γ†)⁻¹`.
    Compact,
}

/// Scalar profiles `C_+(z^+) = f_+(z^+)·C_+`, `C_−(z^−) = f_−(z^−)·C_−`.
///
/// Because each coupling depends on one light-cone coordinate only, the
/// compatibility conditions `∂_−C_+ = 0` and `∂_+C_− = 0` hold exactly on the
/// grid, and scalar factors preserve every linear arc constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    /// `f_+` at each row, `n_plus + 1` values.
    pub plus: Vec<C64>,
    /// `f_−` at each column, `n_minus + 1` values.
    pub minus: Vec<C64>,
}

impl CouplingProfile {
    /// Unit profiles: the system's couplings everywhere.
    pub fn constant(grid: &Grid) -> Self {
        Self {
            plus: vec![c64(1.0, 0.0); grid.n_plus + 1],
            minus: vec![c64(1.0, 0.0); grid.n_minus + 1],
        }
    }

    /// Samples `f_+` and `f_−` on a grid.
    pub fn from_fn(grid: &Grid, plus: impl Fn(f64) -> C64, minus: impl Fn(f64) -> C64) -> Self {
        Self {
            plus: (0..=grid.n_plus).map(|j| plus(grid.z_plus_at(j))).collect(),
            minus: (0..=grid.n_minus)
                .map(|i| minus(grid.z_minus_at(i)))
                .collect(),
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if self.plus.len() != grid.n_plus + 1 || self.minus.len() != grid.n_minus + 1 {
            return Err(TodaError::InvalidData(format!(
                "coupling profile has {}×{} samples, grid needs {}×{}",
                self.minus.len(),
                self.plus.len(),
                grid.n_minus + 1,
                grid.n_plus + 1
            )));
        }
        Ok(())
    }
}

/// Data on the two characteristics through the corner, for the independent
/// nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GoursatData {
    /// `Γ(z^−_i, z^+_0)`, `n_minus + 1` states.
    pub row_gammas: Vec<Vec<ComplexMatrix>>,
    /// `Γ(z^−_0, z^+_j)`, `n_plus + 1` states.
    pub col_gammas: Vec<Vec<ComplexMatrix>>,
}

impl GoursatData {
    /// Samples `Γ` on the characteristics of a grid.
    pub fn from_fn(grid: &Grid, gamma: impl Fn(f64, f64) -> Vec<ComplexMatrix>) -> Self {
        let zp0 = grid.z_plus_at(0);
        let zm0 = grid.z_minus_at(0);
        Self {
            row_gammas: (0..=grid.n_minus)
                .map(|i| gamma(grid.z_minus_at(i), zp0))
                .collect(),
            col_gammas: (0..=grid.n_plus)
                .map(|j| gamma(zm0, grid.z_plus_at(j)))
                .collect(),
        }
    }
}

/// Initial data classes that can be written in a system file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// Constant node values (the identity when omitted) and `W = 0`.
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gammas: Option<Vec<ComplexMatrix>>,
    },
    /// `Γ = Γ_0·exp(Δz^+·B)` on the column and `Γ = Γ_0·exp(Δz^−·A)` on the
    /// row, per independent node, with `Δz` measured from the corner. When `C_+ = 0` the exact solution is
    /// `Γ_0·exp(Δz^+·B)·exp(Δz^−·A)`.
    ExpLinear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Vec<ComplexMatrix>>,
        minus: Vec<ComplexMatrix>,
        plus: Vec<ComplexMatrix>,
    },
    /// Characteristic data of the sine-Gordon kink with slope `a`, for the
    /// two-node system of [`sine_gordon_system`].
    SineGordonKink { a: f64 },
    /// Characteristic data of `F = ε·exp(a z^− + (2/a) z^+)`, the exact
    /// solution of the linearized sinh-Gordon equation.
    SinhGordonLinear { epsilon: f64, a: f64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Constant { gammas: None }
    }
}

fn check_node_list(system: &TodaSystem, list: &[ComplexMatrix], what: &str) -> Result<()> {
    let sizes = system.independent_sizes();
    if list.len() != sizes.len() || list.iter().zip(&sizes).any(|(m, &n)| m.shape() != (n, n)) {
        return Err(TodaError::InvalidData(format!(
            "{what} must list {} square blocks of sizes {:?}",
            sizes.len(),
            sizes
        )));
    }
    Ok(())
}

fn require_scalar_pair(system: &TodaSystem, what: &str) -> Result<()> {
    if system.independent_sizes() != [1] {
        return Err(TodaError::InvalidData(format!(
            "{what} data needs a system with a single independent 1×1 node"
        )));
    }
    Ok(())
}

impl InitialData {
    /// The characteristic data on a grid.
    pub fn goursat(&self, system: &TodaSystem, grid: &Grid) -> Result<GoursatData> {
        let (zm0, zp0) = (grid.z_minus_at(0), grid.z_plus_at(0));
        match self {
            InitialData::Constant { gammas } => {
                let g = match gammas {
                    Some(g) => {
                        check_node_list(system, g, "constant data")?;
                        g.clone()
                    }
                    None => FieldState::identity(&system.independent_sizes()).gammas,
                };
                Ok(GoursatData::from_fn(grid, |_, _| g.clone()))
            }
            InitialData::ExpLinear { base, minus, plus } => {
                check_node_list(system, minus, "exp-linear minus generators")?;
                check_node_list(system, plus, "exp-linear plus generators")?;
                let base = match base {
                    Some(b) => {
                        check_node_list(system, b, "exp-linear base")?;
                        b.clone()
                    }
                    None => FieldState::identity(&system.independent_sizes()).gammas,
                };
                let row_gammas = (0..=grid.n_minus)
                    .map(|i| {
                        let t = grid.z_minus_at(i) - zm0;
                        base.iter()
                            .zip(minus)
                            .map(|(b, a)| Ok(b * &a.scale_re(t).expm()?))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let col_gammas = (0..=grid.n_plus)
                    .map(|j| {
                        let t = grid.z_plus_at(j) - zp0;
                        base.iter()
                            .zip(plus)
                            .map(|(b, g)| Ok(b * &g.scale_re(t).expm()?))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(GoursatData {
                    row_gammas,
                    col_gammas,
                })
            }
            InitialData::SineGordonKink { a } => {
                require_scalar_pair(system, "kink")?;
                let a = *a;
                if a == 0.0 {
                    return Err(TodaError::InvalidData("kink slope must be nonzero".into()));
                }
                Ok(GoursatData::from_fn(grid, |zm, zp| {
                    vec![ComplexMatrix::scalar(
                        c64(0.0, 0.5 * analytic_kink(zm, zp, a)).exp(),
                    )]
                }))
            }
            InitialData::SinhGordonLinear { epsilon, a } => {
                require_scalar_pair(system, "sinh-Gordon")?;
                let (eps, a) = (*epsilon, *a);
                if a == 0.0 {
                    return Err(TodaError::InvalidData(
                        "exponent slope must be nonzero".into(),
                    ));
                }
                Ok(GoursatData::from_fn(grid, |zm, zp| {
                    vec![ComplexMatrix::scalar(c64(
                        (0.5 * linear_sinh_gordon(zm, zp, eps, a)).exp(),
                        0.0,
                    ))]
                }))
            }
        }
    }

    /// The exact solution at a point, where one is known for this data and
    /// system: constant data at a zero of the right-hand side, exp-linear
    /// data of a free system, and the kink.
    pub fn exact(
        &self,
        system: &TodaSystem,
        grid: &Grid,
        z_minus: f64,
        z_plus: f64,
    ) -> Result<Option<Vec<ComplexMatrix>>> {
        match self {
            InitialData::Constant { gammas } => {
                let g = gammas
                    .clone()
                    .unwrap_or_else(|| FieldState::identity(&system.independent_sizes()).gammas);
                let r = rhs_at(system, &g, &system.c_plus, &system.c_minus)?;
                if r.iter().all(|m| m.norm_max() == 0.0) {
                    Ok(Some(g))
                } else {
                    Ok(None)
                }
            }
            InitialData::ExpLinear { base, minus, plus } => {
                if !is_free(system) {
                    return Ok(None);
                }
                let base = base
                    .clone()
                    .unwrap_or_else(|| FieldState::identity(&system.independent_sizes()).gammas);
                let (s, t) = (z_plus - grid.z_plus_at(0), z_minus - grid.z_minus_at(0));
                base.iter()
                    .zip(plus.iter().zip(minus))
                    .map(|(b, (bp, am))| {
                        Ok(&(b * &bp.scale_re(s).expm()?) * &am.scale_re(t).expm()?)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
            InitialData::SineGordonKink { a } => Ok(Some(vec![ComplexMatrix::scalar(
                c64(0.0, 0.5 * analytic_kink(z_minus, z_plus, *a)).exp(),
            )])),
            InitialData::SinhGordonLinear { .. } => Ok(None),
        }
    }
}

/// Whether the right-hand side vanishes identically (`C_+ = 0` or `C_− = 0`).
pub fn is_free(system: &TodaSystem) -> bool {
    system.c_plus.iter().all(|m| m.norm_max() == 0.0)
        || system.c_minus.iter().all(|m| m.norm_max() == 0.0)
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    /// Every grid point was computed.
    Completed,
    /// A node value became (numerically) singular; the history holds the
    /// rows completed before this point.
    BlowUp {
        z_minus: f64,
        z_plus: f64,
        /// The node `α`, counted from 1.
        node: usize,
        /// Condition estimate of the node, `None` when it is singular or
        /// not finite.
        condition: Option<f64>,
    },
}

/// Stored values at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    /// Independent node values.
    pub gammas: Vec<ComplexMatrix>,
    /// `W = Γ⁻¹∂_−Γ` for the independent nodes.
    pub ws: Vec<ComplexMatrix>,
    /// Violation of the node constraints (zero for unconstrained systems).
    pub constraint: f64,
}

/// The solution on the stored lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    /// The integration grid.
    pub grid: Grid,
    /// Storage stride along both axes.
    pub stride: usize,
    /// Coupling profiles used by the run.
    pub profile: CouplingProfile,
    /// `rows[j][i]`: stored row `j` (coordinate `z^+_{j·stride}`), stored
    /// column `i`.
    pub rows: Vec<Vec<PointRecord>>,
    pub status: RunStatus,
}

impl FieldHistory {
    /// Whether the run reached the far corner.
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Number of stored columns.
    pub fn stored_columns(&self) -> usize {
        self.grid.n_minus / self.stride + 1
    }

    /// `z^−` of stored column `i`.
    pub fn z_minus_at(&self, i: usize) -> f64 {
        self.grid.z_minus_at(i * self.stride)
    }

    /// `z^+` of stored row `j`.
    pub fn z_plus_at(&self, j: usize) -> f64 {
        self.grid.z_plus_at(j * self.stride)
    }

    /// Spacing `(h_−, h_+)` of the stored lattice.
    pub fn stored_steps(&self) -> (f64, f64) {
        (
            self.grid.h_minus * self.stride as f64,
            self.grid.h_plus * self.stride as f64,
        )
    }

    /// Largest stored constraint violation.
    pub fn max_constraint_violation(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|p| p.constraint)
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the stored `Γ` from a reference solution.
    pub fn max_error<F>(&self, exact: F) -> Result<f64>
    where
        F: Fn(f64, f64) -> Result<Vec<ComplexMatrix>>,
    {
        let mut worst: f64 = 0.0;
        for (j, row) in self.rows.iter().enumerate() {
            for (i, pt) in row.iter().enumerate() {
                let e = exact(self.z_minus_at(i), self.z_plus_at(j))?;
                for (g, x) in pt.gammas.iter().zip(&e) {
                    worst = worst.max(g.dist_max(x));
                }
            }
        }
        Ok(worst)
    }
}

/// Right-hand sides of the independent equations at the given node values
/// and couplings.
fn rhs_at(
    system: &TodaSystem,
    gammas: &[ComplexMatrix],
    c_plus: &[ComplexMatrix],
    c_minus: &[ComplexMatrix],
) -> Result<Vec<ComplexMatrix>> {
    let nodes = NodeData::new(gammas)?;
    class_rhs(system.fold.as_ref(), system.p(), &nodes, c_plus, c_minus)
}

fn scaled(blocks: &[ComplexMatrix], f: C64) -> Vec<ComplexMatrix> {
    blocks.iter().map(|m| m.scale(f)).collect()
}

fn combine(a: &[ComplexMatrix], b: &[ComplexMatrix], ca: f64, cb: f64) -> Vec<ComplexMatrix> {
    a.iter()
        .zip(b)
        .map(|(x, y)| &x.scale_re(ca) + &y.scale_re(cb))
        .collect()
}

/// `Γ·exp(h·X)` node by node.
fn advance(gammas: &[ComplexMatrix], xs: &[ComplexMatrix], h: f64) -> Result<Vec<ComplexMatrix>> {
    gammas
        .iter()
        .zip(xs)
        .map(|(g, x)| Ok(g * &x.scale_re(h).expm()?))
        .collect()
}

/// `(1/h)·log(Γ_a⁻¹Γ_b)` node by node: the mean of `Γ⁻¹∂_−Γ` over a step in
/// the sense of the exponential map.
fn increments(from: &[ComplexMatrix], to: &[ComplexMatrix], h: f64) -> Result<Vec<ComplexMatrix>> {
    from.iter()
        .zip(to)
        .map(|(a, b)| Ok((&a.inverse()? * b).logm()?.scale_re(1.0 / h)))
        .collect()
}

/// Geodesic midpoints `Γ_a·exp(½·log(Γ_a⁻¹Γ_b))` node by node.
fn midpoints(from: &[ComplexMatrix], to: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    from.iter()
        .zip(to)
        .map(|(a, b)| Ok(a * &(&a.inverse()? * b).logm()?.scale_re(0.5).expm()?))
        .collect()
}

/// `W` at the points of a row from the increments on its edges.
fn point_ws(edges: &[Vec<ComplexMatrix>]) -> Vec<Vec<ComplexMatrix>> {
    let n = edges.len();
    (0..=n)
        .map(|i| match i {
            0 => edges[0].clone(),
            i if i == n => edges[n - 1].clone(),
            i => combine(&edges[i - 1], &edges[i], 0.5, 0.5),
        })
        .collect()
}

/// The first node whose condition estimate exceeds `tol` (or that is
/// singular or non-finite), with its condition.
fn ill_conditioned(gammas: &[ComplexMatrix], tol: f64) -> Option<(usize, f64)> {
    for (a, g) in gammas.iter().enumerate() {
        if !g.is_finite() {
            return Some((a + 1, f64::INFINITY));
        }
        match g.condition_estimate() {
            Ok(c) if c.is_finite() && c <= tol => {}
            Ok(c) => return Some((a + 1, c)),
            Err(_) => return Some((a + 1, f64::INFINITY)),
        }
    }
    None
}

/// Removes rounding drift from increments of self-dual nodes
/// (`^B W = −W`).
fn project_ws(system: &TodaSystem, ws: &mut [ComplexMatrix]) -> Result<()> {
    for (a, w) in ws.iter_mut().enumerate() {
        if let GammaRule::SelfDual { b } = system.constraints.gamma[a] {
            let bt = structure_transpose(w, b)?;
            *w = (&*w - &bt).scale_re(0.5);
        }
    }
    Ok(())
}

fn constraint_of(system: &TodaSystem, gammas: &[ComplexMatrix], tracked: bool) -> f64 {
    if !tracked {
        return 0.0;
    }
    system
        .state_violation(&FieldState::new(gammas.to_vec()))
        .unwrap_or(f64::INFINITY)
}

fn check_data(system: &TodaSystem, data: &GoursatData, grid: &Grid, tol: f64) -> Result<()> {
    if data.row_gammas.len() != grid.n_minus + 1 || data.col_gammas.len() != grid.n_plus + 1 {
        return Err(TodaError::InvalidData(format!(
            "characteristic data has {}×{} samples, grid needs {}×{}",
            data.row_gammas.len(),
            data.col_gammas.len(),
            grid.n_minus + 1,
            grid.n_plus + 1
        )));
    }
    for g in data.row_gammas.iter().chain(&data.col_gammas) {
        check_node_list(system, g, "characteristic data")?;
    }
    let corner = data.row_gammas[0]
        .iter()
        .zip(&data.col_gammas[0])
        .map(|(a, b)| a.dist_max(b))
        .fold(0.0, f64::max);
    if corner > tol {
        return Err(TodaError::InvalidData(format!(
            "row and column data disagree at the corner by {corner:.3e}"
        )));
    }
    Ok(())
}

/// Integrates a system over a grid from characteristic data.
///
/// Columns `i` count `z^−` steps and rows `j` count `z^+` steps from the
/// corner. The unknown carried along each `z^−` edge is the increment
/// `Ω = (1/h)·log(Γ(i,j)⁻¹Γ(i+1,j))`, the step mean of `W = Γ⁻¹∂_−Γ`; on the
/// first row it comes from the data. Each characteristic rectangle is then
/// closed by the midpoint rule:
///
/// * `Γ_c` is the geodesic midpoint of the two known corners `Γ(i+1,j)` and
///   `Γ(i,j+1)`;
/// * `Ω(i+½,j+1) = Ω(i+½,j) + k·rhs(Γ_c)`, with the couplings at the centre;
/// * `Γ(i+1,j+1) = Γ(i,j+1)·exp(h·Ω(i+½,j+1))`,
///
/// with the signed steps `h = h_−`, `k = h_+`. The scheme is second order,
/// explicit, and keeps `Γ` in the group. The Euler scheme instead uses
/// `rhs(Γ(i,j))` and the additive update `Γ(i+1,j+1) = Γ(i,j+1)·(I + h·Ω)`.
///
/// If a node value exceeds the invertibility tolerance the run stops and the
/// history holds the rows completed so far.
pub fn integrate(
    system: &TodaSystem,
    data: &GoursatData,
    profile: Option<&CouplingProfile>,
    grid: &Grid,
    config: &SolverConfig,
) -> Result<FieldHistory> {
    config.validate()?;
    check_data(system, data, grid, config.tol_constraint)?;
    let profile = match profile {
        Some(p) => {
            p.check(grid)?;
            p.clone()
        }
        None => CouplingProfile::constant(grid),
    };
    let tracked = system.constraints.det_product_one
        || system
            .constraints
            .gamma
            .iter()
            .take(system.independent_count())
            .any(|g| !matches!(g, GammaRule::Free));
    let stride = config.checkpoint_stride;
    let (h, k) = (grid.h_minus, grid.h_plus);
    let (cp_at, cm_at): (Vec<Vec<ComplexMatrix>>, Vec<Vec<ComplexMatrix>>) = match config.scheme {
        Scheme::Midpoint => (
            profile
                .plus
                .windows(2)
                .map(|f| scaled(&system.c_plus, (f[0] + f[1]) * 0.5))
                .collect(),
            profile
                .minus
                .windows(2)
                .map(|f| scaled(&system.c_minus, (f[0] + f[1]) * 0.5))
                .collect(),
        ),
        Scheme::Euler => (
            profile
                .plus
                .iter()
                .map(|&f| scaled(&system.c_plus, f))
                .collect(),
            profile
                .minus
                .iter()
                .map(|&f| scaled(&system.c_minus, f))
                .collect(),
        ),
    };

    let mut history = FieldHistory {
        grid: *grid,
        stride,
        profile,
        rows: Vec::new(),
        status: RunStatus::Completed,
    };
    let halt = |history: &mut FieldHistory, i: usize, j: usize, (node, condition): (usize, f64)| {
        history.status = RunStatus::BlowUp {
            z_minus: grid.z_minus_at(i),
            z_plus: grid.z_plus_at(j),
            node,
            condition: condition.is_finite().then_some(condition),
        };
    };

    for (i, g) in data.row_gammas.iter().enumerate() {
        if let Some(bad) = ill_conditioned(g, config.tol_invertibility) {
            halt(&mut history, i, 0, bad);
            return Ok(history);
        }
    }
    for (j, g) in data.col_gammas.iter().enumerate() {
        if let Some(bad) = ill_conditioned(g, config.tol_invertibility) {
            halt(&mut history, 0, j, bad);
            return Ok(history);
        }
    }
    let scale = data
        .row_gammas
        .iter()
        .chain(&data.col_gammas)
        .flatten()
        .map(|g| g.norm_max())
        .fold(1.0, f64::max);
    for g in data.row_gammas.iter().chain(&data.col_gammas) {
        let v = system.state_violation(&FieldState::new(g.clone()))?;
        if v > config.tol_constraint * scale * scale {
            return Err(TodaError::ConstraintViolation(format!(
                "characteristic data violates the node constraints by {v:.3e}"
            )));
        }
    }

    let mut prev_g = data.row_gammas.clone();
    let mut prev_o = Vec::with_capacity(grid.n_minus);
    for i in 0..grid.n_minus {
        match increments(&prev_g[i], &prev_g[i + 1], h) {
            Ok(mut o) => {
                project_ws(system, &mut o)?;
                prev_o.push(o);
            }
            Err(TodaError::Singular(_)) => {
                halt(&mut history, i + 1, 0, (1, f64::INFINITY));
                return Ok(history);
            }
            Err(e) => return Err(e),
        }
    }
    let record_row =
        |history: &mut FieldHistory, gs: &[Vec<ComplexMatrix>], edges: &[Vec<ComplexMatrix>]| {
            let ws = point_ws(edges);
            let row = (0..=grid.n_minus)
                .step_by(stride)
                .map(|i| PointRecord {
                    gammas: gs[i].clone(),
                    ws: ws[i].clone(),
                    constraint: constraint_of(system, &gs[i], tracked),
                })
                .collect();
            history.rows.push(row);
        };
    record_row(&mut history, &prev_g, &prev_o);

    for (j, cp) in cp_at.iter().enumerate().take(grid.n_plus) {
        let mut cur_g = Vec::with_capacity(grid.n_minus + 1);
        let mut cur_o = Vec::with_capacity(grid.n_minus);
        cur_g.push(data.col_gammas[j + 1].clone());
        for i in 0..grid.n_minus {
            let step = match config.scheme {
                Scheme::Midpoint => midpoints(&cur_g[i], &prev_g[i + 1])
                    .and_then(|centre| rhs_at(system, &centre, cp, &cm_at[i]))
                    .and_then(|r| {
                        let o = combine(&prev_o[i], &r, 1.0, k);
                        Ok((advance(&cur_g[i], &o, h)?, o))
                    }),
                Scheme::Euler => rhs_at(system, &prev_g[i], cp, &cm_at[i]).map(|r| {
                    let o = combine(&prev_o[i], &r, 1.0, k);
                    let g = cur_g[i]
                        .iter()
                        .zip(&o)
                        .map(|(g, w)| g + &(g * w).scale_re(h))
                        .collect();
                    (g, o)
                }),
            };
            let (g_new, o_new) = match step {
                Ok(v) => v,
                Err(TodaError::Singular(_)) => {
                    halt(&mut history, i + 1, j + 1, (1, f64::INFINITY));
                    return Ok(history);
                }
                Err(e) => return Err(e),
            };
            if let Some(bad) = ill_conditioned(&g_new, config.tol_invertibility) {
                halt(&mut history, i + 1, j + 1, bad);
                return Ok(history);
            }
            cur_g.push(g_new);
            cur_o.push(o_new);
        }
        if (j + 1) % stride == 0 {
            record_row(&mut history, &cur_g, &cur_o);
        }
        prev_g = cur_g;
        prev_o = cur_o;
    }
    Ok(history)
}

/// Finite-difference residual `max |∂_+(Γ⁻¹∂_−Γ) − rhs|` over the interior
/// of the stored lattice.
///
/// `Γ⁻¹∂_−Γ` is formed with central differences of the stored `Γ` along
/// `z^−`, then differentiated centrally along `z^+`; the right-hand side uses
/// the run's coupling profiles. The result is second order in the stored
/// spacing for smooth solutions.
pub fn residual(history: &FieldHistory, system: &TodaSystem) -> Result<f64> {
    let rows = history.rows.len();
    let cols = history
        .stored_columns()
        .min(history.rows.first().map_or(0, |r| r.len()));
    if rows < 3 || cols < 3 {
        return Ok(0.0);
    }
    let (h, k) = history.stored_steps();
    let stride = history.stride;
    let w_at = |i: usize, j: usize| -> Result<Vec<ComplexMatrix>> {
        let row = &history.rows[j];
        row[i]
            .gammas
            .iter()
            .enumerate()
            .map(|(a, g)| {
                Ok(
                    (&g.inverse()? * &(&row[i + 1].gammas[a] - &row[i - 1].gammas[a]))
                        .scale_re(0.5 / h),
                )
            })
            .collect()
    };
    let mut worst: f64 = 0.0;
    for j in 1..rows - 1 {
        for i in 1..cols - 1 {
            let up = w_at(i, j + 1)?;
            let down = w_at(i, j - 1)?;
            let cp = scaled(&system.c_plus, history.profile.plus[j * stride]);
            let cm = scaled(&system.c_minus, history.profile.minus[i * stride]);
            let r = rhs_at(system, &history.rows[j][i].gammas, &cp, &cm)?;
            for a in 0..r.len() {
                let lhs = (&up[a] - &down[a]).scale_re(0.5 / k);
                worst = worst.max(lhs.dist_max(&r[a]));
            }
        }
    }
    Ok(worst)
}

/// A real scalar field on a lattice, `values[j][i]` at
/// `(z_minus[i], z_plus[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub z_minus: Vec<f64>,
    pub z_plus: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ScalarField {
    /// Samples a function on the stored lattice of a history.
    pub fn sample(history: &FieldHistory, f: impl Fn(f64, f64) -> f64) -> Self {
        let z_minus: Vec<f64> = (0..history.stored_columns())
            .map(|i| history.z_minus_at(i))
            .collect();
        let z_plus: Vec<f64> = (0..history.rows.len())
            .map(|j| history.z_plus_at(j))
            .collect();
        let values = z_plus
            .iter()
            .map(|&zp| z_minus.iter().map(|&zm| f(zm, zp)).collect())
            .collect();
        Self {
            z_minus,
            z_plus,
            values,
        }
    }

    /// Largest `|F − g|` over the lattice.
    pub fn max_abs_diff(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, row) in self.values.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                worst = worst.max((v - g(self.z_minus[i], self.z_plus[j])).abs());
            }
        }
        worst
    }

    /// Largest `|F|` over the lattice.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|∂_+∂_−F − f(F)|` over the interior, with the centred
    /// four-point mixed difference.
    pub fn wave_residual(&self, f: impl Fn(f64) -> f64) -> f64 {
        let rows = self.values.len();
        let cols = self.z_minus.len();
        if rows < 3 || cols < 3 {
            return 0.0;
        }
        let h = self.z_minus[1] - self.z_minus[0];
        let k = self.z_plus[1] - self.z_plus[0];
        let v = &self.values;
        let mut worst: f64 = 0.0;
        for j in 1..rows - 1 {
            for i in 1..cols - 1 {
                let mixed = (v[j + 1][i + 1] - v[j - 1][i + 1] - v[j + 1][i - 1] + v[j - 1][i - 1])
                    / (4.0 * h * k);
                worst = worst.max((mixed - f(v[j][i])).abs());
            }
        }
        worst
    }
}

fn scalar_node(history: &FieldHistory, what: &str) -> Result<()> {
    let ok = history
        .rows
        .first()
        .and_then(|r| r.first())
        .is_some_and(|p| p.gammas.len() == 1 && p.gammas[0].shape() == (1, 1));
    if !ok {
        return Err(TodaError::Reduction(format!(
            "{what} reduction needs a single independent 1×1 node"
        )));
    }
    Ok(())
}

/// The sine-Gordon field `F` with `Γ_1 = exp(iF/2)`, which satisfies
/// `∂_+∂_−F = 2 sin F` for the system of [`sine_gordon_system`].
///
/// The phase is unwrapped first along the column through the corner, then
/// along each row starting from that column, which fixes the branch
/// deterministically (`F` is continuous and equals `2·arg Γ` at the corner).
pub fn sine_gordon_reduce(history: &FieldHistory, tol: f64) -> Result<ScalarField> {
    scalar_node(history, "sine-Gordon")?;
    let mut field = ScalarField::sample(history, |_, _| 0.0);
    let mut seam_prev: Option<f64> = None;
    for (j, row) in history.rows.iter().enumerate() {
        let mut prev: Option<f64> = None;
        for (i, pt) in row.iter().enumerate() {
            let z = pt.gammas[0][(0, 0)];
            if (z.norm() - 1.0).abs() > tol {
                return Err(TodaError::Reduction(format!(
                    "|Γ| = {} is off the unit circle at ({}, {})",
                    z.norm(),
                    history.z_minus_at(i),
                    history.z_plus_at(j)
                )));
            }
            let raw = z.arg();
            let reference = if i == 0 { seam_prev } else { prev };
            let phase = match reference {
                Some(r) => r + wrap_angle(raw - r),
                None => raw,
            };
            if i == 0 {
                seam_prev = Some(phase);
            }
            prev = Some(phase);
            field.values[j][i] = 2.0 * phase;
        }
    }
    Ok(field)
}

/// Maps an angle to `(−π, π]`.
fn wrap_angle(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let y = x - tau * (x / tau).round();
    if y <= -std::f64::consts::PI {
        y + tau
    } else {
        y
    }
}

/// The sinh-Gordon field `F = 2·log Γ_1`, which satisfies
/// `∂_+∂_−F = 2 sinh F` for the system of [`sine_gordon_system`] with real
/// positive `Γ`.
pub fn sinh_gordon_reduce(history: &FieldHistory, tol: f64) -> Result<ScalarField> {
    scalar_node(history, "sinh-Gordon")?;
    let mut field = ScalarField::sample(history, |_, _| 0.0);
    for (j, row) in history.rows.iter().enumerate() {
        for (i, pt) in row.iter().enumerate() {
            let z = pt.gammas[0][(0, 0)];
            if z.im.abs() > tol || z.re <= 0.0 {
                return Err(TodaError::Reduction(format!(
                    "Γ = {z} is not real positive at ({}, {})",
                    history.z_minus_at(i),
                    history.z_plus_at(j)
                )));
            }
            field.values[j][i] = 2.0 * z.re.ln();
        }
    }
    Ok(field)
}

/// Light-cone phase `θ = a z^− + (2/a) z^+` of the kink.
pub fn kink_phase(z_minus: f64, z_plus: f64, a: f64) -> f64 {
    a * z_minus + (2.0 / a) * z_plus
}

/// The sine-Gordon kink `F = 4·arctan(exp(a z^− + (2/a) z^+))`, a solution
/// of `∂_+∂_−F = 2 sin F`.
pub fn analytic_kink(z_minus: f64, z_plus: f64, a: f64) -> f64 {
    4.0 * kink_phase(z_minus, z_plus, a).exp().atan()
}

/// `F = ε·exp(a z^− + (2/a) z^+)`, a solution of `∂_+∂_−F = 2F`.
pub fn linear_sinh_gordon(z_minus: f64, z_plus: f64, epsilon: f64, a: f64) -> f64 {
    epsilon * kink_phase(z_minus, z_plus, a).exp()
}

/// Largest drift of the reality condition over the stored points.
///
/// For `RealSplit` this is `max |Im Γ|`, for `Compact` `max |Γ†Γ − I|`,
/// over all independent nodes.
pub fn reality_preservation(history: &FieldHistory, tag: RealFormTag) -> f64 {
    let mut worst: f64 = 0.0;
    for pt in history.rows.iter().flatten() {
        for g in &pt.gammas {
            let d = match tag {
                RealFormTag::None => 0.0,
                RealFormTag::RealSplit => g.map(|z| c64(z.im, 0.0)).norm_max(),
                RealFormTag::Compact => {
                    (&g.adjoint() * g).dist_max(&ComplexMatrix::identity(g.rows()))
                }
            };
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest `|Π_α det Γ_α − 1|` over the stored points (all `p` nodes).
pub fn det_product_drift(history: &FieldHistory, system: &TodaSystem) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for pt in history.rows.iter().flatten() {
        let full = system.expand_state(&FieldState::new(pt.gammas.clone()))?;
        let mut prod = c64(1.0, 0.0);
        for g in &full.gammas {
            prod *= g.det()?;
        }
        worst = worst.max((prod - c64(1.0, 0.0)).norm());
    }
    Ok(worst)
}

/// Diagnostics of a finished (or halted) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    /// Number of stored grid points.
    pub stored_points: usize,
    /// Finite-difference residual of the field equation (complete runs).
    pub residual: Option<f64>,
    pub max_constraint_violation: f64,
    /// Drift of the tagged reality condition.
    pub reality_drift: Option<f64>,
    /// `max |Π det Γ_α − 1|` for systems with that constraint.
    pub det_product_drift: Option<f64>,
    /// Name of the exact solution compared against, if any.
    pub oracle: Option<String>,
    /// L∞ deviation from that solution (of `F` for the scalar reductions,
    /// of `Γ` otherwise).
    pub oracle_error: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Residual, constraint, reality and oracle diagnostics of a run.
pub fn summarize(input: &SimulationInput, history: &FieldHistory) -> Result<RunSummary> {
    let system = &input.system;
    let complete = history.is_complete();
    let residual = if complete {
        finite(residual(history, system)?)
    } else {
        None
    };
    let reality_drift = match input.real_form {
        RealFormTag::None => None,
        tag => finite(reality_preservation(history, tag)),
    };
    let det_drift = if system.constraints.det_product_one {
        finite(det_product_drift(history, system)?)
    } else {
        None
    };
    let (oracle, oracle_error) = if complete {
        match &input.initial {
            InitialData::SineGordonKink { a } => (
                Some("analytic_kink"),
                sine_gordon_reduce(history, 1e-8)
                    .ok()
                    .and_then(|f| finite(f.max_abs_diff(|zm, zp| analytic_kink(zm, zp, *a)))),
            ),
            InitialData::SinhGordonLinear { epsilon, a } => (
                Some("linear_sinh_gordon"),
                sinh_gordon_reduce(history, 1e-8).ok().and_then(|f| {
                    finite(f.max_abs_diff(|zm, zp| linear_sinh_gordon(zm, zp, *epsilon, *a)))
                }),
            ),
            InitialData::ExpLinear { .. } if is_free(system) => (
                Some("free_factorization"),
                finite(history.max_error(|zm, zp| {
                    Ok(input
                        .initial
                        .exact(system, &history.grid, zm, zp)?
                        .expect("free exp-linear data has an exact solution"))
                })?),
            ),
            InitialData::Constant { .. } => {
                // Constant data is a solution exactly when it is a critical
                // point of the right-hand side.
                let start = &history.rows[0][0].gammas;
                let at_rest = rhs_blocks(system, &FieldState::new(start.clone()))?
                    .iter()
                    .all(|r| r.norm_max() <= 1e-12);
                if at_rest {
                    (
                        Some("constant"),
                        finite(history.max_error(|_, _| Ok(start.clone()))?),
                    )
                } else {
                    (None, None)
                }
            }
            _ => (None, None),
        }
    } else {
        (None, None)
    };
    Ok(RunSummary {
        status: history.status.clone(),
        stored_points: history.rows.iter().map(|r| r.len()).sum(),
        residual,
        max_constraint_violation: history.max_constraint_violation(),
        reality_drift,
        det_product_drift: det_drift,
        oracle: oracle.map(str::to_string),
        oracle_error,
    })
}

/// Writes the stored field as CSV with columns
/// `z_minus,z_plus,alpha,block_row,block_col,re,im` (`alpha` and the block
/// indices are 1-based).
pub fn write_csv<W: Write>(history: &FieldHistory, out: &mut W) -> io::Result<()> {
    writeln!(out, "z_minus,z_plus,alpha,block_row,block_col,re,im")?;
    for (j, row) in history.rows.iter().enumerate() {
        let zp = history.z_plus_at(j);
        for (i, pt) in row.iter().enumerate() {
            let zm = history.z_minus_at(i);
            for (a, g) in pt.gammas.iter().enumerate() {
                for r in 0..g.rows() {
                    for c in 0..g.cols() {
                        let z = g[(r, c)];
                        writeln!(
                            out,
                            "{zm},{zp},{},{},{},{},{}",
                            a + 1,
                            r + 1,
                            c + 1,
                            z.re,
                            z.im
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// The two-node folded system whose scalar reductions are the sine- and
/// sinh-Gordon equations.
///
/// It is the `p = 2` fold of the `sp_2` type I loop gradation: `Γ_2 =
/// Γ_1⁻¹`, both arcs fixed with `ε = +`, `C_{+0} = C_{+1} = 1`,
/// `C_{−0} = C_{−1} = c_−`. The single equation reads
/// `∂_+(Γ⁻¹∂_−Γ) = c_−(Γ² − Γ⁻²)`; with `c_− = 1/2`, `Γ = exp(iF/2)` gives
/// `∂_+∂_−F = 2 sin F` and `Γ = exp(F/2)` gives `∂_+∂_−F = 2 sinh F`.
pub fn sine_gordon_system(c_minus: C64) -> Result<TodaSystem> {
    let spec = GradationSpec::new(
        FamilyKind::Sp,
        GradationType::SoSpTypeI,
        2,
        vec![1, 1],
        vec![1],
    );
    let one = ComplexMatrix::scalar(c64(1.0, 0.0));
    let cm = ComplexMatrix::scalar(c_minus);
    build_system(
        &spec,
        1,
        &CouplingBlocks {
            plus: vec![one.clone(), one],
            minus: vec![cm.clone(), cm],
        },
    )
}

/// Fold pattern and decoration of [`sine_gordon_system`].
pub fn sine_gordon_fold() -> (FoldPattern, FoldDecoration) {
    (FoldPattern::EvenArcFixed, FoldDecoration::symplectic())
}

/// What a run writes into a system file: the system and its characteristic
/// data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationInput {
    pub system: TodaSystem,
    #[serde(default)]
    pub initial: InitialData,
    /// Reality condition the data satisfies; its drift is reported.
    #[serde(default)]
    pub real_form: RealFormTag,
}

impl SimulationInput {
    /// Parses either a full input or a bare system (with identity data).
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        match serde_json::from_str::<Self>(text) {
            Ok(input) => Ok(input),
            Err(e) => match TodaSystem::from_json(text) {
                Ok(system) => Ok(Self {
                    system,
                    initial: InitialData::default(),
                    real_form: RealFormTag::None,
                }),
                Err(_) => Err(e),
            },
        }
    }

    /// Pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("input serialization cannot fail")
    }
}

/// Ready-made simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// The static kink (`a = √2`, `θ = √2(z^− + z^+)`) on `[−5, 5]²`,
    /// marched from the corner `(z^−, z^+) = (−5, 5)`.
    SineGordonKink,
    /// Small-amplitude sinh-Gordon data (`ε = 10⁻³`) on `[0, 1]²`.
    SinhGordon,
    /// The periodic chain (`p = 3`, `r = 1`, unit couplings) at `Γ = I`.
    PeriodicChain,
    /// A periodic chain with `C_+ = 0` and exp-linear data, whose exact
    /// solution is the product of its characteristic data.
    FreeField,
}

impl Preset {
    /// All presets.
    pub const ALL: [Preset; 4] = [
        Preset::SineGordonKink,
        Preset::SinhGordon,
        Preset::PeriodicChain,
        Preset::FreeField,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Preset::SineGordonKink => "sine-gordon-kink",
            Preset::SinhGordon => "sinh-gordon",
            Preset::PeriodicChain => "periodic-chain",
            Preset::FreeField => "free-field",
        }
    }

    /// The system and its data.
    pub fn input(self) -> Result<SimulationInput> {
        match self {
            Preset::SineGordonKink => Ok(SimulationInput {
                system: sine_gordon_system(c64(0.5, 0.0))?,
                initial: InitialData::SineGordonKink {
                    a: std::f64::consts::SQRT_2,
                },
                real_form: RealFormTag::Compact,
            }),
            Preset::SinhGordon => Ok(SimulationInput {
                system: sine_gordon_system(c64(0.5, 0.0))?,
                initial: InitialData::SinhGordonLinear {
                    epsilon: 1e-3,
                    a: 1.0,
                },
                real_form: RealFormTag::RealSplit,
            }),
            Preset::PeriodicChain => Ok(SimulationInput {
                system: build_periodic_chain(3, 1, ChainCoupling::Identity)?,
                initial: InitialData::default(),
                real_form: RealFormTag::RealSplit,
            }),
            Preset::FreeField => {
                let system = build_periodic_chain(
                    3,
                    2,
                    ChainCoupling::Scaled {
                        plus: [0.0, 0.0],
                        minus: [1.0, 0.0],
                    },
                )?;
                let gen = |s: f64| {
                    ComplexMatrix::from_row_slice(
                        2,
                        2,
                        &[
                            c64(0.3 * s, 0.1),
                            c64(-0.2, 0.4 * s),
                            c64(0.5, -0.1 * s),
                            c64(-0.1, 0.2),
                        ],
                    )
                };
                Ok(SimulationInput {
                    system,
                    initial: InitialData::ExpLinear {
                        base: None,
                        minus: vec![gen(1.0)?, gen(-0.5)?, gen(2.0)?],
                        plus: vec![gen(-1.0)?, gen(0.7)?, gen(0.2)?],
                    },
                    real_form: RealFormTag::None,
                })
            }
        }
    }

    /// Default grid.
    pub fn default_grid(self) -> Grid {
        let g = match self {
            Preset::SineGordonKink => Grid::square(-5.0, 5.0, 512).map(|g| g.flipped(false, true)),
            Preset::SinhGordon => Grid::square(0.0, 1.0, 128),
            Preset::PeriodicChain | Preset::FreeField => Grid::square(0.0, 1.0, 64),
        };
        g.expect("preset grids are valid")
    }
}

impl FromStr for Preset {
    type Err = TodaError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                TodaError::InvalidData(format!(
                    "unknown preset '{s}' (expected one of: {})",
                    Preset::ALL.map(|p| p.name()).join(", ")
                ))
            })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_and_parsing() {
        let g: Grid = "-5,5,-5,5,0.01953125,0.01953125".parse().unwrap();
        assert_eq!((g.n_minus, g.n_plus), (512, 512));
        assert_eq!(g.z_minus_at(512), 5.0);
        assert!("0,1,0,1,0.3,0.1".parse::<Grid>().is_err());
        assert!("0,1,0,1".parse::<Grid>().is_err());
        assert!("1,0,0,1,0.1,0.1".parse::<Grid>().is_err());
        assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
    }

    #[test]
    fn kink_solves_sine_gordon_symbolically() {
        // ∂_+∂_−F = 2 sin F with θ = a z^− + (2/a) z^+, checked by finite
        // differences at a few points and for several slopes.
        for a in [0.5, 1.0, 2.0] {
            for (zm, zp) in [(0.1, -0.2), (0.7, 0.3), (-1.0, 0.4)] {
                let d = 1e-4;
                let f = |x, y| analytic_kink(x, y, a);
                let mixed = (f(zm + d, zp + d) - f(zm + d, zp - d) - f(zm - d, zp + d)
                    + f(zm - d, zp - d))
                    / (4.0 * d * d);
                assert!((mixed - 2.0 * f(zm, zp).sin()).abs() < 1e-5, "a = {a}");
            }
        }
        assert!(analytic_kink(-40.0, 0.0, 1.0).abs() < 1e-12);
        assert!((analytic_kink(40.0, 0.0, 1.0) - std::f64::consts::TAU).abs() < 1e-12);
    }

    #[test]
    fn sine_gordon_system_is_the_even_arc_fold() {
        let sys = sine_gordon_system(c64(0.5, 0.0)).unwrap();
        let fold = sys.fold.as_ref().unwrap();
        assert_eq!(fold.pattern, sine_gordon_fold().0);
        assert_eq!(sys.independent_sizes(), vec![1]);
        let g = ComplexMatrix::scalar(c64(0.0, 0.3).exp());
        let r = rhs_at(&sys, std::slice::from_ref(&g), &sys.c_plus, &sys.c_minus).unwrap();
        // c_−(Γ² − Γ⁻²) with Γ = e^{0.3i}: i·sin(0.6).
        assert!((r[0][(0, 0)] - c64(0.0, 0.6f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn identity_chain_stays_constant() {
        let input = Preset::PeriodicChain.input().unwrap();
        let grid = Grid::square(0.0, 1.0, 16).unwrap();
        let data = input.initial.goursat(&input.system, &grid).unwrap();
        let hist = integrate(&input.system, &data, None, &grid, &SolverConfig::default()).unwrap();
        assert!(hist.is_complete());
        let err = hist
            .max_error(|_, _| Ok(FieldState::identity(&[1, 1, 1]).gammas))
            .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn singular_data_halts() {
        let input = SimulationInput {
            system: build_periodic_chain(2, 1, ChainCoupling::Identity).unwrap(),
            initial: InitialData::Constant {
                gammas: Some(vec![
                    ComplexMatrix::scalar(c64(0.0, 0.0)),
                    ComplexMatrix::identity(1),
                ]),
            },
            real_form: RealFormTag::None,
        };
        let grid = Grid::square(0.0, 1.0, 8).unwrap();
        let data = input.initial.goursat(&input.system, &grid).unwrap();
        let hist = integrate(&input.system, &data, None, &grid, &SolverConfig::default()).unwrap();
        assert!(matches!(hist.status, RunStatus::BlowUp { .. }));
        assert!(hist.rows.is_empty());
    }

    #[test]
    fn wrap_angle_range() {
        for x in [-7.0, -3.2, 0.0, 3.2, 7.0, std::f64::consts::PI] {
            let y = wrap_angle(x);
            assert!(y > -std::f64::consts::PI - 1e-15 && y <= std::f64::consts::PI + 1e-15);
            assert!(
                ((x - y) / std::f64::consts::TAU - ((x - y) / std::f64::consts::TAU).round()).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn presets_round_trip_through_json() {
        for p in Preset::ALL {
            let input = p.input().unwrap();
            let back = SimulationInput::from_json(&input.to_json()).unwrap();
            assert_eq!(back, input);
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        let bare = Preset::PeriodicChain.input().unwrap().system.to_json();
        assert_eq!(
            SimulationInput::from_json(&bare).unwrap().initial,
            InitialData::default()
        );
    }
}
