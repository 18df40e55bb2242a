//! The invariant suite for a single gradation spec.
//!
//! Every check samples seeded random data and reports a measured value
//! against a threshold: grading consistency of the automorphism (order,
//! projector completeness, bracket closure, algebra membership), agreement of
//! the block equations with the full matrix equation, and for folded specs
//! the fold rules (constraints from the unfolded chain, invariance of the
//! constraint surface under the unfolded flow).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::folding::{fold_constraints, make_fold, unfold, verify_fold_invariance, FoldStepScheme};
use crate::gradation::{
    grading_component, grading_components, project_to_algebra, validate_spec, Automorphism,
    GradationSpec, GradationType,
};
use crate::lie_core::{commutator, ComplexMatrix, FamilyKind};
use crate::sampling::{
    random_algebra_element, random_constrained_state, random_couplings, random_fold_state, rng,
    SampleRng,
};
use crate::toda_builder::{build_system, fold_for_spec, rhs_blocks_vs_full, TodaSystem};

/// How a measured value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `value ≤ threshold` (errors, drifts).
    AtMost,
    /// Passes when `value ≥ threshold` (convergence orders).
    AtLeast,
}

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl InvariantResult {
    fn new(name: &str, value: f64, threshold: f64, comparison: Comparison) -> Self {
        let passed = match comparison {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
        };
        InvariantResult {
            name: name.to_string(),
            value,
            threshold,
            comparison,
            passed,
        }
    }
}

impl fmt::Display for InvariantResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        write!(
            f,
            "{} {}: {:.3e} ({op} {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold
        )
    }
}

/// Sampling parameters of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub seed: u64,
    /// Random elements drawn per algebraic check.
    pub samples: usize,
    /// Threshold for the algebraic identities, relative to the size of the
    /// data.
    pub tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 2024,
            samples: 4,
            tol: 1e-12,
        }
    }
}

/// Report of the suite: validation violations (when present no invariant is
/// run) and one result per invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub spec: GradationSpec,
    pub violations: Vec<String>,
    pub results: Vec<InvariantResult>,
}

impl CheckReport {
    /// `true` when the spec is valid and every invariant holds.
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.results.iter().all(|r| r.passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "FAIL validation: {v}")?;
        }
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Step size and count of the fold-invariance runs.
const FOLD_STEP: f64 = 2e-4;
const FOLD_STEPS: usize = 10;
/// Minimal observed order of the per-step fold drift of the additive scheme.
const FOLD_ORDER: f64 = 1.9;
/// Bound on the constraint drift of the multiplicative scheme.
const FOLD_DRIFT: f64 = 1e-10;

fn relative(err: f64, x: &ComplexMatrix) -> f64 {
    err / x.norm_max().max(1.0)
}

/// `max ‖A^M x − x‖` over random algebra elements.
pub fn automorphism_order(
    spec: &GradationSpec,
    aut: &Automorphism,
    rng: &mut SampleRng,
    samples: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_algebra_element(spec, rng)?;
        worst = worst.max(relative(aut.apply_power(&x, spec.order)?.dist_max(&x), &x));
    }
    Ok(worst)
}

/// `max ‖Σ_k P_k(x) − x‖` over random algebra elements.
pub fn projector_completeness(
    spec: &GradationSpec,
    aut: &Automorphism,
    rng: &mut SampleRng,
    samples: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_algebra_element(spec, rng)?;
        let mut sum = ComplexMatrix::zeros(x.rows(), x.cols());
        for part in grading_components(&x, aut)? {
            sum += &part;
        }
        worst = worst.max(relative(sum.dist_max(&x), &x));
    }
    Ok(worst)
}

/// `max ‖[x_j, y_k] − P_{j+k}([x_j, y_k])‖` over all pairs of grades and
/// random algebra elements.
pub fn bracket_closure(
    spec: &GradationSpec,
    aut: &Automorphism,
    rng: &mut SampleRng,
    samples: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let xs = grading_components(&random_algebra_element(spec, rng)?, aut)?;
        let ys = grading_components(&random_algebra_element(spec, rng)?, aut)?;
        for (j, x) in xs.iter().enumerate() {
            for (k, y) in ys.iter().enumerate() {
                let b = commutator(x, y)?;
                let proj = grading_component(&b, (j + k) as i64, aut)?;
                worst = worst.max(relative(proj.dist_max(&b), &b));
            }
        }
    }
    Ok(worst)
}

/// `max ‖A(x) − π(A(x))‖`, with `π` the projection onto the algebra: the
/// automorphism maps the algebra to itself.
pub fn algebra_membership(
    spec: &GradationSpec,
    aut: &Automorphism,
    rng: &mut SampleRng,
    samples: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_algebra_element(spec, rng)?;
        let ax = aut.apply(&x)?;
        worst = worst.max(relative(project_to_algebra(&ax, spec)?.dist_max(&ax), &ax));
    }
    Ok(worst)
}

/// The level-1 system of a spec with random homogeneous couplings.
pub fn random_system(spec: &GradationSpec, rng: &mut SampleRng) -> Result<TodaSystem> {
    let c = random_couplings(spec, 1, rng)?;
    build_system(spec, 1, &c)
}

/// Largest fold-constraint drift of the unfolded flow from a random point of
/// the constraint surface.
pub fn fold_drift(
    system: &TodaSystem,
    h: f64,
    scheme: FoldStepScheme,
    rng: &mut SampleRng,
) -> Result<Option<f64>> {
    let Some(map) = &system.fold else {
        return Ok(None);
    };
    let state = random_fold_state(map, &system.block_sizes, 0.3, rng)?;
    verify_fold_invariance(map, &unfold(system), &state, FOLD_STEPS, h, scheme).map(Some)
}

/// Runs the whole suite on a spec.
pub fn run_checks(spec: &GradationSpec, config: &CheckConfig) -> Result<CheckReport> {
    let violations: Vec<String> = validate_spec(spec).iter().map(|v| v.to_string()).collect();
    let mut report = CheckReport {
        spec: spec.clone(),
        violations,
        results: Vec::new(),
    };
    if !report.violations.is_empty() {
        return Ok(report);
    }
    let mut rng = rng(config.seed);
    let aut = Automorphism::from_spec(spec)?;
    let n = config.samples;
    let tol = config.tol;
    let results = &mut report.results;
    results.push(InvariantResult::new(
        "automorphism_order",
        automorphism_order(spec, &aut, &mut rng, n)?,
        tol,
        Comparison::AtMost,
    ));
    results.push(InvariantResult::new(
        "projector_completeness",
        projector_completeness(spec, &aut, &mut rng, n)?,
        tol,
        Comparison::AtMost,
    ));
    results.push(InvariantResult::new(
        "bracket_closure",
        bracket_closure(spec, &aut, &mut rng, n)?,
        tol,
        Comparison::AtMost,
    ));
    if spec.family != FamilyKind::Gl {
        results.push(InvariantResult::new(
            "algebra_membership",
            algebra_membership(spec, &aut, &mut rng, n)?,
            tol,
            Comparison::AtMost,
        ));
    }
    if spec.gradation_type == GradationType::Trivial {
        return Ok(report);
    }

    let system = random_system(spec, &mut rng)?;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let state = random_constrained_state(&system, 0.5, &mut rng)?;
        worst = worst.max(rhs_blocks_vs_full(&system, &state)?);
    }
    results.push(InvariantResult::new(
        "block_vs_full",
        worst,
        tol,
        Comparison::AtMost,
    ));

    if let Some((pattern, deco)) = fold_for_spec(spec) {
        let map = make_fold(spec.p(), pattern, &deco)?;
        let folded = fold_constraints(&map, &unfold(&system))?;
        let same = folded.class == system.class
            && folded.constraints == system.constraints
            && folded.fold == system.fold;
        results.push(InvariantResult::new(
            "fold_matches_build",
            if same { 0.0 } else { 1.0 },
            0.0,
            Comparison::AtMost,
        ));
        let seed_rng = rng.clone();
        let drift = |h: f64, scheme| fold_drift(&system, h, scheme, &mut seed_rng.clone());
        let coarse = drift(FOLD_STEP, FoldStepScheme::Euler)?.unwrap_or(0.0);
        let fine = drift(FOLD_STEP / 2.0, FoldStepScheme::Euler)?.unwrap_or(0.0);
        if coarse > FOLD_DRIFT {
            results.push(InvariantResult::new(
                "fold_invariance_order",
                (coarse / fine).log2(),
                FOLD_ORDER,
                Comparison::AtLeast,
            ));
        } else {
            // The constraint surface is a point (e.g. 1×1 fixed nodes of so):
            // there is no drift whose order could be measured.
            results.push(InvariantResult::new(
                "fold_invariance_euler_drift",
                coarse,
                FOLD_DRIFT,
                Comparison::AtMost,
            ));
        }
        results.push(InvariantResult::new(
            "fold_invariance_drift",
            drift(FOLD_STEP, FoldStepScheme::Multiplicative)?.unwrap_or(0.0),
            FOLD_DRIFT,
            Comparison::AtMost,
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_two_block_spec_passes() {
        let spec = GradationSpec::new(
            FamilyKind::Gl,
            GradationType::GlInner,
            2,
            vec![2, 1],
            vec![1],
        );
        let report = run_checks(&spec, &CheckConfig::default()).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.results.iter().any(|r| r.name == "block_vs_full"));
    }

    #[test]
    fn so_spec_passes_with_fold_checks() {
        let spec = GradationSpec::new(
            FamilyKind::So,
            GradationType::SoSpTypeI,
            4,
            vec![1, 2, 1],
            vec![1, 1],
        );
        let report = run_checks(&spec, &CheckConfig::default()).unwrap();
        assert!(report.passed(), "{report}");
        let names: Vec<&str> = report.results.iter().map(|r| r.name.as_str()).collect();
        assert!(names.contains(&"algebra_membership"));
        assert!(names.contains(&"fold_invariance_order"));
    }

    #[test]
    fn invalid_spec_reports_violations_only() {
        let spec = GradationSpec::new(
            FamilyKind::So,
            GradationType::SoSpTypeI,
            4,
            vec![1, 2, 1],
            vec![1, 2],
        );
        let report = run_checks(&spec, &CheckConfig::default()).unwrap();
        assert!(!report.violations.is_empty());
        assert!(report.results.is_empty());
        assert!(!report.passed());
    }
}
