//! Commands of the `loop-toda` binary: spec validation, enumeration, system
//! description, simulation and the invariant suite.
//!
//! Every command writes its report to a caller-supplied writer and returns an
//! [`ExitStatus`]; the binary only parses arguments and maps the status to
//! the process exit code.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use loop_toda::check::{run_checks, CheckConfig};
use loop_toda::gradation::{
    block_index_table, enumerate_specs, validate_spec, GradationSpec, DEFAULT_ENUM_CAP,
};
use loop_toda::lie_core::FamilyKind;
use loop_toda::solver::{
    integrate, summarize, write_csv, Grid, Preset, RunStatus, RunSummary, SimulationInput,
    SolverConfig,
};
use loop_toda::toda_builder::{fold_for_spec, spec_class, TodaSystem};
use loop_toda::TodaError;

/// Environment variable capping the number of enumeration candidates.
pub const MAX_ENUM_VAR: &str = "TODA_MAX_ENUM";

/// Process exit statuses; a stable contract of the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Ok,
    /// The input is well formed but fails a domain check.
    DomainFailure,
    /// The input could not be read or parsed.
    Parse,
    /// The enumeration cap was exceeded.
    CapExceeded,
    /// The integration halted on a singular node value.
    BlowUp,
}

impl ExitStatus {
    /// Numeric process exit code.
    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::DomainFailure => 1,
            ExitStatus::Parse => 2,
            ExitStatus::CapExceeded => 3,
            ExitStatus::BlowUp => 4,
        }
    }
}

/// A failed command: the status to exit with and a message for stderr.
#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        CliError {
            status: ExitStatus::Parse,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        CliError {
            status: ExitStatus::DomainFailure,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<TodaError> for CliError {
    fn from(e: TodaError) -> Self {
        let status = match e {
            TodaError::CapExceeded { .. } => ExitStatus::CapExceeded,
            _ => ExitStatus::DomainFailure,
        };
        CliError {
            status,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::domain(format!("i/o error: {e}"))
    }
}

pub type CliResult = std::result::Result<ExitStatus, CliError>;

fn read_file(path: &Path) -> std::result::Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))
}

/// Reads a spec file.
pub fn load_spec(path: &Path) -> std::result::Result<GradationSpec, CliError> {
    GradationSpec::from_json(&read_file(path)?)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

/// Reads a system file: a full simulation input or a bare system.
pub fn load_input(path: &Path) -> std::result::Result<SimulationInput, CliError> {
    SimulationInput::from_json(&read_file(path)?)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(out, "{text}")
}

/// `validate`: status 0 iff the spec satisfies every constraint; the
/// violations are listed one per line.
pub fn cmd_validate(spec_file: &Path, json: bool, out: &mut dyn Write) -> CliResult {
    let spec = load_spec(spec_file)?;
    let violations: Vec<String> = validate_spec(&spec).iter().map(|v| v.to_string()).collect();
    if json {
        json_line(
            out,
            &serde_json::json!({ "valid": violations.is_empty(), "violations": violations }),
        )?;
    } else if violations.is_empty() {
        writeln!(out, "valid")?;
    } else {
        for v in &violations {
            writeln!(out, "{v}")?;
        }
    }
    Ok(if violations.is_empty() {
        ExitStatus::Ok
    } else {
        ExitStatus::DomainFailure
    })
}

/// Output format of listings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Latex,
}

/// Enumeration cap from [`MAX_ENUM_VAR`], or the library default.
pub fn enumeration_cap() -> std::result::Result<usize, CliError> {
    match std::env::var(MAX_ENUM_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::parse(format!("{MAX_ENUM_VAR}='{v}' is not a count"))),
        Err(_) => Ok(DEFAULT_ENUM_CAP),
    }
}

fn tuple<T: fmt::Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn spec_line(spec: &GradationSpec) -> String {
    format!(
        "{}_{} M={} type={} p={} n={} k={} class={}",
        spec.family,
        spec.n,
        spec.order,
        spec.gradation_type.name(),
        spec.p(),
        tuple(&spec.n_list),
        tuple(&spec.k_list),
        spec_class(spec).name()
    )
}

/// `enumerate`: every valid spec of a family, `n` and `M`, in lexicographic
/// order, with its index table and equation class.
pub fn cmd_enumerate(
    family: FamilyKind,
    n: usize,
    order: u32,
    cap: usize,
    format: Format,
    out: &mut dyn Write,
) -> CliResult {
    let specs = enumerate_specs(family, n, order, cap)?;
    match format {
        Format::Json => {
            let listing: Vec<serde_json::Value> = specs
                .iter()
                .map(|s| {
                    Ok(serde_json::json!({
                        "spec": s,
                        "class": spec_class(s).name(),
                        "table": block_index_table(s)?,
                    }))
                })
                .collect::<loop_toda::Result<_>>()?;
            json_line(out, &listing)?;
        }
        Format::Latex => {
            for s in &specs {
                writeln!(out, "% {}", spec_line(s))?;
                writeln!(out, "\\[")?;
                write!(out, "{}", block_index_table(s)?.to_latex())?;
                writeln!(out, "\\]")?;
            }
        }
        Format::Text => {
            for s in &specs {
                writeln!(out, "{}", spec_line(s))?;
                let table = block_index_table(s)?;
                for a in 0..s.p() {
                    let cells: Vec<String> = (0..s.p())
                        .map(|b| {
                            let idx: Vec<String> =
                                table.indices(a, b).iter().map(u32::to_string).collect();
                            idx.join("/")
                        })
                        .collect();
                    writeln!(out, "  [{}]", cells.join(" "))?;
                }
            }
        }
    }
    Ok(ExitStatus::Ok)
}

/// What `describe` and `simulate` operate on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputRef {
    Spec(PathBuf),
    System(PathBuf),
    Preset(String),
}

impl InputRef {
    fn load(&self) -> std::result::Result<SimulationInput, CliError> {
        match self {
            InputRef::System(path) => load_input(path),
            InputRef::Preset(name) => {
                let preset: Preset = name
                    .parse()
                    .map_err(|e: TodaError| CliError::parse(e.to_string()))?;
                Ok(preset.input()?)
            }
            InputRef::Spec(path) => Err(CliError::parse(format!(
                "{} is a spec; a system file or preset is needed",
                path.display()
            ))),
        }
    }
}

/// `describe`: index table, class and fold of a spec, or the equations of a
/// system.
pub fn cmd_describe(input: &InputRef, format: Format, out: &mut dyn Write) -> CliResult {
    if let InputRef::Spec(path) = input {
        let spec = load_spec(path)?;
        let violations = validate_spec(&spec);
        if !violations.is_empty() {
            for v in &violations {
                writeln!(out, "{v}")?;
            }
            return Ok(ExitStatus::DomainFailure);
        }
        let table = block_index_table(&spec)?;
        let fold = fold_for_spec(&spec);
        match format {
            Format::Json => json_line(
                out,
                &serde_json::json!({
                    "spec": spec,
                    "class": spec_class(&spec).name(),
                    "table": table,
                    "fold": fold.map(|(pattern, deco)| serde_json::json!({"pattern": pattern, "decoration": deco})),
                }),
            )?,
            Format::Latex => write!(out, "{}", table.to_latex())?,
            Format::Text => {
                writeln!(out, "{}", spec_line(&spec))?;
                if let Some((pattern, _)) = fold {
                    writeln!(out, "fold: {pattern}")?;
                }
                write!(out, "{}", table.to_latex())?;
            }
        }
        return Ok(ExitStatus::Ok);
    }
    let system: TodaSystem = input.load()?.system;
    match format {
        Format::Json => writeln!(out, "{}", system.to_json())?,
        Format::Latex | Format::Text => write!(out, "{}", system.to_latex())?,
    }
    Ok(ExitStatus::Ok)
}

/// Options of `simulate`.
#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub input: InputRef,
    pub grid: Option<Grid>,
    pub output: Option<PathBuf>,
    pub tol: Option<f64>,
    pub stride: usize,
}

/// Record of one `simulate` run, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub input: InputRef,
    pub grid: Grid,
    pub config: SolverConfig,
    pub outputs: Vec<PathBuf>,
    pub exit_status: ExitStatus,
    pub exit_code: u8,
    pub summary: RunSummary,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifests serialize")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

/// `simulate`: integrates the system and writes `field.csv` and
/// `manifest.json` to the output directory (also after a blow-up, with the
/// rows completed before it).
pub fn cmd_simulate(opts: &SimulateOptions, json: bool, out: &mut dyn Write) -> CliResult {
    let input = opts.input.load()?;
    let grid = match (opts.grid, &opts.input) {
        (Some(g), _) => g,
        (None, InputRef::Preset(name)) => name
            .parse::<Preset>()
            .map_err(|e| CliError::parse(e.to_string()))?
            .default_grid(),
        (None, _) => return Err(CliError::parse("--grid is required with --system")),
    };
    let mut config = SolverConfig {
        checkpoint_stride: opts.stride,
        ..SolverConfig::default()
    };
    if let Some(tol) = opts.tol {
        config.tol_constraint = tol;
    }
    let data = input.initial.goursat(&input.system, &grid)?;
    let history = integrate(&input.system, &data, None, &grid, &config)?;
    let summary = summarize(&input, &history)?;
    let status = match summary.status {
        RunStatus::Completed => ExitStatus::Ok,
        RunStatus::BlowUp { .. } => ExitStatus::BlowUp,
    };
    let mut outputs = Vec::new();
    if let Some(dir) = &opts.output {
        fs::create_dir_all(dir)?;
        let csv = dir.join("field.csv");
        let mut w = io::BufWriter::new(fs::File::create(&csv)?);
        write_csv(&history, &mut w)?;
        w.flush()?;
        outputs.push(csv);
        outputs.push(dir.join("manifest.json"));
    }
    let manifest = RunManifest {
        command: "simulate".into(),
        input: opts.input.clone(),
        grid,
        config,
        outputs,
        exit_status: status,
        exit_code: status.code(),
        summary,
    };
    if let Some(dir) = &opts.output {
        fs::write(dir.join("manifest.json"), manifest.to_json() + "\n")?;
    }
    if json {
        writeln!(out, "{}", manifest.to_json())?;
    } else {
        let s = &manifest.summary;
        match &s.status {
            RunStatus::Completed => writeln!(out, "status: completed")?,
            RunStatus::BlowUp {
                z_minus,
                z_plus,
                node,
                condition,
            } => writeln!(
                out,
                "status: blow-up at (z-, z+) = ({z_minus}, {z_plus}), node {node}, condition {}",
                opt(*condition)
            )?,
        }
        writeln!(out, "points: {}", s.stored_points)?;
        writeln!(out, "residual: {}", opt(s.residual))?;
        writeln!(
            out,
            "constraint violation: {:.3e}",
            s.max_constraint_violation
        )?;
        writeln!(out, "reality drift: {}", opt(s.reality_drift))?;
        writeln!(out, "det product drift: {}", opt(s.det_product_drift))?;
        if let Some(name) = &s.oracle {
            writeln!(out, "error vs {name}: {}", opt(s.oracle_error))?;
        }
        for p in &manifest.outputs {
            writeln!(out, "wrote {}", p.display())?;
        }
    }
    Ok(status)
}

/// `check`: validation, then the invariant suite; status 1 when anything
/// fails.
pub fn cmd_check(spec_file: &Path, tol: Option<f64>, json: bool, out: &mut dyn Write) -> CliResult {
    let spec = load_spec(spec_file)?;
    let mut config = CheckConfig::default();
    if let Some(t) = tol {
        config.tol = t;
    }
    let report = run_checks(&spec, &config)?;
    if json {
        json_line(out, &report)?;
    } else {
        write!(out, "{report}")?;
    }
    Ok(if report.passed() {
        ExitStatus::Ok
    } else {
        ExitStatus::DomainFailure
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        let codes: Vec<u8> = [
            ExitStatus::Ok,
            ExitStatus::DomainFailure,
            ExitStatus::Parse,
            ExitStatus::CapExceeded,
            ExitStatus::BlowUp,
        ]
        .iter()
        .map(|s| s.code())
        .collect();
        assert_eq!(codes, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn library_errors_map_to_statuses() {
        let cap: CliError = TodaError::CapExceeded { cap: 5 }.into();
        assert_eq!(cap.status, ExitStatus::CapExceeded);
        let domain: CliError = TodaError::InvalidSpec("x".into()).into();
        assert_eq!(domain.status, ExitStatus::DomainFailure);
    }

    #[test]
    fn enumerate_writes_one_header_per_spec() {
        let mut out = Vec::new();
        let status = cmd_enumerate(
            FamilyKind::Gl,
            2,
            2,
            DEFAULT_ENUM_CAP,
            Format::Text,
            &mut out,
        )
        .unwrap();
        assert_eq!(status, ExitStatus::Ok);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("gl_2 ")).count(), 2);
    }

    #[test]
    fn simulate_preset_without_output_reports_summary() {
        let opts = SimulateOptions {
            input: InputRef::Preset("periodic-chain".into()),
            grid: Some(Grid::square(0.0, 1.0, 4).unwrap()),
            output: None,
            tol: None,
            stride: 1,
        };
        let mut out = Vec::new();
        assert_eq!(cmd_simulate(&opts, true, &mut out).unwrap(), ExitStatus::Ok);
        let manifest = RunManifest::from_json(&String::from_utf8(out).unwrap()).unwrap();
        assert!(manifest.outputs.is_empty());
        assert_eq!(manifest.summary.stored_points, 25);
    }

    #[test]
    fn spec_input_cannot_be_simulated() {
        let err = InputRef::Spec("s.json".into()).load().unwrap_err();
        assert_eq!(err.status, ExitStatus::Parse);
    }
}
