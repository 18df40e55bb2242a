//! `loop-toda`: gradations, Toda systems, folding and light-cone simulation
//! from the command line.
//!
//! Exit statuses: 0 ok, 1 domain failure, 2 parse error, 3 enumeration cap
//! exceeded (see `TODA_MAX_ENUM`), 4 integration blow-up.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use loop_toda::lie_core::FamilyKind;
use loop_toda::solver::Grid;
use loop_toda_cli::{
    cmd_check, cmd_describe, cmd_enumerate, cmd_simulate, cmd_validate, enumeration_cap, CliError,
    CliResult, ExitStatus, Format, InputRef, SimulateOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "loop-toda",
    version,
    about = "Loop-group Toda systems: gradations, folding and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct FormatFlags {
    /// Print JSON.
    #[arg(long)]
    json: bool,
    /// Print LaTeX.
    #[arg(long)]
    latex: bool,
}

impl FormatFlags {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.latex {
            Format::Latex
        } else {
            Format::Text
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a gradation spec file against its constraints.
    Validate {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// List every valid spec of a family on C^n with order M.
    Enumerate {
        /// gl, sl, so or sp.
        family: FamilyKind,
        n: usize,
        #[arg(value_name = "M")]
        order: u32,
        #[command(flatten)]
        format: FormatFlags,
    },
    /// Describe a spec (index table, class, fold) or a system (equations).
    #[command(group(ArgGroup::new("source").required(true).args(["spec", "system", "preset"])))]
    Describe {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        system: Option<PathBuf>,
        #[arg(long, value_name = "NAME")]
        preset: Option<String>,
        #[command(flatten)]
        format: FormatFlags,
    },
    /// Integrate a system from characteristic data; writes field.csv and
    /// manifest.json.
    #[command(group(ArgGroup::new("source").required(true).args(["system", "preset"])))]
    Simulate {
        #[arg(long, value_name = "FILE")]
        system: Option<PathBuf>,
        /// sine-gordon-kink, sinh-gordon, periodic-chain or free-field.
        #[arg(long, value_name = "NAME")]
        preset: Option<String>,
        /// "zmin,zmax,wmin,wmax,h-,h+"; a negative step marches down from
        /// the upper end of its range.
        #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
        /// Tolerance on the initial-data constraints.
        #[arg(long, value_name = "X")]
        tol: Option<f64>,
        /// Store every n-th grid line.
        #[arg(long, default_value_t = 1, value_name = "N")]
        stride: usize,
        /// Print the manifest as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the invariant suite on a spec.
    Check {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Threshold of the algebraic identities.
        #[arg(long, value_name = "X")]
        tol: Option<f64>,
        #[arg(long)]
        json: bool,
    },
}

fn source(spec: Option<PathBuf>, system: Option<PathBuf>, preset: Option<String>) -> InputRef {
    match (spec, system, preset) {
        (Some(p), _, _) => InputRef::Spec(p),
        (_, Some(p), _) => InputRef::System(p),
        (_, _, Some(name)) => InputRef::Preset(name),
        _ => unreachable!("clap requires one source"),
    }
}

fn run(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Validate { spec, json } => cmd_validate(&spec, json, out),
        Command::Enumerate {
            family,
            n,
            order,
            format,
        } => cmd_enumerate(family, n, order, enumeration_cap()?, format.format(), out),
        Command::Describe {
            spec,
            system,
            preset,
            format,
        } => cmd_describe(&source(spec, system, preset), format.format(), out),
        Command::Simulate {
            system,
            preset,
            grid,
            output,
            tol,
            stride,
            json,
        } => {
            let grid = grid
                .map(|g| g.parse::<Grid>())
                .transpose()
                .map_err(|e| CliError::parse(e.to_string()))?;
            let opts = SimulateOptions {
                input: source(None, system, preset),
                grid,
                output,
                tol,
                stride,
            };
            cmd_simulate(&opts, json, out)
        }
        Command::Check { spec, tol, json } => cmd_check(&spec, tol, json, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let status = match run(cli.command, &mut out) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.status
        }
    };
    let _ = out.flush();
    debug_assert!(status != ExitStatus::Ok || status.code() == 0);
    ExitCode::from(status.code())
}
