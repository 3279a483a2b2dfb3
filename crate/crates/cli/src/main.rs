//! `diffusion1d` command-line tool.
//!
//! Exit codes: 0 success, 1 invalid spec, 2 an undetermined verdict,
//! 3 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffusion1d::analysis::Analysis;
use diffusion1d::builtin::{builtin_document, builtin_names};
use diffusion1d::dirichlet::TestFunction;
use diffusion1d::report::{Report, SimulationRequest};
use diffusion1d::simulator::{build_chain_in, simulate_path, Holding, Mode, Observable, SimConfig};
use diffusion1d::{parse_spec, DiffusionSpec, Error};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_UNDETERMINED: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "diffusion1d", version, about = "Analyse generalized one-dimensional diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a spec is well formed.
    Validate(Common),
    /// Point classes, regular decomposition, endpoints and communication classes.
    Classify(Common),
    /// Decide Hunt's hypothesis.
    CheckHunt(Common),
    /// Decide symmetrizability of the killed and the full process.
    CheckSymmetry(Common),
    /// Symmetrizing measures, optionally a family member with explicit constants.
    Measure {
        #[command(flatten)]
        common: Common,
        /// One positive constant per component, comma separated.
        #[arg(long, value_delimiter = ',')]
        constants: Option<Vec<f64>>,
    },
    /// Dirichlet form descriptor, regularity and optional energy.
    Dirichlet {
        #[command(flatten)]
        common: Common,
        /// JSON file `{"f": {...}, "g": {...}}` with two test functions.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Monte Carlo path, hitting probability and symmetry defect.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Print a built-in example spec; lists the names when none is given.
    Example {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Spec document (JSON).
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    spec: Option<PathBuf>,
    /// Name of a built-in example.
    #[arg(long)]
    example: Option<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    /// Grid spacing in scale units.
    #[arg(long, default_value_t = 0.02)]
    h: f64,
    /// `lo,hi`.
    #[arg(long, default_value = "-10,10", allow_hyphen_values = true)]
    window: String,
    #[arg(long, default_value_t = 1000)]
    n_rep: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// full, killed_at_traps or part_on_window.
    #[arg(long, default_value = "full")]
    mode: Mode,
    /// deterministic or exponential.
    #[arg(long, default_value = "deterministic")]
    holding: Holding,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Hitting target; defaults to the right end of the window.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<f64>,
    /// Observable `lo,hi` or `lo,hi:expr` for the symmetry defect.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// Write the sample path as `t,x,status` CSV.
    #[arg(long)]
    paths_csv: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Undetermined { .. } => EXIT_UNDETERMINED,
            Error::Syntax { .. }
            | Error::Expr { .. }
            | Error::Overlap(_)
            | Error::CoverageGap(_)
            | Error::InvalidPiece(_)
            | Error::NotMonotone(_) => EXIT_INVALID,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load(common: &Common) -> Result<DiffusionSpec, Failure> {
    let text = match (&common.spec, &common.example) {
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => builtin_document(name)?.to_string(),
        _ => return Err(Failure::usage("give exactly one of --spec or --example")),
    };
    Ok(parse_spec(&text)?)
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_window(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::usage(format!("--window expects `lo,hi`, got `{text}`"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn load_profiles(path: &PathBuf) -> Result<(TestFunction, TestFunction), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut take = |key: &str| -> Result<TestFunction, Failure> {
        let v = doc
            .get_mut(key)
            .map(serde_json::Value::take)
            .ok_or_else(|| Failure::usage(format!("{}: missing `{key}`", path.display())))?;
        serde_json::from_value(v).map_err(|e| Failure::usage(format!("{}: `{key}`: {e}", path.display())))
    };
    Ok((take("f")?, take("g")?))
}

fn simulation_request(sim: &SimArgs) -> Result<SimulationRequest, Failure> {
    let observable = |o: &Option<String>| -> Result<Option<Observable>, Failure> {
        o.as_deref().map(Observable::parse).transpose().map_err(Failure::from)
    };
    if sim.threads == 0 {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    Ok(SimulationRequest {
        window: parse_window(&sim.window)?,
        h: sim.h,
        x0: sim.x0,
        target: sim.target,
        t_max: sim.t_max,
        n_rep: sim.n_rep,
        seed: sim.seed,
        config: SimConfig {
            mode: sim.mode,
            holding: sim.holding,
            threads: sim.threads,
            ..SimConfig::default()
        },
        f: observable(&sim.f)?,
        g: observable(&sim.g)?,
    })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let common = match &cli.command {
        Command::Example { name, out } => {
            let text = match name {
                Some(n) => builtin_document(n)?.trim_end().to_string(),
                None => builtin_names().join("\n"),
            };
            write_out(out.as_ref(), &text)?;
            return Ok(EXIT_OK);
        }
        Command::Validate(c) | Command::Classify(c) | Command::CheckHunt(c) | Command::CheckSymmetry(c) => c,
        Command::Measure { common, .. } | Command::Dirichlet { common, .. } | Command::Simulate { common, .. } => {
            common
        }
    };
    let spec = load(common)?;
    let mut report = Report::new(&spec);
    if !report.add_validation(&spec) {
        write_out(common.out.as_ref(), &report.to_json())?;
        return Ok(EXIT_INVALID);
    }
    let an = Analysis::new(&spec);
    match &cli.command {
        Command::Validate(_) | Command::Example { .. } => {}
        Command::Classify(_) => report.add_classification(&an),
        Command::CheckHunt(_) => report.add_hunt(&an),
        Command::CheckSymmetry(_) => {
            report.add_hunt(&an);
            report.add_symmetry(&an, None)?;
        }
        Command::Measure { constants, .. } => report.add_symmetry(&an, constants.as_deref())?,
        Command::Dirichlet { profiles, .. } => {
            let profiles = profiles.as_ref().map(load_profiles).transpose()?;
            report.add_dirichlet(&an, profiles.as_ref().map(|(f, g)| (f, g)))?;
        }
        Command::Simulate { sim, .. } => {
            let req = simulation_request(sim)?;
            report.add_simulation(&an, &req)?;
            if let Some(path) = &sim.paths_csv {
                let chain = build_chain_in(&an, req.window, req.h)?;
                let sample = simulate_path(&spec, &chain, req.x0, req.t_max, &req.config, req.seed)?;
                std::fs::write(path, sample.to_csv())
                    .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            }
        }
    }
    write_out(common.out.as_ref(), &report.to_json())?;
    Ok(if report.has_undetermined() {
        EXIT_UNDETERMINED
    } else {
        EXIT_OK
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
