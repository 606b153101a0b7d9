use clap::{Parser, Subcommand, ValueEnum};
use cpl_core::body::ConvexBody;
use cpl_core::constructions::{self, Budget, CertKind, Ledger};
use cpl_core::distances::{self, DistanceBound};
use cpl_core::error::Error;
use cpl_core::families::{CounterexamplePair, Family};
use cpl_core::harness::{self, SuiteSpec, COUNTEREXAMPLE};
use cpl_core::sampling::{Estimate, SamplerConfig, DEFAULT_SAMPLES};
use cpl_core::{io, measure, positions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_CERTIFICATE: u8 = 4;

#[derive(Parser)]
#[command(name = "cpl", version, about = "Convex body positions, embeddings and distance bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Scales for `theorem1` (repeatable) or the codimension fraction for `qs`.
    #[arg(long, global = true)]
    eps: Vec<f64>,
    /// Treat regression-constant checks as failures.
    #[arg(long, global = true)]
    strict: bool,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one quantity of a body.
    Estimate { body: PathBuf, quantity: Quantity },
    /// Run a pipeline: `cpl pipeline BODY [BODY2] PIPELINE`.
    Pipeline {
        #[arg(required = true, num_args = 2..=3)]
        args: Vec<String>,
        /// Trials for `qs`.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Smaller optimizer budgets.
        #[arg(long)]
        light: bool,
    },
    /// Run a verification suite and emit CSV.
    Verify { suite: PathBuf },
    /// Distance bound between two bodies.
    Distance {
        k: PathBuf,
        d: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Bg)]
        method: Method,
    },
    /// Write a body from a named family.
    Sample {
        family: String,
        dim: usize,
        /// Number of points for `gluskin` (default `4 * dim`).
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        symmetric: bool,
        /// For `cylinder-counterexample`: emit the thin body instead of the tall one.
        #[arg(long)]
        thin: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    #[value(name = "M")]
    M,
    #[value(name = "Mstar")]
    Mstar,
    #[value(name = "ell")]
    Ell,
    #[value(name = "ell_polar")]
    EllPolar,
    #[value(name = "volume")]
    Volume,
    #[value(name = "dK")]
    DK,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bg,
    Theorem5,
    Oracle,
}

enum Failure {
    Parse(String),
    Precondition(String),
    Certificate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Failure::Parse(e.to_string()),
            Error::CertificateFailed { .. } => Failure::Certificate(e.to_string()),
            _ => Failure::Precondition(e.to_string()),
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Precondition(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn body_id(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read(p: &Path) -> Result<ConvexBody, Failure> {
    Ok(io::read_body(p)?)
}

/// First failed certificate that counts against the exit status.
fn ledger_failure(ledger: &Ledger, strict: bool) -> Option<String> {
    let kinds: &[CertKind] = if strict {
        &[CertKind::Structural, CertKind::Regression]
    } else {
        &[CertKind::Structural]
    };
    ledger.first_failure(kinds).map(|c| format!("certificate `{}` failed: {:.6e} > {:.6e}", c.name, c.value, c.bound))
}

fn estimate(cli: &Cli, path: &Path, q: Quantity) -> Result<(), Failure> {
    let k = read(path)?;
    let cfg = SamplerConfig::new(cli.seed, cli.samples);
    let (name, e) = match q {
        Quantity::M => ("M", measure::estimate_m(&k, &cfg)?),
        Quantity::Mstar => ("Mstar", measure::estimate_mstar(&k, &cfg)?),
        Quantity::Ell => ("ell", measure::estimate_ell(&k, &cfg)?),
        Quantity::EllPolar => ("ell_polar", measure::estimate_ell_polar(&k, &cfg)?),
        Quantity::Volume => ("volume", Estimate::exact(k.volume()?)),
        Quantity::DK => ("dK", Estimate::exact(positions::dk_estimate(&k)?)),
    };
    emit(
        &cli.out,
        &format!(
            "body_id,quantity,mean,stderr,n,seed\n{},{name},{:.12},{:.6e},{},{}\n",
            body_id(path),
            e.mean,
            e.stderr,
            e.n_samples,
            cli.seed
        ),
    )
}

fn pipeline(cli: &Cli, args: &[String], trials: usize, light: bool) -> Result<(), Failure> {
    let (name, bodies) = args.split_last().expect("clap enforces two or more");
    let cfg = SamplerConfig::new(cli.seed, cli.samples);
    let budget = if light { Budget::light() } else { Budget::default() };
    let one = || -> Result<ConvexBody, Failure> {
        if bodies.len() != 1 {
            return Err(Failure::Parse(format!("pipeline `{name}` takes one body")));
        }
        read(Path::new(&bodies[0]))
    };
    let (json, failure) = match name.as_str() {
        "theorem1" => {
            let eps = if cli.eps.is_empty() { vec![0.5, 0.25] } else { cli.eps.clone() };
            let r = constructions::theorem1_pipeline(&one()?, &eps, &cfg, &budget)?;
            (serde_json::to_string_pretty(&r), ledger_failure(&r.ledger, cli.strict))
        }
        "theorem2" => {
            let r = constructions::theorem2_pipeline(&one()?, &cfg, &budget)?;
            (serde_json::to_string_pretty(&r), ledger_failure(&r.ledger, cli.strict))
        }
        "qs" => {
            let eps = cli.eps.first().copied().unwrap_or(1.0 / 3.0);
            let r = constructions::qs_search(&one()?, eps, trials, &cfg)?;
            (serde_json::to_string_pretty(&r), None)
        }
        "theorem5" => {
            if bodies.len() != 2 {
                return Err(Failure::Parse("pipeline `theorem5` takes two bodies".into()));
            }
            let k = read(Path::new(&bodies[0]))?;
            let d = read(Path::new(&bodies[1]))?;
            let r = distances::theorem5_bound(&k, &d, &cfg, &budget)?;
            (serde_json::to_string_pretty(&r), ledger_failure(&r.ledger, cli.strict))
        }
        other => return Err(Failure::Parse(format!("unknown pipeline `{other}`"))),
    };
    let json = json.map_err(|e| Failure::Precondition(e.to_string()))?;
    emit(&cli.out, &(json + "\n"))?;
    match failure {
        Some(f) => Err(Failure::Certificate(f)),
        None => Ok(()),
    }
}

fn verify(cli: &Cli, suite: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(suite).map_err(|e| Failure::Parse(format!("{}: {e}", suite.display())))?;
    let spec = SuiteSpec::from_str(&text)?;
    let rows = harness::verify(&spec)?;
    emit(&cli.out, &harness::to_csv(&rows))?;
    if let Some(r) = rows.iter().find(|r| r.is_failure(cli.strict)) {
        return Err(Failure::Certificate(format!("check `{}` failed for {} n={} seed={}", r.check, r.family, r.dim, r.seed)));
    }
    Ok(())
}

fn distance(cli: &Cli, k: &Path, d: &Path, method: Method) -> Result<(), Failure> {
    let (k, d) = (read(k)?, read(d)?);
    let cfg = SamplerConfig::new(cli.seed, cli.samples);
    let r: DistanceBound = match method {
        Method::Bg => distances::bg_bound(&k, &d, &cfg)?,
        Method::Theorem5 => distances::theorem5_bound(&k, &d, &cfg, &Budget::default())?,
        Method::Oracle => distances::bm_oracle(&k, &d, &cfg)?,
    };
    let json = serde_json::to_string_pretty(&r).map_err(|e| Failure::Precondition(e.to_string()))?;
    emit(&cli.out, &(json + "\n"))?;
    match ledger_failure(&r.ledger, cli.strict) {
        Some(f) => Err(Failure::Certificate(f)),
        None => Ok(()),
    }
}

fn sample(cli: &Cli, family: &str, n: usize, points: Option<usize>, symmetric: bool, thin: bool) -> Result<(), Failure> {
    let body = if family == COUNTEREXAMPLE {
        let p = CounterexamplePair::new(n)?;
        if thin {
            p.d
        } else {
            p.b
        }
    } else if family == "gluskin" && (points.is_some() || symmetric) {
        distances::gluskin_sample(n, points.unwrap_or(4 * n), symmetric, cli.seed)?
    } else {
        Family::parse(family)?.build(n, cli.seed)?
    };
    emit(&cli.out, &(io::to_string(&body) + "\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate { body, quantity } => estimate(&cli, body, *quantity),
        Command::Pipeline { args, trials, light } => pipeline(&cli, args, *trials, *light),
        Command::Verify { suite } => verify(&cli, suite),
        Command::Distance { k, d, method } => distance(&cli, k, d, *method),
        Command::Sample { family, dim, points, symmetric, thin } => sample(&cli, family, *dim, *points, *symmetric, *thin),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Parse(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_PARSE)
        }
        Err(Failure::Precondition(m)) => {
            eprintln!("precondition violated: {m}");
            ExitCode::from(EXIT_PRECONDITION)
        }
        Err(Failure::Certificate(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_CERTIFICATE)
        }
    }
}
