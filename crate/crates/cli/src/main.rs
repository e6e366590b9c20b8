mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use avckit::AvcError;
use clap::{Args, Parser, Subcommand};

/// Capacity, dispersion and finite-blocklength bounds for arbitrarily-varying
/// channels described by JSON spec files.
#[derive(Parser, Debug)]
#[command(name = "avckit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity, random-code capacity and optimal input/state sets.
    Capacity(CapacityArgs),
    /// Normal approximations of the maximal code size over a range of n.
    Na(NaArgs),
    /// Evaluate the finite-blocklength achievability bound.
    Rcu(RcuArgs),
    /// Simulate random constant-composition codes against a worst-case
    /// adversary and compare with the bound.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Channel spec file.
    file: PathBuf,
    /// Write CSV to this path (`-` for stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CapacityArgs {
    #[command(flatten)]
    common: Common,
    /// Saddle-point tolerance in bits.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Args, Debug)]
struct NaArgs {
    #[command(flatten)]
    common: Common,
    /// Target average error probability, in (0, 1/2).
    #[arg(long)]
    eps: f64,
    /// Blocklengths as `start:end:step`, end inclusive.
    #[arg(long = "n-range", value_parser = parse_range)]
    n_range: NRange,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Args, Debug, Clone)]
struct CodeArgs {
    /// Blocklength.
    #[arg(long)]
    n: usize,
    /// Input type as counts summing to n (`4,4`) or probabilities (`0.5,0.5`).
    #[arg(long = "type")]
    input_type: String,
    /// Number of messages.
    #[arg(long = "M")]
    m: u64,
    /// How N_s is counted: sequences, types or literal.
    #[arg(long = "n-s", default_value = "sequences", value_parser = parse_state_count)]
    n_s: avckit::fbl::StateCount,
    /// Radius of the decoding neighbourhood in bits.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Debug)]
struct RcuArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    code: CodeArgs,
    /// Monte Carlo samples when exact evaluation is out of reach.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Require exact enumeration.
    #[arg(long, conflicts_with = "monte_carlo")]
    exact: bool,
    /// Require Monte Carlo evaluation.
    #[arg(long)]
    monte_carlo: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    code: CodeArgs,
    /// Number of random codebooks.
    #[arg(long, default_value_t = 50)]
    codebooks: usize,
    /// exhaustive, types, or sampled:K.
    #[arg(long, default_value = "exhaustive", value_parser = parse_adversary)]
    adversary: avckit::sim::AdversaryMode,
    /// Monte Carlo trials per message and state when outputs are too many to
    /// enumerate.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

#[derive(Clone, Debug)]
struct NRange(Vec<u64>);

fn parse_range(s: &str) -> Result<NRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err("expected start:end:step".into());
    };
    let num = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("{v:?}: {e}"));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if a == 0 || step == 0 || b < a {
        return Err("need 0 < start <= end and step > 0".into());
    }
    Ok(NRange((a..=b).step_by(step as usize).collect()))
}

fn parse_state_count(s: &str) -> Result<avckit::fbl::StateCount, String> {
    use avckit::fbl::StateCount;
    match s {
        "sequences" => Ok(StateCount::Sequences),
        "types" => Ok(StateCount::Types),
        "literal" => Ok(StateCount::Literal),
        _ => Err("expected sequences, types or literal".into()),
    }
}

fn parse_adversary(s: &str) -> Result<avckit::sim::AdversaryMode, String> {
    use avckit::sim::AdversaryMode;
    match s {
        "exhaustive" => Ok(AdversaryMode::Exhaustive),
        "types" => Ok(AdversaryMode::TypeRepresentative),
        _ => {
            let k = s
                .strip_prefix("sampled:")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k > 0)
                .ok_or("expected exhaustive, types or sampled:K")?;
            Ok(AdversaryMode::Sampled(k))
        }
    }
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn parse(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<AvcError> for Failure {
    fn from(e: AvcError) -> Self {
        let code = match &e {
            AvcError::Config(_)
            | AvcError::InvalidChannel(_)
            | AvcError::InvalidArgument(_)
            | AvcError::InvalidDist(_)
            | AvcError::AlphabetMismatch { .. } => 2,
            AvcError::InfeasibleType(_) | AvcError::NotAType { .. } | AvcError::Symmetrizable => 4,
            AvcError::GuardExceeded { .. } => 5,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: 2, message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self { code: 2, message: e.to_string() }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("AVCKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::parse(format!("AVCKIT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { code: 3, message: e.to_string() })
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Capacity(a) => commands::capacity(&a.common, a.tol),
        Command::Na(a) => commands::na(&a.common, a.eps, &a.n_range.0, a.tol),
        Command::Rcu(a) => commands::rcu(&a.common, &a.code, a.samples, a.exact, a.monte_carlo),
        Command::Simulate(a) => commands::simulate(&a.common, &a.code, a.codebooks, a.adversary, a.trials),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
