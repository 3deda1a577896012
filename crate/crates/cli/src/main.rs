//! `mipstar`: batch experiments for the three-prover protocol, the
//! multilinearity game and its quantum evaluation.
//!
//! Exit codes: 0 the experiment ran, 1 usage or validation error, 2 internal
//! invariant violation.

mod descriptor;
mod error;
mod experiments;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use descriptor::{Command, Descriptor};
use error::CliError;
use experiments::Artifacts;

#[derive(Parser)]
#[command(name = "mipstar", version, about = "Seeded experiments for the three-prover protocol simulator")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the command named in a descriptor file.
    Run {
        descriptor: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Arithmetize a succinct graph and write the constraint.
    GenInstance(GenInstanceArgs),
    /// Run the protocol and log every run.
    Prove(ProtocolArgs),
    /// Estimate protocol acceptance with a confidence interval.
    Estimate(ProtocolArgs),
    /// Evaluate a classical multilinearity-game strategy.
    Mlgame(GameArgs),
    /// Evaluate a quantum multilinearity-game strategy.
    QuantumEval(QuantumArgs),
    /// Check the matrix inequalities on random instances.
    CheckLemmas(LemmaArgs),
    /// Exhaustive bias of the powering small-bias set.
    BiasAudit(BiasArgs),
}

#[derive(Args)]
struct Common {
    /// TOML descriptor; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix for the CSV summary and the record log.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenInstanceArgs {
    #[command(flatten)]
    common: Common,
    /// `triangle`, `k4`, `four-cycle`, or an edge-list file.
    #[arg(long)]
    instance: Option<String>,
}

#[derive(Args)]
struct ProtocolArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    instance: Option<String>,
    /// `gf4`, `gf64`, `gf2^k` or `gf2^k:<modulus>`.
    #[arg(long)]
    field: Option<String>,
    /// The field element standing for color 1, as bits.
    #[arg(long)]
    alpha: Option<u64>,
    /// One strategy for all provers or three comma-separated ones.
    #[arg(long = "strategy", value_delimiter = ',')]
    strategies: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    colors: Option<Vec<u8>>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    value: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Confidence parameter of the Hoeffding interval.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct GameArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    players: Option<usize>,
    #[arg(long)]
    variables: Option<usize>,
    /// Strategy description, e.g. `multilinear 1,2,3,0`.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct QuantumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    players: Option<usize>,
    #[arg(long)]
    variables: Option<usize>,
    /// Classical strategy description to embed.
    #[arg(long)]
    strategy: Option<String>,
    /// Strategy in the text format.
    #[arg(long)]
    strategy_file: Option<PathBuf>,
    /// Local dimension of a random projective strategy.
    #[arg(long)]
    dimension: Option<usize>,
}

#[derive(Args)]
struct LemmaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    max_dim: Option<usize>,
}

#[derive(Args)]
struct BiasArgs {
    #[command(flatten)]
    common: Common,
    /// Number of indices `K`, a power of two.
    #[arg(long)]
    indices: Option<u64>,
    #[arg(long)]
    mprime: Option<u32>,
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn base_descriptor(command: Command, common: Common) -> Result<Descriptor, CliError> {
    let mut d = match &common.config {
        Some(path) => Descriptor::load(path)?,
        None => Descriptor::default(),
    };
    if let Some(named) = d.command {
        if named != command {
            return Err(CliError::Usage(format!(
                "descriptor is for `{named}`, not `{command}`"
            )));
        }
    }
    set(&mut d.seed, common.seed);
    set(&mut d.output, common.output);
    Ok(d)
}

fn resolve(cmd: Cmd) -> Result<(Command, Descriptor), CliError> {
    Ok(match cmd {
        Cmd::Run { descriptor, output, seed } => {
            let mut d = Descriptor::load(&descriptor)?;
            let command = d
                .command
                .ok_or_else(|| CliError::Usage(format!("{} names no `command`", descriptor.display())))?;
            set(&mut d.output, output);
            set(&mut d.seed, seed);
            (command, d)
        }
        Cmd::GenInstance(a) => {
            let mut d = base_descriptor(Command::GenInstance, a.common)?;
            set(&mut d.instance, a.instance);
            (Command::GenInstance, d)
        }
        Cmd::Prove(a) => (Command::Prove, protocol_descriptor(Command::Prove, a)?),
        Cmd::Estimate(a) => (Command::Estimate, protocol_descriptor(Command::Estimate, a)?),
        Cmd::Mlgame(a) => {
            let mut d = base_descriptor(Command::Mlgame, a.common)?;
            set(&mut d.field, a.field);
            set(&mut d.players, a.players);
            set(&mut d.variables, a.variables);
            set(&mut d.strategy, a.strategy);
            set(&mut d.trials, a.trials);
            (Command::Mlgame, d)
        }
        Cmd::QuantumEval(a) => {
            let mut d = base_descriptor(Command::QuantumEval, a.common)?;
            set(&mut d.field, a.field);
            set(&mut d.players, a.players);
            set(&mut d.variables, a.variables);
            set(&mut d.strategy, a.strategy);
            set(&mut d.strategy_file, a.strategy_file);
            set(&mut d.dimension, a.dimension);
            (Command::QuantumEval, d)
        }
        Cmd::CheckLemmas(a) => {
            let mut d = base_descriptor(Command::CheckLemmas, a.common)?;
            set(&mut d.instances, a.instances);
            set(&mut d.max_dim, a.max_dim);
            (Command::CheckLemmas, d)
        }
        Cmd::BiasAudit(a) => {
            let mut d = base_descriptor(Command::BiasAudit, a.common)?;
            set(&mut d.indices, a.indices);
            set(&mut d.mprime, a.mprime);
            (Command::BiasAudit, d)
        }
    })
}

fn protocol_descriptor(command: Command, a: ProtocolArgs) -> Result<Descriptor, CliError> {
    let mut d = base_descriptor(command, a.common)?;
    set(&mut d.instance, a.instance);
    set(&mut d.field, a.field);
    set(&mut d.alpha, a.alpha);
    if !a.strategies.is_empty() {
        d.strategies = Some(a.strategies);
    }
    set(&mut d.colors, a.colors);
    set(&mut d.rate, a.rate);
    set(&mut d.value, a.value);
    set(&mut d.trials, a.trials);
    set(&mut d.repetitions, a.repetitions);
    set(&mut d.beta, a.beta);
    Ok(d)
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

fn emit(command: Command, d: &Descriptor, artifacts: &Artifacts) -> Result<(), CliError> {
    let header = format!("# mipstar {command}: {}\n", command.anchor());
    let summary = format!("{header}{}", artifacts.csv);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &d.output {
        Some(prefix) => {
            if let Some(dir) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
            }
            let write = |ext: &str, text: &str| {
                let path = with_extension(prefix, ext);
                fs::write(&path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
            };
            write("csv", &summary)?;
            if let Some(records) = &artifacts.records {
                write("jsonl", records)?;
            }
            if let Some((ext, text)) = &artifacts.extra {
                write(ext, text)?;
            }
        }
        None => {
            let _ = out.write_all(summary.as_bytes());
        }
    }
    let _ = writeln!(out, "{}", artifacts.verdict);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = std::panic::catch_unwind(|| -> Result<(), CliError> {
        let (command, d) = resolve(cli.command)?;
        let artifacts = experiments::run(command, &d)?;
        emit(command, &d, &artifacts)
    });
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("usage: mipstar <COMMAND> [--config <FILE>] [OPTIONS]; see `mipstar --help`");
            }
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(2),
    }
}
