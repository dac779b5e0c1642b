use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use catalysis_auth::adversary::{AttackKind, AttackStrategy};
use catalysis_auth::harness::{
    run_report, search_states, sweep, verify_constants, ExperimentConfig, HarnessError, OutputFormat, SweepAxis,
};
use catalysis_auth::schmidt::{conversion_report, make_schmidt, SchmidtVector};

#[derive(Parser)]
#[command(
    name = "catauth",
    version,
    about = "Catalysis-based quantum authentication simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of independent trials.
    #[arg(long, global = true)]
    trials: Option<u32>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long = "k-prime")]
    k_prime: Option<u32>,
    /// passive, impersonation:alice|bob, dos:garbage|drop|flood, type1:N, type2:N
    #[arg(long)]
    strategy: Option<AttackKind>,
    /// Pairs attacked per round (L).
    #[arg(long)]
    budget: Option<u32>,
    #[arg(long)]
    rounds: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the constants of the default state pair.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Conversion report for two Schmidt vectors.
    Convert {
        /// Source vector, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        /// Target vector, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
        /// File whose first two lines are the source and target vectors.
        #[arg(long, conflicts_with_all = ["from", "to"])]
        vectors: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run one Monte Carlo experiment.
    Simulate {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run one experiment per value of a parameter.
    Sweep {
        /// K_prime, L or K.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u32>,
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Random search for a state pair with a lower fidelity bound.
    Search {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        iters: u64,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Verification(String),
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::Protocol(_) => Failure::Config(e.to_string()),
            HarnessError::Io(_) | HarnessError::Csv(_) | HarnessError::Json(_) => Failure::Io(e.to_string()),
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_vector(text: &str) -> Result<SchmidtVector, Failure> {
    let cleaned = text.trim().trim_start_matches('[').trim_end_matches(']');
    let weights = cleaned
        .split(|ch: char| ch == ',' || ch.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Failure::Config(format!("bad number `{s}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    make_schmidt(&weights).map_err(|e| Failure::Config(format!("bad vector `{text}`: {e}")))
}

fn experiment_config(args: &ExperimentArgs, common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => {
            let (Some(k), Some(k_prime)) = (args.k, args.k_prime) else {
                return Err(Failure::Config(
                    "either --config or both --k and --k-prime are required".into(),
                ));
            };
            ExperimentConfig::new(k, k_prime, AttackStrategy::passive(), 1, 0)
        }
    };
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(k_prime) = args.k_prime {
        cfg.k_prime = k_prime;
    }
    if let Some(strategy) = args.strategy {
        cfg.strategy = strategy;
    }
    if let Some(budget) = args.budget {
        cfg.attack_budget = budget;
    }
    if let Some(rounds) = args.rounds {
        cfg.rounds_per_trial = rounds;
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(format) = common.format {
        cfg.output_format = format;
    }
    if let Some(out) = &common.out {
        cfg.output_path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Verify { common } => {
            let report = verify_constants();
            let text = match common.format {
                Some(OutputFormat::Json) => {
                    serde_json::to_string_pretty(&report).map_err(|e| Failure::Io(e.to_string()))? + "\n"
                }
                _ => report
                    .checks
                    .iter()
                    .map(|c| {
                        let mark = if c.passed { "ok  " } else { "FAIL" };
                        format!(
                            "{mark} {:<24} {:<14} expected {}\n",
                            c.name,
                            c.value.to_string(),
                            c.expected
                        )
                    })
                    .collect(),
            };
            emit(&text, common.out.as_deref())?;
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Verification("constant verification failed".into()))
            }
        }
        Command::Convert {
            from,
            to,
            vectors,
            common,
        } => {
            let (b, c) = match (vectors, from, to) {
                (Some(path), _, _) => {
                    let text =
                        fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
                    match (lines.next(), lines.next()) {
                        (Some(a), Some(b)) => (parse_vector(a)?, parse_vector(b)?),
                        _ => return Err(Failure::Config(format!("{}: expected two vectors", path.display()))),
                    }
                }
                (None, Some(f), Some(t)) => (parse_vector(&f)?, parse_vector(&t)?),
                _ => return Err(Failure::Config("convert needs --from and --to, or --vectors".into())),
            };
            let report = conversion_report(&b, &c);
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Io(e.to_string()))? + "\n";
            emit(&text, common.out.as_deref())
        }
        Command::Simulate { experiment, common } => {
            let cfg = experiment_config(&experiment, &common)?;
            let report = run_report(&cfg)?;
            let text = report.render(cfg.output_format)?;
            emit(&text, cfg.output_path.as_deref())?;
            eprintln!("{} trials in {:.2}s", report.stats.trials, report.stats.runtime_secs);
            Ok(())
        }
        Command::Sweep {
            axis,
            values,
            experiment,
            common,
        } => {
            let cfg = experiment_config(&experiment, &common)?;
            let table = sweep(&cfg, axis, &values)?;
            emit(&table.render(cfg.output_format)?, cfg.output_path.as_deref())?;
            if table.monotone == Some(false) {
                eprintln!("warning: detection rate is not monotone in K'");
            }
            Ok(())
        }
        Command::Search { dim, iters, common } => {
            let result = search_states(dim, iters, common.seed.unwrap_or(0))?;
            let text = serde_json::to_string_pretty(&result).map_err(|e| Failure::Io(e.to_string()))? + "\n";
            emit(&text, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
