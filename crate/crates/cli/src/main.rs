use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coop_auth::analysis::{self, prob_both_sides, verifier_count_distribution, EXACT_K_MAX};
use coop_auth::obu::STRATEGIES;
use coop_auth::sim::{self, csv, ScenarioConfig, SimError};
use coop_auth_cli::{apply_override, parse_settings, ParseError};

/// Cooperative message authentication: simulations and analyses.
#[derive(Parser)]
#[command(name = "coop-auth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One simulation run; writes a one-row metrics CSV.
    Run {
        #[command(flatten)]
        scenario: Scenario,
        /// Also write the per-event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// One run per load (vehicle count); writes one CSV row per load.
    Sweep {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_delimiter = ',', default_value = "50,100,150,200")]
        loads: Vec<usize>,
    },
    /// Probability that verifiers cover both sides of the sender, n = 1..=n-max.
    AnalyzeProb {
        #[arg(long, default_value_t = 30)]
        n_max: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Verifier-count distribution of each election strategy.
    AnalyzeElection {
        #[arg(long, default_value_t = EXACT_K_MAX)]
        k_max: usize,
        #[arg(long, default_value_t = 6)]
        p_max: usize,
        /// Restrict to one strategy.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Scenario {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, `key=value`; repeatable, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Output {
    /// Output file; `-` for standard output.
    #[arg(short = 'o', long = "output", default_value = "-")]
    path: PathBuf,
}

enum Failure {
    /// Bad input: exit 1.
    Invalid(String),
    /// Anything that went wrong while working: exit 2.
    Runtime(String),
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => Failure::Invalid(c.to_string()),
            SimError::NoLoads => Failure::Invalid(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_failure(what: &Path, e: io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", what.display()))
}

fn is_stdout(path: &Path) -> bool {
    path.as_os_str() == "-"
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run leaves nothing behind.
fn write_atomically(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(tmp);
    fill(&mut w)?;
    let tmp = w.into_inner().map_err(|e| io_failure(path, e.into_error()))?;
    tmp.persist(path).map_err(|e| io_failure(path, e.error))?;
    Ok(())
}

fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    if is_stdout(&out.path) {
        io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(format!("stdout: {e}")))
    } else {
        write_atomically(&out.path, |w| w.write_all(text.as_bytes()).map_err(|e| io_failure(&out.path, e)))?;
        eprintln!("wrote {}", out.path.display());
        Ok(())
    }
}

fn load_scenario(s: &Scenario) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &s.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            parse_settings(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
        }
        None => ScenarioConfig::default(),
    };
    for o in &s.overrides {
        apply_override(&mut cfg, o).map_err(|e| Failure::Invalid(format!("--set {o}: {e}")))?;
    }
    if let Some(seed) = s.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(ParseError::from)?;
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { scenario, trace } => {
            let cfg = load_scenario(&scenario)?;
            let report = match &trace {
                Some(path) => {
                    let mut result = None;
                    write_atomically(path, |w| {
                        result = Some(sim::run_traced(&cfg, w)?);
                        Ok(())
                    })?;
                    result.expect("set on success")
                }
                None => sim::run(&cfg)?,
            };
            emit(&scenario.out, &csv(&[report]))
        }
        Command::Sweep { scenario, loads } => {
            let cfg = load_scenario(&scenario)?;
            let rows: Vec<_> = sim::sweep(&cfg, &loads)?.into_iter().map(|(_, r)| r).collect();
            emit(&scenario.out, &csv(&rows))
        }
        Command::AnalyzeProb { n_max, trials, seed, out } => {
            if n_max < 1 {
                return Err(Failure::Invalid("--n-max must be at least 1".into()));
            }
            let rows = (1..=n_max)
                .map(|n| prob_both_sides(n, trials, seed.wrapping_add(n as u64)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            emit(&out, &analysis::prob_csv(&rows))
        }
        Command::AnalyzeElection {
            k_max,
            p_max,
            strategy,
            trials,
            seed,
            out,
        } => {
            let strategies = match strategy {
                Some(name) => vec![STRATEGIES.get(&name).map_err(|e| Failure::Invalid(e.to_string()))?],
                None => STRATEGIES.iter().collect(),
            };
            let mut rows = Vec::new();
            for s in strategies {
                for k in 1..=k_max {
                    for p in 1..=p_max {
                        let d = verifier_count_distribution(k, p, s, trials, seed ^ ((k as u64) << 32 | p as u64))
                            .map_err(|e| Failure::Invalid(e.to_string()))?;
                        rows.push(d);
                    }
                }
            }
            emit(&out, &analysis::election_csv(&rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
