use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use appe::estimation::{alpha_from_eta, bias_bound, f_poly, lemma_tail_bound};
use appe::exec::Execution;
use appe::privacy::{privacy_epsilon, privacy_epsilon_general, ENCODING_HAMILTONIAN_NORM};
use appe::protocol::{run_appe, Mutation, ProtocolConfig};
use appe::sweep::{run_sweep, write_sweep_csv, AxisRange};
use appe::verify::{run_verify, Suite, SuiteSelector, VerifyOptions};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "appe", version, about = "Anonymous private parameter estimation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Root seed; wins over APPE_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Negative-control defect, e.g. alice-true-bit.
    #[arg(long)]
    mutation: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one protocol run and write report.json, transcript.json, rounds.csv.
    Run(Common),
    /// Run the protocol over a parameter grid and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// axis=start:stop:step over alpha, L, k, theta_bar, seed. Repeatable.
        #[arg(long = "sweep", required = true)]
        axes: Vec<String>,
        /// Run grid points one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Evaluate the integrity and privacy bounds for a config.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Verification failure rate used in the bias bound.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
    /// Run the self-check suites; exit 1 on any failure.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Shorthand for --suite privacy.
        #[arg(long, conflicts_with_all = ["suite", "anonymity"])]
        privacy: bool,
        /// Shorthand for --suite anonymity.
        #[arg(long, conflicts_with = "suite")]
        anonymity: bool,
        #[arg(long)]
        mutation: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: message.to_string() }
    }
}

impl From<appe::Error> for Failure {
    fn from(e: appe::Error) -> Self {
        Failure::config(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(format!("i/o: {e}"))
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("APPE_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| Failure::config(format!("APPE_SEED={s:?} is not a u64"))),
        Err(_) => Ok(None),
    }
}

fn parse_mutation(m: Option<&str>) -> Result<Option<Mutation>, Failure> {
    m.map(|s| s.parse::<Mutation>()).transpose().map_err(Failure::from)
}

fn load_config(path: &Path) -> Result<ProtocolConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let cfg = ProtocolConfig::from_json(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn prepare(common: &Common) -> Result<(ProtocolConfig, PathBuf), Failure> {
    let mut cfg = load_config(&common.config)?;
    if let Some(seed) = common.seed.or(env_seed()?) {
        cfg.seed = seed;
    }
    if let Some(m) = parse_mutation(common.mutation.as_deref())? {
        cfg.mutation = Some(m);
    }
    let dir = common
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok((cfg, dir))
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::config(format!("json: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn cmd_run(common: &Common) -> Result<u8, Failure> {
    let (cfg, dir) = prepare(common)?;
    let out = run_appe(&cfg)?;
    write_json(&dir.join("report.json"), &out.report)?;
    write_json(&dir.join("transcript.json"), &out.transcript)?;
    let file = fs::File::create(dir.join("rounds.csv"))?;
    out.transcript
        .write_rounds_csv(std::io::BufWriter::new(file))
        .map_err(|e| Failure::config(format!("csv: {e}")))?;
    match (&out.report.abort, &out.report.estimate) {
        (Some(reason), _) => {
            eprintln!("aborted: {reason}");
            Ok(EXIT_ABORT)
        }
        (None, Some(e)) => {
            println!(
                "theta_hat = {:.6} (target {:.6}, ci ±{:.4}), delta_hat = {:.6}, nu = {}",
                e.theta_hat, out.report.target_theta, e.ci_halfwidth, e.delta_hat, e.nu
            );
            Ok(0)
        }
        (None, None) => Ok(0),
    }
}

fn cmd_sweep(common: &Common, axes: &[String], sequential: bool) -> Result<u8, Failure> {
    let (cfg, dir) = prepare(common)?;
    let axes: Vec<AxisRange> = axes.iter().map(|a| a.parse()).collect::<appe::Result<_>>()?;
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let rows = run_sweep(&cfg, &axes, exec)?;
    let path = dir.join("sweep.csv");
    write_sweep_csv(&rows, std::io::BufWriter::new(fs::File::create(&path)?))?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(0)
}

fn cmd_bounds(config: &Path, out_dir: Option<&Path>, delta: f64) -> Result<u8, Failure> {
    let cfg = load_config(config)?;
    let (l, k) = (cfg.total_rounds, cfg.verification_rounds);
    let theta_bar = cfg.participants.iter().map(|&p| cfg.theta[p]).sum::<f64>() / cfg.participants.len() as f64;
    let curve: Vec<_> = cfg
        .eta_grid
        .iter()
        .map(|&eta| {
            json!({
                "eta": eta,
                "f": f_poly(eta, theta_bar),
                "bias_bound": bias_bound(eta, theta_bar, delta, l, k).ok(),
                "alpha": alpha_from_eta(theta_bar, eta).ok(),
            })
        })
        .collect();
    let eps = cfg.oracles.sv_epsilon;
    let doc = json!({
        "schema_version": appe::SCHEMA_VERSION,
        "L": l,
        "k": k,
        "theta_bar": theta_bar,
        "delta": delta,
        "tail_bound_omega_0.1": lemma_tail_bound(0.1, l, k).ok(),
        "curve": curve,
        "epsilon_sv": eps,
        "privacy_epsilon": privacy_epsilon(eps)?,
        "privacy_epsilon_general": privacy_epsilon_general(eps, ENCODING_HAMILTONIAN_NORM)?,
    });
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_json(&dir.join("bounds.json"), &doc)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&doc).expect("json value")),
    }
    Ok(0)
}

fn cmd_verify(
    suite: &str,
    privacy: bool,
    anonymity: bool,
    mutation: Option<&str>,
    seed: Option<u64>,
    out_dir: Option<&Path>,
) -> Result<u8, Failure> {
    let suites = match (privacy, anonymity) {
        (true, _) => SuiteSelector(Some(Suite::Privacy)),
        (_, true) => SuiteSelector(Some(Suite::Anonymity)),
        _ => suite.parse()?,
    };
    let mut opts = VerifyOptions { suites, mutation: parse_mutation(mutation)?, ..VerifyOptions::default() };
    if let Some(s) = seed.or(env_seed()?) {
        opts.seed = s;
    }
    let report = run_verify(&opts);
    for c in &report.checks {
        println!("[{}] {}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, c.suite.name(), c.name, c.detail);
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("verify.json"), &report)?;
        fs::write(dir.join("junit.xml"), report.to_junit())?;
    }
    if report.passed() {
        Ok(0)
    } else {
        let failed: Vec<String> = report.failures().map(|c| format!("{}/{}", c.suite.name(), c.name)).collect();
        eprintln!("failing invariants: {}", failed.join(", "));
        Ok(EXIT_VERIFY_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Sweep { common, axes, sequential } => cmd_sweep(common, axes, *sequential),
        Command::Bounds { config, out_dir, delta } => cmd_bounds(config, out_dir.as_deref(), *delta),
        Command::Verify { suite, privacy, anonymity, mutation, seed, out_dir } => {
            cmd_verify(suite, *privacy, *anonymity, mutation.as_deref(), *seed, out_dir.as_deref())
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
