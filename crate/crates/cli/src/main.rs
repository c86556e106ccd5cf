use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eprqdba::checks::TolerancePolicy;
use eprqdba::harness::{
    catalog, forgery_probability_monte_carlo, message_accounting, oracle_equivalence,
    register_properties, run_experiment, scenario_by_name, simulate, sweep, write_report,
    ExperimentSpec, Format, Scenario,
};
use eprqdba::protocol::evaluate_dba;
use eprqdba::registers::ProtocolConfig;

#[derive(Parser)]
#[command(
    name = "eprqdba",
    version,
    about = "EPR-pair detectable Byzantine agreement simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run; writes the full trace as JSON-lines.
    Simulate(SimulateArgs),
    /// Grid over n, m and scenario, or one experiment from a config file.
    Sweep(SweepArgs),
    /// Exact and Monte Carlo forgery probabilities.
    Forgery(ForgeryArgs),
    /// Classical sampler against the statevector oracle.
    OracleCheck(OracleArgs),
    /// Per-round message, symbol and qubit counts.
    Accounting(AccountingArgs),
}

#[derive(Args)]
struct Tolerance {
    /// Allowed deviation in binomial standard deviations.
    #[arg(long, default_value_t = 4.0)]
    z: f64,
    /// Largest symmetric difference the cross-vector check accepts.
    #[arg(long, default_value_t = 0)]
    sd_max: usize,
    /// Cross-vector check passes iff the symmetric difference is near m/4.
    #[arg(long)]
    paper_literal: bool,
}

impl Tolerance {
    fn policy(&self) -> TolerancePolicy {
        TolerancePolicy {
            z: self.z,
            sd_max: self.sd_max,
            paper_literal: self.paper_literal,
        }
    }

    fn config(&self, n: usize, m: usize, seed: u64) -> Result<ProtocolConfig> {
        Ok(ProtocolConfig::new(n, m, seed)?.with_tolerance(self.policy())?)
    }
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = Format::Json)]
    format: Format,
}

impl Output {
    fn writer(&self) -> Result<Box<dyn Write>> {
        open(self.out.as_deref())
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Catalog name or a JSON scenario file.
    #[arg(long, default_value = "all_loyal")]
    scenario: String,
    #[command(flatten)]
    tolerance: Tolerance,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5])]
    n: Vec<usize>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', default_values_t = [32])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Catalog name or JSON scenario file; the whole catalog when absent.
    #[arg(long)]
    scenario: Option<String>,
    /// Experiment config (JSON ExperimentSpec); overrides the grid flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    tolerance: Tolerance,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ForgeryArgs {
    /// Comma-separated list of vector lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32, 64])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draws per sampler, or register sets with --properties.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Run the register property suite instead, at `--z` sigmas.
    #[arg(long)]
    properties: bool,
    #[arg(long, default_value_t = 5.0)]
    z: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct AccountingArgs {
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5, 8])]
    n: Vec<usize>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 32])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

fn load_scenario(arg: &str, n: usize) -> Result<Scenario> {
    let path = Path::new(arg);
    let scenario = if path.is_file() {
        Scenario::from_file(path)?
    } else {
        scenario_by_name(arg, n)?
    };
    scenario.validate(n)?;
    Ok(scenario)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    if args.output.format != Format::Json {
        bail!("simulate writes JSON-lines traces only");
    }
    let config = args.tolerance.config(args.n, args.m, args.seed)?;
    let scenario = load_scenario(&args.scenario, args.n)?;
    let outcome = simulate(&config, &scenario, 0)?;
    let mut out = args.output.writer()?;
    outcome.trace.write_jsonl(&mut out)?;
    out.flush()?;
    let verdict = evaluate_dba(
        &outcome,
        &scenario.loyal_lieutenants(),
        scenario.commander_loyal(),
        scenario.order,
    )
    .ok();
    let summary = serde_json::json!({
        "scenario": scenario.name,
        "lieutenants": outcome.lieutenants,
        "forgery_passes": outcome.forgery_passes,
        "verdict": verdict,
    });
    eprintln!("{summary}");
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    if let Some(path) = &args.config {
        let spec = ExperimentSpec::from_file(path)?;
        let report = run_experiment(&spec)?;
        let (target, format) = match (&args.output.out, &spec.output) {
            (None, Some(o)) => (Some(o.path.as_path()), o.format),
            _ => (args.output.out.as_deref(), args.output.format),
        };
        let mut out = open(target)?;
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &report)?;
                writeln!(out)?;
            }
            Format::Csv => write_report(&[report.summary], Format::Csv, &mut out)?,
        }
        out.flush()?;
        return Ok(());
    }
    let template = args.tolerance.config(3, 4, args.seed)?;
    let scenarios = |n: usize| match &args.scenario {
        Some(s) => load_scenario(s, n)
            .map(|s| vec![s])
            .map_err(|e| eprqdba::Error::Config(e.to_string())),
        None => Ok(catalog(n)),
    };
    let summaries = sweep(
        &args.n,
        &args.m,
        scenarios,
        &template,
        args.trials,
        args.seed,
    )?;
    let mut out = args.output.writer()?;
    write_report(&summaries, args.output.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_forgery(args: &ForgeryArgs) -> Result<()> {
    let rows = args
        .m
        .iter()
        .map(|&m| forgery_probability_monte_carlo(m, args.trials, args.seed))
        .collect::<eprqdba::Result<Vec<_>>>()?;
    let mut out = args.output.writer()?;
    write_report(&rows, args.output.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_oracle(args: &OracleArgs) -> Result<()> {
    let config = ProtocolConfig::new(args.n, args.m, args.seed)?;
    let mut out = args.output.writer()?;
    if args.properties {
        write_report(
            &[register_properties(&config, args.trials, args.z)?],
            args.output.format,
            &mut out,
        )?;
    } else {
        write_report(
            &[oracle_equivalence(&config, args.trials, args.alpha)?],
            args.output.format,
            &mut out,
        )?;
    }
    out.flush()?;
    Ok(())
}

fn run_accounting(args: &AccountingArgs) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &args.n {
        for &m in &args.m {
            let config = ProtocolConfig::new(n, m, args.seed)?;
            rows.push(message_accounting(&simulate(
                &config,
                &Scenario::all_loyal(n, true),
                0,
            )?));
        }
    }
    let mut out = args.output.writer()?;
    write_report(&rows, args.output.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => run_simulate(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Forgery(a) => run_forgery(&a),
        Command::OracleCheck(a) => run_oracle(&a),
        Command::Accounting(a) => run_accounting(&a),
    }
}
