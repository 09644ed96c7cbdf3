//! `netval`: stress testing for networks of equity cross-holdings.
//!
//! Four subcommands: `validate` checks a network file and reports every
//! violation, `run` solves one shock scenario, `sweep` solves a whole
//! shock/parameter grid into a results CSV, `generate` writes a synthetic
//! network deterministically from a seed.
//!
//! Everything can be driven from one TOML configuration file; flags
//! override it. Exit codes: 0 success; 1 semantic failure (invalid network
//! under `validate`, non-convergence under `run` or `sweep`) with output
//! still produced; 2 unusable input (missing files, parse or schema
//! errors), in which case no output file is written. All results are
//! computed before any output file is opened.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use netval::io::{
    generate_synthetic, load_network, save_network, save_results, write_results, IoError,
    NetworkData, SyntheticSpec,
};
use netval::network::FinancialNetwork;
use netval::stress::{run_scenario, sweep, ScenarioResult, SweepRow, SweepSpec};
use netval::valuation::{calibrate, ModelSpec};

use config::{
    parse_param, resolve_grid, resolve_model, resolve_params, resolve_solver, RunConfig,
};

#[derive(Parser)]
#[command(name = "netval", version, about = "Stress testing for networks of equity cross-holdings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file and report every violation found.
    Validate(ValidateArgs),
    /// Solve one shock scenario and print a summary.
    Run(RunArgs),
    /// Solve a shock/parameter grid and emit the results CSV.
    Sweep(SweepArgs),
    /// Write a synthetic network deterministically from a seed.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Network: a directory, an institutions.csv, or a .json bundle.
    #[arg(long)]
    network: Option<PathBuf>,
    /// TOML configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Network: a directory, an institutions.csv, or a .json bundle.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Model variant: linear-dr, recovery-dr, reduced-form, ir-feedback.
    #[arg(long)]
    model: Option<String>,
    /// Fraction of external assets wiped out, in [0, 1].
    #[arg(long)]
    shock: Option<f64>,
    /// Model parameter override, name=value; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    /// Absolute convergence tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration ceiling.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Also write the scenario as a one-row results CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Network: a directory, an institutions.csv, or a .json bundle.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Model variant: linear-dr, recovery-dr, reduced-form, ir-feedback.
    #[arg(long)]
    model: Option<String>,
    /// Inclusive shock grid, start:stop:step.
    #[arg(long = "shock-grid")]
    shock_grid: Option<String>,
    /// Parameter grid, name=v1,v2,...; repeatable, order defines nesting.
    #[arg(long = "param")]
    params: Vec<String>,
    /// Absolute convergence tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration ceiling.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Results CSV path; omitted writes the CSV to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// TOML synthetic spec: institutions, funds, seed, and optional
    /// exponent, concentration, scale, internal_fraction, equity_buffer.
    #[arg(long)]
    config: PathBuf,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output: a directory for the CSV pair or a .json bundle path.
    #[arg(long, default_value = "network")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Generate(args) => cmd_generate(args),
    }
}

fn network_path(flag: Option<PathBuf>, config: &RunConfig) -> Result<PathBuf> {
    flag.or_else(|| config.network.clone())
        .context("no network: pass --network or set `network` in the config")
}

fn cmd_validate(args: ValidateArgs) -> Result<u8> {
    let config = RunConfig::load(args.config.as_deref())?;
    let path = network_path(args.network, &config)?;
    match load_network(&path) {
        Ok(network) => {
            let funds = network.institutions().iter().filter(|i| i.is_fund).count();
            let holdings = NetworkData::from_network(&network).holdings.len();
            println!(
                "network is valid: {} institutions ({} funds), {} holdings",
                network.n(),
                funds,
                holdings
            );
            Ok(0)
        }
        Err(IoError::InvalidNetwork { path, report }) => {
            println!("network {path} is invalid: {report}");
            Ok(1)
        }
        Err(other) => Err(other.into()),
    }
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let config = RunConfig::load(args.config.as_deref())?;
    let network = load_network(&network_path(args.network, &config)?)?;

    let mut overrides = Vec::new();
    for text in &args.params {
        let (name, values) = parse_param(text)?;
        let [value] = values.as_slice() else {
            bail!("run takes one value per --param, got '{text}'");
        };
        overrides.push((name, *value));
    }
    let model_spec = resolve_model(config.model, args.model.as_deref(), &overrides)?;
    let model = calibrate(&model_spec)?;
    let solver = resolve_solver(&config.solver, args.epsilon, args.max_iter);
    let shock = args.shock.or(config.shock).unwrap_or(0.0);

    let result = run_scenario(&network, &model, shock, &solver)?;
    print_summary(&network, &model_spec, shock, &result);

    let converged = result.converged;
    if let Some(out) = args.out.or(config.output) {
        save_results(&[SweepRow { params: Vec::new(), result }], &out)?;
        println!("wrote {}", out.display());
    }
    Ok(if converged { 0 } else { 1 })
}

fn print_summary(
    network: &FinancialNetwork,
    model: &ModelSpec,
    shock: f64,
    result: &ScenarioResult,
) {
    let funds = network.institutions().iter().filter(|i| i.is_fund).count();
    println!(
        "model {} | shock {} | {} institutions ({} funds)",
        model.variant_name(),
        shock,
        network.n(),
        funds
    );
    if result.converged {
        println!("converged in {} iterations", result.iterations_used);
    } else {
        println!("did not converge within {} iterations", result.iterations_used);
    }
    println!("direct defaults:    {}", result.direct_defaults);
    println!("indirect defaults:  {}", result.indirect_defaults());
    if result.defaulted.is_empty() {
        println!("total defaults:     0");
    } else {
        println!(
            "total defaults:     {} [{}]",
            result.total_defaults,
            result.defaulted.join(", ")
        );
    }
    println!("final delta_r:      {}", result.final_delta_r);
    println!("total final equity: {}", result.total_final_equity());
}

fn cmd_sweep(args: SweepArgs) -> Result<u8> {
    let config = RunConfig::load(args.config.as_deref())?;
    let network = load_network(&network_path(args.network, &config)?)?;
    let model_spec = resolve_model(config.model, args.model.as_deref(), &[])?;
    let grid = resolve_grid(
        config.sweep.as_ref().and_then(|s| s.shock_grid.as_ref()),
        args.shock_grid.as_deref(),
    )?;

    let mut spec = SweepSpec::new(model_spec, grid);
    spec.params = resolve_params(config.sweep.as_ref(), &args.params)?;
    spec.solver = resolve_solver(&config.solver, args.epsilon, args.max_iter);

    let rows = sweep(&network, &spec)?;
    let all_converged = rows.iter().all(|r| r.result.converged);
    match args.out.or(config.output) {
        Some(path) => {
            save_results(&rows, &path)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_results(&rows, std::io::stdout().lock())?,
    }
    if !all_converged {
        eprintln!("warning: some scenarios did not converge (converged column is false)");
    }
    Ok(if all_converged { 0 } else { 1 })
}

fn cmd_generate(args: GenerateArgs) -> Result<u8> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read spec {}", args.config.display()))?;
    let mut spec: SyntheticSpec = toml::from_str(&text)
        .with_context(|| format!("spec {} is malformed", args.config.display()))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }

    let network = generate_synthetic(&spec)?;
    save_network(&network, &args.out)?;
    let funds = network.institutions().iter().filter(|i| i.is_fund).count();
    println!(
        "wrote {} institutions ({} funds, seed {}) to {}",
        network.n(),
        funds,
        spec.seed,
        args.out.display()
    );
    Ok(0)
}
