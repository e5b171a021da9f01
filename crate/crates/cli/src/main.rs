#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use fracflow_cli::commands::{cmd_gamma_sweep, cmd_gibbs_sweep, cmd_run, cmd_verify, GibbsCase};
use fracflow_cli::{ConfigError, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "fracflow", version, about = "Fractional phase-field gradient flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Nodes per axis of a square box.
    #[arg(long)]
    n: Option<usize>,
    /// Side length of a square box.
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write ledger, diagnostics and oracle tables.
    Run(Overrides),
    /// Energies of well-prepared data against the sharp energy.
    GammaSweep {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_delimiter = ',', default_values_t = [0.08, 0.04, 0.02])]
        eps_list: Vec<f64>,
    },
    /// Gibbs–Thomson coefficient over a sequence of ε.
    GibbsSweep {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_delimiter = ',', default_values_t = [0.08, 0.04, 0.02])]
        eps_list: Vec<f64>,
        /// Nodes per axis for each ε.
        #[arg(long, value_delimiter = ',', default_values_t = [128, 256, 512])]
        n_list: Vec<usize>,
    },
    /// Fast invariant checks; nonzero exit on any failure.
    Verify(Overrides),
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown scenario {s:?} (profile_1d, stripe_2d, circle_2d, random_2d)"))
}

fn resolve(o: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(x) = o.scenario {
        let (l, n) = (cfg.grid.lengths[0], cfg.grid.counts[0]);
        cfg.scenario = x;
        cfg = cfg.with_box(l, n);
    }
    if o.n.is_some() || o.length.is_some() {
        let l = o.length.unwrap_or(cfg.grid.lengths[0]);
        let n = o.n.unwrap_or(cfg.grid.counts[0]);
        cfg = cfg.with_box(l, n);
    }
    cfg.eps = o.eps.unwrap_or(cfg.eps);
    cfg.tau = o.tau.unwrap_or(cfg.tau);
    cfg.s = o.s.unwrap_or(cfg.s);
    cfg.t_end = o.t_end.unwrap_or(cfg.t_end);
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    if let Some(dir) = &o.output_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(command: Command) -> Result<ExitCode> {
    let cfg = |o: &Overrides| resolve(o);
    match command {
        Command::Run(o) => {
            let cfg = cfg(&o)?;
            let out = cmd_run(&cfg)?;
            print_json(&serde_json::json!({
                "config_hash": cfg.hash(),
                "steps": out.summary.steps,
                "energy_initial": out.summary.energy_initial,
                "energy_final": out.summary.energy_final,
                "balance_gap": out.summary.balance_gap(),
                "max_mean_drift": out.summary.max_mean_drift,
                "ledger": out.ledger_path,
                "diagnostics": out.diagnostics_path,
                "oracle": out.oracle_path,
            }))?;
        }
        Command::GammaSweep { overrides, eps_list } => {
            print_json(&cmd_gamma_sweep(&cfg(&overrides)?, &eps_list)?)?;
        }
        Command::GibbsSweep {
            overrides,
            eps_list,
            n_list,
        } => {
            anyhow::ensure!(eps_list.len() == n_list.len(), "eps-list and n-list differ in length");
            let cases: Vec<GibbsCase> = eps_list
                .iter()
                .zip(&n_list)
                .map(|(&e, &n)| GibbsCase::scaled(e, n))
                .collect();
            print_json(&cmd_gibbs_sweep(&cfg(&overrides)?, &cases)?)?;
        }
        Command::Verify(o) => {
            let report = cmd_verify(&cfg(&o)?)?;
            print_json(&report)?;
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            match e.downcast_ref::<ConfigError>() {
                Some(ConfigError::Invalid(report)) => println!("{}", report.to_json()),
                _ => eprintln!("error: {e:#}"),
            }
            ExitCode::from(2)
        }
    }
}
