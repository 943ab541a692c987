use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nldiff_cli::acceptance::{self, CRITERIA};
use nldiff_cli::commands::{self, Lines};
use nldiff_cli::config::{DatumKind, ExperimentConfig};
use nldiff_cli::error::CliError;

/// Experiments for `u_t = J*u - u - u^p` and its heat-equation limits.
#[derive(Debug, Parser)]
#[command(name = "nldiff", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; the NLDF_OUT environment variable takes precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Dotted-path override such as `run.dt=0.05`; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the kernel profile; print its mass and diffusivity.
    Kernel,
    /// Mass, sup and far-field barrier constants of W over barrier.t_list.
    WTable,
    /// W, its gradient and its time derivative at barrier.w_time.
    WSnapshot,
    /// Evolve the family datum; write snapshots and the mass ledger.
    Simulate,
    /// Solve the limit problem at run.snapshot_times.
    Limit {
        #[arg(long, value_enum)]
        datum: Option<DatumKind>,
        /// Point-source mass.
        #[arg(long)]
        mass: Option<f64>,
    },
    /// Rescaled fields u^k(., 1) along compare.k_ladder.
    Rescale,
    /// Fine solve, rescale ladder, reference solve, convergence and rate tables.
    Compare,
    /// Decay-rate fits over the run's snapshots.
    Rates,
    /// Mass identity audit and the point-source limit mass.
    MassAudit,
    /// Solution barriers sup f(sqrt t) u, sup f(|x|) u and the envelope constant.
    Barrier,
    /// Run the acceptance suite and print PASS/FAIL per criterion.
    VerifyAll {
        /// Restrict to these criteria (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::WTable => "w-table",
            Command::WSnapshot => "w-snapshot",
            Command::Simulate => "simulate",
            Command::Limit { .. } => "limit",
            Command::Rescale => "rescale",
            Command::Compare => "compare",
            Command::Rates => "rates",
            Command::MassAudit => "mass-audit",
            Command::Barrier => "barrier",
            Command::VerifyAll { .. } => "verify-all",
        }
    }
}

fn output_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    std::env::var_os("NLDF_OUT")
        .map(PathBuf::from)
        .or_else(|| cli.out.clone())
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("--config is required for `{}`", cli.command.name())))?;
    ExperimentConfig::load(path, &cli.overrides)
}

fn verify_all(cli: &Cli, only: &[u8]) -> Result<Lines, CliError> {
    let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::Config(format!("--only: no criterion {bad}")));
    }
    let out = output_dir(cli, None);
    let outcomes = acceptance::verify_all(&ids, &out, |o| println!("{}", o.line()))?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(CliError::Acceptance { failed });
    }
    Ok(vec![format!("all {} criteria passed; tables in {}", outcomes.len(), out.join("verify").display())])
}

fn run(cli: &Cli) -> Result<Lines, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    if let Command::VerifyAll { only } = &cli.command {
        return verify_all(cli, only);
    }
    let mut cfg = load_config(cli)?;
    if let Command::Limit { datum, mass } = &cli.command {
        cfg.limit.datum = datum.or(cfg.limit.datum);
        cfg.limit.mass = mass.or(cfg.limit.mass);
        cfg.validate()?;
    }
    let dir = output_dir(cli, Some(&cfg));
    match cli.command {
        Command::Kernel => commands::kernel(&cfg, &dir),
        Command::WTable => commands::w_table(&cfg, &dir),
        Command::WSnapshot => commands::w_snapshot(&cfg, &dir),
        Command::Simulate => commands::simulate(&cfg, &dir),
        Command::Limit { .. } => commands::limit(&cfg, &dir),
        Command::Rescale => commands::rescale(&cfg, &dir),
        Command::Compare => commands::compare(&cfg, &dir),
        Command::Rates => commands::rates(&cfg, &dir),
        Command::MassAudit => commands::mass_audit_cmd(&cfg, &dir),
        Command::Barrier => commands::barrier(&cfg, &dir),
        Command::VerifyAll { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
