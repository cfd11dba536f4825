use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hermite_galerkin::harness::{
    emit_table, render, run_experiment, ErrorMetric, ExperimentConfig, OutputFormat,
};

#[derive(Parser)]
#[command(name = "hgsm", version, about = "Hermite-Galerkin spectral convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep over N and dt and tabulate errors at the final time.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark problem: heat, burgers or kdvb.
    #[arg(long)]
    problem: Option<String>,
    /// Truncation indices, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    n_modes: Vec<usize>,
    /// Time steps, comma separated.
    #[arg(long, value_delimiter = ',')]
    dt: Vec<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    /// Scaling schedule, e.g. `const:2.8284` or `inv-sqrt-shift`.
    #[arg(long)]
    alpha: Option<String>,
    /// Translation schedule, e.g. `const:0` or `drift:-1`.
    #[arg(long)]
    beta: Option<String>,
    /// Output file; the table goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or svg.
    #[arg(long)]
    format: Option<String>,
    /// Error metric for the E_N column: nodal or quadrature.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Amplitude of a seeded perturbation of the initial data.
    #[arg(long)]
    perturbation: Option<f64>,
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig, String> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
        None => {
            let problem = args.problem.clone().ok_or("--problem is required without --config")?;
            let t_final = args.t_final.ok_or("--t-final is required without --config")?;
            ExperimentConfig::new(&problem, Vec::new(), Vec::new(), t_final)
        }
    };
    if let Some(p) = args.problem {
        config.problem = p;
    }
    if !args.n_modes.is_empty() {
        config.n_modes = args.n_modes;
    }
    if !args.dt.is_empty() {
        config.dt = args.dt;
    }
    if let Some(t) = args.t_final {
        config.t_final = t;
    }
    if args.alpha.is_some() {
        config.alpha = args.alpha;
    }
    if args.beta.is_some() {
        config.beta = args.beta;
    }
    if args.out.is_some() {
        config.output = args.out;
    }
    if let Some(f) = args.format {
        config.format = f.parse::<OutputFormat>().map_err(|e| e.to_string())?;
    }
    if let Some(m) = args.metric {
        config.metric = m.parse::<ErrorMetric>().map_err(|e| e.to_string())?;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.perturbation.is_some() {
        config.perturbation = args.perturbation;
    }
    config.resolve().map_err(|e| e.to_string())?;
    Ok(config)
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let config = match build_config(args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let table = match run_experiment(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &config.output {
        Some(path) => emit_table(&table, config.format, path),
        None => render(&table, config.format).map(|text| print!("{text}")),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for row in table.rows.iter().filter(|r| r.failure.is_some()) {
        eprintln!(
            "failed: N={} dt={}: {}",
            row.n_modes,
            row.dt,
            row.failure.as_deref().unwrap_or_default()
        );
    }
    if table.failed_rows() > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
