use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

use locpir_bench::{run_sweep, write_csv, BenchConfig};

/// Sweep the lookup circuit over parameter grids and emit CSV.
#[derive(Parser, Debug)]
#[command(name = "locpir-bench", version)]
struct Args {
    /// TOML file with `security`, `regions`, `lengths`, `service_bits`,
    /// `threads`, and optionally `engine`, `per_gate_delay_ms`, `seed`.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_delimiter = ',')]
    security: Option<Vec<u32>>,
    #[arg(long = "regions", value_delimiter = ',')]
    regions: Option<Vec<usize>>,
    #[arg(long = "lengths", value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    #[arg(long = "service-bits", value_delimiter = ',')]
    service_bits: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    threads: Option<Vec<usize>>,
    /// clear | tlwe-oracle
    #[arg(long)]
    engine: Option<String>,
    #[arg(long = "per-gate-delay-ms")]
    per_gate_delay_ms: Option<f64>,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let mut config = match &args.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig {
            security: vec![80],
            regions: vec![9],
            lengths: vec![16],
            service_bits: vec![9],
            threads: vec![1],
            engine: "clear".into(),
            per_gate_delay_ms: None,
            seed: None,
        },
    };
    if let Some(v) = args.security {
        config.security = v;
    }
    if let Some(v) = args.regions {
        config.regions = v;
    }
    if let Some(v) = args.lengths {
        config.lengths = v;
    }
    if let Some(v) = args.service_bits {
        config.service_bits = v;
    }
    if let Some(v) = args.threads {
        config.threads = v;
    }
    if let Some(v) = args.engine {
        config.engine = v;
    }
    if args.per_gate_delay_ms.is_some() {
        config.per_gate_delay_ms = args.per_gate_delay_ms;
    }

    let seed = std::env::var(locpir_core::SEED_ENV)
        .ok()
        .map(|s| s.trim().parse::<u64>())
        .transpose()
        .context("LOCPIR_SEED must be an unsigned integer")?
        .or(config.seed)
        .unwrap_or_else(locpir_core::seed_from_env);

    let rows = run_sweep(&config, seed)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, BufWriter::new(file))?;
        }
        None => {
            let stdout = io::stdout();
            write_csv(&rows, stdout.lock())?;
            io::stdout().flush()?;
        }
    }
    Ok(())
}
