use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::Parser;

use locpir_core::protocol::{serve, ServerContext};
use locpir_core::{load_dataset, EngineKind, FixedPointFormat, GateEngine, SecretKey, TlweParams};

/// Answers encrypted location queries against a region table.
#[derive(Parser, Debug)]
#[command(name = "locpir-server", version)]
struct Args {
    /// CSV with header `city,lat1,lat2,long1,long2,service`.
    #[arg(long)]
    dataset: PathBuf,

    /// 80 or 128.
    #[arg(long, default_value_t = 80)]
    security: u32,

    /// Fractional bits of the coordinate format; 9 integer bits are fixed.
    #[arg(long, default_value_t = 7)]
    frac_bits: u8,

    /// Service bit length; defaults to the bits of the largest service.
    #[arg(long)]
    service_bits: Option<usize>,

    /// clear | tlwe-oracle
    #[arg(long, default_value = "tlwe-oracle")]
    engine: EngineKind,

    /// Client key file for the tlwe-oracle engine. The server can then
    /// decrypt everything: demo use only.
    #[arg(long)]
    insecure_oracle_key: Option<PathBuf>,

    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,

    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();

    let format = FixedPointFormat::with_frac_bits(args.frac_bits)?;
    let dataset = load_dataset(&args.dataset, format, args.service_bits)
        .with_context(|| format!("loading {}", args.dataset.display()))?;
    let params = TlweParams::from_security(args.security)?;

    let engine = match (args.engine, &args.insecure_oracle_key) {
        (EngineKind::Clear, None) => GateEngine::clear(),
        (EngineKind::Clear, Some(_)) => bail!("--insecure-oracle-key only applies to --engine tlwe-oracle"),
        (EngineKind::TlweOracle, None) => bail!("--engine tlwe-oracle needs --insecure-oracle-key"),
        (EngineKind::TlweOracle, Some(path)) => {
            let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let sk = SecretKey::read_from(std::io::BufReader::new(file))?.with_params(params)?;
            log::warn!("tlwe-oracle engine holds the client key; queries are not private");
            GateEngine::tlwe_oracle(sk, locpir_core::seed_from_env())
        }
    };

    let ctx = ServerContext::new(dataset, params, engine, args.threads)?;
    let listener = TcpListener::bind(&args.listen).with_context(|| format!("binding {}", args.listen))?;
    log::info!(
        "serving {} regions ({}, l={}, m={}) on {}",
        ctx.dataset().records.len(),
        params.level,
        format.len(),
        ctx.dataset().config.m,
        listener.local_addr()?
    );
    serve(listener, Arc::new(ctx))?;
    Ok(())
}
