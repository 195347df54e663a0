use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use locpir_core::protocol::{client_preprocess, Client, TcpTransport};
use locpir_core::{GeoCoordinate, NoiseSampler, SecretKey, TlweParams};

/// Encrypted location lookup client.
#[derive(Parser, Debug)]
#[command(name = "locpir-client", version, args_conflicts_with_subcommands = true)]
struct Args {
    #[command(subcommand)]
    command: Option<Command>,

    #[arg(long, default_value = "127.0.0.1:7878")]
    server: String,

    #[arg(long)]
    keyfile: Option<PathBuf>,

    #[arg(long, allow_hyphen_values = true)]
    lat: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    lon: Option<f64>,

    /// Zero-sample sheet from `preprocess`; generated on the fly otherwise.
    #[arg(long)]
    sheet: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes a fresh secret key.
    Keygen {
        #[arg(long, default_value_t = 80)]
        security: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes a sheet of encrypted zeros for one session.
    Preprocess {
        #[arg(long)]
        keyfile: PathBuf,
        #[arg(long)]
        regions: usize,
        #[arg(long)]
        service_bits: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_key(path: &PathBuf) -> anyhow::Result<SecretKey> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(SecretKey::read_from(BufReader::new(file))?)
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let seed = locpir_core::seed_from_env();

    match args.command {
        Some(Command::Keygen { security, out }) => {
            let sk = SecretKey::generate(TlweParams::from_security(security)?, seed)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            sk.write_to(BufWriter::new(file))?;
            println!("wrote {} key ({} bits) to {}", sk.params().level, sk.n(), out.display());
        }
        Some(Command::Preprocess { keyfile, regions, service_bits, out }) => {
            let sk = read_key(&keyfile)?;
            let mut sampler = NoiseSampler::new(seed, sk.params().sigma);
            let bytes = client_preprocess(&sk, &mut sampler, regions, service_bits);
            std::fs::write(&out, &bytes).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} bytes to {}", bytes.len(), out.display());
        }
        None => {
            let keyfile = args.keyfile.context("--keyfile is required")?;
            let lat = args.lat.context("--lat is required")?;
            let lon = args.lon.context("--lon is required")?;
            let coord = GeoCoordinate::new(lat, lon)?;
            let sk = read_key(&keyfile)?;
            let transport = TcpTransport::connect(&args.server)
                .with_context(|| format!("connecting to {}", args.server))?;
            let mut client = Client::new(transport, sk, seed);
            let params = client.handshake()?;
            log::info!("server: {} regions, m={}, engine {}", params.regions, params.m, params.engine);
            match &args.sheet {
                Some(path) => client.upload_sheet_payload(std::fs::read(path)?)?,
                None => client.upload_sheet()?,
            };
            println!("{}", client.query(coord)?);
        }
    }
    Ok(())
}
