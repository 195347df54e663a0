//! Parameter sweeps over `(security, N, l, m, n_t)` with per-phase unit
//! counts and timings.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context};
use serde::Deserialize;

use locpir_core::circuits::{compare_all, hom_add_xor_in, validate_all};
use locpir_core::{EngineKind, GateEngine, SecretKey, TlweParams, WorkerPool};

use crate::model::simulate_phase_millis;
use crate::workload::Workload;

pub const CSV_HEADER: [&str; 14] = [
    "params",
    "N",
    "l",
    "m",
    "n_t",
    "engine",
    "comparison_units",
    "validation_units",
    "addxor_units",
    "total_units",
    "comparison_ms",
    "validation_ms",
    "addxor_ms",
    "total_ms",
];

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Security levels in bits, 80 or 128.
    pub security: Vec<u32>,
    pub regions: Vec<usize>,
    pub lengths: Vec<usize>,
    pub service_bits: Vec<usize>,
    pub threads: Vec<usize>,
    #[serde(default = "default_engine")]
    pub engine: String,
    /// Simulated cost of one bootstrap unit. When set, the `_ms` columns
    /// come from the budget model instead of measured wall time.
    #[serde(default)]
    pub per_gate_delay_ms: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_engine() -> String {
    "clear".into()
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: BenchConfig = toml::from_str(text).context("parsing bench config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, empty) in [
            ("security", self.security.is_empty()),
            ("regions", self.regions.is_empty()),
            ("lengths", self.lengths.is_empty()),
            ("service_bits", self.service_bits.is_empty()),
            ("threads", self.threads.is_empty()),
        ] {
            ensure!(!empty, "{name} must list at least one value");
        }
        ensure!(self.threads.iter().all(|&t| t > 0), "thread counts must be positive");
        ensure!(self.regions.iter().all(|&n| n > 0), "region counts must be positive");
        if let Some(delay) = self.per_gate_delay_ms {
            ensure!(delay.is_finite() && delay >= 0.0, "per_gate_delay_ms must be >= 0");
        }
        for &s in &self.security {
            TlweParams::from_security(s)?;
        }
        self.engine_kind()?;
        Ok(())
    }

    pub fn engine_kind(&self) -> anyhow::Result<EngineKind> {
        Ok(self.engine.parse()?)
    }
}

/// Units and timings of one evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReport {
    pub comparison_units: u64,
    pub validation_units: u64,
    pub addxor_units: u64,
    pub total_units: u64,
    pub comparison_ms: f64,
    pub validation_ms: f64,
    pub addxor_ms: f64,
    pub total_ms: f64,
    /// Measured wall time per phase, whatever the `_ms` columns hold.
    pub wall: [Duration; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub params: TlweParams,
    pub regions: usize,
    pub l: usize,
    pub m: usize,
    pub threads: usize,
    pub engine: EngineKind,
    pub report: PhaseReport,
    /// Decrypted lookup result.
    pub result: u64,
}

impl SweepRow {
    pub fn csv_record(&self) -> [String; 14] {
        let r = &self.report;
        [
            self.params.level.to_string(),
            self.regions.to_string(),
            self.l.to_string(),
            self.m.to_string(),
            self.threads.to_string(),
            self.engine.to_string(),
            r.comparison_units.to_string(),
            r.validation_units.to_string(),
            r.addxor_units.to_string(),
            r.total_units.to_string(),
            format!("{:.3}", r.comparison_ms),
            format!("{:.3}", r.validation_ms),
            format!("{:.3}", r.addxor_ms),
            format!("{:.3}", r.total_ms),
        ]
    }
}

/// Evaluates one prepared workload with `threads` workers, counting units
/// and timing each phase.
pub fn run_once(
    engine: &GateEngine,
    sk: &SecretKey,
    workload: &Workload,
    prepared: &crate::workload::Prepared,
    threads: usize,
    per_gate_delay_ms: Option<f64>,
) -> anyhow::Result<(PhaseReport, u64)> {
    let pool = WorkerPool::new(threads)?;
    engine.reset_counts();

    let start = Instant::now();
    let cmps = compare_all(&prepared.x, &prepared.y, &prepared.regions, engine, &pool)?;
    let t_cmp = start.elapsed();
    let after_cmp = engine.counts();

    let start = Instant::now();
    let masked = validate_all(&cmps, &prepared.regions, engine, &pool)?;
    let t_val = start.elapsed();
    let after_val = engine.counts();

    let start = Instant::now();
    let out = hom_add_xor_in(&masked, workload.m, engine, &pool)?;
    let t_xor = start.elapsed();
    let after_xor = engine.counts();

    let comparison_units = after_cmp.bootstrap_units();
    let validation_units = after_val.since(&after_cmp).bootstrap_units();
    let addxor_units = after_xor.since(&after_val).bootstrap_units();

    let (comparison_ms, validation_ms, addxor_ms) = match per_gate_delay_ms {
        Some(delay) => {
            let sim = simulate_phase_millis(
                workload.records.len() as u64,
                workload.format.len() as u64,
                workload.m as u64,
                threads as u64,
                delay,
            );
            (sim.comparison, sim.validation, sim.addxor)
        }
        None => (
            t_cmp.as_secs_f64() * 1e3,
            t_val.as_secs_f64() * 1e3,
            t_xor.as_secs_f64() * 1e3,
        ),
    };
    let report = PhaseReport {
        comparison_units,
        validation_units,
        addxor_units,
        total_units: comparison_units + validation_units + addxor_units,
        comparison_ms,
        validation_ms,
        addxor_ms,
        total_ms: comparison_ms + validation_ms + addxor_ms,
        wall: [t_cmp, t_val, t_xor],
    };
    Ok((report, out.reveal(sk)?))
}

/// Runs every configured tuple. Fails if the decrypted result differs from
/// the plaintext answer or between thread counts.
pub fn run_sweep(config: &BenchConfig, seed: u64) -> anyhow::Result<Vec<SweepRow>> {
    config.validate()?;
    let kind = config.engine_kind()?;
    let mut rows = Vec::new();
    for &security in &config.security {
        let params = TlweParams::from_security(security)?;
        let sk = SecretKey::generate(params, seed)?;
        for &regions in &config.regions {
            for &l in &config.lengths {
                for &m in &config.service_bits {
                    let engine = match kind {
                        EngineKind::Clear => GateEngine::clear(),
                        EngineKind::TlweOracle => GateEngine::tlwe_oracle(sk.clone(), seed ^ 0x5EED),
                    };
                    let workload = Workload::new(regions, l, m, seed)
                        .with_context(|| format!("workload N={regions} l={l} m={m}"))?;
                    let prepared = workload.prepare(&engine, &sk, seed.wrapping_add(1))?;
                    let mut first = None;
                    for &threads in &config.threads {
                        let (report, result) =
                            run_once(&engine, &sk, &workload, &prepared, threads, config.per_gate_delay_ms)?;
                        if result != workload.expected {
                            bail!(
                                "N={regions} l={l} m={m} n_t={threads}: decrypted {result}, expected {}",
                                workload.expected
                            );
                        }
                        match first {
                            None => first = Some(result),
                            Some(r) if r != result => {
                                bail!("result changed with thread count: {r} vs {result}")
                            }
                            _ => {}
                        }
                        rows.push(SweepRow {
                            params,
                            regions,
                            l,
                            m,
                            threads,
                            engine: kind,
                            report,
                            result,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()?;
    Ok(())
}
