//! Cost model, synthetic workloads and sweep driver for the lookup circuit.

pub mod model;
pub mod sweep;
pub mod workload;

pub use model::{predict_gate_units, predict_phase_units, simulate_phase_millis, PhaseMillis, PhaseUnits};
pub use sweep::{run_sweep, write_csv, BenchConfig, PhaseReport, SweepRow};
pub use workload::{format_for_len, Workload};
