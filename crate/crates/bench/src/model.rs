//! Closed-form cost model of the lookup circuit.
//!
//! Per region: four comparators of `3l` units each, three ANDs for the
//! membership flag, `m` ANDs to mask the service and `m` XORs to
//! accumulate it.

/// Bootstrap units split by circuit phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseUnits {
    /// `12 N l`.
    pub comparison: u64,
    /// `3N + mN`: membership ANDs plus service masking.
    pub validation: u64,
    /// `mN`.
    pub addxor: u64,
}

impl PhaseUnits {
    pub fn total(&self) -> u64 {
        self.comparison + self.validation + self.addxor
    }
}

pub fn predict_phase_units(regions: u64, l: u64, m: u64) -> PhaseUnits {
    PhaseUnits {
        comparison: 12 * regions * l,
        validation: (3 + m) * regions,
        addxor: m * regions,
    }
}

/// `N (12l + 2m + 3)`.
pub fn predict_gate_units(regions: u64, l: u64, m: u64) -> u64 {
    regions * (12 * l + 2 * m + 3)
}

/// Simulated phase durations in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseMillis {
    pub comparison: f64,
    pub validation: f64,
    pub addxor: f64,
}

impl PhaseMillis {
    pub fn total(&self) -> f64 {
        self.comparison + self.validation + self.addxor
    }
}

/// Budget model for `threads` workers at `delay_ms` per unit, following the
/// evaluation schedule: regions fan out for comparison and validation, bit
/// columns fan out for the XOR accumulation. Each phase takes as many rounds
/// as the busiest worker has tasks.
pub fn simulate_phase_millis(regions: u64, l: u64, m: u64, threads: u64, delay_ms: f64) -> PhaseMillis {
    let threads = threads.max(1);
    let region_rounds = regions.div_ceil(threads) as f64;
    let column_rounds = if regions == 0 { 0.0 } else { m.div_ceil(threads) as f64 };
    PhaseMillis {
        comparison: region_rounds * (12 * l) as f64 * delay_ms,
        validation: region_rounds * (3 + m) as f64 * delay_ms,
        addxor: column_rounds * regions as f64 * delay_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_configurations() {
        let p = predict_phase_units(9, 13, 9);
        assert_eq!((p.comparison, p.validation, p.addxor), (1404, 108, 81));
        assert_eq!(p.total(), 1593);
        assert_eq!(predict_gate_units(9, 13, 9), 1593);
        assert_eq!(predict_gate_units(9, 16, 9), 1917);
        assert_eq!(predict_gate_units(1, 1, 1), 17);
    }

    #[test]
    fn length_ratio() {
        let a = predict_gate_units(10, 8, 9);
        let b = predict_gate_units(10, 16, 9);
        assert_eq!((a, b), (1170, 2130));
        assert!((b as f64 / a as f64 - 1.82).abs() < 0.005);
    }

    #[test]
    fn simulated_schedule() {
        let t = simulate_phase_millis(9, 13, 9, 6, 13.0);
        assert_eq!(t.comparison, 2.0 * 156.0 * 13.0);
        assert_eq!(t.validation, 2.0 * 12.0 * 13.0);
        assert_eq!(t.addxor, 2.0 * 9.0 * 13.0);
        let serial = simulate_phase_millis(9, 13, 9, 1, 1.0);
        assert_eq!(serial.total(), 1593.0);
        assert_eq!(simulate_phase_millis(0, 13, 9, 4, 1.0).total(), 0.0);
    }

    proptest! {
        #[test]
        fn linear_in_regions_and_service_length(n in 1u64..100, l in 1u64..64, m in 1u64..64) {
            let base = predict_gate_units(n, l, m);
            prop_assert_eq!(predict_gate_units(2 * n, l, m), 2 * base);
            prop_assert_eq!(predict_gate_units(n + 1, l, m) - base, predict_gate_units(1, l, m));
            prop_assert_eq!(predict_gate_units(n, l, m + 1) - base, 2 * n);
            prop_assert_eq!(predict_phase_units(n, l, m).total(), base);
        }

        #[test]
        fn more_threads_never_slower(n in 1u64..40, l in 1u64..33, m in 1u64..17, t in 1u64..16) {
            let a = simulate_phase_millis(n, l, m, t, 13.0).total();
            let b = simulate_phase_millis(n, l, m, t + 1, 13.0).total();
            prop_assert!(b <= a);
        }
    }
}
