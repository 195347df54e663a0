//! Boolean gate evaluation over encrypted bits.
//!
//! [`GateEngine`] has two backends that must agree on every plaintext result
//! and every counter value:
//!
//! * `clear` evaluates the gates on plain booleans. It performs no
//!   cryptography and exists for benchmarking the circuit structure and for
//!   differential testing.
//! * `tlwe-oracle` evaluates the affine pre-gate combination on real TLWE
//!   samples and then refreshes the result with [`bootstrap_oracle`], which
//!   decrypts, thresholds and re-encrypts under the secret key.
//!
//! **The `tlwe-oracle` backend holds the secret key and is not secure for
//! deployment.** It reproduces the input/output behaviour and noise reset of
//! gate bootstrapping without a bootstrapping key. A real blind-rotation
//! backend would implement the same refresh contract behind this type.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::torus::{NoiseSampler, SecretKey, TlweParams, TlweSample, Torus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Clear,
    TlweOracle,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Clear => "clear",
            EngineKind::TlweOracle => "tlwe-oracle",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clear" => Ok(EngineKind::Clear),
            "tlwe-oracle" => Ok(EngineKind::TlweOracle),
            other => Err(Error::InvalidParams(format!(
                "unknown engine {other:?} (expected \"clear\" or \"tlwe-oracle\")"
            ))),
        }
    }
}

/// An encrypted bit. The variant always matches the engine that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CipherBit {
    Clear(bool),
    Tlwe(TlweSample),
}

impl CipherBit {
    pub fn kind(&self) -> EngineKind {
        match self {
            CipherBit::Clear(_) => EngineKind::Clear,
            CipherBit::Tlwe(_) => EngineKind::TlweOracle,
        }
    }

    pub fn as_sample(&self) -> Option<&TlweSample> {
        match self {
            CipherBit::Tlwe(s) => Some(s),
            CipherBit::Clear(_) => None,
        }
    }

    /// Plaintext of the bit: direct for clear bits, decrypted for samples.
    pub fn reveal(&self, sk: &SecretKey) -> Result<bool> {
        match self {
            CipherBit::Clear(b) => Ok(*b),
            CipherBit::Tlwe(s) => sk.decrypt_bit(s),
        }
    }
}

/// Plain snapshot of the gate counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub and: u64,
    pub or: u64,
    pub xor: u64,
    pub xnor: u64,
    pub not: u64,
    pub mux: u64,
}

impl GateCounts {
    /// NOT is free; a MUX costs two units.
    pub fn bootstrap_units(&self) -> u64 {
        self.and + self.or + self.xor + self.xnor + 2 * self.mux
    }

    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: &GateCounts) -> GateCounts {
        GateCounts {
            and: self.and - earlier.and,
            or: self.or - earlier.or,
            xor: self.xor - earlier.xor,
            xnor: self.xnor - earlier.xnor,
            not: self.not - earlier.not,
            mux: self.mux - earlier.mux,
        }
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, u64> {
        BTreeMap::from([
            ("and", self.and),
            ("or", self.or),
            ("xor", self.xor),
            ("xnor", self.xnor),
            ("not", self.not),
            ("mux", self.mux),
            ("bootstrap_units", self.bootstrap_units()),
        ])
    }
}

#[derive(Debug, Default)]
pub struct GateCounter {
    and: AtomicU64,
    or: AtomicU64,
    xor: AtomicU64,
    xnor: AtomicU64,
    not: AtomicU64,
    mux: AtomicU64,
}

impl GateCounter {
    fn bump(&self, gate: Gate) {
        let slot = match gate {
            Gate::And => &self.and,
            Gate::Or => &self.or,
            Gate::Xor => &self.xor,
            Gate::Xnor => &self.xnor,
            Gate::Not => &self.not,
            Gate::Mux => &self.mux,
        };
        slot.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> GateCounts {
        GateCounts {
            and: self.and.load(Ordering::Relaxed),
            or: self.or.load(Ordering::Relaxed),
            xor: self.xor.load(Ordering::Relaxed),
            xnor: self.xnor.load(Ordering::Relaxed),
            not: self.not.load(Ordering::Relaxed),
            mux: self.mux.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        for slot in [&self.and, &self.or, &self.xor, &self.xnor, &self.not, &self.mux] {
            slot.store(0, Ordering::Relaxed);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Gate {
    And,
    Or,
    Xor,
    Xnor,
    Not,
    Mux,
}

impl Gate {
    fn eval(self, a: bool, b: bool) -> bool {
        match self {
            Gate::And => a & b,
            Gate::Or => a | b,
            Gate::Xor => a ^ b,
            Gate::Xnor => !(a ^ b),
            Gate::Not | Gate::Mux => unreachable!("not a two-input gate"),
        }
    }

    /// Pre-bootstrap affine form `(0, constant) + k*c1 + k*c2`.
    fn affine(self) -> (Torus, i32) {
        match self {
            Gate::And => (-Torus::EIGHTH, 1),
            Gate::Or => (Torus::EIGHTH, 1),
            Gate::Xor => (Torus::QUARTER, 2),
            Gate::Xnor => (-Torus::QUARTER, -2),
            Gate::Not | Gate::Mux => unreachable!("not a two-input gate"),
        }
    }
}

/// Functional stand-in for gate bootstrapping: a fresh encryption of `1/8`
/// if the phase lies in `(0, 1/2]`, of `-1/8` otherwise. The output noise is
/// drawn anew and does not depend on the input noise.
pub fn bootstrap_oracle(
    c: &TlweSample,
    sk: &SecretKey,
    sampler: &mut NoiseSampler,
) -> Result<TlweSample> {
    let phase = sk.phase(c)?;
    let positive = phase != Torus::ZERO && ((phase.0 as i32) > 0 || phase == Torus::HALF);
    Ok(sk.encrypt_bit(positive, sampler))
}

struct Oracle {
    sk: SecretKey,
    seed: u64,
    refreshes: AtomicU64,
}

impl Oracle {
    fn refresh(&self, c: &TlweSample) -> Result<TlweSample> {
        // Every refresh gets its own stream so workers never share a sampler.
        let stream = self.refreshes.fetch_add(1, Ordering::Relaxed);
        let mut sampler = NoiseSampler::from_stream(self.seed, stream, self.sk.params().sigma);
        bootstrap_oracle(c, &self.sk, &mut sampler)
    }

    #[cfg(debug_assertions)]
    fn check_margin(&self, lin: &TlweSample) {
        let phase = self.sk.phase(lin).expect("dimension checked by caller");
        let to_zero = phase.abs_distance();
        let to_half = 0.5 - to_zero;
        debug_assert!(
            to_zero.min(to_half) > 1.0 / 16.0,
            "pre-bootstrap phase {phase:?} is within the noise budget of a decision boundary"
        );
    }

    #[cfg(not(debug_assertions))]
    fn check_margin(&self, _lin: &TlweSample) {}
}

enum Backend {
    Clear,
    TlweOracle(Oracle),
}

/// Gate evaluator shared by all workers of a computation.
pub struct GateEngine {
    backend: Backend,
    counter: GateCounter,
}

impl fmt::Debug for GateEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GateEngine")
            .field("kind", &self.kind())
            .field("counts", &self.counts())
            .finish()
    }
}

impl GateEngine {
    pub fn clear() -> Self {
        GateEngine {
            backend: Backend::Clear,
            counter: GateCounter::default(),
        }
    }

    /// Insecure demonstration backend: keeps `sk` to refresh gate outputs.
    /// `seed` fixes the refresh noise streams.
    pub fn tlwe_oracle(sk: SecretKey, seed: u64) -> Self {
        GateEngine {
            backend: Backend::TlweOracle(Oracle {
                sk,
                seed,
                refreshes: AtomicU64::new(0),
            }),
            counter: GateCounter::default(),
        }
    }

    pub fn kind(&self) -> EngineKind {
        match self.backend {
            Backend::Clear => EngineKind::Clear,
            Backend::TlweOracle(_) => EngineKind::TlweOracle,
        }
    }

    pub fn params(&self) -> Option<&TlweParams> {
        match &self.backend {
            Backend::Clear => None,
            Backend::TlweOracle(o) => Some(o.sk.params()),
        }
    }

    pub fn counts(&self) -> GateCounts {
        self.counter.snapshot()
    }

    pub fn reset_counts(&self) {
        self.counter.reset();
    }

    /// Noiseless constant: a trivial sample or a plain bit.
    pub fn constant(&self, bit: bool) -> CipherBit {
        match &self.backend {
            Backend::Clear => CipherBit::Clear(bit),
            Backend::TlweOracle(o) => {
                CipherBit::Tlwe(TlweSample::trivial(Torus::encode_bit(bit), o.sk.n()))
            }
        }
    }

    /// Brings a received sample into this engine. The clear engine only
    /// accepts trivial samples and reads their body.
    pub fn import(&self, sample: TlweSample) -> Result<CipherBit> {
        match &self.backend {
            Backend::Clear => {
                if !sample.is_trivial() {
                    return Err(Error::Malformed(
                        "clear engine received a masked sample".into(),
                    ));
                }
                Ok(CipherBit::Clear(sample.body.decode_bit()))
            }
            Backend::TlweOracle(o) => {
                if sample.n() != o.sk.n() {
                    return Err(Error::DimensionMismatch {
                        expected: o.sk.n(),
                        found: sample.n(),
                    });
                }
                Ok(CipherBit::Tlwe(sample))
            }
        }
    }

    /// Sample form of a bit for the wire; clear bits become trivial samples
    /// of dimension `n`.
    pub fn export(&self, bit: &CipherBit, n: usize) -> Result<TlweSample> {
        match bit {
            CipherBit::Clear(b) => Ok(TlweSample::trivial(Torus::encode_bit(*b), n)),
            CipherBit::Tlwe(s) if s.n() == n => Ok(s.clone()),
            CipherBit::Tlwe(s) => Err(Error::DimensionMismatch {
                expected: n,
                found: s.n(),
            }),
        }
    }

    fn check(&self, bit: &CipherBit) -> Result<()> {
        if bit.kind() != self.kind() {
            return Err(Error::EngineMismatch);
        }
        Ok(())
    }

    fn binary(&self, gate: Gate, a: &CipherBit, b: &CipherBit) -> Result<CipherBit> {
        self.check(a)?;
        self.check(b)?;
        let out = match (&self.backend, a, b) {
            (Backend::Clear, CipherBit::Clear(x), CipherBit::Clear(y)) => {
                CipherBit::Clear(gate.eval(*x, *y))
            }
            (Backend::TlweOracle(o), CipherBit::Tlwe(x), CipherBit::Tlwe(y)) => {
                let (constant, k) = gate.affine();
                let mut lin = x.scale(k)?;
                lin.add_assign(&y.scale(k)?)?;
                lin.add_constant(constant);
                o.check_margin(&lin);
                CipherBit::Tlwe(o.refresh(&lin)?)
            }
            _ => return Err(Error::EngineMismatch),
        };
        self.counter.bump(gate);
        Ok(out)
    }

    pub fn and(&self, a: &CipherBit, b: &CipherBit) -> Result<CipherBit> {
        self.binary(Gate::And, a, b)
    }

    pub fn or(&self, a: &CipherBit, b: &CipherBit) -> Result<CipherBit> {
        self.binary(Gate::Or, a, b)
    }

    pub fn xor(&self, a: &CipherBit, b: &CipherBit) -> Result<CipherBit> {
        self.binary(Gate::Xor, a, b)
    }

    pub fn xnor(&self, a: &CipherBit, b: &CipherBit) -> Result<CipherBit> {
        self.binary(Gate::Xnor, a, b)
    }

    /// Negation needs no refresh and costs no bootstrap unit.
    pub fn not(&self, a: &CipherBit) -> Result<CipherBit> {
        self.check(a)?;
        let out = match a {
            CipherBit::Clear(x) => CipherBit::Clear(!x),
            CipherBit::Tlwe(s) => CipherBit::Tlwe(s.neg()),
        };
        self.counter.bump(Gate::Not);
        Ok(out)
    }

    /// `sel ? a : b`, accounted as two bootstrap units.
    ///
    /// TLWE form: refresh `sel AND a` and `!sel AND b`; at most one of them
    /// encrypts 1, so `(0, 1/8) + x + y` is their OR without another gate.
    /// That sum is refreshed once more so the output carries fresh noise.
    pub fn mux(&self, sel: &CipherBit, a: &CipherBit, b: &CipherBit) -> Result<CipherBit> {
        self.check(sel)?;
        self.check(a)?;
        self.check(b)?;
        let out = match (&self.backend, sel, a, b) {
            (Backend::Clear, CipherBit::Clear(s), CipherBit::Clear(x), CipherBit::Clear(y)) => {
                CipherBit::Clear(if *s { *x } else { *y })
            }
            (Backend::TlweOracle(o), CipherBit::Tlwe(s), CipherBit::Tlwe(x), CipherBit::Tlwe(y)) => {
                let mut take_a = s.add(x)?;
                take_a.add_constant(-Torus::EIGHTH);
                o.check_margin(&take_a);
                let take_a = o.refresh(&take_a)?;

                let mut take_b = s.neg();
                take_b.add_assign(y)?;
                take_b.add_constant(-Torus::EIGHTH);
                o.check_margin(&take_b);
                let take_b = o.refresh(&take_b)?;

                let mut combined = take_a;
                combined.add_assign(&take_b)?;
                combined.add_constant(Torus::EIGHTH);
                o.check_margin(&combined);
                CipherBit::Tlwe(o.refresh(&combined)?)
            }
            _ => return Err(Error::EngineMismatch),
        };
        self.counter.bump(Gate::Mux);
        Ok(out)
    }
}
