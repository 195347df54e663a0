//! Discretized torus arithmetic and TLWE bit encryption.
//!
//! A torus element is a `u32` word read as the fraction `word / 2^32` of
//! `R/Z`. All linear operations wrap modulo `2^32`, so the phase of a sum of
//! samples equals the sum of their phases bit for bit.

use std::fmt;
use std::io::{Read, Write};
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const TWO_POW_32: f64 = 4_294_967_296.0;

/// One element of the discretized torus.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
#[repr(transparent)]
pub struct Torus(pub u32);

impl Torus {
    pub const ZERO: Torus = Torus(0);
    /// `1/8`, the encoding of bit 1.
    pub const EIGHTH: Torus = Torus(0x2000_0000);
    /// `1/4`.
    pub const QUARTER: Torus = Torus(0x4000_0000);
    /// `1/2`.
    pub const HALF: Torus = Torus(0x8000_0000);

    /// Nearest torus word to a real number (taken modulo 1).
    pub fn from_f64(x: f64) -> Self {
        let frac = x - x.floor();
        let scaled = (frac * TWO_POW_32).round();
        Torus((scaled as u64 & 0xFFFF_FFFF) as u32)
    }

    /// Representative in `[-1/2, 1/2)`.
    pub fn to_signed_f64(self) -> f64 {
        self.0 as i32 as f64 / TWO_POW_32
    }

    /// Distance to zero on the circle, as a fraction in `[0, 1/2]`.
    pub fn abs_distance(self) -> f64 {
        self.to_signed_f64().abs()
    }

    /// Plaintext encoding of a bit: `m/4 - 1/8`.
    pub fn encode_bit(bit: bool) -> Self {
        if bit {
            Torus::EIGHTH
        } else {
            -Torus::EIGHTH
        }
    }

    /// Rounds to the nearest of `{-1/8, 1/8}`: the bit is 1 iff the signed
    /// representative in `(-1/2, 1/2]` is non-negative. Zero breaks toward 1.
    pub fn decode_bit(self) -> bool {
        (self.0 as i32) >= 0 || self == Torus::HALF
    }

    pub fn scale(self, k: i32) -> Self {
        Torus(self.0.wrapping_mul(k as u32))
    }
}

impl fmt::Debug for Torus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Torus({:#010x})", self.0)
    }
}

impl Add for Torus {
    type Output = Torus;
    fn add(self, rhs: Torus) -> Torus {
        Torus(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for Torus {
    fn add_assign(&mut self, rhs: Torus) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for Torus {
    type Output = Torus;
    fn sub(self, rhs: Torus) -> Torus {
        Torus(self.0.wrapping_sub(rhs.0))
    }
}

impl SubAssign for Torus {
    fn sub_assign(&mut self, rhs: Torus) {
        self.0 = self.0.wrapping_sub(rhs.0);
    }
}

impl Neg for Torus {
    type Output = Torus;
    fn neg(self) -> Torus {
        Torus(self.0.wrapping_neg())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SecurityLevel {
    Sec80,
    Sec128,
    Custom,
}

impl SecurityLevel {
    /// Numeric tag used on the wire and on the command line (0 for custom).
    pub fn bits(self) -> u8 {
        match self {
            SecurityLevel::Sec80 => 80,
            SecurityLevel::Sec128 => 128,
            SecurityLevel::Custom => 0,
        }
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SecurityLevel::Sec80 => f.write_str("sec80"),
            SecurityLevel::Sec128 => f.write_str("sec128"),
            SecurityLevel::Custom => f.write_str("custom"),
        }
    }
}

/// TLWE parameter set: mask dimension and noise standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TlweParams {
    pub n: usize,
    /// Gaussian standard deviation as a torus fraction.
    pub sigma: f64,
    pub level: SecurityLevel,
}

impl TlweParams {
    pub fn sec80() -> Self {
        TlweParams {
            n: 540,
            sigma: 2f64.powf(-20.2),
            level: SecurityLevel::Sec80,
        }
    }

    pub fn sec128() -> Self {
        TlweParams {
            n: 630,
            sigma: 2f64.powf(-13.8),
            level: SecurityLevel::Sec128,
        }
    }

    pub fn custom(n: usize, sigma: f64) -> Result<Self> {
        let params = TlweParams {
            n,
            sigma,
            level: SecurityLevel::Custom,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_security(bits: u32) -> Result<Self> {
        match bits {
            80 => Ok(Self::sec80()),
            128 => Ok(Self::sec128()),
            other => Err(Error::InvalidParams(format!(
                "unknown security level {other} (expected 80 or 128)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("mask dimension n must be positive".into()));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidParams(format!("invalid sigma {}", self.sigma)));
        }
        let expected = match self.level {
            SecurityLevel::Sec80 => Some(Self::sec80()),
            SecurityLevel::Sec128 => Some(Self::sec128()),
            SecurityLevel::Custom => None,
        };
        if let Some(expected) = expected {
            if expected.n != self.n || expected.sigma != self.sigma {
                return Err(Error::InvalidParams(format!(
                    "{} requires n={} and sigma={}; use a custom parameter set instead",
                    self.level, expected.n, expected.sigma
                )));
            }
        }
        Ok(())
    }

    /// Serialized size of one sample: `4 * (n + 1)` bytes.
    pub fn sample_bytes(&self) -> usize {
        TlweSample::byte_len(self.n)
    }
}

/// Seeded source of uniform mask words and rounded Gaussian noise.
pub struct NoiseSampler {
    rng: ChaCha20Rng,
    normal: Option<Normal<f64>>,
    sigma: f64,
}

impl NoiseSampler {
    pub fn new(seed: u64, sigma: f64) -> Self {
        Self::from_rng(ChaCha20Rng::seed_from_u64(seed), sigma)
    }

    /// An independent stream derived from `seed`; distinct `stream` values
    /// never overlap.
    pub fn from_stream(seed: u64, stream: u64, sigma: f64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::from_rng(rng, sigma)
    }

    fn from_rng(rng: ChaCha20Rng, sigma: f64) -> Self {
        let normal = if sigma > 0.0 {
            Some(Normal::new(0.0, sigma).expect("sigma is finite and positive"))
        } else {
            None
        };
        NoiseSampler { rng, normal, sigma }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn uniform(&mut self) -> Torus {
        Torus(self.rng.random())
    }

    /// One draw of `N(0, sigma)` rounded to the nearest multiple of `2^-32`.
    pub fn gaussian(&mut self) -> Torus {
        match &self.normal {
            Some(normal) => {
                let x: f64 = normal.sample(&mut self.rng);
                Torus((x * TWO_POW_32).round() as i64 as u32)
            }
            None => Torus::ZERO,
        }
    }
}

impl fmt::Debug for NoiseSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseSampler").field("sigma", &self.sigma).finish_non_exhaustive()
    }
}

const KEY_MAGIC: &[u8; 4] = b"LPSK";
const KEY_VERSION: u16 = 1;

#[derive(Clone, PartialEq)]
pub struct SecretKey {
    bits: Vec<bool>,
    params: TlweParams,
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SecretKey")
            .field("n", &self.bits.len())
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl SecretKey {
    /// Draws `n` uniform key bits from a generator seeded with `seed`.
    pub fn generate(params: TlweParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bits = (0..params.n).map(|_| rng.random::<bool>()).collect();
        Ok(SecretKey { bits, params })
    }

    pub fn from_bits(bits: Vec<bool>, params: TlweParams) -> Result<Self> {
        params.validate()?;
        if bits.len() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                found: bits.len(),
            });
        }
        Ok(SecretKey { bits, params })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn params(&self) -> &TlweParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    /// Same key bits, different noise level. Used when a key file is paired
    /// with the parameters announced by a server.
    pub fn with_params(mut self, params: TlweParams) -> Result<Self> {
        params.validate()?;
        if params.n != self.bits.len() {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                found: self.bits.len(),
            });
        }
        self.params = params;
        Ok(self)
    }

    pub fn encrypt(&self, mu: Torus, sampler: &mut NoiseSampler) -> TlweSample {
        let mask: Vec<Torus> = (0..self.n()).map(|_| sampler.uniform()).collect();
        let body = dot(&mask, &self.bits) + mu + sampler.gaussian();
        TlweSample { mask, body }
    }

    pub fn encrypt_bit(&self, bit: bool, sampler: &mut NoiseSampler) -> TlweSample {
        self.encrypt(Torus::encode_bit(bit), sampler)
    }

    /// `body - mask . key`.
    pub fn phase(&self, ct: &TlweSample) -> Result<Torus> {
        if ct.mask.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: ct.mask.len(),
            });
        }
        Ok(ct.body - dot(&ct.mask, &self.bits))
    }

    pub fn decrypt_bit(&self, ct: &TlweSample) -> Result<bool> {
        Ok(self.phase(ct)?.decode_bit())
    }

    /// Key file: magic `LPSK`, `u16` version, `u32` n, then `ceil(n/8)`
    /// bytes of packed key bits (bit `i` at byte `i/8`, position `i%8`).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(KEY_MAGIC)?;
        w.write_all(&KEY_VERSION.to_le_bytes())?;
        w.write_all(&(self.n() as u32).to_le_bytes())?;
        let mut packed = vec![0u8; self.n().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                packed[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&packed)?;
        Ok(())
    }

    /// Reads a key file. The dimension selects the standard parameter set
    /// (540 or 630); any other dimension yields a noiseless custom set.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 10];
        r.read_exact(&mut header)?;
        if &header[..4] != KEY_MAGIC {
            return Err(Error::Malformed("secret key file has wrong magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != KEY_VERSION {
            return Err(Error::Malformed(format!("unsupported key file version {version}")));
        }
        let n = u32::from_le_bytes([header[6], header[7], header[8], header[9]]) as usize;
        let mut packed = vec![0u8; n.div_ceil(8)];
        r.read_exact(&mut packed)?;
        let bits = (0..n).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
        let params = match n {
            540 => TlweParams::sec80(),
            630 => TlweParams::sec128(),
            _ => TlweParams::custom(n, 0.0)?,
        };
        Ok(SecretKey { bits, params })
    }
}

fn dot(mask: &[Torus], key: &[bool]) -> Torus {
    let sum = mask
        .iter()
        .zip(key)
        .fold(0u32, |acc, (a, &k)| acc.wrapping_add(a.0 & (k as u32).wrapping_neg()));
    Torus(sum)
}

/// One TLWE ciphertext `(a, b)` encrypting a single torus plaintext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TlweSample {
    pub mask: Vec<Torus>,
    pub body: Torus,
}

impl TlweSample {
    /// Zero mask; the plaintext sits in the body with no noise.
    pub fn trivial(mu: Torus, n: usize) -> Self {
        TlweSample {
            mask: vec![Torus::ZERO; n],
            body: mu,
        }
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.mask.iter().all(|a| *a == Torus::ZERO)
    }

    fn check_dim(&self, other: &TlweSample) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &TlweSample) -> Result<TlweSample> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &TlweSample) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.mask.iter_mut().zip(&other.mask) {
            *a += *b;
        }
        self.body += other.body;
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &TlweSample) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.mask.iter_mut().zip(&other.mask) {
            *a -= *b;
        }
        self.body -= other.body;
        Ok(())
    }

    pub fn neg(&self) -> TlweSample {
        TlweSample {
            mask: self.mask.iter().map(|a| -*a).collect(),
            body: -self.body,
        }
    }

    /// Multiplies by a small integer, `|k| <= 4`.
    pub fn scale(&self, k: i32) -> Result<TlweSample> {
        if k.abs() > 4 {
            return Err(Error::OutOfRange(format!("scale factor {k} exceeds 4 in magnitude")));
        }
        Ok(TlweSample {
            mask: self.mask.iter().map(|a| a.scale(k)).collect(),
            body: self.body.scale(k),
        })
    }

    /// Adds a noiseless constant `(0, mu)`.
    pub fn add_constant(&mut self, mu: Torus) {
        self.body += mu;
    }

    pub const fn byte_len(n: usize) -> usize {
        4 * (n + 1)
    }

    /// `n + 1` little-endian words, mask first, body last.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.reserve(Self::byte_len(self.n()));
        for a in &self.mask {
            out.extend_from_slice(&a.0.to_le_bytes());
        }
        out.extend_from_slice(&self.body.0.to_le_bytes());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::byte_len(self.n()));
        self.write_to(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8], n: usize) -> Result<TlweSample> {
        if bytes.len() != Self::byte_len(n) {
            return Err(Error::LengthMismatch {
                expected: Self::byte_len(n),
                found: bytes.len(),
            });
        }
        let mut words = bytes
            .chunks_exact(4)
            .map(|c| Torus(u32::from_le_bytes([c[0], c[1], c[2], c[3]])));
        let mask = words.by_ref().take(n).collect();
        let body = words.next().expect("length checked");
        Ok(TlweSample { mask, body })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(n: usize) -> TlweParams {
        TlweParams::custom(n, 0.0).unwrap()
    }

    #[test]
    fn bit_encodings() {
        assert_eq!(Torus::encode_bit(false), Torus(0xE000_0000));
        assert_eq!(Torus::encode_bit(true), Torus(0x2000_0000));
        assert_eq!(Torus::from_f64(0.125), Torus::EIGHTH);
        assert_eq!(Torus::from_f64(-0.125), Torus(0xE000_0000));
    }

    #[test]
    fn decode_tie_goes_to_one() {
        assert!(Torus(0).decode_bit());
        assert!(Torus::HALF.decode_bit());
        assert!(!Torus(0xFFFF_FFFF).decode_bit());
        assert!(Torus(1).decode_bit());
    }

    #[test]
    fn keygen_dimensions_and_determinism() {
        let a = SecretKey::generate(TlweParams::sec80(), 1).unwrap();
        let b = SecretKey::generate(TlweParams::sec80(), 1).unwrap();
        assert_eq!(a.n(), 540);
        assert_eq!(a, b);
        let c = SecretKey::generate(TlweParams::sec128(), 1).unwrap();
        assert_eq!(c.n(), 630);
        let ones = a.bits().iter().filter(|b| **b).count();
        assert!((200..340).contains(&ones), "{ones} ones out of 540");
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(TlweParams::custom(0, 0.0), Err(Error::InvalidParams(_))));
        let bad = TlweParams {
            n: 0,
            sigma: 0.0,
            level: SecurityLevel::Custom,
        };
        assert!(SecretKey::generate(bad, 1).is_err());
    }

    #[test]
    fn tagged_levels_must_match_their_values() {
        let mut p = TlweParams::sec80();
        p.n = 100;
        assert!(p.validate().is_err());
        assert!(TlweParams::sec128().validate().is_ok());
    }

    #[test]
    fn noiseless_encryption_has_exact_phase() {
        let sk = SecretKey::generate(noiseless(64), 3).unwrap();
        let mut sampler = NoiseSampler::new(9, 0.0);
        let ct = sk.encrypt_bit(true, &mut sampler);
        assert_eq!(sk.phase(&ct).unwrap(), Torus(0x2000_0000));
        assert!(!ct.is_trivial());
    }

    #[test]
    fn trivial_samples() {
        let t = TlweSample::trivial(Torus::EIGHTH, 5);
        assert_eq!(t.mask, vec![Torus::ZERO; 5]);
        assert_eq!(t.body, Torus(0x2000_0000));
        let zero = TlweSample::trivial(Torus::ZERO, 5);
        assert!(zero.to_bytes().iter().all(|b| *b == 0));
        let t0 = TlweSample::trivial(Torus::encode_bit(false), 4);
        assert_eq!(t0.body, Torus(0xE000_0000));

        let sk = SecretKey::generate(TlweParams::sec80(), 11).unwrap();
        let mut sampler = NoiseSampler::new(1, sk.params().sigma);
        let zero_ct = sk.encrypt(Torus::ZERO, &mut sampler);
        let one = TlweSample::trivial(Torus::EIGHTH, 540).add(&zero_ct).unwrap();
        assert!(sk.decrypt_bit(&one).unwrap());
    }

    #[test]
    fn encrypt_decrypt_at_standard_parameters() {
        for params in [TlweParams::sec80(), TlweParams::sec128()] {
            let sk = SecretKey::generate(params, 5).unwrap();
            let mut sampler = NoiseSampler::new(6, params.sigma);
            for i in 0..200 {
                let bit = i % 3 == 0;
                let ct = sk.encrypt_bit(bit, &mut sampler);
                let noise = sk.phase(&ct).unwrap() - Torus::encode_bit(bit);
                assert!(noise.abs_distance() < 1.0 / 16.0);
                assert_eq!(sk.decrypt_bit(&ct).unwrap(), bit);
            }
        }
    }

    #[test]
    fn negation_flips_decryption() {
        let sk = SecretKey::generate(TlweParams::sec80(), 2).unwrap();
        let mut sampler = NoiseSampler::new(2, sk.params().sigma);
        let ct = sk.encrypt_bit(true, &mut sampler);
        assert!(!sk.decrypt_bit(&ct.neg()).unwrap());
        assert_eq!(ct.neg().neg(), ct);
    }

    #[test]
    fn linear_layer_phase_matches_sum() {
        let sk = SecretKey::generate(TlweParams::sec80(), 21).unwrap();
        let mut sampler = NoiseSampler::new(22, sk.params().sigma);
        let c1 = sk.encrypt_bit(true, &mut sampler);
        let c2 = sk.encrypt_bit(false, &mut sampler);
        let mut lin = TlweSample::trivial(-Torus::EIGHTH, 540);
        lin.add_assign(&c1).unwrap();
        lin.add_assign(&c2).unwrap();
        let expected = -Torus::EIGHTH + sk.phase(&c1).unwrap() + sk.phase(&c2).unwrap();
        assert_eq!(sk.phase(&lin).unwrap(), expected);
        assert_eq!(c1.scale(2).unwrap(), c1.add(&c1).unwrap());
        assert!(c1.scale(5).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let sk = SecretKey::generate(noiseless(8), 0).unwrap();
        let ct = TlweSample::trivial(Torus::ZERO, 9);
        assert!(matches!(sk.phase(&ct), Err(Error::DimensionMismatch { .. })));
        assert!(ct.add(&TlweSample::trivial(Torus::ZERO, 8)).is_err());
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(TlweParams::sec80().sample_bytes(), 2164);
        assert_eq!(TlweParams::sec128().sample_bytes(), 2524);
        let sk = SecretKey::generate(TlweParams::sec80(), 1).unwrap();
        let mut sampler = NoiseSampler::new(1, sk.params().sigma);
        let ct = sk.encrypt_bit(true, &mut sampler);
        let bytes = ct.to_bytes();
        assert_eq!(bytes.len(), 2164);
        assert_eq!(TlweSample::from_bytes(&bytes, 540).unwrap(), ct);
        assert!(TlweSample::from_bytes(&bytes[1..], 540).is_err());
    }

    #[test]
    fn key_file_round_trip() {
        let sk = SecretKey::generate(TlweParams::sec128(), 77).unwrap();
        let mut buf = Vec::new();
        sk.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"LPSK");
        assert_eq!(buf.len(), 4 + 2 + 4 + 630usize.div_ceil(8));
        let back = SecretKey::read_from(&buf[..]).unwrap();
        assert_eq!(back, sk);
        buf[0] = b'X';
        assert!(SecretKey::read_from(&buf[..]).is_err());
    }

    #[test]
    fn sampler_streams_are_reproducible() {
        let mut a = NoiseSampler::new(42, 1e-4);
        let mut b = NoiseSampler::new(42, 1e-4);
        for _ in 0..100 {
            assert_eq!(a.gaussian(), b.gaussian());
            assert_eq!(a.uniform(), b.uniform());
        }
        let mut s0 = NoiseSampler::from_stream(42, 0, 1e-4);
        let mut s1 = NoiseSampler::from_stream(42, 1, 1e-4);
        let x: Vec<_> = (0..8).map(|_| s0.uniform()).collect();
        let y: Vec<_> = (0..8).map(|_| s1.uniform()).collect();
        assert_ne!(x, y);
    }
}
