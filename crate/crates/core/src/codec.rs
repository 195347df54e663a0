//! Fixed-point two's-complement encoding of GPS coordinates and bit-wise
//! encryption of encoded words. Bit index 0 is always the least significant
//! bit; index `l - 1` is the sign bit.

use crate::engine::{CipherBit, GateEngine};
use crate::error::{Error, Result};
use crate::torus::{NoiseSampler, SecretKey, TlweSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    int_bits: u8,
    frac_bits: u8,
}

impl Default for FixedPointFormat {
    /// 9 integer bits and 7 fractional bits.
    fn default() -> Self {
        FixedPointFormat {
            int_bits: 9,
            frac_bits: 7,
        }
    }
}

impl FixedPointFormat {
    pub fn new(int_bits: u8, frac_bits: u8) -> Result<Self> {
        let l = int_bits as usize + frac_bits as usize;
        if int_bits == 0 || !(2..=63).contains(&l) {
            return Err(Error::InvalidParams(format!(
                "fixed-point format needs 2 <= l <= 63 and a sign bit, got {int_bits}+{frac_bits}"
            )));
        }
        Ok(FixedPointFormat { int_bits, frac_bits })
    }

    /// Geographic format with the default 9 integer bits.
    pub fn with_frac_bits(frac_bits: u8) -> Result<Self> {
        Self::new(9, frac_bits)
    }

    pub fn int_bits(&self) -> u8 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u8 {
        self.frac_bits
    }

    /// Total word length `l`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.int_bits as usize + self.frac_bits as usize
    }

    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.len() - 1))
    }

    pub fn max_code(&self) -> i64 {
        (1i64 << (self.len() - 1)) - 1
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    /// Signed integer code of `v`: `round(v * 2^frac)`, ties away from zero.
    pub fn quantize(&self, v: f64) -> Result<i64> {
        if !v.is_finite() {
            return Err(Error::OutOfRange(format!("{v} is not a finite coordinate")));
        }
        let code = (v * self.scale()).round();
        if code < self.min_code() as f64 || code > self.max_code() as f64 {
            return Err(Error::OutOfRange(format!(
                "{v} does not fit a {}.{} fixed-point word",
                self.int_bits, self.frac_bits
            )));
        }
        Ok(code as i64)
    }
}

/// A validated latitude/longitude pair in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoCoordinate {
    lat: f64,
    lon: f64,
}

impl GeoCoordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::OutOfRange(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::OutOfRange(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(GeoCoordinate { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainWord {
    bits: Vec<bool>,
    format: FixedPointFormat,
}

impl PlainWord {
    pub fn from_code(code: i64, format: FixedPointFormat) -> Result<Self> {
        if code < format.min_code() || code > format.max_code() {
            return Err(Error::OutOfRange(format!(
                "code {code} does not fit {} bits",
                format.len()
            )));
        }
        let bits = (0..format.len()).map(|i| (code >> i) & 1 == 1).collect();
        Ok(PlainWord { bits, format })
    }

    pub fn from_bits(bits: Vec<bool>, format: FixedPointFormat) -> Result<Self> {
        if bits.len() != format.len() {
            return Err(Error::LengthMismatch {
                expected: format.len(),
                found: bits.len(),
            });
        }
        Ok(PlainWord { bits, format })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    /// Two's-complement integer value of the bits.
    pub fn code(&self) -> i64 {
        let l = self.bits.len();
        let raw = self
            .bits
            .iter()
            .enumerate()
            .fold(0i64, |acc, (i, &b)| acc | ((b as i64) << i));
        if self.bits[l - 1] {
            raw - (1i64 << l)
        } else {
            raw
        }
    }

    /// Unsigned integer of the bits (the word as stored).
    pub fn raw(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }
}

pub fn encode_fixed(v: f64, format: FixedPointFormat) -> Result<PlainWord> {
    PlainWord::from_code(format.quantize(v)?, format)
}

pub fn decode_fixed(word: &PlainWord) -> f64 {
    word.code() as f64 / word.format.scale()
}

/// An `l`-bit word encrypted bit by bit, LSB first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherWord {
    bits: Vec<CipherBit>,
    format: FixedPointFormat,
}

impl CipherWord {
    pub fn new(bits: Vec<CipherBit>, format: FixedPointFormat) -> Result<Self> {
        if bits.len() != format.len() {
            return Err(Error::LengthMismatch {
                expected: format.len(),
                found: bits.len(),
            });
        }
        if let Some(first) = bits.first() {
            if bits.iter().any(|b| b.kind() != first.kind()) {
                return Err(Error::EngineMismatch);
            }
        }
        Ok(CipherWord { bits, format })
    }

    /// Noiseless word for a value the server already knows.
    pub fn trivial(word: &PlainWord, engine: &GateEngine) -> CipherWord {
        CipherWord {
            bits: word.bits().iter().map(|&b| engine.constant(b)).collect(),
            format: word.format(),
        }
    }

    pub fn bits(&self) -> &[CipherBit] {
        &self.bits
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Serialized size: `l` samples, no length prefix. The word length is
    /// fixed per session by the announced format.
    pub fn byte_len(l: usize, n: usize) -> usize {
        l * TlweSample::byte_len(n)
    }

    /// `l` samples, LSB first.
    pub fn write_samples(samples: &[TlweSample], out: &mut Vec<u8>) {
        for s in samples {
            s.write_to(out);
        }
    }

    /// Parses one `l`-bit word from the front of `bytes`; returns the
    /// samples and the number of bytes consumed.
    pub fn read_samples(bytes: &[u8], n: usize, l: usize) -> Result<(Vec<TlweSample>, usize)> {
        let len = Self::byte_len(l, n);
        if bytes.len() < len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: bytes.len(),
            });
        }
        let samples = bytes[..len]
            .chunks_exact(TlweSample::byte_len(n))
            .map(|c| TlweSample::from_bytes(c, n))
            .collect::<Result<Vec<_>>>()?;
        Ok((samples, len))
    }
}

/// Client-side encryption of every bit under `sk`.
pub fn encrypt_word(word: &PlainWord, sk: &SecretKey, sampler: &mut NoiseSampler) -> Vec<TlweSample> {
    word.bits().iter().map(|&b| sk.encrypt_bit(b, sampler)).collect()
}

pub fn decrypt_word(
    samples: &[TlweSample],
    sk: &SecretKey,
    format: FixedPointFormat,
) -> Result<PlainWord> {
    let bits = samples
        .iter()
        .map(|s| sk.decrypt_bit(s))
        .collect::<Result<Vec<_>>>()?;
    PlainWord::from_bits(bits, format)
}

/// Encrypts a word into engine bits: fresh TLWE encryptions for the oracle
/// engine, plain bits for the clear engine.
pub fn encrypt_cipher_word(
    word: &PlainWord,
    sk: &SecretKey,
    sampler: &mut NoiseSampler,
    engine: &GateEngine,
) -> Result<CipherWord> {
    let bits = match engine.kind() {
        crate::engine::EngineKind::Clear => word.bits().iter().map(|&b| CipherBit::Clear(b)).collect(),
        crate::engine::EngineKind::TlweOracle => encrypt_word(word, sk, sampler)
            .into_iter()
            .map(CipherBit::Tlwe)
            .collect(),
    };
    CipherWord::new(bits, word.format())
}

pub fn decrypt_cipher_word(word: &CipherWord, sk: &SecretKey) -> Result<PlainWord> {
    let bits = word
        .bits()
        .iter()
        .map(|b| b.reveal(sk))
        .collect::<Result<Vec<_>>>()?;
    PlainWord::from_bits(bits, word.format())
}
