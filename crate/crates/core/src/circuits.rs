//! Homomorphic circuits for location lookup: signed comparators, bounding-box
//! validation, service masking and XOR summation, and service encryption
//! from client-supplied zero samples.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::codec::CipherWord;
use crate::engine::{CipherBit, EngineKind, GateEngine};
use crate::error::{Error, Result};
use crate::torus::{NoiseSampler, SecretKey, TlweSample, Torus};

/// Fan-out for per-region work. One worker runs inline on the caller.
pub struct WorkerPool {
    pool: Option<ThreadPool>,
    threads: usize,
}

impl WorkerPool {
    pub fn new(threads: usize) -> Result<Self> {
        let threads = threads.max(1);
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .thread_name(|i| format!("locpir-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(WorkerPool { pool, threads })
    }

    pub fn sequential() -> Self {
        WorkerPool {
            pool: None,
            threads: 1,
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Applies `f` to every index in `0..len`, preserving order.
    pub fn map<R, F>(&self, len: usize, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize) -> Result<R> + Sync + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(|| (0..len).into_par_iter().map(&f).collect()),
            None => (0..len).map(f).collect(),
        }
    }
}

/// An encrypted `m`-bit service string, LSB first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServiceCiphertext {
    bits: Vec<CipherBit>,
}

impl ServiceCiphertext {
    pub fn new(bits: Vec<CipherBit>) -> Self {
        ServiceCiphertext { bits }
    }

    /// Noiseless encryption of zero.
    pub fn zeros(m: usize, engine: &GateEngine) -> Self {
        ServiceCiphertext {
            bits: (0..m).map(|_| engine.constant(false)).collect(),
        }
    }

    pub fn bits(&self) -> &[CipherBit] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<CipherBit> {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn reveal(&self, sk: &SecretKey) -> Result<u64> {
        self.bits.iter().enumerate().try_fold(0u64, |acc, (i, b)| {
            Ok(acc | ((b.reveal(sk)? as u64) << i))
        })
    }
}

/// `N x m` fresh encryptions of zero, each usable once.
#[derive(Clone, Debug)]
pub struct ZeroSampleSheet {
    samples: Vec<TlweSample>,
    used: Vec<bool>,
    regions: usize,
    m: usize,
}

impl ZeroSampleSheet {
    pub fn generate(sk: &SecretKey, sampler: &mut NoiseSampler, regions: usize, m: usize) -> Self {
        let samples = (0..regions * m).map(|_| sk.encrypt(Torus::ZERO, sampler)).collect();
        Self::from_samples(samples, regions, m).expect("sized by construction")
    }

    /// Samples in region-major, bit-minor order.
    pub fn from_samples(samples: Vec<TlweSample>, regions: usize, m: usize) -> Result<Self> {
        if samples.len() != regions * m {
            return Err(Error::LengthMismatch {
                expected: regions * m,
                found: samples.len(),
            });
        }
        Ok(ZeroSampleSheet {
            used: vec![false; samples.len()],
            samples,
            regions,
            m,
        })
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn samples(&self) -> &[TlweSample] {
        &self.samples
    }

    pub fn is_fresh(&self) -> bool {
        self.used.iter().all(|u| !u)
    }

    pub fn is_consumed(&self) -> bool {
        self.used.iter().all(|u| *u)
    }

    fn take(&mut self, region: usize, bit: usize) -> Result<&TlweSample> {
        let idx = region * self.m + bit;
        if self.used[idx] {
            return Err(Error::SheetConsumed { region, bit });
        }
        self.used[idx] = true;
        Ok(&self.samples[idx])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.samples.first().map_or(0, TlweSample::n);
        let mut out = Vec::with_capacity(self.samples.len() * TlweSample::byte_len(n));
        for s in &self.samples {
            s.write_to(&mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], n: usize, regions: usize, m: usize) -> Result<Self> {
        let sample_len = TlweSample::byte_len(n);
        if bytes.len() != regions * m * sample_len {
            return Err(Error::LengthMismatch {
                expected: regions * m * sample_len,
                found: bytes.len(),
            });
        }
        let samples = bytes
            .chunks_exact(sample_len)
            .map(|c| TlweSample::from_bytes(c, n))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(samples, regions, m)
    }
}

/// Encrypts each service value by adding a client zero sample to the
/// trivial encoding of every bit. Consumes the whole sheet.
pub fn preprocess_services(
    values: &[u64],
    sheet: &mut ZeroSampleSheet,
    m: usize,
    engine: &GateEngine,
) -> Result<Vec<ServiceCiphertext>> {
    if sheet.m() != m || sheet.regions() != values.len() {
        return Err(Error::LengthMismatch {
            expected: values.len() * m,
            found: sheet.regions() * sheet.m(),
        });
    }
    if let Some(&value) = values.iter().find(|&&v| m < 64 && v >> m != 0) {
        return Err(Error::ServiceOverflow { value, bits: m });
    }
    if !sheet.is_fresh() {
        return Err(Error::SheetConsumed { region: 0, bit: 0 });
    }
    let mut out = Vec::with_capacity(values.len());
    for (i, &value) in values.iter().enumerate() {
        let mut bits = Vec::with_capacity(m);
        for j in 0..m {
            let bit = (value >> j) & 1 == 1;
            let zero = sheet.take(i, j)?;
            bits.push(match engine.kind() {
                EngineKind::Clear => CipherBit::Clear(bit),
                EngineKind::TlweOracle => {
                    let mut ct = TlweSample::trivial(Torus::encode_bit(bit), zero.n());
                    ct.add_assign(zero)?;
                    engine.import(ct)?
                }
            });
        }
        out.push(ServiceCiphertext::new(bits));
    }
    Ok(out)
}

fn check_pair(c1: &CipherWord, c2: &CipherWord) -> Result<()> {
    if c1.len() != c2.len() || c1.format() != c2.format() {
        return Err(Error::LengthMismatch {
            expected: c1.len(),
            found: c2.len(),
        });
    }
    if c1.is_empty() {
        return Err(Error::InvalidParams("cannot compare empty words".into()));
    }
    Ok(())
}

/// Encrypted `c1 < c2` on two's-complement words.
///
/// Inverting both sign bits turns signed order into unsigned order. The scan
/// then runs LSB to MSB: where the bits agree the running result is kept,
/// where they differ it becomes `c2`'s bit, so the most significant
/// differing position decides. Cost: `l` XNOR and `l` MUX.
pub fn hom_comp_s(c1: &CipherWord, c2: &CipherWord, engine: &GateEngine) -> Result<CipherBit> {
    check_pair(c1, c2)?;
    let l = c1.len();
    let mut t0 = engine.constant(false);
    let sign1 = engine.not(&c1.bits()[l - 1])?;
    let sign2 = engine.not(&c2.bits()[l - 1])?;
    for i in 0..l {
        let (a, b) = if i == l - 1 {
            (&sign1, &sign2)
        } else {
            (&c1.bits()[i], &c2.bits()[i])
        };
        let t1 = engine.xnor(a, b)?;
        t0 = engine.mux(&t1, &t0, b)?;
    }
    Ok(t0)
}

/// Encrypted `c1 <= c2`, as `NOT (c2 < c1)`.
pub fn hom_comp_le(c1: &CipherWord, c2: &CipherWord, engine: &GateEngine) -> Result<CipherBit> {
    engine.not(&hom_comp_s(c2, c1, engine)?)
}

/// Keeps `s` when `flag` encrypts 1 and zeroes it otherwise. `m` AND gates.
pub fn bitwise_and(
    flag: &CipherBit,
    s: &ServiceCiphertext,
    engine: &GateEngine,
) -> Result<ServiceCiphertext> {
    let bits = s
        .bits()
        .iter()
        .map(|b| engine.and(flag, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(ServiceCiphertext::new(bits))
}

/// XOR of all services into a zero accumulator, `N * m` XOR gates.
///
/// Equals their sum when at most one input is nonzero; this is not checked.
pub fn hom_add_xor(
    services: &[ServiceCiphertext],
    m: usize,
    engine: &GateEngine,
) -> Result<ServiceCiphertext> {
    hom_add_xor_in(services, m, engine, &WorkerPool::sequential())
}

/// [`hom_add_xor`] with bit columns spread over `pool`.
pub fn hom_add_xor_in(
    services: &[ServiceCiphertext],
    m: usize,
    engine: &GateEngine,
    pool: &WorkerPool,
) -> Result<ServiceCiphertext> {
    if let Some(bad) = services.iter().find(|s| s.len() != m) {
        return Err(Error::LengthMismatch {
            expected: m,
            found: bad.len(),
        });
    }
    let bits = pool.map(m, |j| {
        services
            .iter()
            .try_fold(engine.constant(false), |acc, s| engine.xor(&acc, &s.bits()[j]))
    })?;
    Ok(ServiceCiphertext::new(bits))
}

/// One bounding box with its encrypted service. Boundaries are trivial
/// ciphertexts; membership is `x1 <= lat < x2` and `y1 <= lon < y2`.
#[derive(Clone, Debug)]
pub struct EncodedRegion {
    pub id: usize,
    pub x1: CipherWord,
    pub x2: CipherWord,
    pub y1: CipherWord,
    pub y2: CipherWord,
    pub service: ServiceCiphertext,
}

/// The four interval tests of one region, in order `x_l, x_r, y_l, y_r`.
pub type RegionComparison = [CipherBit; 4];

pub fn compare_region(
    enc_x: &CipherWord,
    enc_y: &CipherWord,
    region: &EncodedRegion,
    engine: &GateEngine,
) -> Result<RegionComparison> {
    Ok([
        hom_comp_le(&region.x1, enc_x, engine)?,
        hom_comp_s(enc_x, &region.x2, engine)?,
        hom_comp_le(&region.y1, enc_y, engine)?,
        hom_comp_s(enc_y, &region.y2, engine)?,
    ])
}

/// Combines the interval tests into a membership flag and masks the
/// region's service with it. `3 + m` AND gates.
pub fn validate_region(
    cmp: &RegionComparison,
    service: &ServiceCiphertext,
    engine: &GateEngine,
) -> Result<ServiceCiphertext> {
    let [x_l, x_r, y_l, y_r] = cmp;
    let v1 = engine.and(x_l, x_r)?;
    let v2 = engine.and(y_l, y_r)?;
    let f = engine.and(&v1, &v2)?;
    bitwise_and(&f, service, engine)
}

pub fn compare_all(
    enc_x: &CipherWord,
    enc_y: &CipherWord,
    regions: &[EncodedRegion],
    engine: &GateEngine,
    pool: &WorkerPool,
) -> Result<Vec<RegionComparison>> {
    pool.map(regions.len(), |i| compare_region(enc_x, enc_y, &regions[i], engine))
}

pub fn validate_all(
    cmps: &[RegionComparison],
    regions: &[EncodedRegion],
    engine: &GateEngine,
    pool: &WorkerPool,
) -> Result<Vec<ServiceCiphertext>> {
    if cmps.len() != regions.len() {
        return Err(Error::LengthMismatch {
            expected: regions.len(),
            found: cmps.len(),
        });
    }
    pool.map(regions.len(), |i| validate_region(&cmps[i], &regions[i].service, engine))
}

/// Encrypted service of the region containing `(enc_x, enc_y)`, or zero.
///
/// Costs `N * (12l + 2m + 3)` bootstrap units. Regions are assumed pairwise
/// disjoint; overlapping regions XOR their services together.
pub fn loc_pir(
    enc_x: &CipherWord,
    enc_y: &CipherWord,
    regions: &[EncodedRegion],
    m: usize,
    engine: &GateEngine,
    pool: &WorkerPool,
) -> Result<ServiceCiphertext> {
    if enc_x.format() != enc_y.format() {
        return Err(Error::LengthMismatch {
            expected: enc_x.len(),
            found: enc_y.len(),
        });
    }
    if let Some(r) = regions.iter().find(|r| r.service.len() != m) {
        return Err(Error::LengthMismatch {
            expected: m,
            found: r.service.len(),
        });
    }
    let cmps = compare_all(enc_x, enc_y, regions, engine, pool)?;
    let masked = validate_all(&cmps, regions, engine, pool)?;
    hom_add_xor_in(&masked, m, engine, pool)
}
