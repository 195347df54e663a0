//! Synthetic region tables of arbitrary size for sweeps.

use locpir_core::circuits::{preprocess_services, EncodedRegion, ZeroSampleSheet};
use locpir_core::codec::{encode_fixed, encrypt_cipher_word, CipherWord};
use locpir_core::dataset::{encode_regions, RegionRecord};
use locpir_core::{Error, FixedPointFormat, GateEngine, NoiseSampler, Result, SecretKey};

/// Word format for a sweep length `l`: up to 9 integer bits, the rest
/// fractional.
pub fn format_for_len(l: usize) -> Result<FixedPointFormat> {
    if l <= 9 {
        FixedPointFormat::new(l as u8, 0)
    } else {
        let frac = u8::try_from(l - 9).map_err(|_| Error::InvalidParams(format!("l = {l}")))?;
        FixedPointFormat::new(9, frac)
    }
}

/// `regions` unit-height boxes stacked along latitude, all spanning
/// longitude `[-1, 1)`, and a query on the lower edge of one of them.
#[derive(Clone, Debug)]
pub struct Workload {
    pub records: Vec<RegionRecord>,
    pub format: FixedPointFormat,
    pub m: usize,
    pub query: (f64, f64),
    pub expected: u64,
}

impl Workload {
    pub fn new(regions: usize, l: usize, m: usize, seed: u64) -> Result<Self> {
        if m == 0 || m > 63 {
            return Err(Error::InvalidParams(format!("service length {m} outside 1..=63")));
        }
        let format = format_for_len(l)?;
        let offset = regions as i64;
        let records: Vec<RegionRecord> = (0..regions)
            .map(|i| {
                let lat = (2 * i as i64 - offset) as f64;
                RegionRecord {
                    name: format!("r{i}"),
                    lat1: lat,
                    lat2: lat + 1.0,
                    lon1: -1.0,
                    lon2: 1.0,
                    service: (i as u64 % ((1u64 << m) - 1)) + 1,
                }
            })
            .collect();
        for r in &records {
            r.codes(format)?;
        }
        let (query, expected) = match regions {
            0 => ((0.0, 0.0), 0),
            _ => {
                let target = &records[(seed % regions as u64) as usize];
                ((target.lat1, 0.0), target.service)
            }
        };
        Ok(Workload {
            records,
            format,
            m,
            query,
            expected,
        })
    }

    /// Encrypts services through a fresh zero-sample sheet and the query
    /// under `sk`.
    pub fn prepare(&self, engine: &GateEngine, sk: &SecretKey, seed: u64) -> Result<Prepared> {
        let mut sampler = NoiseSampler::new(seed, sk.params().sigma);
        let mut sheet = ZeroSampleSheet::generate(sk, &mut sampler, self.records.len(), self.m);
        let values: Vec<u64> = self.records.iter().map(|r| r.service).collect();
        let services = preprocess_services(&values, &mut sheet, self.m, engine)?;
        let regions = encode_regions(&self.records, self.format, engine, services)?;
        let x = encrypt_cipher_word(&encode_fixed(self.query.0, self.format)?, sk, &mut sampler, engine)?;
        let y = encrypt_cipher_word(&encode_fixed(self.query.1, self.format)?, sk, &mut sampler, engine)?;
        Ok(Prepared { regions, x, y })
    }
}

pub struct Prepared {
    pub regions: Vec<EncodedRegion>,
    pub x: CipherWord,
    pub y: CipherWord,
}
