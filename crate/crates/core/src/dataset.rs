//! Bounding-box/service tables.
//!
//! CSV layout, one region per row:
//!
//! ```text
//! city,lat1,lat2,long1,long2,service
//! Seoul,37.4758,37.6195,126.8831,127.1331,427
//! ```

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::circuits::{EncodedRegion, ServiceCiphertext};
use crate::codec::{CipherWord, FixedPointFormat, GeoCoordinate, PlainWord};
use crate::engine::GateEngine;
use crate::error::{Error, Result};

const HEADER: [&str; 6] = ["city", "lat1", "lat2", "long1", "long2", "service"];

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct RegionRecord {
    #[serde(rename = "city")]
    pub name: String,
    pub lat1: f64,
    pub lat2: f64,
    #[serde(rename = "long1")]
    pub lon1: f64,
    #[serde(rename = "long2")]
    pub lon2: f64,
    pub service: u64,
}

impl RegionRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        GeoCoordinate::new(self.lat1, self.lon1).map_err(|e| e.to_string())?;
        GeoCoordinate::new(self.lat2, self.lon2).map_err(|e| e.to_string())?;
        if self.lat1 >= self.lat2 {
            return Err(format!(
                "{}: lat1 {} is not below lat2 {}",
                self.name, self.lat1, self.lat2
            ));
        }
        if self.lon1 >= self.lon2 {
            return Err(format!(
                "{}: long1 {} is not below long2 {}",
                self.name, self.lon1, self.lon2
            ));
        }
        Ok(())
    }

    /// Integer codes `(x1, x2, y1, y2)` of the box edges under `format`.
    pub fn codes(&self, format: FixedPointFormat) -> Result<[i64; 4]> {
        Ok([
            format.quantize(self.lat1)?,
            format.quantize(self.lat2)?,
            format.quantize(self.lon1)?,
            format.quantize(self.lon2)?,
        ])
    }

    /// Plaintext membership with half-open edges, evaluated on encoded
    /// values.
    pub fn contains(&self, lat: f64, lon: f64, format: FixedPointFormat) -> Result<bool> {
        let [x1, x2, y1, y2] = self.codes(format)?;
        let (x, y) = (format.quantize(lat)?, format.quantize(lon)?);
        Ok(x1 <= x && x < x2 && y1 <= y && y < y2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetConfig {
    /// Number of regions `N`.
    pub regions: usize,
    /// Service bit length `m`.
    pub m: usize,
    pub format: FixedPointFormat,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub records: Vec<RegionRecord>,
    pub config: DatasetConfig,
}

impl Dataset {
    pub fn service_values(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.service).collect()
    }

    /// Plaintext lookup used as the reference for the encrypted circuit.
    pub fn lookup(&self, lat: f64, lon: f64) -> Result<u64> {
        let mut out = 0;
        for r in &self.records {
            if r.contains(lat, lon, self.config.format)? {
                out ^= r.service;
            }
        }
        Ok(out)
    }
}

/// Bits needed for `value` (at least 1).
pub fn bit_length(value: u64) -> usize {
    (64 - value.leading_zeros() as usize).max(1)
}

pub fn load_dataset(
    path: impl AsRef<Path>,
    format: FixedPointFormat,
    m_override: Option<usize>,
) -> Result<Dataset> {
    let file = File::open(path)?;
    read_dataset(file, format, m_override)
}

/// Parses and validates a table. Errors name the 1-based file line.
pub fn read_dataset<R: Read>(
    reader: R,
    format: FixedPointFormat,
    m_override: Option<usize>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Dataset {
        line: 1,
        reason: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Dataset {
            line: 1,
            reason: format!("expected header {:?}", HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in rdr.deserialize::<RegionRecord>() {
        let record = row.map_err(|e| Error::Dataset {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = records.len() + 2;
        record.validate().map_err(|reason| Error::Dataset { line, reason })?;
        let [x1, x2, y1, y2] = record.codes(format).map_err(|e| Error::Dataset {
            line,
            reason: e.to_string(),
        })?;
        if x1 >= x2 || y1 >= y2 {
            return Err(Error::Dataset {
                line,
                reason: format!(
                    "{}: box collapses after rounding to {} fractional bits",
                    record.name,
                    format.frac_bits()
                ),
            });
        }
        records.push(record);
    }

    let required = bit_length(records.iter().map(|r| r.service).max().unwrap_or(0));
    let m = match m_override {
        Some(m) if m < required => {
            return Err(Error::InvalidParams(format!(
                "service length {m} is below the {required} bits the data needs"
            )))
        }
        Some(m) if m > 64 => {
            return Err(Error::InvalidParams(format!("service length {m} exceeds 64 bits")))
        }
        Some(m) => m,
        None => required,
    };
    let dataset = Dataset {
        config: DatasetConfig {
            regions: records.len(),
            m,
            format,
        },
        records,
    };
    for (a, b) in validate_disjoint(&dataset.records, format)? {
        log::warn!(
            "regions {} and {} overlap after encoding; their services will be XORed",
            dataset.records[a].name,
            dataset.records[b].name
        );
    }
    Ok(dataset)
}

/// Index pairs whose encoded half-open boxes share positive area.
pub fn validate_disjoint(
    records: &[RegionRecord],
    format: FixedPointFormat,
) -> Result<Vec<(usize, usize)>> {
    let codes = records
        .iter()
        .map(|r| r.codes(format))
        .collect::<Result<Vec<_>>>()?;
    let mut overlaps = Vec::new();
    for i in 0..codes.len() {
        for j in i + 1..codes.len() {
            let [ax1, ax2, ay1, ay2] = codes[i];
            let [bx1, bx2, by1, by2] = codes[j];
            let lat = ax1.max(bx1) < ax2.min(bx2);
            let lon = ay1.max(by1) < ay2.min(by2);
            if lat && lon {
                overlaps.push((i, j));
            }
        }
    }
    Ok(overlaps)
}

/// Boundary words of one region, as trivial ciphertexts.
#[derive(Clone, Debug)]
pub struct RegionBounds {
    pub x1: CipherWord,
    pub x2: CipherWord,
    pub y1: CipherWord,
    pub y2: CipherWord,
}

pub fn encode_bounds(
    records: &[RegionRecord],
    format: FixedPointFormat,
    engine: &GateEngine,
) -> Result<Vec<RegionBounds>> {
    records
        .iter()
        .map(|r| {
            let [x1, x2, y1, y2] = r.codes(format)?;
            let word = |code| -> Result<CipherWord> {
                Ok(CipherWord::trivial(&PlainWord::from_code(code, format)?, engine))
            };
            Ok(RegionBounds {
                x1: word(x1)?,
                x2: word(x2)?,
                y1: word(y1)?,
                y2: word(y2)?,
            })
        })
        .collect()
}

/// Pairs encoded boundaries with the services produced by
/// [`crate::circuits::preprocess_services`].
pub fn encode_regions(
    records: &[RegionRecord],
    format: FixedPointFormat,
    engine: &GateEngine,
    services: Vec<ServiceCiphertext>,
) -> Result<Vec<EncodedRegion>> {
    if services.len() != records.len() {
        return Err(Error::LengthMismatch {
            expected: records.len(),
            found: services.len(),
        });
    }
    let bounds = encode_bounds(records, format, engine)?;
    Ok(bounds
        .into_iter()
        .zip(services)
        .enumerate()
        .map(|(id, (b, service))| EncodedRegion {
            id,
            x1: b.x1,
            x2: b.x2,
            y1: b.y1,
            y2: b.y2,
            service,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::decode_fixed;
    use crate::torus::{SecretKey, TlweParams};

    const HEAD: &str = "city,lat1,lat2,long1,long2,service\n";

    fn parse(body: &str) -> Result<Dataset> {
        read_dataset(format!("{HEAD}{body}").as_bytes(), FixedPointFormat::default(), None)
    }

    #[test]
    fn bit_lengths() {
        assert_eq!(bit_length(427), 9);
        assert_eq!(bit_length(511), 9);
        assert_eq!(bit_length(512), 10);
        assert_eq!(bit_length(0), 1);
        assert_eq!(bit_length(1), 1);
    }

    #[test]
    fn inverted_box_names_the_row() {
        let err = parse("A,1.0,2.0,3.0,4.0,1\nB,5.0,4.0,3.0,4.0,2\n").unwrap_err();
        match err {
            Error::Dataset { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains('B'), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(parse("A,1.0,x,3.0,4.0,1\n"), Err(Error::Dataset { line: 2, .. })));
        assert!(matches!(parse("A,1.0,2.0,3.0,4.0,-1\n"), Err(Error::Dataset { .. })));
        assert!(matches!(parse("A,95.0,96.0,3.0,4.0,1\n"), Err(Error::Dataset { .. })));
        let bad_header = read_dataset("a,b\n1,2\n".as_bytes(), FixedPointFormat::default(), None);
        assert!(matches!(bad_header, Err(Error::Dataset { line: 1, .. })));
    }

    #[test]
    fn collapsed_box_rejected() {
        let err = parse("A,1.0001,1.0002,3.0,4.0,1\n").unwrap_err();
        assert!(err.to_string().contains("collapses"), "{err}");
    }

    #[test]
    fn m_override() {
        let body = "A,1.0,2.0,3.0,4.0,427\n";
        let f = FixedPointFormat::default();
        let data = read_dataset(format!("{HEAD}{body}").as_bytes(), f, Some(12)).unwrap();
        assert_eq!(data.config.m, 12);
        assert!(read_dataset(format!("{HEAD}{body}").as_bytes(), f, Some(8)).is_err());
    }

    #[test]
    fn overlap_detection() {
        let data = parse("A,1.0,2.0,3.0,4.0,1\nB,1.0,2.0,3.0,4.0,2\nC,2.0,3.0,3.0,4.0,3\n").unwrap();
        assert_eq!(validate_disjoint(&data.records, data.config.format).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn bounds_are_trivial_words() {
        let data = parse("Seoul,37.4758,37.6195,126.8831,127.1331,427\n").unwrap();
        let sk = SecretKey::generate(TlweParams::sec80(), 1).unwrap();
        let engine = GateEngine::tlwe_oracle(sk.clone(), 1);
        let bounds = encode_bounds(&data.records, data.config.format, &engine).unwrap();
        let x1 = crate::codec::decrypt_cipher_word(&bounds[0].x1, &sk).unwrap();
        assert_eq!(decode_fixed(&x1), 37.4765625);
        for w in [&bounds[0].x1, &bounds[0].x2, &bounds[0].y1, &bounds[0].y2] {
            assert!(w.bits().iter().all(|b| b.as_sample().unwrap().is_trivial()));
        }
    }
}
