//! Payload layouts. All integers little-endian.

use crate::codec::{CipherWord, FixedPointFormat};
use crate::engine::EngineKind;
use crate::torus::{SecurityLevel, TlweParams, TlweSample};

use super::wire::{ErrorCode, WireError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionPhase {
    AwaitingSheet,
    Ready,
}

/// Server parameter announcement.
///
/// ```text
/// session u64 | security u8 | n u32 | sigma f64 | int_bits u8 | frac_bits u8
/// | regions u32 | m u32 | engine u8 | flags u8 | phase u8
/// ```
///
/// `engine` is 0 for clear, 1 for tlwe-oracle. Flag bit 0 marks the
/// insecure demonstration mode in which the server holds the secret key.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamsMessage {
    pub session_id: u64,
    pub params: TlweParams,
    pub format: FixedPointFormat,
    pub regions: usize,
    pub m: usize,
    pub engine: EngineKind,
    pub insecure_demo: bool,
    pub phase: SessionPhase,
}

pub const PARAMS_LEN: usize = 8 + 1 + 4 + 8 + 1 + 1 + 4 + 4 + 1 + 1 + 1;

impl ParamsMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PARAMS_LEN);
        out.extend_from_slice(&self.session_id.to_le_bytes());
        out.push(self.params.level.bits());
        out.extend_from_slice(&(self.params.n as u32).to_le_bytes());
        out.extend_from_slice(&self.params.sigma.to_le_bytes());
        out.push(self.format.int_bits());
        out.push(self.format.frac_bits());
        out.extend_from_slice(&(self.regions as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        out.push(match self.engine {
            EngineKind::Clear => 0,
            EngineKind::TlweOracle => 1,
        });
        out.push(self.insecure_demo as u8);
        out.push(match self.phase {
            SessionPhase::AwaitingSheet => 0,
            SessionPhase::Ready => 1,
        });
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() != PARAMS_LEN {
            return Err(WireError::new(
                ErrorCode::Length,
                format!("PARAMS payload is {} bytes, expected {PARAMS_LEN}", bytes.len()),
            ));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let rejected = |m: String| WireError::new(ErrorCode::Rejected, m);
        let session_id = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
        let n = u32_at(9);
        let sigma = f64::from_le_bytes(bytes[13..21].try_into().unwrap());
        let level = match bytes[8] {
            80 => SecurityLevel::Sec80,
            128 => SecurityLevel::Sec128,
            0 => SecurityLevel::Custom,
            other => return Err(rejected(format!("unknown security level {other}"))),
        };
        let params = TlweParams { n, sigma, level };
        params.validate().map_err(|e| rejected(e.to_string()))?;
        let format =
            FixedPointFormat::new(bytes[21], bytes[22]).map_err(|e| rejected(e.to_string()))?;
        let engine = match bytes[31] {
            0 => EngineKind::Clear,
            1 => EngineKind::TlweOracle,
            other => return Err(rejected(format!("unknown engine tag {other}"))),
        };
        let phase = match bytes[33] {
            0 => SessionPhase::AwaitingSheet,
            1 => SessionPhase::Ready,
            other => return Err(rejected(format!("unknown session phase {other}"))),
        };
        Ok(ParamsMessage {
            session_id,
            params,
            format,
            regions: u32_at(23),
            m: u32_at(27),
            engine,
            insecure_demo: bytes[32] & 1 == 1,
            phase,
        })
    }
}

/// QUERY payload: latitude word then longitude word.
pub fn encode_query(lat: &[TlweSample], lon: &[TlweSample]) -> Vec<u8> {
    let n = lat.first().map_or(0, TlweSample::n);
    let mut out = Vec::with_capacity(2 * CipherWord::byte_len(lat.len(), n));
    CipherWord::write_samples(lat, &mut out);
    CipherWord::write_samples(lon, &mut out);
    out
}

pub fn decode_query(
    bytes: &[u8],
    n: usize,
    l: usize,
) -> Result<(Vec<TlweSample>, Vec<TlweSample>), WireError> {
    let expected = 2 * CipherWord::byte_len(l, n);
    if bytes.len() != expected {
        return Err(WireError::new(
            ErrorCode::Length,
            format!("QUERY payload is {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let (lat, used) = CipherWord::read_samples(bytes, n, l)?;
    let (lon, _) = CipherWord::read_samples(&bytes[used..], n, l)?;
    Ok((lat, lon))
}

/// RESPONSE payload: `m` raw samples, LSB first.
pub fn encode_response(samples: &[TlweSample]) -> Vec<u8> {
    let mut out = Vec::new();
    for s in samples {
        s.write_to(&mut out);
    }
    out
}

pub fn decode_response(bytes: &[u8], n: usize, m: usize) -> Result<Vec<TlweSample>, WireError> {
    let sample_len = TlweSample::byte_len(n);
    if bytes.len() != m * sample_len {
        return Err(WireError::new(
            ErrorCode::Length,
            format!("RESPONSE payload is {} bytes, expected {}", bytes.len(), m * sample_len),
        ));
    }
    bytes
        .chunks_exact(sample_len)
        .map(|c| TlweSample::from_bytes(c, n).map_err(WireError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_trip() {
        let msg = ParamsMessage {
            session_id: 0xDEAD_BEEF,
            params: TlweParams::sec128(),
            format: FixedPointFormat::with_frac_bits(4).unwrap(),
            regions: 9,
            m: 9,
            engine: EngineKind::TlweOracle,
            insecure_demo: true,
            phase: SessionPhase::Ready,
        };
        let bytes = msg.encode();
        assert_eq!(bytes.len(), PARAMS_LEN);
        assert_eq!(ParamsMessage::decode(&bytes).unwrap(), msg);
        assert_eq!(ParamsMessage::decode(&bytes[1..]).unwrap_err().code, ErrorCode::Length);
        let mut bad = bytes.clone();
        bad[8] = 81;
        assert_eq!(ParamsMessage::decode(&bad).unwrap_err().code, ErrorCode::Rejected);
    }

    #[test]
    fn response_size() {
        let samples = vec![TlweSample::trivial(Default::default(), 630); 9];
        let bytes = encode_response(&samples);
        assert_eq!(bytes.len(), 22716);
        assert_eq!(decode_response(&bytes, 630, 9).unwrap(), samples);
        assert!(decode_response(&bytes, 630, 8).is_err());
    }
}
