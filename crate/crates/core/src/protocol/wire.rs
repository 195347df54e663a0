//! Length-prefixed frames.
//!
//! ```text
//! +--------+---------+--------+-------------+---------------+
//! | "LPIR" | version | type   | payload len | payload       |
//! | 4 B    | u16 LE  | u8     | u32 LE      | len bytes     |
//! +--------+---------+--------+-------------+---------------+
//! ```

use std::fmt;
use std::io::{self, Read, Write};

pub const MAGIC: &[u8; 4] = b"LPIR";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 11;
/// Upper bound on accepted payloads; a sheet for thousands of regions fits.
pub const MAX_PAYLOAD: usize = 256 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Params = 1,
    ZeroSheet = 2,
    Query = 3,
    Response = 4,
    Error = 5,
}

impl TryFrom<u8> for MsgType {
    type Error = WireError;

    fn try_from(v: u8) -> Result<Self, WireError> {
        Ok(match v {
            1 => MsgType::Params,
            2 => MsgType::ZeroSheet,
            3 => MsgType::Query,
            4 => MsgType::Response,
            5 => MsgType::Error,
            other => {
                return Err(WireError::new(
                    ErrorCode::UnknownType,
                    format!("unknown message type {other}"),
                ))
            }
        })
    }
}

/// Reason codes carried by ERROR frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ErrorCode {
    /// Frame not valid in the current session phase.
    Phase = 1,
    /// Payload has the wrong size or cannot be parsed.
    Length = 2,
    UnknownType = 3,
    /// Bad magic, version or length prefix.
    Header = 4,
    /// Well-formed but unacceptable content.
    Rejected = 5,
    Internal = 6,
}

impl ErrorCode {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => ErrorCode::Phase,
            2 => ErrorCode::Length,
            3 => ErrorCode::UnknownType,
            4 => ErrorCode::Header,
            5 => ErrorCode::Rejected,
            6 => ErrorCode::Internal,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct WireError {
    pub code: ErrorCode,
    pub message: String,
}

impl WireError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        WireError {
            code,
            message: message.into(),
        }
    }
}

impl From<crate::error::Error> for WireError {
    fn from(e: crate::error::Error) -> Self {
        use crate::error::Error as E;
        let code = match &e {
            E::LengthMismatch { .. } | E::DimensionMismatch { .. } | E::Malformed(_) => {
                ErrorCode::Length
            }
            E::Io(_) => ErrorCode::Internal,
            _ => ErrorCode::Rejected,
        };
        WireError::new(code, e.to_string())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("msg_type", &self.msg_type)
            .field("payload_len", &self.payload.len())
            .finish()
    }
}

impl Frame {
    pub fn new(msg_type: MsgType, payload: Vec<u8>) -> Self {
        Frame { msg_type, payload }
    }

    pub fn error(err: &WireError) -> Self {
        let mut payload = vec![err.code as u8];
        payload.extend_from_slice(err.message.as_bytes());
        Frame::new(MsgType::Error, payload)
    }

    /// Decodes the payload of an ERROR frame.
    pub fn as_error(&self) -> Option<WireError> {
        if self.msg_type != MsgType::Error {
            return None;
        }
        let (&code, msg) = self.payload.split_first()?;
        Some(WireError::new(
            ErrorCode::from_u8(code).unwrap_or(ErrorCode::Internal),
            String::from_utf8_lossy(msg),
        ))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.msg_type as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Validates a header; returns the message type and payload length.
    pub fn decode_header(header: &[u8; HEADER_LEN]) -> Result<(MsgType, usize), WireError> {
        if &header[..4] != MAGIC {
            return Err(WireError::new(ErrorCode::Header, "bad magic"));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(WireError::new(
                ErrorCode::Header,
                format!("unsupported protocol version {version}"),
            ));
        }
        let len = u32::from_le_bytes([header[7], header[8], header[9], header[10]]) as usize;
        if len > MAX_PAYLOAD {
            return Err(WireError::new(ErrorCode::Header, format!("payload of {len} bytes too large")));
        }
        let msg_type = MsgType::try_from(header[6])?;
        Ok((msg_type, len))
    }

    /// Decodes exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Frame, WireError> {
        let header: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| WireError::new(ErrorCode::Header, "truncated header"))?;
        let (msg_type, len) = Frame::decode_header(header)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != len {
            return Err(WireError::new(
                ErrorCode::Length,
                format!("payload length {} does not match prefix {len}", payload.len()),
            ));
        }
        Ok(Frame::new(msg_type, payload.to_vec()))
    }
}

/// Reads one frame's raw bytes from a stream. Returns `Ok(None)` on a clean
/// end of stream before any header byte.
pub fn read_frame_bytes<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match r.read(&mut header[filled..])? {
            0 if filled == 0 => return Ok(None),
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            k => filled += k,
        }
    }
    let len = u32::from_le_bytes([header[7], header[8], header[9], header[10]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "payload too large"));
    }
    let mut bytes = Vec::with_capacity(HEADER_LEN + len);
    bytes.extend_from_slice(&header);
    bytes.resize(HEADER_LEN + len, 0);
    r.read_exact(&mut bytes[HEADER_LEN..])?;
    Ok(Some(bytes))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> io::Result<()> {
    w.write_all(&frame.encode())?;
    w.flush()
}
