//! Client side of the exchange and the transports that carry frames.

use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;

use crate::circuits::ZeroSampleSheet;
use crate::codec::{encode_fixed, encrypt_word, FixedPointFormat, GeoCoordinate};
use crate::engine::EngineKind;
use crate::error::{Error, Result};
use crate::torus::{NoiseSampler, SecretKey, TlweSample, Torus};

use super::messages::{decode_response, encode_query, ParamsMessage, SessionPhase};
use super::session::{ServerContext, Session};
use super::wire::{read_frame_bytes, write_frame, Frame, MsgType};

/// ZEROSHEET payload: `regions * m` fresh encryptions of zero, region-major.
pub fn client_preprocess(
    sk: &SecretKey,
    sampler: &mut NoiseSampler,
    regions: usize,
    m: usize,
) -> Vec<u8> {
    ZeroSampleSheet::generate(sk, sampler, regions, m).to_bytes()
}

/// QUERY payload for `coord`. A clear-engine server gets noiseless trivial
/// samples, since it cannot evaluate on masked ones.
pub fn client_query(
    coord: GeoCoordinate,
    sk: &SecretKey,
    sampler: &mut NoiseSampler,
    format: FixedPointFormat,
    engine: EngineKind,
) -> Result<Vec<u8>> {
    let lat = encode_fixed(coord.lat(), format)?;
    let lon = encode_fixed(coord.lon(), format)?;
    let encrypt = |word: &crate::codec::PlainWord, sampler: &mut NoiseSampler| match engine {
        EngineKind::TlweOracle => encrypt_word(word, sk, sampler),
        EngineKind::Clear => word
            .bits()
            .iter()
            .map(|&b| TlweSample::trivial(Torus::encode_bit(b), sk.n()))
            .collect(),
    };
    let lat = encrypt(&lat, sampler);
    let lon = encrypt(&lon, sampler);
    Ok(encode_query(&lat, &lon))
}

/// Decrypts a RESPONSE payload into the service integer, LSB first.
pub fn client_decrypt_response(payload: &[u8], sk: &SecretKey, m: usize) -> Result<u64> {
    if m > 64 {
        return Err(Error::OutOfRange(format!("service length {m} exceeds 64 bits")));
    }
    let samples = decode_response(payload, sk.n(), m).map_err(|e| Error::Malformed(e.message))?;
    samples.iter().enumerate().try_fold(0u64, |acc, (i, s)| {
        Ok(acc | ((sk.decrypt_bit(s)? as u64) << i))
    })
}

/// Sends one frame and waits for the reply.
pub trait Transport {
    fn exchange(&mut self, frame: &Frame) -> Result<Frame>;
}

/// In-process transport. Frames are serialized in both directions so the
/// server sees exactly the bytes a socket would carry.
pub struct Loopback<'a> {
    ctx: &'a ServerContext,
    session: Session,
}

impl<'a> Loopback<'a> {
    pub fn new(ctx: &'a ServerContext) -> Self {
        Loopback {
            session: ctx.new_session(),
            ctx,
        }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }
}

impl Transport for Loopback<'_> {
    fn exchange(&mut self, frame: &Frame) -> Result<Frame> {
        let reply = self.session.handle_bytes(self.ctx, &frame.encode());
        Frame::decode(&reply.encode()).map_err(|e| Error::Malformed(e.to_string()))
    }
}

pub struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpTransport {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }
}

impl Transport for TcpTransport {
    fn exchange(&mut self, frame: &Frame) -> Result<Frame> {
        write_frame(&mut self.writer, frame)?;
        let bytes = read_frame_bytes(&mut self.reader)?
            .ok_or_else(|| Error::Io(std::io::ErrorKind::UnexpectedEof.into()))?;
        Frame::decode(&bytes).map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// Runs one session over a connection until the peer closes it.
pub fn serve_connection(ctx: &ServerContext, stream: TcpStream) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut session = ctx.new_session();
    while let Some(bytes) = read_frame_bytes(&mut reader)? {
        let reply = session.handle_bytes(ctx, &bytes);
        write_frame(&mut writer, &reply)?;
    }
    log::info!("session {} closed", session.id());
    Ok(())
}

/// Accepts connections forever, one thread per session.
pub fn serve(listener: TcpListener, ctx: Arc<ServerContext>) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let ctx = Arc::clone(&ctx);
        std::thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = serve_connection(&ctx, stream) {
                log::warn!("connection {peer:?} ended with error: {e}");
            }
        });
    }
    Ok(())
}

fn expect(reply: Frame, msg_type: MsgType) -> Result<Frame> {
    if let Some(err) = reply.as_error() {
        return Err(Error::Remote {
            code: err.code as u8,
            message: err.message,
        });
    }
    if reply.msg_type != msg_type {
        return Err(Error::UnexpectedFrame(format!("{:?}", reply.msg_type)));
    }
    Ok(reply)
}

/// Drives one session: handshake, zero-sample upload, then queries.
pub struct Client<T> {
    transport: T,
    sk: SecretKey,
    sampler: NoiseSampler,
    announced: Option<ParamsMessage>,
}

impl<T: Transport> Client<T> {
    pub fn new(transport: T, sk: SecretKey, seed: u64) -> Self {
        let sigma = sk.params().sigma;
        Client {
            transport,
            sk,
            sampler: NoiseSampler::new(seed, sigma),
            announced: None,
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.sk
    }

    /// Requests PARAMS and adopts the announced noise level for the key.
    pub fn handshake(&mut self) -> Result<ParamsMessage> {
        let reply = expect(self.transport.exchange(&Frame::new(MsgType::Params, vec![]))?, MsgType::Params)?;
        let msg = ParamsMessage::decode(&reply.payload).map_err(|e| Error::Malformed(e.message))?;
        self.sk = self.sk.clone().with_params(msg.params)?;
        self.sampler = NoiseSampler::new(self.sampler_seed(), msg.params.sigma);
        self.announced = Some(msg.clone());
        Ok(msg)
    }

    fn sampler_seed(&mut self) -> u64 {
        self.sampler.uniform().0 as u64 | ((self.sampler.uniform().0 as u64) << 32)
    }

    fn announced(&mut self) -> Result<ParamsMessage> {
        match &self.announced {
            Some(msg) => Ok(msg.clone()),
            None => self.handshake(),
        }
    }

    pub fn upload_sheet(&mut self) -> Result<ParamsMessage> {
        let msg = self.announced()?;
        let payload = client_preprocess(&self.sk, &mut self.sampler, msg.regions, msg.m);
        self.upload_sheet_payload(payload)
    }

    /// Uploads a sheet produced earlier by [`client_preprocess`].
    pub fn upload_sheet_payload(&mut self, payload: Vec<u8>) -> Result<ParamsMessage> {
        let reply = expect(self.transport.exchange(&Frame::new(MsgType::ZeroSheet, payload))?, MsgType::Params)?;
        let ack = ParamsMessage::decode(&reply.payload).map_err(|e| Error::Malformed(e.message))?;
        if ack.phase != SessionPhase::Ready {
            return Err(Error::UnexpectedFrame("PARAMS without ready phase".into()));
        }
        self.announced = Some(ack.clone());
        Ok(ack)
    }

    /// Encrypted lookup; returns the decrypted service value.
    pub fn query(&mut self, coord: GeoCoordinate) -> Result<u64> {
        let msg = self.announced()?;
        let payload = client_query(coord, &self.sk, &mut self.sampler, msg.format, msg.engine)?;
        let reply = expect(self.transport.exchange(&Frame::new(MsgType::Query, payload))?, MsgType::Response)?;
        client_decrypt_response(&reply.payload, &self.sk, msg.m)
    }
}
