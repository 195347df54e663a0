//! Server side: shared context plus one state machine per client session.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::circuits::{loc_pir, preprocess_services, EncodedRegion, WorkerPool, ZeroSampleSheet};
use crate::codec::CipherWord;
use crate::dataset::{encode_bounds, Dataset, RegionBounds};
use crate::engine::{EngineKind, GateEngine};
use crate::error::Result;
use crate::torus::TlweParams;

use super::messages::{decode_query, encode_response, ParamsMessage, SessionPhase};
use super::wire::{ErrorCode, Frame, MsgType, WireError};

/// Everything sessions share: dataset, engine, worker pool.
pub struct ServerContext {
    dataset: Dataset,
    bounds: Vec<RegionBounds>,
    params: TlweParams,
    engine: GateEngine,
    pool: WorkerPool,
    next_session: AtomicU64,
}

impl ServerContext {
    /// `params` are announced to clients and fix the wire dimension. With the
    /// oracle engine they must be the parameters of the engine's key.
    pub fn new(
        dataset: Dataset,
        params: TlweParams,
        engine: GateEngine,
        threads: usize,
    ) -> Result<Self> {
        params.validate()?;
        if let Some(engine_params) = engine.params() {
            if engine_params.n != params.n {
                return Err(crate::error::Error::DimensionMismatch {
                    expected: params.n,
                    found: engine_params.n,
                });
            }
        }
        let bounds = encode_bounds(&dataset.records, dataset.config.format, &engine)?;
        Ok(ServerContext {
            dataset,
            bounds,
            params,
            engine,
            pool: WorkerPool::new(threads)?,
            next_session: AtomicU64::new(1),
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn engine(&self) -> &GateEngine {
        &self.engine
    }

    pub fn params(&self) -> &TlweParams {
        &self.params
    }

    pub fn new_session(&self) -> Session {
        Session {
            id: self.next_session.fetch_add(1, Ordering::Relaxed),
            phase: SessionPhase::AwaitingSheet,
            regions: None,
        }
    }

    fn announce(&self, session: &Session) -> ParamsMessage {
        ParamsMessage {
            session_id: session.id,
            params: self.params,
            format: self.dataset.config.format,
            regions: self.dataset.config.regions,
            m: self.dataset.config.m,
            engine: self.engine.kind(),
            insecure_demo: self.engine.kind() == EngineKind::TlweOracle,
            phase: session.phase,
        }
    }
}

/// Per-client state. Frames are processed strictly in order.
#[derive(Debug)]
pub struct Session {
    id: u64,
    phase: SessionPhase,
    regions: Option<Vec<EncodedRegion>>,
}

impl Session {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn phase(&self) -> SessionPhase {
        self.phase
    }

    /// Handles raw frame bytes. Any failure becomes an ERROR frame and
    /// leaves the session unchanged.
    pub fn handle_bytes(&mut self, ctx: &ServerContext, bytes: &[u8]) -> Frame {
        match Frame::decode(bytes) {
            Ok(frame) => self.handle(ctx, &frame),
            Err(e) => Frame::error(&e),
        }
    }

    pub fn handle(&mut self, ctx: &ServerContext, frame: &Frame) -> Frame {
        match self.dispatch(ctx, frame) {
            Ok(reply) => reply,
            Err(e) => {
                log::debug!("session {}: rejecting {:?}: {e}", self.id, frame.msg_type);
                Frame::error(&e)
            }
        }
    }

    fn dispatch(&mut self, ctx: &ServerContext, frame: &Frame) -> Result<Frame, WireError> {
        match (frame.msg_type, self.phase) {
            (MsgType::Params, _) => {
                if !frame.payload.is_empty() {
                    return Err(WireError::new(ErrorCode::Length, "PARAMS request carries no payload"));
                }
                Ok(Frame::new(MsgType::Params, ctx.announce(self).encode()))
            }
            (MsgType::ZeroSheet, SessionPhase::AwaitingSheet) => {
                let config = &ctx.dataset.config;
                let mut sheet =
                    ZeroSampleSheet::from_bytes(&frame.payload, ctx.params.n, config.regions, config.m)?;
                let services =
                    preprocess_services(&ctx.dataset.service_values(), &mut sheet, config.m, &ctx.engine)?;
                let regions = ctx
                    .bounds
                    .iter()
                    .zip(services)
                    .enumerate()
                    .map(|(id, (b, service))| EncodedRegion {
                        id,
                        x1: b.x1.clone(),
                        x2: b.x2.clone(),
                        y1: b.y1.clone(),
                        y2: b.y2.clone(),
                        service,
                    })
                    .collect();
                self.regions = Some(regions);
                self.phase = SessionPhase::Ready;
                Ok(Frame::new(MsgType::Params, ctx.announce(self).encode()))
            }
            (MsgType::Query, SessionPhase::Ready) => {
                let format = ctx.dataset.config.format;
                let (lat, lon) = decode_query(&frame.payload, ctx.params.n, format.len())?;
                let import = |samples: Vec<_>| -> Result<CipherWord> {
                    let bits = samples
                        .into_iter()
                        .map(|s| ctx.engine.import(s))
                        .collect::<Result<Vec<_>>>()?;
                    CipherWord::new(bits, format)
                };
                let (x, y) = (import(lat)?, import(lon)?);
                let regions = self.regions.as_deref().expect("ready sessions hold regions");
                let out = loc_pir(&x, &y, regions, ctx.dataset.config.m, &ctx.engine, &ctx.pool)?;
                let samples = out
                    .bits()
                    .iter()
                    .map(|b| ctx.engine.export(b, ctx.params.n))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Frame::new(MsgType::Response, encode_response(&samples)))
            }
            (MsgType::ZeroSheet, SessionPhase::Ready) => Err(WireError::new(
                ErrorCode::Phase,
                "session already holds a zero-sample sheet",
            )),
            (MsgType::Query, SessionPhase::AwaitingSheet) => Err(WireError::new(
                ErrorCode::Phase,
                "QUERY before ZEROSHEET",
            )),
            (MsgType::Response | MsgType::Error, _) => Err(WireError::new(
                ErrorCode::Phase,
                format!("{:?} frames are server-to-client only", frame.msg_type),
            )),
        }
    }
}
