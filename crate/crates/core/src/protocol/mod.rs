//! Client/cloud message flow: PARAMS announcement, zero-sample sheet
//! upload, encrypted QUERY and encrypted RESPONSE, all as length-prefixed
//! frames. One query needs a single round trip.

mod client;
mod messages;
mod session;
pub mod wire;

pub use client::{
    client_decrypt_response, client_preprocess, client_query, serve, serve_connection, Client,
    Loopback, TcpTransport, Transport,
};
pub use messages::{
    decode_query, decode_response, encode_query, encode_response, ParamsMessage, SessionPhase,
    PARAMS_LEN,
};
pub use session::{ServerContext, Session};
pub use wire::{ErrorCode, Frame, MsgType, WireError};
