//! Private location-based lookup over TLWE-encrypted GPS coordinates.
//!
//! The client encrypts its position bit by bit; the server compares it
//! against every bounding box with homomorphic comparators, masks each
//! region's encrypted service with the membership flag and XORs the results
//! together. Only the client can decrypt the answer.
//!
//! Gate refresh is provided by an insecure key-holding oracle (see
//! [`engine`]); everything else is the full pipeline.

pub mod circuits;
pub mod codec;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod protocol;
pub mod torus;

pub use circuits::{
    bitwise_and, hom_add_xor, hom_comp_le, hom_comp_s, loc_pir, preprocess_services,
    EncodedRegion, ServiceCiphertext, WorkerPool, ZeroSampleSheet,
};
pub use codec::{decode_fixed, encode_fixed, CipherWord, FixedPointFormat, GeoCoordinate, PlainWord};
pub use dataset::{load_dataset, read_dataset, validate_disjoint, Dataset, DatasetConfig, RegionRecord};
pub use engine::{bootstrap_oracle, CipherBit, EngineKind, GateCounts, GateEngine};
pub use error::{Error, Result};
pub use torus::{NoiseSampler, SecretKey, SecurityLevel, TlweParams, TlweSample, Torus};

/// Environment variable that fixes every seed for reproducible runs.
pub const SEED_ENV: &str = "LOCPIR_SEED";

/// Seed from `LOCPIR_SEED` if set and numeric, otherwise from the OS.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(rand::random)
}
