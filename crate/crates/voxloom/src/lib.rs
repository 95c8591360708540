//! # voxloom
//!
//! A real-time speech-token streaming engine with deterministic mock
//! neural components: non-voicing-region stitching, volume-stabilizing
//! context decoding, prompt-context decoding, penalty sampling, reward
//! analytics with group-relative advantages, audio-markup parsing, corpus
//! filtering, an indexed packed-token store, and a framed TCP streaming
//! service with a latency benchmark.
//!
//! Start with [`server::synthesize_text`] for offline synthesis,
//! [`server::serve`] for the streaming service, or the guide under
//! `book/` for the concepts chapter by chapter.

pub mod bench;
pub mod cli;
pub mod config;
pub mod decoder;
pub mod error;
pub mod filter;
pub mod lm;
pub mod markup;
pub mod protocol;
pub mod rewards;
pub mod server;
pub mod stitcher;
pub mod store;
pub mod timebase;
pub mod wav;

pub use error::{Error, Result};
