//! First-chunk latency benchmark.
//!
//! Each request is timed from the moment it is written until enough audio
//! frames have arrived to cover the target duration — the accumulated-audio
//! reading of "first chunk": the clock stops when the received samples
//! first span `target_seconds`, wherever the emission boundaries fall.
//! Percentiles use the nearest-rank rule.

use std::net::{SocketAddr, TcpStream};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{Frame, FrameType, Request};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Requests to issue (sequentially).
    pub requests: usize,
    /// Audio seconds that define the first chunk.
    pub target_seconds: f64,
    /// Text sent with every request.
    pub text: String,
    /// `key=value` overrides sent with every request.
    pub config_block: String,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            requests: 10,
            target_seconds: 2.0,
            text: "benchmark utterance".to_string(),
            config_block: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencyReport {
    /// Wall time to the first `target_seconds` of audio, one per request,
    /// in issue order.
    pub first_chunk_millis: Vec<f64>,
    pub p50_millis: f64,
    pub p90_millis: f64,
    /// Audio tokens delivered per wall-clock second across whole sessions.
    pub throughput_tokens_per_sec: f64,
}

/// Nearest-rank percentile: the `⌈p/100 · n⌉`-th smallest value.
pub fn nearest_rank(sorted_millis: &[f64], percentile: f64) -> f64 {
    debug_assert!(!sorted_millis.is_empty());
    let rank = ((percentile / 100.0) * sorted_millis.len() as f64).ceil() as usize;
    sorted_millis[rank.clamp(1, sorted_millis.len()) - 1]
}

/// Runs the benchmark against a serving address.
pub fn bench(addr: SocketAddr, cfg: &BenchConfig) -> Result<LatencyReport> {
    if cfg.requests == 0 {
        return Err(Error::invalid_argument("bench needs at least one request"));
    }
    if cfg.target_seconds.is_nan() || cfg.target_seconds <= 0.0 {
        return Err(Error::invalid_argument("target seconds must be positive"));
    }
    let mut first_chunk_millis = Vec::with_capacity(cfg.requests);
    let mut total_tokens = 0.0f64;
    let mut total_session_time = Duration::ZERO;
    for _ in 0..cfg.requests {
        let outcome = one_request(addr, cfg)?;
        first_chunk_millis.push(outcome.first_chunk.as_secs_f64() * 1e3);
        total_tokens += outcome.tokens;
        total_session_time += outcome.session;
    }
    let mut sorted = first_chunk_millis.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(LatencyReport {
        p50_millis: nearest_rank(&sorted, 50.0),
        p90_millis: nearest_rank(&sorted, 90.0),
        throughput_tokens_per_sec: if total_session_time.is_zero() {
            0.0
        } else {
            total_tokens / total_session_time.as_secs_f64()
        },
        first_chunk_millis,
    })
}

struct RequestOutcome {
    first_chunk: Duration,
    session: Duration,
    tokens: f64,
}

fn one_request(addr: SocketAddr, cfg: &BenchConfig) -> Result<RequestOutcome> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_nodelay(true)?;
    let request = Request::new(cfg.text.clone(), cfg.config_block.clone());
    let started = Instant::now();
    request.write_to(&mut stream)?;

    let mut first_chunk: Option<Duration> = None;
    let mut received_samples = 0u64;
    let mut sample_rate = 0u32;
    loop {
        let frame = Frame::read_from(&mut stream)?;
        match frame.frame_type {
            FrameType::Audio => {
                sample_rate = frame.sample_rate;
                received_samples += frame.sample_count as u64;
                if first_chunk.is_none()
                    && received_samples as f64
                        >= cfg.target_seconds * frame.sample_rate as f64
                {
                    first_chunk = Some(started.elapsed());
                }
            }
            FrameType::End => break,
            FrameType::Error => return Err(Error::protocol("session error during bench")),
        }
    }
    let session = started.elapsed();
    // A session shorter than the target counts its completion time.
    let first_chunk = first_chunk.unwrap_or(session);
    let tokens = if sample_rate == 0 {
        0.0
    } else {
        received_samples as f64 / (sample_rate as f64 / crate::timebase::TOKEN_RATE as f64)
    };
    Ok(RequestOutcome {
        first_chunk,
        session,
        tokens,
    })
}
