//! The streaming service: a TCP server that runs generator → stitcher →
//! emitter sessions over the framed protocol, plus the same pipeline as an
//! offline function so streamed bytes can be checked against a one-process
//! run bit for bit.
//!
//! Session plumbing: a generator thread produces paced token batches into a
//! bounded channel; the session thread stitches and writes frames straight
//! to the socket. A slow reader therefore blocks the writer, the channel
//! fills, and generation pauses — per-session memory stays bounded with no
//! explicit accounting. Sessions never share mutable state, so one
//! session's failure cannot disturb another.

use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::Duration;

use crate::config::{Generation, SessionConfig};
use crate::decoder::MockDecoder;
use crate::error::{Error, Result};
use crate::lm::{text_to_tokens, MockGenerator};
use crate::protocol::{Frame, Request};
use crate::stitcher::{flush, process_chunk, StitcherConfig, StreamState};
use crate::timebase::{DecoderConfig, TokenId, TokenSequence, Waveform};
use crate::wav::pcm16_bytes;

/// In-flight generator batches buffered per session.
const GENERATOR_QUEUE_BATCHES: usize = 8;

/// Resolves a session's token stream from its request text and generation
/// mode.
pub fn session_tokens(request_text: &str, cfg: &SessionConfig) -> TokenSequence {
    match &cfg.generation {
        Generation::Text => text_to_tokens(request_text, cfg.seed),
        Generation::Pattern(spec) => spec.tokens(cfg.seed),
    }
}

/// The stitching half of a session: accumulates generated batches into
/// decode-attempt chunks and forwards every non-empty emission.
pub struct StitchPipeline {
    state: StreamState,
    stitcher: StitcherConfig,
    decoder: MockDecoder,
    dconfig: DecoderConfig,
    buffer: Vec<TokenId>,
}

impl StitchPipeline {
    pub fn new(cfg: &SessionConfig) -> Result<Self> {
        cfg.validate()?;
        let dconfig = cfg.decoder_config()?;
        let decoder = MockDecoder::new(cfg.mock_decoder.clone())?;
        let state = match (&cfg.prompt_text, cfg.stitcher.include_prompt_context) {
            (Some(text), true) => StreamState::with_prompt(text_to_tokens(text, cfg.seed)),
            _ => StreamState::new(),
        };
        Ok(StitchPipeline {
            state,
            stitcher: cfg.stitcher.clone(),
            decoder,
            dconfig,
            buffer: Vec::new(),
        })
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    pub fn sample_rate(&self) -> u32 {
        self.dconfig.sample_rate()
    }

    /// Feeds one generated batch; runs a stitch step once a full decode
    /// attempt has accumulated.
    pub fn push_batch(
        &mut self,
        batch: &[TokenId],
        emit: &mut impl FnMut(Waveform) -> Result<()>,
    ) -> Result<()> {
        self.buffer.extend_from_slice(batch);
        if self.buffer.len() >= self.stitcher.chunk_tokens {
            let new_tokens = TokenSequence::new(std::mem::take(&mut self.buffer));
            let emitted = process_chunk(
                &mut self.state,
                &new_tokens,
                &self.stitcher,
                &self.decoder,
                &self.dconfig,
            )?;
            if !emitted.is_empty() {
                emit(emitted)?;
            }
        }
        Ok(())
    }

    /// Stitches any remaining partial chunk and flushes retained tokens.
    pub fn finish(&mut self, emit: &mut impl FnMut(Waveform) -> Result<()>) -> Result<()> {
        if !self.buffer.is_empty() {
            let new_tokens = TokenSequence::new(std::mem::take(&mut self.buffer));
            let emitted = process_chunk(
                &mut self.state,
                &new_tokens,
                &self.stitcher,
                &self.decoder,
                &self.dconfig,
            )?;
            if !emitted.is_empty() {
                emit(emitted)?;
            }
        }
        let tail = flush(&mut self.state, &self.stitcher, &self.decoder, &self.dconfig)?;
        if !tail.is_empty() {
            emit(tail)?;
        }
        Ok(())
    }
}

/// Runs the full pipeline offline over an explicit token stream, with the
/// same batch boundaries a server session would use, and returns the
/// concatenated emissions.
pub fn synthesize_tokens(tokens: &TokenSequence, cfg: &SessionConfig) -> Result<Waveform> {
    let mut pipeline = StitchPipeline::new(cfg)?;
    let rate = pipeline.sample_rate();
    let mut emissions: Vec<Waveform> = Vec::new();
    {
        let mut emit = |w: Waveform| -> Result<()> {
            emissions.push(w);
            Ok(())
        };
        for batch in tokens.tokens().chunks(cfg.batch_tokens) {
            pipeline.push_batch(batch, &mut emit)?;
        }
        pipeline.finish(&mut emit)?;
    }
    let mut out = Waveform::empty(rate);
    for w in &emissions {
        out = out.concat(w);
    }
    Ok(out)
}

/// Offline text synthesis through the identical pipeline.
pub fn synthesize_text(text: &str, cfg: &SessionConfig) -> Result<Waveform> {
    synthesize_tokens(&session_tokens(text, cfg), cfg)
}

/// A running service; dropping the handle stops the accept loop.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    accept_thread: Option<thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds and serves. Each accepted connection runs one session on its own
/// thread with `defaults` as the base configuration, overridden by the
/// request's config block.
pub fn serve(bind: &str, defaults: SessionConfig) -> Result<ServerHandle> {
    defaults.validate()?;
    let listener = TcpListener::bind(bind)?;
    let addr = listener.local_addr()?;
    listener.set_nonblocking(true)?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let shutdown_flag = shutdown.clone();
    let accept_thread = thread::spawn(move || loop {
        if shutdown_flag.load(Ordering::SeqCst) {
            break;
        }
        match listener.accept() {
            Ok((stream, _)) => {
                let session_defaults = defaults.clone();
                thread::spawn(move || handle_session(stream, session_defaults));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(2));
            }
            Err(_) => break,
        }
    });
    Ok(ServerHandle {
        addr,
        shutdown,
        accept_thread: Some(accept_thread),
    })
}

fn handle_session(mut stream: TcpStream, defaults: SessionConfig) {
    let fallback_rate = defaults.sample_rate;
    let _ = stream.set_nodelay(true);
    if let Err(_err) = run_session(&mut stream, defaults) {
        // Best effort: the peer may already be gone.
        let _ = Frame::error(0, fallback_rate).write_to(&mut stream);
    }
}

fn run_session(stream: &mut TcpStream, defaults: SessionConfig) -> Result<()> {
    let request = Request::read_from(stream)?;
    let mut cfg = defaults;
    cfg.apply_block(&request.config)?;
    cfg.validate()?;
    let rate = cfg.decoder_config()?.sample_rate();

    let tokens = session_tokens(&request.text, &cfg);
    if tokens.is_empty() {
        Frame::end(0, rate).write_to(stream)?;
        return Ok(());
    }

    let (tx, rx) = mpsc::sync_channel::<Vec<TokenId>>(GENERATOR_QUEUE_BATCHES);
    let mut generator = MockGenerator::new(tokens, cfg.batch_tokens, cfg.pace_per_token);
    let generator_thread = thread::spawn(move || {
        while let Some(batch) = generator.next_step() {
            if tx.send(batch).is_err() {
                break; // session ended first
            }
        }
    });

    let mut pipeline = StitchPipeline::new(&cfg)?;
    let mut chunk_index: u32 = 0;
    let result = (|| -> Result<()> {
        let mut emit = |w: Waveform| -> Result<()> {
            Frame::audio(chunk_index, rate, pcm16_bytes(&w)).write_to(stream)?;
            chunk_index += 1;
            Ok(())
        };
        for batch in &rx {
            pipeline.push_batch(&batch, &mut emit)?;
        }
        pipeline.finish(&mut emit)?;
        Ok(())
    })();
    drop(rx);
    let _ = generator_thread.join();
    result?;
    Frame::end(chunk_index, rate).write_to(stream)?;
    Ok(())
}

/// Reads one whole session's frames from a client connection, checking
/// frame ordering.
pub fn read_session(stream: &mut TcpStream) -> Result<SessionAudio> {
    let mut pcm = Vec::new();
    let mut next_index = 0u32;
    let mut sample_rate = 0;
    loop {
        let frame = Frame::read_from(stream)?;
        if frame.chunk_index != next_index {
            return Err(Error::protocol(format!(
                "chunk index {} where {next_index} was expected",
                frame.chunk_index
            )));
        }
        match frame.frame_type {
            crate::protocol::FrameType::Audio => {
                sample_rate = frame.sample_rate;
                pcm.extend_from_slice(&frame.payload);
                next_index += 1;
            }
            crate::protocol::FrameType::End => {
                return Ok(SessionAudio {
                    pcm,
                    sample_rate: if sample_rate == 0 {
                        frame.sample_rate
                    } else {
                        sample_rate
                    },
                    audio_frames: next_index,
                })
            }
            crate::protocol::FrameType::Error => {
                return Err(Error::protocol("server reported a session error"))
            }
        }
    }
}

/// Concatenated PCM of one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionAudio {
    pub pcm: Vec<u8>,
    pub sample_rate: u32,
    pub audio_frames: u32,
}
