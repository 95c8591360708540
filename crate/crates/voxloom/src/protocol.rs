//! The framed streaming wire format.
//!
//! Every frame is a fixed 13-byte header plus payload, little-endian
//! throughout:
//!
//! ```text
//! byte  0      frame type: 0 = audio, 1 = end, 2 = error
//! bytes 1..5   chunk index (u32), strictly increasing per session
//! bytes 5..9   sample rate in Hz (u32)
//! bytes 9..13  sample count (u32)
//! payload      sample_count × 2 bytes of PCM16, audio frames only
//! ```
//!
//! A request is two length-prefixed blocks: the UTF-8 text to synthesize
//! and a `key=value` configuration block, each preceded by a u32 byte
//! length.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const FRAME_HEADER_LEN: usize = 13;

/// Upper bound on any length field, against malformed peers.
const MAX_BLOCK_BYTES: u32 = 64 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameType {
    Audio = 0,
    End = 1,
    Error = 2,
}

impl FrameType {
    fn from_byte(b: u8) -> Result<FrameType> {
        match b {
            0 => Ok(FrameType::Audio),
            1 => Ok(FrameType::End),
            2 => Ok(FrameType::Error),
            other => Err(Error::protocol(format!("unknown frame type {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub frame_type: FrameType,
    pub chunk_index: u32,
    pub sample_rate: u32,
    pub sample_count: u32,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn audio(chunk_index: u32, sample_rate: u32, pcm: Vec<u8>) -> Frame {
        debug_assert_eq!(pcm.len() % 2, 0);
        Frame {
            frame_type: FrameType::Audio,
            chunk_index,
            sample_rate,
            sample_count: (pcm.len() / 2) as u32,
            payload: pcm,
        }
    }

    pub fn end(chunk_index: u32, sample_rate: u32) -> Frame {
        Frame {
            frame_type: FrameType::End,
            chunk_index,
            sample_rate,
            sample_count: 0,
            payload: Vec::new(),
        }
    }

    pub fn error(chunk_index: u32, sample_rate: u32) -> Frame {
        Frame {
            frame_type: FrameType::Error,
            chunk_index,
            sample_rate,
            sample_count: 0,
            payload: Vec::new(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + self.payload.len());
        out.push(self.frame_type as u8);
        out.extend_from_slice(&self.chunk_index.to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&self.sample_count.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Frame> {
        let mut header = [0u8; FRAME_HEADER_LEN];
        r.read_exact(&mut header)?;
        let frame_type = FrameType::from_byte(header[0])?;
        let chunk_index = u32::from_le_bytes(header[1..5].try_into().unwrap());
        let sample_rate = u32::from_le_bytes(header[5..9].try_into().unwrap());
        let sample_count = u32::from_le_bytes(header[9..13].try_into().unwrap());
        if sample_count > MAX_BLOCK_BYTES / 2 {
            return Err(Error::protocol(format!("frame of {sample_count} samples")));
        }
        let payload_len = match frame_type {
            FrameType::Audio => sample_count as usize * 2,
            FrameType::End | FrameType::Error => {
                if sample_count != 0 {
                    return Err(Error::protocol("non-audio frame with a sample count"));
                }
                0
            }
        };
        let mut payload = vec![0u8; payload_len];
        r.read_exact(&mut payload)?;
        Ok(Frame {
            frame_type,
            chunk_index,
            sample_rate,
            sample_count,
            payload,
        })
    }
}

/// A synthesis request: the text block plus `key=value` overrides.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Request {
    pub text: String,
    /// Raw configuration block, one `key=value` per line.
    pub config: String,
}

impl Request {
    pub fn new(text: impl Into<String>, config: impl Into<String>) -> Request {
        Request {
            text: text.into(),
            config: config.into(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let text = self.text.as_bytes();
        let config = self.config.as_bytes();
        let mut out = Vec::with_capacity(8 + text.len() + config.len());
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text);
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(config);
        out
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Request> {
        let text = read_block(r)?;
        let config = read_block(r)?;
        Ok(Request {
            text: String::from_utf8(text)
                .map_err(|_| Error::protocol("request text is not UTF-8"))?,
            config: String::from_utf8(config)
                .map_err(|_| Error::protocol("request config is not UTF-8"))?,
        })
    }
}

fn read_block(r: &mut impl Read) -> Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len);
    if len > MAX_BLOCK_BYTES {
        return Err(Error::protocol(format!("request block of {len} bytes")));
    }
    let mut block = vec![0u8; len as usize];
    r.read_exact(&mut block)?;
    Ok(block)
}
