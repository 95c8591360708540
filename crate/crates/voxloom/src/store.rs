//! Indexed packed-token store: the on-disk format for pre-tokenized audio.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset 0    magic "STK1"
//! offset 4    version byte (1)
//! offset 5    record payloads, back to back: token ids as u16
//! index       u32 record count, then per record:
//!               u16 id length, id bytes (UTF-8),
//!               u64 payload offset (absolute), u32 token count,
//!               u8 sample-rate code, u32 CRC-32 (IEEE) of the payload
//! footer      u64 index offset — the last eight bytes of the file
//! ```
//!
//! The trailing index with a fixed-size footer keeps packing single-pass,
//! and the per-record CRC catches corruption when tokenized audio is reused
//! across many training runs. Packing is byte-deterministic given input
//! order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::timebase::{TokenId, TokenSequence, TOKEN_RATE};

pub const STORE_MAGIC: [u8; 4] = *b"STK1";
pub const STORE_VERSION: u8 = 1;

const HEADER_LEN: usize = 5;
const FOOTER_LEN: usize = 8;

fn rate_code(sample_rate: u32) -> Result<u8> {
    match sample_rate {
        16_000 => Ok(0),
        24_000 => Ok(1),
        48_000 => Ok(2),
        other => Err(Error::invalid_argument(format!(
            "unsupported sample rate {other}; the store encodes 16/24/48 kHz"
        ))),
    }
}

fn code_rate(code: u8) -> Result<u32> {
    match code {
        0 => Ok(16_000),
        1 => Ok(24_000),
        2 => Ok(48_000),
        other => Err(Error::StoreFormat(format!("unknown sample-rate code {other}"))),
    }
}

/// Serializes utterances into store bytes. Ids must be unique; the byte
/// layout is fully determined by the input order.
pub fn pack(utterances: &[(String, TokenSequence, u32)]) -> Result<Vec<u8>> {
    let mut seen = std::collections::HashSet::new();
    for (id, _, _) in utterances {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateRecordId(id.clone()));
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::invalid_argument(format!(
                "record id of {} bytes exceeds the u16 length field",
                id.len()
            )));
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(&STORE_MAGIC);
    out.push(STORE_VERSION);

    struct Entry {
        offset: u64,
        token_count: u32,
        rate_code: u8,
        crc: u32,
    }
    let mut entries = Vec::with_capacity(utterances.len());
    for (_, tokens, sample_rate) in utterances {
        let offset = out.len() as u64;
        let start = out.len();
        for token in tokens.tokens() {
            out.extend_from_slice(&token.value().to_le_bytes());
        }
        entries.push(Entry {
            offset,
            token_count: u32::try_from(tokens.len())
                .map_err(|_| Error::invalid_argument("record exceeds u32 token count"))?,
            rate_code: rate_code(*sample_rate)?,
            crc: crc32fast::hash(&out[start..]),
        });
    }

    let index_offset = out.len() as u64;
    out.extend_from_slice(&(utterances.len() as u32).to_le_bytes());
    for ((id, _, _), entry) in utterances.iter().zip(&entries) {
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.extend_from_slice(&entry.offset.to_le_bytes());
        out.extend_from_slice(&entry.token_count.to_le_bytes());
        out.push(entry.rate_code);
        out.extend_from_slice(&entry.crc.to_le_bytes());
    }
    out.extend_from_slice(&index_offset.to_le_bytes());
    Ok(out)
}

#[derive(Debug, Clone)]
struct IndexEntry {
    id: String,
    offset: u64,
    token_count: u32,
    sample_rate: u32,
    crc: u32,
}

/// A parsed store. Reading never mutates, so one store can serve any
/// number of concurrent readers.
#[derive(Debug, Clone)]
pub struct TokenStore {
    bytes: Vec<u8>,
    index: Vec<IndexEntry>,
}

impl TokenStore {
    /// Parses and structurally validates store bytes: magic, version, and
    /// that every index entry resolves inside the file.
    pub fn open(bytes: Vec<u8>) -> Result<TokenStore> {
        if bytes.len() < HEADER_LEN + 4 + FOOTER_LEN {
            return Err(Error::StoreFormat("file shorter than an empty store".into()));
        }
        if bytes[..4] != STORE_MAGIC {
            return Err(Error::StoreFormat("bad magic".into()));
        }
        if bytes[4] != STORE_VERSION {
            return Err(Error::StoreFormat(format!("unsupported version {}", bytes[4])));
        }
        let footer_at = bytes.len() - FOOTER_LEN;
        let index_offset = u64::from_le_bytes(bytes[footer_at..].try_into().unwrap()) as usize;
        if index_offset < HEADER_LEN || index_offset + 4 > footer_at {
            return Err(Error::StoreFormat("index offset outside the file".into()));
        }

        let mut cursor = index_offset;
        let read_u16 = |at: usize| u16::from_le_bytes(bytes[at..at + 2].try_into().unwrap());
        let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());

        let count = read_u32(cursor) as usize;
        cursor += 4;
        let mut index = Vec::with_capacity(count);
        for _ in 0..count {
            if cursor + 2 > footer_at {
                return Err(Error::StoreFormat("truncated index entry".into()));
            }
            let id_len = read_u16(cursor) as usize;
            cursor += 2;
            if cursor + id_len + 8 + 4 + 1 + 4 > footer_at + 1 {
                return Err(Error::StoreFormat("truncated index entry".into()));
            }
            let id = std::str::from_utf8(&bytes[cursor..cursor + id_len])
                .map_err(|_| Error::StoreFormat("record id is not UTF-8".into()))?
                .to_string();
            cursor += id_len;
            let offset = read_u64(cursor);
            cursor += 8;
            let token_count = read_u32(cursor);
            cursor += 4;
            let sample_rate = code_rate(bytes[cursor])?;
            cursor += 1;
            let crc = read_u32(cursor);
            cursor += 4;

            let payload_end = offset + 2 * token_count as u64;
            if offset < HEADER_LEN as u64 || payload_end > index_offset as u64 {
                return Err(Error::StoreFormat(format!(
                    "record `{id}` payload escapes the payload region"
                )));
            }
            index.push(IndexEntry {
                id,
                offset,
                token_count,
                sample_rate,
                crc,
            });
        }
        if cursor != footer_at {
            return Err(Error::StoreFormat("trailing bytes after the index".into()));
        }
        Ok(TokenStore { bytes, index })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.index.iter().map(|e| e.id.as_str())
    }

    pub fn size_bytes(&self) -> u64 {
        self.bytes.len() as u64
    }

    /// Extracts one record, verifying its checksum.
    pub fn unpack(&self, id: &str) -> Result<(TokenSequence, u32)> {
        let entry = self
            .index
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::UnknownRecordId(id.to_string()))?;
        let start = entry.offset as usize;
        let end = start + 2 * entry.token_count as usize;
        let payload = &self.bytes[start..end];
        if crc32fast::hash(payload) != entry.crc {
            return Err(Error::StoreCorrupt { id: id.to_string() });
        }
        let tokens: Vec<TokenId> = payload
            .chunks_exact(2)
            .map(|pair| TokenId(u16::from_le_bytes([pair[0], pair[1]])))
            .collect();
        Ok((TokenSequence::new(tokens), entry.sample_rate))
    }

    /// Compression accounting against a raw-PCM baseline at the given
    /// sample rate and bit depth.
    pub fn stats(&self, baseline_rate: u32, baseline_bit_depth: u32) -> CompressionReport {
        let token_payload_bytes: u64 = self.index.iter().map(|e| 2 * e.token_count as u64).sum();
        let total_bytes = self.bytes.len() as u64;
        let duration_seconds = self
            .index
            .iter()
            .map(|e| e.token_count as f64 / TOKEN_RATE as f64)
            .sum::<f64>();
        let raw_pcm_bytes =
            (duration_seconds * baseline_rate as f64 * (baseline_bit_depth as f64 / 8.0)) as u64;
        let ratio = |denominator: u64| {
            if denominator == 0 {
                0.0
            } else {
                raw_pcm_bytes as f64 / denominator as f64
            }
        };
        CompressionReport {
            records: self.index.len(),
            token_payload_bytes,
            index_overhead_bytes: total_bytes - token_payload_bytes,
            total_bytes,
            duration_seconds,
            raw_pcm_bytes,
            payload_ratio: ratio(token_payload_bytes),
            total_ratio: ratio(total_bytes),
        }
    }
}

/// Size accounting for one store against its raw-PCM equivalent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionReport {
    pub records: usize,
    pub token_payload_bytes: u64,
    /// Header, index and footer bytes — everything that is not payload.
    pub index_overhead_bytes: u64,
    pub total_bytes: u64,
    pub duration_seconds: f64,
    pub raw_pcm_bytes: u64,
    /// Raw PCM size over payload size alone.
    pub payload_ratio: f64,
    /// Raw PCM size over the whole store, overhead included.
    pub total_ratio: f64,
}
