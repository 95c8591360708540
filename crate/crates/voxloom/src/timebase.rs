//! Canonical token/waveform types and the token↔sample arithmetic shared by
//! every other module.
//!
//! The codec timebase is fixed at [`TOKEN_RATE`] tokens per second of audio,
//! with a single codebook of [`CODEBOOK_SIZE`] entries. A decoder
//! configuration ties that timebase to a concrete sample rate through its
//! iSTFT hop length and upsampling strides; the identity
//! `hop_length × Π(strides) = sample_rate / 50` must hold exactly.

use crate::error::{Error, Result};

/// Audio tokens per second of decoded audio.
pub const TOKEN_RATE: u32 = 50;

/// Number of entries in the audio codebook. `u16` covers exactly this range.
pub const CODEBOOK_SIZE: u32 = 65536;

/// Token cap for a single utterance (40 seconds at 50 tokens/second).
pub const MAX_UTTERANCE_TOKENS: usize = 2000;

/// Stability constant added to the RMS magnitude before taking the log.
pub const RMS_EPSILON: f64 = 1e-5;

/// Loudness floor implied by [`RMS_EPSILON`]: `20·log10(1e-5)`.
pub const MIN_LOUDNESS_DB: f64 = -100.0;

/// Default weight of the RMS loudness loss term.
pub const DEFAULT_RMS_LOSS_WEIGHT: f64 = 1.0;

/// A single audio-codebook index.
///
/// The codebook has 65536 entries, so every `u16` is a valid token id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u16);

impl TokenId {
    pub fn value(self) -> u16 {
        self.0
    }
}

impl From<u16> for TokenId {
    fn from(value: u16) -> Self {
        TokenId(value)
    }
}

/// An ordered run of audio tokens on the 50-tokens-per-second timebase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<TokenId>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<TokenId>) -> Self {
        TokenSequence { tokens }
    }

    pub fn from_ids(ids: &[u16]) -> Self {
        TokenSequence {
            tokens: ids.iter().copied().map(TokenId).collect(),
        }
    }

    /// Builds a sequence representing a single utterance, enforcing the
    /// 40-second cap imposed by the audio encoder.
    pub fn utterance(tokens: Vec<TokenId>) -> Result<Self> {
        if tokens.len() > MAX_UTTERANCE_TOKENS {
            return Err(Error::invalid_argument(format!(
                "utterance of {} tokens exceeds the {MAX_UTTERANCE_TOKENS}-token (40 s) cap",
                tokens.len()
            )));
        }
        Ok(TokenSequence { tokens })
    }

    pub fn empty() -> Self {
        TokenSequence { tokens: Vec::new() }
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens-per-second timebase; fixed for the codec family.
    pub fn token_rate(&self) -> u32 {
        TOKEN_RATE
    }

    pub fn duration_seconds(&self) -> f64 {
        self.tokens.len() as f64 / TOKEN_RATE as f64
    }

    pub fn concat(&self, other: &TokenSequence) -> TokenSequence {
        let mut tokens = Vec::with_capacity(self.len() + other.len());
        tokens.extend_from_slice(&self.tokens);
        tokens.extend_from_slice(&other.tokens);
        TokenSequence { tokens }
    }

    pub fn slice(&self, start: usize, end: usize) -> TokenSequence {
        TokenSequence {
            tokens: self.tokens[start..end].to_vec(),
        }
    }

    pub fn push(&mut self, token: TokenId) {
        self.tokens.push(token);
    }

    pub fn extend_from_slice(&mut self, tokens: &[TokenId]) {
        self.tokens.extend_from_slice(tokens);
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(tokens: Vec<TokenId>) -> Self {
        TokenSequence { tokens }
    }
}

/// Decoder timebase configuration: sample rate, iSTFT hop length and the
/// super-resolution stride factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderConfig {
    sample_rate: u32,
    hop_length: u32,
    strides: Vec<u32>,
}

impl DecoderConfig {
    /// Builds a validated configuration. The 50-tokens/sec identity
    /// `hop_length × Π(strides) = sample_rate / 50` must hold exactly.
    pub fn new(sample_rate: u32, hop_length: u32, strides: Vec<u32>) -> Result<Self> {
        if sample_rate == 0 || !sample_rate.is_multiple_of(TOKEN_RATE) {
            return Err(Error::invalid_config(format!(
                "sample rate {sample_rate} is not a multiple of the {TOKEN_RATE}-token/sec timebase"
            )));
        }
        let upsampling: u64 = strides.iter().map(|&s| s as u64).product();
        let samples_per_token = (sample_rate / TOKEN_RATE) as u64;
        if hop_length as u64 * upsampling != samples_per_token {
            return Err(Error::invalid_config(format!(
                "hop {hop_length} × strides {strides:?} = {} does not equal {samples_per_token} samples per token",
                hop_length as u64 * upsampling
            )));
        }
        Ok(DecoderConfig {
            sample_rate,
            hop_length,
            strides,
        })
    }

    /// 16 kHz preset: hop 320, no upsampling.
    pub fn khz16() -> Self {
        DecoderConfig::new(16_000, 320, vec![1]).expect("preset is consistent")
    }

    /// 24 kHz preset: hop 480, no upsampling.
    pub fn khz24() -> Self {
        DecoderConfig::new(24_000, 480, vec![1]).expect("preset is consistent")
    }

    /// 48 kHz preset: hop 160 with 3×2 super-resolution strides.
    pub fn khz48() -> Self {
        DecoderConfig::new(48_000, 160, vec![3, 2]).expect("preset is consistent")
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn hop_length(&self) -> u32 {
        self.hop_length
    }

    pub fn strides(&self) -> &[u32] {
        &self.strides
    }

    /// Output samples rendered per audio token: `sample_rate / 50`.
    pub fn samples_per_token(&self) -> usize {
        (self.sample_rate / TOKEN_RATE) as usize
    }
}

/// Output samples rendered per token under `config`.
pub fn samples_per_token(config: &DecoderConfig) -> usize {
    config.samples_per_token()
}

/// Maps a half-open token span to the corresponding half-open sample span.
pub fn token_span_to_sample_span(
    start_token: usize,
    end_token: usize,
    config: &DecoderConfig,
) -> Result<(usize, usize)> {
    if start_token > end_token {
        return Err(Error::invalid_argument(format!(
            "reversed token span {start_token}..{end_token}"
        )));
    }
    let spt = config.samples_per_token();
    Ok((start_token * spt, end_token * spt))
}

/// A mono sample buffer with amplitudes in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        debug_assert!(sample_rate > 0);
        debug_assert!(samples.iter().all(|s| s.abs() <= 1.0 + f32::EPSILON));
        Waveform {
            samples,
            sample_rate,
        }
    }

    pub fn empty(sample_rate: u32) -> Self {
        Waveform {
            samples: Vec::new(),
            sample_rate,
        }
    }

    /// A buffer of exact zeros covering `seconds` of audio.
    pub fn silence(seconds: f64, sample_rate: u32) -> Self {
        let n = (seconds * sample_rate as f64).round() as usize;
        Waveform {
            samples: vec![0.0; n],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn concat(&self, other: &Waveform) -> Waveform {
        debug_assert_eq!(self.sample_rate, other.sample_rate);
        let mut samples = Vec::with_capacity(self.len() + other.len());
        samples.extend_from_slice(&self.samples);
        samples.extend_from_slice(&other.samples);
        Waveform {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> Waveform {
        Waveform {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// A loudness value in decibels, never below [`MIN_LOUDNESS_DB`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LoudnessDb(pub f64);

impl LoudnessDb {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// RMS loudness in decibels: `20·log10(sqrt(mean(x²)) + ε)` with `ε = 1e-5`.
///
/// The constant is added to the RMS magnitude inside the log, so the result
/// is bounded below by −100 dB for any input.
pub fn rms_db(w: &Waveform) -> Result<LoudnessDb> {
    if w.is_empty() {
        return Err(Error::invalid_argument("rms_db of an empty waveform"));
    }
    let mean_square = w
        .samples()
        .iter()
        .map(|&s| {
            let s = s as f64;
            s * s
        })
        .sum::<f64>()
        / w.len() as f64;
    Ok(LoudnessDb(20.0 * (mean_square.sqrt() + RMS_EPSILON).log10()))
}

/// Squared loudness discrepancy between a reference and a generated
/// waveform, in dB². Scale by [`DEFAULT_RMS_LOSS_WEIGHT`] (or a tuned
/// weight) when combining with other loss terms.
pub fn rms_loss(reference: &Waveform, generated: &Waveform) -> Result<f64> {
    let a = rms_db(reference)?.value();
    let b = rms_db(generated)?.value();
    Ok((a - b) * (a - b))
}

/// Worst-case loudness jump between adjacent chunks, in dB.
///
/// This is the quantity volume stabilization is meant to keep small: a large
/// value means a listener would hear the volume lurch at a chunk boundary.
pub fn chunk_volume_drift(chunks: &[Waveform]) -> Result<f64> {
    if chunks.len() < 2 {
        return Err(Error::invalid_argument(
            "chunk_volume_drift needs at least two chunks",
        ));
    }
    let rate = chunks[0].sample_rate();
    if chunks.iter().any(|c| c.sample_rate() != rate) {
        return Err(Error::invalid_argument(
            "chunk_volume_drift requires equal sample rates",
        ));
    }
    let levels = chunks
        .iter()
        .map(|c| rms_db(c).map(LoudnessDb::value))
        .collect::<Result<Vec<_>>>()?;
    Ok(levels
        .windows(2)
        .map(|pair| (pair[0] - pair[1]).abs())
        .fold(0.0, f64::max))
}
