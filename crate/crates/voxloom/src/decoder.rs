//! Deterministic stand-in for the neural audio decoder.
//!
//! The mock renders each token as one sine burst, but makes the burst's
//! amplitude depend on a finite window of *preceding* tokens. That context
//! sensitivity is the point: decoding a chunk without its history audibly
//! changes its loudness, which is exactly the failure mode that
//! volume-stabilized streaming is supposed to remove. Because the window is
//! finite and the arithmetic order is fixed, the mock doubles as a bit-exact
//! oracle for the stitcher.
//!
//! Mapping, for a token with id `t` at position `i` of the decoded run:
//!
//! * frequency: `base_frequency + (t mod 64) · frequency_step`
//! * raw level: `a(t) = (t mod 256) / 255`
//! * rendered amplitude: mean of `a` over tokens `max(0, i−C+1) ..= i`
//! * phase restarts at every token boundary, so a token with `a(t) = 0`
//!   renders exact digital silence.

use crate::error::{Error, Result};
use crate::timebase::{DecoderConfig, TokenId, TokenSequence, Waveform};

/// Number of distinct sine frequencies the mock can render.
pub const FREQUENCY_CLASSES: u16 = 64;

/// Number of distinct raw amplitude levels.
pub const AMPLITUDE_CLASSES: u16 = 256;

/// Tokens of history that influence a rendered token's amplitude.
pub const DEFAULT_CONTEXT_WINDOW: usize = 4;

/// Raw amplitude level of a token id: `(id mod 256) / 255`, in [0, 1].
pub fn amplitude_class(id: TokenId) -> f64 {
    (id.value() % AMPLITUDE_CLASSES) as f64 / (AMPLITUDE_CLASSES - 1) as f64
}

/// A decoder that turns audio tokens into a waveform, optionally seeded
/// with preceding context tokens whose samples are not part of the output.
///
/// Real neural decoders fit behind this same contract; the crate ships only
/// the deterministic mock.
pub trait AudioDecoder {
    /// Decodes `context ‖ body` and returns only the samples of `body`.
    fn decode_with_context(
        &self,
        context: &TokenSequence,
        body: &TokenSequence,
        config: &DecoderConfig,
    ) -> Result<Waveform>;

    /// Decodes a sequence with no preceding context.
    fn decode(&self, tokens: &TokenSequence, config: &DecoderConfig) -> Result<Waveform> {
        self.decode_with_context(&TokenSequence::empty(), tokens, config)
    }
}

/// Parameters of the mock decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct MockDecoderParams {
    /// Moving-average window length C, in tokens. Must be ≥ 1.
    pub context_window_tokens: usize,
    /// Frequency rendered for ids with `id mod 64 == 0`, in Hz.
    pub base_frequency: f64,
    /// Frequency increment per frequency class, in Hz.
    pub frequency_step: f64,
}

impl Default for MockDecoderParams {
    fn default() -> Self {
        MockDecoderParams {
            context_window_tokens: DEFAULT_CONTEXT_WINDOW,
            base_frequency: 220.0,
            frequency_step: 7.0,
        }
    }
}

/// Deterministic context-sensitive decoder; see the module docs for the
/// exact token-to-waveform mapping.
#[derive(Debug, Clone)]
pub struct MockDecoder {
    params: MockDecoderParams,
}

impl MockDecoder {
    pub fn new(params: MockDecoderParams) -> Result<Self> {
        if params.context_window_tokens == 0 {
            return Err(Error::invalid_config(
                "mock decoder context window must be at least one token",
            ));
        }
        Ok(MockDecoder { params })
    }

    pub fn with_context_window(context_window_tokens: usize) -> Result<Self> {
        MockDecoder::new(MockDecoderParams {
            context_window_tokens,
            ..MockDecoderParams::default()
        })
    }

    pub fn params(&self) -> &MockDecoderParams {
        &self.params
    }

    /// Sine frequency rendered for a token id, in Hz.
    pub fn frequency(&self, id: TokenId) -> f64 {
        self.params.base_frequency
            + (id.value() % FREQUENCY_CLASSES) as f64 * self.params.frequency_step
    }

    /// Rendered amplitude of the token at `position` within `tokens`:
    /// the mean raw level over the trailing context window. The summation
    /// order is fixed (ascending positions) so results are bit-stable.
    pub fn effective_amplitude(&self, tokens: &[TokenId], position: usize) -> f64 {
        let c = self.params.context_window_tokens;
        let start = position.saturating_sub(c - 1);
        let window = &tokens[start..=position];
        let sum: f64 = window.iter().map(|&t| amplitude_class(t)).sum();
        sum / window.len() as f64
    }

    fn render(&self, tokens: &[TokenId], config: &DecoderConfig) -> Waveform {
        let spt = config.samples_per_token();
        let rate = config.sample_rate() as f64;
        // One sine table per frequency class actually present, built on
        // demand; the per-sample work is then a single multiply.
        let mut tables: Vec<Option<Vec<f32>>> = vec![None; FREQUENCY_CLASSES as usize];
        let mut samples = Vec::with_capacity(tokens.len() * spt);
        for (i, &token) in tokens.iter().enumerate() {
            let amp = self.effective_amplitude(tokens, i) as f32;
            let class = (token.value() % FREQUENCY_CLASSES) as usize;
            let table = tables[class].get_or_insert_with(|| {
                let freq = self.frequency(token);
                let step = std::f64::consts::TAU * freq / rate;
                (0..spt).map(|k| (step * k as f64).sin() as f32).collect()
            });
            samples.extend(table.iter().map(|&s| amp * s));
        }
        Waveform::new(samples, config.sample_rate())
    }
}

impl AudioDecoder for MockDecoder {
    fn decode_with_context(
        &self,
        context: &TokenSequence,
        body: &TokenSequence,
        config: &DecoderConfig,
    ) -> Result<Waveform> {
        if body.is_empty() {
            return Err(Error::invalid_argument("decode of an empty token sequence"));
        }
        if context.is_empty() {
            return Ok(self.render(body.tokens(), config));
        }
        let full = self.render(context.concat(body).tokens(), config);
        let skip = context.len() * config.samples_per_token();
        Ok(full.slice(skip, full.len()))
    }
}
