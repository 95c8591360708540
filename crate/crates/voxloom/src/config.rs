//! Session configuration: defaults, the `key=value` config format used by
//! config files and request overrides, and the merge order
//! defaults → config file → request block.
//!
//! Recognized keys:
//!
//! ```text
//! seed                     u64     generation seed (default 0)
//! sample_rate              u32     16000 | 24000 | 48000 (default 48000)
//! chunk_tokens             usize   stitcher decode-attempt size
//! radius_samples           usize   non-voicing window radius Δt
//! epsilon                  f32     non-voicing magnitude threshold
//! context_tokens           usize   stabilizing context ΔT in tokens
//! include_prompt_context   bool    feed prompt tokens before first emission
//! max_deferrals            usize   forced-emission bound K
//! decoder_context_window   usize   mock decoder sensitivity window C
//! temperature              f64     sampling temperature (0 = argmax)
//! top_k                    usize   sampling top-k
//! top_p                    f64     nucleus threshold
//! repetition_penalty       f64     ≥ 1
//! pace_us_per_token        u64     simulated generation delay per token
//! batch_tokens             usize   tokens per scheduling step
//! target_first_chunk_seconds f64   bench first-chunk definition (default 2)
//! prompt_text              string  prompt rendered to tokens for context
//! pattern_voiced_run       usize   \
//! pattern_silent_run       usize    > explicit pattern generation; active
//! pattern_total_tokens     usize   /  when pattern_total_tokens is set
//! ```

use std::time::Duration;

use crate::decoder::MockDecoderParams;
use crate::error::{Error, Result};
use crate::lm::{PatternSpec, SamplerConfig};
use crate::stitcher::StitcherConfig;
use crate::timebase::DecoderConfig;

/// Environment variable naming a default config file.
pub const CONFIG_PATH_ENV: &str = "VOXLOOM_CONFIG";

/// How a session obtains its token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generation {
    /// Tokens derived from the request text.
    Text,
    /// An explicit voiced/silent run layout.
    Pattern(PatternSpec),
}

/// Everything one streaming session needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub stitcher: StitcherConfig,
    pub sampler: SamplerConfig,
    pub sample_rate: u32,
    pub mock_decoder: MockDecoderParams,
    pub seed: u64,
    pub pace_per_token: Duration,
    pub batch_tokens: usize,
    pub target_first_chunk_seconds: f64,
    pub prompt_text: Option<String>,
    pub generation: Generation,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            stitcher: StitcherConfig::default(),
            sampler: SamplerConfig::default(),
            sample_rate: 48_000,
            mock_decoder: MockDecoderParams::default(),
            seed: 0,
            pace_per_token: Duration::ZERO,
            batch_tokens: 10,
            target_first_chunk_seconds: 2.0,
            prompt_text: None,
            generation: Generation::Text,
        }
    }
}

impl SessionConfig {
    /// The decoder preset for the configured sample rate.
    pub fn decoder_config(&self) -> Result<DecoderConfig> {
        match self.sample_rate {
            16_000 => Ok(DecoderConfig::khz16()),
            24_000 => Ok(DecoderConfig::khz24()),
            48_000 => Ok(DecoderConfig::khz48()),
            other => Err(Error::invalid_config(format!(
                "sample_rate {other} has no decoder preset"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stitcher.validate()?;
        self.sampler.validate()?;
        self.decoder_config()?;
        if self.batch_tokens == 0 {
            return Err(Error::invalid_config("batch_tokens must be at least 1"));
        }
        if self.target_first_chunk_seconds.is_nan() || self.target_first_chunk_seconds <= 0.0 {
            return Err(Error::invalid_config(
                "target_first_chunk_seconds must be positive",
            ));
        }
        if self.mock_decoder.context_window_tokens == 0 {
            return Err(Error::invalid_config(
                "decoder_context_window must be at least 1",
            ));
        }
        Ok(())
    }

    /// Applies one `key=value` block on top of this configuration.
    /// Unknown keys are rejected so typos surface instead of silently
    /// using defaults.
    pub fn apply_block(&mut self, block: &str) -> Result<()> {
        let mut pattern_voiced: Option<usize> = None;
        let mut pattern_silent: Option<usize> = None;
        let mut pattern_total: Option<usize> = None;
        for (lineno, raw) in block.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid_config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_err =
                |what: &str| Error::invalid_config(format!("{key}: expected {what}, got `{value}`"));
            match key {
                "seed" => self.seed = value.parse().map_err(|_| parse_err("u64"))?,
                "sample_rate" => {
                    self.sample_rate = value.parse().map_err(|_| parse_err("u32"))?
                }
                "chunk_tokens" => {
                    self.stitcher.chunk_tokens = value.parse().map_err(|_| parse_err("usize"))?
                }
                "radius_samples" => {
                    self.stitcher.radius_samples = value.parse().map_err(|_| parse_err("usize"))?
                }
                "epsilon" => {
                    self.stitcher.epsilon = value.parse().map_err(|_| parse_err("f32"))?
                }
                "context_tokens" => {
                    self.stitcher.context_tokens = value.parse().map_err(|_| parse_err("usize"))?
                }
                "include_prompt_context" => {
                    self.stitcher.include_prompt_context =
                        value.parse().map_err(|_| parse_err("bool"))?
                }
                "max_deferrals" => {
                    self.stitcher.max_deferrals = value.parse().map_err(|_| parse_err("usize"))?
                }
                "decoder_context_window" => {
                    self.mock_decoder.context_window_tokens =
                        value.parse().map_err(|_| parse_err("usize"))?
                }
                "temperature" => {
                    self.sampler.temperature = value.parse().map_err(|_| parse_err("f64"))?
                }
                "top_k" => self.sampler.top_k = value.parse().map_err(|_| parse_err("usize"))?,
                "top_p" => self.sampler.top_p = value.parse().map_err(|_| parse_err("f64"))?,
                "repetition_penalty" => {
                    self.sampler.repetition_penalty =
                        value.parse().map_err(|_| parse_err("f64"))?
                }
                "pace_us_per_token" => {
                    self.pace_per_token =
                        Duration::from_micros(value.parse().map_err(|_| parse_err("u64"))?)
                }
                "batch_tokens" => {
                    self.batch_tokens = value.parse().map_err(|_| parse_err("usize"))?
                }
                "target_first_chunk_seconds" => {
                    self.target_first_chunk_seconds =
                        value.parse().map_err(|_| parse_err("f64"))?
                }
                "prompt_text" => self.prompt_text = Some(value.to_string()),
                "pattern_voiced_run" => {
                    pattern_voiced = Some(value.parse().map_err(|_| parse_err("usize"))?)
                }
                "pattern_silent_run" => {
                    pattern_silent = Some(value.parse().map_err(|_| parse_err("usize"))?)
                }
                "pattern_total_tokens" => {
                    pattern_total = Some(value.parse().map_err(|_| parse_err("usize"))?)
                }
                other => {
                    return Err(Error::invalid_config(format!("unknown config key `{other}`")))
                }
            }
        }
        if let Some(total_tokens) = pattern_total {
            self.generation = Generation::Pattern(PatternSpec {
                voiced_run: pattern_voiced.unwrap_or(94),
                silent_run: pattern_silent.unwrap_or(8),
                total_tokens,
            });
        } else if pattern_voiced.is_some() || pattern_silent.is_some() {
            return Err(Error::invalid_config(
                "pattern_voiced_run/pattern_silent_run require pattern_total_tokens",
            ));
        }
        Ok(())
    }

    /// Loads a config file and applies it on top of this configuration.
    pub fn apply_file(&mut self, path: &std::path::Path) -> Result<()> {
        let block = std::fs::read_to_string(path)?;
        self.apply_block(&block)
    }
}
