//! Corpus filtering: the DNSMOS quality tail, per-language speaking-rate
//! tails, and transcript heuristics, applied in that order.
//!
//! Removal counts use the nearest-rank rule `⌊fraction · N⌋` with ties
//! broken by id, so every stage is exactly reproducible.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of lowest-DNSMOS samples discarded by default.
pub const DEFAULT_DNSMOS_FRACTION: f64 = 0.20;

/// Fraction trimmed from each end of the per-language CPS distribution.
pub const DEFAULT_CPS_TAIL: f64 = 0.05;

/// Metadata for one corpus sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub id: String,
    /// Perceptual quality score in [1, 5].
    pub dnsmos: f64,
    /// Audio duration in seconds; must be positive.
    pub duration: f64,
    pub text: String,
    pub language: String,
}

impl SampleMeta {
    /// Characters per second of the transcript.
    pub fn cps(&self) -> f64 {
        self.text.chars().count() as f64 / self.duration
    }
}

/// Drops the `⌊fraction·N⌋` lowest-DNSMOS samples; survivors keep their
/// input order.
pub fn filter_dnsmos(samples: &[SampleMeta], fraction: f64) -> Result<Vec<SampleMeta>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid_argument("fraction must lie in [0, 1)"));
    }
    let remove = (fraction * samples.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[a]
            .dnsmos
            .partial_cmp(&samples[b].dnsmos)
            .unwrap()
            .then_with(|| samples[a].id.cmp(&samples[b].id))
    });
    let victims: HashSet<usize> = order[..remove].iter().copied().collect();
    Ok(samples
        .iter()
        .enumerate()
        .filter(|(i, _)| !victims.contains(i))
        .map(|(_, s)| s.clone())
        .collect())
}

/// Trims the speaking-rate tails within each language group independently:
/// the `⌊low·N_lang⌋` slowest and `⌊high·N_lang⌋` fastest samples by CPS.
pub fn filter_cps(samples: &[SampleMeta], low: f64, high: f64) -> Result<Vec<SampleMeta>> {
    if low < 0.0 || high < 0.0 || low + high >= 1.0 {
        return Err(Error::invalid_argument(
            "tail fractions must be non-negative and sum below 1",
        ));
    }
    let mut victims: HashSet<usize> = HashSet::new();
    let mut languages: Vec<&str> = samples.iter().map(|s| s.language.as_str()).collect();
    languages.sort_unstable();
    languages.dedup();
    for language in languages {
        let mut group: Vec<usize> = (0..samples.len())
            .filter(|&i| samples[i].language == language)
            .collect();
        group.sort_by(|&a, &b| {
            samples[a]
                .cps()
                .partial_cmp(&samples[b].cps())
                .unwrap()
                .then_with(|| samples[a].id.cmp(&samples[b].id))
        });
        let slow = (low * group.len() as f64).floor() as usize;
        let fast = (high * group.len() as f64).floor() as usize;
        victims.extend(&group[..slow]);
        victims.extend(&group[group.len() - fast..]);
    }
    Ok(samples
        .iter()
        .enumerate()
        .filter(|(i, _)| !victims.contains(i))
        .map(|(_, s)| s.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// Empty or whitespace-only transcript.
    Empty,
    /// Non-empty transcript with no alphanumeric content at all.
    PunctuationOnly,
    /// Transcript without a single letter (digits or symbols only).
    NoLetters,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::Empty => write!(f, "empty transcript"),
            RejectReason::PunctuationOnly => write!(f, "punctuation-only transcript"),
            RejectReason::NoLetters => write!(f, "transcript has no letters"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextVerdict {
    Keep,
    Reject(RejectReason),
}

/// Transcript sanity heuristics for non-speech content.
pub fn text_heuristics(sample: &SampleMeta) -> TextVerdict {
    let text = sample.text.trim();
    if text.is_empty() {
        return TextVerdict::Reject(RejectReason::Empty);
    }
    if text.chars().any(char::is_alphabetic) {
        return TextVerdict::Keep;
    }
    if text.chars().any(char::is_alphanumeric) {
        TextVerdict::Reject(RejectReason::NoLetters)
    } else {
        TextVerdict::Reject(RejectReason::PunctuationOnly)
    }
}

/// Per-stage removal accounting for one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub removed_dnsmos: usize,
    pub removed_cps: usize,
    pub removed_text: usize,
    pub kept: usize,
}

/// Pipeline knobs; defaults follow the standard curation recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub dnsmos_fraction: f64,
    pub cps_low: f64,
    pub cps_high: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dnsmos_fraction: DEFAULT_DNSMOS_FRACTION,
            cps_low: DEFAULT_CPS_TAIL,
            cps_high: DEFAULT_CPS_TAIL,
        }
    }
}

/// Runs the three stages in their fixed order — DNSMOS tail first, then
/// per-language CPS tails, then text heuristics — and reports how many
/// samples each stage removed.
pub fn run_pipeline(
    samples: &[SampleMeta],
    config: &PipelineConfig,
) -> Result<(Vec<SampleMeta>, FilterReport)> {
    let input = samples.len();
    let after_dnsmos = filter_dnsmos(samples, config.dnsmos_fraction)?;
    let removed_dnsmos = input - after_dnsmos.len();
    let after_cps = filter_cps(&after_dnsmos, config.cps_low, config.cps_high)?;
    let removed_cps = after_dnsmos.len() - after_cps.len();
    let kept: Vec<SampleMeta> = after_cps
        .into_iter()
        .filter(|s| text_heuristics(s) == TextVerdict::Keep)
        .collect();
    let removed_text = input - removed_dnsmos - removed_cps - kept.len();
    let report = FilterReport {
        input,
        removed_dnsmos,
        removed_cps,
        removed_text,
        kept: kept.len(),
    };
    Ok((kept, report))
}
