//! Penalty application and temperature/top-k/top-p sampling.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::timebase::{TokenId, CODEBOOK_SIZE};

use super::uniform_unit;

/// A raw score vector over the sampling vocabulary. Entries must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(Vec<f64>);

impl Logits {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid_argument("logits must be non-empty"));
        }
        if values.len() > CODEBOOK_SIZE as usize {
            return Err(Error::invalid_argument(format!(
                "sampling vocabulary of {} exceeds the {CODEBOOK_SIZE}-entry codebook",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_argument("logits must be finite"));
        }
        Ok(Logits(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sampling configuration.
///
/// `temperature == 0.0` selects argmax decoding (ties go to the lowest id);
/// the effective top-k is capped at the vocabulary size, so `top_k ≥ vocab`
/// together with `top_p = 1.0` leaves the softmax distribution untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub temperature: f64,
    pub top_k: usize,
    pub top_p: f64,
    pub repetition_penalty: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            temperature: 1.0,
            top_k: 50,
            top_p: 1.0,
            repetition_penalty: 1.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid_config("temperature must be finite and ≥ 0"));
        }
        if self.top_k == 0 {
            return Err(Error::invalid_config("top_k must be at least 1"));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::invalid_config("top_p must lie in (0, 1]"));
        }
        if !(self.repetition_penalty >= 1.0 && self.repetition_penalty.is_finite()) {
            return Err(Error::invalid_config("repetition penalty must be ≥ 1"));
        }
        Ok(())
    }
}

/// Occurrence counts of previously generated tokens, stored sparsely:
/// absent means zero.
#[derive(Debug, Clone, Default)]
pub struct SparseCounts {
    counts: HashMap<TokenId, u32>,
}

impl SparseCounts {
    pub fn new() -> Self {
        SparseCounts::default()
    }

    pub fn record(&mut self, token: TokenId) {
        *self.counts.entry(token).or_insert(0) += 1;
    }

    pub fn count(&self, token: TokenId) -> u32 {
        self.counts.get(&token).copied().unwrap_or(0)
    }

    pub fn seen(&self) -> impl Iterator<Item = (TokenId, u32)> + '_ {
        self.counts.iter().map(|(&t, &c)| (t, c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Standard repetition penalty: for every previously seen token, a positive
/// logit is divided by the penalty and a non-positive logit multiplied by
/// it. Unseen logits pass through; penalty 1 is the identity.
pub fn apply_penalties(logits: &Logits, counts: &SparseCounts, penalty: f64) -> Result<Logits> {
    if !(penalty >= 1.0 && penalty.is_finite()) {
        return Err(Error::invalid_argument("repetition penalty must be ≥ 1"));
    }
    let mut values = logits.values().to_vec();
    for (token, _) in counts.seen() {
        let idx = token.value() as usize;
        if let Some(v) = values.get_mut(idx) {
            if *v > 0.0 {
                *v /= penalty;
            } else {
                *v *= penalty;
            }
        }
    }
    Logits::new(values)
}

/// Draws one token. Pipeline order: temperature divide, top-k filter,
/// top-p nucleus (the smallest probability-sorted prefix whose cumulative
/// mass reaches `top_p`, crossing token included), renormalize, sample.
///
/// Penalties are applied beforehand by [`apply_penalties`]. Ties in the
/// probability ordering resolve toward the lower token id, so the procedure
/// is fully deterministic given the rng stream.
pub fn sample(logits: &Logits, cfg: &SamplerConfig, rng: &mut impl rand::RngCore) -> Result<TokenId> {
    cfg.validate()?;
    if cfg.temperature == 0.0 {
        return Ok(argmax(logits));
    }

    // Stable softmax at the configured temperature.
    let scaled: Vec<f64> = logits
        .values()
        .iter()
        .map(|&v| v / cfg.temperature)
        .collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();

    // Probability-descending order, lower ids first on ties.
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(cfg.top_k.min(weights.len()));

    // Nucleus: smallest prefix reaching top_p of the *full* distribution.
    // If rounding keeps the cumulative below the threshold, everything that
    // survived top-k stays.
    let mut support = order.len();
    let mut cumulative = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        cumulative += weights[idx] / total;
        if cumulative >= cfg.top_p {
            support = rank + 1;
            break;
        }
    }
    order.truncate(support);

    let support_total: f64 = order.iter().map(|&idx| weights[idx]).sum();
    let target = uniform_unit(rng) * support_total;
    let mut acc = 0.0;
    for &idx in &order {
        acc += weights[idx];
        if target < acc {
            return Ok(TokenId(idx as u16));
        }
    }
    // Floating-point slack: fall back to the least likely survivor.
    Ok(TokenId(*order.last().expect("support is non-empty") as u16))
}

fn argmax(logits: &Logits) -> TokenId {
    let mut best = 0usize;
    for (i, &v) in logits.values().iter().enumerate() {
        if v > logits.values()[best] {
            best = i;
        }
    }
    TokenId(best as u16)
}
