//! Reward analytics: normalized component rewards, conditional composite
//! combination, and mean-centered group advantages.
//!
//! Each component reward maps a raw measurement into [0, 1] so components
//! can be combined linearly. The composite only sums *active* components —
//! which components are active depends on the markup tags present in the
//! prompt — and group advantages are plain mean-centered rewards with no
//! standard-deviation scaling.

mod scorer;
mod wer;

pub use scorer::{
    score_records, CompletionScorer, MockPipelineScorer, MosScorer, ScoreRecord, ScoreRequest,
    ScoredRecord, SpeakerEmbedder, Transcriber,
};
pub use wer::{cer_from_text, edit_distance, error_rate, wer_from_text, TextNormalizer};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Decay constant k in the WER reward `exp(−k·WER)`.
pub const DEFAULT_WER_SENSITIVITY: f64 = 2.5;

/// Completions generated per prompt when forming advantage groups.
pub const DEFAULT_GROUP_SIZE: usize = 8;

pub const COMPONENT_WER: &str = "wer";
pub const COMPONENT_SIMILARITY: &str = "similarity";
pub const COMPONENT_DNSMOS: &str = "dnsmos";
pub const COMPONENT_STYLE: &str = "style";
pub const COMPONENT_EMOTION: &str = "emotion";
pub const COMPONENT_NONVERBAL: &str = "nonverbal";

/// Components scored for every completion regardless of markup.
pub const BASE_COMPONENTS: [&str; 3] = [COMPONENT_WER, COMPONENT_SIMILARITY, COMPONENT_DNSMOS];

/// WER reward: `exp(−k·rate)` ∈ (0, 1]. Rates above 1 (insertion-heavy
/// hypotheses) decay naturally.
pub fn reward_wer(rate: f64, k: f64) -> Result<f64> {
    if rate.is_nan() || rate < 0.0 {
        return Err(Error::invalid_argument("error rate must be non-negative"));
    }
    Ok((-k * rate).exp())
}

/// Speaker-similarity reward: maps a cosine in [−1, 1] to [0, 1].
pub fn reward_similarity(cosine: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&cosine) {
        return Err(Error::invalid_argument("cosine must lie in [-1, 1]"));
    }
    Ok((cosine + 1.0) / 2.0)
}

/// Perceptual-quality reward: maps a DNSMOS score in [1, 5] to [0, 1].
pub fn reward_dnsmos(score: f64) -> Result<f64> {
    if !(1.0..=5.0).contains(&score) {
        return Err(Error::invalid_argument("DNSMOS score must lie in [1, 5]"));
    }
    Ok((score - 1.0) / 4.0)
}

/// Cosine similarity of two equal-length vectors with nonzero norms,
/// clamped into [−1, 1] against floating-point overshoot.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid_argument(
            "cosine similarity needs equal non-empty lengths",
        ));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid_argument("cosine similarity of a zero vector"));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean-centered advantages for a group of completion rewards:
/// `Â_i = r_i − mean(r)`, with reward scaling deliberately disabled.
pub fn grpo_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::invalid_argument(
            "advantage groups need at least two completions",
        ));
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    Ok(rewards.iter().map(|r| r - mean).collect())
}

/// Linear-combination weights, one per component name.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardWeights {
    weights: BTreeMap<String, f64>,
}

impl RewardWeights {
    pub fn empty() -> Self {
        RewardWeights {
            weights: BTreeMap::new(),
        }
    }

    /// Equal unit weights for every known component, the configuration the
    /// combined-reward experiments use.
    pub fn equal() -> Self {
        let mut w = RewardWeights::empty();
        for name in [
            COMPONENT_WER,
            COMPONENT_SIMILARITY,
            COMPONENT_DNSMOS,
            COMPONENT_STYLE,
            COMPONENT_EMOTION,
            COMPONENT_NONVERBAL,
        ] {
            w.set(name, 1.0).expect("unit weight is finite");
        }
        w
    }

    pub fn set(&mut self, name: &str, weight: f64) -> Result<()> {
        if !weight.is_finite() {
            return Err(Error::invalid_argument("weights must be finite"));
        }
        self.weights.insert(name.to_string(), weight);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.weights.get(name).copied()
    }
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights::equal()
    }
}

/// Per-completion component rewards plus the set of components that count
/// toward the composite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RewardBreakdown {
    components: BTreeMap<String, f64>,
    active: BTreeSet<String>,
}

impl RewardBreakdown {
    pub fn new() -> Self {
        RewardBreakdown::default()
    }

    /// Records a component value; values must already be normalized into
    /// [0, 1].
    pub fn insert(&mut self, name: &str, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid_argument(format!(
                "component `{name}` value {value} outside [0, 1]"
            )));
        }
        self.components.insert(name.to_string(), value);
        Ok(())
    }

    /// Marks a recorded component as active.
    pub fn activate(&mut self, name: &str) -> Result<()> {
        if !self.components.contains_key(name) {
            return Err(Error::invalid_argument(format!(
                "cannot activate `{name}`: no recorded component value"
            )));
        }
        self.active.insert(name.to_string());
        Ok(())
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.get(name).copied()
    }

    pub fn components(&self) -> &BTreeMap<String, f64> {
        &self.components
    }

    pub fn active(&self) -> &BTreeSet<String> {
        &self.active
    }

    pub fn is_active(&self, name: &str) -> bool {
        self.active.contains(name)
    }
}

/// Weighted sum over the *active* components only: `R = Σ w_i·R_i`.
/// Inactive components contribute nothing; an active component without a
/// configured weight is a configuration error.
pub fn composite_reward(breakdown: &RewardBreakdown, weights: &RewardWeights) -> Result<f64> {
    let mut total = 0.0;
    for name in breakdown.active() {
        let value = breakdown
            .component(name)
            .expect("active components always carry a value");
        let weight = weights
            .get(name)
            .ok_or_else(|| Error::MissingWeight(name.clone()))?;
        total += weight * value;
    }
    Ok(total)
}
