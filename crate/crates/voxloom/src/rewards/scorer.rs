//! Pluggable completion scoring: the decode → transcribe → embed → MOS
//! pipeline expressed against abstract stage interfaces, deterministic
//! mocks for each stage, and file-oriented batch scoring for groups of
//! completions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markup;
use crate::timebase::{rms_db, Waveform};

use super::{
    cer_from_text, composite_reward, grpo_advantages, reward_dnsmos, reward_similarity,
    reward_wer, wer_from_text, RewardBreakdown, RewardWeights, TextNormalizer,
    COMPONENT_DNSMOS, COMPONENT_EMOTION, COMPONENT_NONVERBAL, COMPONENT_SIMILARITY,
    COMPONENT_STYLE, COMPONENT_WER, DEFAULT_WER_SENSITIVITY,
};

/// Everything a scorer may look at for one completion.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    /// Prompt text with markup; drives conditional reward activation.
    pub prompt_text: &'a str,
    /// Target text the completion should speak.
    pub reference_text: &'a str,
    /// Reference speaker audio, when available.
    pub prompt_audio: Option<&'a Waveform>,
    /// Decoded completion audio.
    pub completion_audio: &'a Waveform,
}

/// A complete completion scorer: everything needed to turn one request
/// into a component breakdown. Real evaluation models implement this same
/// contract; the crate ships [`MockPipelineScorer`].
pub trait CompletionScorer {
    fn score(&self, request: &ScoreRequest) -> Result<RewardBreakdown>;
}

/// Speech-to-text stage.
pub trait Transcriber {
    fn transcribe(&self, audio: &Waveform, reference_text: &str) -> String;
}

/// Speaker-embedding stage.
pub trait SpeakerEmbedder {
    fn embed(&self, audio: &Waveform) -> Vec<f64>;
}

/// Perceptual-quality stage, scoring into [1, 5].
pub trait MosScorer {
    fn mos(&self, audio: &Waveform) -> f64;
}

/// Deterministic mock ASR: counts silence-delimited voiced segments and
/// returns one reference word per segment, so dropped or spurious audio
/// segments surface as word errors.
#[derive(Debug, Clone)]
pub struct MockTranscriber {
    /// Samples below this magnitude count as silence.
    pub silence_threshold: f32,
    /// Minimum silent run splitting two voiced segments, in samples.
    pub min_gap_samples: usize,
}

impl Default for MockTranscriber {
    fn default() -> Self {
        MockTranscriber {
            silence_threshold: 1e-3,
            min_gap_samples: 320,
        }
    }
}

impl MockTranscriber {
    pub fn voiced_segments(&self, audio: &Waveform) -> usize {
        let mut segments = 0;
        let mut silent_run = usize::MAX / 2; // leading silence splits nothing
        let mut in_segment = false;
        for &s in audio.samples() {
            if s.abs() < self.silence_threshold {
                silent_run += 1;
                if silent_run >= self.min_gap_samples {
                    in_segment = false;
                }
            } else {
                if !in_segment {
                    segments += 1;
                    in_segment = true;
                }
                silent_run = 0;
            }
        }
        segments
    }
}

impl Transcriber for MockTranscriber {
    fn transcribe(&self, audio: &Waveform, reference_text: &str) -> String {
        let words: Vec<&str> = reference_text.split_whitespace().collect();
        let segments = self.voiced_segments(audio);
        let mut out: Vec<String> = words
            .iter()
            .take(segments)
            .map(|w| w.to_string())
            .collect();
        for extra in words.len()..segments {
            out.push(format!("uh{extra}"));
        }
        out.join(" ")
    }
}

/// Deterministic mock speaker embedding built from simple signal
/// statistics: RMS level, zero-crossing rate, mean magnitude, peak.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockSpeakerEmbedder;

impl SpeakerEmbedder for MockSpeakerEmbedder {
    fn embed(&self, audio: &Waveform) -> Vec<f64> {
        let n = audio.len().max(1) as f64;
        let mut sum_sq = 0.0f64;
        let mut sum_abs = 0.0f64;
        let mut peak = 0.0f64;
        let mut crossings = 0usize;
        let samples = audio.samples();
        for (i, &s) in samples.iter().enumerate() {
            let s = s as f64;
            sum_sq += s * s;
            sum_abs += s.abs();
            peak = peak.max(s.abs());
            if i > 0 && (s > 0.0) != (samples[i - 1] as f64 > 0.0) {
                crossings += 1;
            }
        }
        vec![
            (sum_sq / n).sqrt(),
            crossings as f64 / n,
            sum_abs / n,
            peak,
        ]
    }
}

/// Deterministic mock MOS: peaks at a −20 dB presentation level and decays
/// linearly toward 1.0 at the −100 dB silence floor.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockMosScorer;

impl MosScorer for MockMosScorer {
    fn mos(&self, audio: &Waveform) -> f64 {
        let level = rms_db(audio).map(|db| db.value()).unwrap_or(-100.0);
        let fit = 1.0 - ((level + 20.0).abs() / 80.0).min(1.0);
        1.0 + 4.0 * fit
    }
}

/// The full mock evaluation pipeline behind one scorer interface.
///
/// Base components are scored when their inputs exist (similarity needs
/// prompt audio); markup-activated components use documented placeholder
/// statistics. A component is active when the prompt's markup activates it
/// and a value was recorded.
#[derive(Debug, Clone, Default)]
pub struct MockPipelineScorer {
    pub transcriber: MockTranscriber,
    pub embedder: MockSpeakerEmbedder,
    pub mos: MockMosScorer,
    pub normalizer: TextNormalizer,
}

impl CompletionScorer for MockPipelineScorer {
    fn score(&self, request: &ScoreRequest) -> Result<RewardBreakdown> {
        let mut breakdown = RewardBreakdown::new();

        let hypothesis = self
            .transcriber
            .transcribe(request.completion_audio, request.reference_text);
        let rate = wer_from_text(request.reference_text, &hypothesis, &self.normalizer)?;
        breakdown.insert(
            COMPONENT_WER,
            reward_wer(rate, DEFAULT_WER_SENSITIVITY)?,
        )?;

        if let Some(prompt_audio) = request.prompt_audio {
            let cosine = super::cosine_similarity(
                &self.embedder.embed(prompt_audio),
                &self.embedder.embed(request.completion_audio),
            )?;
            breakdown.insert(COMPONENT_SIMILARITY, reward_similarity(cosine)?)?;
        }

        breakdown.insert(
            COMPONENT_DNSMOS,
            reward_dnsmos(self.mos.mos(request.completion_audio).clamp(1.0, 5.0))?,
        )?;

        let requested = markup::active_reward_tags(&markup::parse(request.prompt_text).document);

        if requested.contains(COMPONENT_STYLE) || requested.contains(COMPONENT_EMOTION) {
            // Placeholder style consistency: loudness match against the
            // prompt when available, a neutral 0.5 otherwise.
            let value = match request.prompt_audio {
                Some(prompt_audio) => {
                    let p = rms_db(prompt_audio)?.value();
                    let c = rms_db(request.completion_audio)?.value();
                    1.0 - ((p - c).abs() / 40.0).min(1.0)
                }
                None => 0.5,
            };
            breakdown.insert(COMPONENT_STYLE, value)?;
            breakdown.insert(COMPONENT_EMOTION, value)?;
        }
        if requested.contains(COMPONENT_NONVERBAL) {
            // Placeholder non-verbal presence: fraction of near-silent
            // samples (breath pauses and vocal gaps).
            let silent = request
                .completion_audio
                .samples()
                .iter()
                .filter(|s| s.abs() < self.transcriber.silence_threshold)
                .count();
            breakdown.insert(
                COMPONENT_NONVERBAL,
                silent as f64 / request.completion_audio.len().max(1) as f64,
            )?;
        }

        for name in &requested {
            if breakdown.component(name).is_some() {
                breakdown.activate(name)?;
            }
        }
        Ok(breakdown)
    }
}

/// One line of a batch-scoring input file: raw measurements for a single
/// completion, grouped with its siblings by the `group` key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    /// Completions sharing a group form one advantage group; records
    /// without a group are grouped by position in `group_size` chunks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Prompt text with markup; drives conditional activation.
    pub prompt: String,
    /// Target text.
    pub reference: String,
    /// ASR transcript of the completion audio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
    /// Language code; languages on the CER list score characters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    /// Raw speaker-embedding cosine in [−1, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<f64>,
    /// Raw DNSMOS in [1, 5].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dnsmos: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonverbal: Option<f64>,
}

/// One line of a batch-scoring output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub id: String,
    pub group: String,
    pub components: BTreeMap<String, f64>,
    pub active: Vec<String>,
    pub composite: f64,
    pub advantage: f64,
}

/// Scores a batch of records: normalizes each raw measurement, activates
/// components per the prompt's markup, combines them with `weights`, and
/// mean-centers composites within each group.
pub fn score_records(
    records: &[ScoreRecord],
    weights: &RewardWeights,
    group_size: usize,
    wer_sensitivity: f64,
    cer_languages: &[String],
) -> Result<Vec<ScoredRecord>> {
    if group_size == 0 {
        return Err(Error::invalid_argument("group size must be at least 1"));
    }
    let normalizer = TextNormalizer::default();
    let mut scored = Vec::with_capacity(records.len());
    for (index, record) in records.iter().enumerate() {
        let hypothesis = record.hypothesis.as_deref().unwrap_or("");
        let use_cer = record
            .language
            .as_ref()
            .is_some_and(|lang| cer_languages.contains(lang));
        let rate = if use_cer {
            cer_from_text(&record.reference, hypothesis, &normalizer)?
        } else {
            wer_from_text(&record.reference, hypothesis, &normalizer)?
        };

        let mut breakdown = RewardBreakdown::new();
        breakdown.insert(COMPONENT_WER, reward_wer(rate, wer_sensitivity)?)?;
        if let Some(cosine) = record.cosine {
            breakdown.insert(COMPONENT_SIMILARITY, reward_similarity(cosine)?)?;
        }
        if let Some(mos) = record.dnsmos {
            breakdown.insert(COMPONENT_DNSMOS, reward_dnsmos(mos)?)?;
        }
        for (name, value) in [
            (COMPONENT_STYLE, record.style),
            (COMPONENT_EMOTION, record.emotion),
            (COMPONENT_NONVERBAL, record.nonverbal),
        ] {
            if let Some(value) = value {
                breakdown.insert(name, value)?;
            }
        }

        let requested = markup::active_reward_tags(&markup::parse(&record.prompt).document);
        for name in &requested {
            if breakdown.component(name).is_some() {
                breakdown.activate(name)?;
            }
        }

        let composite = composite_reward(&breakdown, weights)?;
        let group = record
            .group
            .clone()
            .unwrap_or_else(|| format!("chunk-{}", index / group_size));
        scored.push(ScoredRecord {
            id: record.id.clone(),
            group,
            components: breakdown.components().clone(),
            active: breakdown.active().iter().cloned().collect(),
            composite,
            advantage: 0.0,
        });
    }

    // Advantages: mean-centered composites within each group, groups taken
    // in first-appearance order.
    let mut group_order: Vec<String> = Vec::new();
    for record in &scored {
        if !group_order.contains(&record.group) {
            group_order.push(record.group.clone());
        }
    }
    for group in group_order {
        let member_indices: Vec<usize> = scored
            .iter()
            .enumerate()
            .filter(|(_, r)| r.group == group)
            .map(|(i, _)| i)
            .collect();
        let rewards: Vec<f64> = member_indices.iter().map(|&i| scored[i].composite).collect();
        let advantages = grpo_advantages(&rewards).map_err(|_| {
            Error::invalid_argument(format!(
                "group `{group}` has {} completion(s); advantage groups need at least 2",
                rewards.len()
            ))
        })?;
        for (&i, advantage) in member_indices.iter().zip(advantages) {
            scored[i].advantage = advantage;
        }
    }
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::DEFAULT_GROUP_SIZE;

    fn tone(level: f32, len: usize) -> Waveform {
        Waveform::new(
            (0..len)
                .map(|i| level * ((i as f32) * 0.2).sin())
                .collect(),
            16_000,
        )
    }

    fn gapped_speech(words: usize) -> Waveform {
        let mut samples = Vec::new();
        for _ in 0..words {
            samples.extend(tone(0.5, 2000).samples());
            samples.extend(vec![0.0f32; 500]);
        }
        Waveform::new(samples, 16_000)
    }

    #[test]
    fn transcriber_counts_segments() {
        let t = MockTranscriber::default();
        assert_eq!(t.voiced_segments(&gapped_speech(3)), 3);
        assert_eq!(t.voiced_segments(&Waveform::new(vec![0.0; 4000], 16_000)), 0);
        assert_eq!(t.transcribe(&gapped_speech(2), "alpha beta gamma"), "alpha beta");
        assert_eq!(
            t.transcribe(&gapped_speech(3), "alpha beta gamma"),
            "alpha beta gamma"
        );
    }

    #[test]
    fn pipeline_scores_match_audio_quality() {
        let scorer = MockPipelineScorer::default();
        let prompt_audio = gapped_speech(2);
        let good = scorer
            .score(&ScoreRequest {
                prompt_text: "say three words",
                reference_text: "alpha beta gamma",
                prompt_audio: Some(&prompt_audio),
                completion_audio: &gapped_speech(3),
            })
            .unwrap();
        assert_eq!(good.component(COMPONENT_WER), Some(1.0));
        assert!(good.is_active(COMPONENT_WER));
        assert!(good.is_active(COMPONENT_SIMILARITY));
        assert!(good.is_active(COMPONENT_DNSMOS));
        assert!(!good.is_active(COMPONENT_STYLE));

        let truncated = scorer
            .score(&ScoreRequest {
                prompt_text: "say three words",
                reference_text: "alpha beta gamma",
                prompt_audio: Some(&prompt_audio),
                completion_audio: &gapped_speech(1),
            })
            .unwrap();
        assert!(
            truncated.component(COMPONENT_WER).unwrap() < good.component(COMPONENT_WER).unwrap()
        );
    }

    #[test]
    fn markup_activates_conditional_components() {
        let scorer = MockPipelineScorer::default();
        let styled = scorer
            .score(&ScoreRequest {
                prompt_text: "[angry] shout it",
                reference_text: "shout it",
                prompt_audio: None,
                completion_audio: &gapped_speech(2),
            })
            .unwrap();
        assert!(styled.is_active(COMPONENT_STYLE));
        assert!(styled.is_active(COMPONENT_EMOTION));
        assert!(!styled.is_active(COMPONENT_NONVERBAL));
        // No prompt audio: similarity has no measurement and stays inactive.
        assert!(!styled.is_active(COMPONENT_SIMILARITY));

        let nv = scorer
            .score(&ScoreRequest {
                prompt_text: "[breathe] then speak",
                reference_text: "then speak",
                prompt_audio: None,
                completion_audio: &gapped_speech(2),
            })
            .unwrap();
        assert!(nv.is_active(COMPONENT_NONVERBAL));
    }

    fn record(id: &str, group: &str, hyp: &str, cos: f64, mos: f64) -> ScoreRecord {
        ScoreRecord {
            id: id.to_string(),
            group: Some(group.to_string()),
            prompt: "read the words".to_string(),
            reference: "one two three four".to_string(),
            hypothesis: Some(hyp.to_string()),
            language: None,
            cosine: Some(cos),
            dnsmos: Some(mos),
            style: None,
            emotion: None,
            nonverbal: None,
        }
    }

    #[test]
    fn batch_scoring_groups_and_advantages() {
        let records = vec![
            record("a", "g1", "one two three four", 0.9, 4.5),
            record("b", "g1", "one two four", 0.5, 3.0),
            record("c", "g2", "one", 0.0, 2.0),
            record("d", "g2", "one two three four", 1.0, 5.0),
        ];
        let scored = score_records(
            &records,
            &RewardWeights::equal(),
            DEFAULT_GROUP_SIZE,
            DEFAULT_WER_SENSITIVITY,
            &[],
        )
        .unwrap();
        assert_eq!(scored.len(), 4);
        for pair in [(0, 1), (2, 3)] {
            let sum = scored[pair.0].advantage + scored[pair.1].advantage;
            assert!(sum.abs() < 1e-12);
        }
        assert!(scored[0].advantage > 0.0 && scored[1].advantage < 0.0);
        assert!(scored[3].advantage > 0.0);
    }

    #[test]
    fn chunked_grouping_without_group_field() {
        let mut records: Vec<ScoreRecord> = (0..4)
            .map(|i| record(&format!("r{i}"), "x", "one two three four", 0.5, 3.0))
            .collect();
        for r in &mut records {
            r.group = None;
        }
        let scored = score_records(
            &records,
            &RewardWeights::equal(),
            2,
            DEFAULT_WER_SENSITIVITY,
            &[],
        )
        .unwrap();
        assert_eq!(scored[0].group, "chunk-0");
        assert_eq!(scored[3].group, "chunk-1");
    }

    #[test]
    fn singleton_group_is_rejected() {
        let records = vec![record("only", "g", "one two three four", 0.5, 3.0)];
        assert!(score_records(
            &records,
            &RewardWeights::equal(),
            DEFAULT_GROUP_SIZE,
            DEFAULT_WER_SENSITIVITY,
            &[],
        )
        .is_err());
    }

    #[test]
    fn cer_languages_score_characters() {
        let mut zh = record("zh", "g", "", 0.5, 3.0);
        zh.language = Some("zh".to_string());
        zh.reference = "你好世界".to_string();
        zh.hypothesis = Some("你好世界".to_string());
        let mut second = zh.clone();
        second.id = "zh2".to_string();
        second.hypothesis = Some("你好".to_string());
        let scored = score_records(
            &[zh, second],
            &RewardWeights::equal(),
            DEFAULT_GROUP_SIZE,
            DEFAULT_WER_SENSITIVITY,
            &["zh".to_string()],
        )
        .unwrap();
        assert_eq!(scored[0].components[COMPONENT_WER], 1.0);
        assert!(scored[1].components[COMPONENT_WER] < 1.0);
    }
}
