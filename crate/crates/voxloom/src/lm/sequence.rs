//! Training-sequence layout, NLL bookkeeping and vocabulary padding.

use crate::error::{Error, Result};
use crate::timebase::CODEBOOK_SIZE;

/// Vocabulary sizes are padded to a multiple of 32 for tensor-core-friendly
/// matmul shapes.
pub const VOCAB_ALIGNMENT: usize = 32;

/// Reserved marker ids delimiting text and audio spans in a training
/// sequence. All three live outside the audio-token range and must be
/// pairwise distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialTokens {
    pub begin_of_text: u32,
    pub speech_start: u32,
    pub speech_end: u32,
}

impl SpecialTokens {
    pub fn new(begin_of_text: u32, speech_start: u32, speech_end: u32) -> Result<Self> {
        let ids = [begin_of_text, speech_start, speech_end];
        if ids.iter().any(|&id| id < CODEBOOK_SIZE) {
            return Err(Error::invalid_argument(
                "special token ids must lie outside the audio-token range",
            ));
        }
        if begin_of_text == speech_start
            || begin_of_text == speech_end
            || speech_start == speech_end
        {
            return Err(Error::invalid_argument("special token ids must be distinct"));
        }
        Ok(SpecialTokens {
            begin_of_text,
            speech_start,
            speech_end,
        })
    }
}

impl Default for SpecialTokens {
    fn default() -> Self {
        SpecialTokens {
            begin_of_text: CODEBOOK_SIZE,
            speech_start: CODEBOOK_SIZE + 1,
            speech_end: CODEBOOK_SIZE + 2,
        }
    }
}

/// Lays out one supervised training sequence:
/// `[begin_of_text, text…, speech_start, audio…, speech_end]`.
pub fn build_training_sequence(
    text_tokens: &[u32],
    audio_tokens: &[u32],
    specials: &SpecialTokens,
) -> Result<Vec<u32>> {
    if text_tokens.is_empty() {
        return Err(Error::invalid_argument("text tokens must be non-empty"));
    }
    if audio_tokens.is_empty() {
        return Err(Error::invalid_argument("audio tokens must be non-empty"));
    }
    let mut sequence = Vec::with_capacity(text_tokens.len() + audio_tokens.len() + 3);
    sequence.push(specials.begin_of_text);
    sequence.extend_from_slice(text_tokens);
    sequence.push(specials.speech_start);
    sequence.extend_from_slice(audio_tokens);
    sequence.push(specials.speech_end);
    Ok(sequence)
}

/// Negative log-likelihood of a target span given per-step probabilities:
/// `−Σ ln p`. Each probability must lie in (0, 1].
pub fn sequence_nll(step_probabilities: &[f64]) -> Result<f64> {
    if step_probabilities
        .iter()
        .any(|&p| !(p > 0.0 && p <= 1.0))
    {
        return Err(Error::invalid_argument(
            "step probabilities must lie in (0, 1]",
        ));
    }
    Ok(-step_probabilities.iter().map(|p| p.ln()).sum::<f64>())
}

/// Smallest multiple of `alignment` that is ≥ `raw`.
pub fn padded_vocab_size(raw: usize, alignment: usize) -> usize {
    if alignment == 0 {
        return raw;
    }
    raw.div_ceil(alignment) * alignment
}
