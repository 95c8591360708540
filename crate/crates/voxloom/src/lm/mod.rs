//! Deterministic stand-in for the SpeechLM: penalty sampling over logits,
//! training-sequence layout, NLL bookkeeping, vocabulary-extension math and
//! a paced token generator for driving streams and latency benchmarks.

mod embedding;
mod generate;
mod sampler;
mod sequence;

pub use embedding::extend_embeddings;
pub use generate::{text_to_tokens, MockGenerator, PatternSpec, SILENT_TOKEN_ID, WORD_GAP_TOKENS};
pub use sampler::{apply_penalties, sample, Logits, SamplerConfig, SparseCounts};
pub use sequence::{
    build_training_sequence, padded_vocab_size, sequence_nll, SpecialTokens, VOCAB_ALIGNMENT,
};

use rand_chacha::ChaCha8Rng;

/// The seedable generator used everywhere reproducibility matters.
///
/// ChaCha8 is documented here as part of the contract: equal seeds produce
/// bit-identical streams across runs and platforms.
pub type SessionRng = ChaCha8Rng;

/// Creates the session generator for a seed.
pub fn session_rng(seed: u64) -> SessionRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in [0, 1) using the top 53 bits of one `u64`, so the
/// mapping from generator output to float is fixed by construction.
pub(crate) fn uniform_unit(rng: &mut impl rand::RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
