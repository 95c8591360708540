//! Paced deterministic token generation: the stand-in for autoregressive
//! SpeechLM inference that drives streaming sessions and the latency bench.

use std::time::Duration;

use rand::RngCore;

use crate::timebase::{TokenId, TokenSequence};

use super::session_rng;

/// Token id rendered as exact silence by the mock decoder.
pub const SILENT_TOKEN_ID: u16 = 0;

/// Silent tokens inserted for a whitespace run and appended at end of
/// utterance. Six tokens (120 ms) comfortably exceed the default decoder
/// context window, so every gap contains a legal concatenation point.
pub const WORD_GAP_TOKENS: usize = 6;

/// Voiced tokens rendered per text character.
const TOKENS_PER_CHAR: usize = 2;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A voiced token id derived from a hash: the low byte is forced into
/// [64, 255] so the rendered amplitude is at least ~0.25.
fn voiced_id(raw: u64) -> u16 {
    let amp = 64 + (raw % 192) as u16;
    let high = ((raw >> 16) % 256) as u16;
    high * 256 + amp
}

/// Deterministic text-to-token mapping: each non-whitespace character
/// becomes two voiced tokens seeded by `(seed, char, position)`, each
/// whitespace run becomes one silent gap, and a trailing gap closes the
/// utterance. Empty text maps to an empty sequence.
pub fn text_to_tokens(text: &str, seed: u64) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut in_gap = false;
    for (position, ch) in text.chars().enumerate() {
        if ch.is_whitespace() {
            if !in_gap {
                tokens.extend(vec![TokenId(SILENT_TOKEN_ID); WORD_GAP_TOKENS]);
                in_gap = true;
            }
            continue;
        }
        in_gap = false;
        for slot in 0..TOKENS_PER_CHAR {
            let raw = mix(seed ^ mix(((ch as u64) << 32) | ((position * TOKENS_PER_CHAR + slot) as u64)));
            tokens.push(TokenId(voiced_id(raw)));
        }
    }
    if !tokens.is_empty() && !in_gap {
        tokens.extend(vec![TokenId(SILENT_TOKEN_ID); WORD_GAP_TOKENS]);
    }
    TokenSequence::new(tokens)
}

/// A repeating voiced-run / silent-run layout, the workload used by the
/// latency bench and the stream tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternSpec {
    pub voiced_run: usize,
    pub silent_run: usize,
    pub total_tokens: usize,
}

impl PatternSpec {
    pub fn tokens(&self, seed: u64) -> TokenSequence {
        let period = self.voiced_run + self.silent_run;
        let mut tokens = Vec::with_capacity(self.total_tokens);
        for i in 0..self.total_tokens {
            let in_period = if period == 0 { 0 } else { i % period };
            if in_period < self.voiced_run {
                tokens.push(TokenId(voiced_id(mix(seed ^ (i as u64)))));
            } else {
                tokens.push(TokenId(SILENT_TOKEN_ID));
            }
        }
        TokenSequence::new(tokens)
    }
}

/// Yields a fixed token sequence in scheduling steps of `batch_tokens`.
/// A batch ending at token k becomes available `k × pace_per_token` after
/// the first step; pacing uses absolute deadlines so sleep overshoot does
/// not accumulate across steps.
#[derive(Debug)]
pub struct MockGenerator {
    tokens: Vec<TokenId>,
    batch_tokens: usize,
    pace_per_token: Duration,
    cursor: usize,
    started: Option<std::time::Instant>,
}

impl MockGenerator {
    pub fn new(tokens: TokenSequence, batch_tokens: usize, pace_per_token: Duration) -> Self {
        MockGenerator {
            tokens: tokens.tokens().to_vec(),
            batch_tokens: batch_tokens.max(1),
            pace_per_token,
            cursor: 0,
            started: None,
        }
    }

    /// Uniformly random token ids from a seed.
    pub fn random(seed: u64, n_tokens: usize, batch_tokens: usize, pace_per_token: Duration) -> Self {
        let mut rng = session_rng(seed);
        let ids: Vec<TokenId> = (0..n_tokens)
            .map(|_| TokenId((rng.next_u64() % 65_536) as u16))
            .collect();
        MockGenerator::new(TokenSequence::new(ids), batch_tokens, pace_per_token)
    }

    pub fn total_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn scheduling_steps(&self) -> usize {
        self.tokens.len().div_ceil(self.batch_tokens)
    }

    /// Produces the next batch after its simulated generation delay, or
    /// `None` once the stream is exhausted.
    pub fn next_step(&mut self) -> Option<Vec<TokenId>> {
        if self.cursor >= self.tokens.len() {
            return None;
        }
        let end = (self.cursor + self.batch_tokens).min(self.tokens.len());
        let batch = self.tokens[self.cursor..end].to_vec();
        if !self.pace_per_token.is_zero() {
            let started = *self.started.get_or_insert_with(std::time::Instant::now);
            let due = started + self.pace_per_token * end as u32;
            let now = std::time::Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        self.cursor = end;
        Some(batch)
    }
}

impl Iterator for MockGenerator {
    type Item = Vec<TokenId>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_step()
    }
}
