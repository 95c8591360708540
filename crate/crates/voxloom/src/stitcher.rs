//! Streaming emission: buffer generated tokens, decode them with stabilizing
//! context, cut the output only inside non-voicing regions, and carry the
//! tokens after the cut into the next chunk.
//!
//! A cut position `t*` is legal when every sample in the window
//! `[t* − Δt, t* + Δt)` stays below the magnitude threshold ε. The stitcher
//! restricts candidate positions to token boundaries so that the retained
//! audio always corresponds to whole retained tokens, and it only considers
//! boundaries whose full window lies inside the decoded segment — a
//! truncated window says nothing about the audio on the other side of the
//! junction. When no legal cut exists the whole segment is deferred; after
//! `max_deferrals` consecutive deferrals the quietest available boundary is
//! force-emitted so a session can never buffer without bound.

use crate::decoder::AudioDecoder;
use crate::error::{Error, Result};
use crate::timebase::{DecoderConfig, TokenId, TokenSequence, Waveform};

/// Tuning knobs for one streaming session.
#[derive(Debug, Clone, PartialEq)]
pub struct StitcherConfig {
    /// Tokens accumulated per decode attempt.
    pub chunk_tokens: usize,
    /// Non-voicing window radius Δt, in samples.
    pub radius_samples: usize,
    /// Magnitude threshold ε for a window to count as non-voicing.
    pub epsilon: f32,
    /// Stabilizing context ΔT: trailing already-emitted tokens fed to the
    /// decoder ahead of each pending segment.
    pub context_tokens: usize,
    /// Feed prompt tokens as decoder context until something was emitted.
    pub include_prompt_context: bool,
    /// Consecutive cut-less chunks tolerated before a forced emission.
    pub max_deferrals: usize,
}

impl Default for StitcherConfig {
    fn default() -> Self {
        StitcherConfig {
            chunk_tokens: 100,
            radius_samples: 120,
            epsilon: 1e-3,
            context_tokens: 8,
            include_prompt_context: false,
            max_deferrals: 3,
        }
    }
}

impl StitcherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_tokens == 0 {
            return Err(Error::invalid_config("chunk_tokens must be at least 1"));
        }
        if self.radius_samples == 0 {
            return Err(Error::invalid_config("radius_samples must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid_config("epsilon must lie in (0, 1)"));
        }
        if self.max_deferrals == 0 {
            return Err(Error::invalid_config("max_deferrals must be at least 1"));
        }
        Ok(())
    }
}

/// Per-session stitcher state. Owned by exactly one session at a time.
#[derive(Debug, Clone, Default)]
pub struct StreamState {
    retained: TokenSequence,
    emitted_token_count: usize,
    emitted_sample_count: usize,
    deferral_count: usize,
    forced_emissions: usize,
    fed_token_count: usize,
    prompt_tokens: Option<TokenSequence>,
    // Trailing emitted tokens kept around as decoder context.
    emitted_tail: Vec<TokenId>,
}

impl StreamState {
    pub fn new() -> Self {
        StreamState::default()
    }

    pub fn with_prompt(prompt: TokenSequence) -> Self {
        StreamState {
            prompt_tokens: Some(prompt),
            ..StreamState::default()
        }
    }

    pub fn retained(&self) -> &TokenSequence {
        &self.retained
    }

    pub fn emitted_token_count(&self) -> usize {
        self.emitted_token_count
    }

    pub fn emitted_sample_count(&self) -> usize {
        self.emitted_sample_count
    }

    pub fn deferral_count(&self) -> usize {
        self.deferral_count
    }

    /// Emissions that had to bypass the non-voicing condition.
    pub fn forced_emissions(&self) -> usize {
        self.forced_emissions
    }

    /// Total tokens handed to `process_chunk` so far.
    pub fn fed_token_count(&self) -> usize {
        self.fed_token_count
    }

    pub fn prompt_tokens(&self) -> Option<&TokenSequence> {
        self.prompt_tokens.as_ref()
    }

    fn context(&self, cfg: &StitcherConfig) -> TokenSequence {
        if self.emitted_token_count == 0 {
            if cfg.include_prompt_context {
                if let Some(prompt) = &self.prompt_tokens {
                    return prompt.clone();
                }
            }
            return TokenSequence::empty();
        }
        let take = self.emitted_tail.len().min(cfg.context_tokens);
        TokenSequence::new(self.emitted_tail[self.emitted_tail.len() - take..].to_vec())
    }

    fn commit_emission(&mut self, pending: &TokenSequence, cut_tokens: usize, spt: usize, cfg: &StitcherConfig) {
        self.emitted_tail
            .extend_from_slice(&pending.tokens()[..cut_tokens]);
        if self.emitted_tail.len() > cfg.context_tokens {
            let drop = self.emitted_tail.len() - cfg.context_tokens;
            self.emitted_tail.drain(..drop);
        }
        self.retained = pending.slice(cut_tokens, pending.len());
        self.emitted_token_count += cut_tokens;
        self.emitted_sample_count += cut_tokens * spt;
        self.deferral_count = 0;
    }
}

/// Returns the last candidate position whose full `±radius` window lies
/// inside `w` and stays below `epsilon` in magnitude, or `None`.
///
/// Candidates whose window would be truncated by either edge are ignored:
/// the non-voicing condition is undefined there.
pub fn find_last_nonvoicing(
    w: &Waveform,
    radius: usize,
    epsilon: f32,
    candidates: &[usize],
) -> Option<usize> {
    candidates
        .iter()
        .rev()
        .copied()
        .find(|&pos| window_max(w, pos, radius).is_some_and(|m| m < epsilon))
}

/// Max magnitude over `[pos − radius, pos + radius)`, or `None` when the
/// window does not fit inside the waveform.
fn window_max(w: &Waveform, pos: usize, radius: usize) -> Option<f32> {
    if pos < radius || pos + radius > w.len() {
        return None;
    }
    Some(
        w.samples()[pos - radius..pos + radius]
            .iter()
            .fold(0.0f32, |m, &s| m.max(s.abs())),
    )
}

/// Token-boundary candidate positions (in samples) whose full window fits
/// inside a decoded segment of `tokens × spt` samples.
fn boundary_candidates(tokens: usize, spt: usize, radius: usize) -> Vec<usize> {
    (1..tokens)
        .map(|j| j * spt)
        .filter(|&pos| pos >= radius && pos + radius <= tokens * spt)
        .collect()
}

/// Feeds newly generated tokens through one stitching step and returns the
/// emitted audio, which is empty when the whole segment was deferred.
///
/// The pending segment (previously retained tokens plus `new_tokens`) is
/// decoded with the trailing `context_tokens` of already-emitted tokens as
/// context — the prompt tokens instead, when nothing was emitted yet and the
/// session asks for prompt context. The decoded audio is cut at the last
/// legal non-voicing token boundary; everything before the cut is emitted
/// and the tokens from the cut onward are retained for the next step.
///
/// On decoder failure the state is left untouched.
pub fn process_chunk(
    state: &mut StreamState,
    new_tokens: &TokenSequence,
    cfg: &StitcherConfig,
    decoder: &dyn AudioDecoder,
    dconfig: &DecoderConfig,
) -> Result<Waveform> {
    if new_tokens.is_empty() {
        return Err(Error::invalid_argument(
            "process_chunk requires at least one new token",
        ));
    }
    cfg.validate()?;
    let pending = state.retained.concat(new_tokens);
    let context = state.context(cfg);
    let decoded = decoder.decode_with_context(&context, &pending, dconfig)?;
    state.fed_token_count += new_tokens.len();

    let spt = dconfig.samples_per_token();
    let candidates = boundary_candidates(pending.len(), spt, cfg.radius_samples);

    if let Some(pos) = find_last_nonvoicing(&decoded, cfg.radius_samples, cfg.epsilon, &candidates)
    {
        let cut_tokens = pos / spt;
        let emitted = decoded.slice(0, pos);
        state.commit_emission(&pending, cut_tokens, spt, cfg);
        return Ok(emitted);
    }

    state.deferral_count += 1;
    if state.deferral_count >= cfg.max_deferrals {
        // Forced emission: quietest available boundary, latest on ties.
        // With no boundary at all, the entire segment goes out.
        let cut_tokens = candidates
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let (ma, mb) = (
                    window_max(&decoded, a, cfg.radius_samples).unwrap(),
                    window_max(&decoded, b, cfg.radius_samples).unwrap(),
                );
                ma.partial_cmp(&mb)
                    .unwrap()
                    .then(b.cmp(&a)) // prefer the later position on equal amplitude
            })
            .map(|pos| pos / spt)
            .unwrap_or(pending.len());
        let emitted = decoded.slice(0, cut_tokens * spt);
        state.commit_emission(&pending, cut_tokens, spt, cfg);
        state.forced_emissions += 1;
        return Ok(emitted);
    }

    state.retained = pending;
    Ok(Waveform::empty(dconfig.sample_rate()))
}

/// Decodes and emits everything still retained at end of stream. After this
/// call the retained buffer is empty and token conservation holds.
pub fn flush(
    state: &mut StreamState,
    cfg: &StitcherConfig,
    decoder: &dyn AudioDecoder,
    dconfig: &DecoderConfig,
) -> Result<Waveform> {
    if state.retained.is_empty() {
        return Ok(Waveform::empty(dconfig.sample_rate()));
    }
    cfg.validate()?;
    let pending = state.retained.clone();
    let context = state.context(cfg);
    let decoded = decoder.decode_with_context(&context, &pending, dconfig)?;
    state.commit_emission(&pending, pending.len(), dconfig.samples_per_token(), cfg);
    Ok(decoded)
}

/// The volume-stabilization transform in isolation: split `tokens` into
/// fixed-size chunks and decode each one with the trailing `context_tokens`
/// of true history (prompt included) as decoder context, trimming the
/// context samples from each output.
///
/// With a context at least as long as the decoder's sensitivity window this
/// reproduces the one-shot decode exactly; with no context each chunk
/// restarts cold and its loudness drifts.
pub fn decode_stream_stabilized(
    tokens: &TokenSequence,
    chunk_tokens: usize,
    context_tokens: usize,
    prompt: Option<&TokenSequence>,
    decoder: &dyn AudioDecoder,
    dconfig: &DecoderConfig,
) -> Result<Vec<Waveform>> {
    if chunk_tokens == 0 {
        return Err(Error::invalid_config("chunk_tokens must be at least 1"));
    }
    if tokens.is_empty() {
        return Err(Error::invalid_argument(
            "decode_stream_stabilized requires a non-empty token stream",
        ));
    }
    let empty = TokenSequence::empty();
    let prompt = prompt.unwrap_or(&empty);
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let end = (start + chunk_tokens).min(tokens.len());
        let body = tokens.slice(start, end);
        let history_len = prompt.len() + start;
        let take = history_len.min(context_tokens);
        let context = if take == 0 {
            TokenSequence::empty()
        } else {
            let mut ctx = Vec::with_capacity(take);
            for k in (history_len - take)..history_len {
                let token = if k < prompt.len() {
                    prompt.tokens()[k]
                } else {
                    tokens.tokens()[k - prompt.len()]
                };
                ctx.push(token);
            }
            TokenSequence::new(ctx)
        };
        chunks.push(decoder.decode_with_context(&context, &body, dconfig)?);
        start = end;
    }
    Ok(chunks)
}
