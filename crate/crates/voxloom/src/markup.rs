//! Audio-markup tags: the bracketed inline annotations that condition
//! synthesis style, plus the neutral/stylized pairing constructor used to
//! build style-control training data.
//!
//! The tag inventory is closed: 8 speaking styles and 7 non-verbal
//! vocalizations, lowercase, flat, no attributes and no nesting. Parsing is
//! total — unknown bracketed words stay in the text verbatim and produce a
//! diagnostic, since user text legitimately contains brackets.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::lm::uniform_unit;
use crate::rewards::{COMPONENT_EMOTION, COMPONENT_NONVERBAL, COMPONENT_STYLE};
use crate::timebase::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagCategory {
    Style,
    NonVerbal,
}

/// One of the fifteen recognized markup tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Angry,
    Disgusted,
    Fearful,
    Happy,
    Laughing,
    Sad,
    Surprised,
    Whispering,
    Breathe,
    ClearThroat,
    Cough,
    Cry,
    Laugh,
    Sigh,
    Yawn,
}

impl Tag {
    pub const ALL: [Tag; 15] = [
        Tag::Angry,
        Tag::Disgusted,
        Tag::Fearful,
        Tag::Happy,
        Tag::Laughing,
        Tag::Sad,
        Tag::Surprised,
        Tag::Whispering,
        Tag::Breathe,
        Tag::ClearThroat,
        Tag::Cough,
        Tag::Cry,
        Tag::Laugh,
        Tag::Sigh,
        Tag::Yawn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tag::Angry => "angry",
            Tag::Disgusted => "disgusted",
            Tag::Fearful => "fearful",
            Tag::Happy => "happy",
            Tag::Laughing => "laughing",
            Tag::Sad => "sad",
            Tag::Surprised => "surprised",
            Tag::Whispering => "whispering",
            Tag::Breathe => "breathe",
            Tag::ClearThroat => "clear_throat",
            Tag::Cough => "cough",
            Tag::Cry => "cry",
            Tag::Laugh => "laugh",
            Tag::Sigh => "sigh",
            Tag::Yawn => "yawn",
        }
    }

    pub fn category(self) -> TagCategory {
        match self {
            Tag::Angry
            | Tag::Disgusted
            | Tag::Fearful
            | Tag::Happy
            | Tag::Laughing
            | Tag::Sad
            | Tag::Surprised
            | Tag::Whispering => TagCategory::Style,
            Tag::Breathe
            | Tag::ClearThroat
            | Tag::Cough
            | Tag::Cry
            | Tag::Laugh
            | Tag::Sigh
            | Tag::Yawn => TagCategory::NonVerbal,
        }
    }

    /// Case-sensitive lowercase lookup.
    pub fn from_name(name: &str) -> Option<Tag> {
        Tag::ALL.iter().copied().find(|t| t.name() == name)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkupItem {
    Text(String),
    Tag(Tag),
}

/// Alternating text runs and tags. Adjacent text runs are merged and text
/// runs are stored trimmed, so documents have one canonical serialization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkupDocument {
    items: Vec<MarkupItem>,
}

impl MarkupDocument {
    pub fn new(items: Vec<MarkupItem>) -> Self {
        let mut merged: Vec<MarkupItem> = Vec::with_capacity(items.len());
        for item in items {
            match item {
                MarkupItem::Text(text) => {
                    let text = text.trim().to_string();
                    if text.is_empty() {
                        continue;
                    }
                    if let Some(MarkupItem::Text(last)) = merged.last_mut() {
                        last.push(' ');
                        last.push_str(&text);
                    } else {
                        merged.push(MarkupItem::Text(text));
                    }
                }
                tag => merged.push(tag),
            }
        }
        MarkupDocument { items: merged }
    }

    pub fn items(&self) -> &[MarkupItem] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn tags(&self) -> impl Iterator<Item = Tag> + '_ {
        self.items.iter().filter_map(|item| match item {
            MarkupItem::Tag(tag) => Some(*tag),
            MarkupItem::Text(_) => None,
        })
    }

    /// Canonical text form: items joined by single spaces, tags rendered
    /// as `[name]`. `parse(doc.serialize())` reproduces the document.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            if !out.is_empty() {
                out.push(' ');
            }
            match item {
                MarkupItem::Text(text) => out.push_str(text),
                MarkupItem::Tag(tag) => out.push_str(&tag.to_string()),
            }
        }
        out
    }
}

/// Result of parsing: the document plus diagnostics for bracketed words
/// that are not part of the tag inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub document: MarkupDocument,
    pub diagnostics: Vec<String>,
}

/// Total parser: bracketed known tags become tag items; well-formed but
/// unknown bracketed words stay literal text with one diagnostic each; a
/// `[` that never closes over tag-name characters is ordinary text.
pub fn parse(input: &str) -> Parsed {
    let chars: Vec<char> = input.chars().collect();
    let mut items = Vec::new();
    let mut text = String::new();
    let mut diagnostics = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '[' {
            if let Some((name, end)) = scan_bracket(&chars, i) {
                if let Some(tag) = Tag::from_name(&name) {
                    if !text.trim().is_empty() {
                        items.push(MarkupItem::Text(std::mem::take(&mut text)));
                    } else {
                        text.clear();
                    }
                    items.push(MarkupItem::Tag(tag));
                } else {
                    diagnostics.push(format!("unknown markup tag `[{name}]` kept as text"));
                    text.push('[');
                    text.push_str(&name);
                    text.push(']');
                }
                i = end + 1;
                continue;
            }
        }
        text.push(c);
        i += 1;
    }
    if !text.trim().is_empty() {
        items.push(MarkupItem::Text(text));
    }
    Parsed {
        document: MarkupDocument::new(items),
        diagnostics,
    }
}

/// Reads a candidate `[word]` starting at the `[` in position `start`;
/// word characters are alphanumerics and underscores. Returns the word and
/// the index of the closing bracket.
fn scan_bracket(chars: &[char], start: usize) -> Option<(String, usize)> {
    let mut name = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        let c = chars[i];
        if c == ']' {
            if name.is_empty() {
                return None;
            }
            return Some((name, i));
        }
        if c.is_alphanumeric() || c == '_' {
            name.push(c);
            i += 1;
        } else {
            return None;
        }
    }
    None
}

/// Reward components activated by a prompt's markup: the base set is
/// always scored; style tags switch on the style and emotion rewards,
/// non-verbal tags the non-verbal reward.
pub fn active_reward_tags(doc: &MarkupDocument) -> BTreeSet<String> {
    let mut active: BTreeSet<String> = crate::rewards::BASE_COMPONENTS
        .iter()
        .map(|s| s.to_string())
        .collect();
    for tag in doc.tags() {
        match tag.category() {
            TagCategory::Style => {
                active.insert(COMPONENT_STYLE.to_string());
                active.insert(COMPONENT_EMOTION.to_string());
            }
            TagCategory::NonVerbal => {
                active.insert(COMPONENT_NONVERBAL.to_string());
            }
        }
    }
    active
}

/// A neutral utterance joined to a stylized one from the same speaker,
/// with the style tag as transcript delimiter and a silence gap between
/// the audio halves.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedExample {
    pub transcript: String,
    pub audio: Waveform,
    pub silence_seconds: f64,
}

/// Bounds of the silence gap inserted between the paired utterances.
pub const SILENCE_GAP_SECONDS: (f64, f64) = (0.5, 1.5);

/// Joins a neutral and a stylized utterance: the transcript uses the style
/// tag as delimiter and the audio halves are separated by a uniform-random
/// silence gap of exact zeros.
pub fn build_pair(
    neutral: (&str, &Waveform),
    styled: (&str, &Waveform),
    tag: Tag,
    rng: &mut impl rand::RngCore,
) -> Result<PairedExample> {
    if tag.category() != TagCategory::Style {
        return Err(Error::invalid_argument(format!(
            "pair delimiter must be a style tag, got `{}`",
            tag.name()
        )));
    }
    let (neutral_text, neutral_audio) = neutral;
    let (styled_text, styled_audio) = styled;
    if neutral_audio.sample_rate() != styled_audio.sample_rate() {
        return Err(Error::invalid_argument(
            "paired utterances must share a sample rate",
        ));
    }
    let (lo, hi) = SILENCE_GAP_SECONDS;
    let silence_seconds = lo + uniform_unit(rng) * (hi - lo);
    let gap = Waveform::silence(silence_seconds, neutral_audio.sample_rate());
    let audio = neutral_audio.concat(&gap).concat(styled_audio);
    Ok(PairedExample {
        transcript: format!("{neutral_text} {tag} {styled_text}"),
        audio,
        silence_seconds,
    })
}

/// Target corpus composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusRatios {
    /// Fraction of samples carrying a non-verbal annotation.
    pub nonverbal: f64,
    /// Fraction of samples left as unpaired neutral utterances.
    pub unpaired_neutral: f64,
}

impl Default for CorpusRatios {
    fn default() -> Self {
        CorpusRatios {
            nonverbal: 0.20,
            unpaired_neutral: 0.30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusExample {
    Paired(PairedExample),
    Neutral { transcript: String, audio: Waveform },
}

impl CorpusExample {
    pub fn transcript(&self) -> &str {
        match self {
            CorpusExample::Paired(pair) => &pair.transcript,
            CorpusExample::Neutral { transcript, .. } => transcript,
        }
    }

    pub fn has_nonverbal(&self) -> bool {
        parse(self.transcript())
            .document
            .tags()
            .any(|t| t.category() == TagCategory::NonVerbal)
    }
}

/// Builds a pairing corpus: every neutral utterance is paired with 1–5
/// unique stylized partners, roughly `ratios.nonverbal` of all samples get
/// a non-verbal annotation appended, and unpaired neutral utterances are
/// mixed in to make up `ratios.unpaired_neutral` of the corpus.
pub fn build_corpus(
    neutrals: &[(String, Waveform)],
    styleds: &[(String, Waveform, Tag)],
    rng: &mut impl rand::RngCore,
    ratios: CorpusRatios,
) -> Result<Vec<CorpusExample>> {
    if neutrals.is_empty() || styleds.is_empty() {
        return Err(Error::invalid_argument(
            "corpus construction needs non-empty neutral and styled pools",
        ));
    }
    const NONVERBAL_TAGS: [Tag; 7] = [
        Tag::Breathe,
        Tag::ClearThroat,
        Tag::Cough,
        Tag::Cry,
        Tag::Laugh,
        Tag::Sigh,
        Tag::Yawn,
    ];
    let mut examples = Vec::new();
    for (neutral_text, neutral_audio) in neutrals {
        let pair_count = 1 + (uniform_unit(rng) * 5.0) as usize; // uniform over {1..5}
        let pair_count = pair_count.min(5).min(styleds.len());
        // Partial Fisher-Yates draw of distinct styled partners.
        let mut indices: Vec<usize> = (0..styleds.len()).collect();
        let last = indices.len() - 1;
        for slot in 0..pair_count {
            let pick = slot + (uniform_unit(rng) * (indices.len() - slot) as f64) as usize;
            indices.swap(slot, pick.min(last));
        }
        for &styled_idx in &indices[..pair_count] {
            let (styled_text, styled_audio, tag) = &styleds[styled_idx];
            let pair = build_pair(
                (neutral_text, neutral_audio),
                (styled_text, styled_audio),
                *tag,
                rng,
            )?;
            examples.push(CorpusExample::Paired(pair));
        }
    }

    // Mix in unpaired neutrals so they form the configured corpus share.
    let paired = examples.len();
    let r = ratios.unpaired_neutral.clamp(0.0, 0.99);
    let unpaired = if r > 0.0 {
        (paired as f64 * r / (1.0 - r)).round() as usize
    } else {
        0
    };
    for k in 0..unpaired {
        let (text, audio) = &neutrals[k % neutrals.len()];
        examples.push(CorpusExample::Neutral {
            transcript: text.clone(),
            audio: audio.clone(),
        });
    }

    // Non-verbal annotations: appended to the transcript, since the
    // vocalizations are prompt-level annotations.
    for example in examples.iter_mut() {
        if uniform_unit(rng) < ratios.nonverbal {
            let tag = NONVERBAL_TAGS[(uniform_unit(rng) * 7.0) as usize % 7];
            match example {
                CorpusExample::Paired(pair) => {
                    pair.transcript = format!("{} {tag}", pair.transcript);
                }
                CorpusExample::Neutral { transcript, .. } => {
                    *transcript = format!("{transcript} {tag}");
                }
            }
        }
    }
    Ok(examples)
}
