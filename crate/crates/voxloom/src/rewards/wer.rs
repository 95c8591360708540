//! Word and character error rates over edit distance.

use crate::error::{Error, Result};

/// Levenshtein distance with unit-cost substitution, insertion and
/// deletion, O(min(m, n)) memory.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    if reference.is_empty() {
        return hypothesis.len();
    }
    if hypothesis.is_empty() {
        return reference.len();
    }
    let (short, long) = if reference.len() <= hypothesis.len() {
        (reference, hypothesis)
    } else {
        (hypothesis, reference)
    };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0usize; short.len() + 1];
    for i in 1..=long.len() {
        curr[0] = i;
        for j in 1..=short.len() {
            let cost = usize::from(long[i - 1] != short[j - 1]);
            curr[j] = (prev[j] + 1).min(curr[j - 1] + 1).min(prev[j - 1] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Error rate of a hypothesis against a non-empty reference:
/// `edit_distance / len(reference)`. Insertions can push the rate past 1.
pub fn error_rate<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::invalid_argument("error rate needs a non-empty reference"));
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

/// Text normalization applied before scoring. Both steps default on; the
/// normalized text uses single spaces between words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextNormalizer {
    pub lowercase: bool,
    pub strip_punctuation: bool,
}

impl Default for TextNormalizer {
    fn default() -> Self {
        TextNormalizer {
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

impl TextNormalizer {
    pub fn normalize(&self, text: &str) -> String {
        let lowered;
        let text = if self.lowercase {
            lowered = text.to_lowercase();
            &lowered
        } else {
            text
        };
        let mut out = String::with_capacity(text.len());
        let mut pending_space = false;
        for c in text.chars() {
            let keep = if self.strip_punctuation {
                c.is_alphanumeric()
            } else {
                !c.is_whitespace()
            };
            if keep {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(c);
            } else {
                pending_space = true;
            }
        }
        out
    }
}

/// Word error rate of normalized text.
pub fn wer_from_text(reference: &str, hypothesis: &str, norm: &TextNormalizer) -> Result<f64> {
    let r = norm.normalize(reference);
    let h = norm.normalize(hypothesis);
    let r_words: Vec<&str> = r.split_whitespace().collect();
    let h_words: Vec<&str> = h.split_whitespace().collect();
    error_rate(&r_words, &h_words)
}

/// Character error rate of normalized text, whitespace counted as a
/// character. Used instead of WER for languages on the CER list.
pub fn cer_from_text(reference: &str, hypothesis: &str, norm: &TextNormalizer) -> Result<f64> {
    let r: Vec<char> = norm.normalize(reference).chars().collect();
    let h: Vec<char> = norm.normalize(hypothesis).chars().collect();
    error_rate(&r, &h)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive alignment: the minimum edit cost found by trying every
    /// operation at every position. Exponential, but exact — the oracle
    /// the DP is checked against.
    pub(crate) fn exhaustive_alignment<T: PartialEq>(r: &[T], h: &[T]) -> usize {
        if r.is_empty() {
            return h.len();
        }
        if h.is_empty() {
            return r.len();
        }
        let substitute = exhaustive_alignment(&r[1..], &h[1..]) + usize::from(r[0] != h[0]);
        let delete = exhaustive_alignment(&r[1..], h) + 1;
        let insert = exhaustive_alignment(r, &h[1..]) + 1;
        substitute.min(delete).min(insert)
    }

    #[test]
    fn identical_sequences_score_zero() {
        let words = ["a", "b", "c"];
        assert_eq!(error_rate(&words, &words).unwrap(), 0.0);
    }

    #[test]
    fn dropped_word() {
        let rate = wer_from_text(
            "the quick brown fox",
            "the quick fox",
            &TextNormalizer::default(),
        )
        .unwrap();
        assert_eq!(rate, 0.25);
    }

    #[test]
    fn rate_can_exceed_one() {
        let rate = wer_from_text("a", "b c d", &TextNormalizer::default()).unwrap();
        assert_eq!(rate, 3.0);
    }

    #[test]
    fn empty_reference_rejected() {
        assert!(wer_from_text("", "hi", &TextNormalizer::default()).is_err());
        assert!(wer_from_text("!!!", "hi", &TextNormalizer::default()).is_err());
    }

    #[test]
    fn normalization_examples() {
        let norm = TextNormalizer::default();
        assert_eq!(norm.normalize("Hello, World!"), "hello world");
        assert_eq!(norm.normalize("  a   b "), "a b");
        let keep_punct = TextNormalizer {
            strip_punctuation: false,
            ..norm
        };
        assert_eq!(keep_punct.normalize("Hello, World!"), "hello, world!");
    }

    #[test]
    fn cer_counts_whitespace() {
        let norm = TextNormalizer::default();
        // "ab cd" vs "abcd": deleting the space is one edit over five chars.
        assert_eq!(cer_from_text("ab cd", "abcd", &norm).unwrap(), 0.2);
    }

    #[test]
    fn dp_matches_exhaustive_alignment() {
        // All pairs of short sequences over a three-symbol alphabet.
        let alphabet = ["x", "y", "z"];
        let mut sequences: Vec<Vec<&str>> = vec![vec![]];
        for len in 1..=3 {
            let count = 3usize.pow(len);
            for code in 0..count {
                let mut seq = Vec::with_capacity(len as usize);
                let mut c = code;
                for _ in 0..len {
                    seq.push(alphabet[c % 3]);
                    c /= 3;
                }
                sequences.push(seq);
            }
        }
        for r in &sequences {
            for h in &sequences {
                assert_eq!(
                    edit_distance(r, h),
                    exhaustive_alignment(r, h),
                    "ref {r:?} hyp {h:?}"
                );
            }
        }
    }
}
