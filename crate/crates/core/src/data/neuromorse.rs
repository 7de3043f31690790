use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::morse::morse_encode;
use super::LabeledSample;
use crate::error::{Error, Result};

/// The 50 most frequent English words, in frequency order.
pub const TRAIN_WORDS: [&str; 50] = [
    "the", "be", "to", "of", "and", "a", "in", "that", "have", "i", "it", "for", "not", "on",
    "with", "he", "as", "you", "do", "at", "this", "but", "his", "by", "from", "they", "we", "say",
    "her", "she", "or", "an", "will", "my", "one", "all", "would", "there", "their", "what", "so",
    "up", "out", "if", "about", "who", "get", "which", "go", "me",
];

/// Frequent words outside [`TRAIN_WORDS`], used as null-class samples.
pub const NULL_WORDS: [&str; 100] = [
    "when", "make", "can", "like", "time", "no", "just", "him", "know", "take", "people", "into",
    "year", "your", "good", "some", "could", "them", "see", "other", "than", "then", "now", "look",
    "only", "come", "its", "over", "think", "also", "back", "after", "use", "two", "how", "our",
    "work", "first", "well", "way", "even", "new", "want", "because", "any", "these", "give",
    "day", "most", "us", "great", "thing", "man", "world", "life", "hand", "part", "child", "eye",
    "woman", "place", "week", "case", "point", "company", "number", "group", "problem", "fact",
    "find", "tell", "ask", "seem", "feel", "try", "leave", "call", "last", "long", "little", "own",
    "old", "right", "big", "high", "different", "small", "large", "next", "early", "young",
    "important", "few", "public", "bad", "same", "able", "down", "here", "where",
];

/// A generated NeuroMorse corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuroMorse {
    /// One class per train word, in list order.
    pub classes: Vec<String>,
    /// One sample per class.
    pub train: Vec<LabeledSample>,
    /// Every train word followed by every null word (label `None`).
    pub eval: Vec<LabeledSample>,
    pub null_words: Vec<String>,
    /// Common padded length of every sample.
    pub len: u32,
    pub batch_size: usize,
}

/// Encodes both word lists, padding every stream to the longest word.
pub fn build_neuromorse(train_words: &[&str], null_words: &[&str], batch_size: usize) -> Result<NeuroMorse> {
    let mut seen = BTreeSet::new();
    for w in train_words.iter().chain(null_words) {
        if !seen.insert(*w) {
            return Err(Error::Config(format!("word {w:?} listed twice")));
        }
    }
    let encode = |words: &[&str]| -> Result<Vec<_>> { words.iter().map(|w| morse_encode(w)).collect() };
    let train = encode(train_words)?;
    let null = encode(null_words)?;
    let len = train.iter().chain(&null).map(|s| s.len()).max().unwrap_or(0);
    let train: Vec<_> = train
        .into_iter()
        .enumerate()
        .map(|(i, s)| LabeledSample::new(s.with_len(len), Some(i)))
        .collect();
    let mut eval = train.clone();
    eval.extend(null.into_iter().map(|s| LabeledSample::new(s.with_len(len), None)));
    Ok(NeuroMorse {
        classes: train_words.iter().map(|w| w.to_string()).collect(),
        train,
        eval,
        null_words: null_words.iter().map(|w| w.to_string()).collect(),
        len,
        batch_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_corpus_shape() {
        let nm = build_neuromorse(&TRAIN_WORDS, &NULL_WORDS, 50).unwrap();
        assert_eq!(nm.classes.len(), 50);
        assert_eq!(nm.train.len(), 50);
        assert_eq!(nm.eval.len(), 150);
        let nulls = nm.eval.iter().filter(|s| s.label.is_none()).count();
        assert_eq!(nulls * 3, nm.eval.len() * 2);
        assert!(nm.eval.iter().all(|s| s.stream.len() == nm.len));
    }

    #[test]
    fn empty_null_list() {
        let nm = build_neuromorse(&TRAIN_WORDS, &[], 50).unwrap();
        assert_eq!(nm.eval, nm.train);
        assert_eq!(nm.len, 101);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(build_neuromorse(&["the", "be"], &["the"], 50).is_err());
        assert!(build_neuromorse(&["a", "a"], &[], 50).is_err());
    }

    #[test]
    fn shipped_lists_are_disjoint_letters_only() {
        let all: BTreeSet<_> = TRAIN_WORDS.iter().chain(NULL_WORDS.iter()).collect();
        assert_eq!(all.len(), 150);
        assert!(all.iter().all(|w| w.bytes().all(|b| b.is_ascii_lowercase())));
    }
}
