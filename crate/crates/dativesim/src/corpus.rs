//! Line-oriented utterance corpora.
//!
//! A corpus file is UTF-8 plain text with one lowercase utterance per line.
//! Blank lines are ignored; everything else is kept verbatim (minus the
//! trailing newline) in file order.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which split of the corpus a file belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Validation => write!(f, "validation"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// An ordered collection of utterances from one split.
#[derive(Debug, Clone)]
pub struct UtteranceCorpus {
    utterances: Vec<String>,
    split: Split,
    word_count: usize,
}

impl UtteranceCorpus {
    /// Builds a corpus from in-memory utterances, enforcing the corpus
    /// invariants (lowercase, no empty utterances).
    pub fn from_utterances<I, S>(lines: I, split: Split) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut utterances = Vec::new();
        let mut word_count = 0usize;
        for line in lines {
            let line = line.as_ref().trim_end_matches(['\n', '\r']);
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let line = line.to_lowercase();
            word_count += line.split_whitespace().count();
            utterances.push(line);
        }
        if utterances.is_empty() {
            return Err(Error::Corpus("zero non-empty lines".into()));
        }
        Ok(Self {
            utterances,
            split,
            word_count,
        })
    }

    pub fn utterances(&self) -> &[String] {
        &self.utterances
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// Total whitespace-separated words across all utterances.
    pub fn word_count(&self) -> usize {
        self.word_count
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

/// Loads a corpus from a UTF-8 text file, one utterance per line.
pub fn load_corpus(path: impl AsRef<Path>, split: Split) -> Result<UtteranceCorpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Corpus(format!("{}: not valid UTF-8", path.display())))?;
    UtteranceCorpus::from_utterances(text.lines(), split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn three_line_fixture_word_count() {
        // Hand count: 4 + 2 + 6 = 12 words.
        let corpus = UtteranceCorpus::from_utterances(
            [
                "the dog is here",
                "hello there",
                "you gave papa an apple today",
            ],
            Split::Train,
        )
        .unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.word_count(), 12);
    }

    #[test]
    fn empty_file_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "\n\n   \n").unwrap();
        let err = load_corpus(f.path(), Split::Train).unwrap_err();
        assert!(err.to_string().contains("zero non-empty lines"));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(load_corpus("/nonexistent/corpus.txt", Split::Train).is_err());
    }

    #[test]
    fn non_utf8_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&[0xff, 0xfe, 0x20]).unwrap();
        assert!(load_corpus(f.path(), Split::Train).is_err());
    }

    #[test]
    fn lowercases_and_preserves_order() {
        let corpus =
            UtteranceCorpus::from_utterances(["First Line", "", "second"], Split::Validation)
                .unwrap();
        assert_eq!(corpus.utterances(), ["first line", "second"]);
        assert_eq!(corpus.split(), Split::Validation);
    }
}
