//! The verbhood validation measure used for model selection during novel-verb
//! learning: does the model prefer the novel token at verb positions over
//! non-verb positions?
//!
//! The set pairs sentences whose past-tense verb was replaced by a slot with
//! sentences whose slot sits at a manually curated non-verb position. The
//! slot marker in text is the literal `___`.

use std::collections::BTreeMap;
use std::path::Path;

use candle_core::Tensor;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dative::ParsedUtterance;
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::tokenizer::SubwordTokenizer;

pub const SLOT_MARKER: &str = "___";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotClass {
    VerbExpecting,
    NonVerbExpecting,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotSentence {
    /// Sentence text containing exactly one `___` slot.
    pub text: String,
    /// Whitespace-token index of the slot.
    pub slot_index: usize,
    pub class: SlotClass,
}

impl SlotSentence {
    fn validate(&self) -> Result<()> {
        if self.text.matches(SLOT_MARKER).count() != 1 {
            return Err(Error::Verbhood(format!(
                "sentence must contain exactly one slot marker: {:?}",
                self.text
            )));
        }
        Ok(())
    }

    pub fn filled(&self, surface: &str) -> String {
        self.text.replace(SLOT_MARKER, surface)
    }
}

/// Equal-sized verb-expecting and non-verb-expecting sentence sets.
#[derive(Debug, Clone)]
pub struct VerbhoodSet {
    verb_expecting: Vec<SlotSentence>,
    nonverb_expecting: Vec<SlotSentence>,
}

/// How [`verbhood_accuracy`] pairs the two subsets.
#[derive(Debug, Clone, Copy)]
pub enum PairingMode {
    /// Index-paired after a deterministic shuffle with this seed.
    IndexPaired { seed: u64 },
    /// Every verb-expecting sentence against every non-verb-expecting one.
    AllPairs,
}

impl VerbhoodSet {
    pub fn new(
        verb_expecting: Vec<SlotSentence>,
        nonverb_expecting: Vec<SlotSentence>,
    ) -> Result<Self> {
        if verb_expecting.len() != nonverb_expecting.len() {
            return Err(Error::Verbhood(format!(
                "subset sizes differ: {} verb-expecting vs {} non-verb-expecting",
                verb_expecting.len(),
                nonverb_expecting.len()
            )));
        }
        if verb_expecting.is_empty() {
            return Err(Error::Verbhood("empty verbhood set".into()));
        }
        for s in verb_expecting.iter().chain(&nonverb_expecting) {
            s.validate()?;
        }
        Ok(Self {
            verb_expecting,
            nonverb_expecting,
        })
    }

    pub fn verb_expecting(&self) -> &[SlotSentence] {
        &self.verb_expecting
    }

    pub fn nonverb_expecting(&self) -> &[SlotSentence] {
        &self.nonverb_expecting
    }

    pub fn len_per_class(&self) -> usize {
        self.verb_expecting.len()
    }

    /// Fills every slot with the tokenizer's novel surface and encodes once,
    /// so repeated scoring inside a learning trial skips re-encoding.
    pub fn encode(&self, tok: &SubwordTokenizer) -> Result<EncodedVerbhoodSet> {
        let surface = tok
            .novel_surface()
            .ok_or_else(|| Error::Verbhood("tokenizer has no novel surface set".into()))?;
        let encode_all = |set: &[SlotSentence]| -> Vec<Vec<u32>> {
            set.iter().map(|s| tok.encode(&s.filled(surface))).collect()
        };
        Ok(EncodedVerbhoodSet {
            verb: encode_all(&self.verb_expecting),
            nonverb: encode_all(&self.nonverb_expecting),
        })
    }

    /// JSON-lines serialization: one `{text, slot_index, class}` per line.
    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        for s in self.verb_expecting.iter().chain(&self.nonverb_expecting) {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        let mut verb = Vec::new();
        let mut nonverb = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let s: SlotSentence = serde_json::from_str(line)?;
            match s.class {
                SlotClass::VerbExpecting => verb.push(s),
                SlotClass::NonVerbExpecting => nonverb.push(s),
            }
        }
        Self::new(verb, nonverb)
    }
}

/// Pre-encoded verbhood sentences with the novel token in every slot.
#[derive(Debug, Clone)]
pub struct EncodedVerbhoodSet {
    pub verb: Vec<Vec<u32>>,
    pub nonverb: Vec<Vec<u32>>,
}

/// A curated (utterance id, token index) list naming non-verb slot positions.
pub fn load_nonverb_slots(path: impl AsRef<Path>) -> Result<Vec<(String, usize)>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, idx) = line.split_once('\t').ok_or_else(|| {
            Error::Verbhood(format!("expected `utterance_id<TAB>token_index`: {line:?}"))
        })?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::Verbhood(format!("bad token index in {line:?}")))?;
        out.push((id.to_string(), idx));
    }
    Ok(out)
}

/// Builds the validation set from dependency-annotated utterances.
///
/// Verb slots replace tokens tagged `VBD`; non-verb slots come from the
/// curated `(utterance id, token index)` list. `n_per_class` sentences are
/// drawn per class with a seeded shuffle.
pub fn build_verbhood_set(
    parses: &[ParsedUtterance],
    nonverb_slots: &[(String, usize)],
    n_per_class: usize,
    seed: u64,
) -> Result<VerbhoodSet> {
    let mut verb_candidates: Vec<SlotSentence> = Vec::new();
    for p in parses {
        for (i, t) in p.tokens.iter().enumerate() {
            if t.xpos == "VBD" {
                verb_candidates.push(slot_sentence(p, i, SlotClass::VerbExpecting));
            }
        }
    }
    if verb_candidates.len() < n_per_class {
        return Err(Error::Verbhood(format!(
            "only {} VBD candidates, need {}",
            verb_candidates.len(),
            n_per_class
        )));
    }

    let by_id: BTreeMap<&str, &ParsedUtterance> =
        parses.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut nonverb_candidates: Vec<SlotSentence> = Vec::new();
    for (id, idx) in nonverb_slots {
        let p = by_id.get(id.as_str()).ok_or_else(|| {
            Error::Verbhood(format!("non-verb slot references unknown utterance {id:?}"))
        })?;
        if *idx >= p.tokens.len() {
            return Err(Error::Verbhood(format!(
                "non-verb slot index {idx} out of range in utterance {id:?}"
            )));
        }
        nonverb_candidates.push(slot_sentence(p, *idx, SlotClass::NonVerbExpecting));
    }
    if nonverb_candidates.len() < n_per_class {
        return Err(Error::Verbhood(format!(
            "only {} curated non-verb candidates, need {}",
            nonverb_candidates.len(),
            n_per_class
        )));
    }

    let mut rng = StdRng::seed_from_u64(seed);
    verb_candidates.shuffle(&mut rng);
    nonverb_candidates.shuffle(&mut rng);
    verb_candidates.truncate(n_per_class);
    nonverb_candidates.truncate(n_per_class);
    VerbhoodSet::new(verb_candidates, nonverb_candidates)
}

fn slot_sentence(p: &ParsedUtterance, idx: usize, class: SlotClass) -> SlotSentence {
    let words: Vec<&str> = p
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i == idx {
                SLOT_MARKER
            } else {
                t.surface.as_str()
            }
        })
        .collect();
    SlotSentence {
        text: words.join(" "),
        slot_index: idx,
        class,
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn mean_per_token_scores(
    model: &LanguageModel,
    seqs: &[Vec<u32>],
    embed_override: Option<&Tensor>,
) -> Result<Vec<f64>> {
    Ok(model
        .score_batch_with(seqs, embed_override)?
        .iter()
        .map(|s| s.mean_per_token)
        .collect())
}

/// Verbhood Δ on a pre-encoded set, optionally with a trial embedding matrix.
pub(crate) fn verbhood_delta_encoded(
    model: &LanguageModel,
    enc: &EncodedVerbhoodSet,
    embed_override: Option<&Tensor>,
) -> Result<f64> {
    let v = mean_per_token_scores(model, &enc.verb, embed_override)?;
    let n = mean_per_token_scores(model, &enc.nonverb, embed_override)?;
    Ok(mean(&v) - mean(&n))
}

/// Mean per-token log probability over verb-expecting slots minus the mean
/// over non-verb-expecting slots, with the novel token filling every slot.
pub fn verbhood_delta(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    vset: &VerbhoodSet,
) -> Result<f64> {
    verbhood_delta_encoded(model, &vset.encode(tok)?, None)
}

/// Which per-sentence score feeds the accuracy comparison. Mean per token is
/// the default, matching the generalization measure; sentence totals are the
/// alternative reading.
#[derive(Debug, Clone, Copy, Default)]
pub enum AccuracyMeasure {
    #[default]
    MeanPerToken,
    SentenceTotal,
}

/// Fraction of paired comparisons where the verb-expecting sentence scores
/// strictly higher (mean per-token). Ties count as failures.
pub fn verbhood_accuracy(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    vset: &VerbhoodSet,
    mode: PairingMode,
) -> Result<f64> {
    verbhood_accuracy_with(model, tok, vset, mode, AccuracyMeasure::MeanPerToken)
}

/// [`verbhood_accuracy`] with an explicit sentence-score measure.
pub fn verbhood_accuracy_with(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    vset: &VerbhoodSet,
    mode: PairingMode,
    measure: AccuracyMeasure,
) -> Result<f64> {
    let enc = vset.encode(tok)?;
    let score_all = |seqs: &[Vec<u32>]| -> Result<Vec<f64>> {
        let scores = model.score_batch_ids(seqs)?;
        Ok(scores
            .iter()
            .map(|s| match measure {
                AccuracyMeasure::MeanPerToken => s.mean_per_token,
                AccuracyMeasure::SentenceTotal => s.total,
            })
            .collect())
    };
    let v = score_all(&enc.verb)?;
    let n = score_all(&enc.nonverb)?;
    Ok(match mode {
        PairingMode::IndexPaired { seed } => {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut vi: Vec<usize> = (0..v.len()).collect();
            let mut ni: Vec<usize> = (0..n.len()).collect();
            vi.shuffle(&mut rng);
            ni.shuffle(&mut rng);
            let wins = vi.iter().zip(&ni).filter(|&(&a, &b)| v[a] > n[b]).count();
            wins as f64 / v.len() as f64
        }
        PairingMode::AllPairs => {
            let mut wins = 0usize;
            for a in &v {
                for b in &n {
                    if a > b {
                        wins += 1;
                    }
                }
            }
            wins as f64 / (v.len() * n.len()) as f64
        }
    })
}
