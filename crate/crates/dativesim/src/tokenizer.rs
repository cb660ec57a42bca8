//! Byte-pair-encoding subword tokenizer shared by all downstream stages.
//!
//! Base symbols are characters (recorded in the serialized file header).
//! Pre-segmentation attaches each run of spaces to the following word, so
//! `decode(encode(s)) == s` holds exactly for any string over the trained
//! alphabet. One vocabulary slot is reserved up front for a novel token so
//! that installing it later never changes the logical vocab size.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::UtteranceCorpus;
use crate::error::{Error, Result};

pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";
/// Placeholder string for the reserved novel-token slot until a surface is set.
pub const NOVEL_PLACEHOLDER: &str = "<novel>";

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const UNK_ID: u32 = 2;
pub const NOVEL_ID: u32 = 3;
const N_SPECIALS: usize = 4;

/// A trained BPE tokenizer. Immutable after training apart from
/// [`SubwordTokenizer::set_novel_surface`], which only names the reserved slot.
#[derive(Debug, Clone)]
pub struct SubwordTokenizer {
    /// id -> token string. Ids 0..4 are the special tokens.
    table: Vec<String>,
    /// token string -> id (bijective; merges that would collide are skipped).
    map: HashMap<String, u32>,
    /// Ordered merge rules as (left id, right id) -> (rank, merged id).
    ranks: HashMap<(u32, u32), (u32, u32)>,
    merges: Vec<(u32, u32)>,
    /// Number of single-character base symbols.
    n_base: usize,
    novel_surface: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TokenizerFile {
    /// Base symbol granularity. This implementation always writes "char".
    base: String,
    vocab: BTreeMap<String, u32>,
    merges: Vec<(String, String)>,
    specials: SpecialIds,
    n_base: usize,
    novel_surface: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SpecialIds {
    bos: u32,
    eos: u32,
    unk: u32,
    novel: u32,
}

/// Splits text so every run of spaces attaches to the following word.
/// A trailing run of spaces forms its own piece. Concatenating the pieces
/// reproduces the input exactly.
fn pretokenize(text: &str) -> Vec<&str> {
    let mut pieces = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        // consume spaces, then the word that follows
        while i < bytes.len() && bytes[i] == b' ' {
            i += 1;
        }
        while i < bytes.len() && bytes[i] != b' ' {
            i += 1;
        }
        pieces.push(&text[start..i]);
        start = i;
    }
    pieces.retain(|p| !p.is_empty());
    pieces
}

impl SubwordTokenizer {
    /// Trains merges on `corpus`, stopping at `vocab_size` entries or when no
    /// adjacent pair occurs at least twice.
    pub fn train(corpus: &UtteranceCorpus, vocab_size: usize) -> Result<Self> {
        // Pretoken frequencies.
        let mut freq: BTreeMap<String, u64> = BTreeMap::new();
        for utt in corpus.utterances() {
            for piece in pretokenize(utt) {
                *freq.entry(piece.to_string()).or_insert(0) += 1;
            }
        }

        let alphabet: BTreeSet<char> = freq.keys().flat_map(|w| w.chars()).collect();
        let mut table: Vec<String> = vec![
            BOS_TOKEN.to_string(),
            EOS_TOKEN.to_string(),
            UNK_TOKEN.to_string(),
            NOVEL_PLACEHOLDER.to_string(),
        ];
        let mut map: HashMap<String, u32> = HashMap::new();
        for (i, t) in table.iter().enumerate() {
            map.insert(t.clone(), i as u32);
        }
        for ch in &alphabet {
            let s = ch.to_string();
            let id = table.len() as u32;
            map.insert(s.clone(), id);
            table.push(s);
        }
        let n_base = alphabet.len();
        if vocab_size < table.len() {
            return Err(Error::Tokenizer(format!(
                "vocab_size {} smaller than base alphabet + specials ({})",
                vocab_size,
                table.len()
            )));
        }

        // Words as symbol sequences, sorted by pretoken for determinism.
        let mut words: Vec<(Vec<u32>, u64)> = freq
            .iter()
            .map(|(w, &f)| (w.chars().map(|c| map[&c.to_string()]).collect(), f))
            .collect();

        let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
        let mut where_pair: HashMap<(u32, u32), BTreeSet<usize>> = HashMap::new();
        for (wi, (syms, f)) in words.iter().enumerate() {
            for pair in syms.windows(2) {
                let p = (pair[0], pair[1]);
                *counts.entry(p).or_insert(0) += *f as i64;
                where_pair.entry(p).or_default().insert(wi);
            }
        }

        // Max-heap on (count, lexicographically smallest pair string).
        // Stale entries are discarded lazily against `counts`.
        let mut heap: BinaryHeap<(i64, Reverse<(String, String)>, (u32, u32))> = counts
            .iter()
            .map(|(&(a, b), &c)| {
                (
                    c,
                    Reverse((table[a as usize].clone(), table[b as usize].clone())),
                    (a, b),
                )
            })
            .collect();

        let mut merges: Vec<(u32, u32)> = Vec::new();
        let mut ranks: HashMap<(u32, u32), (u32, u32)> = HashMap::new();

        while table.len() < vocab_size {
            let pair = loop {
                match heap.pop() {
                    None => break None,
                    Some((c, _, p)) => {
                        let live = counts.get(&p).copied().unwrap_or(0);
                        if live != c {
                            continue; // stale
                        }
                        if c < 2 {
                            break None;
                        }
                        break Some(p);
                    }
                }
            };
            let Some((a, b)) = pair else { break };

            let merged = format!("{}{}", table[a as usize], table[b as usize]);
            if map.contains_key(&merged) {
                // A different merge path already produced this string; skip the
                // pair entirely so the vocab map stays bijective.
                counts.remove(&(a, b));
                continue;
            }
            let new_id = table.len() as u32;
            map.insert(merged.clone(), new_id);
            table.push(merged);
            ranks.insert((a, b), (merges.len() as u32, new_id));
            merges.push((a, b));

            let affected: Vec<usize> = where_pair
                .get(&(a, b))
                .map(|s| s.iter().copied().collect())
                .unwrap_or_default();
            let mut touched: BTreeSet<(u32, u32)> = BTreeSet::new();
            for wi in affected {
                let f = words[wi].1 as i64;
                let syms = &mut words[wi].0;
                if !syms.windows(2).any(|w| w[0] == a && w[1] == b) {
                    continue; // stale occurrence
                }
                for w in syms.windows(2) {
                    let p = (w[0], w[1]);
                    *counts.entry(p).or_insert(0) -= f;
                    touched.insert(p);
                }
                let mut out = Vec::with_capacity(syms.len());
                let mut i = 0;
                while i < syms.len() {
                    if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
                        out.push(new_id);
                        i += 2;
                    } else {
                        out.push(syms[i]);
                        i += 1;
                    }
                }
                *syms = out;
                for w in syms.windows(2) {
                    let p = (w[0], w[1]);
                    *counts.entry(p).or_insert(0) += f;
                    where_pair.entry(p).or_default().insert(wi);
                    touched.insert(p);
                }
            }
            for p in touched {
                let c = counts.get(&p).copied().unwrap_or(0);
                if c > 0 {
                    heap.push((
                        c,
                        Reverse((table[p.0 as usize].clone(), table[p.1 as usize].clone())),
                        p,
                    ));
                }
            }
        }

        Ok(Self {
            table,
            map,
            ranks,
            merges,
            n_base,
            novel_surface: None,
        })
    }

    /// Actual number of vocabulary entries (specials + base symbols + merges).
    pub fn vocab_size(&self) -> usize {
        self.table.len()
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    pub fn base_symbol_count(&self) -> usize {
        self.n_base
    }

    pub fn special_count(&self) -> usize {
        N_SPECIALS
    }

    /// Reserved vocabulary slot for the novel token.
    pub fn novel_id(&self) -> u32 {
        NOVEL_ID
    }

    pub fn novel_surface(&self) -> Option<&str> {
        self.novel_surface.as_deref()
    }

    /// Names the reserved novel slot. The surface is matched as a whole
    /// pretoken at encode time and is never split.
    pub fn set_novel_surface(&mut self, surface: &str) {
        self.novel_surface = Some(surface.to_string());
    }

    fn encode_symbols(&self, piece: &str, out: &mut Vec<u32>) {
        let mut syms: Vec<u32> = piece
            .chars()
            .map(|c| {
                self.map
                    .get(&c.to_string())
                    .copied()
                    .unwrap_or(UNK_ID)
            })
            .collect();
        loop {
            let mut best: Option<(u32, usize, u32)> = None; // (rank, pos, new_id)
            for (i, w) in syms.windows(2).enumerate() {
                if let Some(&(rank, new_id)) = self.ranks.get(&(w[0], w[1])) {
                    if best.is_none_or(|(r, _, _)| rank < r) {
                        best = Some((rank, i, new_id));
                    }
                }
            }
            match best {
                None => break,
                Some((_, i, new_id)) => {
                    syms[i] = new_id;
                    syms.remove(i + 1);
                }
            }
        }
        out.extend(syms);
    }

    /// Encodes `text` with sequence boundaries: `[bos, content..., eos]`.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut ids = vec![BOS_ID];
        self.encode_content(text, &mut ids);
        ids.push(EOS_ID);
        ids
    }

    fn encode_content(&self, text: &str, ids: &mut Vec<u32>) {
        for piece in pretokenize(text) {
            let word = piece.trim_start_matches(' ');
            if Some(word) == self.novel_surface.as_deref() {
                let spaces = &piece[..piece.len() - word.len()];
                if !spaces.is_empty() {
                    self.encode_symbols(spaces, ids);
                }
                ids.push(NOVEL_ID);
            } else {
                self.encode_symbols(piece, ids);
            }
        }
    }

    /// Decodes ids back to text. Boundary ids are dropped; the novel id
    /// renders as its surface (or the placeholder when unset).
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut out = String::new();
        for &id in ids {
            if id == BOS_ID || id == EOS_ID {
                continue;
            }
            if id == NOVEL_ID {
                out.push_str(self.novel_surface.as_deref().unwrap_or(NOVEL_PLACEHOLDER));
                continue;
            }
            let s = self
                .table
                .get(id as usize)
                .ok_or_else(|| Error::Tokenizer(format!("id {id} out of range")))?;
            out.push_str(s);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = TokenizerFile {
            base: "char".into(),
            vocab: self
                .table
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i as u32))
                .collect(),
            merges: self
                .merges
                .iter()
                .map(|&(a, b)| (self.table[a as usize].clone(), self.table[b as usize].clone()))
                .collect(),
            specials: SpecialIds {
                bos: BOS_ID,
                eos: EOS_ID,
                unk: UNK_ID,
                novel: NOVEL_ID,
            },
            n_base: self.n_base,
            novel_surface: self.novel_surface.clone(),
        };
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(path.as_ref(), json).map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        let file: TokenizerFile = serde_json::from_str(&text)?;
        if file.base != "char" {
            return Err(Error::Tokenizer(format!(
                "unsupported base symbol kind {:?}",
                file.base
            )));
        }
        let mut table = vec![String::new(); file.vocab.len()];
        for (tok, id) in &file.vocab {
            let idx = *id as usize;
            if idx >= table.len() {
                return Err(Error::Tokenizer(format!("vocab id {id} out of range")));
            }
            table[idx] = tok.clone();
        }
        let map: HashMap<String, u32> = file.vocab.iter().map(|(t, &i)| (t.clone(), i)).collect();
        let mut merges = Vec::with_capacity(file.merges.len());
        let mut ranks = HashMap::new();
        for (rank, (l, r)) in file.merges.iter().enumerate() {
            let (&a, &b) = (
                map.get(l)
                    .ok_or_else(|| Error::Tokenizer(format!("merge left {l:?} not in vocab")))?,
                map.get(r)
                    .ok_or_else(|| Error::Tokenizer(format!("merge right {r:?} not in vocab")))?,
            );
            let merged = format!("{l}{r}");
            let &new_id = map
                .get(&merged)
                .ok_or_else(|| Error::Tokenizer(format!("merged token {merged:?} not in vocab")))?;
            ranks.insert((a, b), (rank as u32, new_id));
            merges.push((a, b));
        }
        Ok(Self {
            table,
            map,
            ranks,
            merges,
            n_base: file.n_base,
            novel_surface: file.novel_surface,
        })
    }
}
