//! Detection of double-object and prepositional dative constructions in
//! dependency-annotated utterances, plus per-lemma alternation profiles.
//!
//! Input is CoNLL-U produced by any external parser; this module never runs a
//! parser itself. Dependency labels follow the common English pipeline
//! conventions: `dobj` for direct objects, `iobj` (or its `dative` alias) for
//! indirect objects, and `pobj` for objects of a preposition.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Do,
    Pp,
}

impl std::fmt::Display for Construction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Construction::Do => write!(f, "do"),
            Construction::Pp => write!(f, "pp"),
        }
    }
}

impl Construction {
    pub fn other(self) -> Self {
        match self {
            Construction::Do => Construction::Pp,
            Construction::Pp => Construction::Do,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedToken {
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    /// Head token index (0-based); `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

#[derive(Debug, Clone)]
pub struct ParsedUtterance {
    pub id: String,
    pub tokens: Vec<ParsedToken>,
}

impl ParsedUtterance {
    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn validate(&self) -> Result<()> {
        let mut roots = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            match t.head {
                None => roots += 1,
                Some(h) => {
                    if h >= self.tokens.len() {
                        return Err(Error::Conllu(format!(
                            "utterance {}: head index {} out of range",
                            self.id,
                            h + 1
                        )));
                    }
                    if h == i {
                        return Err(Error::Conllu(format!(
                            "utterance {}: token {} is its own head",
                            self.id,
                            i + 1
                        )));
                    }
                }
            }
        }
        if roots != 1 {
            return Err(Error::Conllu(format!(
                "utterance {}: expected exactly one root, found {roots}",
                self.id
            )));
        }
        Ok(())
    }

    /// Indices of the maximal dependency subtree rooted at `idx`.
    fn subtree(&self, idx: usize) -> Vec<usize> {
        let mut members = vec![idx];
        let mut frontier = vec![idx];
        while let Some(h) = frontier.pop() {
            for (i, t) in self.tokens.iter().enumerate() {
                if t.head == Some(h) && !members.contains(&i) {
                    members.push(i);
                    frontier.push(i);
                }
            }
        }
        members.sort_unstable();
        members
    }

    fn span_of(&self, idx: usize) -> (usize, usize) {
        let members = self.subtree(idx);
        (members[0], *members.last().unwrap())
    }

    pub fn span_text(&self, span: (usize, usize)) -> String {
        self.tokens[span.0..=span.1]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// One detected dative occurrence.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DativeInstance {
    pub utterance_id: String,
    pub verb_lemma: String,
    pub verb_index: usize,
    pub construction: Construction,
    /// Token span (inclusive) of the theme subtree.
    pub theme_span: (usize, usize),
    /// Token span (inclusive) of the recipient subtree.
    pub recipient_span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlternationClass {
    /// Single-construction in the data but listed as alternating.
    Naba,
    /// Single-construction in the data and listed as non-alternating.
    Nana,
    AlternatingInData,
    Other,
}

impl std::fmt::Display for AlternationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlternationClass::Naba => write!(f, "naba"),
            AlternationClass::Nana => write!(f, "nana"),
            AlternationClass::AlternatingInData => write!(f, "alternating-in-data"),
            AlternationClass::Other => write!(f, "other"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlternationProfile {
    pub lemma: String,
    pub do_count: usize,
    pub pp_count: usize,
    pub class: AlternationClass,
}

impl AlternationProfile {
    /// The single construction this lemma was observed in, when applicable.
    pub fn observed(&self) -> Option<Construction> {
        match (self.do_count, self.pp_count) {
            (0, n) if n > 0 => Some(Construction::Pp),
            (n, 0) if n > 0 => Some(Construction::Do),
            _ => None,
        }
    }
}

fn is_nominal(t: &ParsedToken) -> bool {
    matches!(t.upos.as_str(), "NOUN" | "PROPN" | "PRON")
        || t.xpos.starts_with("NN")
        || t.xpos == "PRP"
}

fn is_verb(t: &ParsedToken) -> bool {
    matches!(t.upos.as_str(), "VERB" | "AUX") || t.xpos.starts_with("VB")
}

fn is_iobj(rel: &str) -> bool {
    rel == "iobj" || rel == "dative"
}

/// Parses CoNLL-U text into utterances. Multiword ranges (`1-2`) and empty
/// nodes (`1.1`) are skipped; each sentence must have exactly one root.
pub fn parse_conllu(text: &str) -> Result<Vec<ParsedUtterance>> {
    let mut out = Vec::new();
    let mut tokens: Vec<ParsedToken> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut counter = 0usize;

    let flush = |tokens: &mut Vec<ParsedToken>,
                     sent_id: &mut Option<String>,
                     counter: &mut usize,
                     out: &mut Vec<ParsedUtterance>|
     -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        let id = sent_id.take().unwrap_or_else(|| {
            *counter += 1;
            format!("s{counter}")
        });
        let utt = ParsedUtterance {
            id,
            tokens: std::mem::take(tokens),
        };
        utt.validate()?;
        out.push(utt);
        Ok(())
    };

    for line in text.lines() {
        let line = line.trim_end();
        if line.is_empty() {
            flush(&mut tokens, &mut sent_id, &mut counter, &mut out)?;
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                if k.trim() == "sent_id" {
                    sent_id = Some(v.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 8 {
            return Err(Error::Conllu(format!(
                "expected at least 8 tab-separated columns, got {}: {line:?}",
                cols.len()
            )));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let idx: usize = cols[0]
            .parse()
            .map_err(|_| Error::Conllu(format!("bad token id {:?}", cols[0])))?;
        if idx != tokens.len() + 1 {
            return Err(Error::Conllu(format!(
                "token ids must be consecutive; got {idx} after {}",
                tokens.len()
            )));
        }
        let head_raw: usize = cols[6]
            .parse()
            .map_err(|_| Error::Conllu(format!("bad head {:?}", cols[6])))?;
        tokens.push(ParsedToken {
            surface: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            head: if head_raw == 0 { None } else { Some(head_raw - 1) },
            deprel: cols[7].to_string(),
        });
    }
    flush(&mut tokens, &mut sent_id, &mut counter, &mut out)?;
    Ok(out)
}

pub fn parse_conllu_file(path: impl AsRef<Path>) -> Result<Vec<ParsedUtterance>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    parse_conllu(&text)
}

/// Detects prepositional datives. An instance requires: the word "to"; a
/// direct dependency between that "to" and a dative-list verb; a `pobj`
/// relation from the "to" to a noun or pronoun; and a separate `dobj` from
/// the verb to a distinct noun or pronoun left of the "to".
pub fn detect_pp(p: &ParsedUtterance, dative_lemmas: &BTreeSet<String>) -> Vec<DativeInstance> {
    let mut out = Vec::new();
    for (to_idx, to_tok) in p.tokens.iter().enumerate() {
        if to_tok.surface != "to" {
            continue;
        }
        let Some(v_idx) = to_tok.head else { continue };
        let verb = &p.tokens[v_idx];
        if !is_verb(verb) || !dative_lemmas.contains(&verb.lemma) {
            continue;
        }
        let recipients: Vec<usize> = p
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.head == Some(to_idx) && t.deprel == "pobj" && is_nominal(t))
            .map(|(i, _)| i)
            .collect();
        let themes: Vec<usize> = p
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.head == Some(v_idx) && t.deprel == "dobj" && is_nominal(t))
            .map(|(i, _)| i)
            .collect();
        for &r in &recipients {
            for &t in &themes {
                if t == r {
                    continue;
                }
                let theme_span = p.span_of(t);
                let recipient_span = p.span_of(r);
                // theme precedes the "to" that marks the recipient
                if theme_span.1 >= to_idx {
                    continue;
                }
                out.push(DativeInstance {
                    utterance_id: p.id.clone(),
                    verb_lemma: verb.lemma.clone(),
                    verb_index: v_idx,
                    construction: Construction::Pp,
                    theme_span,
                    recipient_span,
                });
            }
        }
    }
    out
}

/// Detects double-object datives: an `iobj`/`dative` relation from a
/// dative-list verb to a noun or pronoun, plus a separate `dobj` to a
/// distinct noun or pronoun linearly to its right.
pub fn detect_do(p: &ParsedUtterance, dative_lemmas: &BTreeSet<String>) -> Vec<DativeInstance> {
    let mut out = Vec::new();
    for (v_idx, verb) in p.tokens.iter().enumerate() {
        if !is_verb(verb) || !dative_lemmas.contains(&verb.lemma) {
            continue;
        }
        let recipients: Vec<usize> = p
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.head == Some(v_idx) && is_iobj(&t.deprel) && is_nominal(t))
            .map(|(i, _)| i)
            .collect();
        let themes: Vec<usize> = p
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.head == Some(v_idx) && t.deprel == "dobj" && is_nominal(t))
            .map(|(i, _)| i)
            .collect();
        for &r in &recipients {
            for &t in &themes {
                if t == r || t <= r {
                    continue;
                }
                let theme_span = p.span_of(t);
                let recipient_span = p.span_of(r);
                // recipient strictly precedes theme
                if recipient_span.1 >= theme_span.0 {
                    continue;
                }
                out.push(DativeInstance {
                    utterance_id: p.id.clone(),
                    verb_lemma: verb.lemma.clone(),
                    verb_index: v_idx,
                    construction: Construction::Do,
                    theme_span,
                    recipient_span,
                });
            }
        }
    }
    out
}

/// Runs both detectors over a parsed corpus.
pub fn detect_all(
    parses: &[ParsedUtterance],
    dative_lemmas: &BTreeSet<String>,
) -> Vec<DativeInstance> {
    let mut out = Vec::new();
    for p in parses {
        out.extend(detect_do(p, dative_lemmas));
        out.extend(detect_pp(p, dative_lemmas));
    }
    out
}

/// Number of distinct utterances with at least one instance of `construction`.
pub fn utterance_count(instances: &[DativeInstance], construction: Construction) -> usize {
    instances
        .iter()
        .filter(|i| i.construction == construction)
        .map(|i| i.utterance_id.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Aggregates instances into per-lemma alternation profiles.
pub fn profile_alternation(
    instances: &[DativeInstance],
    alternating: &BTreeSet<String>,
    nonalternating: &BTreeSet<String>,
) -> Result<Vec<AlternationProfile>> {
    if let Some(both) = alternating.intersection(nonalternating).next() {
        return Err(Error::Conllu(format!(
            "lemma {both:?} appears in both the alternating and non-alternating lists"
        )));
    }
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for inst in instances {
        let e = counts.entry(inst.verb_lemma.clone()).or_insert((0, 0));
        match inst.construction {
            Construction::Do => e.0 += 1,
            Construction::Pp => e.1 += 1,
        }
    }
    Ok(counts
        .into_iter()
        .map(|(lemma, (do_count, pp_count))| {
            let single = (do_count == 0) != (pp_count == 0);
            let class = if single && alternating.contains(&lemma) {
                AlternationClass::Naba
            } else if single && nonalternating.contains(&lemma) {
                AlternationClass::Nana
            } else if do_count > 0 && pp_count > 0 {
                AlternationClass::AlternatingInData
            } else {
                AlternationClass::Other
            };
            AlternationProfile {
                lemma,
                do_count,
                pp_count,
                class,
            }
        })
        .collect())
}

/// Loads a plain-text lemma list (one lemma per line, `#` comments allowed).
pub fn load_lemma_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    Ok(lemma_list_from_str(&text))
}

pub fn lemma_list_from_str(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lemmas(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    // she gave the ball to me
    const PP_FIXTURE: &str = "\
# sent_id = pp1
1\tshe\tshe\tPRON\tPRP\t_\t2\tnsubj\t_\t_
2\tgave\tgive\tVERB\tVBD\t_\t0\troot\t_\t_
3\tthe\tthe\tDET\tDT\t_\t4\tdet\t_\t_
4\tball\tball\tNOUN\tNN\t_\t2\tdobj\t_\t_
5\tto\tto\tADP\tIN\t_\t2\tdative\t_\t_
6\tme\tI\tPRON\tPRP\t_\t5\tpobj\t_\t_
";

    // you gave papa an apple
    const DO_FIXTURE: &str = "\
# sent_id = do1
1\tyou\tyou\tPRON\tPRP\t_\t2\tnsubj\t_\t_
2\tgave\tgive\tVERB\tVBD\t_\t0\troot\t_\t_
3\tpapa\tpapa\tNOUN\tNN\t_\t2\tiobj\t_\t_
4\tan\tan\tDET\tDT\t_\t5\tdet\t_\t_
5\tapple\tapple\tNOUN\tNN\t_\t2\tdobj\t_\t_
";

    #[test]
    fn hand_annotated_pp_fixture() {
        let parses = parse_conllu(PP_FIXTURE).unwrap();
        let found = detect_pp(&parses[0], &lemmas(&["give"]));
        assert_eq!(found.len(), 1);
        let inst = &found[0];
        assert_eq!(inst.construction, Construction::Pp);
        assert_eq!(parses[0].span_text(inst.theme_span), "the ball");
        assert_eq!(parses[0].span_text(inst.recipient_span), "me");
        assert_eq!(inst.verb_lemma, "give");
    }

    #[test]
    fn hand_annotated_do_fixture() {
        let parses = parse_conllu(DO_FIXTURE).unwrap();
        let found = detect_do(&parses[0], &lemmas(&["give"]));
        assert_eq!(found.len(), 1);
        let inst = &found[0];
        assert_eq!(inst.construction, Construction::Do);
        assert_eq!(parses[0].span_text(inst.recipient_span), "papa");
        assert_eq!(parses[0].span_text(inst.theme_span), "an apple");
    }

    #[test]
    fn missing_dobj_yields_nothing() {
        // she walked to the store
        let text = "\
1\tshe\tshe\tPRON\tPRP\t_\t2\tnsubj\t_\t_
2\twalked\twalk\tVERB\tVBD\t_\t0\troot\t_\t_
3\tto\tto\tADP\tIN\t_\t2\tprep\t_\t_
4\tthe\tthe\tDET\tDT\t_\t5\tdet\t_\t_
5\tstore\tstore\tNOUN\tNN\t_\t3\tpobj\t_\t_
";
        let parses = parse_conllu(text).unwrap();
        assert!(detect_pp(&parses[0], &lemmas(&["walk", "give"])).is_empty());

        // she gave me
        let text = "\
1\tshe\tshe\tPRON\tPRP\t_\t2\tnsubj\t_\t_
2\tgave\tgive\tVERB\tVBD\t_\t0\troot\t_\t_
3\tme\tI\tPRON\tPRP\t_\t2\tiobj\t_\t_
";
        let parses = parse_conllu(text).unwrap();
        assert!(detect_do(&parses[0], &lemmas(&["give"])).is_empty());
    }

    #[test]
    fn out_of_list_verbs_are_ignored() {
        let parses = parse_conllu(PP_FIXTURE).unwrap();
        assert!(detect_pp(&parses[0], &lemmas(&["send"])).is_empty());
    }

    #[test]
    fn iobj_and_dative_labels_are_equivalent() {
        let with_dative = DO_FIXTURE.replace("iobj", "dative");
        let parses = parse_conllu(&with_dative).unwrap();
        assert_eq!(detect_do(&parses[0], &lemmas(&["give"])).len(), 1);
    }

    #[test]
    fn detection_is_idempotent() {
        let parses = parse_conllu(PP_FIXTURE).unwrap();
        let a = detect_all(&parses, &lemmas(&["give"]));
        let b = detect_all(&parses, &lemmas(&["give"]));
        assert_eq!(a, b);
    }

    #[test]
    fn ordering_invariants_hold() {
        let parses = parse_conllu(&format!("{PP_FIXTURE}\n{DO_FIXTURE}")).unwrap();
        for inst in detect_all(&parses, &lemmas(&["give"])) {
            match inst.construction {
                Construction::Do => assert!(inst.recipient_span.1 < inst.theme_span.0),
                Construction::Pp => assert!(inst.theme_span.1 < inst.recipient_span.0),
            }
        }
    }

    #[test]
    fn malformed_head_is_an_error() {
        let text = "1\tshe\tshe\tPRON\tPRP\t_\t9\tnsubj\t_\t_\n";
        assert!(parse_conllu(text).is_err());
    }

    #[test]
    fn multiple_roots_are_an_error() {
        let text = "\
1\ta\ta\tDET\tDT\t_\t0\troot\t_\t_
2\tb\tb\tNOUN\tNN\t_\t0\troot\t_\t_
";
        assert!(parse_conllu(text).is_err());
    }

    #[test]
    fn profiles_match_hand_tally() {
        let text = format!("{PP_FIXTURE}\n{DO_FIXTURE}\n{DO_FIXTURE}");
        let parses = parse_conllu(&text).unwrap();
        let instances = detect_all(&parses, &lemmas(&["give", "send"]));
        // hand tally: give appears once in PP and twice in DO
        let profiles =
            profile_alternation(&instances, &lemmas(&["give"]), &lemmas(&["say"])).unwrap();
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].lemma, "give");
        assert_eq!(profiles[0].do_count, 2);
        assert_eq!(profiles[0].pp_count, 1);
        assert_eq!(profiles[0].class, AlternationClass::AlternatingInData);
        assert_eq!(profiles[0].observed(), None);
    }

    #[test]
    fn single_construction_classification() {
        let parses = parse_conllu(DO_FIXTURE).unwrap();
        let instances = detect_all(&parses, &lemmas(&["give"]));
        let naba =
            profile_alternation(&instances, &lemmas(&["give"]), &lemmas(&["say"])).unwrap();
        assert_eq!(naba[0].class, AlternationClass::Naba);
        assert_eq!(naba[0].observed(), Some(Construction::Do));
        let nana =
            profile_alternation(&instances, &lemmas(&["send"]), &lemmas(&["give"])).unwrap();
        assert_eq!(nana[0].class, AlternationClass::Nana);
        let other =
            profile_alternation(&instances, &lemmas(&["send"]), &lemmas(&["say"])).unwrap();
        assert_eq!(other[0].class, AlternationClass::Other);
    }

    #[test]
    fn lemma_in_both_lists_is_an_error() {
        let parses = parse_conllu(DO_FIXTURE).unwrap();
        let instances = detect_all(&parses, &lemmas(&["give"]));
        assert!(profile_alternation(&instances, &lemmas(&["give"]), &lemmas(&["give"])).is_err());
    }
}
