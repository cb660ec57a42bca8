//! Natural generalization items: detected dative utterances with the dative
//! verb replaced by the novel token, filtered by a manually curated keep
//! list (past-tense acceptability and parser false positives are human
//! judgments, so they live in a versioned data file).

use std::collections::BTreeMap;
use std::path::Path;

use crate::dative::{DativeInstance, ParsedUtterance};
use crate::error::{Error, Result};

use super::{GenSource, GeneralizationItem};

/// Plain-text curation keep-list: one utterance id per line.
pub fn load_keep_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    Ok(text
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect())
}

/// Replaces the detected dative verb with the novel surface in every kept
/// utterance.
pub fn assemble_natural_generalization(
    parses: &[ParsedUtterance],
    detections: &[DativeInstance],
    keep: &[String],
    novel_surface: &str,
) -> Result<Vec<GeneralizationItem>> {
    let by_id: BTreeMap<&str, &ParsedUtterance> =
        parses.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut out = Vec::with_capacity(keep.len());
    for id in keep {
        let det = detections
            .iter()
            .find(|d| d.utterance_id == *id)
            .ok_or_else(|| {
                Error::Stimuli(format!("curation id {id:?} absent from detections"))
            })?;
        let parse = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Stimuli(format!("curation id {id:?} has no parse")))?;
        let words: Vec<&str> = parse
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == det.verb_index {
                    novel_surface
                } else {
                    t.surface.as_str()
                }
            })
            .collect();
        let item = GeneralizationItem {
            id: format!("nat-{id}"),
            construction: det.construction,
            source: GenSource::Natural,
            text: words.join(" "),
        };
        item.validate(novel_surface)?;
        out.push(item);
    }
    Ok(out)
}
