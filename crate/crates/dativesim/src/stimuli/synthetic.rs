//! The balanced synthetic generalization set: DO/PP sentence pairs sharing
//! their event participants, restricted to configurations felicitous in both
//! constructions.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dative::Construction;
use crate::error::{Error, Result};

use super::{
    dative_sentence, enumerate_feature_configs, ExposureStimulus, FeatureConfig,
    GenSource, GeneralizationItem, Lexicon, Pronominality,
};

/// A DO/PP sentence pair with identical agent, theme, and recipient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticPair {
    pub pair_id: String,
    pub config: FeatureConfig,
    pub do_item: GeneralizationItem,
    pub pp_item: GeneralizationItem,
}

/// Realizable configurations that read acceptably in both constructions.
/// Pronominal arguments in either slot make one of the two orders degraded
/// (most sharply a pronoun pair in DO), so both arguments must be nominal.
pub fn dual_felicitous_configs(lexicon: &Lexicon) -> Result<Vec<FeatureConfig>> {
    Ok(enumerate_feature_configs(lexicon)?
        .into_iter()
        .filter(|c| {
            c.theme.pronominality == Pronominality::Nominal
                && c.recipient.pronominality == Pronominality::Nominal
        })
        .collect())
}

/// Builds `n_per_config` pairs per dual-felicitous configuration, skipping
/// any (agent, theme, recipient) triple already used by an exposure stimulus.
pub fn generate_synthetic_generalization(
    lexicon: &Lexicon,
    exposures: &[ExposureStimulus],
    n_per_config: usize,
    novel_surface: &str,
    seed: u64,
) -> Result<Vec<SyntheticPair>> {
    let used: BTreeSet<(String, String, String)> = exposures
        .iter()
        .map(|s| {
            (
                s.agent.surface.clone(),
                s.theme.surface.clone(),
                s.recipient.surface.clone(),
            )
        })
        .collect();
    let agents = lexicon.agents();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::new();

    for (ci, cfg) in dual_felicitous_configs(lexicon)?.iter().enumerate() {
        let mut pool = lexicon.pair_pool(cfg.theme, cfg.recipient);
        pool.shuffle(&mut rng);
        let mut taken = 0usize;
        for (theme, recipient) in pool {
            if taken == n_per_config {
                break;
            }
            let mut agent_pool: Vec<&&super::LexiconEntry> = agents
                .iter()
                .filter(|a| a.surface != theme.surface && a.surface != recipient.surface)
                .collect();
            agent_pool.shuffle(&mut rng);
            let Some(agent) = agent_pool.into_iter().find(|a| {
                !used.contains(&(
                    a.surface.clone(),
                    theme.surface.clone(),
                    recipient.surface.clone(),
                ))
            }) else {
                continue;
            };
            let pair_id = format!("syn{ci:02}-{taken}");
            let make = |construction: Construction| -> Result<GeneralizationItem> {
                let item = GeneralizationItem {
                    id: format!("{pair_id}-{construction}"),
                    construction,
                    source: GenSource::Synthetic,
                    text: dative_sentence(
                        novel_surface,
                        construction,
                        &agent.surface,
                        &theme.surface,
                        &recipient.surface,
                    ),
                };
                item.validate(novel_surface)?;
                Ok(item)
            };
            let do_item = make(Construction::Do)?;
            let pp_item = make(Construction::Pp)?;
            out.push(SyntheticPair {
                pair_id,
                config: *cfg,
                do_item,
                pp_item,
            });
            taken += 1;
        }
        if taken < n_per_config {
            return Err(Error::Stimuli(format!(
                "synthetic config {ci}: only {taken} of {n_per_config} pairs available after \
                 removing exposure overlaps"
            )));
        }
    }
    Ok(out)
}
