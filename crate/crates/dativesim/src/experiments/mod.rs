//! The simulation studies: known-verb alternation preferences, asymmetric
//! cross-dative generalization, the cross-structure training comparison, and
//! the full factorial simulation, plus aggregation and CSV export.

mod csv;
mod summary;

pub use csv::{export_csv, export_delta_csv, parse_csv, CSV_COLUMNS};
pub use summary::{summarize_records, summarize_values, SummaryRow, SummaryTable, BOOTSTRAP_RESAMPLES};

use rayon::prelude::*;

use crate::dative::{AlternationClass, AlternationProfile, Construction};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::novel::{init_novel_embedding, learn_exposure_from, ExposureTrial, LR_GRID, MAX_EPOCHS};
use crate::stimuli::{
    AlternationTestItem, CrossStructureStimulus, ExposureStimulus, GenSource,
    GeneralizationItem, Givenness, SyntheticPair,
};
use crate::stimuli::{Animacy, Definiteness, FeatureConfig, Length, Pronominality};
use crate::tokenizer::SubwordTokenizer;
use crate::verbhood::{mean_per_token_scores, VerbhoodSet};

/// ±1 coding of the exposure features: pronominal, animate, definite, short,
/// and theme-given map to +1; their complements map to −1. Base trials with
/// no preamble carry no givenness coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CodedFeatures {
    pub pron_theme: i8,
    pub anim_theme: i8,
    pub def_theme: i8,
    pub len_theme: i8,
    pub pron_recip: i8,
    pub anim_recip: i8,
    pub def_recip: i8,
    pub len_recip: i8,
    pub givenness: Option<i8>,
}

fn code(b: bool) -> i8 {
    if b {
        1
    } else {
        -1
    }
}

impl CodedFeatures {
    pub fn from_config(c: &FeatureConfig) -> Self {
        Self {
            pron_theme: code(c.theme.pronominality == Pronominality::Pronoun),
            anim_theme: code(c.theme.animacy == Animacy::Animate),
            def_theme: code(c.theme.definiteness == Definiteness::Definite),
            len_theme: code(c.theme.length == Length::Short),
            pron_recip: code(c.recipient.pronominality == Pronominality::Pronoun),
            anim_recip: code(c.recipient.animacy == Animacy::Animate),
            def_recip: code(c.recipient.definiteness == Definiteness::Definite),
            len_recip: code(c.recipient.length == Length::Short),
            givenness: match c.givenness {
                Givenness::Theme => Some(1),
                Givenness::Recipient => Some(-1),
                Givenness::None => None,
            },
        }
    }
}

/// Mean log probability per token on one generalization subset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenMean {
    pub gen_construction: Construction,
    pub gen_source: GenSource,
    pub mean_logprob_per_token: f64,
}

/// One learning trial's outcome: selection metadata plus generalization
/// scores, one CSV row per subset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial_id: String,
    pub experiment: String,
    pub exposure_construction: Construction,
    pub features: CodedFeatures,
    pub best_lr: f64,
    pub best_epoch: usize,
    pub verbhood_delta: f64,
    pub gen_means: Vec<GenMean>,
}

/// Per-verb, per-seed alternation preferences for known verbs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DeltaRecord {
    pub lemma: String,
    pub class: AlternationClass,
    pub observed: Construction,
    pub seed: u64,
    pub deltas: Vec<f64>,
    pub mean_delta: f64,
}

/// Mean-per-token log probability of the alternate form minus the observed
/// form.
pub fn delta_preference(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    alternate: &str,
    observed: &str,
) -> Result<f64> {
    if alternate.trim().is_empty() || observed.trim().is_empty() {
        return Err(Error::Experiment("cannot score an empty sentence".into()));
    }
    let a = model.score_sentence(tok, alternate)?.mean_per_token;
    let o = model.score_sentence(tok, observed)?.mean_per_token;
    Ok(a - o)
}

/// Grid settings for novel-verb learning trials.
#[derive(Debug, Clone)]
pub struct TrialSettings {
    pub lr_grid: Vec<f64>,
    pub max_epochs: usize,
    /// Base seed mixed with the model seed and stimulus id per trial.
    pub init_seed: u64,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            lr_grid: LR_GRID.to_vec(),
            max_epochs: MAX_EPOCHS,
            init_seed: 0,
        }
    }
}

impl TrialSettings {
    pub fn smoke() -> Self {
        Self {
            lr_grid: vec![0.01, 0.1],
            max_epochs: 3,
            init_seed: 0,
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn trial_init_seed(model_seed: u64, base: u64, stimulus_id: &str) -> u64 {
    fnv1a(format!("{model_seed}:{base}:{stimulus_id}").as_bytes())
}

/// Pre-encoded generalization subsets.
struct GenSets {
    natural_do: Vec<Vec<u32>>,
    natural_pp: Vec<Vec<u32>>,
    synthetic_do: Vec<Vec<u32>>,
    synthetic_pp: Vec<Vec<u32>>,
}

impl GenSets {
    fn encode(
        tok: &SubwordTokenizer,
        natural: &[GeneralizationItem],
        synthetic: &[SyntheticPair],
    ) -> Self {
        let enc = |texts: Vec<&str>| -> Vec<Vec<u32>> {
            texts.into_iter().map(|t| tok.encode(t)).collect()
        };
        Self {
            natural_do: enc(natural
                .iter()
                .filter(|i| i.construction == Construction::Do)
                .map(|i| i.text.as_str())
                .collect()),
            natural_pp: enc(natural
                .iter()
                .filter(|i| i.construction == Construction::Pp)
                .map(|i| i.text.as_str())
                .collect()),
            synthetic_do: enc(synthetic.iter().map(|p| p.do_item.text.as_str()).collect()),
            synthetic_pp: enc(synthetic.iter().map(|p| p.pp_item.text.as_str()).collect()),
        }
    }

    fn subset(&self, construction: Construction, source: GenSource) -> &[Vec<u32>] {
        match (source, construction) {
            (GenSource::Natural, Construction::Do) => &self.natural_do,
            (GenSource::Natural, Construction::Pp) => &self.natural_pp,
            (GenSource::Synthetic, Construction::Do) => &self.synthetic_do,
            (GenSource::Synthetic, Construction::Pp) => &self.synthetic_pp,
        }
    }
}

fn subset_mean(
    model: &LanguageModel,
    emb: &candle_core::Tensor,
    seqs: &[Vec<u32>],
) -> Result<f64> {
    if seqs.is_empty() {
        return Err(Error::Experiment("empty generalization subset".into()));
    }
    let scores = mean_per_token_scores(model, seqs, Some(emb))?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

struct TrialOutcome {
    state: crate::novel::LearnedVerbState,
    emb: candle_core::Tensor,
}

fn run_one_trial(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    vset_enc: &crate::verbhood::EncodedVerbhoodSet,
    settings: &TrialSettings,
    stimulus: &ExposureStimulus,
    model_seed: u64,
) -> Result<TrialOutcome> {
    let init_seed = trial_init_seed(model_seed, settings.init_seed, &stimulus.id);
    let row0 = init_novel_embedding(model, init_seed)?;
    let trial = ExposureTrial::new(stimulus.clone(), init_seed)
        .with_grid(settings.lr_grid.clone(), settings.max_epochs);
    let state = learn_exposure_from(model, tok, &trial, vset_enc, &row0)?;
    let row = candle_core::Tensor::from_vec(
        state.embedding.clone(),
        model.config().embed_dim,
        model.device(),
    )?;
    let emb = model.embedding_with_row(tok.novel_id(), &row)?;
    Ok(TrialOutcome { state, emb })
}

/// Known-verb study: Δ preferences for verbs that never alternate in
/// training, grouped by whether they actually alternate.
pub fn run_nabanana(
    models: &[(u64, LanguageModel)],
    tok: &SubwordTokenizer,
    items: &[AlternationTestItem],
    profiles: &[AlternationProfile],
) -> Result<(Vec<DeltaRecord>, SummaryTable)> {
    for p in profiles {
        if matches!(p.class, AlternationClass::Naba | AlternationClass::Nana)
            && !items.iter().any(|i| i.lemma == p.lemma)
        {
            return Err(Error::Experiment(format!(
                "no test sentences for profiled verb {:?}",
                p.lemma
            )));
        }
    }
    let mut lemmas: Vec<&str> = items.iter().map(|i| i.lemma.as_str()).collect();
    lemmas.sort_unstable();
    lemmas.dedup();

    let mut records = Vec::new();
    for (seed, model) in models {
        // score every sentence of every item in one batched pass
        let texts: Vec<Vec<u32>> = items
            .iter()
            .flat_map(|i| [tok.encode(&i.do_text), tok.encode(&i.pp_text)])
            .collect();
        let scores = mean_per_token_scores(model, &texts, None)?;
        for lemma in &lemmas {
            let mut deltas = Vec::new();
            let mut class = AlternationClass::Other;
            let mut observed = Construction::Do;
            for (idx, item) in items.iter().enumerate() {
                if item.lemma != *lemma {
                    continue;
                }
                class = item.class;
                observed = item.observed;
                let do_mean = scores[2 * idx];
                let pp_mean = scores[2 * idx + 1];
                let d = match item.observed {
                    Construction::Do => pp_mean - do_mean,
                    Construction::Pp => do_mean - pp_mean,
                };
                deltas.push(d);
            }
            let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
            records.push(DeltaRecord {
                lemma: lemma.to_string(),
                class,
                observed,
                seed: *seed,
                deltas,
                mean_delta,
            });
        }
    }

    let values: Vec<(Vec<(String, String)>, f64)> = records
        .iter()
        .flat_map(|r| {
            r.deltas.iter().map(move |d| {
                (
                    vec![
                        ("class".to_string(), r.class.to_string()),
                        ("observed".to_string(), r.observed.to_string()),
                    ],
                    *d,
                )
            })
        })
        .collect();
    let summary = summarize_values(&values, 10_000, 0)?;
    Ok((records, summary))
}

fn run_learning_experiment<F>(
    experiment: &str,
    models: &[(u64, LanguageModel)],
    tok: &SubwordTokenizer,
    stimuli: &[ExposureStimulus],
    vset: &VerbhoodSet,
    settings: &TrialSettings,
    gen_sets: &GenSets,
    subsets_for: F,
) -> Result<Vec<TrialRecord>>
where
    F: Fn(&ExposureStimulus) -> Vec<(Construction, GenSource)> + Sync,
{
    let vset_enc = vset.encode(tok)?;
    let mut records = Vec::new();
    for (seed, model) in models {
        let mut seed_records: Vec<TrialRecord> = stimuli
            .par_iter()
            .map(|stim| -> Result<TrialRecord> {
                let outcome = run_one_trial(model, tok, &vset_enc, settings, stim, *seed)?;
                let mut gen_means = Vec::new();
                for (construction, source) in subsets_for(stim) {
                    let mean =
                        subset_mean(model, &outcome.emb, gen_sets.subset(construction, source))?;
                    gen_means.push(GenMean {
                        gen_construction: construction,
                        gen_source: source,
                        mean_logprob_per_token: mean,
                    });
                }
                Ok(TrialRecord {
                    seed: *seed,
                    trial_id: stim.id.clone(),
                    experiment: experiment.to_string(),
                    exposure_construction: stim.construction,
                    features: CodedFeatures::from_config(&stim.config),
                    best_lr: outcome.state.best_lr,
                    best_epoch: outcome.state.best_epoch,
                    verbhood_delta: outcome.state.verbhood_delta,
                    gen_means,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        seed_records.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
        records.extend(seed_records);
    }
    Ok(records)
}

/// Asymmetry study: alternate-construction log probabilities on both the
/// natural and the balanced synthetic generalization sets.
pub fn run_asymmetry(
    models: &[(u64, LanguageModel)],
    tok: &SubwordTokenizer,
    exposures: &[ExposureStimulus],
    natural: &[GeneralizationItem],
    synthetic: &[SyntheticPair],
    vset: &VerbhoodSet,
    settings: &TrialSettings,
) -> Result<Vec<TrialRecord>> {
    let gen_sets = GenSets::encode(tok, natural, synthetic);
    run_learning_experiment(
        "asymmetry",
        models,
        tok,
        exposures,
        vset,
        settings,
        &gen_sets,
        |stim| {
            let alt = stim.construction.other();
            vec![(alt, GenSource::Natural), (alt, GenSource::Synthetic)]
        },
    )
}

/// Cross-structure study: per item set, keep only the preamble variant with
/// the maximal verbhood Δ, then record DO generalization.
pub fn run_cross_structure(
    models: &[(u64, LanguageModel)],
    tok: &SubwordTokenizer,
    stimuli: &[CrossStructureStimulus],
    natural: &[GeneralizationItem],
    vset: &VerbhoodSet,
    settings: &TrialSettings,
) -> Result<Vec<TrialRecord>> {
    let plain: Vec<ExposureStimulus> = stimuli.iter().map(|s| s.stimulus.clone()).collect();
    let gen_sets = GenSets::encode(tok, natural, &[]);
    let all = run_learning_experiment(
        "cross-structure",
        models,
        tok,
        &plain,
        vset,
        settings,
        &gen_sets,
        |_| vec![(Construction::Do, GenSource::Natural)],
    )?;

    // group records by (seed, construction, animacy, item set) and keep the
    // variant with the highest verbhood delta
    let meta: std::collections::BTreeMap<&str, &CrossStructureStimulus> = stimuli
        .iter()
        .map(|s| (s.stimulus.id.as_str(), s))
        .collect();
    let mut grouped: std::collections::BTreeMap<(u64, String, String, usize), Vec<&TrialRecord>> =
        std::collections::BTreeMap::new();
    for r in &all {
        let m = meta
            .get(r.trial_id.as_str())
            .ok_or_else(|| Error::Experiment(format!("unknown trial id {}", r.trial_id)))?;
        grouped
            .entry((
                r.seed,
                r.exposure_construction.to_string(),
                format!("{:?}", m.theme_animacy),
                m.item_set,
            ))
            .or_default()
            .push(r);
    }
    let mut kept = Vec::new();
    for ((seed, construction, _, item_set), variants) in grouped {
        let best = variants
            .iter()
            .filter(|r| r.verbhood_delta.is_finite())
            .max_by(|a, b| a.verbhood_delta.partial_cmp(&b.verbhood_delta).unwrap())
            .ok_or_else(|| {
                Error::Experiment(format!(
                    "all preamble variants non-finite for seed {seed}, {construction}, \
                     item set {item_set}"
                ))
            })?;
        kept.push((*best).clone());
    }
    kept.sort_by(|a, b| (a.seed, &a.trial_id).cmp(&(b.seed, &b.trial_id)));
    Ok(kept)
}

/// Retains the argmax-delta variant index from `(variant, delta)` pairs.
pub fn select_best_variant(deltas: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, d) in deltas.iter().enumerate() {
        if !d.is_finite() {
            continue;
        }
        if best.is_none_or(|b| *d > deltas[b]) {
            best = Some(i);
        }
    }
    best
}

/// Main factorial simulation: one record per (seed x exposure stimulus) with
/// the unmodeled-construction mean on the natural generalization set.
pub fn run_main_simulation(
    models: &[(u64, LanguageModel)],
    tok: &SubwordTokenizer,
    exposures: &[ExposureStimulus],
    natural: &[GeneralizationItem],
    vset: &VerbhoodSet,
    settings: &TrialSettings,
) -> Result<Vec<TrialRecord>> {
    let gen_sets = GenSets::encode(tok, natural, &[]);
    run_learning_experiment(
        "main",
        models,
        tok,
        exposures,
        vset,
        settings,
        &gen_sets,
        |stim| vec![(stim.construction.other(), GenSource::Natural)],
    )
}

#[cfg(test)]
mod tests;
