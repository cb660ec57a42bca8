//! Exposure and generalization stimulus generation.
//!
//! The factorial design varies four features on each of the theme and the
//! recipient (pronominality, animacy, definiteness, length) plus discourse
//! givenness. Stimuli are slot-filled dative templates over a lexicon shipped
//! as an editable JSON file; counts, not particular surface forms, are the
//! contract.

mod cross_structure;
mod natural;
mod synthetic;

pub use alternation_tests::{build_nabanana_tests, load_verb_pools, AlternationTestItem, VerbPool};
pub use cross_structure::{
    build_cross_structure_stimuli, CrossStructureItems, CrossStructureStimulus,
};
pub use natural::{assemble_natural_generalization, load_keep_list};
pub use synthetic::{dual_felicitous_configs, generate_synthetic_generalization, SyntheticPair};

use std::collections::BTreeSet;
use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dative::Construction;
use crate::error::{Error, Result};

/// Whitespace-token cutoff separating short from long arguments.
pub const LENGTH_THRESHOLD: usize = 2;

/// Theme-recipient pairs sampled per feature configuration.
pub const PAIRS_PER_CONFIG: usize = 5;

/// Default novel verb surface.
pub const NOVEL_SURFACE: &str = "[pilked]";

/// The three givenness preamble patterns. `{agent}` and `{given}` are
/// required placeholders.
pub const GIVENNESS_TEMPLATES: [&str; 3] = [
    "do you see {agent} and {given}?",
    "look it's {agent} and {given}.",
    "{agent} was with {given}.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pronominality {
    Pronoun,
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Animacy {
    Animate,
    Inanimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Definiteness {
    Definite,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Length {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArgumentFeatures {
    pub pronominality: Pronominality,
    pub animacy: Animacy,
    pub definiteness: Definiteness,
    pub length: Length,
}

impl ArgumentFeatures {
    /// Pronouns are one token, so a long pronoun is impossible.
    pub fn is_possible(&self) -> bool {
        !(self.pronominality == Pronominality::Pronoun && self.length == Length::Long)
    }

    /// All sixteen theoretical feature combinations, in a fixed order.
    pub fn all() -> Vec<ArgumentFeatures> {
        let mut out = Vec::with_capacity(16);
        for p in [Pronominality::Pronoun, Pronominality::Nominal] {
            for a in [Animacy::Animate, Animacy::Inanimate] {
                for d in [Definiteness::Definite, Definiteness::Indefinite] {
                    for l in [Length::Short, Length::Long] {
                        out.push(ArgumentFeatures {
                            pronominality: p,
                            animacy: a,
                            definiteness: d,
                            length: l,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Givenness {
    Theme,
    Recipient,
    None,
}

/// One cell of the factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub theme: ArgumentFeatures,
    pub recipient: ArgumentFeatures,
    pub givenness: Givenness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Agent,
    Theme,
    Recipient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    #[serde(flatten)]
    pub features: ArgumentFeatures,
    pub roles: BTreeSet<Role>,
}

impl LexiconEntry {
    fn validate(&self) -> Result<()> {
        if self.surface != self.surface.to_lowercase() {
            return Err(Error::Stimuli(format!(
                "lexicon surface must be lowercase: {:?}",
                self.surface
            )));
        }
        let tokens = self.surface.split_whitespace().count();
        let expect = if tokens <= LENGTH_THRESHOLD {
            Length::Short
        } else {
            Length::Long
        };
        if self.features.length != expect {
            return Err(Error::Stimuli(format!(
                "{:?} has {tokens} tokens but is marked {:?}",
                self.surface, self.features.length
            )));
        }
        if !self.features.is_possible() {
            return Err(Error::Stimuli(format!(
                "{:?}: pronouns cannot be long",
                self.surface
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Stimuli("empty lexicon".into()));
        }
        for e in &entries {
            e.validate()?;
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<LexiconEntry> = serde_json::from_str(text)?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    /// Entries usable in `role` with exactly `features`.
    pub fn items(&self, role: Role, features: ArgumentFeatures) -> Vec<&LexiconEntry> {
        self.entries
            .iter()
            .filter(|e| e.roles.contains(&role) && e.features == features)
            .collect()
    }

    pub fn agents(&self) -> Vec<&LexiconEntry> {
        self.entries
            .iter()
            .filter(|e| e.roles.contains(&Role::Agent))
            .collect()
    }

    /// Surface-distinct (theme, recipient) pairs for one configuration,
    /// sorted for determinism.
    pub fn pair_pool(
        &self,
        theme_f: ArgumentFeatures,
        recip_f: ArgumentFeatures,
    ) -> Vec<(&LexiconEntry, &LexiconEntry)> {
        let mut pool: Vec<(&LexiconEntry, &LexiconEntry)> = Vec::new();
        for t in self.items(Role::Theme, theme_f) {
            for r in self.items(Role::Recipient, recip_f) {
                if t.surface != r.surface {
                    pool.push((t, r));
                }
            }
        }
        pool.sort_by(|a, b| {
            (a.0.surface.as_str(), a.1.surface.as_str())
                .cmp(&(b.0.surface.as_str(), b.1.surface.as_str()))
        });
        pool
    }
}

/// The full theoretical grid of theme and recipient features (16 x 16).
pub fn theoretical_feature_configs() -> Vec<(ArgumentFeatures, ArgumentFeatures)> {
    let all = ArgumentFeatures::all();
    let mut out = Vec::with_capacity(256);
    for &t in &all {
        for &r in &all {
            out.push((t, r));
        }
    }
    out
}

/// The realizable feature configurations: both argument combinations possible
/// (no long pronouns) and a sample pool large enough for
/// [`PAIRS_PER_CONFIG`] surface-distinct theme-recipient pairs.
pub fn enumerate_feature_configs(lexicon: &Lexicon) -> Result<Vec<FeatureConfig>> {
    enumerate_with_min_pool(lexicon, PAIRS_PER_CONFIG)
}

pub fn enumerate_with_min_pool(lexicon: &Lexicon, min_pool: usize) -> Result<Vec<FeatureConfig>> {
    if lexicon.entries().is_empty() {
        return Err(Error::Stimuli("empty lexicon".into()));
    }
    let mut out = Vec::new();
    for (t, r) in theoretical_feature_configs() {
        if !t.is_possible() || !r.is_possible() {
            continue;
        }
        if lexicon.pair_pool(t, r).len() < min_pool {
            continue;
        }
        out.push(FeatureConfig {
            theme: t,
            recipient: r,
            givenness: Givenness::None,
        });
    }
    Ok(out)
}

/// A single exposure sentence (optionally with a givenness preamble).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExposureStimulus {
    pub id: String,
    pub construction: Construction,
    pub agent: LexiconEntry,
    pub theme: LexiconEntry,
    pub recipient: LexiconEntry,
    pub config: FeatureConfig,
    pub preamble: Option<String>,
    /// Full trial input: preamble (when present) + one space + the dative
    /// sentence containing the novel verb exactly once.
    pub text: String,
}

/// The two dative templates with the novel verb slot.
pub fn dative_sentence(
    novel_surface: &str,
    construction: Construction,
    agent: &str,
    theme: &str,
    recipient: &str,
) -> String {
    match construction {
        Construction::Do => format!("{agent} {novel_surface} {recipient} {theme}."),
        Construction::Pp => format!("{agent} {novel_surface} {theme} to {recipient}."),
    }
}

impl ExposureStimulus {
    fn validate(&self, novel_surface: &str) -> Result<()> {
        if self.theme.surface == self.recipient.surface
            || self.agent.surface == self.theme.surface
            || self.agent.surface == self.recipient.surface
        {
            return Err(Error::Stimuli(format!(
                "{}: agent/theme/recipient surfaces must be pairwise distinct",
                self.id
            )));
        }
        if self.text.matches(novel_surface).count() != 1 {
            return Err(Error::Stimuli(format!(
                "{}: novel surface must occur exactly once in {:?}",
                self.id, self.text
            )));
        }
        Ok(())
    }
}

/// Samples `n_per_config` theme-recipient pairs per configuration and fills
/// both dative templates, yielding `2 * n_per_config * configs.len()`
/// stimuli. Errors when a configuration's pool cannot supply `n_per_config`
/// distinct pairs.
pub fn generate_exposures(
    lexicon: &Lexicon,
    configs: &[FeatureConfig],
    n_per_config: usize,
    novel_surface: &str,
    seed: u64,
) -> Result<Vec<ExposureStimulus>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(configs.len() * n_per_config * 2);
    let agents = lexicon.agents();
    if agents.is_empty() {
        return Err(Error::Stimuli("lexicon has no agent entries".into()));
    }
    for (ci, cfg) in configs.iter().enumerate() {
        let mut pool = lexicon.pair_pool(cfg.theme, cfg.recipient);
        if pool.len() < n_per_config {
            return Err(Error::Stimuli(format!(
                "config {ci}: sample pool has {} pairs, need {n_per_config}",
                pool.len()
            )));
        }
        pool.shuffle(&mut rng);
        for (pi, (theme, recipient)) in pool.into_iter().take(n_per_config).enumerate() {
            let mut agent_pool: Vec<&&LexiconEntry> = agents
                .iter()
                .filter(|a| a.surface != theme.surface && a.surface != recipient.surface)
                .collect();
            if agent_pool.is_empty() {
                return Err(Error::Stimuli(format!(
                    "config {ci}: no agent distinct from {:?} and {:?}",
                    theme.surface, recipient.surface
                )));
            }
            agent_pool.shuffle(&mut rng);
            let agent = *agent_pool[0];
            for construction in [Construction::Do, Construction::Pp] {
                let text = dative_sentence(
                    novel_surface,
                    construction,
                    &agent.surface,
                    &theme.surface,
                    &recipient.surface,
                );
                let stim = ExposureStimulus {
                    id: format!("exp{ci:03}-p{pi}-{construction}"),
                    construction,
                    agent: agent.clone(),
                    theme: theme.clone(),
                    recipient: recipient.clone(),
                    config: *cfg,
                    preamble: None,
                    text,
                };
                stim.validate(novel_surface)?;
                out.push(stim);
            }
        }
    }
    Ok(out)
}

fn render_preamble(template: &str, agent: &str, given: &str) -> Result<String> {
    if !template.contains("{agent}") || !template.contains("{given}") {
        return Err(Error::Stimuli(format!(
            "preamble template must contain {{agent}} and {{given}}: {template:?}"
        )));
    }
    Ok(template.replace("{agent}", agent).replace("{given}", given))
}

/// Produces givenness variants of base stimuli. Only definite arguments can
/// be given; stimuli with two indefinite arguments are skipped, and stimuli
/// with two definite arguments yield variants for both given roles.
pub fn add_givenness(
    stimuli: &[ExposureStimulus],
    templates: &[&str],
) -> Result<Vec<ExposureStimulus>> {
    let mut out = Vec::new();
    for stim in stimuli {
        let mut given_roles = Vec::new();
        if stim.theme.features.definiteness == Definiteness::Definite {
            given_roles.push(Givenness::Theme);
        }
        if stim.recipient.features.definiteness == Definiteness::Definite {
            given_roles.push(Givenness::Recipient);
        }
        for given in given_roles {
            let given_surface = match given {
                Givenness::Theme => &stim.theme.surface,
                Givenness::Recipient => &stim.recipient.surface,
                Givenness::None => unreachable!(),
            };
            for (ti, template) in templates.iter().enumerate() {
                let preamble = render_preamble(template, &stim.agent.surface, given_surface)?;
                let text = format!("{preamble} {}", stim.text);
                let mut config = stim.config;
                config.givenness = given;
                out.push(ExposureStimulus {
                    id: format!(
                        "{}-g{}{}",
                        stim.id,
                        match given {
                            Givenness::Theme => "t",
                            Givenness::Recipient => "r",
                            Givenness::None => unreachable!(),
                        },
                        ti
                    ),
                    construction: stim.construction,
                    agent: stim.agent.clone(),
                    theme: stim.theme.clone(),
                    recipient: stim.recipient.clone(),
                    config,
                    preamble: Some(preamble),
                    text,
                });
            }
        }
    }
    Ok(out)
}

/// Where a generalization sentence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenSource {
    Natural,
    Synthetic,
}

impl std::fmt::Display for GenSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenSource::Natural => write!(f, "natural"),
            GenSource::Synthetic => write!(f, "synthetic"),
        }
    }
}

/// A held-out sentence using the novel verb in a fixed construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralizationItem {
    pub id: String,
    pub construction: Construction,
    pub source: GenSource,
    pub text: String,
}

impl GeneralizationItem {
    pub fn validate(&self, novel_surface: &str) -> Result<()> {
        if self.text.matches(novel_surface).count() != 1 {
            return Err(Error::Stimuli(format!(
                "{}: novel surface must occur exactly once in {:?}",
                self.id, self.text
            )));
        }
        Ok(())
    }
}

/// Writes items as JSON lines.
pub fn save_jsonl<T: Serialize>(items: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_jsonl<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
