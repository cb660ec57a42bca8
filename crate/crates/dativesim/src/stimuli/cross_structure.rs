//! Exposure stimuli for the cross-structure training comparison: fixed
//! short/definite arguments with animate recipients, theme animacy varied,
//! and a preamble introducing the agent together with both arguments in both
//! orders across three templates.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dative::Construction;
use crate::error::{Error, Result};

use super::{
    Animacy, ArgumentFeatures, Definiteness, ExposureStimulus, FeatureConfig, Givenness,
    Length, LexiconEntry, Pronominality, Role,
};

const PREAMBLE_TEMPLATES: [&str; 3] = [
    "do you see {agent} with {x} and {y}?",
    "look there's {agent} with {x} and {y}.",
    "{agent} was with {x} and {y}.",
];

/// Item lists for the cross-structure stimuli: agent names plus bare nouns
/// that take `the`/`a` determiners.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossStructureItems {
    pub agents: Vec<String>,
    pub animate_nouns: Vec<String>,
    pub inanimate_nouns: Vec<String>,
}

impl CrossStructureItems {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One generated stimulus with its grouping metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossStructureStimulus {
    pub stimulus: ExposureStimulus,
    /// Index of the (agent, theme, recipient) item set within its cell.
    pub item_set: usize,
    pub template_idx: usize,
    /// Whether the theme is mentioned before the recipient in the preamble.
    pub theme_first: bool,
    pub theme_animacy: Animacy,
}

fn indefinite(noun: &str) -> String {
    let vowel = noun.starts_with(['a', 'e', 'i', 'o', 'u']);
    if vowel {
        format!("an {noun}")
    } else {
        format!("a {noun}")
    }
}

fn argument_entry(noun: &str, animacy: Animacy, role: Role) -> LexiconEntry {
    LexiconEntry {
        surface: format!("the {noun}"),
        features: ArgumentFeatures {
            pronominality: Pronominality::Nominal,
            animacy,
            definiteness: Definiteness::Definite,
            length: Length::Short,
        },
        roles: [role].into_iter().collect(),
    }
}

/// Builds `n_sets` item sets per (construction x theme-animacy) cell and
/// expands each into 3 preamble templates x 2 mention orders, so every cell
/// holds `6 * n_sets` stimuli.
pub fn build_cross_structure_stimuli(
    items: &CrossStructureItems,
    n_sets: usize,
    novel_surface: &str,
    seed: u64,
) -> Result<Vec<CrossStructureStimulus>> {
    if items.agents.is_empty() {
        return Err(Error::Stimuli("cross-structure items need agents".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::new();

    for theme_animacy in [Animacy::Animate, Animacy::Inanimate] {
        let theme_nouns = match theme_animacy {
            Animacy::Animate => &items.animate_nouns,
            Animacy::Inanimate => &items.inanimate_nouns,
        };
        for construction in [Construction::Do, Construction::Pp] {
            // distinct noun pairs, recipient always animate
            let mut pairs: Vec<(&String, &String)> = Vec::new();
            for t in theme_nouns {
                for r in &items.animate_nouns {
                    if t != r {
                        pairs.push((t, r));
                    }
                }
            }
            pairs.sort();
            if pairs.len() < n_sets {
                return Err(Error::Stimuli(format!(
                    "need {n_sets} item sets but only {} noun pairs available",
                    pairs.len()
                )));
            }
            pairs.shuffle(&mut rng);
            for (set_idx, (theme_noun, recip_noun)) in
                pairs.into_iter().take(n_sets).enumerate()
            {
                let mut agent_pool: Vec<&String> = items.agents.iter().collect();
                agent_pool.shuffle(&mut rng);
                let agent_name = agent_pool[0].clone();
                let theme = argument_entry(theme_noun, theme_animacy, Role::Theme);
                let recipient = argument_entry(recip_noun, Animacy::Animate, Role::Recipient);
                let agent = LexiconEntry {
                    surface: agent_name.clone(),
                    features: ArgumentFeatures {
                        pronominality: Pronominality::Nominal,
                        animacy: Animacy::Animate,
                        definiteness: Definiteness::Definite,
                        length: Length::Short,
                    },
                    roles: [Role::Agent].into_iter().collect(),
                };
                let main = super::dative_sentence(
                    novel_surface,
                    construction,
                    &agent_name,
                    &theme.surface,
                    &recipient.surface,
                );
                for (template_idx, template) in PREAMBLE_TEMPLATES.iter().enumerate() {
                    for theme_first in [true, false] {
                        let (x, y) = if theme_first {
                            (indefinite(theme_noun), indefinite(recip_noun))
                        } else {
                            (indefinite(recip_noun), indefinite(theme_noun))
                        };
                        let preamble = template
                            .replace("{agent}", &agent_name)
                            .replace("{x}", &x)
                            .replace("{y}", &y);
                        let text = format!("{preamble} {main}");
                        let anim_tag = match theme_animacy {
                            Animacy::Animate => "anim",
                            Animacy::Inanimate => "inan",
                        };
                        out.push(CrossStructureStimulus {
                            stimulus: ExposureStimulus {
                                id: format!(
                                    "xs-{anim_tag}-{construction}-s{set_idx:02}-t{template_idx}-o{}",
                                    u8::from(theme_first)
                                ),
                                construction,
                                agent: agent.clone(),
                                theme: theme.clone(),
                                recipient: recipient.clone(),
                                config: FeatureConfig {
                                    theme: theme.features,
                                    recipient: recipient.features,
                                    givenness: Givenness::None,
                                },
                                preamble: Some(preamble),
                                text,
                            },
                            item_set: set_idx,
                            template_idx,
                            theme_first,
                            theme_animacy,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}
