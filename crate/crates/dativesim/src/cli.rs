//! Batch command-line frontend. Every command is non-interactive and
//! deterministic given identical inputs and seeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, Split};
use crate::dative::{self, Construction};
use crate::error::{Error, Result};
use crate::experiments::{
    export_csv, export_delta_csv, parse_csv, run_asymmetry, run_cross_structure,
    run_main_simulation, run_nabanana, summarize_records, TrialRecord, TrialSettings,
};
use crate::lm::{self, LanguageModel, ModelConfig, TrainConfig};
use crate::stimuli::{self, ExposureStimulus, GeneralizationItem, SyntheticPair};
use crate::tokenizer::SubwordTokenizer;
use crate::verbhood::{self, VerbhoodSet};

/// Environment variable naming a directory that relative input paths are
/// resolved against.
pub const DATA_ROOT_ENV: &str = "DATIVESIM_DATA_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Full-size runs with the complete factorial design.
    #[default]
    Paper,
    /// Tiny capped runs for CI machines without corpus access.
    Smoke,
}

/// File-based run configuration; flags override these values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub tokenizer: Option<PathBuf>,
    #[serde(default)]
    pub models: Vec<PathBuf>,
    #[serde(default)]
    pub exposures: Option<PathBuf>,
    #[serde(default)]
    pub givenness: Option<PathBuf>,
    #[serde(default)]
    pub natural: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<PathBuf>,
    #[serde(default)]
    pub cross_structure: Option<PathBuf>,
    #[serde(default)]
    pub verbhood: Option<PathBuf>,
    #[serde(default)]
    pub pools: Option<PathBuf>,
    #[serde(default)]
    pub profiles: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub scale: Option<Scale>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dativesim",
    about = "Train small language models on utterance corpora and measure novel-verb \
             generalization across dative constructions",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the shared BPE tokenizer on a corpus file.
    TrainTokenizer {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 8192)]
        vocab_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a base language model.
    TrainLm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        tokenizer: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Scale::Paper)]
        scale: Scale,
        /// Optional JSON file overriding the model configuration.
        #[arg(long)]
        model_config: Option<PathBuf>,
        /// Optional JSON file overriding the training configuration.
        #[arg(long)]
        train_config: Option<PathBuf>,
    },
    /// Generate exposure and generalization stimuli from the lexicon.
    GenStimuli {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        cross_items: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Scale::Paper)]
        scale: Scale,
        /// CoNLL-U file to mine natural generalization contexts from.
        #[arg(long, requires_all = ["keep_list", "lemmas"])]
        conllu: Option<PathBuf>,
        /// Curated keep-list of utterance ids.
        #[arg(long)]
        keep_list: Option<PathBuf>,
        /// Dative lemma list restricting detection.
        #[arg(long)]
        lemmas: Option<PathBuf>,
    },
    /// Detect DO/PP datives in a CoNLL-U file and profile lemmas.
    ExtractDatives {
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        lemmas: PathBuf,
        #[arg(long)]
        alternating: PathBuf,
        #[arg(long)]
        nonalternating: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build the verbhood validation set from annotated utterances.
    BuildVerbhood {
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        nonverb_slots: PathBuf,
        #[arg(long, default_value_t = 150)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the simulation experiments.
    RunExperiment {
        /// One of: nabanana, asymmetry, cross-structure, main.
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        tokenizer: Option<PathBuf>,
        /// Comma-separated model checkpoint paths.
        #[arg(long, value_delimiter = ',')]
        models: Vec<PathBuf>,
        /// Comma-separated training seeds (defaults to checkpoint metadata).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        exposures: Option<PathBuf>,
        #[arg(long)]
        givenness: Option<PathBuf>,
        #[arg(long)]
        natural: Option<PathBuf>,
        #[arg(long)]
        synthetic: Option<PathBuf>,
        #[arg(long)]
        cross_structure: Option<PathBuf>,
        #[arg(long)]
        verbhood: Option<PathBuf>,
        #[arg(long)]
        pools: Option<PathBuf>,
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        scale: Option<Scale>,
    },
    /// Convert a records JSONL file to the results CSV.
    Export {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Group a results CSV and print mean, bootstrap 95% CI, and n.
    Summarize {
        #[arg(long)]
        csv: PathBuf,
        /// Comma-separated grouping columns.
        #[arg(long, value_delimiter = ',')]
        by: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(root) = std::env::var(DATA_ROOT_ENV) {
            return PathBuf::from(root).join(path);
        }
    }
    path.to_path_buf()
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("fnv64:{:016x}", fnv64(&bytes)))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the parsed command; returns process exit status.
pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainTokenizer {
            corpus,
            vocab_size,
            out,
        } => {
            let corpus = load_corpus(resolve(&corpus), Split::Train)?;
            println!(
                "loaded {} utterances, {} words",
                corpus.len(),
                corpus.word_count()
            );
            let tok = SubwordTokenizer::train(&corpus, vocab_size)?;
            tok.save(&out)?;
            println!(
                "tokenizer: {} entries ({} base symbols, {} merges) -> {}",
                tok.vocab_size(),
                tok.base_symbol_count(),
                tok.merge_count(),
                out.display()
            );
            Ok(())
        }
        Command::TrainLm {
            corpus,
            tokenizer,
            out,
            seed,
            scale,
            model_config,
            train_config,
        } => {
            let corpus = load_corpus(resolve(&corpus), Split::Train)?;
            let tok = SubwordTokenizer::load(resolve(&tokenizer))?;
            let mc = match model_config {
                Some(p) => {
                    let text = std::fs::read_to_string(resolve(&p))
                        .map_err(|e| Error::io(&p, e))?;
                    serde_json::from_str::<ModelConfig>(&text)?
                }
                None => match scale {
                    Scale::Paper => ModelConfig::paper(tok.vocab_size()),
                    Scale::Smoke => ModelConfig::smoke(tok.vocab_size()),
                },
            };
            let tc = match train_config {
                Some(p) => {
                    let text = std::fs::read_to_string(resolve(&p))
                        .map_err(|e| Error::io(&p, e))?;
                    serde_json::from_str::<TrainConfig>(&text)?
                }
                None => match scale {
                    Scale::Paper => TrainConfig::paper(seed),
                    Scale::Smoke => TrainConfig {
                        epochs: 3,
                        batch_size: 8,
                        peak_lr: 1e-3,
                        warmup_steps: 50,
                        weight_decay: 0.0,
                        seed,
                    },
                },
            };
            println!(
                "training {} parameters for {} epochs (seed {seed})",
                mc.param_count(),
                tc.epochs
            );
            let (model, report) = lm::train_lm(&corpus, &tok, &mc, &tc)?;
            for (e, loss) in report.epoch_mean_losses.iter().enumerate() {
                println!("epoch {e}: mean loss {loss:.4}");
            }
            model.save_with_seed(&out, Some(seed))?;
            println!("checkpoint -> {}", out.display());
            Ok(())
        }
        Command::GenStimuli {
            lexicon,
            cross_items,
            out_dir,
            seed,
            scale,
            conllu,
            keep_list,
            lemmas,
        } => {
            ensure_dir(&out_dir)?;
            let lex = stimuli::Lexicon::load(resolve(&lexicon))?;
            let configs = stimuli::enumerate_feature_configs(&lex)?;
            println!(
                "feature configurations: {} theoretical, {} realizable",
                stimuli::theoretical_feature_configs().len(),
                configs.len()
            );
            let (configs, pairs_per_config, syn_per_config, cross_sets) = match scale {
                Scale::Paper => (configs, stimuli::PAIRS_PER_CONFIG, 10, 30),
                Scale::Smoke => (configs[..3].to_vec(), 2, 2, 2),
            };
            let exposures = stimuli::generate_exposures(
                &lex,
                &configs,
                pairs_per_config,
                stimuli::NOVEL_SURFACE,
                seed,
            )?;
            stimuli::save_jsonl(&exposures, out_dir.join("exposures.jsonl"))?;
            println!("exposure stimuli: {}", exposures.len());

            let given = stimuli::add_givenness(&exposures, &stimuli::GIVENNESS_TEMPLATES)?;
            stimuli::save_jsonl(&given, out_dir.join("givenness.jsonl"))?;
            println!("givenness stimuli: {}", given.len());

            let pairs = stimuli::generate_synthetic_generalization(
                &lex,
                &exposures,
                syn_per_config,
                stimuli::NOVEL_SURFACE,
                seed,
            )?;
            stimuli::save_jsonl(&pairs, out_dir.join("synthetic_pairs.jsonl"))?;
            println!("synthetic generalization pairs: {}", pairs.len());

            let items = stimuli::CrossStructureItems::load(resolve(&cross_items))?;
            let cross = stimuli::build_cross_structure_stimuli(
                &items,
                cross_sets,
                stimuli::NOVEL_SURFACE,
                seed,
            )?;
            stimuli::save_jsonl(&cross, out_dir.join("cross_structure.jsonl"))?;
            println!("cross-structure stimuli: {}", cross.len());

            if let (Some(conllu), Some(keep), Some(lemmas)) = (&conllu, &keep_list, &lemmas) {
                let parses = dative::parse_conllu_file(resolve(conllu))?;
                let lemma_set = dative::load_lemma_list(resolve(lemmas))?;
                let detections = dative::detect_all(&parses, &lemma_set);
                let keep = stimuli::load_keep_list(resolve(keep))?;
                let natural = stimuli::assemble_natural_generalization(
                    &parses,
                    &detections,
                    &keep,
                    stimuli::NOVEL_SURFACE,
                )?;
                stimuli::save_jsonl(&natural, out_dir.join("natural_gen.jsonl"))?;
                println!("natural generalization items: {}", natural.len());
            }

            let meta = BTreeMap::from([
                ("seed".to_string(), seed.to_string()),
                ("scale".to_string(), format!("{scale:?}").to_lowercase()),
                ("lexicon_hash".to_string(), file_hash(&resolve(&lexicon))?),
            ]);
            write_json(&out_dir.join("metadata.json"), &meta)?;
            Ok(())
        }
        Command::ExtractDatives {
            conllu,
            lemmas,
            alternating,
            nonalternating,
            out_dir,
        } => {
            ensure_dir(&out_dir)?;
            let parses = dative::parse_conllu_file(resolve(&conllu))?;
            let lemma_set = dative::load_lemma_list(resolve(&lemmas))?;
            let instances = dative::detect_all(&parses, &lemma_set);
            let do_utts = dative::utterance_count(&instances, Construction::Do);
            let pp_utts = dative::utterance_count(&instances, Construction::Pp);
            println!(
                "{} instances across {} utterances (DO: {do_utts} utterances, PP: {pp_utts})",
                instances.len(),
                parses.len()
            );
            stimuli::save_jsonl(&instances, out_dir.join("instances.jsonl"))?;
            let profiles = dative::profile_alternation(
                &instances,
                &dative::load_lemma_list(resolve(&alternating))?,
                &dative::load_lemma_list(resolve(&nonalternating))?,
            )?;
            write_json(&out_dir.join("profiles.json"), &profiles)?;
            let naba = profiles
                .iter()
                .filter(|p| p.class == dative::AlternationClass::Naba)
                .count();
            let nana = profiles
                .iter()
                .filter(|p| p.class == dative::AlternationClass::Nana)
                .count();
            println!("profiles: {} lemmas ({naba} naba, {nana} nana)", profiles.len());
            Ok(())
        }
        Command::BuildVerbhood {
            conllu,
            nonverb_slots,
            n,
            seed,
            out,
        } => {
            let parses = dative::parse_conllu_file(resolve(&conllu))?;
            let slots = verbhood::load_nonverb_slots(resolve(&nonverb_slots))?;
            let vset = verbhood::build_verbhood_set(&parses, &slots, n, seed)?;
            vset.save_jsonl(&out)?;
            println!(
                "verbhood set: {} + {} sentences -> {}",
                vset.len_per_class(),
                vset.len_per_class(),
                out.display()
            );
            Ok(())
        }
        Command::RunExperiment {
            name,
            config,
            tokenizer,
            models,
            seeds,
            corpus,
            exposures,
            givenness,
            natural,
            synthetic,
            cross_structure,
            verbhood: verbhood_path,
            pools,
            profiles,
            out_dir,
            scale,
        } => {
            let file_cfg = match config {
                Some(p) => RunConfig::load(&resolve(&p))?,
                None => RunConfig::default(),
            };
            let pick = |flag: Option<PathBuf>, cfg: &Option<PathBuf>| -> Option<PathBuf> {
                flag.or_else(|| cfg.clone())
            };
            let models = if models.is_empty() {
                file_cfg.models.clone()
            } else {
                models
            };
            let seeds = if seeds.is_empty() {
                file_cfg.seeds.clone()
            } else {
                seeds
            };
            let scale = scale.or(file_cfg.scale).unwrap_or_default();
            let out_dir = pick(out_dir, &file_cfg.out_dir)
                .ok_or_else(|| Error::Cli("missing --out-dir".into()))?;
            ensure_dir(&out_dir)?;

            run_experiment(RunExperimentArgs {
                name,
                tokenizer: pick(tokenizer, &file_cfg.tokenizer),
                models,
                seeds,
                corpus: pick(corpus, &file_cfg.corpus),
                exposures: pick(exposures, &file_cfg.exposures),
                givenness: pick(givenness, &file_cfg.givenness),
                natural: pick(natural, &file_cfg.natural),
                synthetic: pick(synthetic, &file_cfg.synthetic),
                cross_structure: pick(cross_structure, &file_cfg.cross_structure),
                verbhood: pick(verbhood_path, &file_cfg.verbhood),
                pools: pick(pools, &file_cfg.pools),
                profiles: pick(profiles, &file_cfg.profiles),
                out_dir,
                scale,
            })
        }
        Command::Export { records, out } => {
            let records: Vec<TrialRecord> = stimuli::load_jsonl(resolve(&records))?;
            export_csv(&records, &out)?;
            println!("{} records -> {}", records.len(), out.display());
            Ok(())
        }
        Command::Summarize {
            csv,
            by,
            out,
            resamples,
            seed,
        } => {
            let records = parse_csv(resolve(&csv))?;
            let keys: Vec<&str> = by.iter().map(|s| s.as_str()).collect();
            let table = summarize_records(&records, &keys, resamples, seed)?;
            print!("{table}");
            if let Some(out) = out {
                table.to_csv(&out)?;
            }
            Ok(())
        }
    }
}

struct RunExperimentArgs {
    name: String,
    tokenizer: Option<PathBuf>,
    models: Vec<PathBuf>,
    seeds: Vec<u64>,
    corpus: Option<PathBuf>,
    exposures: Option<PathBuf>,
    givenness: Option<PathBuf>,
    natural: Option<PathBuf>,
    synthetic: Option<PathBuf>,
    cross_structure: Option<PathBuf>,
    verbhood: Option<PathBuf>,
    pools: Option<PathBuf>,
    profiles: Option<PathBuf>,
    out_dir: PathBuf,
    scale: Scale,
}

fn need(opt: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    opt.clone()
        .map(|p| resolve(&p))
        .ok_or_else(|| Error::Cli(format!("missing --{flag}")))
}

fn load_models(paths: &[PathBuf], seeds: &[u64]) -> Result<Vec<(u64, LanguageModel)>> {
    if paths.is_empty() {
        return Err(Error::Cli("no model checkpoints given".into()));
    }
    if !seeds.is_empty() && seeds.len() != paths.len() {
        return Err(Error::Cli(format!(
            "{} seeds given for {} models",
            seeds.len(),
            paths.len()
        )));
    }
    let mut out = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let p = resolve(p);
        let model = LanguageModel::load(&p)?;
        let seed = match seeds.get(i) {
            Some(s) => *s,
            None => lm::read_train_seed(&p)?.ok_or_else(|| {
                Error::Cli(format!(
                    "{}: checkpoint has no train seed; pass --seeds",
                    p.display()
                ))
            })?,
        };
        out.push((seed, model));
    }
    Ok(out)
}

fn trial_settings(scale: Scale) -> TrialSettings {
    match scale {
        Scale::Paper => TrialSettings::default(),
        Scale::Smoke => TrialSettings::smoke(),
    }
}

fn cap<T: Clone>(items: Vec<T>, scale: Scale, smoke_cap: usize) -> Vec<T> {
    match scale {
        Scale::Paper => items,
        Scale::Smoke => items.into_iter().take(smoke_cap).collect(),
    }
}

fn count_nonfinite(records: &[TrialRecord]) -> usize {
    records
        .iter()
        .flat_map(|r| &r.gen_means)
        .filter(|g| !g.mean_logprob_per_token.is_finite())
        .count()
}

fn run_experiment(args: RunExperimentArgs) -> Result<()> {
    let tok = SubwordTokenizer::load(need(&args.tokenizer, "tokenizer")?)?;
    let mut tok = tok;
    if tok.novel_surface().is_none() {
        tok.set_novel_surface(stimuli::NOVEL_SURFACE);
    }
    let models = load_models(&args.models, &args.seeds)?;
    let settings = trial_settings(args.scale);
    let out_dir = &args.out_dir;

    let mut meta: BTreeMap<String, String> = BTreeMap::from([
        ("experiment".to_string(), args.name.clone()),
        (
            "scale".to_string(),
            format!("{:?}", args.scale).to_lowercase(),
        ),
        (
            "seeds".to_string(),
            models
                .iter()
                .map(|(s, _)| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        (
            "parser_version".to_string(),
            "external (see conllu provenance)".to_string(),
        ),
    ]);

    match args.name.as_str() {
        "nabanana" => {
            let pools = stimuli::load_verb_pools(need(&args.pools, "pools")?)?;
            let corpus_path = need(&args.corpus, "corpus")?;
            let corpus = load_corpus(&corpus_path, Split::Train)?;
            meta.insert("corpus_hash".into(), file_hash(&corpus_path)?);
            meta.insert(
                "lemma_list_note".into(),
                "curated verb table is ground truth: 12 naba and 14 nana lemmas give 840 \
                 and 980 test items respectively"
                    .into(),
            );
            let items = stimuli::build_nabanana_tests(&pools, &corpus)?;
            let profiles: Vec<dative::AlternationProfile> = match &args.profiles {
                Some(p) => {
                    let text = std::fs::read_to_string(resolve(p))
                        .map_err(|e| Error::io(p, e))?;
                    serde_json::from_str(&text)?
                }
                None => Vec::new(),
            };
            let (records, summary) = run_nabanana(&models, &tok, &items, &profiles)?;
            export_delta_csv(&records, out_dir.join("deltas.csv"))?;
            summary.to_csv(out_dir.join("summary.csv"))?;
            write_json(&out_dir.join("metadata.json"), &meta)?;
            print!("{summary}");
            println!(
                "{} delta records -> {}",
                records.len(),
                out_dir.join("deltas.csv").display()
            );
            Ok(())
        }
        "asymmetry" | "cross-structure" | "main" => {
            let vset = VerbhoodSet::load_jsonl(need(&args.verbhood, "verbhood")?)?;
            let natural: Vec<GeneralizationItem> =
                stimuli::load_jsonl(need(&args.natural, "natural")?)?;
            let records = match args.name.as_str() {
                "asymmetry" => {
                    let exposures: Vec<ExposureStimulus> =
                        stimuli::load_jsonl(need(&args.exposures, "exposures")?)?;
                    let exposures = cap(exposures, args.scale, 8);
                    let synthetic: Vec<SyntheticPair> =
                        stimuli::load_jsonl(need(&args.synthetic, "synthetic")?)?;
                    run_asymmetry(
                        &models, &tok, &exposures, &natural, &synthetic, &vset, &settings,
                    )?
                }
                "cross-structure" => {
                    let cross: Vec<stimuli::CrossStructureStimulus> =
                        stimuli::load_jsonl(need(&args.cross_structure, "cross-structure")?)?;
                    let cross = cap(cross, args.scale, 24);
                    let natural_do: Vec<GeneralizationItem> = natural
                        .iter()
                        .filter(|g| g.construction == Construction::Do)
                        .cloned()
                        .collect();
                    run_cross_structure(&models, &tok, &cross, &natural_do, &vset, &settings)?
                }
                "main" => {
                    let mut exposures: Vec<ExposureStimulus> =
                        stimuli::load_jsonl(need(&args.exposures, "exposures")?)?;
                    if let Some(g) = &args.givenness {
                        let given: Vec<ExposureStimulus> = stimuli::load_jsonl(resolve(g))?;
                        exposures.extend(given);
                    }
                    let exposures = cap(exposures, args.scale, 8);
                    run_main_simulation(&models, &tok, &exposures, &natural, &vset, &settings)?
                }
                _ => unreachable!(),
            };
            meta.insert(
                "excluded_nonfinite".into(),
                count_nonfinite(&records).to_string(),
            );
            stimuli::save_jsonl(&records, out_dir.join("records.jsonl"))?;
            export_csv(&records, out_dir.join("results.csv"))?;
            let summary = summarize_records(
                &records,
                &["exposure_construction", "gen_construction", "gen_source"],
                10_000,
                0,
            )?;
            summary.to_csv(out_dir.join("summary.csv"))?;
            write_json(&out_dir.join("metadata.json"), &meta)?;
            print!("{summary}");
            println!(
                "{} trial records -> {}",
                records.len(),
                out_dir.join("results.csv").display()
            );
            Ok(())
        }
        other => Err(Error::Cli(format!(
            "unknown experiment {other:?}; expected nabanana, asymmetry, cross-structure, or main"
        ))),
    }
}

/// Entry point for the binary.
pub fn main_entry() -> std::process::ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
