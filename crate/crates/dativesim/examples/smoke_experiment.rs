//! End-to-end smoke run of the asymmetry experiment: tokenizer, base model,
//! stimuli, novel-verb trials, summary table, CSV export.
//!
//! ```bash
//! cargo run --release --example smoke_experiment
//! ```

use dativesim::corpus::{load_corpus, Split};
use dativesim::experiments::{
    export_csv, run_asymmetry, summarize_records, TrialSettings,
};
use dativesim::lm::{train_lm, ModelConfig, TrainConfig};
use dativesim::stimuli::{
    enumerate_feature_configs, generate_exposures, generate_synthetic_generalization,
    GenSource, GeneralizationItem, Lexicon, NOVEL_SURFACE,
};
use dativesim::dative::Construction;
use dativesim::tokenizer::SubwordTokenizer;
use dativesim::verbhood::{SlotClass, SlotSentence, VerbhoodSet};

fn main() -> dativesim::Result<()> {
    let root = env!("CARGO_MANIFEST_DIR");
    let corpus = load_corpus(format!("{root}/tests/data/smoke_corpus.txt"), Split::Train)?;
    let mut tok = SubwordTokenizer::train(&corpus, 384)?;
    tok.set_novel_surface(NOVEL_SURFACE);

    let mc = ModelConfig::smoke(tok.vocab_size());
    let tc = TrainConfig {
        epochs: 2,
        batch_size: 8,
        peak_lr: 1e-3,
        warmup_steps: 20,
        weight_decay: 0.0,
        seed: 1,
    };
    println!("training smoke model ({} params)...", mc.param_count());
    let (model, _) = train_lm(&corpus, &tok, &mc, &tc)?;

    let lexicon = Lexicon::load(format!("{root}/data/lexicon.json"))?;
    let configs = enumerate_feature_configs(&lexicon)?;
    let exposures = generate_exposures(&lexicon, &configs[..2], 2, NOVEL_SURFACE, 3)?;
    let synthetic = generate_synthetic_generalization(&lexicon, &exposures, 2, NOVEL_SURFACE, 5)?;
    let natural = vec![
        GeneralizationItem {
            id: "n1".into(),
            construction: Construction::Do,
            source: GenSource::Natural,
            text: "you [pilked] papa an apple".into(),
        },
        GeneralizationItem {
            id: "n2".into(),
            construction: Construction::Pp,
            source: GenSource::Natural,
            text: "she [pilked] the ball to me".into(),
        },
    ];
    let vset = VerbhoodSet::new(
        vec![
            SlotSentence {
                text: "she ___ the ball".into(),
                slot_index: 1,
                class: SlotClass::VerbExpecting,
            },
            SlotSentence {
                text: "mommy ___ a letter".into(),
                slot_index: 1,
                class: SlotClass::VerbExpecting,
            },
        ],
        vec![
            SlotSentence {
                text: "give us the ___".into(),
                slot_index: 3,
                class: SlotClass::NonVerbExpecting,
            },
            SlotSentence {
                text: "show them a ___".into(),
                slot_index: 3,
                class: SlotClass::NonVerbExpecting,
            },
        ],
    )?;

    let models = vec![(tc.seed, model)];
    let records = run_asymmetry(
        &models,
        &tok,
        &exposures,
        &natural,
        &synthetic,
        &vset,
        &TrialSettings::smoke(),
    )?;
    println!("{} trial records", records.len());

    let summary = summarize_records(
        &records,
        &["exposure_construction", "gen_source"],
        2000,
        0,
    )?;
    print!("{summary}");

    let out = std::env::temp_dir().join("dativesim_smoke_results.csv");
    export_csv(&records, &out)?;
    println!("results -> {}", out.display());
    Ok(())
}
