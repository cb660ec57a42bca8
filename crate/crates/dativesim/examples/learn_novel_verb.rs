//! One full novel-verb learning trial: Gaussian initialization, embedding-only
//! SGD over the learning-rate grid, verbhood-based selection.
//!
//! ```bash
//! cargo run --release --example learn_novel_verb
//! ```

use dativesim::corpus::{Split, UtteranceCorpus};
use dativesim::dative::Construction;
use dativesim::lm::{LanguageModel, ModelConfig};
use dativesim::novel::{init_novel_embedding, learn_exposure, ExposureTrial, NovelToken};
use dativesim::stimuli::{
    enumerate_feature_configs, generate_exposures, Lexicon, NOVEL_SURFACE,
};
use dativesim::tokenizer::SubwordTokenizer;
use dativesim::verbhood::{SlotClass, SlotSentence, VerbhoodSet};

fn main() -> dativesim::Result<()> {
    let corpus = UtteranceCorpus::from_utterances(
        [
            "she gave the ball to me",
            "you gave papa an apple",
            "mommy found the cup",
            "he wants a ball",
            "daddy sent a letter to grandma",
        ],
        Split::Train,
    )?;
    let mut tok = SubwordTokenizer::train(&corpus, 160)?;
    let novel = NovelToken::install(&mut tok, NOVEL_SURFACE);
    println!("novel token {:?} -> reserved id {}", novel.surface, novel.id);

    let mut model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 11)?;
    let row0 = init_novel_embedding(&model, 21)?;
    model.install_novel_row_f64(novel.id, &row0)?;

    let vset = VerbhoodSet::new(
        vec![
            SlotSentence {
                text: "she ___ the ball".into(),
                slot_index: 1,
                class: SlotClass::VerbExpecting,
            },
            SlotSentence {
                text: "mommy ___ the cup".into(),
                slot_index: 1,
                class: SlotClass::VerbExpecting,
            },
        ],
        vec![
            SlotSentence {
                text: "he wants a ___".into(),
                slot_index: 3,
                class: SlotClass::NonVerbExpecting,
            },
            SlotSentence {
                text: "you gave papa an ___".into(),
                slot_index: 4,
                class: SlotClass::NonVerbExpecting,
            },
        ],
    )?;

    // pick one generated PP exposure for the trial
    let lexicon = Lexicon::load(format!("{}/data/lexicon.json", env!("CARGO_MANIFEST_DIR")))?;
    let configs = enumerate_feature_configs(&lexicon)?;
    let exposures = generate_exposures(&lexicon, &configs[..1], 1, NOVEL_SURFACE, 1)?;
    let stimulus = exposures
        .into_iter()
        .find(|s| s.construction == Construction::Pp)
        .unwrap();
    println!("exposure: {:?}", stimulus.text);

    let trial = ExposureTrial::new(stimulus, 0).with_grid(vec![0.01, 0.05, 0.1], 10);
    let snapshot = model.snapshot()?;
    let state = learn_exposure(&model, &tok, &trial, &vset.encode(&tok)?)?;
    println!(
        "selected lr {} at epoch {} with verbhood delta {:+.4} ({} grid points)",
        state.best_lr,
        state.best_epoch,
        state.verbhood_delta,
        state.trace.len()
    );

    // install the learned row for scoring, then restore for the next trial
    model.install_novel_row_f64(novel.id, &state.embedding)?;
    let alt = model.score_sentence(&tok, "she [pilked] me the ball.")?;
    println!("alternate-form mean logprob per token: {:.4}", alt.mean_per_token);
    model.restore(&snapshot)?;
    Ok(())
}
