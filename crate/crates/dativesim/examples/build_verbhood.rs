//! Build the verbhood validation set and compute delta and accuracy for an
//! untrained model (which should sit near chance).
//!
//! ```bash
//! cargo run --example build_verbhood
//! ```

use dativesim::corpus::{Split, UtteranceCorpus};
use dativesim::dative::parse_conllu_file;
use dativesim::lm::{LanguageModel, ModelConfig};
use dativesim::tokenizer::SubwordTokenizer;
use dativesim::verbhood::{
    build_verbhood_set, load_nonverb_slots, verbhood_accuracy, verbhood_delta, PairingMode,
};

fn main() -> dativesim::Result<()> {
    let root = env!("CARGO_MANIFEST_DIR");
    let parses = parse_conllu_file(format!("{root}/tests/data/dative_fixture.conllu"))?;
    let slots = load_nonverb_slots(format!("{root}/tests/data/smoke_nonverb_slots.txt"))?;

    let vset = build_verbhood_set(&parses, &slots, 4, 0)?;
    println!("verbhood set: {} + {} sentences", vset.len_per_class(), vset.len_per_class());
    for s in vset.verb_expecting().iter().take(2) {
        println!("  verb-expecting:     {:?}", s.text);
    }
    for s in vset.nonverb_expecting().iter().take(2) {
        println!("  non-verb-expecting: {:?}", s.text);
    }

    let corpus = UtteranceCorpus::from_utterances(
        parses.iter().map(|p| p.text()),
        Split::Validation,
    )?;
    let mut tok = SubwordTokenizer::train(&corpus, 160)?;
    tok.set_novel_surface("[pilked]");
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 2)?;

    println!("delta = {:+.4}", verbhood_delta(&model, &tok, &vset)?);
    println!(
        "accuracy (index-paired) = {:.2}",
        verbhood_accuracy(&model, &tok, &vset, PairingMode::IndexPaired { seed: 0 })?
    );
    println!(
        "accuracy (all pairs)    = {:.2}",
        verbhood_accuracy(&model, &tok, &vset, PairingMode::AllPairs)?
    );
    Ok(())
}
