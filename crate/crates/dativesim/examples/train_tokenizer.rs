//! Train the shared BPE tokenizer on a small corpus and show the roundtrip.
//!
//! ```bash
//! cargo run --example train_tokenizer
//! ```

use dativesim::corpus::{Split, UtteranceCorpus};
use dativesim::tokenizer::SubwordTokenizer;

fn main() -> dativesim::Result<()> {
    let corpus = UtteranceCorpus::from_utterances(
        [
            "she gave the ball to me",
            "you gave papa an apple",
            "do you see mommy and the ball?",
            "look it's daddy and the cup.",
            "the dog wants a sock",
        ],
        Split::Train,
    )?;
    println!(
        "corpus: {} utterances, {} words",
        corpus.len(),
        corpus.word_count()
    );

    let mut tok = SubwordTokenizer::train(&corpus, 160)?;
    println!(
        "tokenizer: {} entries ({} base symbols + {} merges + {} specials)",
        tok.vocab_size(),
        tok.base_symbol_count(),
        tok.merge_count(),
        tok.special_count()
    );

    tok.set_novel_surface("[pilked]");
    for text in ["she gave the ball to me", "she [pilked] the ball to me"] {
        let ids = tok.encode(text);
        println!("{text:?} -> {ids:?} -> {:?}", tok.decode(&ids)?);
        assert_eq!(tok.decode(&ids)?, text);
    }
    Ok(())
}
