//! Per-token log-probability scoring under the next-token objective.
//!
//! ```bash
//! cargo run --example score_sentences
//! ```

use dativesim::corpus::{Split, UtteranceCorpus};
use dativesim::lm::{mean_logprob_per_token, LanguageModel, ModelConfig};
use dativesim::tokenizer::SubwordTokenizer;

fn main() -> dativesim::Result<()> {
    let corpus = UtteranceCorpus::from_utterances(
        ["she gave the ball to me", "you gave papa an apple"],
        Split::Train,
    )?;
    let tok = SubwordTokenizer::train(&corpus, 128)?;
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 3)?;

    let score = model.score_sentence(&tok, "she gave the ball to me")?;
    println!("n_scored = {}", score.n_scored);
    println!("per-token logprobs (nats): {:?}", score.per_token_logprobs);
    println!(
        "total {:.4}, mean per token {:.4}",
        score.total, score.mean_per_token
    );

    let texts = ["she gave the ball to me", "you gave papa an apple"];
    println!(
        "aggregate mean per token over {} sentences: {:.4}",
        texts.len(),
        mean_logprob_per_token(&model, &tok, &texts)?
    );
    Ok(())
}
