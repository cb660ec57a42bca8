//! Train a tiny decoder-only model from scratch and watch the loss fall.
//!
//! ```bash
//! cargo run --release --example train_lm
//! ```

use dativesim::corpus::{Split, UtteranceCorpus};
use dativesim::lm::{eval_mean_loss, train_lm, ModelConfig, TrainConfig};
use dativesim::tokenizer::SubwordTokenizer;

fn main() -> dativesim::Result<()> {
    // synthetic toy corpus; real runs load a corpus file instead
    let subjects = ["the dog", "the cat", "mommy", "daddy"];
    let verbs = ["sees", "likes", "wants", "finds"];
    let objects = ["the ball", "a cup", "the book", "a sock"];
    let mut lines = Vec::new();
    for i in 0..400 {
        lines.push(format!(
            "{} {} {}",
            subjects[i % 4],
            verbs[(i / 4) % 4],
            objects[(i / 16) % 4]
        ));
    }
    let corpus = UtteranceCorpus::from_utterances(lines, Split::Train)?;
    let tok = SubwordTokenizer::train(&corpus, 128)?;

    let mc = ModelConfig::smoke(tok.vocab_size());
    let tc = TrainConfig {
        epochs: 3,
        batch_size: 16,
        peak_lr: 1e-3,
        warmup_steps: 20,
        weight_decay: 0.0,
        seed: 7,
    };
    println!("{} parameters, {} epochs", mc.param_count(), tc.epochs);
    let (model, report) = train_lm(&corpus, &tok, &mc, &tc)?;
    for (epoch, loss) in report.epoch_mean_losses.iter().enumerate() {
        println!("epoch {epoch}: mean loss {loss:.4}");
    }
    println!(
        "held-in mean loss after training: {:.4}",
        eval_mean_loss(&model, &tok, &corpus)?
    );

    let path = std::env::temp_dir().join("dativesim_example_model.safetensors");
    model.save_with_seed(&path, Some(tc.seed))?;
    println!("checkpoint -> {}", path.display());
    Ok(())
}
