use candle_core::{Device, Tensor};

use crate::corpus::{Split, UtteranceCorpus};
use crate::tokenizer::SubwordTokenizer;

use super::params::{BlockParams, LmParams};
use super::*;

fn toy_corpus(n: usize) -> UtteranceCorpus {
    let subjects = ["the dog", "the cat", "mommy", "daddy", "the bear"];
    let verbs = ["sees", "likes", "wants", "finds"];
    let objects = ["the ball", "a cup", "the book", "a sock"];
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let s = subjects[i % subjects.len()];
        let v = verbs[(i / subjects.len()) % verbs.len()];
        let o = objects[(i / 3) % objects.len()];
        lines.push(format!("{s} {v} {o}"));
    }
    UtteranceCorpus::from_utterances(lines, Split::Train).unwrap()
}

fn small_setup(vocab_budget: usize) -> (UtteranceCorpus, SubwordTokenizer) {
    let corpus = toy_corpus(120);
    let tok = SubwordTokenizer::train(&corpus, vocab_budget).unwrap();
    (corpus, tok)
}

/// All embedding rows equal, so every position gets identical logits.
fn uniform_model(vocab: usize) -> LanguageModel {
    let cfg = ModelConfig {
        layers: 1,
        heads: 1,
        embed_dim: 8,
        ffn_dim: 8,
        vocab_size: vocab,
        max_seq_len: 32,
        dropout: 0.0,
        layer_norm_eps: 1e-5,
        precision: Precision::F32,
    };
    let mut model = LanguageModel::init(cfg, 7).unwrap();
    let row = model.embedding().narrow(0, 0, 1).unwrap();
    let emb = row
        .broadcast_as((vocab, 8))
        .unwrap()
        .contiguous()
        .unwrap();
    model.set_embedding(emb).unwrap();
    model
}

#[test]
fn full_scale_config_param_count_within_5_percent() {
    let cfg = ModelConfig::paper(8192);
    let count = cfg.param_count() as f64;
    assert!((count - 8.4e6).abs() / 8.4e6 < 0.05, "count = {count}");
}

#[test]
fn zero_layer_config_rejected() {
    let mut cfg = ModelConfig::paper(8192);
    cfg.layers = 0;
    assert!(cfg.validate().is_err());
    assert!(LanguageModel::init(cfg, 0).is_err());
}

#[test]
fn uniform_logits_score_minus_log_vocab() {
    let vocab = 16;
    let model = uniform_model(vocab);
    let expected = -(vocab as f64).ln();
    let score = model.score_ids(&[0, 5, 9, 1]).unwrap();
    assert_eq!(score.n_scored, 3);
    for lp in &score.per_token_logprobs {
        assert!((lp - expected).abs() < 1e-5, "lp = {lp}");
    }
    assert!((score.mean_per_token - expected).abs() < 1e-5);
}

#[test]
fn causal_prefix_scores_unchanged_by_appending() {
    let (_, tok) = small_setup(64);
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 3).unwrap();
    let short = tok.encode("the dog sees the ball");
    let long = tok.encode("the dog sees the ball and more");
    let a = model.score_ids(&short).unwrap();
    let b = model.score_ids(&long).unwrap();
    // everything before the shorter sequence's eos must match
    for i in 0..a.per_token_logprobs.len() - 1 {
        assert!(
            (a.per_token_logprobs[i] - b.per_token_logprobs[i]).abs() < 1e-9,
            "position {i} differs"
        );
    }
}

#[test]
fn next_token_distributions_sum_to_one() {
    let (_, tok) = small_setup(64);
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 11).unwrap();
    let ids = tok.encode("mommy finds a cup");
    for row in model.next_token_probs(&ids).unwrap() {
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-5, "sum = {sum}");
    }
}

#[test]
fn total_is_sum_of_per_token() {
    let (_, tok) = small_setup(64);
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 5).unwrap();
    let s = model.score_sentence(&tok, "the cat wants a sock").unwrap();
    let sum: f64 = s.per_token_logprobs.iter().sum();
    assert!((s.total - sum).abs() < 1e-9);
    assert!((s.mean_per_token - s.total / s.n_scored as f64).abs() < 1e-12);
}

/// Fixture with zeroed attention/FFN outputs: the residual stream stays equal
/// to the token embedding, so logits can be computed by hand through the
/// final layer norm and the tied projection.
#[test]
fn hand_computed_softmax_chain_on_two_token_vocab() {
    let dev = Device::Cpu;
    let eps = 1e-5;
    let cfg = ModelConfig {
        layers: 1,
        heads: 1,
        embed_dim: 2,
        ffn_dim: 2,
        vocab_size: 2,
        max_seq_len: 8,
        dropout: 0.0,
        layer_norm_eps: eps,
        precision: Precision::F64,
    };
    let zeros2 = || Tensor::zeros(2, candle_core::DType::F64, &dev).unwrap();
    let zeros22 = || Tensor::zeros((2, 2), candle_core::DType::F64, &dev).unwrap();
    let ones2 = || Tensor::ones(2, candle_core::DType::F64, &dev).unwrap();
    let params = LmParams {
        embed: Tensor::from_vec(vec![1f64, 0., 0., 1.], (2, 2), &dev).unwrap(),
        pos: Tensor::zeros((8, 2), candle_core::DType::F64, &dev).unwrap(),
        blocks: vec![BlockParams {
            ln1_w: ones2(),
            ln1_b: zeros2(),
            wq: zeros22(),
            bq: zeros2(),
            wk: zeros22(),
            bk: zeros2(),
            wv: zeros22(),
            bv: zeros2(),
            wo: zeros22(),
            bo: zeros2(),
            ln2_w: ones2(),
            ln2_b: zeros2(),
            w1: zeros22(),
            b1: zeros2(),
            w2: zeros22(),
            b2: zeros2(),
        }],
        ln_f_w: ones2(),
        ln_f_b: zeros2(),
    };
    let model = LanguageModel::from_parts(cfg, params, dev);

    // By hand: embedding of either token is one-hot, mean 0.5, variance 0.25,
    // normalized value a = 0.5 / sqrt(0.25 + eps). Logits are (a, -a) after
    // token 0 and (-a, a) after token 1, so the logprob of the *other* token
    // is -a - ln(exp(a) + exp(-a)) at every position of [0, 1, 0].
    let a = 0.5 / (0.25f64 + eps).sqrt();
    let expected = -a - ((a).exp() + (-a).exp()).ln();
    let score = model.score_ids(&[0, 1, 0]).unwrap();
    assert_eq!(score.n_scored, 2);
    for lp in &score.per_token_logprobs {
        assert!((lp - expected).abs() < 1e-12, "lp = {lp}, expected {expected}");
    }
}

#[test]
fn init_is_seed_deterministic() {
    let cfg = ModelConfig::smoke(32);
    let a = LanguageModel::init(cfg.clone(), 42).unwrap();
    let b = LanguageModel::init(cfg.clone(), 42).unwrap();
    let c = LanguageModel::init(cfg, 43).unwrap();
    for ((_, ta), (_, tb)) in a.named_tensors().iter().zip(b.named_tensors().iter()) {
        assert_eq!(tensor_bits(ta).unwrap(), tensor_bits(tb).unwrap());
    }
    assert_ne!(
        tensor_bits(a.embedding()).unwrap(),
        tensor_bits(c.embedding()).unwrap()
    );
}

#[test]
fn training_is_seed_deterministic_and_reduces_loss() {
    let (corpus, tok) = small_setup(64);
    let mc = ModelConfig {
        layers: 2,
        heads: 2,
        embed_dim: 32,
        ffn_dim: 64,
        vocab_size: tok.vocab_size(),
        max_seq_len: 32,
        dropout: 0.0,
        layer_norm_eps: 1e-5,
        precision: Precision::F32,
    };
    let tc = TrainConfig {
        epochs: 2,
        batch_size: 8,
        peak_lr: 1e-3,
        warmup_steps: 5,
        weight_decay: 0.0,
        seed: 17,
    };
    let (m1, r1) = train_lm(&corpus, &tok, &mc, &tc).unwrap();
    let (m2, _) = train_lm(&corpus, &tok, &mc, &tc).unwrap();
    for ((_, ta), (_, tb)) in m1.named_tensors().iter().zip(m2.named_tensors().iter()) {
        assert_eq!(tensor_bits(ta).unwrap(), tensor_bits(tb).unwrap());
    }
    assert!(
        r1.epoch_mean_losses.last().unwrap() < r1.epoch_mean_losses.first().unwrap(),
        "losses: {:?}",
        r1.epoch_mean_losses
    );

    let init_model = LanguageModel::init(m1.config().clone(), tc.seed).unwrap();
    let before = train::eval_mean_loss(&init_model, &tok, &corpus).unwrap();
    let after = train::eval_mean_loss(&m1, &tok, &corpus).unwrap();
    assert!(after < before, "after {after} !< before {before}");
}

#[test]
fn batch_scoring_matches_single_scoring() {
    let (_, tok) = small_setup(64);
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 23).unwrap();
    let texts = [
        "the dog sees the ball",
        "mommy wants a sock",
        "the bear likes the book and the cup",
    ];
    let seqs: Vec<Vec<u32>> = texts.iter().map(|t| tok.encode(t)).collect();
    let batched = model.score_batch_ids(&seqs).unwrap();
    for (seq, b) in seqs.iter().zip(&batched) {
        let single = model.score_ids(seq).unwrap();
        assert_eq!(single.n_scored, b.n_scored);
        for (x, y) in single.per_token_logprobs.iter().zip(&b.per_token_logprobs) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn mean_logprob_matches_brute_force_loop() {
    let (_, tok) = small_setup(64);
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 29).unwrap();
    let texts: Vec<String> = (0..10)
        .map(|i| format!("the dog sees the ball {i}"))
        .collect();
    let fast = mean_logprob_per_token(&model, &tok, &texts).unwrap();
    let mut acc = 0.0;
    for t in &texts {
        acc += model.score_sentence(&tok, t).unwrap().mean_per_token;
    }
    let slow = acc / texts.len() as f64;
    assert!((fast - slow).abs() < 1e-9);

    let single = mean_logprob_per_token(&model, &tok, &texts[..1]).unwrap();
    let s0 = model.score_sentence(&tok, &texts[0]).unwrap().mean_per_token;
    assert!((single - s0).abs() < 1e-12);

    let empty: Vec<String> = vec![];
    assert!(mean_logprob_per_token(&model, &tok, &empty).is_err());
}

#[test]
fn empty_text_scoring_is_an_error() {
    let (_, tok) = small_setup(64);
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 1).unwrap();
    assert!(model.score_sentence(&tok, "   ").is_err());
}

#[test]
fn overlong_sequences_are_truncated() {
    let (_, tok) = small_setup(64);
    let mut cfg = ModelConfig::smoke(tok.vocab_size());
    cfg.max_seq_len = 8;
    let model = LanguageModel::init(cfg, 2).unwrap();
    let long_text = "the dog sees the ball and the cup and the book and the sock";
    let ids = tok.encode(long_text);
    assert!(ids.len() > 9);
    let score = model.score_ids(&ids).unwrap();
    assert_eq!(score.n_scored, 8);
}

#[test]
fn snapshot_restore_is_bitwise() {
    let (corpus, tok) = small_setup(64);
    let mc = ModelConfig::smoke(tok.vocab_size());
    let tc = TrainConfig {
        epochs: 1,
        batch_size: 8,
        peak_lr: 1e-3,
        warmup_steps: 2,
        weight_decay: 0.0,
        seed: 3,
    };
    let (mut model, _) = train_lm(&corpus, &tok, &mc, &tc).unwrap();
    let snap = model.snapshot().unwrap();
    // perturb the embedding, then restore
    let zeros = Tensor::zeros(
        (mc.vocab_size, mc.embed_dim),
        mc.precision.dtype(),
        model.device(),
    )
    .unwrap();
    model.set_embedding(zeros).unwrap();
    model.restore(&snap).unwrap();
    for ((name, t), (_, s)) in model.named_tensors().iter().zip(snap.named().iter()) {
        assert_eq!(
            tensor_bits(t).unwrap(),
            tensor_bits(s).unwrap(),
            "tensor {name} differs after restore"
        );
    }
}

#[test]
fn snapshot_config_mismatch_is_an_error() {
    let a = LanguageModel::init(ModelConfig::smoke(32), 0).unwrap();
    let mut b = LanguageModel::init(ModelConfig::smoke(48), 0).unwrap();
    let snap = a.snapshot().unwrap();
    assert!(b.restore(&snap).is_err());
}

#[test]
fn checkpoint_roundtrip_is_exact() {
    let (_, tok) = small_setup(64);
    let model = LanguageModel::init(ModelConfig::smoke(tok.vocab_size()), 31).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.safetensors");
    model.save(&path).unwrap();
    let loaded = LanguageModel::load(&path).unwrap();
    assert_eq!(loaded.config(), model.config());
    for ((name, t), (_, l)) in model
        .named_tensors()
        .iter()
        .zip(loaded.named_tensors().iter())
    {
        assert_eq!(
            tensor_bits(t).unwrap(),
            tensor_bits(l).unwrap(),
            "tensor {name} differs after reload"
        );
    }
}
