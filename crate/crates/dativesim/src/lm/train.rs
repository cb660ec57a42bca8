//! Base language-model training: AdamW with linear warmup then linear decay.

use candle_core::{Device, Tensor};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::corpus::UtteranceCorpus;
use crate::error::{Error, Result};
use crate::tokenizer::SubwordTokenizer;

use super::forward::{forward, lm_loss};
use super::params::{LmParams, VarParams};
use super::{LanguageModel, ModelConfig, TrainConfig};

const SHUFFLE_SALT: u64 = 0x5eed_0f5a_0017;

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean training loss per epoch, in nats per scored token.
    pub epoch_mean_losses: Vec<f64>,
    pub steps: usize,
    /// Sequences cut to the context window during encoding.
    pub truncated_sequences: usize,
}

fn schedule(step: usize, total: usize, warmup: usize, peak: f64) -> f64 {
    if warmup > 0 && step < warmup {
        peak * (step + 1) as f64 / warmup as f64
    } else if total > warmup {
        peak * (total - step) as f64 / (total - warmup) as f64
    } else {
        peak
    }
}

struct Batch {
    input: Tensor,
    target: Tensor,
    mask: Tensor,
}

fn make_batch(
    seqs: &[&Vec<u32>],
    cfg: &ModelConfig,
    dev: &Device,
) -> Result<Batch> {
    let t_max = seqs.iter().map(|s| s.len() - 1).max().unwrap();
    let bsz = seqs.len();
    let mut input = vec![0u32; bsz * t_max];
    let mut target = vec![0u32; bsz * t_max];
    let mut mask = vec![0f64; bsz * t_max];
    for (r, s) in seqs.iter().enumerate() {
        for i in 0..s.len() - 1 {
            input[r * t_max + i] = s[i];
            target[r * t_max + i] = s[i + 1];
            mask[r * t_max + i] = 1.0;
        }
    }
    Ok(Batch {
        input: Tensor::from_vec(input, (bsz, t_max), dev)?,
        target: Tensor::from_vec(target, (bsz, t_max), dev)?,
        mask: Tensor::from_vec(mask, (bsz, t_max), dev)?.to_dtype(cfg.precision.dtype())?,
    })
}

/// Trains a model from scratch on `corpus`. Deterministic for a fixed
/// platform, seed, and corpus.
pub fn train_lm(
    corpus: &UtteranceCorpus,
    tok: &SubwordTokenizer,
    mc: &ModelConfig,
    tc: &TrainConfig,
) -> Result<(LanguageModel, TrainReport)> {
    mc.validate()?;
    tc.validate()?;
    if tok.vocab_size() != mc.vocab_size {
        return Err(Error::Config(format!(
            "tokenizer vocab {} != model vocab {}",
            tok.vocab_size(),
            mc.vocab_size
        )));
    }

    let dev = Device::Cpu;
    let limit = mc.max_seq_len + 1;
    let mut truncated = 0usize;
    let seqs: Vec<Vec<u32>> = corpus
        .utterances()
        .iter()
        .map(|u| {
            let mut ids = tok.encode(u);
            if ids.len() > limit {
                truncated += 1;
                ids.truncate(limit);
            }
            ids
        })
        .collect();
    if truncated > 0 {
        eprintln!("train_lm: truncated {truncated} sequences to max_seq_len {}", mc.max_seq_len);
    }

    let init = LmParams::init(mc, tc.seed, &dev)?;
    let vars = VarParams::from_params(&init)?;
    let view = vars.view(mc.layers);
    let mut opt = AdamW::new(
        vars.all_vars(),
        ParamsAdamW {
            lr: tc.peak_lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: tc.weight_decay,
        },
    )?;

    let n = seqs.len();
    let steps_per_epoch = n.div_ceil(tc.batch_size);
    let total_steps = steps_per_epoch * tc.epochs;
    let mut rng = StdRng::seed_from_u64(tc.seed ^ SHUFFLE_SALT);
    let mut global_step = 0usize;
    let mut epoch_mean_losses = Vec::with_capacity(tc.epochs);

    for epoch in 0..tc.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_batches = 0usize;
        for chunk in order.chunks(tc.batch_size) {
            let batch_seqs: Vec<&Vec<u32>> = chunk.iter().map(|&i| &seqs[i]).collect();
            let batch = make_batch(&batch_seqs, mc, &dev)?;
            let logits = forward(mc, &view, &batch.input, None)?;
            let loss = lm_loss(&logits, &batch.target, &batch.mask)?;
            let loss_val = loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
            if !loss_val.is_finite() {
                return Err(Error::Model(format!(
                    "non-finite loss {loss_val} at epoch {epoch}, step {global_step}"
                )));
            }
            let lr = schedule(global_step, total_steps, tc.warmup_steps, tc.peak_lr);
            opt.set_learning_rate(lr);
            opt.backward_step(&loss)?;
            epoch_loss += loss_val;
            epoch_batches += 1;
            global_step += 1;
        }
        epoch_mean_losses.push(epoch_loss / epoch_batches as f64);
    }

    let params = vars.freeze(mc.layers)?;
    Ok((
        LanguageModel::from_parts(mc.clone(), params, dev),
        TrainReport {
            epoch_mean_losses,
            steps: global_step,
            truncated_sequences: truncated,
        },
    ))
}

/// Mean next-token negative log-likelihood of `corpus` under `model`,
/// weighted per scored token.
pub fn eval_mean_loss(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    corpus: &UtteranceCorpus,
) -> Result<f64> {
    let seqs: Vec<Vec<u32>> = corpus.utterances().iter().map(|u| tok.encode(u)).collect();
    let scores = model.score_batch_ids(&seqs)?;
    let total: f64 = scores.iter().map(|s| s.total).sum();
    let count: usize = scores.iter().map(|s| s.n_scored).sum();
    Ok(-total / count as f64)
}
