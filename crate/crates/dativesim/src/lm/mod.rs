//! Decoder-only Transformer language model: configuration, training, and
//! per-token log-probability scoring.
//!
//! Scoring convention, applied uniformly everywhere: a beginning-of-sequence
//! id is prepended, every subsequent token including the end-of-sequence id is
//! scored, and `n_scored` counts exactly those positions. All log
//! probabilities are natural logs.

mod checkpoint;
mod forward;
mod params;
mod train;

pub use checkpoint::read_train_seed;
pub use params::{BlockParams, LmParams};
pub use train::{eval_mean_loss, train_lm, TrainReport};

use candle_core::{DType, Device, Tensor, D};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::SubwordTokenizer;

/// Numeric precision of model parameters and activations. `F64` exists for
/// fixture models checked against finite-difference oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub embed_dim: usize,
    pub ffn_dim: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "default_ln_eps")]
    pub layer_norm_eps: f64,
    #[serde(default)]
    pub precision: Precision,
}

fn default_ln_eps() -> f64 {
    1e-5
}

impl ModelConfig {
    /// The 8.4M-parameter configuration used for full-scale runs.
    pub fn paper(vocab_size: usize) -> Self {
        Self {
            layers: 8,
            heads: 8,
            embed_dim: 256,
            ffn_dim: 1024,
            vocab_size,
            max_seq_len: 128,
            dropout: 0.0,
            layer_norm_eps: 1e-5,
            precision: Precision::F32,
        }
    }

    /// A tiny configuration for CI-scale runs.
    pub fn smoke(vocab_size: usize) -> Self {
        Self {
            layers: 2,
            heads: 4,
            embed_dim: 64,
            ffn_dim: 128,
            vocab_size,
            max_seq_len: 64,
            dropout: 0.0,
            layer_norm_eps: 1e-5,
            precision: Precision::F32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("layers must be >= 1".into()));
        }
        if self.heads == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "embed_dim {} must be divisible by heads {}",
                self.embed_dim, self.heads
            )));
        }
        if self.vocab_size < 5 {
            return Err(Error::Config("vocab_size must cover the special ids".into()));
        }
        if self.max_seq_len < 2 {
            return Err(Error::Config("max_seq_len must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let d = self.embed_dim;
        let f = self.ffn_dim;
        let per_block = 4 * (d * d + d) + 2 * (2 * d) + (d * f + f) + (f * d + d);
        self.vocab_size * d + self.max_seq_len * d + self.layers * per_block + 2 * d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub warmup_steps: usize,
    #[serde(default)]
    pub weight_decay: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn paper(seed: u64) -> Self {
        Self {
            epochs: 10,
            batch_size: 16,
            peak_lr: 0.003,
            warmup_steps: 24_000,
            weight_decay: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !self.peak_lr.is_finite() || self.peak_lr <= 0.0 {
            return Err(Error::Config("peak_lr must be positive".into()));
        }
        Ok(())
    }
}

/// Per-token scores for one sentence, in nats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceScore {
    pub per_token_logprobs: Vec<f64>,
    pub total: f64,
    pub mean_per_token: f64,
    pub n_scored: usize,
}

impl SentenceScore {
    pub fn from_logprobs(per_token_logprobs: Vec<f64>) -> Self {
        let total: f64 = per_token_logprobs.iter().sum();
        let n_scored = per_token_logprobs.len();
        Self {
            total,
            mean_per_token: total / n_scored as f64,
            n_scored,
            per_token_logprobs,
        }
    }
}

/// A deep copy of all model parameters, for trial isolation.
pub struct ModelSnapshot {
    cfg: ModelConfig,
    tensors: Vec<(String, Tensor)>,
}

impl ModelSnapshot {
    pub fn named(&self) -> &[(String, Tensor)] {
        &self.tensors
    }
}

#[derive(Debug, Clone)]
pub struct LanguageModel {
    cfg: ModelConfig,
    params: LmParams,
    device: Device,
}

const SCORE_CHUNK: usize = 64;

impl LanguageModel {
    /// A freshly initialized (untrained) model.
    pub fn init(cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let device = Device::Cpu;
        let params = LmParams::init(&cfg, seed, &device)?;
        Ok(Self {
            cfg,
            params,
            device,
        })
    }

    pub(crate) fn from_parts(cfg: ModelConfig, params: LmParams, device: Device) -> Self {
        Self {
            cfg,
            params,
            device,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn param_count(&self) -> usize {
        self.cfg.param_count()
    }

    pub fn embedding(&self) -> &Tensor {
        &self.params.embed
    }

    pub(crate) fn params(&self) -> &LmParams {
        &self.params
    }

    /// Replaces the embedding matrix (shape and dtype must match).
    pub fn set_embedding(&mut self, embed: Tensor) -> Result<()> {
        let (v, d) = embed.dims2()?;
        if v != self.cfg.vocab_size || d != self.cfg.embed_dim {
            return Err(Error::Model(format!(
                "embedding shape ({v}, {d}) does not match config ({}, {})",
                self.cfg.vocab_size, self.cfg.embed_dim
            )));
        }
        if embed.dtype() != self.cfg.precision.dtype() {
            return Err(Error::Model("embedding dtype mismatch".into()));
        }
        self.params.embed = embed;
        Ok(())
    }

    /// The embedding matrix with row `id` replaced by `row`. Rows other than
    /// `id` are taken from the current matrix unchanged (same storage), so
    /// this is the graph-safe way to inject a trial-specific novel row.
    pub fn embedding_with_row(&self, id: u32, row: &Tensor) -> Result<Tensor> {
        let v = self.cfg.vocab_size;
        let idx = id as usize;
        if idx >= v {
            return Err(Error::Model(format!("novel id {id} outside vocab {v}")));
        }
        if row.dims() != [self.cfg.embed_dim] {
            return Err(Error::Model(format!(
                "novel row must have shape ({},), got {:?}",
                self.cfg.embed_dim,
                row.dims()
            )));
        }
        let row = row.to_dtype(self.params.embed.dtype())?.unsqueeze(0)?;
        let mut parts: Vec<Tensor> = Vec::with_capacity(3);
        if idx > 0 {
            parts.push(self.params.embed.narrow(0, 0, idx)?);
        }
        parts.push(row);
        if idx + 1 < v {
            parts.push(self.params.embed.narrow(0, idx + 1, v - idx - 1)?);
        }
        Ok(Tensor::cat(&parts, 0)?)
    }

    /// Overwrites the embedding row for `id` in place (used to install a
    /// learned novel-token vector for scoring).
    pub fn install_novel_row(&mut self, id: u32, row: &Tensor) -> Result<()> {
        let row = row.to_dtype(self.cfg.precision.dtype())?;
        let embed = self.embedding_with_row(id, &row)?;
        self.params.embed = embed;
        Ok(())
    }

    /// [`LanguageModel::install_novel_row`] from a plain vector.
    pub fn install_novel_row_f64(&mut self, id: u32, row: &[f64]) -> Result<()> {
        let t = Tensor::from_vec(row.to_vec(), self.cfg.embed_dim, &self.device)?;
        self.install_novel_row(id, &t)
    }

    /// Reads one embedding row as f64.
    pub fn embedding_row(&self, id: u32) -> Result<Vec<f64>> {
        Ok(self
            .params
            .embed
            .narrow(0, id as usize, 1)?
            .flatten_all()?
            .to_dtype(DType::F64)?
            .to_vec1()?)
    }

    pub(crate) fn forward_ids(
        &self,
        ids: &Tensor,
        embed_override: Option<&Tensor>,
    ) -> Result<Tensor> {
        forward::forward(&self.cfg, &self.params, ids, embed_override)
    }

    /// Loss of one sequence under the next-token objective (mean over scored
    /// positions), optionally with an overridden embedding matrix.
    pub fn sequence_loss(&self, ids: &[u32], embed_override: Option<&Tensor>) -> Result<Tensor> {
        let ids = self.truncated(ids);
        if ids.len() < 2 {
            return Err(Error::Model("sequence too short to score".into()));
        }
        let n = ids.len();
        let input = Tensor::from_vec(ids[..n - 1].to_vec(), (1, n - 1), &self.device)?;
        let targets = Tensor::from_vec(ids[1..].to_vec(), (1, n - 1), &self.device)?;
        let mask = Tensor::ones((1, n - 1), self.cfg.precision.dtype(), &self.device)?;
        let logits = forward::forward(&self.cfg, &self.params, &input, embed_override)?;
        forward::lm_loss(&logits, &targets, &mask)
    }

    fn truncated<'a>(&self, ids: &'a [u32]) -> &'a [u32] {
        let limit = self.cfg.max_seq_len + 1;
        if ids.len() > limit {
            &ids[..limit]
        } else {
            ids
        }
    }

    /// Scores an encoded sequence `[bos, t1..tn, eos]`; the bos id conditions
    /// and every later id is scored.
    pub fn score_ids(&self, ids: &[u32]) -> Result<SentenceScore> {
        Ok(self.score_batch_ids(std::slice::from_ref(&ids.to_vec()))?.remove(0))
    }

    /// Scores many encoded sequences with one forward pass per chunk.
    pub fn score_batch_ids(&self, seqs: &[Vec<u32>]) -> Result<Vec<SentenceScore>> {
        self.score_batch_with(seqs, None)
    }

    pub(crate) fn score_batch_with(
        &self,
        seqs: &[Vec<u32>],
        embed_override: Option<&Tensor>,
    ) -> Result<Vec<SentenceScore>> {
        let mut out = Vec::with_capacity(seqs.len());
        for chunk in seqs.chunks(SCORE_CHUNK) {
            let trunc: Vec<&[u32]> = chunk.iter().map(|s| self.truncated(s)).collect();
            for s in &trunc {
                if s.len() < 2 {
                    return Err(Error::Model("sequence too short to score".into()));
                }
            }
            let t_max = trunc.iter().map(|s| s.len() - 1).max().unwrap();
            let bsz = trunc.len();
            let mut input = vec![0u32; bsz * t_max];
            let mut target = vec![0u32; bsz * t_max];
            for (r, s) in trunc.iter().enumerate() {
                for i in 0..s.len() - 1 {
                    input[r * t_max + i] = s[i];
                    target[r * t_max + i] = s[i + 1];
                }
            }
            let input = Tensor::from_vec(input, (bsz, t_max), &self.device)?;
            let target = Tensor::from_vec(target, (bsz, t_max), &self.device)?;
            let logits = forward::forward(&self.cfg, &self.params, &input, embed_override)?;
            let logp = candle_nn::ops::log_softmax(&logits, D::Minus1)?;
            let picked = logp
                .gather(&target.unsqueeze(D::Minus1)?, D::Minus1)?
                .squeeze(D::Minus1)?
                .to_dtype(DType::F64)?;
            let rows: Vec<Vec<f64>> = picked.to_vec2()?;
            for (r, s) in trunc.iter().enumerate() {
                out.push(SentenceScore::from_logprobs(rows[r][..s.len() - 1].to_vec()));
            }
        }
        Ok(out)
    }

    /// Scores raw text through the shared tokenizer.
    pub fn score_sentence(&self, tok: &SubwordTokenizer, text: &str) -> Result<SentenceScore> {
        if text.trim().is_empty() {
            return Err(Error::Model("cannot score empty text".into()));
        }
        self.score_ids(&tok.encode(text))
    }

    /// Next-token probability distributions at every position of `ids`.
    pub fn next_token_probs(&self, ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        let ids = self.truncated(ids);
        let n = ids.len();
        let input = Tensor::from_vec(ids.to_vec(), (1, n), &self.device)?;
        let logits = self.forward_ids(&input, None)?;
        let probs = candle_nn::ops::softmax(&logits, D::Minus1)?
            .squeeze(0)?
            .to_dtype(DType::F64)?;
        Ok(probs.to_vec2()?)
    }

    pub fn snapshot(&self) -> Result<ModelSnapshot> {
        let mut tensors = Vec::new();
        for (name, t) in self.params.named() {
            tensors.push((name, t.copy()?));
        }
        Ok(ModelSnapshot {
            cfg: self.cfg.clone(),
            tensors,
        })
    }

    /// Restores every parameter from `snap`. Errors when the snapshot was
    /// taken from a different configuration.
    pub fn restore(&mut self, snap: &ModelSnapshot) -> Result<()> {
        if snap.cfg != self.cfg {
            return Err(Error::Model(
                "snapshot config does not match this model".into(),
            ));
        }
        for (name, t) in self.params.named_mut() {
            let src = snap
                .tensors
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, s)| s)
                .ok_or_else(|| Error::Model(format!("snapshot missing tensor {name}")))?;
            *t = src.copy()?;
        }
        Ok(())
    }

    /// Parameter tensors as (name, clone) pairs; clones share storage.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        self.params
            .named()
            .into_iter()
            .map(|(n, t)| (n, t.clone()))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        checkpoint::save(self, path.as_ref(), None)
    }

    /// Saves the checkpoint with the training seed recorded in its header.
    pub fn save_with_seed(
        &self,
        path: impl AsRef<std::path::Path>,
        seed: Option<u64>,
    ) -> Result<()> {
        checkpoint::save(self, path.as_ref(), seed)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        checkpoint::load(path.as_ref())
    }
}

/// Arithmetic mean of per-sentence mean-per-token log probabilities.
pub fn mean_logprob_per_token<S: AsRef<str>>(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    texts: &[S],
) -> Result<f64> {
    if texts.is_empty() {
        return Err(Error::Model("mean over an empty sentence list".into()));
    }
    let seqs: Vec<Vec<u32>> = texts.iter().map(|t| tok.encode(t.as_ref())).collect();
    let scores = model.score_batch_ids(&seqs)?;
    Ok(scores.iter().map(|s| s.mean_per_token).sum::<f64>() / scores.len() as f64)
}

/// Bit patterns of a tensor's elements, for exact equality checks.
pub fn tensor_bits(t: &Tensor) -> Result<Vec<u64>> {
    let flat = t.flatten_all()?;
    Ok(match t.dtype() {
        DType::F64 => flat.to_vec1::<f64>()?.iter().map(|x| x.to_bits()).collect(),
        _ => flat
            .to_dtype(DType::F32)?
            .to_vec1::<f32>()?
            .iter()
            .map(|x| x.to_bits() as u64)
            .collect(),
    })
}

#[cfg(test)]
mod tests;
