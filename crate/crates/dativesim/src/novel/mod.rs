//! Embedding-only learning of a novel verb from a single exposure stimulus.
//!
//! A trial freezes the whole backbone and runs plain SGD on one embedding row
//! over a grid of learning rates for up to `max_epochs` steps (one gradient
//! step per epoch on the single stimulus). After every step the candidate row
//! is scored on the verbhood set; the state with the maximum verbhood Δ wins,
//! ties going to the smallest learning rate and then the earliest epoch.

use candle_core::{Tensor, Var};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::stimuli::ExposureStimulus;
use crate::tokenizer::SubwordTokenizer;
use crate::verbhood::{verbhood_delta_encoded, EncodedVerbhoodSet};

/// Ridge added to the embedding covariance before factorization.
pub const COV_RIDGE: f64 = 1e-5;

/// Default learning-rate grid for exposure trials.
pub const LR_GRID: [f64; 5] = [0.001, 0.005, 0.01, 0.05, 0.1];

/// Default maximum number of update epochs per learning rate.
pub const MAX_EPOCHS: usize = 70;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NovelToken {
    pub surface: String,
    pub id: u32,
}

impl NovelToken {
    /// Registers `surface` with the tokenizer and returns the reserved slot.
    pub fn install(tok: &mut SubwordTokenizer, surface: &str) -> Self {
        tok.set_novel_surface(surface);
        Self {
            surface: surface.to_string(),
            id: tok.novel_id(),
        }
    }
}

/// One learning trial: a single exposure stimulus plus the search grid.
#[derive(Debug, Clone)]
pub struct ExposureTrial {
    pub stimulus: ExposureStimulus,
    pub lr_grid: Vec<f64>,
    pub max_epochs: usize,
    pub seed: u64,
}

impl ExposureTrial {
    pub fn new(stimulus: ExposureStimulus, seed: u64) -> Self {
        Self {
            stimulus,
            lr_grid: LR_GRID.to_vec(),
            max_epochs: MAX_EPOCHS,
            seed,
        }
    }

    pub fn with_grid(mut self, lr_grid: Vec<f64>, max_epochs: usize) -> Self {
        self.lr_grid = lr_grid;
        self.max_epochs = max_epochs;
        self
    }
}

/// One point of the per-(epoch, lr) verbhood trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TracePoint {
    pub lr: f64,
    pub epoch: usize,
    pub verbhood_delta: f64,
}

/// The selected novel-token embedding plus selection metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnedVerbState {
    pub embedding: Vec<f64>,
    pub best_epoch: usize,
    pub best_lr: f64,
    pub verbhood_delta: f64,
    pub trace: Vec<TracePoint>,
    /// Learning rates abandoned because a gradient went non-finite.
    pub skipped_lrs: Vec<f64>,
}

/// Draws a sample from a Gaussian whose mean is the column mean of `rows` and
/// whose covariance is the empirical row covariance plus `ridge * I`. Returns
/// the sample and whether the diagonal fallback was used because the ridged
/// covariance was not positive definite.
pub fn sample_embedding_gaussian(
    rows: &[Vec<f64>],
    ridge: f64,
    seed: u64,
) -> Result<(Vec<f64>, bool)> {
    let v = rows.len();
    if v == 0 {
        return Err(Error::Model("empty embedding matrix".into()));
    }
    let d = rows[0].len();
    let mut mean = vec![0f64; d];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= v as f64;
    }

    let mut cov = vec![vec![0f64; d]; d];
    for row in rows {
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in 0..=i {
                cov[i][j] += ci * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[i][j] /= v as f64;
        }
        cov[i][i] += ridge;
    }

    let mut rng = StdRng::seed_from_u64(seed);
    let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();

    match cholesky_lower(&cov, d) {
        Some(l) => {
            let mut out = mean.clone();
            for i in 0..d {
                for j in 0..=i {
                    out[i] += l[i][j] * z[j];
                }
            }
            Ok((out, false))
        }
        None => {
            eprintln!("novel: covariance not positive definite after ridge; using diagonal");
            let mut out = mean.clone();
            for i in 0..d {
                out[i] += cov[i][i].max(0.0).sqrt() * z[i];
            }
            Ok((out, true))
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix given by its lower
/// triangle; `None` when a pivot is not strictly positive.
fn cholesky_lower(a: &[Vec<f64>], n: usize) -> Option<Vec<Vec<f64>>> {
    let mut l = vec![vec![0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            // a is stored lower-triangular: a[i][j] valid for j <= i
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Samples an initial embedding for the novel token from the model's
/// embedding distribution.
pub fn init_novel_embedding(model: &LanguageModel, seed: u64) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = model
        .embedding()
        .to_dtype(candle_core::DType::F64)?
        .to_vec2()?;
    let (sample, _) = sample_embedding_gaussian(&rows, COV_RIDGE, seed)?;
    Ok(sample)
}

/// Loss and gradient of the exposure objective with respect to the novel row.
pub(crate) fn novel_row_grad(
    model: &LanguageModel,
    ids: &[u32],
    novel_id: u32,
    row: &Var,
) -> Result<(f64, Tensor)> {
    let emb = model.embedding_with_row(novel_id, row.as_tensor())?;
    let loss = model.sequence_loss(ids, Some(&emb))?;
    let loss_val = loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
    let grads = loss.backward()?;
    let g = grads
        .get(row)
        .ok_or_else(|| Error::Model("no gradient for the novel row".into()))?
        .clone();
    Ok((loss_val, g))
}

fn tensor_is_finite(t: &Tensor) -> Result<bool> {
    let v: Vec<f64> = t.flatten_all()?.to_dtype(candle_core::DType::F64)?.to_vec1()?;
    Ok(v.iter().all(|x| x.is_finite()))
}

fn row_to_vec(t: &Tensor) -> Result<Vec<f64>> {
    Ok(t.flatten_all()?.to_dtype(candle_core::DType::F64)?.to_vec1()?)
}

/// Runs one exposure trial. The model is read-only: every parameter outside
/// the candidate novel row keeps its pre-trial value by construction.
///
/// The initial row is whatever currently occupies the novel slot of the
/// model's embedding matrix (install it with
/// [`LanguageModel::install_novel_row`] first).
pub fn learn_exposure(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    trial: &ExposureTrial,
    vset: &EncodedVerbhoodSet,
) -> Result<LearnedVerbState> {
    let init_row = model.embedding_row(tok.novel_id())?;
    learn_exposure_from(model, tok, trial, vset, &init_row)
}

/// [`learn_exposure`] with an explicit initial row, for trial fan-out over a
/// shared read-only model.
pub fn learn_exposure_from(
    model: &LanguageModel,
    tok: &SubwordTokenizer,
    trial: &ExposureTrial,
    vset: &EncodedVerbhoodSet,
    init_row: &[f64],
) -> Result<LearnedVerbState> {
    let surface = tok
        .novel_surface()
        .ok_or_else(|| Error::Model("tokenizer has no novel surface set".into()))?;
    let novel_id = tok.novel_id();
    let text = &trial.stimulus.text;
    if text.matches(surface).count() != 1 {
        return Err(Error::Model(format!(
            "stimulus must contain the novel surface exactly once: {text:?}"
        )));
    }
    if trial.lr_grid.is_empty() {
        return Err(Error::Model("empty learning-rate grid".into()));
    }

    let ids = tok.encode(text);
    if ids.iter().filter(|&&i| i == novel_id).count() != 1 {
        return Err(Error::Model(
            "encoded stimulus does not contain the novel id exactly once".into(),
        ));
    }

    let dtype = model.config().precision.dtype();
    if init_row.len() != model.config().embed_dim {
        return Err(Error::Model(format!(
            "initial row has length {}, expected {}",
            init_row.len(),
            model.config().embed_dim
        )));
    }
    let row0 = Tensor::from_vec(init_row.to_vec(), model.config().embed_dim, model.device())?
        .to_dtype(dtype)?;

    let mut lrs = trial.lr_grid.clone();
    lrs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut trace: Vec<TracePoint> = Vec::with_capacity(lrs.len() * trial.max_epochs);
    let mut skipped_lrs = Vec::new();
    let mut best: Option<(f64, f64, usize, Vec<f64>)> = None; // (delta, lr, epoch, row)

    for &lr in &lrs {
        let row = Var::from_tensor(&row0)?;
        for epoch in 1..=trial.max_epochs {
            let (_, grad) = novel_row_grad(model, &ids, novel_id, &row)?;
            if !tensor_is_finite(&grad)? {
                skipped_lrs.push(lr);
                break;
            }
            let updated = (row.as_tensor() - (grad * lr)?)?;
            row.set(&updated)?;

            let row_now = row.as_detached_tensor().copy()?;
            let emb_now = model.embedding_with_row(novel_id, &row_now)?;
            let delta = verbhood_delta_encoded(model, vset, Some(&emb_now))?;
            trace.push(TracePoint {
                lr,
                epoch,
                verbhood_delta: delta,
            });
            // strict improvement keeps the smallest lr / earliest epoch on ties
            if best.as_ref().is_none_or(|(d, ..)| delta > *d) {
                best = Some((delta, lr, epoch, row_to_vec(&row_now)?));
            }
        }
    }

    let (verbhood_delta, best_lr, best_epoch, embedding) = best.ok_or_else(|| {
        Error::Model("every learning rate was skipped; no state selected".into())
    })?;
    Ok(LearnedVerbState {
        embedding,
        best_epoch,
        best_lr,
        verbhood_delta,
        trace,
        skipped_lrs,
    })
}

/// Restores every parameter from the snapshot taken before a trial.
pub fn reset_trial(
    model: &mut LanguageModel,
    snapshot: &crate::lm::ModelSnapshot,
) -> Result<()> {
    model.restore(snapshot)
}
