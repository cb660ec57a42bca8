//! Parameter containers and seeded initialization.

use candle_core::{DType, Device, Tensor, Var};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;

use super::ModelConfig;

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct BlockParams {
    pub ln1_w: Tensor,
    pub ln1_b: Tensor,
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
    pub ln2_w: Tensor,
    pub ln2_b: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// All model parameters. The embedding matrix doubles as the output
/// projection (tied weights), so "the vector for the novel token" is a single
/// row of `embed`.
#[derive(Debug, Clone)]
pub struct LmParams {
    pub embed: Tensor,
    pub pos: Tensor,
    pub blocks: Vec<BlockParams>,
    pub ln_f_w: Tensor,
    pub ln_f_b: Tensor,
}

fn normal_tensor(
    rng: &mut StdRng,
    rows: usize,
    cols: usize,
    dtype: DType,
    dev: &Device,
) -> Result<Tensor> {
    let n = rows * cols;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        data.push(z * INIT_STD);
    }
    let t = Tensor::from_vec(data, (rows, cols), dev)?;
    Ok(t.to_dtype(dtype)?)
}

fn zeros(len: usize, dtype: DType, dev: &Device) -> Result<Tensor> {
    Ok(Tensor::zeros(len, dtype, dev)?)
}

fn ones(len: usize, dtype: DType, dev: &Device) -> Result<Tensor> {
    Ok(Tensor::ones(len, dtype, dev)?)
}

impl LmParams {
    /// Draws fresh parameters from a seeded RNG. The draw order is fixed, so
    /// identical (config, seed) pairs produce identical parameters.
    pub fn init(cfg: &ModelConfig, seed: u64, dev: &Device) -> Result<Self> {
        let mut rng = StdRng::seed_from_u64(seed);
        let dt = cfg.precision.dtype();
        let d = cfg.embed_dim;
        let embed = normal_tensor(&mut rng, cfg.vocab_size, d, dt, dev)?;
        let pos = normal_tensor(&mut rng, cfg.max_seq_len, d, dt, dev)?;
        let mut blocks = Vec::with_capacity(cfg.layers);
        for _ in 0..cfg.layers {
            blocks.push(BlockParams {
                ln1_w: ones(d, dt, dev)?,
                ln1_b: zeros(d, dt, dev)?,
                wq: normal_tensor(&mut rng, d, d, dt, dev)?,
                bq: zeros(d, dt, dev)?,
                wk: normal_tensor(&mut rng, d, d, dt, dev)?,
                bk: zeros(d, dt, dev)?,
                wv: normal_tensor(&mut rng, d, d, dt, dev)?,
                bv: zeros(d, dt, dev)?,
                wo: normal_tensor(&mut rng, d, d, dt, dev)?,
                bo: zeros(d, dt, dev)?,
                ln2_w: ones(d, dt, dev)?,
                ln2_b: zeros(d, dt, dev)?,
                w1: normal_tensor(&mut rng, cfg.ffn_dim, d, dt, dev)?,
                b1: zeros(cfg.ffn_dim, dt, dev)?,
                w2: normal_tensor(&mut rng, d, cfg.ffn_dim, dt, dev)?,
                b2: zeros(d, dt, dev)?,
            });
        }
        Ok(Self {
            embed,
            pos,
            blocks,
            ln_f_w: ones(d, dt, dev)?,
            ln_f_b: zeros(d, dt, dev)?,
        })
    }

    /// Stable (name, tensor) listing used by checkpoints and snapshots.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = vec![
            ("embed".into(), &self.embed),
            ("pos".into(), &self.pos),
            ("ln_f.w".into(), &self.ln_f_w),
            ("ln_f.b".into(), &self.ln_f_b),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            for (suffix, t) in [
                ("ln1.w", &b.ln1_w),
                ("ln1.b", &b.ln1_b),
                ("attn.wq", &b.wq),
                ("attn.bq", &b.bq),
                ("attn.wk", &b.wk),
                ("attn.bk", &b.bk),
                ("attn.wv", &b.wv),
                ("attn.bv", &b.bv),
                ("attn.wo", &b.wo),
                ("attn.bo", &b.bo),
                ("ln2.w", &b.ln2_w),
                ("ln2.b", &b.ln2_b),
                ("ffn.w1", &b.w1),
                ("ffn.b1", &b.b1),
                ("ffn.w2", &b.w2),
                ("ffn.b2", &b.b2),
            ] {
                out.push((format!("block{i}.{suffix}"), t));
            }
        }
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = vec![
            ("embed".into(), &mut self.embed),
            ("pos".into(), &mut self.pos),
            ("ln_f.w".into(), &mut self.ln_f_w),
            ("ln_f.b".into(), &mut self.ln_f_b),
        ];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            for (suffix, t) in [
                ("ln1.w", &mut b.ln1_w),
                ("ln1.b", &mut b.ln1_b),
                ("attn.wq", &mut b.wq),
                ("attn.bq", &mut b.bq),
                ("attn.wk", &mut b.wk),
                ("attn.bk", &mut b.bk),
                ("attn.wv", &mut b.wv),
                ("attn.bv", &mut b.bv),
                ("attn.wo", &mut b.wo),
                ("attn.bo", &mut b.bo),
                ("ln2.w", &mut b.ln2_w),
                ("ln2.b", &mut b.ln2_b),
                ("ffn.w1", &mut b.w1),
                ("ffn.b1", &mut b.b1),
                ("ffn.w2", &mut b.w2),
                ("ffn.b2", &mut b.b2),
            ] {
                out.push((format!("block{i}.{suffix}"), t));
            }
        }
        out
    }
}

/// Var-backed parameters used only while the base model is being trained.
pub struct VarParams {
    pub vars: Vec<(String, Var)>,
}

impl VarParams {
    pub fn from_params(params: &LmParams) -> Result<Self> {
        let mut vars = Vec::new();
        for (name, t) in params.named() {
            vars.push((name, Var::from_tensor(t)?));
        }
        Ok(Self { vars })
    }

    pub fn all_vars(&self) -> Vec<Var> {
        self.vars.iter().map(|(_, v)| v.clone()).collect()
    }

    /// A parameter view whose tensors share storage (and graph identity) with
    /// the vars, so optimizer updates are visible to subsequent forwards.
    pub fn view(&self, layers: usize) -> LmParams {
        let get = |name: &str| -> Tensor {
            self.vars
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.as_tensor().clone())
                .expect("var name")
        };
        LmParams {
            embed: get("embed"),
            pos: get("pos"),
            blocks: (0..layers)
                .map(|i| BlockParams {
                    ln1_w: get(&format!("block{i}.ln1.w")),
                    ln1_b: get(&format!("block{i}.ln1.b")),
                    wq: get(&format!("block{i}.attn.wq")),
                    bq: get(&format!("block{i}.attn.bq")),
                    wk: get(&format!("block{i}.attn.wk")),
                    bk: get(&format!("block{i}.attn.bk")),
                    wv: get(&format!("block{i}.attn.wv")),
                    bv: get(&format!("block{i}.attn.bv")),
                    wo: get(&format!("block{i}.attn.wo")),
                    bo: get(&format!("block{i}.attn.bo")),
                    ln2_w: get(&format!("block{i}.ln2.w")),
                    ln2_b: get(&format!("block{i}.ln2.b")),
                    w1: get(&format!("block{i}.ffn.w1")),
                    b1: get(&format!("block{i}.ffn.b1")),
                    w2: get(&format!("block{i}.ffn.w2")),
                    b2: get(&format!("block{i}.ffn.b2")),
                })
                .collect(),
            ln_f_w: get("ln_f.w"),
            ln_f_b: get("ln_f.b"),
        }
    }

    /// Detached copies of the trained values.
    pub fn freeze(&self, layers: usize) -> Result<LmParams> {
        let view = self.view(layers);
        let mut out = view.clone();
        for (_, t) in out.named_mut() {
            *t = t.detach().copy()?;
        }
        Ok(out)
    }
}
