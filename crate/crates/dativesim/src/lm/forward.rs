//! The decoder-only Transformer forward pass.
//!
//! Pre-norm blocks with causal self-attention and a ReLU feed-forward, learned
//! positional embeddings, and an output projection tied to the input
//! embedding matrix.

use candle_core::{DType, Device, Tensor, D};

use crate::error::Result;

use super::params::LmParams;
use super::ModelConfig;

pub(crate) fn layer_norm(x: &Tensor, w: &Tensor, b: &Tensor, eps: f64) -> Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
    let denom = var.affine(1.0, eps)?.sqrt()?;
    let normed = centered.broadcast_div(&denom)?;
    Ok(normed.broadcast_mul(w)?.broadcast_add(b)?)
}

pub(crate) fn causal_mask(t: usize, dtype: DType, dev: &Device) -> Result<Tensor> {
    let mut data = vec![0f64; t * t];
    for i in 0..t {
        for j in (i + 1)..t {
            data[i * t + j] = f64::NEG_INFINITY;
        }
    }
    let m = Tensor::from_vec(data, (t, t), dev)?.to_dtype(dtype)?;
    Ok(m.reshape((1, 1, t, t))?)
}

fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    Ok(x.broadcast_matmul(&w.t()?)?.broadcast_add(b)?)
}

/// Runs the model over `ids` (shape `(batch, time)`, u32) and returns logits
/// of shape `(batch, time, vocab)`. When `embed_override` is given it replaces
/// the embedding matrix in both the input lookup and the tied output
/// projection; this is how a trial-specific novel-token row enters the graph.
pub(crate) fn forward(
    cfg: &ModelConfig,
    params: &LmParams,
    ids: &Tensor,
    embed_override: Option<&Tensor>,
) -> Result<Tensor> {
    let emb = embed_override.unwrap_or(&params.embed);
    let (bsz, t) = ids.dims2()?;
    let d = cfg.embed_dim;
    let heads = cfg.heads;
    let head_dim = d / heads;
    let dev = ids.device();
    let dtype = cfg.precision.dtype();

    let flat = ids.reshape(bsz * t)?;
    let tok = emb.index_select(&flat, 0)?.reshape((bsz, t, d))?;
    let pos = params.pos.narrow(0, 0, t)?.unsqueeze(0)?;
    let mut h = tok.broadcast_add(&pos)?;

    let mask = causal_mask(t, dtype, dev)?;
    let scale = 1.0 / (head_dim as f64).sqrt();

    for block in &params.blocks {
        let xn = layer_norm(&h, &block.ln1_w, &block.ln1_b, cfg.layer_norm_eps)?;
        let split = |x: &Tensor| -> Result<Tensor> {
            Ok(x.reshape((bsz, t, heads, head_dim))?
                .transpose(1, 2)?
                .contiguous()?)
        };
        let q = split(&linear(&xn, &block.wq, &block.bq)?)?;
        let k = split(&linear(&xn, &block.wk, &block.bk)?)?;
        let v = split(&linear(&xn, &block.wv, &block.bv)?)?;

        let att = q.matmul(&k.transpose(2, 3)?.contiguous()?)?.affine(scale, 0.0)?;
        let att = att.broadcast_add(&mask)?;
        let att = candle_nn::ops::softmax(&att, D::Minus1)?;
        let ctx = att
            .matmul(&v)?
            .transpose(1, 2)?
            .contiguous()?
            .reshape((bsz, t, d))?;
        let attn_out = linear(&ctx, &block.wo, &block.bo)?;
        h = (h + attn_out)?;

        let hn = layer_norm(&h, &block.ln2_w, &block.ln2_b, cfg.layer_norm_eps)?;
        let ff = linear(&hn, &block.w1, &block.b1)?.relu()?;
        let ff = linear(&ff, &block.w2, &block.b2)?;
        h = (h + ff)?;
    }

    let hf = layer_norm(&h, &params.ln_f_w, &params.ln_f_b, cfg.layer_norm_eps)?;
    Ok(hf.broadcast_matmul(&emb.t()?)?)
}

/// Mean negative log-likelihood over positions where `mask` is 1.
pub(crate) fn lm_loss(logits: &Tensor, targets: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let logp = candle_nn::ops::log_softmax(logits, D::Minus1)?;
    let picked = logp
        .gather(&targets.unsqueeze(D::Minus1)?, D::Minus1)?
        .squeeze(D::Minus1)?;
    let masked = picked.mul(mask)?;
    let total = masked.sum_all()?;
    let denom = mask.sum_all()?;
    Ok(total.div(&denom)?.neg()?)
}
