//! Single-file model checkpoints: safetensors payload with the model config
//! embedded as JSON in the header metadata.

use std::collections::HashMap;
use std::path::Path;

use candle_core::Device;
use safetensors::SafeTensors;

use crate::error::{Error, Result};

use super::params::{BlockParams, LmParams};
use super::{LanguageModel, ModelConfig};

const CONFIG_KEY: &str = "config";
const SEED_KEY: &str = "train_seed";

pub(super) fn save(model: &LanguageModel, path: &Path, seed: Option<u64>) -> Result<()> {
    let named = model.params().named();
    let mut meta = HashMap::new();
    meta.insert(
        CONFIG_KEY.to_string(),
        serde_json::to_string(model.config())?,
    );
    if let Some(seed) = seed {
        meta.insert(SEED_KEY.to_string(), seed.to_string());
    }
    safetensors::serialize_to_file(named, Some(meta), path)
        .map_err(|e| Error::Model(format!("checkpoint write {}: {e}", path.display())))
}

/// The training seed recorded in a checkpoint, when present.
pub fn read_train_seed(path: &Path) -> Result<Option<u64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (_, meta) = SafeTensors::read_metadata(&bytes)
        .map_err(|e| Error::Model(format!("checkpoint header {}: {e}", path.display())))?;
    Ok(meta
        .metadata()
        .as_ref()
        .and_then(|m| m.get(SEED_KEY))
        .and_then(|s| s.parse().ok()))
}

pub(super) fn load(path: &Path) -> Result<LanguageModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (_, meta) = SafeTensors::read_metadata(&bytes)
        .map_err(|e| Error::Model(format!("checkpoint header {}: {e}", path.display())))?;
    let cfg_json = meta
        .metadata()
        .as_ref()
        .and_then(|m| m.get(CONFIG_KEY))
        .ok_or_else(|| Error::Model("checkpoint missing config metadata".into()))?;
    let cfg: ModelConfig = serde_json::from_str(cfg_json)?;
    cfg.validate()?;

    let device = Device::Cpu;
    let tensors = candle_core::safetensors::load_buffer(&bytes, &device)?;
    let get = |name: &str| -> Result<candle_core::Tensor> {
        tensors
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Model(format!("checkpoint missing tensor {name}")))
    };
    let mut blocks = Vec::with_capacity(cfg.layers);
    for i in 0..cfg.layers {
        blocks.push(BlockParams {
            ln1_w: get(&format!("block{i}.ln1.w"))?,
            ln1_b: get(&format!("block{i}.ln1.b"))?,
            wq: get(&format!("block{i}.attn.wq"))?,
            bq: get(&format!("block{i}.attn.bq"))?,
            wk: get(&format!("block{i}.attn.wk"))?,
            bk: get(&format!("block{i}.attn.bk"))?,
            wv: get(&format!("block{i}.attn.wv"))?,
            bv: get(&format!("block{i}.attn.bv"))?,
            wo: get(&format!("block{i}.attn.wo"))?,
            bo: get(&format!("block{i}.attn.bo"))?,
            ln2_w: get(&format!("block{i}.ln2.w"))?,
            ln2_b: get(&format!("block{i}.ln2.b"))?,
            w1: get(&format!("block{i}.ffn.w1"))?,
            b1: get(&format!("block{i}.ffn.b1"))?,
            w2: get(&format!("block{i}.ffn.w2"))?,
            b2: get(&format!("block{i}.ffn.b2"))?,
        });
    }
    let params = LmParams {
        embed: get("embed")?,
        pos: get("pos")?,
        blocks,
        ln_f_w: get("ln_f.w")?,
        ln_f_b: get("ln_f.b")?,
    };
    let (v, d) = params.embed.dims2()?;
    if v != cfg.vocab_size || d != cfg.embed_dim {
        return Err(Error::Model(format!(
            "checkpoint embed shape ({v}, {d}) conflicts with config ({}, {})",
            cfg.vocab_size, cfg.embed_dim
        )));
    }
    Ok(LanguageModel::from_parts(cfg, params, device))
}
