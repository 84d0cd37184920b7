use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use log::info;
use rayon::prelude::*;

use super::seed::{split, Stream};
use crate::error::Result;
use crate::lern::{import_model, train_layer_with, ClusterModel, LernParams};
use crate::policy::LayerModels;
use crate::predictors::HashScheme;
use crate::trace::AccessSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelKey {
    pub fingerprint: u64,
    pub block_bits: u32,
    pub seed: u64,
    pub hash: Option<HashScheme>,
    pub k: usize,
    pub max_iters: usize,
    pub tol_bits: u64,
}

/// Trained per-layer models, shared by every run of a sweep or comparison.
/// Concurrent requests for the same key train once.
#[derive(Default)]
pub struct ModelCache {
    slots: Mutex<HashMap<ModelKey, Arc<Mutex<Option<LayerModels>>>>>,
}

impl ModelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.slots
            .lock()
            .unwrap()
            .values()
            .filter(|s| s.lock().unwrap().is_some())
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Models for every layer of `seq`, trained with a seed derived from
    /// `root_seed`.
    pub fn get_or_train(
        &self,
        seq: &AccessSequence,
        block_bits: u32,
        root_seed: u64,
        hash: Option<HashScheme>,
        params: &LernParams,
    ) -> Result<LayerModels> {
        let key = ModelKey {
            fingerprint: seq.fingerprint(),
            block_bits,
            seed: root_seed,
            hash,
            k: params.k,
            max_iters: params.max_iters,
            tol_bits: params.tol.to_bits(),
        };
        let slot = self.slots.lock().unwrap().entry(key).or_default().clone();
        let mut guard = slot.lock().unwrap();
        if let Some(m) = guard.as_ref() {
            return Ok(m.clone());
        }
        let models = train_all(seq, block_bits, root_seed, hash, params)?;
        *guard = Some(models.clone());
        Ok(models)
    }
}

pub fn layer_model_path(dir: &Path, layer: u32) -> PathBuf {
    dir.join(format!("layer{layer}.csv"))
}

pub fn train_all(
    seq: &AccessSequence,
    block_bits: u32,
    root_seed: u64,
    hash: Option<HashScheme>,
    params: &LernParams,
) -> Result<LayerModels> {
    let layers = seq.layer_ids();
    info!("training LERN models for {} layers", layers.len());
    let models = layers
        .par_iter()
        .map(|&l| {
            let seed = split(root_seed, Stream::Lern, l as u64);
            train_layer_with(seq, l, block_bits, seed, hash, params).map(|m| (l, m))
        })
        .collect::<Result<BTreeMap<u32, ClusterModel>>>()?;
    Ok(Arc::new(models))
}

/// Reads `layerN.csv` for every layer of `seq` from `dir`.
pub fn load_dir(seq: &AccessSequence, dir: &Path) -> Result<LayerModels> {
    let models = seq
        .layer_ids()
        .into_iter()
        .map(|l| import_model(&layer_model_path(dir, l)).map(|m| (l, m)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(Arc::new(models))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lern::model::tests::toy_sequence;

    #[test]
    fn cache_trains_once_per_key() {
        let seq = toy_sequence();
        let cache = ModelCache::new();
        let p = LernParams::default();
        let a = cache.get_or_train(&seq, 6, 1, None, &p).unwrap();
        let b = cache.get_or_train(&seq, 6, 1, None, &p).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let c = cache.get_or_train(&seq, 6, 2, None, &p).unwrap();
        assert!(!Arc::ptr_eq(&a, &c));
        assert_eq!(cache.len(), 2);
    }
}
