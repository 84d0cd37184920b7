use std::collections::BTreeMap;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::annotate::{annotate_rc_clusters, annotate_ri_clusters, RcLabel, RiLabel};
use super::features::extract_features;
use super::kmeans::{kmeans, MinMax, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use super::signature::{build_reuse_signature_keyed, SignatureTrace};
use super::silhouette::silhouette;
use crate::error::{Error, Result};
use crate::predictors::HashScheme;
use crate::trace::{AccessSequence, MemoryAccess};

/// Cluster index meaning "occurs once in the layer".
pub const NO_REUSE: i8 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LernParams {
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LernParams {
    fn default() -> Self {
        Self {
            k: 4,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

/// LERN output for one layer.
///
/// `assignments` hold center indices; the annotations translate them into
/// labels. Lines are keyed by block address, or by table index when the
/// model was trained under a hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub layer_id: u32,
    pub block_bits: u32,
    pub hash: Option<HashScheme>,
    pub rc_centers: Vec<f64>,
    pub ri_centers: Vec<[f64; 4]>,
    pub rc_annotation: Vec<RcLabel>,
    pub ri_annotation: Vec<RiLabel>,
    pub normalization: MinMax,
    pub silhouette_rc: Option<f64>,
    pub silhouette_ri: Option<f64>,
    #[serde(skip)]
    pub assignments: BTreeMap<u64, (i8, i8)>,
}

impl ClusterModel {
    fn empty(layer_id: u32, block_bits: u32, hash: Option<HashScheme>) -> Self {
        Self {
            layer_id,
            block_bits,
            hash,
            rc_centers: Vec::new(),
            ri_centers: Vec::new(),
            rc_annotation: Vec::new(),
            ri_annotation: Vec::new(),
            normalization: MinMax {
                min: vec![],
                max: vec![],
            },
            silhouette_rc: None,
            silhouette_ri: None,
            assignments: BTreeMap::new(),
        }
    }

    /// Key a byte address the way this model's lines are keyed.
    pub fn key_of(&self, address: u64) -> u64 {
        let block = address >> self.block_bits;
        match self.hash {
            Some(h) => h.index(block),
            None => block,
        }
    }

    /// Labels of a line key; `None` for single-occurrence or unknown lines.
    pub fn labels(&self, key: u64) -> Option<(RcLabel, RiLabel)> {
        let &(rc, ri) = self.assignments.get(&key)?;
        if rc < 0 || ri < 0 {
            return None;
        }
        Some((self.rc_annotation[rc as usize], self.ri_annotation[ri as usize]))
    }

    pub fn labels_for_address(&self, address: u64) -> Option<(RcLabel, RiLabel)> {
        self.labels(self.key_of(address))
    }

    /// RC center of the cluster annotated Cold.
    pub fn cold_center(&self) -> Option<f64> {
        self.rc_annotation
            .iter()
            .position(|&l| l == RcLabel::Cold)
            .map(|i| self.rc_centers[i])
    }

    /// Number of lines that occur only once.
    pub fn no_reuse_lines(&self) -> usize {
        self.assignments.values().filter(|a| a.0 < 0).count()
    }
}

fn layer_accesses(seq: &AccessSequence, layer_id: u32) -> Result<&[MemoryAccess]> {
    if seq.layer_marks.is_empty() && layer_id == 0 {
        return Ok(&seq.accesses);
    }
    seq.layer_slice(layer_id)
        .ok_or_else(|| Error::Validation(format!("layer {layer_id} not present in trace")))
}

pub fn train_layer(
    seq: &AccessSequence,
    layer_id: u32,
    block_bits: u32,
    seed: u64,
) -> Result<ClusterModel> {
    train_layer_with(seq, layer_id, block_bits, seed, None, &LernParams::default())
}

pub fn train_layer_hashed(
    seq: &AccessSequence,
    layer_id: u32,
    block_bits: u32,
    seed: u64,
    hash: HashScheme,
) -> Result<ClusterModel> {
    train_layer_with(seq, layer_id, block_bits, seed, Some(hash), &LernParams::default())
}

pub fn train_layer_with(
    seq: &AccessSequence,
    layer_id: u32,
    block_bits: u32,
    seed: u64,
    hash: Option<HashScheme>,
    params: &LernParams,
) -> Result<ClusterModel> {
    if let Some(h) = hash {
        h.validate()?;
    }
    let accesses = layer_accesses(seq, layer_id)?;
    let tr = match hash {
        Some(h) => build_reuse_signature_keyed(accesses, block_bits, |b| h.index(b)),
        None => build_reuse_signature_keyed(accesses, block_bits, |b| b),
    };
    fit_signature(&tr, layer_id, hash, seed, params)
}

/// Clusters an already-built signature trace.
pub fn fit_signature(
    tr: &SignatureTrace,
    layer_id: u32,
    hash: Option<HashScheme>,
    seed: u64,
    params: &LernParams,
) -> Result<ClusterModel> {
    let mut model = ClusterModel::empty(layer_id, tr.block_bits, hash);
    let (f_ri, f_rc) = extract_features(tr);
    let multi: Vec<usize> = (0..tr.n_unique()).filter(|&i| f_rc[i] >= 2).collect();
    for lr in tr.iter() {
        model.assignments.insert(lr.line, (NO_REUSE, NO_REUSE));
    }
    if multi.is_empty() {
        debug!("layer {layer_id}: no reused lines, everything is No-Reuse");
        return Ok(model);
    }

    let rc_points: Vec<Vec<f64>> = multi.iter().map(|&i| vec![f_rc[i] as f64]).collect();
    let rc = kmeans(&rc_points, params.k, seed, params.max_iters, params.tol)?;
    model.rc_centers = rc.centers.iter().map(|c| c[0]).collect();
    model.rc_annotation = annotate_rc_clusters(&model.rc_centers);
    let rc_norm = MinMax::fit(&rc_points);
    let rc_normed: Vec<Vec<f64>> = rc_points.iter().map(|p| rc_norm.normalize(p)).collect();
    model.silhouette_rc = (rc.k >= 2).then(|| silhouette(&rc_normed, &rc.labels)).transpose()?;

    let ri_raw: Vec<Vec<f64>> = multi.iter().map(|&i| f_ri[i].as_f64().to_vec()).collect();
    let norm = MinMax::fit(&ri_raw);
    let ri_points: Vec<Vec<f64>> = ri_raw.iter().map(|p| norm.normalize(p)).collect();
    let mut attempt = 0u64;
    let (ri, ri_centers, ri_annotation) = loop {
        let ri = kmeans(
            &ri_points,
            params.k,
            seed ^ 0x5249_0000 ^ attempt,
            params.max_iters,
            params.tol,
        )?;
        let centers: Vec<[f64; 4]> = ri
            .centers
            .iter()
            .map(|c| {
                let d = norm.denormalize(c);
                [d[0], d[1], d[2], d[3]]
            })
            .collect();
        match annotate_ri_clusters(&centers) {
            Ok(a) => break (ri, centers, a),
            Err(e) if attempt < 8 => {
                warn!("layer {layer_id}: {e}; retrying k-means");
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    };
    model.silhouette_ri = (ri.k >= 2).then(|| silhouette(&ri_points, &ri.labels)).transpose()?;
    model.ri_centers = ri_centers;
    model.ri_annotation = ri_annotation;
    model.normalization = norm;

    for (n, &i) in multi.iter().enumerate() {
        let line = tr.lines[i].line;
        model
            .assignments
            .insert(line, (rc.labels[n] as i8, ri.labels[n] as i8));
    }
    Ok(model)
}
