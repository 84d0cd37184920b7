//! Lloyd's k-means with k-means++ seeding.
//!
//! Identical points are collapsed into weighted points before clustering.
//! This is exact: identical points always share a nearest center, so the
//! iterates match plain Lloyd's on the expanded data.

use std::collections::HashMap;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step, final assignment last.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    /// `k` actually used; smaller than requested when there were fewer
    /// distinct points.
    pub k: usize,
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Distinct points with multiplicities, plus the distinct index of every input.
pub(crate) fn dedup(points: &[Vec<f64>]) -> (Vec<&[f64]>, Vec<f64>, Vec<usize>) {
    let mut uniq: Vec<&[f64]> = Vec::new();
    let mut weight: Vec<f64> = Vec::new();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut which = Vec::with_capacity(points.len());
    for p in points {
        let key: Vec<u64> = p.iter().map(|x| (x + 0.0).to_bits()).collect();
        let id = *seen.entry(key).or_insert_with(|| {
            uniq.push(p);
            weight.push(0.0);
            uniq.len() - 1
        });
        weight[id] += 1.0;
        which.push(id);
    }
    (uniq, weight, which)
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn sample_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if target < w {
                return i;
            }
            target -= w;
        }
    }
    // rounding fell off the end; take the last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Clustering("k must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::Clustering("no points to cluster".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Clustering("points have mixed dimensions".into()));
    }
    let (uniq, weight, which) = dedup(points);
    let k = if uniq.len() < k {
        warn!(
            "degenerate clustering: {} distinct points for k={k}, reducing k",
            uniq.len()
        );
        uniq.len()
    } else {
        k
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(uniq[sample_weighted(&mut rng, &weight)].to_vec());
    let mut d2: Vec<f64> = uniq.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let w: Vec<f64> = d2.iter().zip(&weight).map(|(d, w)| d * w).collect();
        let pick = sample_weighted(&mut rng, &w);
        let c = uniq[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(&uniq) {
            *d = d.min(dist2(p, &c));
        }
        centers.push(c);
    }

    let mut assign = vec![0usize; uniq.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut inertia = 0.0;
        for (i, p) in uniq.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            assign[i] = c;
            inertia += weight[i] * d;
        }
        history.push(inertia);
        if iterations >= max_iters {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0; k];
        for (i, p) in uniq.iter().enumerate() {
            let c = assign[i];
            mass[c] += weight[i];
            for (s, x) in sums[c].iter_mut().zip(p.iter()) {
                *s += weight[i] * x;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&mass)
            .zip(&centers)
            .map(|((s, &m), old)| {
                if m > 0.0 {
                    s.into_iter().map(|x| x / m).collect()
                } else {
                    old.clone()
                }
            })
            .collect();
        for c in 0..k {
            if mass[c] == 0.0 {
                // move the empty center onto the worst-served point
                let far = (0..uniq.len())
                    .max_by(|&a, &b| {
                        let da = nearest(uniq[a], &next).1;
                        let db = nearest(uniq[b], &next).1;
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap();
                next[c] = uniq[far].to_vec();
            }
        }
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift < tol {
            // final assignment against the settled centers
            let mut inertia = 0.0;
            for (i, p) in uniq.iter().enumerate() {
                let (c, d) = nearest(p, &centers);
                assign[i] = c;
                inertia += weight[i] * d;
            }
            history.push(inertia);
            break;
        }
    }

    Ok(KMeansResult {
        labels: which.iter().map(|&u| assign[u]).collect(),
        inertia: *history.last().unwrap(),
        inertia_history: history,
        iterations,
        centers,
        k,
    })
}

/// Per-dimension min-max ranges used to map features onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(points: &[Vec<f64>]) -> Self {
        let dim = points.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for p in points {
            for d in 0..dim {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        Self { min, max }
    }

    pub fn normalize(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(d, &x)| {
                let span = self.max[d] - self.min[d];
                if span > 0.0 {
                    (x - self.min[d]) / span
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn denormalize(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(d, &x)| x * (self.max[d] - self.min[d]) + self.min[d])
            .collect()
    }
}
