use std::collections::HashMap;

use super::kmeans::dist2;
use crate::error::{Error, Result};

/// Mean silhouette over all points, Euclidean distance.
///
/// Points sharing both coordinates and label are scored once and weighted by
/// multiplicity, which gives the same mean as scoring every copy. A point in
/// a singleton cluster scores 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::Clustering("points and labels differ in length".into()));
    }
    let mut uniq: Vec<(&[f64], usize)> = Vec::new();
    let mut weight: Vec<f64> = Vec::new();
    let mut seen: HashMap<(Vec<u64>, usize), usize> = HashMap::new();
    for (p, &l) in points.iter().zip(labels) {
        let key = (p.iter().map(|x| (x + 0.0).to_bits()).collect(), l);
        let id = *seen.entry(key).or_insert_with(|| {
            uniq.push((p, l));
            weight.push(0.0);
            uniq.len() - 1
        });
        weight[id] += 1.0;
    }
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut size = vec![0.0; n_labels];
    for (&(_, l), &w) in uniq.iter().zip(&weight) {
        size[l] += w;
    }
    if size.iter().filter(|&&s| s > 0.0).count() < 2 {
        return Err(Error::Clustering(
            "silhouette needs at least two non-empty clusters".into(),
        ));
    }

    let mut total = 0.0;
    let mut sums = vec![0.0; n_labels];
    for (i, &(p, l)) in uniq.iter().enumerate() {
        if size[l] <= 1.0 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, &(q, m)) in uniq.iter().enumerate() {
            if i != j {
                sums[m] += weight[j] * dist2(p, q).sqrt();
            }
        }
        let a = sums[l] / (size[l] - 1.0);
        let b = (0..n_labels)
            .filter(|&m| m != l && size[m] > 0.0)
            .map(|m| sums[m] / size[m])
            .fold(f64::INFINITY, f64::min);
        let s = if a.max(b) > 0.0 { (b - a) / a.max(b) } else { 0.0 };
        total += weight[i] * s;
    }
    Ok(total / points.len() as f64)
}
