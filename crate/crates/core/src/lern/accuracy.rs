use super::annotate::RiLabel;
use super::model::ClusterModel;
use super::signature::SignatureTrace;

/// Correct and total intervals of one line predicted as `label`.
pub fn line_hits(label: RiLabel, intervals: &[i64]) -> (u64, u64) {
    let ris: Vec<i64> = intervals.iter().copied().filter(|&r| r >= 1).collect();
    let ok = ris.iter().filter(|&&r| label.covers(r)).count();
    (ok as u64, ris.len() as u64)
}

pub fn line_accuracy(label: RiLabel, intervals: &[i64]) -> f64 {
    let (ok, n) = line_hits(label, intervals);
    if n == 0 {
        1.0
    } else {
        ok as f64 / n as f64
    }
}

/// Share of non-final reuse intervals that fall in the range of their line's
/// RI cluster. Lines the model does not cover count as wrong. Returns 1.0
/// when the trace has no reuse at all.
pub fn prediction_accuracy(tr: &SignatureTrace, model: &ClusterModel) -> f64 {
    let (mut ok, mut total) = (0u64, 0u64);
    for lr in tr.iter() {
        let ris = lr.rv.reuse_intervals();
        if ris.is_empty() {
            continue;
        }
        match model.labels(lr.line) {
            Some((_, ri)) => {
                let (o, n) = line_hits(ri, ris);
                ok += o;
                total += n;
            }
            None => total += ris.len() as u64,
        }
    }
    if total == 0 {
        1.0
    } else {
        ok as f64 / total as f64
    }
}
