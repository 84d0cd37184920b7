use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// f1 must be at least this many times the runner-up to count as Immediate.
pub const DOMINANCE_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RcLabel {
    Cold = 0,
    Light = 1,
    Moderate = 2,
    Hot = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiLabel {
    Immediate = 0,
    Near = 1,
    Far = 2,
    Remote = 3,
}

impl RcLabel {
    pub const ALL: [RcLabel; 4] = [RcLabel::Cold, RcLabel::Light, RcLabel::Moderate, RcLabel::Hot];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl RiLabel {
    pub const ALL: [RiLabel; 4] = [RiLabel::Immediate, RiLabel::Near, RiLabel::Far, RiLabel::Remote];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Whether a reuse interval lies in the range this label stands for.
    pub fn covers(self, ri: i64) -> bool {
        match self {
            RiLabel::Immediate => (1..=10).contains(&ri),
            RiLabel::Near => (1..=100).contains(&ri),
            RiLabel::Far => ri > 10 && ri <= 500,
            RiLabel::Remote => ri > 100,
        }
    }
}

/// Ascending centers get Cold..Hot. With fewer than four centers the labels
/// are spread over the scale so the extremes stay Cold and Hot.
pub fn annotate_rc_clusters(centers: &[f64]) -> Vec<RcLabel> {
    let k = centers.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]).then(a.cmp(&b)));
    for w in order.windows(2) {
        if centers[w[0]] == centers[w[1]] {
            warn!(
                "RC centers {} and {} tie at {}; lower index ranks colder",
                w[0], w[1], centers[w[0]]
            );
        }
    }
    let mut out = vec![RcLabel::Cold; k];
    for (rank, &c) in order.iter().enumerate() {
        let level = if k == 4 {
            rank
        } else if k <= 1 {
            0
        } else {
            ((rank * 3) as f64 / (k - 1) as f64).round() as usize
        };
        out[c] = RcLabel::ALL[level];
    }
    out
}

/// Label one RI center by the dominance rules, ignoring the other centers.
pub fn ri_rule(c: &[f64; 4]) -> Result<RiLabel> {
    if c.iter().all(|&x| x <= 0.0) {
        return Err(Error::Annotation(
            "all-zero RI center (empty cluster); re-run k-means with another seed".into(),
        ));
    }
    let rest = c[1].max(c[2]).max(c[3]);
    if c[0] > rest {
        if c[0] >= DOMINANCE_RATIO * rest {
            Ok(RiLabel::Immediate)
        } else {
            Ok(RiLabel::Near)
        }
    } else if c[1] >= c[2] && c[1] >= c[3] {
        Ok(RiLabel::Far)
    } else {
        Ok(RiLabel::Remote)
    }
}

fn f1_share(c: &[f64; 4]) -> f64 {
    let t: f64 = c.iter().sum();
    if t > 0.0 {
        c[0] / t
    } else {
        0.0
    }
}

/// Labels every RI center by [`ri_rule`], then makes labels distinct: among
/// centers sharing a label the one with the largest f1 share keeps it and the
/// rest move one label farther. Centers pushed past Remote take the unused
/// labels, nearest label to the largest f1 share.
pub fn annotate_ri_clusters(centers: &[[f64; 4]]) -> Result<Vec<RiLabel>> {
    let mut labels: Vec<usize> = centers
        .iter()
        .map(|c| ri_rule(c).map(|l| l as usize))
        .collect::<Result<_>>()?;
    let share: Vec<f64> = centers.iter().map(f1_share).collect();
    let by_share = |a: &usize, b: &usize| share[*b].total_cmp(&share[*a]).then(a.cmp(b));

    let mut overflow = Vec::new();
    for level in 0..4 {
        let mut here: Vec<usize> = (0..centers.len()).filter(|&i| labels[i] == level).collect();
        here.sort_by(by_share);
        for &i in here.iter().skip(1) {
            if level == 3 {
                overflow.push(i);
            } else {
                labels[i] = level + 1;
            }
        }
    }
    if !overflow.is_empty() {
        overflow.sort_by(by_share);
        let free: Vec<usize> = (0..4)
            .filter(|l| (0..labels.len()).all(|i| overflow.contains(&i) || labels[i] != *l))
            .collect();
        for (i, l) in overflow.into_iter().zip(free) {
            labels[i] = l;
        }
    }
    Ok(labels.into_iter().map(|l| RiLabel::ALL[l]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use RcLabel::*;
    use RiLabel::*;

    #[test]
    fn rc_order_statistics() {
        assert_eq!(
            annotate_rc_clusters(&[2.1, 50.3, 9.8, 400.0]),
            vec![Cold, Moderate, Light, Hot]
        );
        assert_eq!(annotate_rc_clusters(&[1.0, 2.0, 3.0, 4.0]), vec![Cold, Light, Moderate, Hot]);
        assert_eq!(annotate_rc_clusters(&[3.0, 3.0, 9.0, 20.0]), vec![Cold, Light, Moderate, Hot]);
    }

    #[test]
    fn rc_fewer_centers_keep_extremes() {
        assert_eq!(annotate_rc_clusters(&[5.0, 3.0]), vec![Hot, Cold]);
        assert_eq!(annotate_rc_clusters(&[7.0]), vec![Cold]);
        assert_eq!(annotate_rc_clusters(&[9.0, 1.0, 4.0]), vec![Hot, Cold, Moderate]);
    }

    #[test]
    fn ri_rules_by_hand() {
        let c = [
            [90.0, 5.0, 3.0, 2.0],
            [40.0, 35.0, 15.0, 10.0],
            [10.0, 70.0, 15.0, 5.0],
            [5.0, 10.0, 40.0, 45.0],
        ];
        assert_eq!(annotate_ri_clusters(&c).unwrap(), vec![Immediate, Near, Far, Remote]);
        assert_eq!(ri_rule(&[100.0, 0.0, 0.0, 0.0]).unwrap(), Immediate);
        assert_eq!(ri_rule(&[0.0, 0.0, 0.0, 100.0]).unwrap(), Remote);
    }

    #[test]
    fn all_zero_center_is_error() {
        assert!(annotate_ri_clusters(&[[0.0; 4], [1.0, 0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn duplicates_demoted_to_bijection() {
        // three f1-pure centers and one remote center
        let c = [
            [4.0, 0.0, 0.0, 0.0],
            [9.0, 0.5, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 3.0],
        ];
        let l = annotate_ri_clusters(&c).unwrap();
        let mut sorted = l.clone();
        sorted.sort();
        assert_eq!(sorted, vec![Immediate, Near, Far, Remote]);
        // 0 and 2 share f1 share 1.0, lower index wins; 1 has the lowest share
        assert_eq!(l[0], Immediate);
        assert_eq!(l[2], Near);
        assert_eq!(l[3], Remote);
        assert_eq!(l[1], Far);
    }

    #[test]
    fn remote_overflow_takes_free_labels() {
        let c = [
            [0.0, 0.0, 1.0, 5.0],
            [1.0, 0.0, 0.0, 5.0],
            [2.0, 0.0, 0.0, 5.0],
            [0.0, 0.0, 0.0, 5.0],
        ];
        let l = annotate_ri_clusters(&c).unwrap();
        // center 2 has the largest f1 share and keeps Remote; the rest fill
        // Immediate, Near, Far by decreasing share
        assert_eq!(l[2], Remote);
        assert_eq!(l[1], Immediate);
        assert_eq!(l[0], Near);
        assert_eq!(l[3], Far);
    }

    #[test]
    fn covers_ranges() {
        assert!(Immediate.covers(10) && !Immediate.covers(11));
        assert!(Near.covers(1) && Near.covers(100) && !Near.covers(101));
        assert!(!Far.covers(10) && Far.covers(500) && !Far.covers(501));
        assert!(!Remote.covers(100) && Remote.covers(101));
        assert!(!Remote.covers(-1));
    }
}
