use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::PeakList;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `(truth, detected)` times in ms, in truth order.
    pub pairs: Vec<(f64, f64)>,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.pairs.len()
    }
}

/// One-to-one matching, walking the truth in time order and pairing each
/// beat with the nearest unclaimed detection within `window_ms`. Equal
/// distances go to the earlier detection.
pub fn match_peaks(truth: &PeakList, detected: &PeakList, window_ms: f64) -> MatchResult {
    let det = detected.times();
    let mut used = vec![false; det.len()];
    let mut pairs = Vec::new();
    for &t in truth.times() {
        let lo = det.partition_point(|&d| d < t - window_ms);
        let mut best: Option<(usize, f64)> = None;
        for (j, &d) in det.iter().enumerate().skip(lo) {
            if d > t + window_ms {
                break;
            }
            if used[j] {
                continue;
            }
            let dist = (d - t).abs();
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((j, dist));
            }
        }
        if let Some((j, _)) = best {
            used[j] = true;
            pairs.push((t, det[j]));
        }
    }
    let tp = pairs.len();
    MatchResult {
        pairs,
        fp: det.len() - tp,
        fn_: truth.len() - tp,
    }
}

/// `2TP / (2TP + FN + FP)`.
pub fn f1(m: &MatchResult) -> Result<f64> {
    let tp = m.tp() as f64;
    let denom = 2.0 * tp + m.fn_ as f64 + m.fp as f64;
    if denom == 0.0 {
        return Err(Error::arg("F1 is undefined with no truth and no detections"));
    }
    Ok(2.0 * tp / denom)
}

/// Mean absolute timing error over matched pairs, ms.
pub fn mae(m: &MatchResult) -> Result<f64> {
    if m.pairs.is_empty() {
        return Err(Error::arg("MAE is undefined without matched pairs"));
    }
    Ok(m.pairs.iter().map(|(t, d)| (t - d).abs()).sum::<f64>() / m.pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(v: &[f64]) -> PeakList {
        PeakList::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hand_example() {
        let m = match_peaks(&pl(&[1000.0, 2000.0]), &pl(&[1010.0, 2500.0]), 50.0);
        assert_eq!(m.pairs, vec![(1000.0, 1010.0)]);
        assert_eq!((m.fp, m.fn_), (1, 1));
        assert_eq!(f1(&m).unwrap(), 0.5);
        assert_eq!(mae(&m).unwrap(), 10.0);
    }

    #[test]
    fn identical_lists() {
        let a = pl(&[100.0, 900.0, 1700.0]);
        let m = match_peaks(&a, &a, 50.0);
        assert_eq!((m.tp(), m.fp, m.fn_), (3, 0, 0));
        assert_eq!(f1(&m).unwrap(), 1.0);
        assert_eq!(mae(&m).unwrap(), 0.0);
    }

    #[test]
    fn tie_goes_to_earlier() {
        let m = match_peaks(&pl(&[1000.0]), &pl(&[960.0, 1040.0]), 50.0);
        assert_eq!(m.pairs, vec![(1000.0, 960.0)]);
        assert_eq!(m.fp, 1);
    }

    #[test]
    fn undefined_scores() {
        let m = match_peaks(&PeakList::empty(), &PeakList::empty(), 50.0);
        assert!(f1(&m).is_err());
        assert!(mae(&m).is_err());
    }
}
