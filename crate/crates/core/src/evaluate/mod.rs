//! Beat-level and morphology scores, and their aggregation over recordings.

mod landmarks;
mod matching;
mod morphology;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use self::landmarks::{detect_pt, CycleLandmarks, Landmarks, PtWindows};
pub use self::matching::{f1, mae, match_peaks, MatchResult};
pub use self::morphology::{nmae, nmde};

use crate::error::{Error, Result};
use crate::io::PeakList;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NmaeScores {
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NmdeScores {
    pub pr: Option<f64>,
    pub qt: Option<f64>,
    pub st: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingScores {
    pub f1: f64,
    pub mae_ms: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// F1 at each extra matching window, keyed by the window in ms.
    pub f1_by_window: BTreeMap<String, f64>,
    pub nmae: NmaeScores,
    pub nmde: NmdeScores,
}

/// Everything needed to score one recording.
pub struct ScoreInput<'a> {
    pub truth_r: &'a PeakList,
    pub detected_r: &'a PeakList,
    /// Clean reference and estimated signals for morphology scores.
    pub signals: Option<(&'a [f64], &'a [f64])>,
    pub fs: f64,
    pub window_ms: f64,
    pub extra_windows: &'a [f64],
    pub pt: &'a PtWindows,
}

fn window_key(w: f64) -> String {
    format!("{w}")
}

pub fn score_recording(input: &ScoreInput) -> Result<RecordingScores> {
    let m = match_peaks(input.truth_r, input.detected_r, input.window_ms);
    let mut f1_by_window = BTreeMap::new();
    for &w in input.extra_windows {
        let mw = match_peaks(input.truth_r, input.detected_r, w);
        f1_by_window.insert(window_key(w), f1(&mw)?);
    }
    let mut scores = RecordingScores {
        f1: f1(&m)?,
        mae_ms: mae(&m).ok(),
        tp: m.tp(),
        fp: m.fp,
        fn_: m.fn_,
        f1_by_window,
        nmae: NmaeScores::default(),
        nmde: NmdeScores::default(),
    };
    if let Some((truth, est)) = input.signals {
        let lt = detect_pt(truth, input.fs, input.truth_r, input.pt);
        let le = detect_pt(est, input.fs, input.detected_r, input.pt);
        let landmark_nmae = |a: &PeakList, b: &PeakList| {
            let pairs = match_peaks(a, b, input.window_ms).pairs;
            nmae(truth, est, &pairs, input.fs).ok()
        };
        scores.nmae = NmaeScores {
            p: landmark_nmae(&lt.p, &le.p),
            r: nmae(truth, est, &m.pairs, input.fs).ok(),
            t: landmark_nmae(&lt.t, &le.t),
        };
        let cycle = |cs: &[CycleLandmarks], r: f64| cs.iter().find(|c| c.r == r).copied();
        let mut iv: [(Vec<f64>, Vec<f64>); 3] = Default::default();
        for &(t, d) in &m.pairs {
            let (Some(ct), Some(ce)) = (cycle(&lt.cycles, t), cycle(&le.cycles, d)) else {
                continue;
            };
            for (k, f) in [CycleLandmarks::pr, CycleLandmarks::qt, CycleLandmarks::st]
                .iter()
                .enumerate()
            {
                if let (Some(a), Some(b)) = (f(&ct), f(&ce)) {
                    iv[k].0.push(a);
                    iv[k].1.push(b);
                }
            }
        }
        scores.nmde = NmdeScores {
            pr: nmde(&iv[0].0, &iv[0].1).ok(),
            qt: nmde(&iv[1].0, &iv[1].1).ok(),
            st: nmde(&iv[2].0, &iv[2].1).ok(),
        };
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    Some(Summary {
        n: values.len(),
        mean: stats::mean(values)?,
        sd: stats::std_dev(values),
        median: stats::median(values)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub alpha: f64,
    pub per_recording: BTreeMap<String, f64>,
    pub summary: Summary,
}

/// For each `alpha`, the α-quantile of every recording's scores over its
/// channel combinations, summarised across recordings.
pub fn aggregate(per_combination: &BTreeMap<String, Vec<f64>>, alphas: &[f64]) -> Result<Vec<QuantileRow>> {
    if per_combination.is_empty() || per_combination.values().any(|v| v.is_empty()) {
        return Err(Error::arg("aggregation needs at least one score per recording"));
    }
    alphas
        .iter()
        .map(|&alpha| {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::arg(format!("quantile level {alpha} outside [0, 1]")));
            }
            let per_recording: BTreeMap<String, f64> = per_combination
                .iter()
                .map(|(k, v)| (k.clone(), stats::quantile(v, alpha).expect("non-empty")))
                .collect();
            let vals: Vec<f64> = per_recording.values().copied().collect();
            Ok(QuantileRow {
                alpha,
                summary: summarize(&vals).expect("non-empty"),
                per_recording,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_recording: BTreeMap<String, RecordingScores>,
    pub aggregates: BTreeMap<String, Summary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quantile_rows: Vec<QuantileRow>,
    pub config: serde_json::Value,
}

impl EvalReport {
    pub fn new(per_recording: BTreeMap<String, RecordingScores>, config: serde_json::Value) -> Self {
        let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for s in per_recording.values() {
            let mut put = |k: &str, v: Option<f64>| {
                if let Some(v) = v {
                    columns.entry(k.to_string()).or_default().push(v);
                }
            };
            put("f1", Some(s.f1));
            put("mae_ms", s.mae_ms);
            put("nmae_p", s.nmae.p);
            put("nmae_r", s.nmae.r);
            put("nmae_t", s.nmae.t);
            put("nmde_pr", s.nmde.pr);
            put("nmde_qt", s.nmde.qt);
            put("nmde_st", s.nmde.st);
            for (w, f) in &s.f1_by_window {
                put(&format!("f1@{w}ms"), Some(*f));
            }
        }
        let aggregates = columns
            .iter()
            .filter_map(|(k, v)| Some((k.clone(), summarize(v)?)))
            .collect();
        EvalReport {
            per_recording,
            aggregates,
            quantile_rows: Vec::new(),
            config,
        }
    }
}

/// Quartiles with whiskers at the most extreme points within 1.5·IQR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let q1 = stats::quantile(values, 0.25)?;
    let q3 = stats::quantile(values, 0.75)?;
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = values.iter().copied().filter(|v| (lo..=hi).contains(v));
    let whisker_lo = inside.clone().fold(f64::INFINITY, f64::min);
    let whisker_hi = inside.fold(f64::NEG_INFINITY, f64::max);
    let mut outliers: Vec<f64> = values.iter().copied().filter(|v| !(lo..=hi).contains(v)).collect();
    outliers.sort_by(f64::total_cmp);
    Some(BoxStats {
        q1,
        median: stats::median(values)?,
        q3,
        whisker_lo,
        whisker_hi,
        outliers,
    })
}

/// One CSV row per `(condition, metric)`; outliers are `;`-separated.
pub fn boxplot_csv(rows: &[(String, String, Vec<f64>)]) -> String {
    let mut out = String::from("condition,metric,n,q1,median,q3,whisker_lo,whisker_hi,outliers\n");
    for (cond, metric, values) in rows {
        if let Some(b) = box_stats(values) {
            let outliers: Vec<String> = b.outliers.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{cond},{metric},{},{},{},{},{},{},{}\n",
                values.len(),
                b.q1,
                b.median,
                b.q3,
                b.whisker_lo,
                b.whisker_hi,
                outliers.join(";")
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(v: &[f64]) -> PeakList {
        PeakList::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantile_rows() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), vec![0.8, 0.9, 1.0]);
        let rows = aggregate(&m, &[1.0, 0.5]).unwrap();
        assert_eq!(rows[0].per_recording["a"], 1.0);
        assert_eq!(rows[1].per_recording["a"], 0.9);

        let mut one = BTreeMap::new();
        one.insert("b".to_string(), vec![0.7]);
        for r in aggregate(&one, &[0.0, 0.3, 1.0]).unwrap() {
            assert_eq!(r.per_recording["b"], 0.7);
        }
        assert!(aggregate(&BTreeMap::new(), &[1.0]).is_err());
    }

    #[test]
    fn scores_one_recording() {
        let truth = pl(&[1000.0, 2000.0, 3000.0]);
        let det = pl(&[1004.0, 2000.0, 2600.0]);
        let s = score_recording(&ScoreInput {
            truth_r: &truth,
            detected_r: &det,
            signals: None,
            fs: 1000.0,
            window_ms: 50.0,
            extra_windows: &[2.0, 10.0],
            pt: &PtWindows::default(),
        })
        .unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (2, 1, 1));
        assert_eq!(s.f1, 4.0 / 6.0);
        assert_eq!(s.mae_ms, Some(2.0));
        assert_eq!(s.f1_by_window["2"], 2.0 / 6.0);
        assert_eq!(s.f1_by_window["10"], 4.0 / 6.0);
    }

    #[test]
    fn boxplot_whiskers() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 100.0];
        let b = box_stats(&v).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_hi, 5.0);
        assert_eq!(b.whisker_lo, 1.0);
        let csv = boxplot_csv(&[("c".into(), "f1".into(), v.to_vec())]);
        assert!(csv.lines().nth(1).unwrap().ends_with(",100"));
    }

    #[test]
    fn report_aggregates() {
        let mut per = BTreeMap::new();
        for (k, f) in [("a", 0.5), ("b", 1.0)] {
            per.insert(
                k.to_string(),
                RecordingScores {
                    f1: f,
                    mae_ms: Some(2.0),
                    tp: 1,
                    fp: 0,
                    fn_: 0,
                    f1_by_window: BTreeMap::new(),
                    nmae: NmaeScores::default(),
                    nmde: NmdeScores::default(),
                },
            );
        }
        let r = EvalReport::new(per, serde_json::json!({}));
        assert_eq!(r.aggregates["f1"].mean, 0.75);
        assert_eq!(r.aggregates["f1"].median, 0.75);
        assert!(!r.aggregates.contains_key("nmae_p"));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("per_recording").is_some() && json.get("config").is_some());
    }
}
