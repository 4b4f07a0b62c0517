//! End-to-end runs: simulate recordings under a grid of conditions,
//! decompose them and score the fetal estimates against the truth.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, DecomposeConfig, DecompositionOutput};
use crate::error::{Error, Result};
use crate::evaluate::{aggregate, score_recording, EvalReport, PtWindows, QuantileRow, RecordingScores, ScoreInput};
use crate::io::{load_record, AnnotationKind, Record, RecordFormat};
use crate::preprocess::preprocess_channels;
use crate::simulate::{generate_dataset, synthetic_donors, SimConfig, SimRecord};

/// One (ratio, SNR) cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub r: f64,
    pub snr_db: Option<f64>,
}

impl Condition {
    pub fn label(&self) -> String {
        match self.snr_db {
            Some(s) => format!("r={}_snr={}", self.r, s),
            None => format!("r={}_snr=inf", self.r),
        }
    }

    /// Ratios 1/4, 1/6, 1/8 crossed with 20, 10 and 5 dB.
    pub fn sweep() -> Vec<Condition> {
        let mut out = Vec::new();
        for snr in [20.0, 10.0, 5.0] {
            for r in [0.25, 1.0 / 6.0, 0.125] {
                out.push(Condition { r, snr_db: Some(snr) });
            }
        }
        out
    }
}

/// Where donor recordings come from. Without directories, `count`
/// synthetic donors of each kind are generated from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DonorConfig {
    pub count: usize,
    pub maternal_dir: Option<PathBuf>,
    pub fetal_dir: Option<PathBuf>,
}

impl Default for DonorConfig {
    fn default() -> Self {
        DonorConfig {
            count: 10,
            maternal_dir: None,
            fetal_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub window_ms: f64,
    /// Additional matching windows reported as `f1@<w>ms`.
    pub extra_windows: Vec<f64>,
    pub pt: PtWindows,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            window_ms: 50.0,
            extra_windows: vec![10.0, 25.0],
            pt: PtWindows::fetal(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_ms > 0.0) || self.extra_windows.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::arg("matching windows must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Seeds donor synthesis and noise; overrides `sim.seed`.
    pub seed: u64,
    pub donors: DonorConfig,
    /// Mixing setup; its `r` and `snr_db` are replaced per condition.
    pub sim: SimConfig,
    /// Empty means the single condition given by `sim`.
    pub conditions: Vec<Condition>,
    /// Simulated channels handed to the decomposition (0-based); all when
    /// absent.
    pub channels: Option<Vec<usize>>,
    pub decompose: DecomposeConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            donors: DonorConfig::default(),
            sim: SimConfig::default(),
            conditions: Vec::new(),
            channels: None,
            decompose: DecomposeConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.decompose.validate()?;
        self.eval.validate()?;
        for c in &self.conditions {
            SimConfig {
                r: c.r,
                snr_db: c.snr_db,
                ..self.sim.clone()
            }
            .validate()?;
        }
        if let Some(ch) = &self.channels {
            if ch.is_empty() || ch.iter().any(|&j| j >= self.sim.angles.len()) {
                return Err(Error::arg(format!(
                    "channel selection {ch:?} does not fit {} simulated channels",
                    self.sim.angles.len()
                )));
            }
        }
        if self.donors.count == 0 && self.donors.maternal_dir.is_none() {
            return Err(Error::arg("donor count must be positive"));
        }
        Ok(())
    }

    pub fn effective_conditions(&self) -> Vec<Condition> {
        if self.conditions.is_empty() {
            vec![Condition {
                r: self.sim.r,
                snr_db: self.sim.snr_db,
            }]
        } else {
            self.conditions.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub label: String,
    pub report: EvalReport,
    /// Recordings the decomposition could not process, with the reason.
    pub failures: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub conditions: Vec<ConditionReport>,
}

impl PipelineReport {
    /// `(condition, metric, values)` triples for [`crate::evaluate::boxplot_csv`].
    pub fn boxplot_rows(&self, metrics: &[&str]) -> Vec<(String, String, Vec<f64>)> {
        let mut rows = Vec::new();
        for c in &self.conditions {
            for &m in metrics {
                let values: Vec<f64> = c.report.per_recording.values().filter_map(|s| metric(s, m)).collect();
                rows.push((c.label.clone(), m.to_string(), values));
            }
        }
        rows
    }
}

/// Looks up a metric of [`RecordingScores`] by the name used in aggregates.
pub fn metric(s: &RecordingScores, name: &str) -> Option<f64> {
    match name {
        "f1" => Some(s.f1),
        "mae_ms" => s.mae_ms,
        "nmae_p" => s.nmae.p,
        "nmae_r" => s.nmae.r,
        "nmae_t" => s.nmae.t,
        "nmde_pr" => s.nmde.pr,
        "nmde_qt" => s.nmde.qt,
        "nmde_st" => s.nmde.st,
        other => other
            .strip_prefix("f1@")
            .and_then(|w| w.strip_suffix("ms"))
            .and_then(|w| s.f1_by_window.get(w).copied()),
    }
}

/// Every record file (`.csv` or `.hea`) in `dir`, sorted by name.
pub fn load_record_dir(dir: &Path) -> Result<Vec<Record>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let is_record = name.ends_with(".hea") || (name.ends_with(".csv") && !name.ends_with(".ann.csv"));
        if is_record {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| load_record(p, RecordFormat::from_path(p)))
        .collect()
}

fn donors(config: &PipelineConfig) -> Result<(Vec<Record>, Vec<Record>)> {
    match (&config.donors.maternal_dir, &config.donors.fetal_dir) {
        (Some(m), Some(f)) => Ok((load_record_dir(m)?, load_record_dir(f)?)),
        (None, None) => synthetic_donors(config.donors.count, config.seed, config.sim.duration_s),
        _ => Err(Error::arg("give both donor directories or neither")),
    }
}

fn select(channels: &[Vec<f64>], idx: Option<&[usize]>) -> Vec<Vec<f64>> {
    match idx {
        Some(idx) => idx.iter().map(|&j| channels[j].clone()).collect(),
        None => channels.to_vec(),
    }
}

/// Scores one decomposed simulated record. The reference for morphology is
/// the clean fetal part, preprocessed like the input and mixed along the
/// chosen direction.
pub fn score_simulated(
    sim: &SimRecord,
    out: &DecompositionOutput,
    channels: Option<&[usize]>,
    decompose: &DecomposeConfig,
    eval: &EvalConfig,
) -> Result<RecordingScores> {
    let fs = sim.record.fs() as f64;
    let clean = preprocess_channels(&select(&sim.fecg, channels), fs, &decompose.filter)?;
    let mut reference = vec![0.0; clean[0].len()];
    for (c, &w) in clean.iter().zip(&out.theta_star) {
        for (r, v) in reference.iter_mut().zip(c) {
            *r += w * v;
        }
    }
    let truth = sim
        .truth(AnnotationKind::FetalR)
        .ok_or_else(|| Error::arg("simulated record lacks fetal annotations"))?;
    score_recording(&ScoreInput {
        truth_r: truth,
        detected_r: &out.fetal_peaks,
        signals: Some((&reference, &out.fecg)),
        fs,
        window_ms: eval.window_ms,
        extra_windows: &eval.extra_windows,
        pt: &eval.pt,
    })
}

fn run_condition(records: &[SimRecord], config: &PipelineConfig, condition: Condition) -> Result<ConditionReport> {
    let channels = config.channels.as_deref();
    let results: Vec<(String, Result<RecordingScores>)> = records
        .par_iter()
        .map(|sim| {
            let name = sim.record.name().to_string();
            let record = match channels {
                Some(idx) => sim.record.select_channels(idx),
                None => Ok(sim.record.clone()),
            };
            let scored = record
                .and_then(|r| decompose(&r, &config.decompose))
                .and_then(|out| score_simulated(sim, &out, channels, &config.decompose, &config.eval));
            (name, scored)
        })
        .collect();
    let mut per_recording = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for (name, r) in results {
        match r {
            Ok(s) => {
                per_recording.insert(name, s);
            }
            Err(e) if e.is_data_error() => {
                log::warn!("{}: {name}: {e}", condition.label());
                failures.insert(name, e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    let echo = serde_json::json!({ "condition": condition, "eval": config.eval });
    Ok(ConditionReport {
        condition,
        label: condition.label(),
        report: EvalReport::new(per_recording, echo),
        failures,
    })
}

/// Simulates, decomposes and scores every condition of `config`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    config.validate()?;
    let (maternal, fetal) = donors(config)?;
    let mut conditions = Vec::new();
    for condition in config.effective_conditions() {
        let sim = SimConfig {
            r: condition.r,
            snr_db: condition.snr_db,
            seed: config.seed,
            ..config.sim.clone()
        };
        let records = generate_dataset(&maternal, &fetal, &sim)?;
        if records.is_empty() {
            return Err(Error::arg("no donor pair was long enough to simulate a record"));
        }
        log::info!("{}: {} records", condition.label(), records.len());
        conditions.push(run_condition(&records, config, condition)?);
    }
    Ok(PipelineReport { conditions })
}

/// Result of decomposing recorded data over several channel subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    /// Per channel subset (labelled like `"1+4"`, 1-based), scores by recording.
    pub by_subset: BTreeMap<String, EvalReport>,
    /// F1 quantiles over subsets, per recording.
    pub f1_quantiles: Vec<QuantileRow>,
    pub mae_quantiles: Vec<QuantileRow>,
    pub failures: BTreeMap<String, String>,
}

impl DatasetReport {
    /// The subset with the highest mean F1 (ties go to the earlier label).
    pub fn best_subset(&self) -> Option<(&str, &EvalReport)> {
        self.by_subset
            .iter()
            .filter_map(|(k, r)| r.aggregates.get("f1").map(|s| (k.as_str(), r, s.mean)))
            .fold(None, |best: Option<(&str, &EvalReport, f64)>, cur| match best {
                Some(b) if !(cur.2 > b.2) => Some(b),
                _ => Some(cur),
            })
            .map(|(k, r, _)| (k, r))
    }
}

/// Every `k`-element subset of `0..n` in lexicographic order.
pub fn channel_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Decomposes annotated recordings over the given channel subsets and scores
/// the fetal R peaks.
pub fn evaluate_dataset(
    records: &[Record],
    subsets: &[Vec<usize>],
    decompose_config: &DecomposeConfig,
    eval: &EvalConfig,
    alphas: &[f64],
) -> Result<DatasetReport> {
    let jobs: Vec<(usize, usize)> = (0..records.len())
        .flat_map(|i| (0..subsets.len()).map(move |s| (i, s)))
        .collect();
    let results: Vec<Result<RecordingScores>> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let rec = &records[i];
            let truth = rec
                .annotation(AnnotationKind::FetalR)
                .ok_or_else(|| Error::arg(format!("{} has no fetal annotations", rec.name())))?;
            let out = decompose(&rec.select_channels(&subsets[s])?, decompose_config)?;
            score_recording(&ScoreInput {
                truth_r: truth,
                detected_r: &out.fetal_peaks,
                signals: None,
                fs: rec.fs() as f64,
                window_ms: eval.window_ms,
                extra_windows: &eval.extra_windows,
                pt: &eval.pt,
            })
        })
        .collect();
    let label = |s: &[usize]| s.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join("+");
    let mut by_subset: BTreeMap<String, BTreeMap<String, RecordingScores>> = BTreeMap::new();
    let mut f1s: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut maes: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for (&(i, s), r) in jobs.iter().zip(results) {
        let name = records[i].name().to_string();
        match r {
            Ok(sc) => {
                f1s.entry(name.clone()).or_default().push(sc.f1);
                if let Some(m) = sc.mae_ms {
                    maes.entry(name.clone()).or_default().push(m);
                }
                by_subset.entry(label(&subsets[s])).or_default().insert(name, sc);
            }
            Err(e) if e.is_data_error() => {
                failures.insert(format!("{name}/{}", label(&subsets[s])), e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    let echo = serde_json::json!({ "eval": eval });
    Ok(DatasetReport {
        by_subset: by_subset
            .into_iter()
            .map(|(k, v)| (k, EvalReport::new(v, echo.clone())))
            .collect(),
        f1_quantiles: if f1s.is_empty() { Vec::new() } else { aggregate(&f1s, alphas)? },
        mae_quantiles: if maes.is_empty() { Vec::new() } else { aggregate(&maes, alphas)? },
        failures,
    })
}
