use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fecg::decompose::{decompose, DecomposeConfig};
use fecg::evaluate::{boxplot_csv, score_recording, EvalReport, RecordingScores, ScoreInput};
use fecg::io::{load_record, AnnotationKind, PeakList, Record, RecordFormat};
use fecg::pipeline::{
    channel_subsets, evaluate_dataset, load_record_dir, run_pipeline, Condition, EvalConfig, PipelineConfig,
};
use fecg::preprocess::{preprocess_channel, FilterSpec};
use fecg::rpeak::{detect_peaks, RpeakParams};
use fecg::shrinkage::{optimal_shrink, DenoiseConfig, Matrix};
use fecg::simulate::{generate_dataset, synthetic_donors, write_dataset, SimConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::*;
use crate::output::{ensure_dir, write_json, write_signal, write_text, RunMeta};
use crate::usage;

/// Metrics summarized in the per-condition box-plot table.
const BOXPLOT_METRICS: [&str; 8] = [
    "f1", "mae_ms", "nmae_p", "nmae_r", "nmae_t", "nmde_pr", "nmde_qt", "nmde_st",
];

/// Quantile levels of the per-recording best-to-worst channel subset table.
const SUBSET_ALPHAS: [f64; 5] = [1.0, 0.75, 0.5, 0.25, 0.0];

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Decompose(a) => run_decompose(g, a),
        Command::Rpeaks(a) => run_rpeaks(g, a),
        Command::Shrink(a) => run_shrink(g, a),
        Command::Simulate(a) => run_simulate(g, a),
        Command::Evaluate(a) => run_evaluate(g, a),
        Command::Pipeline(a) => run_pipeline_cmd(g, a),
    }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn validated(r: fecg::Result<()>) -> Result<()> {
    r.map_err(|e| usage(e.to_string()))
}

fn out_dir(g: &Global) -> Result<PathBuf> {
    let dir = g.out.clone().ok_or_else(|| usage("--out is required for this command"))?;
    ensure_dir(&dir)?;
    Ok(dir)
}

/// 1-based channel numbers from the command line to 0-based indices.
fn zero_based(channels: &[usize]) -> Result<Vec<usize>> {
    if channels.is_empty() || channels.contains(&0) {
        return Err(usage("channels are numbered from 1"));
    }
    Ok(channels.iter().map(|c| c - 1).collect())
}

fn apply_filter(f: &mut FilterSpec, a: &FilterArgs) {
    if let Some(v) = a.lp_cutoff {
        f.lowpass_cutoff = v;
    }
    if let Some(v) = a.notch {
        f.notch_center = v;
    }
    if let Some(v) = a.median_short_ms {
        f.median_short_ms = v;
    }
    if let Some(v) = a.median_long_ms {
        f.median_long_ms = v;
    }
}

fn apply_separation(c: &mut DecomposeConfig, a: &SeparationArgs) {
    apply_filter(&mut c.filter, &a.filter);
    if let Some(v) = a.grid_steps {
        c.grid_steps = v;
    }
    if let Some(v) = a.iterations {
        c.iterations = v;
    }
    if a.nonlocal_median.is_some() {
        c.nonlocal_median = a.nonlocal_median;
    }
    if let Some(v) = a.c_noise {
        c.denoise.c_noise = v;
    }
}

fn read_record(path: &Path) -> Result<Record> {
    Ok(load_record(path, RecordFormat::from_path(path))?)
}

#[derive(Serialize)]
struct ThetaStar<'a> {
    index: usize,
    theta: &'a [f64],
}

fn run_decompose(g: &Global, a: &DecomposeArgs) -> Result<()> {
    let mut config: DecomposeConfig = load_config(g.config.as_deref())?;
    apply_separation(&mut config, &a.separation);
    validated(config.validate())?;
    let out = out_dir(g)?;
    let mut record = read_record(&a.input)?;
    if let Some(ch) = &a.channels {
        record = record.select_channels(&zero_based(ch)?)?;
    }
    log::info!("{}: {} channels, {} samples", record.name(), record.n_channels(), record.n_samples());
    let d = decompose(&record, &config)?;
    write_signal(&out.join("mecg.csv"), "mecg", d.fs, &d.mecg)?;
    write_signal(&out.join("rfecg.csv"), "rfecg", d.fs, &d.rfecg)?;
    write_signal(&out.join("fecg.csv"), "fecg", d.fs, &d.fecg)?;
    write_json(&out.join("fetal_peaks.json"), &d.fetal_peaks)?;
    write_json(&out.join("maternal_peaks.json"), &d.maternal_peaks)?;
    write_json(&out.join("sqi.json"), &d.sqi_table)?;
    write_json(
        &out.join("theta_star.json"),
        &ThetaStar {
            index: d.theta_index,
            theta: &d.theta_star,
        },
    )?;
    RunMeta::new("decompose", None, vec![a.input.clone()], &config).write(&out)
}

#[derive(Serialize)]
struct RpeaksConfig<'a> {
    channel: usize,
    mode: &'static str,
    raw: bool,
    filter: &'a FilterSpec,
    params: &'a RpeakParams,
}

fn run_rpeaks(g: &Global, a: &RpeaksArgs) -> Result<()> {
    let mut config: DecomposeConfig = load_config(g.config.as_deref())?;
    apply_filter(&mut config.filter, &a.filter);
    validated(config.validate())?;
    let record = read_record(&a.input)?;
    if a.channel == 0 || a.channel > record.n_channels() {
        return Err(usage(format!(
            "channel {} does not exist; the record has {}",
            a.channel,
            record.n_channels()
        )));
    }
    let fs = record.fs() as f64;
    let x = record.channel(a.channel - 1);
    let x = if a.raw {
        x.to_vec()
    } else {
        validated(config.filter.validate_for(fs))?;
        preprocess_channel(x, fs, &config.filter)?
    };
    let (params, mode) = match a.mode {
        ModeArg::Maternal => (&config.maternal, "maternal"),
        ModeArg::Fetal => (&config.fetal, "fetal"),
    };
    let peaks = detect_peaks(&x, fs, params)?;
    match &g.out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_json(&dir.join("rpeaks.json"), &peaks)?;
            let echo = RpeaksConfig {
                channel: a.channel,
                mode,
                raw: a.raw,
                filter: &config.filter,
                params,
            };
            RunMeta::new("rpeaks", None, vec![a.input.clone()], &echo).write(dir)
        }
        None => {
            println!("{}", serde_json::to_string(&peaks)?);
            Ok(())
        }
    }
}

fn parse_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fecg::Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(fecg::Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected {c} values, found {}", row.len()),
                }
                .into())
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| fecg::Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty matrix".into(),
    })?;
    Ok(Matrix::from_row_slice(rows, cols, &data))
}

fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct ShrinkSummary<'a> {
    rows: usize,
    cols: usize,
    sigma_hat: f64,
    kept_rank: usize,
    singular_values_raw: &'a [f64],
    singular_values_shrunk: &'a [f64],
}

fn run_shrink(g: &Global, a: &ShrinkArgs) -> Result<()> {
    let mut config: DenoiseConfig = load_config(g.config.as_deref())?;
    if let Some(c) = a.c_noise {
        config.c_noise = c;
    }
    validated(config.validate())?;
    let m = parse_matrix(&a.input)?;
    let res = optimal_shrink(&m, &config)?;
    let summary = ShrinkSummary {
        rows: m.nrows(),
        cols: m.ncols(),
        sigma_hat: res.sigma_hat,
        kept_rank: res.kept_rank,
        singular_values_raw: &res.singular_values_raw,
        singular_values_shrunk: &res.singular_values_shrunk,
    };
    match &g.out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_text(&dir.join("denoised.csv"), &format_matrix(&res.denoised))?;
            write_json(&dir.join("shrinkage.json"), &summary)?;
            RunMeta::new("shrink", None, vec![a.input.clone()], &config).write(dir)
        }
        None => {
            print!("{}", format_matrix(&res.denoised));
            log::info!("kept rank {}, noise level {}", res.kept_rank, res.sigma_hat);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    sim: &'a SimConfig,
    synthetic_donors: Option<usize>,
}

fn run_simulate(g: &Global, a: &SimulateArgs) -> Result<()> {
    let mut config: SimConfig = load_config(g.config.as_deref())?;
    if let Some(s) = g.seed {
        config.seed = s;
    }
    if let Some(r) = a.r {
        config.r = r;
    }
    if let Some(Snr(snr)) = a.snr {
        config.snr_db = snr;
    }
    if let Some(d) = a.duration {
        config.duration_s = d;
    }
    validated(config.validate())?;
    let out = out_dir(g)?;
    let (maternal, fetal, count) = match (&a.maternal_dir, &a.fetal_dir) {
        (Some(m), Some(f)) => (load_record_dir(m)?, load_record_dir(f)?, None),
        _ => {
            let n = a.donors.unwrap_or(10);
            if n == 0 {
                return Err(usage("--donors must be positive"));
            }
            let (m, f) = synthetic_donors(n, config.seed, config.duration_s)?;
            (m, f, Some(n))
        }
    };
    let records = generate_dataset(&maternal, &fetal, &config)?;
    if records.is_empty() {
        return Err(fecg::Error::TooShort("no donor pair is long enough for the requested duration".into()).into());
    }
    write_dataset(&records, &config, &out)?;
    log::info!("wrote {} records to {}", records.len(), out.display());
    let inputs = [&a.maternal_dir, &a.fetal_dir].into_iter().flatten().cloned().collect();
    let echo = SimulateEcho {
        sim: &config,
        synthetic_donors: count,
    };
    RunMeta::new("simulate", Some(config.seed), inputs, &echo).write(&out)
}

/// Mean, standard deviation and median of every aggregate, one row each.
fn summary_csv<'a>(reports: impl IntoIterator<Item = (&'a str, &'a EvalReport)>) -> String {
    let mut out = String::from("condition,metric,n,mean,sd,median\n");
    for (label, report) in reports {
        for (metric, s) in &report.aggregates {
            out.push_str(&format!("{label},{metric},{},{},{},{}\n", s.n, s.mean, s.sd, s.median));
        }
    }
    out
}

fn eval_config(g: &Global, window_ms: Option<f64>, windows: Option<&[f64]>) -> Result<EvalConfig> {
    let mut eval: EvalConfig = load_config(g.config.as_deref())?;
    if let Some(w) = window_ms {
        eval.window_ms = w;
    }
    if let Some(ws) = windows {
        eval.extra_windows = ws.iter().copied().filter(|w| *w != eval.window_ms).collect();
    }
    validated(eval.validate())?;
    Ok(eval)
}

/// The report goes to `--out` itself when it names a `.json` file, and to
/// `<out>/report.json` otherwise.
fn report_target(g: &Global) -> Result<(PathBuf, PathBuf)> {
    let out = g.out.clone().ok_or_else(|| usage("--out is required for this command"))?;
    if out.extension().is_some_and(|e| e == "json") {
        let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
        ensure_dir(&dir)?;
        Ok((dir, out))
    } else {
        ensure_dir(&out)?;
        let report = out.join("report.json");
        Ok((out, report))
    }
}

fn read_peaks(path: &Path) -> Result<PeakList> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let times: Vec<f64> = serde_json::from_str(&text).map_err(|e| fecg::Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    PeakList::new(times).map_err(|e| {
        fecg::Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: e.to_string(),
        }
        .into()
    })
}

#[derive(Serialize)]
struct EvaluateEcho<'a> {
    eval: &'a EvalConfig,
    decompose: Option<&'a DecomposeConfig>,
    subset_size: Option<usize>,
}

fn run_evaluate(g: &Global, a: &EvaluateArgs) -> Result<()> {
    let eval = eval_config(g, a.window_ms, a.windows.as_deref())?;
    let (dir, report_path) = report_target(g)?;
    let records = load_record_dir(&a.truth)?;
    if records.is_empty() {
        return Err(fecg::Error::Unsupported {
            path: a.truth.clone(),
            msg: "no records found".into(),
        }
        .into());
    }
    let mut inputs = vec![a.truth.clone()];
    match &a.est {
        Some(est) => {
            inputs.push(est.clone());
            let mut per_recording: BTreeMap<String, RecordingScores> = BTreeMap::new();
            for rec in &records {
                let truth = rec.annotation(AnnotationKind::FetalR).ok_or_else(|| fecg::Error::Unsupported {
                    path: a.truth.join(rec.name()),
                    msg: "record has no fetal R annotations".into(),
                })?;
                let path = est.join(rec.name()).join("fetal_peaks.json");
                let detected = if path.exists() {
                    read_peaks(&path)?
                } else {
                    log::warn!("{}: no estimate at {}; scoring as no detections", rec.name(), path.display());
                    PeakList::empty()
                };
                let scores = score_recording(&ScoreInput {
                    truth_r: truth,
                    detected_r: &detected,
                    signals: None,
                    fs: rec.fs() as f64,
                    window_ms: eval.window_ms,
                    extra_windows: &eval.extra_windows,
                    pt: &eval.pt,
                })?;
                per_recording.insert(rec.name().to_string(), scores);
            }
            let echo = serde_json::to_value(EvaluateEcho {
                eval: &eval,
                decompose: None,
                subset_size: None,
            })?;
            let report = EvalReport::new(per_recording, echo);
            write_json(&report_path, &report)?;
            write_text(&dir.join("summary.csv"), &summary_csv([("all", &report)]))?;
            let echo = EvaluateEcho {
                eval: &eval,
                decompose: None,
                subset_size: None,
            };
            RunMeta::new("evaluate", None, inputs, &echo).write(&dir)
        }
        None => {
            let mut config: DecomposeConfig = DecomposeConfig::default();
            apply_separation(&mut config, &a.separation);
            validated(config.validate())?;
            let n = records[0].n_channels();
            if records.iter().any(|r| r.n_channels() != n) {
                return Err(usage("records differ in channel count; evaluate them separately"));
            }
            let k = a.subset_size.unwrap_or(n);
            if k == 0 || k > n {
                return Err(usage(format!("subset size must lie in 1..={n}")));
            }
            let report = evaluate_dataset(&records, &channel_subsets(n, k), &config, &eval, &SUBSET_ALPHAS)?;
            write_json(&report_path, &report)?;
            let rows = report.by_subset.iter().map(|(k, r)| (k.as_str(), r));
            write_text(&dir.join("summary.csv"), &summary_csv(rows))?;
            if let Some((label, best)) = report.best_subset() {
                let f1 = best.aggregates.get("f1").map(|s| s.mean).unwrap_or(f64::NAN);
                log::info!("best channel subset {label}: mean F1 {f1:.4}");
            }
            let echo = EvaluateEcho {
                eval: &eval,
                decompose: Some(&config),
                subset_size: Some(k),
            };
            RunMeta::new("evaluate", None, inputs, &echo).write(&dir)
        }
    }
}

fn run_pipeline_cmd(g: &Global, a: &PipelineArgs) -> Result<()> {
    let mut config: PipelineConfig = load_config(g.config.as_deref())?;
    if let Some(s) = g.seed {
        config.seed = s;
    }
    if let Some(r) = a.r {
        config.sim.r = r;
        config.conditions.clear();
    }
    if let Some(Snr(snr)) = a.snr {
        config.sim.snr_db = snr;
        config.conditions.clear();
    }
    if a.sweep {
        config.conditions = Condition::sweep();
    }
    if let Some(n) = a.donors {
        config.donors.count = n;
    }
    if a.maternal_dir.is_some() {
        config.donors.maternal_dir = a.maternal_dir.clone();
        config.donors.fetal_dir = a.fetal_dir.clone();
    }
    if let Some(d) = a.duration {
        config.sim.duration_s = d;
    }
    if let Some(ch) = &a.channels {
        config.channels = Some(zero_based(ch)?);
    }
    if let Some(w) = a.window_ms {
        config.eval.window_ms = w;
    }
    apply_separation(&mut config.decompose, &a.separation);
    config.sim.seed = config.seed;
    validated(config.validate())?;
    let out = out_dir(g)?;
    let report = run_pipeline(&config)?;
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("boxplot.csv"), &boxplot_csv(&report.boxplot_rows(&BOXPLOT_METRICS)))?;
    let rows = report.conditions.iter().map(|c| (c.label.as_str(), &c.report));
    write_text(&out.join("summary.csv"), &summary_csv(rows))?;
    for c in &report.conditions {
        if let Some(f1) = c.report.aggregates.get("f1") {
            log::info!("{}: median F1 {:.4} over {} records", c.label, f1.median, f1.n);
        }
    }
    RunMeta::new("pipeline", Some(config.seed), Vec::new(), &config).write(&out)
}
