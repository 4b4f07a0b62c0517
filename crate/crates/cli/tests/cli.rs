use std::path::Path;
use std::process::{Command, Output};

fn fecg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fecg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = fecg(&["decompose", "--no-such-flag"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn zero_jobs_is_rejected() {
    let out = fecg(&["--jobs", "0", "rpeaks", "--in", "x.csv"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_input_is_a_data_error() {
    let out = fecg(&["-q", "rpeaks", "--in", "/nonexistent/rec.csv"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/nonexistent/rec.csv"), "{err}");
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    let out = fecg(&["--config", p(&cfg), "--out", p(dir.path()), "simulate", "--donors", "1"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shrink_prints_a_denoised_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    let rows: Vec<String> = (0..20)
        .map(|i| {
            (0..40)
                .map(|j| format!("{}", (i as f64 * 0.3).sin() + 0.01 * ((i * 7 + j * 13) % 5) as f64))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    std::fs::write(&input, rows.join("\n")).unwrap();
    let out_dir = dir.path().join("out");
    let out = fecg(&["--out", p(&out_dir), "shrink", "--in", p(&input), "--c-noise", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let denoised = std::fs::read_to_string(out_dir.join("denoised.csv")).unwrap();
    assert_eq!(denoised.lines().count(), 20);
    assert!(denoised.lines().all(|l| l.split(',').count() == 40));
    let info: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("shrinkage.json")).unwrap()).unwrap();
    assert!(info["kept_rank"].as_u64().unwrap() >= 1);
}

#[test]
fn simulate_then_decompose_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let out = fecg(&[
        "-q", "--seed", "4", "--out", p(&sim), "simulate", "--donors", "1", "--duration", "30",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["sim000.csv", "sim000.ann.json", "manifest.json", "run_meta.json"] {
        assert!(sim.join(f).exists(), "{f} missing");
    }

    let est = dir.path().join("est").join("sim000");
    let out = fecg(&["-q", "--out", p(&est), "decompose", "--in", p(&sim.join("sim000.csv"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "mecg.csv",
        "rfecg.csv",
        "fecg.csv",
        "fetal_peaks.json",
        "maternal_peaks.json",
        "sqi.json",
        "theta_star.json",
        "run_meta.json",
    ] {
        assert!(est.join(f).exists(), "{f} missing");
    }

    let report = dir.path().join("report.json");
    let out = fecg(&[
        "-q",
        "--out",
        p(&report),
        "evaluate",
        "--truth",
        p(&sim),
        "--est",
        p(&dir.path().join("est")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let f1 = v["per_recording"]["sim000"]["f1"].as_f64().unwrap();
    assert!(f1 > 0.8, "F1 {f1}");
}
