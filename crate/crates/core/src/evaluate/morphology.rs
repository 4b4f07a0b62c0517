use crate::error::{Error, Result};

fn at(x: &[f64], t_ms: f64, fs: f64) -> Option<f64> {
    let i = (t_ms * fs / 1000.0).round();
    (i >= 0.0 && (i as usize) < x.len()).then(|| x[i as usize])
}

/// Mean of `|z(t) − ẑ(t̃)| / |z(t)|` over matched landmark pairs `(t, t̃)`.
///
/// Pairs whose truth amplitude is zero (or that fall outside either signal)
/// are skipped with a warning.
pub fn nmae(truth: &[f64], est: &[f64], pairs: &[(f64, f64)], fs: f64) -> Result<f64> {
    let mut acc = 0.0;
    let mut used = 0usize;
    for &(t, e) in pairs {
        match (at(truth, t, fs), at(est, e, fs)) {
            (Some(z), Some(zh)) if z != 0.0 => {
                acc += (z - zh).abs() / z.abs();
                used += 1;
            }
            _ => log::warn!("skipping landmark pair ({t}, {e}) ms: zero or missing truth amplitude"),
        }
    }
    if used == 0 {
        return Err(Error::arg("NMAE needs at least one usable landmark pair"));
    }
    Ok(acc / used as f64)
}

/// Mean of `|d − d̃| / d` over paired intervals; zero-length truth
/// intervals are skipped with a warning.
pub fn nmde(truth: &[f64], est: &[f64]) -> Result<f64> {
    if truth.len() != est.len() {
        return Err(Error::arg(format!(
            "interval lists differ in length ({} vs {})",
            truth.len(),
            est.len()
        )));
    }
    let mut acc = 0.0;
    let mut used = 0usize;
    for (&d, &e) in truth.iter().zip(est) {
        if d == 0.0 {
            log::warn!("skipping zero-length truth interval");
            continue;
        }
        acc += (d - e).abs() / d.abs();
        used += 1;
    }
    if used == 0 {
        return Err(Error::arg("NMDE needs at least one non-zero truth interval"));
    }
    Ok(acc / used as f64)
}
