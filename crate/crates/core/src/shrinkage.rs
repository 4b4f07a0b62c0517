//! Low-rank denoising of a signal-plus-white-noise matrix by optimal
//! singular-value shrinkage under operator-norm loss.
//!
//! Singular values are measured in units of `σ̂·√n` (`n` the larger
//! dimension), where pure noise has its bulk edge at `1+√β`. Values above the
//! edge are mapped through [`eta_star`]; the rest are discarded.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shrinker {
    #[default]
    OperatorNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    /// Inflation applied to the raw noise estimate.
    pub c_noise: f64,
    pub shrinker: Shrinker,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            c_noise: 1.5,
            shrinker: Shrinker::OperatorNorm,
        }
    }
}

impl DenoiseConfig {
    pub fn with_c_noise(c_noise: f64) -> Self {
        DenoiseConfig {
            c_noise,
            ..DenoiseConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_noise > 0.0) || !self.c_noise.is_finite() {
            return Err(Error::arg(format!(
                "noise constant must be positive, got {}",
                self.c_noise
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageResult {
    pub denoised: Matrix,
    pub sigma_hat: f64,
    pub kept_rank: usize,
    /// Singular values of the input, descending.
    pub singular_values_raw: Vec<f64>,
    /// Shrunk singular values in the same (unnormalized) units, descending.
    pub singular_values_shrunk: Vec<f64>,
}

/// The operator-norm optimal shrinker for aspect ratio `beta = p/n ≤ 1`.
///
/// Returns 0 at or below the bulk edge `1+√β`.
pub fn eta_star(lambda: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::arg(format!("aspect ratio must lie in (0, 1], got {beta}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::arg(format!("singular value must be non-negative, got {lambda}")));
    }
    Ok(eta(lambda, beta))
}

fn eta(lambda: f64, beta: f64) -> f64 {
    if lambda <= 1.0 + beta.sqrt() {
        return 0.0;
    }
    let t = lambda * lambda - beta - 1.0;
    let disc = (t * t - 4.0 * beta).max(0.0);
    ((t + disc.sqrt()) / 2.0).sqrt()
}

/// Entry-wise (lower) median across columns: one value per row.
pub fn median_template(s: &Matrix) -> Vec<f64> {
    let mut buf = vec![0.0; s.ncols()];
    (0..s.nrows())
        .map(|k| {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = s[(k, i)];
            }
            crate::stats::lower_median(&mut buf).unwrap_or(0.0)
        })
        .collect()
}

/// `C·√(mean over all entries of (S(k,i) − median_k)²)`, where `median_k` is
/// the lower median of row `k`.
pub fn estimate_noise(s: &Matrix, config: &DenoiseConfig) -> Result<f64> {
    config.validate()?;
    if s.is_empty() {
        return Err(Error::arg("cannot estimate noise of an empty matrix"));
    }
    let template = median_template(s);
    let mut acc = 0.0;
    for i in 0..s.ncols() {
        for (k, m) in template.iter().enumerate() {
            let d = s[(k, i)] - m;
            acc += d * d;
        }
    }
    Ok(config.c_noise * (acc / s.len() as f64).sqrt())
}

/// Denoises `s` by shrinking its singular values with [`eta_star`].
pub fn optimal_shrink(s: &Matrix, config: &DenoiseConfig) -> Result<ShrinkageResult> {
    config.validate()?;
    if s.nrows() == 0 || s.ncols() < 2 {
        return Err(Error::arg(format!(
            "matrix must have at least one row and two columns, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix contains non-finite entries"));
    }
    let sigma_hat = estimate_noise(s, config)?;

    let transposed = s.nrows() > s.ncols();
    let a = if transposed { s.transpose() } else { s.clone() };
    let (m, n) = (a.nrows(), a.ncols());
    let beta = m as f64 / n as f64;

    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let raw: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let shrunk: Vec<f64> = if sigma_hat > 0.0 {
        let scale = sigma_hat * (n as f64).sqrt();
        raw.iter().map(|&l| scale * eta(l / scale, beta)).collect()
    } else {
        // noise-free: every column equals the median template, keep as is
        let tol = raw.first().copied().unwrap_or(0.0) * f64::EPSILON * n as f64;
        raw.iter().map(|&l| if l > tol { l } else { 0.0 }).collect()
    };
    let kept_rank = shrunk.iter().take_while(|&&v| v > 0.0).count();

    let mut out = Matrix::zeros(m, n);
    for (r, &i) in order.iter().take(kept_rank).enumerate() {
        out.ger(shrunk[r], &u.column(i), &v_t.row(i).transpose(), 1.0);
    }
    if sigma_hat == 0.0 {
        out = a;
    }
    Ok(ShrinkageResult {
        denoised: if transposed { out.transpose() } else { out },
        sigma_hat,
        kept_rank,
        singular_values_raw: raw,
        singular_values_shrunk: shrunk,
    })
}
