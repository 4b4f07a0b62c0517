//! Per-channel cleanup: zero-phase Butterworth low-pass, powerline notch and
//! two-stage median baseline removal, always applied in that order.

mod iir;
mod median;

use serde::{Deserialize, Serialize};

pub use self::iir::{butter_highpass, butter_lowpass, notch, Biquad, Sos};
pub use self::median::running_median;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSpec {
    pub lowpass_order: usize,
    pub lowpass_cutoff: f64,
    pub notch_center: f64,
    pub notch_q: f64,
    pub median_short_ms: f64,
    pub median_long_ms: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            lowpass_order: 5,
            lowpass_cutoff: 100.0,
            notch_center: 60.0,
            notch_q: 30.0,
            median_short_ms: 200.0,
            median_long_ms: 600.0,
        }
    }
}

impl FilterSpec {
    /// Checks the invariants that do not depend on the sampling rate.
    pub fn validate(&self) -> Result<()> {
        if self.lowpass_order < 1 {
            return Err(Error::arg("low-pass order must be at least 1"));
        }
        if !(self.lowpass_cutoff > 0.0) || !(self.notch_center > 0.0) || !(self.notch_q > 0.0) {
            return Err(Error::arg("filter frequencies and Q must be positive"));
        }
        if !(self.median_short_ms > 0.0) || !(self.median_short_ms < self.median_long_ms) {
            return Err(Error::arg(
                "median windows must satisfy 0 < short < long",
            ));
        }
        Ok(())
    }

    pub fn validate_for(&self, fs: f64) -> Result<()> {
        self.validate()?;
        let nyq = fs / 2.0;
        if self.lowpass_cutoff >= nyq {
            return Err(Error::arg(format!(
                "low-pass cutoff {} Hz must be below Nyquist ({nyq} Hz)",
                self.lowpass_cutoff
            )));
        }
        if self.notch_center >= nyq {
            return Err(Error::arg(format!(
                "notch centre {} Hz must be below Nyquist ({nyq} Hz)",
                self.notch_center
            )));
        }
        Ok(())
    }
}

/// Window length in samples: `round(ms·fs/1000)`, bumped to the next odd
/// number when even.
pub fn window_samples(ms: f64, fs: f64) -> usize {
    let w = (ms * fs / 1000.0).round().max(1.0) as usize;
    if w % 2 == 0 {
        w + 1
    } else {
        w
    }
}

pub fn butterworth_lowpass(x: &[f64], fs: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate_for(fs)?;
    if x.len() <= 3 * spec.lowpass_order {
        return Err(Error::TooShort(format!(
            "{} samples, low-pass needs more than {}",
            x.len(),
            3 * spec.lowpass_order
        )));
    }
    Ok(butter_lowpass(spec.lowpass_order, spec.lowpass_cutoff, fs).filtfilt(x))
}

pub fn notch_filter(x: &[f64], fs: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate_for(fs)?;
    if x.len() <= 12 {
        return Err(Error::TooShort(format!(
            "{} samples, notch needs more than 12",
            x.len()
        )));
    }
    Ok(notch(spec.notch_center, spec.notch_q, fs).filtfilt(x))
}

/// `x − D_long(D_short(x))` with running medians of the configured lengths.
pub fn median_detrend(x: &[f64], fs: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let short = window_samples(spec.median_short_ms, fs);
    let long = window_samples(spec.median_long_ms, fs);
    if x.len() <= long {
        return Err(Error::TooShort(format!(
            "{} samples, baseline removal needs more than {long}",
            x.len()
        )));
    }
    let baseline = running_median(&running_median(x, short), long);
    Ok(x.iter().zip(&baseline).map(|(v, b)| v - b).collect())
}

/// The full per-channel chain: low-pass, notch, then median detrend.
pub fn preprocess_channel(x: &[f64], fs: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    let y = butterworth_lowpass(x, fs, spec)?;
    let y = notch_filter(&y, fs, spec)?;
    median_detrend(&y, fs, spec)
}

pub fn preprocess_channels(channels: &[Vec<f64>], fs: f64, spec: &FilterSpec) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    channels
        .par_iter()
        .map(|c| preprocess_channel(c, fs, spec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_lengths_are_odd() {
        assert_eq!(window_samples(200.0, 1000.0), 201);
        assert_eq!(window_samples(600.0, 1000.0), 601);
        assert_eq!(window_samples(200.0, 500.0), 101);
        assert_eq!(window_samples(201.0, 1000.0), 201);
    }

    #[test]
    fn spec_validation() {
        assert!(FilterSpec::default().validate_for(1000.0).is_ok());
        assert!(FilterSpec::default().validate_for(200.0).is_err());
        let bad = FilterSpec {
            median_short_ms: 700.0,
            ..FilterSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterSpec {
            lowpass_order: 0,
            ..FilterSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn short_inputs_rejected() {
        let s = FilterSpec::default();
        assert!(butterworth_lowpass(&[0.0; 15], 1000.0, &s).is_err());
        assert!(notch_filter(&[0.0; 12], 1000.0, &s).is_err());
        assert!(median_detrend(&[0.0; 601], 1000.0, &s).is_err());
    }

    #[test]
    fn cutoff_at_nyquist_rejected() {
        let s = FilterSpec {
            lowpass_cutoff: 500.0,
            ..FilterSpec::default()
        };
        assert!(butterworth_lowpass(&[0.0; 100], 1000.0, &s).is_err());
    }

    #[test]
    fn detrend_of_constant_is_exactly_zero() {
        let y = median_detrend(&[3.25; 2000], 1000.0, &FilterSpec::default()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }
}
