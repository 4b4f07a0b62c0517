//! R-peak detection: heart-rate tracking on a de-shaped spectrogram, beat
//! placement guided by that rate, and majority fusion across signals.

mod beats;
mod classic;
mod deshape;
mod fusion;
mod ihr;

use serde::{Deserialize, Serialize};

pub use self::beats::{bandpass, beat_track};
pub use self::classic::classic_detect;
pub use self::deshape::{deshape_spectrogram, spectrogram};
pub use self::fusion::{fuse_peaks, steadiest, VOTE_WINDOW_MS};
pub use self::ihr::extract_ihr;

use crate::error::Result;
use crate::io::PeakList;

/// A non-negative time-frequency representation; `values[t][f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfPlane {
    /// Frame centres, seconds.
    pub times: Vec<f64>,
    /// Bin centres, Hz.
    pub freqs: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Instantaneous heart rate (Hz) sampled at `times` (s).
#[derive(Debug, Clone, PartialEq)]
pub struct IhrCurve {
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Maternal,
    Fetal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeshapeParams {
    pub window_s: f64,
    pub hop_s: f64,
    pub gamma: f64,
    /// Heart-rate search band, Hz.
    pub band: [f64; 2],
}

impl DeshapeParams {
    pub fn maternal() -> Self {
        DeshapeParams {
            window_s: 5.0,
            hop_s: 0.1,
            gamma: 0.3,
            band: [0.5, 2.2],
        }
    }

    pub fn fetal() -> Self {
        DeshapeParams {
            band: [1.5, 3.3],
            ..DeshapeParams::maternal()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeatParams {
    /// QRS emphasis band, Hz.
    pub band: [f64; 2],
    /// Energy smoothing window, ms.
    pub smooth_ms: f64,
    /// Peaks are moved to the largest band-passed sample within this radius.
    pub refine_ms: f64,
    pub min_sep_ms: f64,
    /// Weight of the squared log-interval penalty.
    pub alpha: f64,
}

impl BeatParams {
    pub fn maternal() -> Self {
        BeatParams {
            band: [5.0, 30.0],
            smooth_ms: 40.0,
            refine_ms: 30.0,
            min_sep_ms: 250.0,
            alpha: 3.0,
        }
    }

    pub fn fetal() -> Self {
        BeatParams {
            band: [10.0, 45.0],
            smooth_ms: 20.0,
            refine_ms: 15.0,
            min_sep_ms: 200.0,
            alpha: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicParams {
    pub band: [f64; 2],
    pub integration_ms: f64,
    pub refractory_ms: f64,
}

impl ClassicParams {
    pub fn maternal() -> Self {
        ClassicParams {
            band: [5.0, 15.0],
            integration_ms: 150.0,
            refractory_ms: 250.0,
        }
    }

    pub fn fetal() -> Self {
        ClassicParams {
            band: [10.0, 30.0],
            integration_ms: 75.0,
            refractory_ms: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpeakParams {
    pub deshape: DeshapeParams,
    /// Ridge-path cost per Hz of frequency jump between frames.
    pub ihr_penalty: f64,
    pub beat: BeatParams,
    pub classic: ClassicParams,
}

impl RpeakParams {
    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Maternal => RpeakParams {
                deshape: DeshapeParams::maternal(),
                ihr_penalty: 1.0,
                beat: BeatParams::maternal(),
                classic: ClassicParams::maternal(),
            },
            Mode::Fetal => RpeakParams {
                deshape: DeshapeParams::fetal(),
                ihr_penalty: 1.0,
                beat: BeatParams::fetal(),
                classic: ClassicParams::fetal(),
            },
        }
    }
}

/// Rate tracking followed by beat placement on one signal.
pub fn detect_peaks(x: &[f64], fs: f64, params: &RpeakParams) -> Result<PeakList> {
    let ihr = estimate_ihr(x, fs, params)?;
    beat_track(x, fs, &ihr, &params.beat)
}

pub fn estimate_ihr(x: &[f64], fs: f64, params: &RpeakParams) -> Result<IhrCurve> {
    let plane = deshape_spectrogram(x, fs, &params.deshape)?;
    extract_ihr(&plane, params.deshape.band, params.ihr_penalty)
}

/// Which of two beat series looks fetal: the one with the shorter median
/// RR interval. Returns `true` when `a` is the fetal one.
pub fn first_is_fetal(a: &PeakList, b: &PeakList) -> bool {
    let ma = crate::stats::median(&a.rr_intervals()).unwrap_or(f64::INFINITY);
    let mb = crate::stats::median(&b.rr_intervals()).unwrap_or(f64::INFINITY);
    ma < mb
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_pulse_train_end_to_end() {
        let fs = 1000.0;
        let times: Vec<f64> = (0..40).map(|i| 350.0 + 780.0 * i as f64).collect();
        let x: Vec<f64> = (0..31_500)
            .map(|i| {
                times
                    .iter()
                    .map(|t| (-((i as f64 - t) / 10.0).powi(2)).exp())
                    .sum()
            })
            .collect();
        let params = RpeakParams::for_mode(Mode::Maternal);
        let got = detect_peaks(&x, fs, &params).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
        assert_eq!(detect_peaks(&scaled, fs, &params).unwrap(), got);
        assert_eq!(got.len(), times.len());
        for (g, t) in got.times().iter().zip(&times) {
            assert!((g - t).abs() <= 1.0);
        }
    }

    #[test]
    fn fetal_label_by_rate() {
        let slow = PeakList::new(vec![0.0, 800.0, 1600.0, 2400.0]).unwrap();
        let fast = PeakList::new(vec![0.0, 420.0, 840.0, 1260.0]).unwrap();
        assert!(first_is_fetal(&fast, &slow));
        assert!(!first_is_fetal(&slow, &fast));
    }
}
