//! Short-time spectra and their de-shaped counterpart.
//!
//! The de-shaped value at frequency `ξ` is the spectrogram magnitude times
//! the positive part of the cepstrum `IFFT(|S|^γ)` read at quefrency `1/ξ`.
//! A pulse train with period `T` has cepstral peaks only at multiples of
//! `T`, so the mask is large at `1/T` and its sub-multiples but not at the
//! harmonics `k/T`; the product keeps the fundamental alone.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{DeshapeParams, TfPlane};
use crate::error::{Error, Result};
use crate::preprocess::butter_lowpass;

const MIN_FFT: usize = 4096;
/// Working rate for rate analysis; heart rate lives far below its Nyquist.
const ANALYSIS_FS: f64 = 100.0;

/// Low-pass and decimate to roughly [`ANALYSIS_FS`]. Returns the new rate.
fn downsample(x: &[f64], fs: f64) -> (Vec<f64>, f64) {
    let q = (fs / ANALYSIS_FS).floor().max(1.0) as usize;
    if q == 1 {
        return (x.to_vec(), fs);
    }
    let fs_ds = fs / q as f64;
    let y = butter_lowpass(8, 0.4 * fs_ds, fs).filtfilt(x);
    (y.iter().step_by(q).copied().collect(), fs_ds)
}

struct Frames {
    fs: f64,
    nfft: usize,
    times: Vec<f64>,
    /// Full-length magnitude spectrum per frame.
    spectra: Vec<Vec<f64>>,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos())
        .collect()
}

fn check(x: &[f64], fs: f64, params: &DeshapeParams) -> Result<()> {
    let [lo, hi] = params.band;
    if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
        return Err(Error::arg(format!(
            "band [{lo}, {hi}] Hz must lie inside (0, {}) Hz",
            fs / 2.0
        )));
    }
    if !(params.gamma > 0.0 && params.gamma <= 1.0) {
        return Err(Error::arg(format!("gamma must lie in (0, 1], got {}", params.gamma)));
    }
    if !(params.window_s > 0.0 && params.hop_s > 0.0) {
        return Err(Error::arg("window and hop must be positive"));
    }
    let win = (params.window_s * fs).round() as usize;
    if x.len() < win {
        return Err(Error::TooShort(format!(
            "{} samples, spectrogram window needs {win}",
            x.len()
        )));
    }
    Ok(())
}

fn frames(x: &[f64], fs: f64, params: &DeshapeParams) -> Frames {
    let (y, fs_ds) = downsample(x, fs);
    let win = ((params.window_s * fs_ds).round() as usize).max(2);
    let nfft = win.next_power_of_two().max(MIN_FFT);
    let w = hann(win);
    let half = win as i64 / 2;
    let duration = y.len() as f64 / fs_ds;
    let n_frames = (duration / params.hop_s).floor() as usize + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nfft);
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let mut times = Vec::with_capacity(n_frames);
    let mut spectra = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let t = k as f64 * params.hop_s;
        let center = (t * fs_ds).round() as i64;
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (i, wi) in w.iter().enumerate() {
            let j = center - half + i as i64;
            if j >= 0 && (j as usize) < y.len() {
                buf[i] = Complex::new(y[j as usize] * wi, 0.0);
            }
        }
        fft.process(&mut buf);
        spectra.push(buf.iter().map(|c| c.norm()).collect());
        times.push(t);
    }
    Frames {
        fs: fs_ds,
        nfft,
        times,
        spectra,
    }
}

fn band_bins(f: &Frames, band: [f64; 2]) -> (Vec<usize>, Vec<f64>) {
    let df = f.fs / f.nfft as f64;
    let bins: Vec<usize> = (0..f.nfft / 2)
        .filter(|&b| {
            let fr = b as f64 * df;
            fr >= band[0] && fr <= band[1]
        })
        .collect();
    let freqs = bins.iter().map(|&b| b as f64 * df).collect();
    (bins, freqs)
}

/// Plain spectrogram magnitude restricted to `params.band`.
pub fn spectrogram(x: &[f64], fs: f64, params: &DeshapeParams) -> Result<TfPlane> {
    check(x, fs, params)?;
    let f = frames(x, fs, params);
    let (bins, freqs) = band_bins(&f, params.band);
    let values = f
        .spectra
        .iter()
        .map(|s| bins.iter().map(|&b| s[b]).collect())
        .collect();
    Ok(TfPlane {
        times: f.times,
        freqs,
        values,
    })
}

pub fn deshape_spectrogram(x: &[f64], fs: f64, params: &DeshapeParams) -> Result<TfPlane> {
    check(x, fs, params)?;
    let f = frames(x, fs, params);
    let (bins, freqs) = band_bins(&f, params.band);
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(f.nfft);
    let mut buf = vec![Complex::new(0.0, 0.0); f.nfft];
    let values = f
        .spectra
        .iter()
        .map(|s| {
            for (c, &m) in buf.iter_mut().zip(s) {
                *c = Complex::new(m.powf(params.gamma), 0.0);
            }
            ifft.process(&mut buf);
            // cepstrum sample m sits at quefrency m / fs seconds
            bins.iter()
                .zip(&freqs)
                .map(|(&b, &xi)| {
                    let q = f.fs / xi;
                    let i0 = q.floor() as usize;
                    let frac = q - i0 as f64;
                    let c0 = buf[i0 % f.nfft].re;
                    let c1 = buf[(i0 + 1) % f.nfft].re;
                    let mask = ((1.0 - frac) * c0 + frac * c1) / f.nfft as f64;
                    s[b] * mask.max(0.0)
                })
                .collect()
        })
        .collect();
    Ok(TfPlane {
        times: f.times,
        freqs,
        values,
    })
}
