//! Rhythm-constrained beat placement.
//!
//! The band-passed signal is squared and smoothed into an energy envelope,
//! reduced to a coarse grid, and scored relative to its typical beat height.
//! A dynamic program then places beats to maximise the summed score minus
//! `α·ln²(Δt/P)` per interval, where `P` is the period implied by the rate
//! curve. Each placed beat is finally moved to the largest `|band-passed|`
//! sample nearby.

use super::{BeatParams, IhrCurve};
use crate::error::{Error, Result};
use crate::io::PeakList;
use crate::preprocess::{butter_highpass, butter_lowpass};

/// Grid resolution of the dynamic program.
const GRID_HZ: f64 = 200.0;
/// Scores are capped so one huge artefact cannot outvote the rhythm.
const SCORE_CAP: f64 = 2.0;
/// Subtracted from every score, so placing a beat on background costs.
const SCORE_FLOOR: f64 = 0.1;

pub fn bandpass(x: &[f64], fs: f64, band: [f64; 2]) -> Vec<f64> {
    butter_highpass(2, band[0], fs)
        .then(butter_lowpass(4, band[1].min(0.45 * fs), fs))
        .filtfilt(x)
}

pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    if window <= 1 || n == 0 {
        return x.to_vec();
    }
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Linear interpolation of the rate curve, clamped at both ends.
pub(crate) fn rate_at(ihr: &IhrCurve, t: f64) -> f64 {
    let (ts, rs) = (&ihr.times, &ihr.rate);
    if t <= ts[0] {
        return rs[0];
    }
    if t >= ts[ts.len() - 1] {
        return rs[rs.len() - 1];
    }
    let j = ts.partition_point(|&x| x <= t);
    let (t0, t1) = (ts[j - 1], ts[j]);
    let w = (t - t0) / (t1 - t0);
    rs[j - 1] * (1.0 - w) + rs[j] * w
}

/// Mean of the `k` largest local maxima of `env` (all of them if fewer).
fn typical_peak(env: &[f64], k: usize) -> f64 {
    let mut peaks: Vec<f64> = (1..env.len().saturating_sub(1))
        .filter(|&i| env[i] > env[i - 1] && env[i] >= env[i + 1])
        .map(|i| env[i])
        .collect();
    if peaks.is_empty() {
        return 0.0;
    }
    peaks.sort_by(|a, b| b.total_cmp(a));
    let k = k.clamp(1, peaks.len());
    peaks[..k].iter().sum::<f64>() / k as f64
}

pub fn beat_track(x: &[f64], fs: f64, ihr: &IhrCurve, params: &BeatParams) -> Result<PeakList> {
    if ihr.times.is_empty() || ihr.rate.len() != ihr.times.len() {
        return Err(Error::arg("rate curve is empty or malformed"));
    }
    let duration = x.len() as f64 / fs;
    let mean_rate = ihr.rate.iter().sum::<f64>() / ihr.rate.len() as f64;
    if !(duration * mean_rate >= 2.0) {
        return Err(Error::TooShort(format!(
            "{duration:.2} s at {mean_rate:.2} Hz holds fewer than 2 beats"
        )));
    }

    let bp = bandpass(x, fs, params.band);
    let sq: Vec<f64> = bp.iter().map(|v| v * v).collect();
    let smooth = ((params.smooth_ms * fs / 1000.0).round() as usize).max(1);
    let energy = moving_average(&sq, smooth);

    let block = ((fs / GRID_HZ).round() as usize).max(1);
    let grid_fs = fs / block as f64;
    let env: Vec<f64> = energy
        .chunks(block)
        .map(|c| c.iter().copied().fold(0.0, f64::max))
        .collect();
    let expected = (duration * mean_rate).round() as usize;
    let reference = typical_peak(&env, expected);
    if !(reference > 0.0) {
        return Ok(PeakList::empty());
    }
    let score: Vec<f64> = env
        .iter()
        .map(|&e| (e / reference).sqrt().min(SCORE_CAP) - SCORE_FLOOR)
        .collect();

    let k_n = env.len();
    let min_sep = params.min_sep_ms / 1000.0 * grid_fs;
    let mut total = vec![0.0; k_n];
    let mut prev = vec![usize::MAX; k_n];
    for k in 0..k_n {
        let period = grid_fs / rate_at(ihr, k as f64 / grid_fs);
        let lo = k as f64 - 2.0 * period;
        let hi = k as f64 - (0.5 * period).max(min_sep);
        let mut best = 0.0;
        let mut arg = usize::MAX;
        if hi >= 0.0 {
            let lo = lo.ceil().max(0.0) as usize;
            let hi = hi.floor() as usize;
            for j in lo..=hi.min(k.saturating_sub(1)) {
                let l = ((k - j) as f64 / period).ln();
                let c = total[j] - params.alpha * l * l;
                if c > best {
                    best = c;
                    arg = j;
                }
            }
        }
        total[k] = score[k] + best;
        prev[k] = arg;
    }

    // best chain end, then again before the start of that chain when an
    // earlier stretch was not connected to it
    let mut grid_beats = Vec::new();
    let mut limit = k_n;
    while limit > 0 {
        let Some(mut k) = (0..limit)
            .filter(|&k| total[k] > 0.0)
            .max_by(|&a, &b| total[a].total_cmp(&total[b]).then(b.cmp(&a)))
        else {
            break;
        };
        let mut chain = vec![k];
        while prev[k] != usize::MAX {
            k = prev[k];
            chain.push(k);
        }
        grid_beats.extend(chain);
        limit = k.saturating_sub(min_sep.ceil() as usize);
    }
    grid_beats.reverse();
    let radius = ((params.refine_ms * fs / 1000.0).round() as usize).max(block);
    let mut beats: Vec<(usize, f64)> = grid_beats
        .iter()
        .map(|&g| {
            let c = (g * block + block / 2).min(x.len() - 1);
            let lo = c.saturating_sub(radius);
            let hi = (c + radius + 1).min(x.len());
            let (i, v) = (lo..hi)
                .map(|i| (i, bp[i].abs()))
                .fold((c, -1.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            (i, v)
        })
        .collect();
    enforce_separation(&mut beats, (params.min_sep_ms * fs / 1000.0).round() as usize);
    let idx: Vec<usize> = beats.iter().map(|b| b.0).collect();
    Ok(PeakList::from_samples(&idx, fs))
}

/// Sorts and drops the weaker of any two peaks closer than `min_sep`.
pub(crate) fn enforce_separation(beats: &mut Vec<(usize, f64)>, min_sep: usize) {
    beats.sort_by_key(|b| b.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(beats.len());
    for &b in beats.iter() {
        match out.last_mut() {
            Some(last) if b.0 < last.0 + min_sep.max(1) => {
                if b.1 > last.1 {
                    *last = b;
                }
            }
            _ => out.push(b),
        }
    }
    *beats = out;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_ihr(rate: f64, secs: f64) -> IhrCurve {
        let n = (secs / 0.1) as usize + 1;
        IhrCurve {
            times: (0..n).map(|i| i as f64 * 0.1).collect(),
            rate: vec![rate; n],
        }
    }

    /// Narrow Gaussian pulses (QRS-like) at the given times, in ms.
    fn pulses(times_ms: &[f64], amps: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                times_ms
                    .iter()
                    .zip(amps)
                    .map(|(t, a)| a * (-((i as f64 - t) / 8.0).powi(2)).exp())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn clean_train() {
        let times: Vec<f64> = (0..20).map(|i| 500.0 + 1000.0 * i as f64).collect();
        let x = pulses(&times, &vec![1.0; 20], 20_000);
        let got = beat_track(&x, 1000.0, &flat_ihr(1.0, 20.0), &BeatParams::maternal()).unwrap();
        assert_eq!(got.len(), 20);
        for (g, t) in got.times().iter().zip(&times) {
            assert!((g - t).abs() <= 1.0, "{g} vs {t}");
        }
    }

    #[test]
    fn weak_beat_still_found() {
        let times: Vec<f64> = (0..20).map(|i| 500.0 + 1000.0 * i as f64).collect();
        let mut amps = vec![1.0; 20];
        amps[9] = 0.5;
        let x = pulses(&times, &amps, 20_000);
        let got = beat_track(&x, 1000.0, &flat_ihr(1.0, 20.0), &BeatParams::maternal()).unwrap();
        assert_eq!(got.len(), 20);
        assert!((got.times()[9] - times[9]).abs() <= 1.0);
    }

    #[test]
    fn negative_polarity() {
        let times: Vec<f64> = (0..20).map(|i| 300.0 + 800.0 * i as f64).collect();
        let x: Vec<f64> = pulses(&times, &vec![1.0; 20], 16_500).iter().map(|v| -v).collect();
        let got = beat_track(&x, 1000.0, &flat_ihr(1.25, 16.5), &BeatParams::maternal()).unwrap();
        assert_eq!(got.len(), 20, "{:?}", got.times());
    }

    #[test]
    fn too_short_for_two_beats() {
        let err = beat_track(&[0.0; 1000], 1000.0, &flat_ihr(1.0, 1.0), &BeatParams::maternal());
        assert!(matches!(err, Err(Error::TooShort(_))));
    }

    #[test]
    fn separation_enforced() {
        let mut b = vec![(100, 1.0), (150, 2.0), (600, 1.0)];
        enforce_separation(&mut b, 250);
        assert_eq!(b, vec![(150, 2.0), (600, 1.0)]);
    }

    #[test]
    fn rate_interpolation() {
        let c = IhrCurve {
            times: vec![0.0, 1.0],
            rate: vec![1.0, 2.0],
        };
        assert_eq!(rate_at(&c, -1.0), 1.0);
        assert_eq!(rate_at(&c, 0.5), 1.5);
        assert_eq!(rate_at(&c, 3.0), 2.0);
    }
}
