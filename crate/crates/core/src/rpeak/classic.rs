//! Filtered-derivative QRS detector with adaptive signal/noise thresholds
//! and search-back, in the Pan-Tompkins tradition. Used as the second,
//! independent opinion when scoring signal quality.

use super::beats::{bandpass, enforce_separation, moving_average};
use super::ClassicParams;
use crate::io::PeakList;

pub fn classic_detect(x: &[f64], fs: f64, params: &ClassicParams) -> PeakList {
    let n = x.len();
    if n < 5 {
        return PeakList::empty();
    }
    let bp = bandpass(x, fs, params.band);
    let mut deriv = vec![0.0; n];
    for i in 2..n - 2 {
        deriv[i] = 2.0 * bp[i + 2] + bp[i + 1] - bp[i - 1] - 2.0 * bp[i - 2];
    }
    let sq: Vec<f64> = deriv.iter().map(|d| d * d).collect();
    let integ_len = ((params.integration_ms * fs / 1000.0).round() as usize).max(1);
    let integ = moving_average(&sq, integ_len);

    let refractory = ((params.refractory_ms * fs / 1000.0).round() as usize).max(1);
    // candidate peaks: local maxima that dominate their refractory neighbourhood
    let mut cands: Vec<(usize, f64)> = (1..n - 1)
        .filter(|&i| integ[i] > integ[i - 1] && integ[i] >= integ[i + 1])
        .map(|i| (i, integ[i]))
        .collect();
    enforce_separation(&mut cands, refractory);
    if cands.is_empty() {
        return PeakList::empty();
    }

    let learn = ((2.0 * fs) as usize).min(n);
    let init_max = integ[..learn].iter().copied().fold(0.0, f64::max);
    let init_mean = integ[..learn].iter().sum::<f64>() / learn as f64;
    let mut spk = 0.25 * init_max;
    let mut npk = 0.5 * init_mean;
    let mut qrs: Vec<(usize, f64)> = Vec::new();
    let mut noise_since_last: Vec<(usize, f64)> = Vec::new();
    let mut rr: Vec<f64> = Vec::new();

    for &(i, v) in &cands {
        let thr = npk + 0.25 * (spk - npk);
        if let Some(&(last, _)) = qrs.last() {
            let avg = if rr.is_empty() {
                f64::INFINITY
            } else {
                rr.iter().sum::<f64>() / rr.len() as f64
            };
            if (i - last) as f64 > 1.66 * avg {
                // search back for a missed beat among the skipped peaks
                let missed = noise_since_last
                    .iter()
                    .filter(|p| p.0 >= last + refractory && p.0 + refractory <= i && p.1 > 0.5 * thr)
                    .copied()
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                if let Some(m) = missed {
                    spk = 0.25 * m.1 + 0.75 * spk;
                    rr.push((m.0 - last) as f64);
                    qrs.push(m);
                }
            }
        }
        let far_enough = qrs.last().is_none_or(|&(last, _)| i >= last + refractory);
        if v > thr && far_enough {
            if let Some(&(last, _)) = qrs.last() {
                rr.push((i - last) as f64);
                if rr.len() > 8 {
                    rr.remove(0);
                }
            }
            spk = 0.125 * v + 0.875 * spk;
            qrs.push((i, v));
            noise_since_last.clear();
        } else {
            npk = 0.125 * v + 0.875 * npk;
            noise_since_last.push((i, v));
        }
    }

    // report the sharpest point of each complex
    let half = integ_len / 2 + 1;
    let mut located: Vec<(usize, f64)> = qrs
        .iter()
        .map(|&(c, _)| {
            let lo = c.saturating_sub(half);
            let hi = (c + half + 1).min(n);
            (lo..hi)
                .map(|i| (i, bp[i].abs()))
                .fold((c, -1.0), |acc, p| if p.1 > acc.1 { p } else { acc })
        })
        .collect();
    enforce_separation(&mut located, refractory);
    let idx: Vec<usize> = located.iter().map(|p| p.0).collect();
    PeakList::from_samples(&idx, fs)
}
