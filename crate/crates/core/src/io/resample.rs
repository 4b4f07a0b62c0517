//! Rational-ratio resampling by Kaiser-windowed sinc interpolation.
//!
//! The ratio `fs_out/fs_in` is reduced to `up/down`; output sample `m` sits at
//! input position `m·down/up`, and its value is the windowed-sinc weighted sum
//! of the surrounding input samples. Kernel taps are tabulated once per phase
//! (there are `up` phases), so the cost is one dot product per output sample.
//! Samples beyond either end are mirrored.

use crate::error::{Error, Result};
use crate::io::record::Record;

/// Kernel half-width, in samples of the slower of the two rates.
const HALF_ZEROS: usize = 48;
const KAISER_BETA: f64 = 14.0;
/// Passband edge as a fraction of the slower rate's Nyquist frequency.
const ROLLOFF: f64 = 0.95;
const MAX_TABULATED_PHASES: usize = 4096;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
    i0_beta: f64,
}

impl Kernel {
    fn new(up: u64, down: u64) -> Self {
        // offsets are measured in input samples; cutoff in cycles/input sample
        let ratio = up as f64 / down as f64;
        let cutoff = 0.5 * ratio.min(1.0) * ROLLOFF;
        let half_width = HALF_ZEROS as f64 / ratio.min(1.0);
        Kernel {
            cutoff,
            half_width,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        if t.abs() >= self.half_width {
            return 0.0;
        }
        let x = 2.0 * self.cutoff * t;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        };
        let r = t / self.half_width;
        let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc * w
    }
}

fn mirror(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let mut k = i.rem_euclid(period);
    if k >= n as i64 {
        k = period - k;
    }
    k as usize
}

/// Resamples one channel from `fs_in` to `fs_out`. The output length is
/// `round(len·fs_out/fs_in)`.
pub fn resample_signal(x: &[f64], fs_in: u32, fs_out: u32) -> Result<Vec<f64>> {
    if fs_in == 0 || fs_out == 0 {
        return Err(Error::arg("sampling rates must be positive"));
    }
    if fs_in == fs_out || x.is_empty() {
        return Ok(x.to_vec());
    }
    let g = gcd(fs_in as u64, fs_out as u64);
    let up = fs_out as u64 / g;
    let down = fs_in as u64 / g;
    let n_out = ((x.len() as u128 * fs_out as u128 + fs_in as u128 / 2) / fs_in as u128) as usize;
    let kernel = Kernel::new(up, down);
    let reach = kernel.half_width.ceil() as i64;
    let n = x.len();

    let taps_for = |frac: f64| -> Vec<f64> {
        (-reach + 1..=reach)
            .map(|k| kernel.eval(k as f64 - frac))
            .collect()
    };
    let table: Option<Vec<Vec<f64>>> = if (up as usize) <= MAX_TABULATED_PHASES {
        Some((0..up).map(|ph| taps_for(ph as f64 / up as f64)).collect())
    } else {
        None
    };

    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out as u64 {
        let num = m * down;
        let base = (num / up) as i64;
        let phase = num % up;
        let owned;
        let taps: &[f64] = match &table {
            Some(t) => &t[phase as usize],
            None => {
                owned = taps_for(phase as f64 / up as f64);
                &owned
            }
        };
        let start = base - reach + 1;
        let mut acc = 0.0;
        for (k, &h) in taps.iter().enumerate() {
            let i = start + k as i64;
            let v = if i >= 0 && (i as usize) < n {
                x[i as usize]
            } else {
                x[mirror(i, n)]
            };
            acc += h * v;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Resamples every channel; annotations are in milliseconds and carry over.
pub fn resample(record: &Record, target_fs: u32) -> Result<Record> {
    if target_fs == 0 {
        return Err(Error::arg("target sampling rate must be positive"));
    }
    if record.fs() == target_fs {
        return Ok(record.clone());
    }
    let chans = record
        .channels()
        .iter()
        .map(|c| resample_signal(c, record.fs(), target_fs))
        .collect::<Result<Vec<_>>>()?;
    let mut out = record.with_channels(target_fs, chans)?;
    // annotations may now sit a fraction of a sample past the end; clamp
    let dur = out.duration_ms();
    for kind in crate::io::AnnotationKind::ALL {
        if let Some(p) = record.annotation(kind) {
            let kept = p.window(0.0, dur + 1e-9);
            out.set_annotation(kind, kept)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_indices() {
        assert_eq!(mirror(-1, 5), 1);
        assert_eq!(mirror(-2, 5), 2);
        assert_eq!(mirror(5, 5), 3);
        assert_eq!(mirror(6, 5), 2);
        assert_eq!(mirror(3, 1), 0);
    }

    #[test]
    fn identity_is_bit_exact() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(resample_signal(&x, 1000, 1000).unwrap(), x);
    }

    #[test]
    fn integer_upsampling_keeps_original_samples() {
        let x: Vec<f64> = (0..400).map(|i| (i as f64 * 0.1).sin()).collect();
        let y = resample_signal(&x, 500, 1000).unwrap();
        assert_eq!(y.len(), 800);
        // away from the mirrored edges
        for i in 60..340 {
            assert!((y[2 * i] - x[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_rate_rejected() {
        assert!(resample_signal(&[1.0], 0, 10).is_err());
        assert!(resample_signal(&[1.0], 10, 0).is_err());
    }
}
