//! IIR design by the bilinear transform and zero-phase application.

use std::f64::consts::PI;

/// One second-order section, `a0` normalised to 1. First-order sections set
/// `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Direct-form-II-transposed state reached after a long constant input
    /// of value `x0`.
    fn steady_state(&self, x0: f64) -> [f64; 2] {
        let g = self.dc_gain() * x0;
        [g - self.b[0] * x0, self.b[2] * x0 - self.a[1] * g]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let xi = *v;
            let y = b0 * xi + z[0];
            z[0] = b1 * xi - a1 * y + z[1];
            z[1] = b2 * xi - a2 * y;
            *v = y;
        }
    }

    /// |H(e^{jω})| at `freq` Hz.
    pub fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq / fs;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        let nr = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let ni = -(self.b[1] * s1 + self.b[2] * s2);
        let dr = 1.0 + self.a[0] * c1 + self.a[1] * c2;
        let di = -(self.a[0] * s1 + self.a[1] * s2);
        ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sos(pub Vec<Biquad>);

#[derive(Clone, Copy)]
enum Band {
    Low,
    High,
}

fn butterworth(order: usize, cutoff: f64, fs: f64, band: Band) -> Sos {
    let omega = (PI * cutoff / fs).tan();
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let (pr, pi) = (theta.cos(), theta.sin());
        // analog pole for this band, then bilinear s -> (z-1)/(z+1)
        let (sr, si) = match band {
            Band::Low => (omega * pr, omega * pi),
            Band::High => {
                let m = pr * pr + pi * pi;
                (omega * pr / m, -omega * pi / m)
            }
        };
        let den = (1.0 - sr).powi(2) + si * si;
        let zr = ((1.0 + sr) * (1.0 - sr) - si * si) / den;
        let zi = (2.0 * si) / den;
        let a1 = -2.0 * zr;
        let a2 = zr * zr + zi * zi;
        let s = match band {
            Band::Low => (1.0 + a1 + a2) / 4.0,
            Band::High => (1.0 - a1 + a2) / 4.0,
        };
        let b = match band {
            Band::Low => [s, 2.0 * s, s],
            Band::High => [s, -2.0 * s, s],
        };
        sections.push(Biquad { b, a: [a1, a2] });
    }
    if order % 2 == 1 {
        // the real pole is -omega for both bands; only the zero differs
        let sr = -omega;
        let z = (1.0 + sr) / (1.0 - sr);
        let b = match band {
            Band::Low => [(1.0 - z) / 2.0, (1.0 - z) / 2.0, 0.0],
            Band::High => [(1.0 + z) / 2.0, -(1.0 + z) / 2.0, 0.0],
        };
        sections.push(Biquad { b, a: [-z, 0.0] });
    }
    Sos(sections)
}

pub fn butter_lowpass(order: usize, cutoff: f64, fs: f64) -> Sos {
    butterworth(order, cutoff, fs, Band::Low)
}

pub fn butter_highpass(order: usize, cutoff: f64, fs: f64) -> Sos {
    butterworth(order, cutoff, fs, Band::High)
}

/// Second-order notch with quality factor `q` (bandwidth `f0/q`).
pub fn notch(f0: f64, q: f64, fs: f64) -> Sos {
    let w0 = 2.0 * PI * f0 / fs;
    let bw = w0 / q;
    let gain = 1.0 / (1.0 + (bw / 2.0).tan());
    let c = w0.cos();
    Sos(vec![Biquad {
        b: [gain, -2.0 * gain * c, gain],
        a: [-2.0 * gain * c, 2.0 * gain - 1.0],
    }])
}

impl Sos {
    pub fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        self.0.iter().map(|s| s.magnitude(freq, fs)).product()
    }

    pub fn then(mut self, other: Sos) -> Sos {
        self.0.extend(other.0);
        self
    }

    fn run_from_steady_state(&self, x: &mut [f64]) {
        if x.is_empty() {
            return;
        }
        let mut x0 = x[0];
        for s in &self.0 {
            let zi = s.steady_state(x0);
            x0 *= s.dc_gain();
            s.run(x, zi);
        }
    }

    /// Forward-backward filtering with odd extension at both ends, so the
    /// net response is |H|² with zero phase.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 || self.0.is_empty() {
            return x.to_vec();
        }
        let pad = (3 * (2 * self.0.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        self.run_from_steady_state(&mut ext);
        ext.reverse();
        self.run_from_steady_state(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowpass_half_power_at_cutoff() {
        let sos = butter_lowpass(5, 100.0, 1000.0);
        assert_eq!(sos.0.len(), 3);
        assert!((sos.magnitude(0.0, 1000.0) - 1.0).abs() < 1e-12);
        assert!((sos.magnitude(100.0, 1000.0) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn highpass_blocks_dc() {
        let sos = butter_highpass(2, 5.0, 1000.0);
        assert!(sos.magnitude(0.0, 1000.0) < 1e-12);
        assert!((sos.magnitude(500.0, 1000.0) - 1.0).abs() < 1e-9);
        assert!((sos.magnitude(5.0, 1000.0) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn notch_zero_at_center() {
        let sos = notch(60.0, 30.0, 1000.0);
        assert!(sos.magnitude(60.0, 1000.0) < 1e-12);
        assert!((sos.magnitude(0.0, 1000.0) - 1.0).abs() < 1e-12);
        // half-power edges one Hz either side for Q = 30
        let edge = sos.magnitude(61.0, 1000.0);
        assert!((edge - 0.5f64.sqrt()).abs() < 0.01, "{edge}");
    }

    #[test]
    fn filtfilt_keeps_constants() {
        let sos = butter_lowpass(5, 100.0, 1000.0).then(notch(60.0, 30.0, 1000.0));
        let y = sos.filtfilt(&[2.5; 64]);
        for v in y {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }
}
