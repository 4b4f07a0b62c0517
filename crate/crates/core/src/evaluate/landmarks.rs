//! P, Q, S and T landmarks located in fixed windows around each R peak.

use serde::{Deserialize, Serialize};

use crate::io::PeakList;

/// Search windows relative to R, in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PtWindows {
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub s: [f64; 2],
    /// The T window ends at `min(t[1], t_rr_fraction · RR)`.
    pub t: [f64; 2],
    pub t_rr_fraction: f64,
    /// Landmarks weaker than this fraction of |R| are reported absent.
    pub floor: f64,
}

impl Default for PtWindows {
    fn default() -> Self {
        PtWindows {
            p: [-250.0, -60.0],
            q: [-60.0, -10.0],
            s: [10.0, 60.0],
            t: [80.0, 400.0],
            t_rr_fraction: 0.6,
            floor: 0.03,
        }
    }
}

impl PtWindows {
    /// Adult windows compressed by `factor` in time (`factor = 2` suits
    /// fetal rates, which run at about twice the adult rate).
    pub fn scaled(factor: f64) -> Self {
        let d = PtWindows::default();
        let f = |w: [f64; 2]| [w[0] / factor, w[1] / factor];
        PtWindows {
            p: f(d.p),
            q: f(d.q),
            s: f(d.s),
            t: f(d.t),
            ..d
        }
    }

    pub fn fetal() -> Self {
        PtWindows::scaled(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleLandmarks {
    pub r: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
}

impl CycleLandmarks {
    pub fn pr(&self) -> Option<f64> {
        self.p.map(|p| self.r - p)
    }

    pub fn qt(&self) -> Option<f64> {
        Some(self.t? - self.q?)
    }

    pub fn st(&self) -> Option<f64> {
        Some(self.t? - self.s?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmarks {
    pub cycles: Vec<CycleLandmarks>,
    pub p: PeakList,
    pub q: PeakList,
    pub s: PeakList,
    pub t: PeakList,
}

fn sample_range(r: f64, win: [f64; 2], fs: f64, n: usize) -> Option<(usize, usize)> {
    let lo = ((r + win[0]) * fs / 1000.0).ceil();
    let hi = ((r + win[1]) * fs / 1000.0).floor();
    if lo < 0.0 || hi >= n as f64 || lo > hi {
        return None;
    }
    Some((lo as usize, hi as usize))
}

fn to_ms(i: usize, fs: f64) -> f64 {
    i as f64 * 1000.0 / fs
}

/// Sample of the window that deviates most from the chord joining the
/// window's end points, if it is a local extremum of that deviation.
/// Measuring against the chord keeps a slow drift across the window from
/// outweighing a small wave. Returns the index and the deviation.
fn extremum(x: &[f64], (lo, hi): (usize, usize)) -> Option<(usize, f64)> {
    if hi < lo + 2 {
        return None;
    }
    let slope = (x[hi] - x[lo]) / (hi - lo) as f64;
    let d = |i: usize| x[i] - x[lo] - slope * (i - lo) as f64;
    (lo + 1..hi)
        .filter(|&i| {
            let (a, b, c) = (d(i - 1), d(i), d(i + 1));
            (b >= a && b >= c && (b > a || b > c)) || (b <= a && b <= c && (b < a || b < c))
        })
        .max_by(|&a, &b| d(a).abs().total_cmp(&d(b).abs()).then(b.cmp(&a)))
        .map(|i| (i, d(i)))
}

/// Minimum of `x` inside the window, if it is a local minimum.
fn minimum(x: &[f64], (lo, hi): (usize, usize)) -> Option<usize> {
    let i = (lo..=hi).min_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)))?;
    let left = i == 0 || x[i - 1] >= x[i];
    let right = i + 1 >= x.len() || x[i + 1] >= x[i];
    (left && right && i > lo && i < hi).then_some(i)
}

pub fn detect_pt(x: &[f64], fs: f64, rpeaks: &PeakList, windows: &PtWindows) -> Landmarks {
    let n = x.len();
    let rr = rpeaks.rr_intervals();
    let mut cycles = Vec::with_capacity(rpeaks.len());
    let mut buf = Vec::new();
    for (k, &r) in rpeaks.times().iter().enumerate() {
        let ri = ((r * fs / 1000.0).round() as usize).min(n.saturating_sub(1));
        let mut c = CycleLandmarks {
            r,
            p: None,
            q: None,
            s: None,
            t: None,
        };
        if n < 3 {
            cycles.push(c);
            continue;
        }
        let rr_k = rr.get(k).or(rr.last()).copied().unwrap_or(f64::INFINITY);
        let t_end = windows.t[1].min(windows.t_rr_fraction * rr_k);
        let span = (windows.p[0].min(windows.q[0]), t_end.max(windows.s[1]));
        let (lo, hi) = match sample_range(r, [span.0, span.1], fs, n) {
            Some(r) => r,
            None => {
                // clip to the record and keep going per window
                let lo = ((r + span.0) * fs / 1000.0).ceil().max(0.0) as usize;
                let hi = (((r + span.1) * fs / 1000.0).floor() as usize).min(n - 1);
                (lo.min(hi), hi)
            }
        };
        // amplitudes are taken against the cycle's isoelectric level (its
        // median), with the cycle oriented so that R is positive
        let baseline = crate::stats::median(&x[lo..=hi]).unwrap_or(0.0);
        let r_amp = x[ri] - baseline;
        let sign = if r_amp < 0.0 { -1.0 } else { 1.0 };
        let floor = windows.floor * r_amp.abs();
        buf.clear();
        buf.extend(x[lo..=hi].iter().map(|v| (v - baseline) * sign));
        let local = |win: [f64; 2]| {
            sample_range(r, win, fs, n)
                .filter(|&(a, b)| a >= lo && b <= hi)
                .map(|(a, b)| (a - lo, b - lo))
        };
        let strong = |&(_, d): &(usize, f64)| d.abs() >= floor && d != 0.0;
        c.p = local(windows.p)
            .and_then(|w| extremum(&buf, w))
            .filter(strong)
            .map(|(i, _)| to_ms(i + lo, fs));
        c.q = local(windows.q)
            .and_then(|w| minimum(&buf, w))
            .map(|i| to_ms(i + lo, fs));
        c.s = local(windows.s)
            .and_then(|w| minimum(&buf, w))
            .map(|i| to_ms(i + lo, fs));
        if t_end > windows.t[0] {
            c.t = local([windows.t[0], t_end])
                .and_then(|w| extremum(&buf, w))
                .filter(strong)
                .map(|(i, _)| to_ms(i + lo, fs));
        }
        cycles.push(c);
    }
    let collect = |f: fn(&CycleLandmarks) -> Option<f64>| {
        let mut v: Vec<f64> = cycles.iter().filter_map(f).collect();
        v.dedup();
        PeakList::new(v).unwrap_or_else(|_| PeakList::empty())
    };
    Landmarks {
        p: collect(|c| c.p),
        q: collect(|c| c.q),
        s: collect(|c| c.s),
        t: collect(|c| c.t),
        cycles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(i: usize, c: f64, w: f64) -> f64 {
        (-((i as f64 - c) / w).powi(2)).exp()
    }

    fn synthetic(rs: &[f64], n: usize, with_p: bool, polarity: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                polarity
                    * rs.iter()
                        .map(|&r| {
                            let p = if with_p { 0.15 * bump(i, r - 150.0, 20.0) } else { 0.0 };
                            p + bump(i, r, 8.0) + 0.3 * bump(i, r + 250.0, 40.0)
                                - 0.2 * bump(i, r - 30.0, 6.0)
                                - 0.25 * bump(i, r + 30.0, 6.0)
                        })
                        .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn gaussian_landmarks() {
        let rs = [1000.0, 1800.0, 2600.0];
        for polarity in [1.0, -1.0] {
            let x = synthetic(&rs, 3500, true, polarity);
            let l = detect_pt(&x, 1000.0, &PeakList::new(rs.to_vec()).unwrap(), &PtWindows::default());
            for c in &l.cycles {
                assert!((c.p.unwrap() - (c.r - 150.0)).abs() <= 5.0, "{c:?}");
                assert!((c.t.unwrap() - (c.r + 250.0)).abs() <= 5.0, "{c:?}");
                assert!((c.q.unwrap() - (c.r - 30.0)).abs() <= 5.0, "{c:?}");
                assert!((c.s.unwrap() - (c.r + 30.0)).abs() <= 5.0, "{c:?}");
            }
        }
    }

    #[test]
    fn missing_p_is_absent() {
        let rs = [1000.0, 1800.0];
        let mut x = vec![0.0; 2600];
        for (i, v) in x.iter_mut().enumerate() {
            for &r in &rs {
                // nothing at all before the QRS
                if (i as f64) > r - 40.0 {
                    *v += bump(i, r, 8.0) + 0.3 * bump(i, r + 250.0, 40.0);
                }
            }
        }
        let l = detect_pt(&x, 1000.0, &PeakList::new(rs.to_vec()).unwrap(), &PtWindows::default());
        assert!(l.cycles[0].p.is_none());
        assert!(l.cycles[0].t.is_some());
    }

    #[test]
    fn windows_past_the_edges_are_skipped() {
        let rs = [100.0, 900.0];
        let x = synthetic(&rs, 1000, true, 1.0);
        let l = detect_pt(&x, 1000.0, &PeakList::new(rs.to_vec()).unwrap(), &PtWindows::default());
        assert!(l.cycles[0].p.is_none());
        assert!(l.cycles[1].t.is_none());
    }

    #[test]
    fn intervals() {
        let c = CycleLandmarks {
            r: 1000.0,
            p: Some(880.0),
            q: Some(970.0),
            s: Some(1030.0),
            t: Some(1300.0),
        };
        assert_eq!(c.pr(), Some(120.0));
        assert_eq!(c.qt(), Some(330.0));
        assert_eq!(c.st(), Some(270.0));
    }
}
