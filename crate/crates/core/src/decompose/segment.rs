//! Cutting a signal into R-aligned cycles, denoising the cycle matrix and
//! stitching the result back into a signal.

use crate::error::{Error, Result};
use crate::io::PeakList;
use crate::shrinkage::{median_template, optimal_shrink, DenoiseConfig, Matrix, ShrinkageResult};
use crate::stats;

/// Below this many cycles the shrinker is replaced by a median template.
pub const MIN_OS_CYCLES: usize = 8;

/// R-aligned cycles of one signal, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMatrix {
    pub data: Matrix,
    /// Row index of R in every column (`⌈3w/8⌉`).
    pub peak_index_in_segment: usize,
    /// The peaks the segmentation was asked to use.
    pub source_peaks: PeakList,
    /// Sample index of R for every column.
    pub centers: Vec<usize>,
    /// RR interval (ms) attached to every column: the one ending at its R,
    /// or the following one for the first peak.
    pub rr_ms: Vec<f64>,
    /// Cycle length in samples, the 95% quantile of the RR intervals.
    pub w: usize,
    /// Length of the signal the cycles were cut from.
    pub signal_len: usize,
    /// Sample index of every peak whose window sticks out of the signal.
    /// These have no column; stitching fills the part of their window that
    /// lies inside the signal from the nearest complete cycle.
    pub partial: Vec<usize>,
}

impl SegmentMatrix {
    pub fn pre(&self) -> usize {
        self.peak_index_in_segment
    }

    pub fn post(&self) -> usize {
        self.data.nrows() - 1 - self.peak_index_in_segment
    }

    pub fn n_cycles(&self) -> usize {
        self.data.ncols()
    }

    /// Same layout with other column contents.
    pub fn with_data(&self, data: Matrix) -> Result<SegmentMatrix> {
        if data.shape() != self.data.shape() {
            return Err(Error::arg("replacement data has a different shape"));
        }
        Ok(SegmentMatrix { data, ..self.clone() })
    }
}

/// Segments `z` around `peaks` with window `[R−⌈3w/8⌉, R+⌈5w/8⌉]`.
///
/// Cycles whose window does not fit inside the signal are dropped.
pub fn segment(z: &[f64], peaks: &PeakList, fs: f64) -> Result<SegmentMatrix> {
    if peaks.len() < 3 {
        return Err(Error::TooShort(format!("segmentation needs 3 peaks, got {}", peaks.len())));
    }
    let rr = peaks.rr_intervals();
    let q = stats::quantile(&rr, 0.95).expect("at least two intervals");
    let w = (q * fs / 1000.0).round() as usize;
    if w == 0 {
        return Err(Error::arg("cycle window rounds to zero samples"));
    }
    let (pre, post) = ((3 * w).div_ceil(8), (5 * w).div_ceil(8));
    let p = pre + post + 1;
    let n = z.len();
    let mut centers = Vec::new();
    let mut rr_ms = Vec::new();
    let mut partial = Vec::new();
    for (k, &t) in peaks.times().iter().enumerate() {
        let c = (t * fs / 1000.0).round();
        if c < pre as f64 || c as usize + post >= n {
            if c < n as f64 {
                partial.push(c as usize);
            }
            continue;
        }
        centers.push(c as usize);
        rr_ms.push(if k == 0 { rr[0] } else { rr[k - 1] });
    }
    if centers.len() < 3 {
        return Err(Error::TooShort(format!(
            "only {} cycles fit inside the signal, need 3",
            centers.len()
        )));
    }
    let data = Matrix::from_fn(p, centers.len(), |k, i| z[centers[i] - pre + k]);
    Ok(SegmentMatrix {
        data,
        peak_index_in_segment: pre,
        source_peaks: peaks.clone(),
        centers,
        rr_ms,
        w,
        signal_len: n,
        partial,
    })
}

/// Reassembles a signal from the columns of `data` laid out as in `seg`.
///
/// Samples covered by one window copy the column verbatim. Where
/// neighbouring windows overlap, each window fades out (and the next fades
/// in) linearly across the overlap. Peaks listed in `seg.partial` get the
/// nearest complete column, clipped to the signal. Samples outside every
/// window are zero.
pub fn stitch(seg: &SegmentMatrix, data: &Matrix) -> Vec<f64> {
    let (pre, p, n) = (seg.pre() as isize, seg.data.nrows() as isize, seg.signal_len);
    let nearest = |c: usize| {
        (0..seg.centers.len())
            .min_by_key(|&k| seg.centers[k].abs_diff(c))
            .expect("segmentation keeps at least three cycles")
    };
    // (window start, column)
    let mut windows: Vec<(isize, usize)> = seg
        .centers
        .iter()
        .enumerate()
        .map(|(k, &c)| (c as isize - pre, k))
        .chain(seg.partial.iter().map(|&c| (c as isize - pre, nearest(c))))
        .collect();
    windows.sort_unstable();
    windows.dedup_by_key(|w| w.0);

    let mut acc = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for (k, &(start, col)) in windows.iter().enumerate() {
        let end = start + p;
        // overlap with the previous window is [start, prev_end)
        let fade_in = k
            .checked_sub(1)
            .map(|j| windows[j].0 + p)
            .filter(|&prev_end| prev_end > start)
            .map(|prev_end| (start, prev_end));
        let fade_out = windows
            .get(k + 1)
            .map(|w| w.0)
            .filter(|&next| next < end)
            .map(|next| (next, end));
        for i in start.max(0)..end.min(n as isize) {
            let mut g: f64 = 1.0;
            if let Some((a, b)) = fade_in {
                if i < b {
                    g = g.min((i - a + 1) as f64 / (b - a + 1) as f64);
                }
            }
            if let Some((a, b)) = fade_out {
                if i >= a {
                    g = g.min((b - i) as f64 / (b - a + 1) as f64);
                }
            }
            let iu = i as usize;
            acc[iu] += g * data[((i - start) as usize, col)];
            weight[iu] += g;
        }
    }
    acc.iter()
        .zip(&weight)
        .map(|(&a, &w)| if w == 1.0 { a } else if w > 0.0 { a / w } else { 0.0 })
        .collect()
}

/// A component estimated by segmenting, denoising and stitching.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub signal: Vec<f64>,
    pub segments: SegmentMatrix,
    pub denoised: Matrix,
    /// `None` when too few cycles forced the median-template fallback.
    pub shrinkage: Option<ShrinkageResult>,
}

/// Estimates the part of `z` that repeats at every peak.
pub fn estimate_component(z: &[f64], peaks: &PeakList, fs: f64, config: &DenoiseConfig) -> Result<Component> {
    let segments = segment(z, peaks, fs)?;
    let (denoised, shrinkage) = if segments.n_cycles() >= MIN_OS_CYCLES {
        let r = optimal_shrink(&segments.data, config)?;
        (r.denoised.clone(), Some(r))
    } else {
        log::warn!(
            "only {} cycles; using the median template instead of shrinkage",
            segments.n_cycles()
        );
        let t = median_template(&segments.data);
        (Matrix::from_fn(segments.data.nrows(), segments.n_cycles(), |k, _| t[k]), None)
    };
    Ok(Component {
        signal: stitch(&segments, &denoised),
        segments,
        denoised,
        shrinkage,
    })
}

/// Replaces every column by the entry-wise median of itself and the `k_m`
/// columns with the closest RR interval (ties go to the temporally nearer
/// column, then the earlier one).
pub fn nonlocal_median(seg: &SegmentMatrix, k_m: usize) -> Result<SegmentMatrix> {
    let n = seg.n_cycles();
    if k_m < 2 {
        return Err(Error::arg(format!("nonlocal median needs at least 2 neighbours, got {k_m}")));
    }
    if k_m >= n {
        return Err(Error::arg(format!("nonlocal median with {k_m} neighbours needs more than {k_m} cycles, got {n}")));
    }
    let p = seg.data.nrows();
    let mut out = Matrix::zeros(p, n);
    let mut buf = Vec::with_capacity(k_m + 1);
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| {
            let da = (seg.rr_ms[a] - seg.rr_ms[i]).abs();
            let db = (seg.rr_ms[b] - seg.rr_ms[i]).abs();
            da.total_cmp(&db).then(a.abs_diff(i).cmp(&b.abs_diff(i))).then(a.cmp(&b))
        });
        others.truncate(k_m);
        others.push(i);
        for k in 0..p {
            buf.clear();
            buf.extend(others.iter().map(|&j| seg.data[(k, j)]));
            out[(k, i)] = stats::median(&buf).expect("non-empty");
        }
    }
    seg.with_data(out)
}
