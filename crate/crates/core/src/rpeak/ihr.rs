use super::{IhrCurve, TfPlane};
use crate::error::{Error, Result};

/// Best ridge through the plane inside `band`, by dynamic programming.
///
/// Each frame is normalised to a peak of 1 inside the band; the path
/// maximises the summed normalised magnitude minus `penalty · |Δf|` (per Hz)
/// between consecutive frames.
pub fn extract_ihr(plane: &TfPlane, band: [f64; 2], penalty: f64) -> Result<IhrCurve> {
    let bins: Vec<usize> = plane
        .freqs
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= band[0] && f <= band[1])
        .map(|(i, _)| i)
        .collect();
    if bins.is_empty() || plane.times.is_empty() {
        return Err(Error::arg(format!(
            "band [{}, {}] Hz contains no frequency bins",
            band[0], band[1]
        )));
    }
    let freqs: Vec<f64> = bins.iter().map(|&b| plane.freqs[b]).collect();
    let nb = bins.len();
    let frame_score = |t: usize| -> Vec<f64> {
        let row = &plane.values[t];
        let m = bins.iter().map(|&b| row[b]).fold(0.0, f64::max);
        bins.iter()
            .map(|&b| if m > 0.0 { row[b] / m } else { 0.0 })
            .collect()
    };

    let nt = plane.times.len();
    let mut back = vec![vec![0usize; nb]; nt];
    let mut acc = frame_score(0);
    let mut best = vec![0.0; nb];
    let mut arg = vec![0usize; nb];
    for t in 1..nt {
        // exact max over g of acc[g] − penalty·|f − f_g|, two sweeps
        for i in 0..nb {
            best[i] = acc[i];
            arg[i] = i;
            if i > 0 {
                let cand = best[i - 1] - penalty * (freqs[i] - freqs[i - 1]);
                if cand > best[i] {
                    best[i] = cand;
                    arg[i] = arg[i - 1];
                }
            }
        }
        for i in (0..nb.saturating_sub(1)).rev() {
            let cand = best[i + 1] - penalty * (freqs[i + 1] - freqs[i]);
            if cand > best[i] {
                best[i] = cand;
                arg[i] = arg[i + 1];
            }
        }
        let s = frame_score(t);
        for i in 0..nb {
            acc[i] = best[i] + s[i];
            back[t][i] = arg[i];
        }
    }
    let mut i = (0..nb)
        .max_by(|&a, &b| acc[a].total_cmp(&acc[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut rate = vec![0.0; nt];
    for t in (0..nt).rev() {
        rate[t] = freqs[i];
        i = back[t][i];
    }
    Ok(IhrCurve {
        times: plane.times.clone(),
        rate,
    })
}
