//! Beat-agreement quality index: how well two unrelated QRS detectors agree
//! on one signal.

use crate::error::{Error, Result};
use crate::evaluate::match_peaks;
use crate::io::PeakList;
use crate::rpeak::{classic_detect, detect_peaks, RpeakParams};

/// Tolerance for two detections to count as the same beat.
pub const BSQI_WINDOW_MS: f64 = 50.0;

/// Shortest signal the index is defined on, seconds.
pub const BSQI_MIN_SECONDS: f64 = 5.0;

/// `2·matched / (n1 + n2)` with one-to-one matching within
/// [`BSQI_WINDOW_MS`]; zero when either list has fewer than two beats.
pub fn agreement(a: &PeakList, b: &PeakList) -> f64 {
    if a.len() < 2 || b.len() < 2 {
        return 0.0;
    }
    let m = match_peaks(a, b, BSQI_WINDOW_MS);
    2.0 * m.tp() as f64 / (a.len() + b.len()) as f64
}

/// Agreement between the rate-guided beat tracker and the classic
/// derivative/threshold detector on `z`.
///
/// A tracker failure on a degenerate signal (for instance all zeros) counts
/// as no beats.
pub fn bsqi(z: &[f64], fs: f64, params: &RpeakParams) -> Result<f64> {
    if (z.len() as f64) < BSQI_MIN_SECONDS * fs {
        return Err(Error::TooShort(format!(
            "quality index needs {BSQI_MIN_SECONDS} s, got {:.2} s",
            z.len() as f64 / fs
        )));
    }
    let tracked = match detect_peaks(z, fs, params) {
        Ok(p) => p,
        Err(e) => {
            log::debug!("beat tracker gave up: {e}");
            PeakList::empty()
        }
    };
    let classic = classic_detect(z, fs, &params.classic);
    Ok(agreement(&tracked, &classic))
}

/// Index of the best score; ties go to the lower index. `None` when empty.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    scores
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &s)| match best {
            Some((_, b)) if !(s > b) => best,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rpeak::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn agreement_hand_example() {
        let a = PeakList::new(vec![1000.0, 2000.0]).unwrap();
        let b = PeakList::new(vec![1005.0, 2400.0]).unwrap();
        assert_eq!(agreement(&a, &b), 0.5);
        assert_eq!(agreement(&a, &a), 1.0);
        assert_eq!(agreement(&a, &PeakList::new(vec![1000.0]).unwrap()), 0.0);
    }

    #[test]
    fn impulse_train_scores_one() {
        let fs = 1000.0;
        let n = 30_000;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let ph = (i as f64 - 200.0).rem_euclid(420.0);
                let u = ph.min(420.0 - ph);
                (-(u / 5.0).powi(2)).exp()
            })
            .collect();
        let s = bsqi(&x, fs, &RpeakParams::for_mode(Mode::Fetal)).unwrap();
        assert!(s > 0.99, "{s}");
    }

    // Both detectors follow energy bursts in overlapping bands, so on white
    // noise they agree on roughly half their beats; clean beats score ~1.
    #[test]
    fn white_noise_scores_well_below_clean() {
        let params = RpeakParams::for_mode(Mode::Fetal);
        let mut scores: Vec<f64> = (0..20)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
                bsqi(&x, 1000.0, &params).unwrap()
            })
            .collect();
        scores.sort_by(f64::total_cmp);
        let median = 0.5 * (scores[9] + scores[10]);
        assert!(median <= 0.6, "{scores:?}");
        assert!(scores[19] < 0.9, "{scores:?}");
    }

    #[test]
    fn zero_signal_scores_zero_and_short_signal_errors() {
        let params = RpeakParams::for_mode(Mode::Fetal);
        assert_eq!(bsqi(&vec![0.0; 10_000], 1000.0, &params).unwrap(), 0.0);
        assert!(bsqi(&vec![0.0; 4000], 1000.0, &params).is_err());
    }

    #[test]
    fn selection_breaks_ties_low() {
        assert_eq!(select_best(&[0.2, 0.9, 0.9]), Some(1));
        assert_eq!(select_best(&[0.4]), Some(0));
        assert_eq!(select_best(&[]), None);
        assert_eq!(select_best(&[0.0, 0.0]), Some(0));
    }
}
