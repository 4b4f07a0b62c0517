use fecg::evaluate::{f1, match_peaks};
use fecg::io::{resample_signal, PeakList};
use fecg::shrinkage::eta_star;
use proptest::prelude::*;

fn peak_list() -> impl Strategy<Value = PeakList> {
    prop::collection::vec(1.0f64..400.0, 0..40).prop_map(|gaps| {
        let mut t = 0.0;
        PeakList::new(
            gaps.into_iter()
                .map(|g| {
                    t += g;
                    t
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn matching_accounts_for_every_beat(truth in peak_list(), det in peak_list(), w in 1.0f64..100.0) {
        let m = match_peaks(&truth, &det, w);
        prop_assert_eq!(m.tp() + m.fn_, truth.len());
        prop_assert_eq!(m.tp() + m.fp, det.len());
        for &(t, d) in &m.pairs {
            prop_assert!((t - d).abs() <= w);
        }
        if let Ok(score) = f1(&m) {
            prop_assert!((0.0..=1.0).contains(&score));
        }
    }

    #[test]
    fn wider_windows_never_lose_matches(truth in peak_list(), det in peak_list()) {
        let a = match_peaks(&truth, &det, 10.0).tp();
        let b = match_peaks(&truth, &det, 25.0).tp();
        let c = match_peaks(&truth, &det, 50.0).tp();
        prop_assert!(a <= b && b <= c);
    }

    #[test]
    fn shrinker_never_inflates(lambda in 0.0f64..50.0, beta in 0.01f64..1.0) {
        let eta = eta_star(lambda, beta).unwrap();
        prop_assert!(eta >= 0.0);
        prop_assert!(eta <= lambda);
        if lambda <= 1.0 + beta.sqrt() {
            prop_assert_eq!(eta, 0.0);
        }
    }

    #[test]
    fn shrinker_is_monotone(l1 in 0.0f64..20.0, dl in 0.0f64..5.0, beta in 0.01f64..1.0) {
        prop_assert!(eta_star(l1, beta).unwrap() <= eta_star(l1 + dl, beta).unwrap());
    }

    #[test]
    fn peak_times_survive_json(list in peak_list()) {
        let text = serde_json::to_string(&list).unwrap();
        let back: PeakList = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, list);
    }

    #[test]
    fn resampling_keeps_length_ratio(n in 100usize..2000) {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.01).sin()).collect();
        let y = resample_signal(&x, 1000, 500).unwrap();
        prop_assert!((y.len() as i64 - (n as i64 + 1) / 2).abs() <= 1);
    }
}
