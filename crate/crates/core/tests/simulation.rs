use fecg::io::AnnotationKind;
use fecg::simulate::{simulate_record, synthetic_donor, DonorKind, SimConfig, FETAL_COMPRESSION};

#[test]
fn ectopic_fetal_beats_keep_their_compressed_times() {
    let maternal = synthetic_donor(DonorKind::Maternal, 0, 21, 22.0, 0.0).unwrap();
    let fetal = synthetic_donor(DonorKind::Fetal, 0, 21, 44.0, 0.2).unwrap();
    let donor_r = fetal.annotation(AnnotationKind::FetalR).unwrap();

    // premature beats make the donor rhythm irregular
    let rr = donor_r.rr_intervals();
    let mean = rr.iter().sum::<f64>() / rr.len() as f64;
    assert!(rr.iter().any(|&d| d < 0.85 * mean), "no premature beat in the donor");

    let cfg = SimConfig {
        duration_s: 20.0,
        snr_db: None,
        ..SimConfig::default()
    };
    let sim = simulate_record("ect", &maternal, &fetal, &cfg, 1).unwrap();
    let truth = sim.truth(AnnotationKind::FetalR).unwrap();

    let expected: Vec<f64> = donor_r
        .times()
        .iter()
        .map(|t| t / FETAL_COMPRESSION as f64)
        .filter(|&t| t < 20_000.0)
        .collect();
    assert_eq!(truth.times(), expected.as_slice());
}

#[test]
fn noiseless_mixture_is_the_sum_of_its_parts() {
    let maternal = synthetic_donor(DonorKind::Maternal, 1, 4, 12.0, 0.0).unwrap();
    let fetal = synthetic_donor(DonorKind::Fetal, 1, 4, 24.0, 0.0).unwrap();
    let cfg = SimConfig {
        duration_s: 10.0,
        snr_db: None,
        r: 0.125,
        ..SimConfig::default()
    };
    let sim = simulate_record("sum", &maternal, &fetal, &cfg, 0).unwrap();
    for (j, ch) in sim.record.channels().iter().enumerate() {
        for (i, &v) in ch.iter().enumerate() {
            assert_eq!(v, sim.mecg[j][i] + sim.fecg[j][i]);
        }
        assert!((sim.stats[j].ratio - 0.125).abs() < 1e-12);
    }
}
