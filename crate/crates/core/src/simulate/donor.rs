//! Synthetic donor recordings: a three-lead dipole built from Gaussian
//! P, Q, R, S and T waves per beat, with heart-rate variability, QT
//! adaptation, respiratory amplitude modulation, optional premature beats,
//! baseline wander and sensor noise.
//!
//! Maternal donors carry the three orthogonal leads `vx, vy, vz` at 1 kHz.
//! Fetal donors carry two leads at 360 Hz with an adult rhythm; the
//! simulator compresses them in time to reach fetal rates.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::Result;
use crate::io::{AnnotationKind, PeakList, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DonorKind {
    Maternal,
    Fetal,
}

struct Wave {
    /// Offset from R, seconds (T is scaled with √RR).
    offset: f64,
    width: f64,
    dipole: [f64; 3],
}

fn base_waves(kind: DonorKind) -> [Wave; 5] {
    let (p, q, r, s, t) = match kind {
        DonorKind::Maternal => (
            [0.10, 0.06, 0.04],
            [-0.08, -0.06, 0.10],
            [1.00, 0.65, 0.35],
            [-0.20, -0.30, -0.25],
            [0.28, 0.20, -0.08],
        ),
        DonorKind::Fetal => (
            [0.08, 0.10, -0.05],
            [-0.10, 0.05, -0.08],
            [0.55, 1.00, -0.45],
            [-0.25, -0.15, 0.20],
            [0.18, 0.30, -0.10],
        ),
    };
    [
        Wave { offset: -0.165, width: 0.022, dipole: p },
        Wave { offset: -0.028, width: 0.008, dipole: q },
        Wave { offset: 0.0, width: 0.010, dipole: r },
        Wave { offset: 0.030, width: 0.009, dipole: s },
        Wave { offset: 0.300, width: 0.045, dipole: t },
    ]
}

struct Beat {
    time: f64,
    rr: f64,
    amp: f64,
    ectopic: bool,
}

fn rhythm(rng: &mut ChaCha8Rng, duration: f64, mean_rr: f64, ectopy: f64) -> Vec<Beat> {
    let lf = rng.random_range(0.07..0.12);
    let (ph1, ph2) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
    let resp = rng.random_range(0.2..0.3);
    let jitter = Normal::new(0.0, 0.01 * mean_rr).expect("finite sd");
    let mut beats = Vec::new();
    let mut t = rng.random_range(0.2..0.6) * mean_rr;
    let mut rr = mean_rr;
    while t < duration {
        let breath = (2.0 * PI * resp * t + ph2).sin();
        let premature = beats.len() > 1 && rng.random::<f64>() < ectopy;
        match (premature, beats.last()) {
            // the ectopic beat pre-empts this sinus beat; the next one keeps
            // its slot, giving a compensatory pause
            (true, Some(last)) => {
                let last: &Beat = last;
                beats.push(Beat {
                    time: last.time + 0.65 * rr,
                    rr: 0.65 * rr,
                    amp: 1.0,
                    ectopic: true,
                })
            }
            _ => beats.push(Beat {
                time: t,
                rr,
                amp: 1.0 + 0.08 * breath,
                ectopic: false,
            }),
        }
        rr = mean_rr * (1.0 + 0.04 * (2.0 * PI * lf * t + ph1).sin() + 0.02 * breath) + jitter.sample(rng);
        t += rr;
    }
    beats
}

fn perturb(rng: &mut ChaCha8Rng, v: [f64; 3], rel: f64) -> [f64; 3] {
    v.map(|a| a * (1.0 + rel * rng.random_range(-1.0..1.0)))
}

/// Three-lead dipole signals and R times (s) for one donor.
fn dipole(kind: DonorKind, seed: u64, duration: f64, fs: f64, ectopy: f64) -> ([Vec<f64>; 3], Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_rr = match kind {
        DonorKind::Maternal => 60.0 / rng.random_range(66.0..88.0),
        DonorKind::Fetal => 60.0 / rng.random_range(64.0..80.0),
    };
    let mut waves = base_waves(kind);
    for w in waves.iter_mut() {
        w.dipole = perturb(&mut rng, w.dipole, 0.25);
    }
    let gain = rng.random_range(0.8..1.4);
    let beats = rhythm(&mut rng, duration, mean_rr, ectopy);

    let n = (duration * fs).round() as usize;
    let mut leads = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for b in &beats {
        let qt_scale = (b.rr.max(0.3) / 1.0).sqrt();
        for (k, w) in waves.iter().enumerate() {
            let (mut center, mut width, mut dip) = (b.time + w.offset, w.width, w.dipole);
            if k == 4 {
                center = b.time + w.offset * qt_scale;
                width = w.width * qt_scale;
            }
            if b.ectopic {
                match k {
                    0 => continue,
                    1..=3 => {
                        width *= 2.5;
                        center = b.time + w.offset * 2.0;
                        dip = [dip[1], -dip[0], dip[2]];
                    }
                    _ => dip = dip.map(|v| -v),
                }
            }
            let lo = (((center - 5.0 * width) * fs).floor().max(0.0)) as usize;
            let hi = (((center + 5.0 * width) * fs).ceil() as usize).min(n);
            for i in lo..hi {
                let u = (i as f64 / fs - center) / width;
                let g = gain * b.amp * (-0.5 * u * u).exp();
                for (lead, d) in leads.iter_mut().zip(dip) {
                    lead[i] += g * d;
                }
            }
        }
    }
    let wander_f = rng.random_range(0.15..0.35);
    let noise_sd = 0.005;
    for lead in leads.iter_mut() {
        let ph = rng.random_range(0.0..2.0 * PI);
        let amp = rng.random_range(0.02..0.06);
        for (i, v) in lead.iter_mut().enumerate() {
            let s: f64 = StandardNormal.sample(&mut rng);
            *v += amp * (2.0 * PI * wander_f * i as f64 / fs + ph).sin() + noise_sd * s;
        }
    }
    (leads, beats.iter().map(|b| b.time).collect())
}

/// A synthetic donor recording with its R annotations.
///
/// `index` selects the donor; the same `(kind, index, seed)` always yields
/// the same record. Fetal donors include premature beats at `ectopy` rate.
pub fn synthetic_donor(kind: DonorKind, index: usize, seed: u64, duration_s: f64, ectopy: f64) -> Result<Record> {
    let tag = match kind {
        DonorKind::Maternal => 0x6d61_7465u64,
        DonorKind::Fetal => 0x6665_7461u64,
    };
    let donor_seed = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(tag)
        .wrapping_add(index as u64 * 0x1000_0000_01b3);
    match kind {
        DonorKind::Maternal => {
            let fs = 1000u32;
            let (leads, r) = dipole(kind, donor_seed, duration_s, fs as f64, 0.0);
            let names = vec!["vx".to_string(), "vy".to_string(), "vz".to_string()];
            let rec = Record::new(format!("m{index:03}"), fs, names, leads.to_vec())?;
            let idx: Vec<usize> = r.iter().map(|t| (t * fs as f64).round() as usize).collect();
            let peaks = PeakList::from_samples(&inside(&idx, rec.n_samples()), fs as f64);
            rec.with_annotation(AnnotationKind::MaternalR, peaks)
        }
        DonorKind::Fetal => {
            let fs = 360u32;
            let (leads, r) = dipole(kind, donor_seed, duration_s, fs as f64, ectopy);
            // two fixed limb/precordial-like leads
            let l1 = super::project_vcg(&leads[0], &leads[1], &leads[2], PI / 6.0, PI / 10.0)?;
            let l2 = super::project_vcg(&leads[0], &leads[1], &leads[2], -PI / 3.0, PI / 4.0)?;
            let names = vec!["lead1".to_string(), "lead2".to_string()];
            let rec = Record::new(format!("f{index:03}"), fs, names, vec![l1, l2])?;
            let idx: Vec<usize> = r.iter().map(|t| (t * fs as f64).round() as usize).collect();
            let peaks = PeakList::from_samples(&inside(&idx, rec.n_samples()), fs as f64);
            rec.with_annotation(AnnotationKind::FetalR, peaks)
        }
    }
}

fn inside(idx: &[usize], n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = idx.iter().copied().filter(|&i| i < n).collect();
    v.dedup();
    v
}
