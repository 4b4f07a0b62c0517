//! Semi-real abdominal recordings: a maternal dipole projected onto lead
//! directions, plus a time-compressed donor ECG standing in for the fetus,
//! plus white noise at a set SNR, with ground-truth annotations.

mod donor;

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use self::donor::{synthetic_donor, DonorKind};

use crate::decompose::{linear_combinations_of, CombinationGrid};
use crate::error::{Error, Result};
use crate::evaluate::{detect_pt, PtWindows};
use crate::io::{resample, resample_signal, save_record, AnnotationKind, PeakList, Record};
use crate::preprocess::{preprocess_channel, FilterSpec};
use crate::stats::rms;

/// The fetal donor is resampled to `out_fs / FETAL_COMPRESSION` and its
/// samples are then read at `out_fs`, speeding its rhythm up by this factor.
pub const FETAL_COMPRESSION: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// `(θ_xy, θ_z)` lead direction per output channel, radians.
    pub angles: Vec<[f64; 2]>,
    /// Fetal to maternal RMS ratio.
    pub r: f64,
    /// `None` leaves the noise out.
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub duration_s: f64,
    pub out_fs: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            angles: vec![[PI / 4.0, PI / 4.0], [PI / 5.0, 3.0 * PI / 10.0]],
            r: 0.25,
            snr_db: Some(20.0),
            seed: 0,
            duration_s: 57.0,
            out_fs: 1000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::arg(format!("ratio r must lie in (0, 1), got {}", self.r)));
        }
        if self.angles.is_empty() {
            return Err(Error::arg("at least one lead direction is required"));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::arg("duration must be positive"));
        }
        if self.out_fs == 0 || self.out_fs % FETAL_COMPRESSION != 0 {
            return Err(Error::arg(format!(
                "output rate must be a positive multiple of {FETAL_COMPRESSION}"
            )));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return Err(Error::arg("SNR must be finite; omit it to disable noise"));
            }
        }
        Ok(())
    }
}

/// Measured properties of one generated channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    /// `None` when noise is off.
    pub snr_db: Option<f64>,
    /// RMS of the scaled fetal part over RMS of the maternal part.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub record: Record,
    /// Clean maternal part per channel.
    pub mecg: Vec<Vec<f64>>,
    /// Clean, scaled fetal part per channel.
    pub fecg: Vec<Vec<f64>>,
    pub stats: Vec<ChannelStats>,
    pub maternal_donor: String,
    pub fetal_donor: String,
    /// Smallest fetal RMS over the combination grid, relative to the mean
    /// per-channel fetal RMS.
    pub fetal_residual_ratio: f64,
}

impl SimRecord {
    pub fn truth(&self, kind: AnnotationKind) -> Option<&PeakList> {
        self.record.annotation(kind)
    }
}

/// `(vx·cos θxy + vy·sin θxy)·cos θz + vz·sin θz`, sample-wise.
pub fn project_vcg(vx: &[f64], vy: &[f64], vz: &[f64], theta_xy: f64, theta_z: f64) -> Result<Vec<f64>> {
    if vx.len() != vy.len() || vx.len() != vz.len() {
        return Err(Error::arg(format!(
            "lead lengths differ: {}, {}, {}",
            vx.len(),
            vy.len(),
            vz.len()
        )));
    }
    let (cxy, sxy, cz, sz) = (theta_xy.cos(), theta_xy.sin(), theta_z.cos(), theta_z.sin());
    Ok(vx
        .iter()
        .zip(vy)
        .zip(vz)
        .map(|((x, y), z)| (x * cxy + y * sxy) * cz + z * sz)
        .collect())
}

pub struct Mixed {
    pub signal: Vec<f64>,
    pub fetal: Vec<f64>,
    pub stats: ChannelStats,
}

/// `mecg + r·(fecg scaled to the RMS of mecg) + noise`, the noise being
/// white Gaussian with power set from the mean square of the clean sum.
pub fn mix(mecg: &[f64], fecg: &[f64], r: f64, snr_db: Option<f64>, rng: &mut ChaCha8Rng) -> Result<Mixed> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::arg(format!("ratio r must lie in (0, 1), got {r}")));
    }
    if mecg.len() != fecg.len() {
        return Err(Error::arg("maternal and fetal parts differ in length"));
    }
    let (rm, rf) = (rms(mecg), rms(fecg));
    if !(rm > 0.0 && rf > 0.0) {
        return Err(Error::arg("cannot scale a silent component"));
    }
    let gain = r * rm / rf;
    let fetal: Vec<f64> = fecg.iter().map(|v| v * gain).collect();
    let clean: Vec<f64> = mecg.iter().zip(&fetal).map(|(m, f)| m + f).collect();
    let (signal, snr) = match snr_db {
        None => (clean, None),
        Some(db) => {
            let p_clean = clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64;
            let sd = (p_clean / 10f64.powf(db / 10.0)).sqrt();
            let noise: Vec<f64> = (0..clean.len())
                .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect();
            let p_noise = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
            let signal = clean.iter().zip(&noise).map(|(c, e)| c + e).collect();
            (signal, Some(10.0 * (p_clean / p_noise).log10()))
        }
    };
    let ratio = rms(&fetal) / rm;
    Ok(Mixed {
        signal,
        fetal,
        stats: ChannelStats { snr_db: snr, ratio },
    })
}

/// Maternal donor channels `vx, vy, vz` at the output rate, cut to length.
fn maternal_part(donor: &Record, config: &SimConfig, n: usize) -> Result<(Vec<Vec<f64>>, PeakList)> {
    if donor.n_channels() < 3 {
        return Err(Error::arg(format!(
            "maternal donor {} needs three leads, has {}",
            donor.name(),
            donor.n_channels()
        )));
    }
    let d = resample(donor, config.out_fs)?;
    if d.n_samples() < n {
        return Err(Error::TooShort(format!(
            "maternal donor {} lasts {:.1} s",
            donor.name(),
            d.duration_ms() / 1000.0
        )));
    }
    let (vx, vy, vz) = (&d.channel(0)[..n], &d.channel(1)[..n], &d.channel(2)[..n]);
    let chans = config
        .angles
        .iter()
        .map(|[a, b]| project_vcg(vx, vy, vz, *a, *b))
        .collect::<Result<Vec<_>>>()?;
    let dur = n as f64 * 1000.0 / config.out_fs as f64;
    let peaks = d
        .annotation(AnnotationKind::MaternalR)
        .map(|p| p.window(0.0, dur))
        .unwrap_or_else(PeakList::empty);
    Ok((chans, peaks))
}

/// Fetal donor leads sped up by [`FETAL_COMPRESSION`], one per output
/// channel (cycling through the donor's leads), with its R times.
fn fetal_part(donor: &Record, config: &SimConfig, n: usize) -> Result<(Vec<Vec<f64>>, PeakList)> {
    let slow_fs = config.out_fs / FETAL_COMPRESSION;
    let leads = donor
        .channels()
        .iter()
        .map(|c| resample_signal(c, donor.fs(), slow_fs))
        .collect::<Result<Vec<_>>>()?;
    if leads[0].len() < n {
        return Err(Error::TooShort(format!(
            "fetal donor {} lasts {:.1} s, needs {:.1} s",
            donor.name(),
            donor.duration_ms() / 1000.0,
            n as f64 / slow_fs as f64
        )));
    }
    let chans = (0..config.angles.len())
        .map(|j| leads[j % leads.len()][..n].to_vec())
        .collect();
    let dur = n as f64 * 1000.0 / config.out_fs as f64;
    let peaks = donor
        .annotation(AnnotationKind::FetalR)
        .map(|p| p.scaled(1.0 / FETAL_COMPRESSION as f64).window(0.0, dur))
        .unwrap_or_else(PeakList::empty);
    Ok((chans, peaks))
}

/// Smallest fetal RMS over the combination grid relative to the mean fetal
/// channel RMS. Small values mean some combination erases the fetus.
pub fn fetal_residual_ratio(fecg: &[Vec<f64>]) -> Result<f64> {
    let mean_rms = fecg.iter().map(|c| rms(c)).sum::<f64>() / fecg.len() as f64;
    let grid = CombinationGrid::default_for(fecg.len(), crate::decompose::DEFAULT_GRID_STEPS)?;
    let combos = linear_combinations_of(fecg, &grid)?;
    Ok(combos.iter().map(|c| rms(c)).fold(f64::INFINITY, f64::min) / mean_rms)
}

pub fn simulate_record(
    name: &str,
    maternal: &Record,
    fetal: &Record,
    config: &SimConfig,
    rng_seed: u64,
) -> Result<SimRecord> {
    config.validate()?;
    let n = (config.duration_s * config.out_fs as f64).round() as usize;
    let (mecg, maternal_r) = maternal_part(maternal, config, n)?;
    let (fecg_raw, fetal_r) = fetal_part(fetal, config, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut channels = Vec::with_capacity(mecg.len());
    let mut fecg = Vec::with_capacity(mecg.len());
    let mut stats = Vec::with_capacity(mecg.len());
    for (m, f) in mecg.iter().zip(&fecg_raw) {
        let mixed = mix(m, f, config.r, config.snr_db, &mut rng)?;
        channels.push(mixed.signal);
        fecg.push(mixed.fetal);
        stats.push(mixed.stats);
    }
    let fetal_residual_ratio = if fecg.len() == 2 {
        let v = fetal_residual_ratio(&fecg)?;
        if v <= 0.1 {
            log::warn!("{name}: a channel combination nearly cancels the fetal signal ({v:.3})");
        }
        v
    } else {
        1.0
    };

    let fs = config.out_fs as f64;
    let reference = preprocess_channel(&fecg[0], fs, &FilterSpec::default())?;
    let marks = detect_pt(&reference, fs, &fetal_r, &PtWindows::fetal());
    let record = Record::from_channels(name, config.out_fs, channels)?
        .with_annotation(AnnotationKind::MaternalR, maternal_r)?
        .with_annotation(AnnotationKind::FetalR, fetal_r)?
        .with_annotation(AnnotationKind::FetalP, marks.p)?
        .with_annotation(AnnotationKind::FetalT, marks.t)?;
    Ok(SimRecord {
        record,
        mecg,
        fecg,
        stats,
        maternal_donor: maternal.name().to_string(),
        fetal_donor: fetal.name().to_string(),
        fetal_residual_ratio,
    })
}

/// One record per maternal donor, pairing donor `i` with fetal donor
/// `i mod len`. Record `i` draws its noise from seed `seed + i`. Donors that
/// are too short are skipped with a warning.
pub fn generate_dataset(maternal: &[Record], fetal: &[Record], config: &SimConfig) -> Result<Vec<SimRecord>> {
    use rayon::prelude::*;
    config.validate()?;
    if maternal.is_empty() || fetal.is_empty() {
        return Err(Error::arg("both donor sets must be non-empty"));
    }
    let out: Vec<Option<SimRecord>> = maternal
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let f = &fetal[i % fetal.len()];
            let name = format!("sim{i:03}");
            match simulate_record(&name, m, f, config, config.seed.wrapping_add(i as u64)) {
                Ok(r) => Ok(Some(r)),
                Err(Error::TooShort(msg)) => {
                    log::warn!("{name}: skipped, {msg}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Synthetic donor sets: `count` maternal donors of `duration_s` and as many
/// fetal donors long enough to survive compression.
pub fn synthetic_donors(count: usize, seed: u64, duration_s: f64) -> Result<(Vec<Record>, Vec<Record>)> {
    let secs = duration_s + 2.0;
    let m = (0..count)
        .map(|i| synthetic_donor(DonorKind::Maternal, i, seed, secs, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let f = (0..count)
        .map(|i| synthetic_donor(DonorKind::Fetal, i, seed, secs * FETAL_COMPRESSION as f64, 0.02))
        .collect::<Result<Vec<_>>>()?;
    Ok((m, f))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub maternal_donor: String,
    pub fetal_donor: String,
    pub channels: Vec<ChannelStats>,
    pub fetal_residual_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SimConfig,
    pub records: Vec<ManifestEntry>,
}

/// Writes every record (CSV plus annotation sidecar) and `manifest.json`.
pub fn write_dataset(records: &[SimRecord], config: &SimConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for r in records {
        save_record(&r.record, dir)?;
    }
    let manifest = Manifest {
        config: config.clone(),
        records: records
            .iter()
            .map(|r| ManifestEntry {
                name: r.record.name().to_string(),
                maternal_donor: r.maternal_donor.clone(),
                fetal_donor: r.fetal_donor.clone(),
                channels: r.stats.clone(),
                fetal_residual_ratio: r.fetal_residual_ratio,
            })
            .collect(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let x = [1.0, 2.0];
        let y = [3.0, 4.0];
        let z = [5.0, 6.0];
        assert_eq!(project_vcg(&x, &y, &z, 0.0, 0.0).unwrap(), x.to_vec());
        let got = project_vcg(&x, &y, &z, PI / 2.0, PI / 2.0).unwrap();
        for (g, w) in got.iter().zip(z) {
            assert!((g - w).abs() < 1e-12);
        }
        let one = project_vcg(&[1.0], &[1.0], &[1.0], PI / 4.0, PI / 4.0).unwrap();
        assert!((one[0] - (1.0 + 2f64.sqrt() / 2.0)).abs() < 1e-12);
        assert!(project_vcg(&x, &y, &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn mix_without_noise_is_exact() {
        let m: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.01).sin()).collect();
        let f: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.07).cos()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = mix(&m, &f, 0.25, None, &mut rng).unwrap();
        for i in 0..1000 {
            assert_eq!(out.signal[i], m[i] + out.fetal[i]);
        }
        assert!((out.stats.ratio - 0.25).abs() < 1e-12);
        assert!(mix(&m, &f, 1.0, None, &mut rng).is_err());
        assert!(mix(&m, &f, 0.0, None, &mut rng).is_err());
    }

    #[test]
    fn mix_hits_snr() {
        let m: Vec<f64> = (0..57_000).map(|i| (i as f64 * 0.01).sin()).collect();
        let f: Vec<f64> = (0..57_000).map(|i| (i as f64 * 0.07).cos()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = mix(&m, &f, 0.125, Some(20.0), &mut rng).unwrap();
        let clean: Vec<f64> = m.iter().zip(&out.fetal).map(|(a, b)| a + b).collect();
        let noise: Vec<f64> = out.signal.iter().zip(&clean).map(|(s, c)| s - c).collect();
        let snr = 20.0 * (rms(&clean) / rms(&noise)).log10();
        assert!((snr - 20.0).abs() <= 0.5, "{snr}");
    }

    #[test]
    fn dataset_is_deterministic_and_annotated() {
        let (m, f) = synthetic_donors(2, 5, 20.0).unwrap();
        let cfg = SimConfig {
            duration_s: 20.0,
            seed: 3,
            ..SimConfig::default()
        };
        let a = generate_dataset(&m, &f, &cfg).unwrap();
        let b = generate_dataset(&m, &f, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        let r = &a[0];
        assert_eq!(r.record.n_samples(), 20_000);
        assert_eq!(r.record.n_channels(), 2);
        for s in &r.stats {
            assert!((s.snr_db.unwrap() - 20.0).abs() <= 0.5);
            assert!((s.ratio - 0.25).abs() <= 0.0125);
        }
        assert!(r.fetal_residual_ratio > 0.1, "{}", r.fetal_residual_ratio);
        let fr = r.truth(AnnotationKind::FetalR).unwrap();
        let mr = r.truth(AnnotationKind::MaternalR).unwrap();
        assert!(fr.len() as f64 > 1.6 * mr.len() as f64);
        // every fetal R sits on an extremum of the clean fetal signal
        for &i in &fr.to_samples(1000.0) {
            let x = &r.fecg[0];
            let lo = i.saturating_sub(10);
            let hi = (i + 11).min(x.len());
            let peak = (lo..hi).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap();
            assert!(peak > lo && peak + 1 < hi, "fetal R at {i} not on an extremum");
        }
    }

    #[test]
    fn too_short_donor_is_skipped() {
        let (m, f) = synthetic_donors(1, 5, 10.0).unwrap();
        let cfg = SimConfig {
            duration_s: 30.0,
            ..SimConfig::default()
        };
        assert!(generate_dataset(&m, &f, &cfg).unwrap().is_empty());
    }
}
