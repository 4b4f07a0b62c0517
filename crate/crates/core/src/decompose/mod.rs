//! Maternal/fetal separation from one to three abdominal channels.
//!
//! Every direction of a [`CombinationGrid`] mixes the channels into one
//! signal. Maternal beats are detected on all of them and fused. On each
//! mixed signal the maternal part is estimated by shrinking the matrix of
//! R-aligned maternal cycles and stitching it back, and the remainder is
//! the rough fetal signal. The direction whose rough fetal signal has the
//! best beat-agreement index wins; fetal beats are then detected there, the
//! fetal part is denoised the same way, and the maternal estimate is redone
//! with the fetal estimate removed.

mod grid;
mod segment;
mod sqi;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::grid::{linear_combinations_of, CombinationGrid, DEFAULT_GRID_STEPS};
pub use self::segment::{estimate_component, nonlocal_median, segment, stitch, Component, SegmentMatrix, MIN_OS_CYCLES};
pub use self::sqi::{agreement, bsqi, select_best, BSQI_MIN_SECONDS, BSQI_WINDOW_MS};

use crate::error::{Error, Result};
use crate::io::{PeakList, Record};
use crate::preprocess::{preprocess_channels, FilterSpec};
use crate::rpeak::{detect_peaks, fuse_peaks, Mode, RpeakParams, VOTE_WINDOW_MS};
use crate::shrinkage::DenoiseConfig;

/// Fewest fused maternal beats the pipeline accepts.
pub const MIN_MATERNAL_BEATS: usize = 10;

/// `z_θ = Σ θ_j x_j` for every grid direction, on the channels of `record`.
pub fn linear_combinations(record: &Record, grid: &CombinationGrid) -> Result<Vec<Vec<f64>>> {
    linear_combinations_of(record.channels(), grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecomposeConfig {
    pub filter: FilterSpec,
    pub denoise: DenoiseConfig,
    /// Grid resolution, see [`CombinationGrid::default_for`].
    pub grid_steps: usize,
    pub maternal: RpeakParams,
    pub fetal: RpeakParams,
    /// How many of the per-direction maternal detections take part in the vote.
    pub fusion_keep: usize,
    /// Refinement passes after the first fetal estimate.
    pub iterations: usize,
    /// Neighbour count of the optional nonlocal median on fetal cycles.
    pub nonlocal_median: Option<usize>,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            filter: FilterSpec::default(),
            denoise: DenoiseConfig::default(),
            grid_steps: DEFAULT_GRID_STEPS,
            maternal: RpeakParams::for_mode(Mode::Maternal),
            fetal: RpeakParams::for_mode(Mode::Fetal),
            fusion_keep: 5,
            iterations: 1,
            nonlocal_median: None,
        }
    }
}

impl DecomposeConfig {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.denoise.validate()?;
        if self.grid_steps == 0 {
            return Err(Error::arg("grid_steps must be positive"));
        }
        if self.fusion_keep == 0 {
            return Err(Error::arg("fusion_keep must be positive"));
        }
        if let Some(k) = self.nonlocal_median {
            if k < 2 {
                return Err(Error::arg("nonlocal_median needs at least 2 neighbours"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqiRow {
    pub index: usize,
    pub theta: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionOutput {
    pub fs: u32,
    pub theta_star: Vec<f64>,
    pub theta_index: usize,
    /// The preprocessed signal mixed along `theta_star`.
    pub z: Vec<f64>,
    pub mecg: Vec<f64>,
    /// `z − mecg`, sample by sample.
    pub rfecg: Vec<f64>,
    pub fecg: Vec<f64>,
    pub fetal_peaks: PeakList,
    pub maternal_peaks: PeakList,
    pub sqi_table: Vec<SqiRow>,
}

/// For every fused peak, the nearest peak of `own` within the vote window,
/// or the fused time when there is none.
fn align_to(fused: &PeakList, own: &PeakList) -> PeakList {
    let own = own.times();
    let mut out: Vec<f64> = Vec::with_capacity(fused.len());
    let mut j = 0;
    for &t in fused.times() {
        while j + 1 < own.len() && own[j + 1] <= t {
            j += 1;
        }
        let best = [own.get(j), own.get(j + 1)]
            .into_iter()
            .flatten()
            .copied()
            .filter(|o| (o - t).abs() <= VOTE_WINDOW_MS)
            .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()));
        let candidate = best.unwrap_or(t);
        match out.last() {
            Some(&prev) if candidate <= prev => {
                if t > prev {
                    out.push(t);
                }
            }
            _ => out.push(candidate),
        }
    }
    PeakList::new(out).expect("times are increasing by construction")
}

fn subtract(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

struct Branch {
    maternal_peaks: PeakList,
    mecg: Vec<f64>,
    rfecg: Vec<f64>,
    score: f64,
}

/// Fetal peaks and fetal estimate on a rough fetal signal. When too few
/// fetal beats are found to estimate cycles, the rough signal is returned.
fn fetal_pass(rf: &[f64], fs: f64, config: &DecomposeConfig) -> Result<(PeakList, Option<Component>)> {
    let peaks = detect_peaks(rf, fs, &config.fetal).map_err(|e| Error::Stage {
        stage: "fetal R-peak detection",
        msg: e.to_string(),
    })?;
    match estimate_component(rf, &peaks, fs, &config.denoise) {
        Ok(c) => Ok((peaks, Some(c))),
        Err(Error::TooShort(msg)) => {
            log::warn!("fetal cycles could not be estimated ({msg}); keeping the rough fetal signal");
            Ok((peaks, None))
        }
        Err(e) => Err(e),
    }
}

/// Runs the full separation on a raw record.
pub fn decompose(record: &Record, config: &DecomposeConfig) -> Result<DecompositionOutput> {
    config.validate()?;
    let fs = record.fs() as f64;
    config.filter.validate_for(fs)?;
    let x = preprocess_channels(record.channels(), fs, &config.filter)?;
    let grid = CombinationGrid::default_for(x.len(), config.grid_steps)?;
    let zs = linear_combinations_of(&x, &grid)?;

    let lists: Vec<PeakList> = zs
        .par_iter()
        .map(|z| match detect_peaks(z, fs, &config.maternal) {
            Ok(p) => Ok(p),
            Err(Error::TooShort(msg)) => Err(Error::TooShort(msg)),
            Err(e) => {
                log::debug!("maternal detection failed on one direction: {e}");
                Ok(PeakList::empty())
            }
        })
        .collect::<Result<_>>()?;
    let fused = fuse_peaks(&lists, config.fusion_keep.min(lists.len()))?;
    if fused.len() < MIN_MATERNAL_BEATS {
        return Err(Error::Stage {
            stage: "maternal R-peak detection",
            msg: format!("{} fused beats, need {MIN_MATERNAL_BEATS}", fused.len()),
        });
    }

    let branches: Vec<Branch> = zs
        .par_iter()
        .zip(&lists)
        .map(|(z, own)| {
            let maternal_peaks = align_to(&fused, own);
            let m = estimate_component(z, &maternal_peaks, fs, &config.denoise)?;
            let rfecg = subtract(z, &m.signal);
            let score = bsqi(&rfecg, fs, &config.fetal)?;
            Ok(Branch {
                maternal_peaks,
                mecg: m.signal,
                rfecg,
                score,
            })
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = branches.iter().map(|b| b.score).collect();
    let best = select_best(&scores).expect("grid is never empty");
    let sqi_table = grid
        .thetas()
        .iter()
        .zip(&scores)
        .enumerate()
        .map(|(index, (theta, &score))| SqiRow {
            index,
            theta: theta.clone(),
            score,
        })
        .collect();

    let z = zs.into_iter().nth(best).expect("index from the grid");
    let Branch {
        maternal_peaks,
        mut mecg,
        mut rfecg,
        ..
    } = branches.into_iter().nth(best).expect("index from the grid");
    let (mut fetal_peaks, mut fetal) = fetal_pass(&rfecg, fs, config)?;
    for _ in 0..config.iterations {
        let Some(f) = &fetal else { break };
        let without_fetal = subtract(&z, &f.signal);
        mecg = estimate_component(&without_fetal, &maternal_peaks, fs, &config.denoise)?.signal;
        rfecg = subtract(&z, &mecg);
        (fetal_peaks, fetal) = fetal_pass(&rfecg, fs, config)?;
    }
    let fecg = match (&fetal, config.nonlocal_median) {
        (Some(f), Some(k)) if f.segments.n_cycles() > k => {
            let smoothed = nonlocal_median(&f.segments.with_data(f.denoised.clone())?, k)?;
            stitch(&smoothed, &smoothed.data)
        }
        (Some(f), Some(k)) => {
            log::warn!("only {} fetal cycles; skipping the {k}-neighbour median", f.segments.n_cycles());
            f.signal.clone()
        }
        (Some(f), None) => f.signal.clone(),
        (None, _) => rfecg.clone(),
    };

    Ok(DecompositionOutput {
        fs: record.fs(),
        theta_star: grid.thetas()[best].clone(),
        theta_index: best,
        z,
        mecg,
        rfecg,
        fecg,
        fetal_peaks,
        maternal_peaks: fused,
        sqi_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_prefers_own_peaks() {
        let fused = PeakList::new(vec![1000.0, 2000.0, 3000.0]).unwrap();
        let own = PeakList::new(vec![1010.0, 2100.0, 2990.0, 2995.0]).unwrap();
        assert_eq!(align_to(&fused, &own).times(), &[1010.0, 2000.0, 2995.0]);
        assert_eq!(align_to(&fused, &PeakList::empty()), fused);
    }

    #[test]
    fn alignment_stays_increasing() {
        let fused = PeakList::new(vec![1000.0, 1040.0]).unwrap();
        let own = PeakList::new(vec![1030.0]).unwrap();
        assert_eq!(align_to(&fused, &own).times(), &[1030.0, 1040.0]);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let c = DecomposeConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<DecomposeConfig>(&s).unwrap(), c);
        assert!(serde_json::from_str::<DecomposeConfig>(r#"{"grid": 3}"#).is_err());
        let partial: DecomposeConfig = serde_json::from_str(r#"{"iterations": 2}"#).unwrap();
        assert_eq!(partial.iterations, 2);
        assert_eq!(partial.grid_steps, 14);
    }
}
