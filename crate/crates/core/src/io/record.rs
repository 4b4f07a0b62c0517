use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered beat timestamps in milliseconds from the start of a record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PeakList(Vec<f64>);

impl PeakList {
    /// Builds a list, rejecting negative, non-finite or non-increasing times.
    pub fn new(times_ms: Vec<f64>) -> Result<Self> {
        for (i, t) in times_ms.iter().enumerate() {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::arg(format!("peak {i} has invalid time {t}")));
            }
            if i > 0 && *t <= times_ms[i - 1] {
                return Err(Error::arg(format!(
                    "peak times must be strictly increasing (index {i}: {} then {t})",
                    times_ms[i - 1]
                )));
            }
        }
        Ok(PeakList(times_ms))
    }

    pub fn empty() -> Self {
        PeakList(Vec::new())
    }

    /// Converts sample indices into a list. Duplicate indices are dropped.
    pub fn from_samples(indices: &[usize], fs: f64) -> Self {
        let mut v: Vec<usize> = indices.to_vec();
        v.sort_unstable();
        v.dedup();
        PeakList(v.into_iter().map(|i| i as f64 * 1000.0 / fs).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Nearest sample index for every timestamp.
    pub fn to_samples(&self, fs: f64) -> Vec<usize> {
        self.0
            .iter()
            .map(|t| (t * fs / 1000.0).round() as usize)
            .collect()
    }

    /// Successive differences in milliseconds.
    pub fn rr_intervals(&self) -> Vec<f64> {
        self.0.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Keeps only timestamps inside `[start_ms, end_ms)`, shifted so that
    /// `start_ms` becomes zero.
    pub fn window(&self, start_ms: f64, end_ms: f64) -> PeakList {
        PeakList(
            self.0
                .iter()
                .filter(|&&t| t >= start_ms && t < end_ms)
                .map(|t| t - start_ms)
                .collect(),
        )
    }

    /// Multiplies every timestamp by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> PeakList {
        PeakList(self.0.iter().map(|t| t * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for PeakList {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PeakList::new(v)
    }
}

impl From<PeakList> for Vec<f64> {
    fn from(p: PeakList) -> Vec<f64> {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    MaternalR,
    FetalR,
    FetalP,
    FetalT,
}

impl AnnotationKind {
    pub const ALL: [AnnotationKind; 4] = [
        AnnotationKind::MaternalR,
        AnnotationKind::FetalR,
        AnnotationKind::FetalP,
        AnnotationKind::FetalT,
    ];
}

impl fmt::Display for AnnotationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AnnotationKind::MaternalR => "maternal_r",
            AnnotationKind::FetalR => "fetal_r",
            AnnotationKind::FetalP => "fetal_p",
            AnnotationKind::FetalT => "fetal_t",
        };
        f.write_str(s)
    }
}

pub type Annotations = BTreeMap<AnnotationKind, PeakList>;

/// A multi-channel, uniformly sampled recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    name: String,
    fs: u32,
    channel_names: Vec<String>,
    channels: Vec<Vec<f64>>,
    annotations: Annotations,
}

impl Record {
    pub fn new(
        name: impl Into<String>,
        fs: u32,
        channel_names: Vec<String>,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if fs == 0 {
            return Err(Error::arg("sampling rate must be positive"));
        }
        if channels.is_empty() {
            return Err(Error::arg("record has no channels"));
        }
        if channel_names.len() != channels.len() {
            return Err(Error::arg(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                channels.len()
            )));
        }
        let n = channels[0].len();
        for (j, c) in channels.iter().enumerate() {
            if c.len() != n {
                return Err(Error::arg(format!(
                    "channel {j} has {} samples, expected {n}",
                    c.len()
                )));
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::arg(format!(
                    "channel {j} has a non-finite sample at index {i}"
                )));
            }
        }
        Ok(Record {
            name: name.into(),
            fs,
            channel_names,
            channels,
            annotations: Annotations::new(),
        })
    }

    /// Convenience constructor naming channels `ch1..chJ`.
    pub fn from_channels(name: impl Into<String>, fs: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        let names = (1..=channels.len()).map(|j| format!("ch{j}")).collect();
        Record::new(name, fs, names, channels)
    }

    pub fn with_annotation(mut self, kind: AnnotationKind, peaks: PeakList) -> Result<Self> {
        self.set_annotation(kind, peaks)?;
        Ok(self)
    }

    pub fn set_annotation(&mut self, kind: AnnotationKind, peaks: PeakList) -> Result<()> {
        let dur = self.duration_ms();
        if let Some(t) = peaks.times().last() {
            if *t > dur {
                return Err(Error::arg(format!(
                    "{kind} annotation at {t} ms lies beyond the record end ({dur} ms)"
                )));
            }
        }
        self.annotations.insert(kind, peaks);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, j: usize) -> &[f64] {
        &self.channels[j]
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn duration_ms(&self) -> f64 {
        self.n_samples() as f64 * 1000.0 / self.fs as f64
    }

    pub fn annotations(&self) -> &Annotations {
        &self.annotations
    }

    pub fn annotation(&self, kind: AnnotationKind) -> Option<&PeakList> {
        self.annotations.get(&kind)
    }

    /// Keeps the listed channels (0-based), in the given order.
    pub fn select_channels(&self, idx: &[usize]) -> Result<Record> {
        let mut names = Vec::with_capacity(idx.len());
        let mut chans = Vec::with_capacity(idx.len());
        for &j in idx {
            if j >= self.n_channels() {
                return Err(Error::arg(format!(
                    "channel {} requested but record has {}",
                    j + 1,
                    self.n_channels()
                )));
            }
            names.push(self.channel_names[j].clone());
            chans.push(self.channels[j].clone());
        }
        let mut r = Record::new(self.name.clone(), self.fs, names, chans)?;
        r.annotations = self.annotations.clone();
        Ok(r)
    }

    /// Same metadata and annotations with replaced sample data.
    pub fn with_channels(&self, fs: u32, channels: Vec<Vec<f64>>) -> Result<Record> {
        let mut r = Record::new(self.name.clone(), fs, self.channel_names.clone(), channels)?;
        r.annotations = self.annotations.clone();
        Ok(r)
    }

    /// Multiplies every sample by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Record {
        let mut r = self.clone();
        for c in &mut r.channels {
            for v in c.iter_mut() {
                *v *= alpha;
            }
        }
        r
    }

    pub fn rename(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_list_validation() {
        assert!(PeakList::new(vec![1.0, 2.0, 3.0]).is_ok());
        assert!(PeakList::new(vec![1.0, 1.0]).is_err());
        assert!(PeakList::new(vec![-1.0]).is_err());
        assert!(PeakList::new(vec![f64::NAN]).is_err());
        let p: std::result::Result<PeakList, _> = serde_json::from_str("[3, 2]");
        assert!(p.is_err());
    }

    #[test]
    fn ragged_channels_rejected() {
        assert!(Record::from_channels("x", 1000, vec![vec![0.0; 3], vec![0.0; 4]]).is_err());
        assert!(Record::from_channels("x", 0, vec![vec![0.0; 3]]).is_err());
        assert!(Record::from_channels("x", 1000, vec![vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn annotation_beyond_end_rejected() {
        let r = Record::from_channels("x", 1000, vec![vec![0.0; 1000]]).unwrap();
        let late = PeakList::new(vec![1500.0]).unwrap();
        assert!(r.with_annotation(AnnotationKind::FetalR, late).is_err());
    }

    #[test]
    fn annotation_kind_names() {
        let s = serde_json::to_string(&AnnotationKind::MaternalR).unwrap();
        assert_eq!(s, "\"maternal_r\"");
        assert_eq!(AnnotationKind::FetalT.to_string(), "fetal_t");
    }
}
