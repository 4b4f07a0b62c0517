//! Records, beat annotations, file formats and resampling.

mod csv;
mod record;
mod resample;
mod wfdb;

use std::path::{Path, PathBuf};

pub use self::csv::{format_csv, parse_csv};
pub use self::record::{AnnotationKind, Annotations, PeakList, Record};

pub use self::resample::{resample, resample_signal};
pub use self::wfdb::{load_mit_annotations, load_wfdb};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    WfdbSubset,
}

impl RecordFormat {
    /// Guesses the format from the file extension (`.hea` means WFDB).
    pub fn from_path(path: &Path) -> RecordFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("hea") => RecordFormat::WfdbSubset,
            _ => RecordFormat::Csv,
        }
    }
}

/// `dir/a01.csv` → `dir/a01.ann.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.ann.json"))
}

pub fn load_record(path: &Path, format: RecordFormat) -> Result<Record> {
    let mut record = match format {
        RecordFormat::Csv => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(path, &text)?
        }
        RecordFormat::WfdbSubset => {
            let mut record = load_wfdb(path)?;
            let fqrs = path.with_extension("fqrs");
            if fqrs.exists() {
                let peaks = load_mit_annotations(&fqrs, record.fs())?;
                record.set_annotation(AnnotationKind::FetalR, peaks)?;
            }
            record
        }
    };
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        for (kind, peaks) in load_annotations(&sidecar)? {
            record.set_annotation(kind, peaks).map_err(|e| Error::Parse {
                path: sidecar.clone(),
                line: 1,
                msg: e.to_string(),
            })?;
        }
    }
    Ok(record)
}

/// Writes `<dir>/<name>.csv` plus the annotation sidecar when the record
/// carries annotations. Returns the CSV path.
pub fn save_record(record: &Record, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", record.name()));
    std::fs::write(&path, format_csv(record)).map_err(|e| Error::io(&path, e))?;
    if !record.annotations().is_empty() {
        save_annotations(record.annotations(), &sidecar_path(&path))?;
    }
    Ok(path)
}

pub fn load_annotations(path: &Path) -> Result<Annotations> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}

pub fn save_annotations(ann: &Annotations, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(ann).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
