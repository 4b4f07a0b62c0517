//! Minimal WFDB reader: single-segment records whose signals are all stored
//! in one interleaved format-16 `.dat` file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::record::{PeakList, Record};

const DEFAULT_GAIN: f64 = 200.0;

#[derive(Debug, Clone)]
struct SignalSpec {
    file: String,
    gain: f64,
    baseline: f64,
    description: String,
}

#[derive(Debug, Clone)]
struct Header {
    name: String,
    fs: u32,
    n_samples: Option<usize>,
    signals: Vec<SignalSpec>,
}

fn unsupported(path: &Path, msg: impl Into<String>) -> Error {
    Error::Unsupported {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn parse_header(path: &Path, text: &str) -> Result<Header> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, rec_line) = lines.next().ok_or_else(|| perr(1, "empty header".into()))?;
    let fields: Vec<&str> = rec_line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(perr(ln, "record line needs a name and a signal count".into()));
    }
    if fields[0].contains('/') {
        return Err(unsupported(path, "multi-segment records are not supported"));
    }
    let nsig: usize = fields[1]
        .parse()
        .map_err(|_| perr(ln, format!("invalid signal count `{}`", fields[1])))?;
    let fs = match fields.get(2) {
        None => 250,
        Some(f) => {
            let base = f.split(['/', '(']).next().unwrap_or(f);
            let v: f64 = base
                .parse()
                .map_err(|_| perr(ln, format!("invalid sampling frequency `{f}`")))?;
            if v <= 0.0 || v.fract() != 0.0 {
                return Err(unsupported(path, format!("non-integer sampling frequency {v}")));
            }
            v as u32
        }
    };
    let n_samples = match fields.get(3) {
        None => None,
        Some(f) => Some(
            f.parse::<usize>()
                .map_err(|_| perr(ln, format!("invalid sample count `{f}`")))?,
        ),
    };

    let mut signals = Vec::with_capacity(nsig);
    for _ in 0..nsig {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| perr(ln, format!("expected {nsig} signal lines")))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 2 {
            return Err(perr(ln, "signal line needs a file name and format".into()));
        }
        if f[1] != "16" {
            return Err(unsupported(
                path,
                format!("signal format `{}` (only plain format 16 is supported)", f[1]),
            ));
        }
        let (gain, baseline_text, _units) = match f.get(2) {
            None => (DEFAULT_GAIN, None, None),
            Some(g) => {
                let (num_part, units) = match g.split_once('/') {
                    Some((a, u)) => (a, Some(u)),
                    None => (*g, None),
                };
                let (gain_text, base) = match num_part.split_once('(') {
                    Some((a, b)) => (a, Some(b.trim_end_matches(')'))),
                    None => (num_part, None),
                };
                let gain: f64 = gain_text
                    .parse()
                    .map_err(|_| perr(ln, format!("invalid gain `{gain_text}`")))?;
                (if gain == 0.0 { DEFAULT_GAIN } else { gain }, base, units)
            }
        };
        let adc_zero: f64 = match f.get(4) {
            Some(z) => z
                .parse()
                .map_err(|_| perr(ln, format!("invalid ADC zero `{z}`")))?,
            None => 0.0,
        };
        let baseline = match baseline_text {
            Some(b) => b
                .parse()
                .map_err(|_| perr(ln, format!("invalid baseline `{b}`")))?,
            None => adc_zero,
        };
        let description = if f.len() > 8 { f[8..].join(" ") } else { String::new() };
        signals.push(SignalSpec {
            file: f[0].to_string(),
            gain,
            baseline,
            description,
        });
    }
    if signals.iter().any(|s| s.file != signals[0].file) {
        return Err(unsupported(path, "signals spread over several .dat files"));
    }
    Ok(Header {
        name: fields[0].to_string(),
        fs,
        n_samples,
        signals,
    })
}

/// Loads `<stem>.hea` and the `.dat` file it references.
pub fn load_wfdb(hea_path: &Path) -> Result<Record> {
    let text = std::fs::read_to_string(hea_path).map_err(|e| Error::io(hea_path, e))?;
    let header = parse_header(hea_path, &text)?;
    if header.signals.is_empty() {
        return Err(Error::Parse {
            path: hea_path.to_path_buf(),
            line: 1,
            msg: "record has no signals".into(),
        });
    }
    let dir = hea_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let dat_path: PathBuf = dir.join(&header.signals[0].file);
    let bytes = std::fs::read(&dat_path).map_err(|e| Error::io(&dat_path, e))?;
    let nsig = header.signals.len();
    let frame_bytes = 2 * nsig;
    let frames_in_file = bytes.len() / frame_bytes;
    let n = header.n_samples.unwrap_or(frames_in_file);
    if frames_in_file < n {
        return Err(Error::Parse {
            path: dat_path,
            line: 0,
            msg: format!("file holds {frames_in_file} frames, header declares {n}"),
        });
    }
    let mut channels = vec![Vec::with_capacity(n); nsig];
    for i in 0..n {
        for (j, spec) in header.signals.iter().enumerate() {
            let off = i * frame_bytes + 2 * j;
            let d = i16::from_le_bytes([bytes[off], bytes[off + 1]]);
            channels[j].push((d as f64 - spec.baseline) / spec.gain);
        }
    }
    let names = header
        .signals
        .iter()
        .enumerate()
        .map(|(j, s)| {
            if s.description.is_empty() {
                format!("ch{}", j + 1)
            } else {
                s.description.clone()
            }
        })
        .collect();
    Record::new(header.name, header.fs, names, channels)
}

/// Annotation codes at or above this value are control words, not labels.
const MIT_CONTROL: u16 = 50;
const MIT_SKIP: u16 = 59;
const MIT_AUX: u16 = 63;

/// Times (ms) of every labelled annotation in an MIT-format binary
/// annotation file such as `a01.fqrs`, for a record sampled at `fs`.
pub fn load_mit_annotations(path: &Path, fs: u32) -> Result<PeakList> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let perr = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    let word = |at: usize| -> Option<u16> { Some(u16::from_le_bytes([*bytes.get(at)?, *bytes.get(at + 1)?])) };
    let mut at = 0;
    let mut sample: i64 = 0;
    let mut times = Vec::new();
    while let Some(w) = word(at) {
        at += 2;
        let (code, arg) = (w >> 10, w & 0x3ff);
        match code {
            0 if arg == 0 => break,
            MIT_SKIP => {
                // 32-bit interval stored high word first
                let (hi, lo) = word(at)
                    .zip(word(at + 2))
                    .ok_or_else(|| perr("truncated skip word".into()))?;
                sample += (((hi as u32) << 16) | lo as u32) as i32 as i64;
                at += 4;
            }
            MIT_AUX => at += (arg as usize).div_ceil(2) * 2,
            c if c >= MIT_CONTROL => {}
            _ => {
                sample += arg as i64;
                times.push(sample as f64 * 1000.0 / fs as f64);
            }
        }
    }
    times.dedup();
    PeakList::new(times).map_err(|e| perr(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mit_annotations() {
        // N at 100, skip 70000, N at +5, aux of 3 bytes, end
        let mut b: Vec<u8> = Vec::new();
        let mut put = |w: u16| b.extend_from_slice(&w.to_le_bytes());
        put((1 << 10) | 100);
        put(MIT_SKIP << 10);
        put(1);
        put((70000 - 65536) as u16);
        put((1 << 10) | 5);
        put((MIT_AUX << 10) | 3);
        put(0x4142);
        put(0x0043);
        put(0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a01.fqrs");
        std::fs::write(&p, &b).unwrap();
        let peaks = load_mit_annotations(&p, 1000).unwrap();
        assert_eq!(peaks.times(), &[100.0, 70105.0]);
        let half = load_mit_annotations(&p, 500).unwrap();
        assert_eq!(half.times(), &[200.0, 140210.0]);
    }

    #[test]
    fn header_fields() {
        let h = parse_header(
            Path::new("a01.hea"),
            "a01 2 1000 3\na01.dat 16 100(5)/mV 16 0 0 0 0 Abd 1\na01.dat 16 0 16 7 0 0 0 Abd 2\n",
        )
        .unwrap();
        assert_eq!(h.fs, 1000);
        assert_eq!(h.n_samples, Some(3));
        assert_eq!(h.signals[0].gain, 100.0);
        assert_eq!(h.signals[0].baseline, 5.0);
        assert_eq!(h.signals[1].gain, DEFAULT_GAIN);
        assert_eq!(h.signals[1].baseline, 7.0);
        assert_eq!(h.signals[1].description, "Abd 2");
    }

    #[test]
    fn rejects_other_formats() {
        let e = parse_header(Path::new("x.hea"), "x 1 360\nx.dat 212 200 11 1024\n").unwrap_err();
        assert!(matches!(e, Error::Unsupported { .. }));
        let e = parse_header(Path::new("x.hea"), "x/2 1 360\n").unwrap_err();
        assert!(matches!(e, Error::Unsupported { .. }));
    }
}
