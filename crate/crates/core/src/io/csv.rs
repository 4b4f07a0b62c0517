//! Plain-text record format.
//!
//! ```text
//! fs=1000
//! ch1,ch2
//! 0.0125,-0.25
//! ...
//! ```
//!
//! Samples are written with the shortest representation that parses back to
//! the identical `f64`, so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::record::Record;

pub fn parse_csv(path: &Path, text: &str) -> Result<Record> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fs_text = header
        .trim()
        .strip_prefix("fs=")
        .ok_or_else(|| perr(ln, format!("expected `fs=<int>`, found `{header}`")))?;
    let fs: u32 = fs_text
        .trim()
        .parse()
        .map_err(|_| perr(ln, format!("invalid sampling rate `{fs_text}`")))?;
    if fs == 0 {
        return Err(perr(ln, "sampling rate must be positive".into()));
    }

    let (ln, names_line) = lines
        .next()
        .ok_or_else(|| perr(2, "missing channel-name line".into()))?;
    let names: Vec<String> = names_line.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(String::is_empty) {
        return Err(perr(ln, "empty channel name".into()));
    }

    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(perr(
                ln,
                format!("ragged row: {} values, expected {}", fields.len(), names.len()),
            ));
        }
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| perr(ln, format!("invalid number `{}`", f.trim())))?;
            if !v.is_finite() {
                return Err(perr(ln, format!("non-finite sample `{}`", f.trim())));
            }
            channels[j].push(v);
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Record::new(name, fs, names, channels)
}

pub fn format_csv(record: &Record) -> String {
    let mut out = String::with_capacity(record.n_samples() * record.n_channels() * 12);
    let _ = writeln!(out, "fs={}", record.fs());
    let _ = writeln!(out, "{}", record.channel_names().join(","));
    for i in 0..record.n_samples() {
        for (j, c) in record.channels().iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", c[i]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_file() {
        let text = "fs=1000\nA,B\n1,2\n3,4\n5,6\n7,8\n";
        let r = parse_csv(Path::new("x.csv"), text).unwrap();
        assert_eq!(r.n_channels(), 2);
        assert_eq!(r.n_samples(), 4);
        assert_eq!(r.fs(), 1000);
        assert_eq!(r.channel(1), &[2.0, 4.0, 6.0, 8.0]);
        assert_eq!(r.name(), "x");
    }

    #[test]
    fn ragged_row_reports_line() {
        let text = "fs=1000\nA,B\n1,2\n3,4,5\n";
        match parse_csv(Path::new("x.csv"), text) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("ragged"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(
            parse_csv(Path::new("x.csv"), "rate=1000\nA\n1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv(Path::new("x.csv"), "fs=abc\nA\n1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn nan_rejected() {
        assert!(matches!(
            parse_csv(Path::new("x.csv"), "fs=10\nA\n1\nNaN\n"),
            Err(Error::Parse { line: 4, .. })
        ));
    }
}
