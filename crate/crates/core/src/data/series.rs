use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Where a series came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SeriesMeta {
    Generator {
        name: String,
        params: BTreeMap<String, f64>,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
    Inline,
}

/// Aligned input `u` and output `y` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IoSeries<T> {
    pub u: Vec<T>,
    pub y: Vec<T>,
    pub meta: SeriesMeta,
}

impl<T: Scalar> IoSeries<T> {
    pub fn new(u: Vec<T>, y: Vec<T>, meta: SeriesMeta) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::Input(format!(
                "input and output lengths differ ({} vs {})",
                u.len(),
                y.len()
            )));
        }
        if let Some(i) = u.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite sample at index {}",
                i % u.len().max(1)
            )));
        }
        Ok(Self { u, y, meta })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn cast<U: Scalar>(&self) -> IoSeries<U> {
        IoSeries {
            u: self.u.iter().map(|v| U::of(v.as_f64())).collect(),
            y: self.y.iter().map(|v| U::of(v.as_f64())).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// Parses `u,y` CSV text. `path` is only used in error messages.
pub fn parse_csv<T: Scalar>(text: &str, path: &Path) -> Result<IoSeries<T>> {
    let load_err = |line: usize, message: String| Error::Load {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l.trim().replace(' ', ""))
        .unwrap_or_default();
    if header != "u,y" {
        return Err(load_err(1, format!("expected header \"u,y\", found {header:?}")));
    }

    let (mut u, mut y) = (Vec::new(), Vec::new());
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(load_err(line_no, format!("expected two fields, found {line:?}")));
        };
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| load_err(line_no, format!("cannot parse {s:?} as a number")))?;
            if !v.is_finite() {
                return Err(load_err(line_no, format!("non-finite value {s:?}")));
            }
            Ok(v)
        };
        u.push(T::of(parse(a)?));
        y.push(T::of(parse(b)?));
    }
    if y.is_empty() {
        return Err(load_err(2, "no data rows".into()));
    }
    Ok(IoSeries {
        u,
        y,
        meta: SeriesMeta::File {
            path: path.to_path_buf(),
        },
    })
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<IoSeries<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

pub fn write_csv<T: Scalar>(series: &IoSeries<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("u,y\n");
    for (u, y) in series.u.iter().zip(&series.y) {
        let _ = writeln!(out, "{},{}", u.as_f64(), y.as_f64());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<IoSeries<f64>> {
        parse_csv(text, Path::new("mem.csv"))
    }

    #[test]
    fn parses_simple_file() {
        let s = parse("u,y\n0.0,1.0\n1.0,2.0").unwrap();
        assert_eq!(s.u, vec![0.0, 1.0]);
        assert_eq!(s.y, vec![1.0, 2.0]);
        assert_eq!(s.meta, SeriesMeta::File { path: "mem.csv".into() });
    }

    #[test]
    fn empty_data_section_is_an_error() {
        assert!(matches!(parse("u,y\n"), Err(Error::Load { .. })));
        assert!(matches!(parse(""), Err(Error::Load { line: 1, .. })));
    }

    #[test]
    fn nan_reports_line() {
        match parse("u,y\n0.0,1.0\n1.0,nan") {
            Err(Error::Load { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        match parse("u,y\n0.0,1.0\n1.0\n") {
            Err(Error::Load { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("u,y\n0,x\n"), Err(Error::Load { line: 2, .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        let r: Result<IoSeries<f64>> = load_csv("/nonexistent/definitely/missing.csv");
        assert!(matches!(r, Err(Error::Io { .. })));
    }

    #[test]
    fn write_then_load_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = IoSeries::new(vec![0.1, -1.0 / 3.0], vec![1e-17, 2.5], SeriesMeta::Inline).unwrap();
        write_csv(&s, &p).unwrap();
        let back: IoSeries<f64> = load_csv(&p).unwrap();
        assert_eq!(back.u, s.u);
        assert_eq!(back.y, s.y);
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(IoSeries::new(vec![0.0], vec![0.0, 1.0], SeriesMeta::Inline).is_err());
    }
}
