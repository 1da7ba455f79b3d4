//! CSV emission.
//!
//! Every file starts with `#` comment lines (the command, the seed and a
//! JSON echo of the manifest), then one column-name row, then data rows.
//! Floats are written with 17 significant digits so they round-trip.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::manifest::ExperimentManifest;

/// Formats a double with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Csv {
    buf: String,
    width: Option<usize>,
}

impl Csv {
    pub fn new(command: &str, manifest: &ExperimentManifest) -> Csv {
        let mut csv = Csv {
            buf: String::new(),
            width: None,
        };
        csv.note(&format!("callmoney {command}"));
        csv.note(&format!("seed={}", manifest.seed));
        csv.note(&format!("manifest={}", manifest.to_json()));
        csv
    }

    /// Adds a comment line; only allowed before the column row.
    pub fn note(&mut self, line: &str) -> &mut Self {
        assert!(self.width.is_none(), "comment after column row");
        for l in line.lines() {
            let _ = writeln!(self.buf, "# {l}");
        }
        self
    }

    pub fn columns(&mut self, names: &[&str]) -> &mut Self {
        assert!(self.width.is_none(), "column row written twice");
        self.buf.push_str(&names.join(","));
        self.buf.push('\n');
        self.width = Some(names.len());
        self
    }

    pub fn row(&mut self, values: &[f64]) -> &mut Self {
        let cells: Vec<String> = values.iter().map(|&x| num(x)).collect();
        self.cells(&cells)
    }

    pub fn cells<S: AsRef<str>>(&mut self, cells: &[S]) -> &mut Self {
        assert_eq!(Some(cells.len()), self.width, "row width");
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(c.as_ref());
        }
        self.buf.push('\n');
        self
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    /// Writes the file `dir/file_name`, creating `dir` if needed.
    pub fn write(&self, dir: &Path, file_name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(file_name);
        fs::write(&path, &self.buf).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::parse_config;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.07875, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn layout() {
        let m =
            parse_config(r#"{"nu":0.09,"sigma":0.15,"horizon":1,"steps":10,"seed":3}"#).unwrap();
        let mut c = Csv::new("simulate", &m);
        c.note("extra").columns(&["a", "b"]).row(&[1.0, 2.0]);
        let text = c.as_str();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# callmoney simulate");
        assert_eq!(lines[1], "# seed=3");
        assert!(lines[2].starts_with("# manifest={"));
        assert_eq!(lines[3], "# extra");
        assert_eq!(lines[4], "a,b");
        assert_eq!(lines[5], "1.0000000000000000e0,2.0000000000000000e0");
        let echo = lines[2].trim_start_matches("# manifest=");
        assert_eq!(parse_config(echo).unwrap(), m);
    }

    #[test]
    #[should_panic]
    fn rejects_ragged_rows() {
        let m = parse_config(r#"{"nu":0.09,"sigma":0.15,"horizon":1,"steps":10}"#).unwrap();
        Csv::new("x", &m).columns(&["a"]).row(&[1.0, 2.0]);
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let m = parse_config(r#"{"nu":0.09,"sigma":0.15,"horizon":1,"steps":10}"#).unwrap();
        let e = Csv::new("x", &m)
            .write(&blocker.join("sub"), "a.csv")
            .unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}
