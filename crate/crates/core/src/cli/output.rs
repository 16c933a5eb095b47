//! Output formats, unit scaling and all-or-nothing file commits.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::analytics::WaitingTimeAnalysis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Unit used when displaying times; inputs and data files are in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    S,
    Min,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::S => 1.0,
            TimeUnit::Min => 60.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TimeUnit::S => "seconds",
            TimeUnit::Min => "minutes",
        }
    }

    /// A time in seconds expressed in this unit.
    pub fn time(self, seconds: f64) -> f64 {
        seconds / self.seconds()
    }

    /// Rescales every time-valued field (powers included).
    pub fn analysis(self, a: &WaitingTimeAnalysis) -> WaitingTimeAnalysis {
        let u = self.seconds();
        WaitingTimeAnalysis {
            mean_wait: a.mean_wait / u,
            second_moment: a.second_moment / (u * u),
            std: a.std / u,
            mean_duration: a.mean_duration / u,
            delta: a.delta.map(|[d1, d2, d3]| [d1 / u, d2 / (u * u), d3 / (u * u * u)]),
            paradox: a.paradox,
            method: a.method,
        }
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&(i + 1).to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn comment_lines(comment: &str) -> String {
    let mut s = String::new();
    for line in comment.lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn csv_rows(rows: &[Vec<&str>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row).map_err(|e| Error::Numeric(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

/// A record as pretty JSON, or as a two-line CSV with dotted column names.
pub fn render_record<T: Serialize>(record: &T, format: Format, comment: &str) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(record).map_err(|e| Error::Numeric(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let value = serde_json::to_value(record).map_err(|e| Error::Numeric(e.to_string()))?;
            let mut cells = Vec::new();
            flatten("", &value, &mut cells);
            let mut s = comment_lines(comment);
            s.push_str(&csv_rows(&[cells.iter().map(|c| c.0.as_str()).collect(), cells.iter().map(|c| c.1.as_str()).collect()])?);
            s
        }
    })
}

/// Rows as a JSON array or a CSV table.
pub fn render_table<T: Serialize>(rows: &[T], format: Format, comment: &str) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(|e| Error::Numeric(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut lines: Vec<Vec<String>> = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let value = serde_json::to_value(row).map_err(|e| Error::Numeric(e.to_string()))?;
                let mut cells = Vec::new();
                flatten("", &value, &mut cells);
                if i == 0 {
                    lines.push(cells.iter().map(|c| c.0.clone()).collect());
                }
                lines.push(cells.into_iter().map(|c| c.1).collect());
            }
            let borrowed: Vec<Vec<&str>> = lines.iter().map(|l| l.iter().map(String::as_str).collect()).collect();
            Ok(comment_lines(comment) + &csv_rows(&borrowed)?)
        }
    }
}

/// Files to write plus text for standard output.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<(PathBuf, String)>,
    pub stdout: String,
}

impl Outcome {
    pub fn file(mut self, path: PathBuf, content: String) -> Self {
        self.files.push((path, content));
        self
    }

    pub fn print(mut self, text: String) -> Self {
        self.stdout.push_str(&text);
        self
    }

    /// Writes every file to a temporary sibling first and renames them into
    /// place only once all writes succeeded.
    pub fn commit(&self) -> Result<()> {
        let mut staged = Vec::new();
        for (path, content) in &self.files {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
            tmp.write_all(content.as_bytes()).map_err(|e| Error::io(path, e))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: Option<[f64; 2]>,
        c: bool,
    }

    #[test]
    fn csv_flattening() {
        let s = render_record(&Row { a: 1.5, b: Some([1.0, 2.0]), c: true }, Format::Csv, "unit note").unwrap();
        assert_eq!(s, "# unit note\na,b.1,b.2,c\n1.5,1.0,2.0,true\n");
        let s = render_table(&[Row { a: 1.0, b: None, c: false }], Format::Csv, "").unwrap();
        assert_eq!(s, "a,b,c\n1.0,,false\n");
        let s = render_table(&[("x,y", 1)], Format::Csv, "").unwrap();
        assert_eq!(s, "1,2\n\"x,y\",1\n");
    }

    #[test]
    fn minutes_scale_powers() {
        let a = WaitingTimeAnalysis {
            mean_wait: 120.0,
            second_moment: 3600.0,
            std: 60.0,
            mean_duration: 60.0,
            delta: Some([60.0, 3600.0, 216_000.0]),
            paradox: true,
            method: crate::analytics::Method::ClosedForm,
        };
        let m = TimeUnit::Min.analysis(&a);
        assert_eq!(m.mean_wait, 2.0);
        assert_eq!(m.second_moment, 1.0);
        assert_eq!(m.delta, Some([1.0, 1.0, 1.0]));
    }

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = Outcome::default()
            .file(dir.path().join("x/a.txt"), "1".into())
            .file(dir.path().join("b.txt"), "2".into());
        out.commit().unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("x/a.txt")).unwrap(), "1");
        assert_eq!(fs::read_to_string(dir.path().join("b.txt")).unwrap(), "2");
    }
}
