//! CSV emission and parsing.
//!
//! Files are comma-separated with `#`-prefixed header comments carrying the
//! resolved configuration; reals are written with 17 significant digits so
//! reruns are byte-identical and round-trips lossless.

use std::io::Write;
use std::path::Path;

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    out: Vec<u8>,
}

impl CsvWriter {
    pub fn new(comment_lines: &[String], columns: &[&str]) -> Self {
        let mut out = Vec::new();
        for line in comment_lines {
            writeln!(out, "# {line}").unwrap();
        }
        writeln!(out, "{}", columns.join(",")).unwrap();
        Self { out }
    }

    pub fn row(&mut self, fields: &[String]) {
        writeln!(self.out, "{}", fields.join(",")).unwrap();
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, &self.out)
    }
}

/// Parsed CSV: header comments, column names, and rows of raw fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut comments = Vec::new();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                comments.push(rest.trim().to_string());
            } else if columns.is_empty() {
                columns = line.split(',').map(|s| s.trim().to_string()).collect();
            } else if !line.trim().is_empty() {
                let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
                if fields.len() != columns.len() {
                    return Err(format!(
                        "row has {} fields, expected {}",
                        fields.len(),
                        columns.len()
                    ));
                }
                rows.push(fields);
            }
        }
        if columns.is_empty() {
            return Err("no header row".into());
        }
        Ok(Self {
            comments,
            columns,
            rows,
        })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn real(&self, row: usize, col: &str) -> Option<f64> {
        let idx = self.column_index(col)?;
        self.rows.get(row)?.get(idx)?.parse().ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_reals() {
        let mut w = CsvWriter::new(&["seed = 7".into()], &["n", "value"]);
        let x = 0.1234567890123456789_f64;
        w.row(&["1".into(), format_real(x)]);
        let text = String::from_utf8(w.out.clone()).unwrap();
        let table = CsvTable::parse(&text).unwrap();
        assert_eq!(table.comments, vec!["seed = 7".to_string()]);
        assert_eq!(table.real(0, "value").unwrap(), x);
    }
}
