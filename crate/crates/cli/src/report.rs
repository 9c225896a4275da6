//! Tabular reports: CSV files plus aligned text on standard output.

use std::path::Path;

use gpcal_core::{fmt_f64, Error, EvalReport, Result};

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Io {
            path: path.to_owned(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })
    }

    /// Column-aligned text; long floats are shortened for reading.
    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = std::iter::once(self.headers.clone())
            .chain(
                self.rows
                    .iter()
                    .map(|r| r.iter().map(|c| short(c)).collect()),
            )
            .collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for r in &cells {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// Writes `dir/name` and prints the table under a title.
    pub fn emit(&self, dir: &Path, name: &str, title: &str) -> Result<()> {
        self.write_csv(&dir.join(name))?;
        println!("{title}");
        print!("{}", self.render());
        println!();
        Ok(())
    }
}

fn short(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(v) if cell.contains('e') && v.is_finite() => {
            if v != 0.0 && (v.abs() >= 1e6 || v.abs() < 1e-3) {
                format!("{v:.4e}")
            } else {
                format!("{v:.5}")
            }
        }
        _ => cell.to_owned(),
    }
}

pub fn num(v: f64) -> String {
    fmt_f64(v)
}

pub const REPORT_COLUMNS: [&str; 5] = ["n", "mae", "rmse", "r2", "coverage"];

pub fn report_cells(r: &EvalReport) -> Vec<String> {
    vec![
        r.n.to_string(),
        num(r.mae),
        num(r.rmse),
        num(r.r2),
        num(r.coverage),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_aligns_and_shortens() {
        let mut t = Table::new(["name", "value"]);
        t.push(vec!["a".into(), num(0.123456789)]);
        t.push(vec!["long name".into(), "7".into()]);
        let s = t.render();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "        a  0.12346");
        assert!(lines[2].starts_with("long name"));
    }

    #[test]
    fn csv_keeps_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["x"]);
        t.push(vec![num(0.1 + 0.2)]);
        t.write_csv(&dir.path().join("t.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        let v: f64 = text.lines().nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.1 + 0.2);
    }
}
