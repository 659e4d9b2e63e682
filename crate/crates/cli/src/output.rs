//! Result tables, their CSV / JSONL / SVG renderings and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl Cell {
    /// Floats use the shortest round-trip form, switching to exponent
    /// notation for very large or small magnitudes.
    fn text(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:?}"),
            Cell::I(v) => v.to_string(),
            Cell::S(v) => v.clone(),
            Cell::B(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => json!(v),
            Cell::F(_) => Value::Null,
            Cell::I(v) => json!(v),
            Cell::S(v) => json!(v),
            Cell::B(v) => json!(v),
        }
    }

    fn number(&self) -> Option<f64> {
        match self {
            Cell::F(v) if v.is_finite() => Some(*v),
            Cell::I(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Columns plotted against each other in the SVG rendering.
    pub plot: Option<(&'static str, &'static str)>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new(), plot: None }
    }

    pub fn plot(mut self, x: &'static str, y: &'static str) -> Self {
        self.plot = Some((x, y));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Vec<(&'static str, Value)>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_table(table: &Table, path: &Path, format: Format) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record(&table.columns).map_err(|e| io_err(path, e))?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::text)).map_err(|e| io_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))?;
        }
        Format::Jsonl => {
            let mut w = BufWriter::new(file);
            for row in &table.rows {
                let obj: serde_json::Map<String, Value> =
                    table.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                serde_json::to_writer(&mut w, &obj).map_err(|e| io_err(path, e))?;
                w.write_all(b"\n").map_err(|e| io_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))?;
        }
    }
    Ok(())
}

/// Scatter plot of the table's plot columns.
pub fn render_svg(table: &Table) -> Option<String> {
    let (xc, yc) = table.plot?;
    let (xi, yi) = (table.column(xc)?, table.column(yc)?);
    let pts: Vec<(f64, f64)> =
        table.rows.iter().filter_map(|r| Some((r[xi].number()?, r[yi].number()?))).collect();
    if pts.is_empty() {
        return None;
    }
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
    let (w, h, m) = (640.0, 400.0, 50.0);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    s.push_str(&format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n"));
    s.push_str(&format!("<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", w - 2.0 * m, h - 2.0 * m));
    for p in &pts {
        s.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"steelblue\"/>\n", sx(p.0), sy(p.1)));
    }
    s.push_str(&format!("<text x=\"{m}\" y=\"{}\">{x0:.4}</text>\n", h - m + 15.0));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{x1:.4}</text>\n", w - m, h - m + 15.0));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xc}</text>\n", w / 2.0, h - 10.0));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y0:.4}</text>\n", m - 4.0, h - m));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y1:.4}</text>\n", m - 4.0, m + 4.0));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{yc}</text>\n", w / 2.0, m - 15.0));
    s.push_str("</svg>\n");
    Some(s)
}

/// Writes every table, the optional plots and `manifest.json`. Returns the
/// paths written.
pub fn write_all(cfg: &RunConfig, output: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    let mut written = Vec::new();
    let mut files = Vec::new();
    for t in &output.tables {
        let path = cfg.out.join(format!("{}.{}", t.name, cfg.format.extension()));
        write_table(t, &path, cfg.format)?;
        files.push(json!({"table": t.name, "file": path.file_name().unwrap().to_string_lossy(), "rows": t.rows.len()}));
        written.push(path);
        if cfg.svg {
            if let Some(svg) = render_svg(t) {
                let path = cfg.out.join(format!("{}.svg", t.name));
                std::fs::write(&path, svg).map_err(|e| io_err(&path, e))?;
                written.push(path);
            }
        }
    }
    let (params, sources) = cfg.to_json();
    let summary: serde_json::Map<String, Value> = output.summary.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    let manifest = json!({
        "program": "orbitlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "out": cfg.out.to_string_lossy(),
        "format": cfg.format.extension(),
        "svg": cfg.svg,
        "config_file": cfg.config_file.as_ref().map(|p| p.to_string_lossy().to_string()),
        "params": params,
        "sources": sources,
        "outputs": files,
        "summary": summary,
    });
    let path = cfg.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(&path, e))? + "\n";
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_round_trip() {
        for v in [0.1, 1e-7, 123456.789, 1e300, -2.5] {
            assert_eq!(Cell::F(v).text().parse::<f64>().unwrap(), v);
        }
        assert_eq!(Cell::F(f64::INFINITY).json(), Value::Null);
    }

    #[test]
    fn svg_needs_numeric_points() {
        let mut t = Table::new("t", &["x", "y"]).plot("x", "y");
        assert!(render_svg(&t).is_none());
        t.push(vec![1.0.into(), 2.0.into()]);
        t.push(vec![2.0.into(), 3.0.into()]);
        let svg = render_svg(&t).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
