//! Result files: 2D grids as CSV with a JSON sidecar, frame sets with an
//! index, reconstructed density matrices and kernels.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::sha256_hex;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
}

impl Axis {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

/// Row-major table: one row per `row_values` entry, one column per label.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    /// File stem.
    pub name: String,
    pub quantity: Axis,
    pub rows: Axis,
    pub row_values: Vec<f64>,
    pub cols: Axis,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub provenance: String,
    pub extra: Map<String, Value>,
}

impl Grid {
    /// Grid from per-column data (`columns[c][r]`) and numeric column values.
    pub fn from_columns(
        name: &str,
        quantity: Axis,
        rows: Axis,
        row_values: Vec<f64>,
        cols: Axis,
        col_values: &[f64],
        columns: &[Vec<f64>],
    ) -> Self {
        let labels = col_values.iter().map(|v| fmt_f64(*v)).collect();
        Self::from_labeled_columns(name, quantity, rows, row_values, cols, labels, columns)
    }

    /// Same with free-form column labels.
    pub fn from_labeled_columns(
        name: &str,
        quantity: Axis,
        rows: Axis,
        row_values: Vec<f64>,
        cols: Axis,
        col_labels: Vec<String>,
        columns: &[Vec<f64>],
    ) -> Self {
        let values = (0..row_values.len())
            .map(|r| columns.iter().map(|c| c[r]).collect())
            .collect();
        Self {
            name: name.into(),
            quantity,
            rows,
            row_values,
            cols,
            col_labels,
            values,
            provenance: String::new(),
            extra: Map::new(),
        }
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    pub fn with_extra(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra
            .insert(key.into(), serde_json::to_value(value).expect("serializable extra"));
        self
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header: Vec<String> = std::iter::once(self.rows.name.clone())
            .chain(self.col_labels.iter().cloned())
            .collect();
        w.write_record(&header).expect("in-memory write");
        for (rv, row) in self.row_values.iter().zip(&self.values) {
            let rec: Vec<String> = std::iter::once(fmt_f64(*rv)).chain(row.iter().map(|v| fmt_f64(*v))).collect();
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf8")
    }

    /// Parses a grid written by [`to_csv`](Self::to_csv); axis metadata other
    /// than the row-axis name lives in the sidecar.
    pub fn from_csv(name: &str, text: &str) -> Result<Self, String> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| e.to_string())?.clone();
        let mut it = header.iter();
        let row_name = it.next().ok_or("empty header")?.to_string();
        let col_labels: Vec<String> = it.map(str::to_string).collect();
        let mut row_values = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
                .collect::<Result<_, _>>()?;
            let (first, rest) = nums.split_first().ok_or("empty row")?;
            row_values.push(*first);
            values.push(rest.to_vec());
        }
        Ok(Self {
            name: name.into(),
            quantity: Axis::new("", ""),
            rows: Axis::new(&row_name, ""),
            row_values,
            cols: Axis::new("", ""),
            col_labels,
            values,
            provenance: String::new(),
            extra: Map::new(),
        })
    }

    fn sidecar(&self, ctx: &RunContext, file: &str) -> Value {
        serde_json::json!({
            "file": file,
            "experiment": ctx.experiment,
            "quantity": self.quantity,
            "rows": self.rows,
            "columns": self.cols,
            "shape": [self.row_values.len(), self.col_labels.len()],
            "provenance": self.provenance,
            "config_hash": ctx.config_hash,
            "seed": ctx.seed,
            "version": VERSION,
            "extra": self.extra,
        })
    }
}

/// `Display` for f64 is the shortest string that parses back to the same
/// value, which keeps the CSV round trip exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Grid(Grid),
    /// Numbered frames sharing an index file.
    Frames {
        name: String,
        frames: Vec<Grid>,
        index_extra: Map<String, Value>,
    },
    Json {
        name: String,
        value: Value,
    },
}

/// What every written file is stamped with.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<(String, String)>) -> io::Result<()> {
    fs::write(dir.join(name), text)?;
    written.push((name.to_string(), sha256_hex(text.as_bytes())));
    Ok(())
}

/// Writes all outputs plus `manifest.json`; returns the written paths.
pub fn write_outputs(
    dir: &Path,
    ctx: &RunContext,
    outputs: &[Output],
    config: &Value,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for out in outputs {
        match out {
            Output::Grid(g) => {
                let csv = format!("{}.csv", g.name);
                write(dir, &csv, &g.to_csv(), &mut written)?;
                write(dir, &format!("{}.json", g.name), &pretty(&g.sidecar(ctx, &csv)), &mut written)?;
            }
            Output::Frames {
                name,
                frames,
                index_extra,
            } => {
                let sub = dir.join(name);
                fs::create_dir_all(&sub)?;
                let mut entries = Vec::new();
                for g in frames {
                    let file = format!("{name}/{}.csv", g.name);
                    write(dir, &file, &g.to_csv(), &mut written)?;
                    entries.push(serde_json::json!({
                        "file": file,
                        "shape": [g.row_values.len(), g.col_labels.len()],
                        "extra": g.extra,
                    }));
                }
                let first = frames.first();
                let index = serde_json::json!({
                    "experiment": ctx.experiment,
                    "quantity": first.map(|g| g.quantity.clone()),
                    "rows": first.map(|g| g.rows.clone()),
                    "columns": first.map(|g| g.cols.clone()),
                    "provenance": first.map(|g| g.provenance.clone()),
                    "frames": entries,
                    "config_hash": ctx.config_hash,
                    "seed": ctx.seed,
                    "version": VERSION,
                    "extra": index_extra,
                });
                write(dir, &format!("{name}.json"), &pretty(&index), &mut written)?;
            }
            Output::Json { name, value } => {
                let mut v = value.clone();
                if let Value::Object(m) = &mut v {
                    m.insert("config_hash".into(), ctx.config_hash.clone().into());
                    m.insert("version".into(), VERSION.into());
                }
                write(dir, &format!("{name}.json"), &pretty(&v), &mut written)?;
            }
        }
    }
    let manifest = serde_json::json!({
        "experiment": ctx.experiment,
        "config_hash": ctx.config_hash,
        "seed": ctx.seed,
        "version": VERSION,
        "config": config,
        "files": written.iter().map(|(f, h)| serde_json::json!({"file": f, "sha256": h})).collect::<Vec<_>>(),
    });
    fs::write(dir.join("manifest.json"), pretty(&manifest))?;
    let mut paths: Vec<PathBuf> = written.iter().map(|(f, _)| dir.join(f)).collect();
    paths.push(dir.join("manifest.json"));
    Ok(paths)
}
