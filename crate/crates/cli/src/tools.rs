//! File-to-file tools: Wigner dataset → density matrix, step trace → kernel.

use std::path::{Path, PathBuf};

use rabisim::hilbert::SpaceSpec;
use rabisim::measure::mean_photon;
use rabisim::predistort::{corrected_step, fit_step_form, flatness, invert_kernel, FormKind, KernelTrace};
use rabisim::tomo::{build_measurement_ops, mle_reconstruct, MleOptions, WignerDataset, WignerPoint};
use rabisim::Complex64;
use serde_json::{json, Value};

use crate::config::{sha256_hex, ConfigError};
use crate::output::{write_outputs, Axis, Grid, Output, RunContext};
use crate::CliError;

type Res<T> = std::result::Result<T, CliError>;

fn read(path: &Path, what: &str) -> Res<Vec<u8>> {
    std::fs::read(path).map_err(|e| ConfigError::new(what, format!("{}: {e}", path.display())).into())
}

fn bad(path: impl Into<String>, msg: impl Into<String>) -> CliError {
    ConfigError::new(path, msg).into()
}

/// Rows of numbers; a first row that does not parse is taken as a header.
fn numeric_rows(bytes: &[u8], what: &str) -> Res<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(bytes);
    let mut header = None;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(what, e.to_string()))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = Some(rec.iter().map(|s| s.to_lowercase()).collect()),
            Err(e) => return Err(bad(format!("{what} line {}", i + 1), e.to_string())),
        }
    }
    Ok((header, rows))
}

#[derive(Clone, Debug)]
pub struct ReconstructOptions {
    pub n_trunc: usize,
    /// Operator build space; defaults to the guard `4·max|α|²`.
    pub n_build: Option<usize>,
    pub mle: MleOptions,
}

/// Parses a `re,im,value[,shots]` Wigner dataset.
pub fn read_dataset(bytes: &[u8]) -> Res<Vec<WignerPoint<f64>>> {
    let (header, rows) = numeric_rows(bytes, "dataset")?;
    let idx = |name: &str, default: usize| -> Option<usize> {
        match &header {
            Some(h) => h.iter().position(|c| c == name),
            None => Some(default),
        }
    };
    let (re, im, val) = match (idx("re", 0), idx("im", 1), idx("value", 2)) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(bad("dataset", "header must name columns re, im, value")),
    };
    let shots = match &header {
        Some(h) => h.iter().position(|c| c == "shots"),
        None => rows.first().filter(|r| r.len() > 3).map(|_| 3),
    };
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let get = |k: usize| {
                r.get(k)
                    .copied()
                    .ok_or_else(|| bad(format!("dataset row {}", i + 1), "missing column"))
            };
            let shots = match shots {
                Some(k) => {
                    let s = get(k)?;
                    if s < 1.0 || s.fract() != 0.0 {
                        return Err(bad(format!("dataset row {}", i + 1), "shots must be a positive integer"));
                    }
                    Some(s as u64)
                }
                None => None,
            };
            Ok(WignerPoint {
                alpha: Complex64::new(get(re)?, get(im)?),
                value: get(val)?,
                shots,
            })
        })
        .collect()
}

pub fn reconstruct(input: &Path, out: &Path, opts: &ReconstructOptions) -> Res<Vec<PathBuf>> {
    let bytes = read(input, "dataset")?;
    let points = read_dataset(&bytes)?;
    if points.is_empty() {
        return Err(bad("dataset", "no data rows"));
    }
    let max_a2 = points.iter().fold(0.0f64, |m, p| m.max(p.alpha.norm_sqr()));
    let n_build = opts
        .n_build
        .unwrap_or_else(|| ((4.0 * max_a2).ceil() as usize).max(opts.n_trunc));
    let trunc = SpaceSpec::new(opts.n_trunc).map_err(|e| bad("--n-trunc", e.to_string()))?;
    let build = SpaceSpec::new(n_build).map_err(|e| bad("--n-build", e.to_string()))?;
    let ds = WignerDataset::new(points, build, trunc).map_err(|e| bad("dataset", e.to_string()))?;
    let ops = build_measurement_ops(&ds)?;
    let rec = mle_reconstruct(&ds, &ops, &opts.mle)?;
    let rho = rec.state.density_matrix();
    let d = rho.nrows();
    let mut flat = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            flat.push([rho[(i, j)].re, rho[(i, j)].im]);
        }
    }
    let input_hash = sha256_hex(&bytes);
    let settings = json!({
        "n_trunc": opts.n_trunc,
        "n_build": n_build,
        "mle": opts.mle,
    });
    let ctx = RunContext {
        experiment: "reconstruct".into(),
        config_hash: sha256_hex(format!("{input_hash}{settings}").as_bytes()),
        seed: 0,
    };
    let value = json!({
        "n_max": opts.n_trunc,
        "dim": d,
        "layout": "row-major [re, im] pairs",
        "rho": flat,
        "mean_photon": mean_photon(&rec.state)?,
        "purity": rec.state.purity(),
        "points": ds.points.len(),
        "n_max_build": n_build,
        "diagnostics": rec.diagnostics,
        "input_sha256": input_hash,
    });
    write_outputs(
        out,
        &ctx,
        &[Output::Json {
            name: "reconstruction".into(),
            value,
        }],
        &settings,
    )
    .map_err(|e| CliError::Io(e.to_string()))
}

/// Reads back the density matrix written by [`reconstruct`]: dimension and
/// row-major entries.
pub fn read_density_matrix(text: &str) -> Result<(usize, Vec<Complex64>), String> {
    let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let d = v["dim"].as_u64().ok_or("missing dim")? as usize;
    let rho = v["rho"].as_array().ok_or("missing rho")?;
    if rho.len() != d * d {
        return Err(format!("expected {} entries, found {}", d * d, rho.len()));
    }
    let entries = rho
        .iter()
        .map(|p| match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err("entry is not a [re, im] pair".to_string()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((d, entries))
}

#[derive(Clone, Debug)]
pub struct PredistortOptions {
    /// Kernel length; defaults to the trace length.
    pub n: Option<usize>,
    pub fit: Option<FormKind>,
}

/// Parses a uniformly sampled `t_ns,value` step response.
pub fn read_trace(bytes: &[u8]) -> Res<KernelTrace<f64>> {
    let (_, rows) = numeric_rows(bytes, "trace")?;
    if rows.len() < 2 {
        return Err(bad("trace", "need at least two samples"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() < 2) {
        return Err(bad(format!("trace row {}", i + 1), "expected t_ns,value"));
    }
    let dt = rows[1][0] - rows[0][0];
    if !(dt > 0.0) {
        return Err(bad("trace", "times must increase"));
    }
    for (i, w) in rows.windows(2).enumerate() {
        if ((w[1][0] - w[0][0]) - dt).abs() > 1e-6 * dt {
            return Err(bad(format!("trace row {}", i + 2), "samples must be uniformly spaced"));
        }
    }
    KernelTrace::step(dt, rows.iter().map(|r| r[1]).collect()).map_err(|e| bad("trace", e.to_string()))
}

pub fn predistort(input: &Path, out: &Path, opts: &PredistortOptions) -> Res<Vec<PathBuf>> {
    let bytes = read(input, "trace")?;
    let trace = read_trace(&bytes)?;
    let n = opts.n.unwrap_or(trace.len());
    if n == 0 || n > trace.len() {
        return Err(bad("--n", format!("must be in 1..={}", trace.len())));
    }
    let kernel = invert_kernel(&trace, n)?;
    let system = trace.to_impulse();
    let flat = flatness(&corrected_step(&system, &kernel), 0);
    let times = kernel.times();
    let mut labels = vec!["kernel_step".to_string()];
    let mut cols = vec![kernel.samples.clone()];
    let (form, params, residual) = match opts.fit {
        Some(kind) => {
            let fit = fit_step_form(&kernel, kind)?;
            labels.push("kernel_fit".into());
            cols.push(times.iter().map(|&t| fit.form.step_value(t)).collect());
            (json!(fit.form), json!(fit.form.params()), json!(fit.residual_rms))
        }
        None => (json!("numeric"), json!([]), Value::Null),
    };
    let input_hash = sha256_hex(&bytes);
    let settings = json!({"n": n, "fit": opts.fit});
    let ctx = RunContext {
        experiment: "predistort".into(),
        config_hash: sha256_hex(format!("{input_hash}{settings}").as_bytes()),
        seed: 0,
    };
    let grid = Grid::from_labeled_columns(
        "kernel",
        Axis::new("step_response", "1"),
        Axis::new("t", "ns"),
        times,
        Axis::new("trace", ""),
        labels,
        &cols,
    )
    .with_provenance("predistortion kernel from numerical inversion of the measured step response");
    let summary = json!({
        "form": form,
        "params": params,
        "dt": trace.dt,
        "n": n,
        "residual_rms": residual,
        "corrected_flatness": flat,
        "input_sha256": input_hash,
    });
    write_outputs(
        out,
        &ctx,
        &[
            Output::Grid(grid),
            Output::Json {
                name: "kernel_form".into(),
                value: summary,
            },
        ],
        &settings,
    )
    .map_err(|e| CliError::Io(e.to_string()))
}
