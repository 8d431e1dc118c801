//! File formats.
//!
//! * Dataset CSV: header `x_0,..,x_{d-1},y_0,..,y_{m-1}`, one row per pair.
//! * Expansion CSV: header `center_0,..,center_{d-1},coeff_0,..,coeff_{m-1}`,
//!   one row per center, plus a `key=value` metadata sidecar carrying
//!   `family`, `bandwidth`, `d` and `m` (and optional extra keys).
//! * Trajectory CSV: `k,err_sq` or `k,norm_sq`.
//! * Study CSV: `k,mean_err_sq,stderr`.
//!
//! All writers emit UTF-8 with `\n` line endings and format floats with
//! [`fmt_f64`], so output bytes depend only on the values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::ConvergenceRecord;
use crate::function_space::KernelExpansion;
use crate::kernel::{KernelFamily, KernelSpec};
use crate::objective::Dataset;
use crate::sgd::Trajectory;

/// Shortest round-trip decimal form; scientific notation outside
/// `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn header(prefix_a: &str, a: usize, prefix_b: &str, b: usize) -> Vec<String> {
    (0..a)
        .map(|i| format!("{prefix_a}_{i}"))
        .chain((0..b).map(|i| format!("{prefix_b}_{i}")))
        .collect()
}

fn rows_to_csv(header: &[String], rows: impl Iterator<Item = (Vec<f64>, Vec<f64>)>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for (a, b) in rows {
        let cells: Vec<String> = a.iter().chain(&b).map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

type Rows = Vec<(Vec<f64>, Vec<f64>)>;

/// Reads a two-block numeric CSV whose header is `{a}_0..,{b}_0..`.
fn read_blocks(path: &Path, prefix_a: &str, prefix_b: &str) -> Result<(usize, Rows)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let head = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    let a = head.iter().take_while(|h| h.starts_with(&format!("{prefix_a}_"))).count();
    let b = head.len() - a;
    if a == 0 || b == 0 {
        return Err(Error::parse(
            path,
            format!("header must list {prefix_a}_* columns followed by {prefix_b}_* columns"),
        ));
    }
    let expected = header(prefix_a, a, prefix_b, b);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse(
            path,
            format!("header `{}` does not match `{}`", head.iter().collect::<Vec<_>>().join(","), expected.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let values = record
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, format!("row {}: `{s}` is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (x, y) = values.split_at(a);
        rows.push((x.to_vec(), y.to_vec()));
    }
    Ok((a, rows))
}

pub fn dataset_csv(data: &Dataset) -> String {
    let head = header("x", data.input_dim(), "y", data.output_dim());
    rows_to_csv(
        &head,
        data.points().iter().cloned().zip(data.labels().iter().cloned()),
    )
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_text(path, &dataset_csv(data))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let (_, rows) = read_blocks(path, "x", "y")?;
    let (points, labels) = rows.into_iter().unzip();
    Dataset::new(points, labels).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn expansion_csv(f: &KernelExpansion) -> String {
    let head = header("center", f.spec().dim(), "coeff", f.out_dim());
    rows_to_csv(&head, f.centers().iter().cloned().zip(f.coeffs().iter().cloned()))
}

pub fn expansion_metadata(f: &KernelExpansion, extra: &[(&str, String)]) -> String {
    let spec = f.spec();
    let mut out = String::new();
    let _ = writeln!(out, "family={}", spec.family());
    let _ = writeln!(out, "bandwidth={}", fmt_f64(spec.bandwidth()));
    let _ = writeln!(out, "d={}", spec.dim());
    let _ = writeln!(out, "m={}", f.out_dim());
    for (k, v) in extra {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

pub fn write_expansion(csv_path: &Path, meta_path: &Path, f: &KernelExpansion, extra: &[(&str, String)]) -> Result<()> {
    write_text(csv_path, &expansion_csv(f))?;
    write_text(meta_path, &expansion_metadata(f, extra))
}

/// Parses a flat `key=value` file. Blank lines and `#` comments are skipped.
pub fn read_metadata(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, format!("line {}: expected key=value", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Sidecar path for an expansion CSV: `foo.csv` → `foo.meta`.
pub fn metadata_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta")
}

pub fn read_expansion(csv_path: &Path, meta_path: &Path) -> Result<KernelExpansion> {
    let meta = read_metadata(meta_path)?;
    let get = |k: &str| {
        meta.get(k)
            .ok_or_else(|| Error::parse(meta_path, format!("missing key `{k}`")))
    };
    let bad = |k: &str| Error::parse(meta_path, format!("invalid value for `{k}`"));
    let family: KernelFamily = get("family")?.parse().map_err(|_| bad("family"))?;
    let bandwidth: f64 = get("bandwidth")?.parse().map_err(|_| bad("bandwidth"))?;
    let d: usize = get("d")?.parse().map_err(|_| bad("d"))?;
    let m: usize = get("m")?.parse().map_err(|_| bad("m"))?;
    let spec = KernelSpec::new(family, bandwidth, d).map_err(|e| Error::parse(meta_path, e.to_string()))?;

    let (dims, rows) = read_blocks(csv_path, "center", "coeff")?;
    if dims != d || rows.first().is_some_and(|(_, c)| c.len() != m) {
        return Err(Error::parse(csv_path, format!("columns do not match d={d}, m={m} from metadata")));
    }
    let (centers, coeffs) = rows.into_iter().unzip();
    KernelExpansion::from_parts(spec, m, centers, coeffs).map_err(|e| Error::parse(csv_path, e.to_string()))
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = format!("k,{}\n", t.quantity.column());
    for (k, v) in t.ks.iter().zip(&t.values) {
        let _ = writeln!(out, "{k},{}", fmt_f64(*v));
    }
    out
}

pub fn study_csv(record: &ConvergenceRecord) -> String {
    let mut out = String::from("k,mean_err_sq,stderr\n");
    for ((k, m), s) in record.ks.iter().zip(&record.mean_err_sq).zip(&record.stderr) {
        let _ = writeln!(out, "{k},{},{}", fmt_f64(*m), fmt_f64(*s));
    }
    out
}
