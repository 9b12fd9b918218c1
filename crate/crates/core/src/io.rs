//! File formats. Floats are written with Rust's shortest round-trip
//! formatting, so output is deterministic and lossless.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, LabeledSeries, Ridge, WindowSpec};
use crate::graph::WeightedGraph;
use crate::linalg::SpdMatrix;

fn join_row(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Dense rows, no header.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in m.row_iter() {
        out.push_str(&join_row(r.iter().copied()));
        out.push('\n');
    }
    out
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("not a number: {s:?}")))
}

fn reader(text: &str, headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader(text, false).records() {
        let rec = rec?;
        rows.push(rec.iter().map(parse_f64).collect::<Result<_>>()?);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::InsufficientData("matrix CSV is empty".into()));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

/// JSON record `{dim, rows}` for square matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("matrix record requires a square matrix"));
        }
        Ok(MatrixRecord {
            dim: m.nrows(),
            rows: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        })
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rows.len() != self.dim || self.rows.iter().any(|r| r.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.rows.len(),
            });
        }
        Ok(DMatrix::from_row_iterator(
            self.dim,
            self.dim,
            self.rows.iter().flatten().copied(),
        ))
    }
}

/// Edge list with header `src,dst,weight`, one row per edge with `src < dst`.
pub fn graph_to_csv(g: &WeightedGraph) -> String {
    let mut out = String::from("src,dst,weight\n");
    for (i, j, w) in g.edges() {
        out.push_str(&format!("{i},{j},{w}\n"));
    }
    out
}

/// `n` defaults to one more than the largest node index.
pub fn graph_from_csv(text: &str, n: Option<usize>) -> Result<WeightedGraph> {
    let mut rdr = reader(text, true);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["src", "dst", "weight"] {
        return Err(Error::invalid("graph CSV header must be src,dst,weight"));
    }
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let idx = |k: usize| {
            rec[k]
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad node index {:?}", &rec[k])))
        };
        edges.push((idx(0)?, idx(1)?, parse_f64(&rec[2])?));
    }
    let n = match n {
        Some(n) => n,
        None => edges
            .iter()
            .map(|&(i, j, _)| i.max(j) + 1)
            .max()
            .unwrap_or(0),
    };
    WeightedGraph::from_edges(n, &edges)
}

/// Sample matrix with header `ch0,…` and one row per sample.
pub fn samples_to_csv(m: &DMatrix<f64>) -> String {
    let header: Vec<String> = (0..m.ncols()).map(|c| format!("ch{c}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    out.push_str(&matrix_to_csv(m));
    out
}

pub fn samples_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let body = text
        .split_once('\n')
        .map(|(_, b)| b)
        .ok_or_else(|| Error::InsufficientData("sample CSV has no rows".into()))?;
    matrix_from_csv(body)
}

/// Header `t,ch0,…,chK,label`; `t` is the sample index.
pub fn series_to_csv(s: &LabeledSeries) -> String {
    let mut header = vec!["t".to_string()];
    header.extend((0..s.channels()).map(|c| format!("ch{c}")));
    header.push("label".into());
    let mut out = header.join(",");
    out.push('\n');
    for (t, row) in s.samples().row_iter().enumerate() {
        out.push_str(&format!(
            "{t},{},{}\n",
            join_row(row.iter().copied()),
            s.labels()[t]
        ));
    }
    out
}

pub fn series_from_csv(text: &str) -> Result<LabeledSeries> {
    let mut rdr = reader(text, true);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let k = header.len().saturating_sub(2);
    let ok = header.len() >= 3
        && header[0] == "t"
        && header[header.len() - 1] == "label"
        && (0..k).all(|c| header[c + 1] == format!("ch{c}"));
    if !ok {
        return Err(Error::invalid("series CSV header must be t,ch0..chK,label"));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        for c in 0..k {
            values.push(parse_f64(&rec[c + 1])?);
        }
        let l: u8 = rec[k + 1]
            .parse()
            .map_err(|_| Error::invalid(format!("bad label {:?}", &rec[k + 1])))?;
        labels.push(l);
    }
    if labels.is_empty() {
        return Err(Error::InsufficientData("series CSV has no rows".into()));
    }
    LabeledSeries::new(DMatrix::from_row_iterator(labels.len(), k, values), labels)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    fs::write(path, to_json_string(v)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveEntry {
    pub file: String,
    pub label: u8,
    pub recording: usize,
    pub window_start: usize,
    pub window_end: usize,
}

/// `manifest.json` of a feature archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveManifest {
    pub beta: f64,
    pub window: Option<WindowSpec>,
    pub ridge: Option<Ridge>,
    pub entries: Vec<ArchiveEntry>,
    /// Free-form record of how the features were produced.
    pub provenance: serde_json::Value,
}

pub const ARCHIVE_MANIFEST: &str = "manifest.json";

/// Writes `feature_00000.csv, …` and the manifest into `dir`, which is
/// created if missing.
pub fn write_feature_archive(
    dir: &Path,
    features: &[FeatureMatrix],
    window: Option<WindowSpec>,
    ridge: Option<Ridge>,
    provenance: serde_json::Value,
) -> Result<ArchiveManifest> {
    let Some(first) = features.first() else {
        return Err(Error::InsufficientData("no features to archive".into()));
    };
    if features.iter().any(|f| f.beta != first.beta) {
        return Err(Error::invalid("archived features must share one beta"));
    }
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let file = format!("feature_{i:05}.csv");
        fs::write(dir.join(&file), matrix_to_csv(f.matrix.matrix()))?;
        entries.push(ArchiveEntry {
            file,
            label: f.label,
            recording: f.recording,
            window_start: f.source_window.start,
            window_end: f.source_window.end,
        });
    }
    let manifest = ArchiveManifest {
        beta: first.beta,
        window,
        ridge,
        entries,
        provenance,
    };
    write_json(&dir.join(ARCHIVE_MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn read_feature_archive(dir: &Path) -> Result<(ArchiveManifest, Vec<FeatureMatrix>)> {
    let manifest: ArchiveManifest = read_json(&dir.join(ARCHIVE_MANIFEST))?;
    let features = manifest
        .entries
        .iter()
        .map(|e| {
            if e.file.contains(['/', '\\']) || e.file.starts_with('.') {
                return Err(Error::invalid(format!(
                    "archive entry escapes directory: {}",
                    e.file
                )));
            }
            let m = matrix_from_csv(&fs::read_to_string(dir.join(&e.file))?)?;
            Ok(FeatureMatrix {
                matrix: SpdMatrix::from_matrix(m)?,
                label: e.label,
                beta: manifest.beta,
                source_window: e.window_start..e.window_end,
                recording: e.recording,
            })
        })
        .collect::<Result<_>>()?;
    Ok((manifest, features))
}
