//! Property tables, feature tables and novelty tagging.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::chem::{canonical_form, parse_smiles_with, CanonicalCode, MolecularGraph, ParseOptions, SmilesError};
use crate::features::FeatureVector;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}: file has no data rows")]
    Empty(PathBuf),
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: non-numeric {column} value `{value}`")]
    NonNumeric { path: PathBuf, row: usize, column: String, value: String },
    #[error("{path}: {} unparseable SMILES: {}", rows.len(), RowList(rows))]
    Rejected { path: PathBuf, rows: Vec<RejectedRow> },
    #[error("{path}: row {row}: {message}")]
    Malformed { path: PathBuf, row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based data row; the header is row 0.
    pub row: usize,
    pub smiles: String,
    pub error: SmilesError,
}

struct RowList<'a>(&'a [RejectedRow]);

impl fmt::Display for RowList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 10;
        for (i, r) in self.0.iter().take(SHOWN).enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "row {} `{}` ({})", r.row, r.smiles, r.error)?;
        }
        if self.0.len() > SHOWN {
            write!(f, "; and {} more", self.0.len() - SHOWN)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub smiles: Vec<String>,
    pub graphs: Vec<MolecularGraph>,
    pub y: Vec<f64>,
    /// Rows skipped in lenient mode.
    pub skipped: Vec<RejectedRow>,
}

impl LoadedDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize, DataError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DataError::MissingColumn { path: path.to_path_buf(), column: name.to_string() })
}

/// Reads a comma-separated table with a `smiles` column and a numeric
/// `property` column.
pub fn load_dataset(path: &Path, property: &str, mode: LoadMode) -> Result<LoadedDataset, DataError> {
    load_dataset_with(path, property, mode, &ParseOptions::default())
}

pub fn load_dataset_with(
    path: &Path,
    property: &str,
    mode: LoadMode,
    options: &ParseOptions,
) -> Result<LoadedDataset, DataError> {
    let csv_err = |source| DataError::Csv { path: path.to_path_buf(), source };
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(DataError::Empty(path.to_path_buf()));
    }
    let si = column(&headers, path, "smiles")?;
    let pi = column(&headers, path, property)?;
    let mut out = LoadedDataset { smiles: Vec::new(), graphs: Vec::new(), y: Vec::new(), skipped: Vec::new() };
    let mut rejected = Vec::new();
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 1;
        rows += 1;
        let smiles = rec.get(si).unwrap_or("");
        let raw = rec.get(pi).unwrap_or("");
        let y: f64 = raw.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| DataError::NonNumeric {
            path: path.to_path_buf(),
            row,
            column: property.to_string(),
            value: raw.to_string(),
        })?;
        match parse_smiles_with(smiles, options) {
            Ok(g) => {
                out.smiles.push(smiles.to_string());
                out.graphs.push(g);
                out.y.push(y);
            }
            Err(error) => rejected.push(RejectedRow { row, smiles: smiles.to_string(), error }),
        }
    }
    if rows == 0 {
        return Err(DataError::Empty(path.to_path_buf()));
    }
    if !rejected.is_empty() {
        match mode {
            LoadMode::Strict => return Err(DataError::Rejected { path: path.to_path_buf(), rows: rejected }),
            LoadMode::Lenient => out.skipped = rejected,
        }
    }
    if out.is_empty() {
        return Err(DataError::Empty(path.to_path_buf()));
    }
    Ok(out)
}

/// Feature table: `smiles`, the property, then `x0..` counts.
pub fn write_features(
    smiles: &[String],
    property: &str,
    y: &[f64],
    vectors: &[FeatureVector],
    out: impl Write,
) -> Result<(), csv::Error> {
    let dim = vectors.first().map_or(0, FeatureVector::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["smiles".to_string(), property.to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for ((s, y), v) in smiles.iter().zip(y).zip(vectors) {
        let mut row = vec![s.clone(), y.to_string()];
        row.extend(v.0.iter().map(u32::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub property: String,
    pub smiles: Vec<String>,
    pub y: Vec<f64>,
    pub vectors: Vec<FeatureVector>,
}

pub fn read_features(path: &Path) -> Result<FeatureTable, DataError> {
    let csv_err = |source| DataError::Csv { path: path.to_path_buf(), source };
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.len() < 2 || &headers[0] != "smiles" {
        return Err(DataError::MissingColumn { path: path.to_path_buf(), column: "smiles".into() });
    }
    let property = headers[1].to_string();
    let mut t = FeatureTable { property: property.clone(), smiles: Vec::new(), y: Vec::new(), vectors: Vec::new() };
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 1;
        let y = rec[1].parse::<f64>().map_err(|_| DataError::NonNumeric {
            path: path.to_path_buf(),
            row,
            column: property.clone(),
            value: rec[1].to_string(),
        })?;
        let v = rec
            .iter()
            .skip(2)
            .map(str::parse::<u32>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| DataError::Malformed { path: path.to_path_buf(), row, message: format!("bad count: {e}") })?;
        t.smiles.push(rec[0].to_string());
        t.y.push(y);
        t.vectors.push(FeatureVector(v));
    }
    if t.vectors.is_empty() {
        return Err(DataError::Empty(path.to_path_buf()));
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Novelty {
    Known,
    Novel,
}

/// Canonical codes of a reference set, for repeated membership queries.
#[derive(Debug, Clone, Default)]
pub struct KnownStructures(HashSet<CanonicalCode>);

impl KnownStructures {
    pub fn new(graphs: &[MolecularGraph]) -> Self {
        KnownStructures(graphs.iter().map(canonical_form).collect())
    }

    pub fn novelty(&self, g: &MolecularGraph) -> Novelty {
        if self.0.contains(&canonical_form(g)) {
            Novelty::Known
        } else {
            Novelty::Novel
        }
    }
}

/// Tags each structure known or novel relative to the training set.
pub fn novelty_filter(structures: &[MolecularGraph], training: &[MolecularGraph]) -> Vec<(MolecularGraph, Novelty)> {
    let known = KnownStructures::new(training);
    structures.iter().map(|g| (g.clone(), known.novelty(g))).collect()
}
