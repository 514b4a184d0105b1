//! Point files (CSV/TSV), coreset JSON and herding traces.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use kde_coreset::herding::HerdingTrace;
use kde_coreset::{Coreset, PointSet, WeightedPoints};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: line {line}, column {column}: {value:?} is not a number")]
    Parse { path: PathBuf, line: usize, column: usize, value: String },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("{path}: line {line} has {got} columns, expected {expected}")]
    Ragged { path: PathBuf, line: usize, expected: usize, got: usize },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Points { path: PathBuf, source: kde_coreset::Error },
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {message}")]
pub struct OutputError {
    pub path: PathBuf,
    pub message: String,
}

impl OutputError {
    fn new(path: &Path, message: impl ToString) -> Self {
        Self { path: path.to_path_buf(), message: message.to_string() }
    }
}

fn delimiter_for(path: &Path, first_line: &str) -> u8 {
    let tsv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    if tsv || (first_line.contains('\t') && !first_line.contains(',')) {
        b'\t'
    } else {
        b','
    }
}

/// One point per row, all rows with the same number of numeric columns.
/// A first row that does not parse as numbers is taken as a header.
pub fn read_points(path: &Path) -> Result<PointSet, InputError> {
    let io_err = |source| InputError::Io { path: path.to_path_buf(), source };
    let mut text = String::new();
    BufReader::new(File::open(path).map_err(io_err)?).read_to_string(&mut text).map_err(io_err)?;
    parse_points(path, &text)
}

pub(crate) fn parse_points(path: &Path, text: &str) -> Result<PointSet, InputError> {
    let first_line = text.lines().next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .delimiter(delimiter_for(path, first_line))
        .from_reader(text.as_bytes());
    let mut coords = Vec::new();
    let mut dim = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| InputError::Csv { path: path.to_path_buf(), source })?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Result<f64, &str>> = record.iter().map(|f| f.parse::<f64>().map_err(|_| f)).collect();
        if row == 0 && parsed.iter().any(Result::is_err) {
            continue;
        }
        let expected = *dim.get_or_insert(parsed.len());
        if parsed.len() != expected {
            return Err(InputError::Ragged { path: path.to_path_buf(), line, expected, got: parsed.len() });
        }
        for (column, value) in parsed.into_iter().enumerate() {
            match value {
                Ok(v) => coords.push(v),
                Err(raw) => {
                    return Err(InputError::Parse {
                        path: path.to_path_buf(),
                        line,
                        column: column + 1,
                        value: raw.to_string(),
                    })
                }
            }
        }
    }
    let Some(dim) = dim else {
        return Err(InputError::Empty { path: path.to_path_buf() });
    };
    PointSet::from_flat(coords, dim).map_err(|source| InputError::Points { path: path.to_path_buf(), source })
}

/// Writes points as headerless CSV.
pub fn write_points(path: &Path, points: &PointSet) -> Result<(), OutputError> {
    let file = File::create(path).map_err(|e| OutputError::new(path, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    for p in points.iter() {
        writer.serialize(p).map_err(|e| OutputError::new(path, e))?;
    }
    writer.flush().map_err(|e| OutputError::new(path, e))
}

/// Coreset as written to disk. Subset coresets carry `indices` into the
/// parent; lattice coresets (grid snapping) carry only points and weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetFile {
    pub parent_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    pub weights: Option<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

impl CoresetFile {
    pub fn from_coreset(parent: &PointSet, coreset: &Coreset) -> Self {
        Self {
            parent_size: parent.len(),
            indices: Some(coreset.indices().to_vec()),
            weights: coreset.weights().map(<[f64]>::to_vec),
            points: coreset.indices().iter().map(|&i| parent.point(i).to_vec()).collect(),
        }
    }

    pub fn from_weighted(parent: &PointSet, weighted: &WeightedPoints) -> Self {
        Self {
            parent_size: parent.len(),
            indices: None,
            weights: Some(weighted.weights().to_vec()),
            points: weighted.points().iter().map(<[f64]>::to_vec).collect(),
        }
    }

    /// Rebuilds the coreset as a weighted point set in its own right.
    pub fn to_weighted(&self) -> Result<WeightedPoints, kde_coreset::Error> {
        let points = PointSet::from_rows(&self.points)?;
        let weights = match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / points.len() as f64; points.len()],
        };
        WeightedPoints::new(points, weights)
    }

    /// The subset coreset over `parent`, when the file lists indices.
    pub fn to_coreset(&self, parent: &PointSet) -> Option<Result<Coreset, kde_coreset::Error>> {
        let indices = self.indices.clone()?;
        Some(Coreset::new(parent, indices, self.weights.clone()))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, InputError> {
    let file = File::open(path).map_err(|source| InputError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| InputError::Json { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let file = File::create(path).map_err(|e| OutputError::new(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value).map_err(|e| OutputError::new(path, e))?;
    writer.write_all(b"\n").and_then(|_| writer.flush()).map_err(|e| OutputError::new(path, e))
}

/// Trace CSV with columns `t, chosen_index, gap_sq`.
pub fn write_trace(path: &Path, trace: &HerdingTrace) -> Result<(), OutputError> {
    let file = File::create(path).map_err(|e| OutputError::new(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record(["t", "chosen_index", "gap_sq"]).map_err(|e| OutputError::new(path, e))?;
    for r in &trace.records {
        writer
            .write_record([r.t.to_string(), r.chosen_index.to_string(), r.gap_sq.to_string()])
            .map_err(|e| OutputError::new(path, e))?;
    }
    writer.flush().map_err(|e| OutputError::new(path, e))
}
