//! Tabular datasets: CSV ingestion, one-hot targets, feature selection and
//! the bundled case tables.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const IRIS_CSV: &str = include_str!("../data/iris.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub targets: Matrix,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        targets: Matrix,
        feature_names: Vec<String>,
        target_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() == 0 || features.rows() != targets.rows() {
            return Err(Error::shape(
                "dataset rows",
                format!("{} target rows (at least one)", features.rows()),
                targets.rows(),
            ));
        }
        if feature_names.len() != features.cols() || target_names.len() != targets.cols() {
            return Err(Error::shape(
                "dataset names",
                format!(
                    "{} feature and {} target names",
                    features.cols(),
                    targets.cols()
                ),
                format!("{} and {}", feature_names.len(), target_names.len()),
            ));
        }
        ensure_unique(&feature_names, "feature")?;
        ensure_unique(&target_names, "target")?;
        if features
            .data()
            .iter()
            .chain(targets.data())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numeric("dataset"));
        }
        Ok(Self {
            features,
            targets,
            feature_names,
            target_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.cols()
    }

    pub fn feature_column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.feature_index(name)?;
        Ok(self.features.column(j))
    }

    fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Writes features then targets, one header row, shortest round-trip reals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_io = |e: csv::Error| Error::Io {
            path: PathBuf::from("<csv writer>"),
            source: e.into(),
        };
        let header: Vec<&str> = self
            .feature_names
            .iter()
            .chain(&self.target_names)
            .map(String::as_str)
            .collect();
        w.write_record(&header).map_err(to_io)?;
        for i in 0..self.n_samples() {
            let record: Vec<String> = self
                .features
                .row(i)
                .iter()
                .chain(self.targets.row(i))
                .map(|v| v.to_string())
                .collect();
            w.write_record(&record).map_err(to_io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: PathBuf::from("<csv writer>"),
            source: e,
        })
    }

    /// Rescales every feature column to zero mean and unit variance.
    /// Constant columns are only centred.
    pub fn standardized(&self) -> Dataset {
        let mut features = self.features.clone();
        let rows = features.rows() as f64;
        for j in 0..features.cols() {
            let col = features.column(j);
            let mean = col.iter().sum::<f64>() / rows;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rows;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for (i, v) in col.iter().enumerate() {
                features.set(i, j, (v - mean) / sd);
            }
        }
        Dataset {
            features,
            ..self.clone()
        }
    }
}

fn ensure_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::Schema(format!("duplicate {what} name {n:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetEncoding {
    Numeric,
    OneHotLabels,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub target_columns: Vec<String>,
    pub target_encoding: TargetEncoding,
}

impl CsvSchema {
    pub fn numeric(columns: &[&str]) -> Self {
        Self {
            target_columns: columns.iter().map(|s| s.to_string()).collect(),
            target_encoding: TargetEncoding::Numeric,
        }
    }

    pub fn one_hot(column: &str) -> Self {
        Self {
            target_columns: vec![column.to_string()],
            target_encoding: TargetEncoding::OneHotLabels,
        }
    }
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file, schema)
}

/// Parses CSV text. Row numbers in errors are 1-based file lines, the
/// header being line 1.
pub fn parse_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    if schema.target_columns.is_empty() {
        return Err(Error::Schema(
            "at least one target column is required".into(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Format {
            row: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();

    let mut target_idx = Vec::with_capacity(schema.target_columns.len());
    for t in &schema.target_columns {
        let j = header.iter().position(|h| h == t).ok_or_else(|| {
            Error::Schema(format!("target column {t:?} not in header {header:?}"))
        })?;
        target_idx.push(j);
    }
    if schema.target_encoding == TargetEncoding::OneHotLabels && target_idx.len() != 1 {
        return Err(Error::Schema(
            "one_hot_labels encoding takes exactly one target column".into(),
        ));
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|j| !target_idx.contains(j))
        .collect();

    let mut features = Vec::new();
    let mut numeric_targets = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Format {
            row,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Format {
                row,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let cell = |j: usize| -> Result<f64> {
            let raw = &record[j];
            f64::from_str(raw)
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: header[j].clone(),
                    value: raw.to_string(),
                })
        };
        for &j in &feature_idx {
            features.push(cell(j)?);
        }
        match schema.target_encoding {
            TargetEncoding::Numeric => {
                for &j in &target_idx {
                    numeric_targets.push(cell(j)?);
                }
            }
            TargetEncoding::OneHotLabels => labels.push(record[target_idx[0]].to_string()),
        }
    }

    let rows = match schema.target_encoding {
        TargetEncoding::Numeric => numeric_targets.len() / target_idx.len(),
        TargetEncoding::OneHotLabels => labels.len(),
    };
    if rows == 0 {
        return Err(Error::Format {
            row: 2,
            message: "no data rows".into(),
        });
    }
    let feature_names: Vec<String> = feature_idx.iter().map(|&j| header[j].clone()).collect();
    let features = Matrix::new(rows, feature_idx.len(), features)?;
    let (targets, target_names) = match schema.target_encoding {
        TargetEncoding::Numeric => (
            Matrix::new(rows, target_idx.len(), numeric_targets)?,
            schema.target_columns.clone(),
        ),
        TargetEncoding::OneHotLabels => {
            let mut classes: Vec<String> = Vec::new();
            for l in &labels {
                if !classes.contains(l) {
                    classes.push(l.clone());
                }
            }
            (one_hot(&labels, &classes)?, classes)
        }
    };
    Dataset::new(features, targets, feature_names, target_names)
}

pub fn one_hot<S: AsRef<str>>(labels: &[S], classes: &[String]) -> Result<Matrix> {
    let mut out = Matrix::zeros(labels.len(), classes.len());
    for (i, label) in labels.iter().enumerate() {
        let label = label.as_ref();
        let j = classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        out.set(i, j, 1.0);
    }
    Ok(out)
}

/// Keeps only the named feature columns, in the given order.
pub fn select_features<S: AsRef<str>>(d: &Dataset, names: &[S]) -> Result<Dataset> {
    let idx = names
        .iter()
        .map(|n| d.feature_index(n.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let rows = d.n_samples();
    let mut data = Vec::with_capacity(rows * idx.len());
    for i in 0..rows {
        data.extend(idx.iter().map(|&j| d.features.get(i, j)));
    }
    Dataset::new(
        Matrix::new(rows, idx.len(), data)?,
        d.targets.clone(),
        names.iter().map(|n| n.as_ref().to_string()).collect(),
        d.target_names.clone(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinDataset {
    Case1,
    Case2,
    Iris,
}

impl BuiltinDataset {
    pub const ALL: [BuiltinDataset; 3] = [Self::Case1, Self::Case2, Self::Iris];

    pub fn id(self) -> &'static str {
        match self {
            Self::Case1 => "case1",
            Self::Case2 => "case2",
            Self::Iris => "iris",
        }
    }
}

impl FromStr for BuiltinDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.id() == s)
            .ok_or_else(|| Error::UnknownId {
                kind: "dataset",
                given: s.to_string(),
                valid: Self::ALL.map(|d| d.id()).join(", "),
            })
    }
}

/// Regression table: five candidate inputs `g1..g5`, target `h`.
const CASE1_ROWS: [[f64; 6]; 7] = [
    [0.1, 0.1, 0.3, 0.5, 0.7, 0.3],
    [0.2, 0.1, 0.3, 0.5, 0.6, 0.4],
    [0.3, 0.1, 0.3, 0.5, 0.5, 0.5],
    [0.4, 0.1, 0.3, 0.5, 0.4, 0.6],
    [0.5, 0.1, 0.3, 0.5, 0.3, 0.7],
    [0.6, 0.1, 0.3, 0.5, 0.2, 0.8],
    [0.7, 0.1, 0.3, 0.5, 0.1, 0.9],
];

/// XOR table: `r = q1 xor q2`, with a constant-0 column `q3` and a
/// constant-1 column `q4`.
const CASE2_ROWS: [[f64; 5]; 4] = [
    [0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0, 1.0, 1.0],
    [1.0, 0.0, 0.0, 1.0, 1.0],
    [1.0, 1.0, 0.0, 1.0, 0.0],
];

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

fn from_table<const W: usize>(
    rows: &[[f64; W]],
    feature_names: Vec<String>,
    target: &str,
) -> Dataset {
    let n = W - 1;
    let features = rows.iter().flat_map(|r| r[..n].iter().copied()).collect();
    let targets = rows.iter().map(|r| r[n]).collect();
    Dataset::new(
        Matrix::new(rows.len(), n, features).expect("static table"),
        Matrix::new(rows.len(), 1, targets).expect("static table"),
        feature_names,
        vec![target.to_string()],
    )
    .expect("static table is valid")
}

pub fn builtin_dataset(which: BuiltinDataset) -> Dataset {
    match which {
        BuiltinDataset::Case1 => from_table(&CASE1_ROWS, names("g", 5), "h"),
        BuiltinDataset::Case2 => from_table(&CASE2_ROWS, names("q", 4), "r"),
        BuiltinDataset::Iris => parse_csv(IRIS_CSV.as_bytes(), &CsvSchema::one_hot("species"))
            .expect("bundled iris.csv is valid"),
    }
}

/// Looks a bundled dataset up by id (`case1`, `case2`, `iris`).
pub fn builtin_dataset_by_id(id: &str) -> Result<Dataset> {
    Ok(builtin_dataset(id.parse()?))
}
