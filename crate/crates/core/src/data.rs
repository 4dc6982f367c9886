//! Tabular datasets and stratified train/validation splits.
//!
//! Datasets are read from CSV with an `id` column, a `label` column and at
//! least one numeric feature column. Missing values are rejected, never
//! imputed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a single dataset row.
pub type RowId = String;

/// Name of the id column in dataset CSV files.
pub const ID_COLUMN: &str = "id";
/// Name of the target column in dataset CSV files.
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("duplicate row id `{0}`")]
    DuplicateId(RowId),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("dataset has no numeric feature columns")]
    NoFeatureColumns,
    #[error("row `{row}`: value `{value}` in column `{column}` is not a finite number")]
    NonNumericFeature {
        row: RowId,
        column: String,
        value: String,
    },
    #[error("row `{row}`: missing value in column `{column}`")]
    MissingValue { row: RowId, column: String },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("validation fraction {0} is outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("too few rows to split: {0}")]
    TooFewRows(String),
}

impl DataError {
    pub fn code(&self) -> &'static str {
        match self {
            DataError::DuplicateId(_) => "DuplicateId",
            DataError::MissingColumn(_) => "MissingColumn",
            DataError::NoFeatureColumns => "NoFeatureColumns",
            DataError::NonNumericFeature { .. } => "NonNumericFeature",
            DataError::MissingValue { .. } => "MissingValue",
            DataError::EmptyDataset => "EmptyDataset",
            DataError::Csv(_) => "MalformedCsv",
            DataError::FractionOutOfRange(_) => "FractionOutOfRange",
            DataError::TooFewRows(_) => "TooFewRows",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub id: RowId,
    pub features: Vec<f64>,
    pub label: String,
}

/// An in-memory tabular dataset.
///
/// Rows keep file order. The label domain is ordered lexicographically and
/// that order is the canonical class order used everywhere else (probability
/// vectors, argmax tie-breaks, confusion matrices).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    rows: Vec<DataRow>,
    feature_names: Vec<String>,
    label_name: String,
    label_domain: Vec<String>,
    index: HashMap<RowId, usize>,
}

impl Dataset {
    /// Builds a dataset from rows, checking every dataset invariant.
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        rows: Vec<DataRow>,
    ) -> Result<Self, DataError> {
        if feature_names.is_empty() {
            return Err(DataError::NoFeatureColumns);
        }
        if rows.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut index = HashMap::with_capacity(rows.len());
        let mut domain = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            if index.insert(row.id.clone(), i).is_some() {
                return Err(DataError::DuplicateId(row.id.clone()));
            }
            if row.features.len() != feature_names.len() {
                let column = feature_names
                    .get(row.features.len())
                    .cloned()
                    .unwrap_or_else(|| format!("#{}", row.features.len()));
                return Err(DataError::MissingValue {
                    row: row.id.clone(),
                    column,
                });
            }
            if let Some(j) = row.features.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonNumericFeature {
                    row: row.id.clone(),
                    column: feature_names[j].clone(),
                    value: row.features[j].to_string(),
                });
            }
            domain.insert(row.label.clone());
        }
        Ok(Self {
            name: name.into(),
            rows,
            feature_names,
            label_name: LABEL_COLUMN.to_string(),
            label_domain: domain.into_iter().collect(),
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> &[DataRow] {
        &self.rows
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    /// Distinct labels in canonical (sorted) order.
    pub fn label_domain(&self) -> &[String] {
        &self.label_domain
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Position of `id` in [`Dataset::rows`].
    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, id: &str) -> Option<&DataRow> {
        self.position(id).map(|i| &self.rows[i])
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_domain.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }
}

/// Reads a dataset from UTF-8 CSV.
///
/// The header must contain `id` and `label`; every other column is a numeric
/// feature, kept in header order.
pub fn load_dataset<R: Read>(source: R, name: &str) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .clone();
    let id_col = headers
        .iter()
        .position(|h| h == ID_COLUMN)
        .ok_or_else(|| DataError::MissingColumn(ID_COLUMN.to_string()))?;
    let label_col = headers
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .ok_or_else(|| DataError::MissingColumn(LABEL_COLUMN.to_string()))?;
    let feature_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != id_col && *i != label_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    if feature_cols.is_empty() {
        return Err(DataError::NoFeatureColumns);
    }

    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let id = record.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(DataError::MissingValue {
                row: format!("line {}", line + 2),
                column: ID_COLUMN.to_string(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateId(id));
        }
        let label = record.get(label_col).unwrap_or("");
        if label.is_empty() {
            return Err(DataError::MissingValue {
                row: id,
                column: LABEL_COLUMN.to_string(),
            });
        }
        let mut features = Vec::with_capacity(feature_cols.len());
        for (col, fname) in &feature_cols {
            let raw = record.get(*col).unwrap_or("");
            if raw.is_empty() {
                return Err(DataError::MissingValue {
                    row: id,
                    column: fname.clone(),
                });
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(DataError::NonNumericFeature {
                        row: id,
                        column: fname.clone(),
                        value: raw.to_string(),
                    })
                }
            }
        }
        rows.push(DataRow {
            id,
            features,
            label: label.to_string(),
        });
    }
    let names = feature_cols.into_iter().map(|(_, n)| n).collect();
    Dataset::new(name, names, rows)
}

/// Writes a dataset back out in the CSV layout accepted by [`load_dataset`].
pub fn write_dataset_csv(ds: &Dataset) -> String {
    let mut out = String::from("id,label");
    for f in ds.feature_names() {
        out.push(',');
        out.push_str(f);
    }
    out.push('\n');
    for row in ds.rows() {
        out.push_str(&row.id);
        out.push(',');
        out.push_str(&row.label);
        for v in &row.features {
            out.push(',');
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    out
}

/// Disjoint train/validation partition of a dataset's row ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train_ids: BTreeSet<RowId>,
    pub validation_ids: BTreeSet<RowId>,
    pub seed: u64,
}

impl DataSplit {
    /// Checks the split invariants against `ds`.
    pub fn check(&self, ds: &Dataset) -> Result<(), DataError> {
        if self.train_ids.is_empty() || self.validation_ids.is_empty() {
            return Err(DataError::TooFewRows("split has an empty side".into()));
        }
        if let Some(id) = self.train_ids.intersection(&self.validation_ids).next() {
            return Err(DataError::DuplicateId(id.clone()));
        }
        if let Some(id) = self
            .train_ids
            .iter()
            .chain(&self.validation_ids)
            .find(|id| !ds.contains(id))
        {
            return Err(DataError::MissingValue {
                row: id.clone(),
                column: ID_COLUMN.to_string(),
            });
        }
        Ok(())
    }

    pub fn is_train(&self, id: &str) -> bool {
        self.train_ids.contains(id)
    }
}

/// Stratified random split.
///
/// The validation side holds `round(fraction * N)` rows, spread over labels
/// by largest remainder so every label's share stays within one row of its
/// proportional quota. Every label keeps at least one training row.
pub fn make_split(
    ds: &Dataset,
    validation_fraction: f64,
    seed: u64,
) -> Result<DataSplit, DataError> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(DataError::FractionOutOfRange(validation_fraction));
    }
    let mut by_label: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for row in ds.rows() {
        by_label.entry(&row.label).or_default().push(&row.id);
    }
    let n = ds.len();
    let labels = by_label.len();
    if n < 2 || n <= labels {
        return Err(DataError::TooFewRows(format!(
            "{n} rows over {labels} labels leave no room for a validation row"
        )));
    }
    let target = ((validation_fraction * n as f64).round() as usize).clamp(1, n - labels);

    // Largest-remainder allocation, capped so each label keeps a train row.
    let groups: Vec<(&str, &Vec<&str>)> = by_label.iter().map(|(l, v)| (*l, v)).collect();
    let quotas: Vec<f64> = groups
        .iter()
        .map(|(_, ids)| validation_fraction * ids.len() as f64)
        .collect();
    let caps: Vec<usize> = groups.iter().map(|(_, ids)| ids.len() - 1).collect();
    let mut alloc: Vec<usize> = quotas
        .iter()
        .zip(&caps)
        .map(|(q, cap)| (q.floor() as usize).min(*cap))
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut assigned: usize = alloc.iter().sum();
    while assigned < target {
        let before = assigned;
        for &g in &order {
            if assigned == target {
                break;
            }
            if alloc[g] < caps[g] {
                alloc[g] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    while assigned > target {
        // Only reachable when rounding of the global target falls below the
        // sum of floors; trim from the smallest remainders first.
        let g = *order
            .iter()
            .rev()
            .find(|&&g| alloc[g] > 0)
            .expect("positive allocation exists");
        alloc[g] -= 1;
        assigned -= 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_ids = BTreeSet::new();
    let mut validation_ids = BTreeSet::new();
    for ((_, ids), take) in groups.iter().zip(&alloc) {
        let mut shuffled: Vec<&str> = (*ids).clone();
        shuffled.shuffle(&mut rng);
        for (i, id) in shuffled.into_iter().enumerate() {
            if i < *take {
                validation_ids.insert(id.to_string());
            } else {
                train_ids.insert(id.to_string());
            }
        }
    }
    if validation_ids.is_empty() {
        return Err(DataError::TooFewRows(
            "no label has a spare row for validation".into(),
        ));
    }
    Ok(DataSplit {
        train_ids,
        validation_ids,
        seed,
    })
}
