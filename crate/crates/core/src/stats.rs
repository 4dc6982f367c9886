//! Distribution and variance statistics for conflict boxes and feature plots.
//!
//! Variance rankings work on z-scores (train-split mean and population
//! standard deviation) so attributes with different units compare fairly.
//! Whiskers and violins report raw values.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::{ensure_current, Conflict, ConflictError};
use crate::data::{DataSplit, Dataset, RowId};
use crate::objective::ObjectiveFunction;

/// Default number of violin histogram bins.
pub const DEFAULT_BINS: usize = 20;
/// Attributes shown per conflict box.
pub const CONFLICT_BOX_ATTRIBUTES: usize = 4;
/// Attributes shown in the variance bar chart.
pub const VARIANCE_BAR_ATTRIBUTES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("id set is empty")]
    EmptyIdSet,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown row id `{0}`")]
    UnknownId(RowId),
    #[error("k = {k} must be between 1 and {max}")]
    InvalidK { k: usize, max: usize },
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("conflict on objectives ({left}, {right}) no longer matches the function")]
    StaleConflict { left: usize, right: usize },
}

impl StatsError {
    pub fn code(&self) -> &'static str {
        match self {
            StatsError::EmptyIdSet => "EmptyIdSet",
            StatsError::UnknownAttribute(_) => "UnknownAttribute",
            StatsError::UnknownId(_) => "UnknownId",
            StatsError::InvalidK { .. } => "InvalidK",
            StatsError::TooFewBins(_) => "TooFewBins",
            StatsError::StaleConflict { .. } => "StaleConflict",
        }
    }
}

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance, two-pass; 0 for empty and singleton slices.
pub fn population_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Quantile by linear interpolation between closest ranks (`h = (n-1)p`).
///
/// `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumberSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.min, self.q1, self.median, self.q3, self.max]
    }
}

/// Equal-width histogram normalized to sum to one.
///
/// Bins are closed-open except the last, which is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Result<Self, StatsError> {
        if bins < 2 {
            return Err(StatsError::TooFewBins(bins));
        }
        if values.is_empty() {
            return Err(StatsError::EmptyIdSet);
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0usize; bins];
        for &v in values {
            let mut b = ((v - lo) / width).floor() as usize;
            if b >= bins {
                b = bins - 1;
            }
            // Guard against rounding placing v below its edge.
            while b > 0 && v < edges[b] {
                b -= 1;
            }
            while b + 1 < bins && v >= edges[b + 1] {
                b += 1;
            }
            counts[b] += 1;
        }
        let total = values.len() as f64;
        Ok(Self {
            edges,
            density: counts.into_iter().map(|c| c as f64 / total).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ViewRow {
    id: RowId,
    raw: Vec<f64>,
    z: Vec<f64>,
    label: usize,
}

/// Dataset rows with z-scores computed from train-split statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedView {
    feature_names: Vec<String>,
    label_domain: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
    rows: Vec<ViewRow>,
    index: HashMap<RowId, usize>,
    train: Vec<usize>,
}

/// Standardizes every dataset row against the train split.
///
/// Attributes with zero train-split spread map to all-zero z columns.
pub fn standardize(ds: &Dataset, split: &DataSplit) -> StandardizedView {
    let d = ds.n_features();
    let train: Vec<usize> = ds
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| split.is_train(&r.id))
        .map(|(i, _)| i)
        .collect();
    let mut means = Vec::with_capacity(d);
    let mut stds = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = train.iter().map(|&i| ds.rows()[i].features[j]).collect();
        means.push(mean(&col));
        stds.push(population_variance(&col).sqrt());
    }
    let rows = ds
        .rows()
        .iter()
        .map(|r| ViewRow {
            id: r.id.clone(),
            raw: r.features.clone(),
            z: r
                .features
                .iter()
                .enumerate()
                .map(|(j, &x)| if stds[j] > 0.0 { (x - means[j]) / stds[j] } else { 0.0 })
                .collect(),
            label: ds.label_index(&r.label).expect("label in domain"),
        })
        .collect();
    StandardizedView {
        feature_names: ds.feature_names().to_vec(),
        label_domain: ds.label_domain().to_vec(),
        means,
        stds,
        rows,
        index: ds
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect(),
        train,
    }
}

impl StandardizedView {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_domain(&self) -> &[String] {
        &self.label_domain
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn z(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.rows[i].z.as_slice())
    }

    pub fn raw(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.rows[i].raw.as_slice())
    }

    pub fn train_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.train.iter().map(|&i| self.rows[i].id.as_str())
    }

    fn attribute(&self, name: &str) -> Result<usize, StatsError> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| StatsError::UnknownAttribute(name.to_string()))
    }

    fn resolve<'a, I>(&self, ids: I) -> Result<Vec<usize>, StatsError>
    where
        I: IntoIterator<Item = &'a RowId>,
    {
        ids.into_iter()
            .map(|id| {
                self.index
                    .get(id)
                    .copied()
                    .ok_or_else(|| StatsError::UnknownId(id.clone()))
            })
            .collect()
    }

    fn z_variances(&self, rows: &[usize]) -> Vec<f64> {
        (0..self.feature_names.len())
            .map(|j| {
                let col: Vec<f64> = rows.iter().map(|&i| self.rows[i].z[j]).collect();
                population_variance(&col)
            })
            .collect()
    }

    fn ranking(&self, rows: &[usize]) -> Vec<AttributeVariance> {
        let mut ranked: Vec<AttributeVariance> = self
            .z_variances(rows)
            .into_iter()
            .enumerate()
            .map(|(index, variance)| AttributeVariance {
                attribute: self.feature_names[index].clone(),
                index,
                variance,
            })
            .collect();
        ranked.sort_by(|a, b| b.variance.total_cmp(&a.variance).then(a.index.cmp(&b.index)));
        ranked
    }

    fn check_k(&self, k: usize) -> Result<(), StatsError> {
        let max = self.feature_names.len();
        if k == 0 || k > max {
            return Err(StatsError::InvalidK { k, max });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeVariance {
    pub attribute: String,
    pub index: usize,
    pub variance: f64,
}

/// Attributes ordered by z-score variance, descending; ties by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRanking {
    pub entries: Vec<AttributeVariance>,
}

impl VarianceRanking {
    pub fn attributes(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.attribute.as_str()).collect()
    }
}

pub fn top_variant_attributes(
    view: &StandardizedView,
    ids: &BTreeSet<RowId>,
    k: usize,
) -> Result<VarianceRanking, StatsError> {
    if ids.is_empty() {
        return Err(StatsError::EmptyIdSet);
    }
    view.check_k(k)?;
    let rows = view.resolve(ids)?;
    let mut entries = view.ranking(&rows);
    entries.truncate(k);
    Ok(VarianceRanking { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub attribute: String,
    /// Raw values of the requested id set.
    pub whisker: FiveNumberSummary,
    /// Raw values of the full train split.
    pub violin: Histogram,
}

pub fn distribution_summary(
    view: &StandardizedView,
    ids: &BTreeSet<RowId>,
    attribute: &str,
    bins: usize,
) -> Result<DistributionSummary, StatsError> {
    let j = view.attribute(attribute)?;
    if ids.is_empty() {
        return Err(StatsError::EmptyIdSet);
    }
    let rows = view.resolve(ids)?;
    let values: Vec<f64> = rows.iter().map(|&i| view.rows[i].raw[j]).collect();
    let train: Vec<f64> = view.train.iter().map(|&i| view.rows[i].raw[j]).collect();
    Ok(DistributionSummary {
        attribute: attribute.to_string(),
        whisker: FiveNumberSummary::from_values(&values).expect("nonempty"),
        violin: Histogram::new(&train, bins)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBar {
    pub attribute: String,
    pub left: f64,
    pub right: f64,
    pub conflicted: f64,
}

/// Variances of the left objective, right objective and conflicted ids on
/// the attributes that vary most over the union of both objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBars {
    pub bars: Vec<VarianceBar>,
}

impl VarianceBars {
    pub fn attributes(&self) -> Vec<&str> {
        self.bars.iter().map(|b| b.attribute.as_str()).collect()
    }
}

fn stale(e: ConflictError, conflict: &Conflict) -> StatsError {
    match e {
        ConflictError::StaleConflict { left, right } => StatsError::StaleConflict { left, right },
        ConflictError::Io { .. } => StatsError::StaleConflict {
            left: conflict.left,
            right: conflict.right,
        },
    }
}

pub fn variance_bars(
    view: &StandardizedView,
    of: &ObjectiveFunction,
    conflict: &Conflict,
) -> Result<VarianceBars, StatsError> {
    variance_bars_k(view, of, conflict, VARIANCE_BAR_ATTRIBUTES)
}

pub fn variance_bars_k(
    view: &StandardizedView,
    of: &ObjectiveFunction,
    conflict: &Conflict,
    k: usize,
) -> Result<VarianceBars, StatsError> {
    ensure_current(of, conflict).map_err(|e| stale(e, conflict))?;
    let left_ids = &of.objectives[conflict.left].ids;
    let right_ids = &of.objectives[conflict.right].ids;
    let union: BTreeSet<&RowId> = left_ids.union(right_ids).collect();
    let left = view.resolve(left_ids)?;
    let right = view.resolve(right_ids)?;
    let conflicted = view.resolve(&conflict.conflicted_ids)?;
    let union = view.resolve(union)?;

    let (lv, rv, cv) = (
        view.z_variances(&left),
        view.z_variances(&right),
        view.z_variances(&conflicted),
    );
    let k = k.min(view.feature_names.len());
    let bars = view
        .ranking(&union)
        .into_iter()
        .take(k)
        .map(|a| VarianceBar {
            left: lv[a.index],
            right: rv[a.index],
            conflicted: cv[a.index],
            attribute: a.attribute,
        })
        .collect();
    Ok(VarianceBars { bars })
}

/// Attribute ranking over the union of a conflict's two objectives, used to
/// order the conflict box.
pub fn conflict_box_attributes(
    view: &StandardizedView,
    of: &ObjectiveFunction,
    conflict: &Conflict,
    k: usize,
) -> Result<VarianceRanking, StatsError> {
    ensure_current(of, conflict).map_err(|e| stale(e, conflict))?;
    let union: BTreeSet<RowId> = of.objectives[conflict.left]
        .ids
        .union(&of.objectives[conflict.right].ids)
        .cloned()
        .collect();
    top_variant_attributes(view, &union, k.min(view.feature_names.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub x: f64,
    pub y: usize,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub attribute: String,
    /// One point per train-split row, in dataset order.
    pub points: Vec<FeaturePoint>,
    /// Train-split ids that are highlighted, sorted.
    pub highlighted: Vec<RowId>,
}

/// Scatter series (raw value vs label index) for the `k` attributes with the
/// highest variance over the full train split.
pub fn feature_plot_data(
    view: &StandardizedView,
    ids: &BTreeSet<RowId>,
    k: usize,
) -> Result<Vec<FeatureSeries>, StatsError> {
    view.check_k(k)?;
    let ranking = view.ranking(&view.train);
    let highlighted: Vec<RowId> = view
        .train
        .iter()
        .map(|&i| &view.rows[i].id)
        .filter(|id| ids.contains(*id))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(ranking
        .into_iter()
        .take(k)
        .map(|a| FeatureSeries {
            points: view
                .train
                .iter()
                .map(|&i| {
                    let row = &view.rows[i];
                    FeaturePoint {
                        x: row.raw[a.index],
                        y: row.label,
                        highlighted: ids.contains(&row.id),
                    }
                })
                .collect(),
            highlighted: highlighted.clone(),
            attribute: a.attribute,
        })
        .collect())
}
