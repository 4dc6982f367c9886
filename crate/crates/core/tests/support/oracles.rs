//! Independent reference implementations used to check the engine.
//!
//! Nothing here calls into the code paths it checks; each oracle recomputes
//! its answer from raw inputs with the most direct method available.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cactus_core::data::{DataSplit, Dataset, RowId};
use cactus_core::objective::{ObjectiveFunction, ObjectiveKind, ObjectiveSpec};
use cactus_core::zoo::TrainedClassifier;
use rand::seq::SliceRandom;
use rand::Rng;

/// How a pair of kinds may conflict.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cell {
    Never,
    Always,
    /// Both labels present and different.
    LabelsDiffer,
}

/// The documented conflict table, row/column order as in `KINDS`.
pub const KINDS: [ObjectiveKind; 8] = [
    ObjectiveKind::Candidate,
    ObjectiveKind::Similarity,
    ObjectiveKind::Ignore,
    ObjectiveKind::Critical,
    ObjectiveKind::TrainAccuracy,
    ObjectiveKind::ValidationAccuracy,
    ObjectiveKind::F1Macro,
    ObjectiveKind::PrecisionMacro,
];

use Cell::{Always as A, LabelsDiffer as L, Never as N};
pub const TABLE: [[Cell; 8]; 8] = [
    // cand sim ign crit tacc vacc f1 prec
    [L, L, A, N, N, N, N, N], // candidate
    [L, L, A, N, N, N, N, N], // similarity
    [A, A, N, A, N, N, N, N], // ignore
    [N, N, A, N, N, N, N, N], // critical
    [N, N, N, N, N, N, N, N], // train_accuracy
    [N, N, N, N, N, N, N, N], // validation_accuracy
    [N, N, N, N, N, N, N, N], // f1_macro
    [N, N, N, N, N, N, N, N], // precision_macro
];

fn kind_pos(k: ObjectiveKind) -> usize {
    KINDS.iter().position(|x| *x == k).unwrap()
}

pub fn table_eligible(a: &ObjectiveSpec, b: &ObjectiveSpec) -> bool {
    table_eligible_raw(a.kind, a.label.as_deref(), b.kind, b.label.as_deref())
}

pub fn table_eligible_raw(
    ka: ObjectiveKind,
    la: Option<&str>,
    kb: ObjectiveKind,
    lb: Option<&str>,
) -> bool {
    match TABLE[kind_pos(ka)][kind_pos(kb)] {
        Cell::Never => false,
        Cell::Always => true,
        Cell::LabelsDiffer => match (la, lb) {
            (Some(x), Some(y)) => x != y,
            _ => false,
        },
    }
}

/// All conflicts by exhaustive pair enumeration and nested-loop intersection,
/// sorted by (severity desc, left, right).
pub fn brute_conflicts(of: &ObjectiveFunction) -> Vec<(usize, usize, Vec<RowId>)> {
    let mut out = Vec::new();
    let objs = &of.objectives;
    for i in 0..objs.len() {
        for j in 0..objs.len() {
            if i >= j || !table_eligible(&objs[i], &objs[j]) {
                continue;
            }
            let left: Vec<&RowId> = objs[i].ids.iter().collect();
            let mut shared: Vec<RowId> = Vec::new();
            for a in &left {
                for b in &objs[j].ids {
                    if *a == b {
                        shared.push((*a).clone());
                    }
                }
            }
            shared.sort();
            shared.dedup();
            if !shared.is_empty() {
                out.push((i, j, shared));
            }
        }
    }
    out.sort_by(|a, b| b.2.len().cmp(&a.2.len()).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    out
}

/// Random function over a universe of `universe` ids with up to
/// `max_objectives` objectives of any kind.
pub fn random_function<R: Rng>(rng: &mut R, max_objectives: usize, universe: usize) -> ObjectiveFunction {
    let ids: Vec<String> = (0..universe).map(|i| format!("u{i:03}")).collect();
    let labels: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    random_function_over(rng, 0..=max_objectives, &ids, &labels)
}

/// Random function drawing ids and labels from the given pools.
pub fn random_function_over<R: Rng>(
    rng: &mut R,
    objectives: std::ops::RangeInclusive<usize>,
    ids: &[String],
    labels: &[String],
) -> ObjectiveFunction {
    let n = rng.gen_range(objectives);
    let mut of = ObjectiveFunction::new("random", "universe");
    for _ in 0..n {
        let kind = KINDS[rng.gen_range(0..KINDS.len())];
        let weight = rng.gen_range(0.0..=1.0);
        if kind.is_metric() {
            of.objectives.push(ObjectiveSpec::metric(kind, weight));
            continue;
        }
        let size = rng.gen_range(1..=ids.len().min(60));
        let chosen: Vec<String> = ids.choose_multiple(rng, size).cloned().collect();
        let label = match kind {
            ObjectiveKind::Candidate => Some(labels.choose(rng).unwrap().as_str()),
            ObjectiveKind::Similarity if rng.gen_bool(0.6) => Some(labels.choose(rng).unwrap().as_str()),
            _ => None,
        };
        of.objectives.push(ObjectiveSpec::instance_set(kind, label, chosen, weight));
    }
    of
}

/// Variance via E[x^2] - E[x]^2.
pub fn variance_moments(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let s1: f64 = values.iter().sum();
    let s2: f64 = values.iter().map(|v| v * v).sum();
    (s2 / n - (s1 / n) * (s1 / n)).max(0.0)
}

/// z-scores of `ids` on attribute `j`, from train-split statistics computed
/// here.
pub fn z_column(ds: &Dataset, split: &DataSplit, ids: &BTreeSet<RowId>, j: usize) -> Vec<f64> {
    let train: Vec<f64> = ds
        .rows()
        .iter()
        .filter(|r| split.train_ids.contains(&r.id))
        .map(|r| r.features[j])
        .collect();
    let n = train.len() as f64;
    let m = train.iter().sum::<f64>() / n;
    let sd = (train.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    ds.rows()
        .iter()
        .filter(|r| ids.contains(&r.id))
        .map(|r| if sd > 0.0 { (r.features[j] - m) / sd } else { 0.0 })
        .collect()
}

/// Attribute indices ordered by z-variance over `ids`, plus the variances.
pub fn brute_ranking(ds: &Dataset, split: &DataSplit, ids: &BTreeSet<RowId>) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = (0..ds.n_features())
        .map(|j| (j, variance_moments(&z_column(ds, split, ids, j))))
        .collect();
    // Stable sort keeps index order among exact ties.
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    v
}

/// Quantile with 1-based rank `1 + (n-1)p` and linear interpolation.
pub fn quantile_rank(values: &[f64], p: f64) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = 1.0 + (x.len() as f64 - 1.0) * p;
    let k = rank.floor() as usize;
    let d = rank - k as f64;
    if k >= x.len() {
        return x[x.len() - 1];
    }
    x[k - 1] + d * (x[k] - x[k - 1])
}

pub fn five_numbers(values: &[f64]) -> [f64; 5] {
    [
        quantile_rank(values, 0.0),
        quantile_rank(values, 0.25),
        quantile_rank(values, 0.5),
        quantile_rank(values, 0.75),
        quantile_rank(values, 1.0),
    ]
}

fn predicted_label(clf: &TrainedClassifier, ds: &Dataset, id: &str) -> String {
    let row = ds.row(id).unwrap();
    clf.predict(std::slice::from_ref(row)).unwrap().remove(0).label
}

/// Expected score of one objective, recomputed from individual predictions.
pub fn brute_score(
    clf: &TrainedClassifier,
    obj: &ObjectiveSpec,
    ds: &Dataset,
    split: &DataSplit,
    effective_train: &BTreeSet<RowId>,
) -> f64 {
    let accuracy = |ids: &BTreeSet<RowId>| {
        let hits = ids
            .iter()
            .filter(|id| predicted_label(clf, ds, id) == ds.row(id).unwrap().label)
            .count();
        hits as f64 / ids.len() as f64
    };
    match obj.kind {
        ObjectiveKind::Ignore => 1.0,
        ObjectiveKind::Candidate | ObjectiveKind::Similarity => match &obj.label {
            Some(l) => {
                let hits = obj.ids.iter().filter(|id| &predicted_label(clf, ds, id) == l).count();
                hits as f64 / obj.ids.len() as f64
            }
            None => {
                let preds: Vec<String> = obj.ids.iter().map(|id| predicted_label(clf, ds, id)).collect();
                let best = ds
                    .label_domain()
                    .iter()
                    .map(|l| preds.iter().filter(|p| *p == l).count())
                    .max()
                    .unwrap();
                best as f64 / preds.len() as f64
            }
        },
        ObjectiveKind::Critical => accuracy(&obj.ids),
        ObjectiveKind::TrainAccuracy => accuracy(effective_train),
        ObjectiveKind::ValidationAccuracy => accuracy(&split.validation_ids),
        ObjectiveKind::F1Macro | ObjectiveKind::PrecisionMacro => {
            let labels = ds.label_domain();
            let c = labels.len();
            let mut confusion = vec![vec![0usize; c]; c];
            for id in &split.validation_ids {
                let t = labels.iter().position(|l| *l == ds.row(id).unwrap().label).unwrap();
                let p = labels.iter().position(|l| *l == predicted_label(clf, ds, id)).unwrap();
                confusion[t][p] += 1;
            }
            let mut total = 0.0;
            for k in 0..c {
                let tp = confusion[k][k] as f64;
                let col: usize = (0..c).map(|t| confusion[t][k]).sum();
                let row: usize = confusion[k].iter().sum();
                let precision = if col == 0 { 0.0 } else { tp / col as f64 };
                let recall = if row == 0 { 0.0 } else { tp / row as f64 };
                total += if obj.kind == ObjectiveKind::PrecisionMacro {
                    precision
                } else if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
            }
            total / c as f64
        }
    }
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
