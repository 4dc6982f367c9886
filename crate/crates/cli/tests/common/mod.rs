#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cactus_cli::workflow::SplitParams;
use cactus_core::{DataSplit, Dataset, ObjectiveFunction, ObjectiveKind, ObjectiveSpec};

/// Two well separated classes on two features, 40 rows.
pub fn toy_csv() -> String {
    let mut out = String::from("id,x,y,label\n");
    for i in 0..40 {
        let (base, label) = if i % 2 == 0 { (0.0, "a") } else { (10.0, "b") };
        let jitter = (i as f64 * 0.37).sin();
        out.push_str(&format!("t{i:02},{},{},{label}\n", base + jitter, base - jitter * 0.5));
    }
    out
}

pub fn write_toy(dir: &Path) -> PathBuf {
    let path = dir.join("toy.csv");
    std::fs::write(&path, toy_csv()).unwrap();
    path
}

pub fn toy_dataset(dir: &Path) -> Dataset {
    cactus_cli::workflow::read_dataset(&write_toy(dir)).unwrap()
}

pub fn toy_split(ds: &Dataset) -> DataSplit {
    SplitParams::default().apply(ds).unwrap()
}

fn train_ids(split: &DataSplit, skip: usize, take: usize) -> Vec<String> {
    split.train_ids.iter().skip(skip).take(take).cloned().collect()
}

/// Validation accuracy only.
pub fn plain_function() -> ObjectiveFunction {
    let mut of = ObjectiveFunction::new("plain", "toy")
        .with_objective(ObjectiveSpec::metric(ObjectiveKind::ValidationAccuracy, 1.0));
    of.n_samples = 12;
    of.seed = 5;
    of
}

/// Critical overlaps Ignore on 4 rows and a candidate on 2.
pub fn conflicted_function(split: &DataSplit) -> ObjectiveFunction {
    let mut of = ObjectiveFunction::new("conflicted", "toy")
        .with_objective(ObjectiveSpec::instance_set(ObjectiveKind::Critical, None, train_ids(split, 0, 8), 0.6))
        .with_objective(ObjectiveSpec::instance_set(ObjectiveKind::Ignore, None, train_ids(split, 4, 8), 0.4))
        .with_objective(ObjectiveSpec::instance_set(
            ObjectiveKind::Candidate,
            Some("a"),
            train_ids(split, 10, 4),
            0.3,
        ))
        .with_objective(ObjectiveSpec::metric(ObjectiveKind::ValidationAccuracy, 0.8));
    of.n_samples = 12;
    of.seed = 9;
    of
}

pub fn write_function(dir: &Path, name: &str, of: &ObjectiveFunction) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, cactus_core::serialize_objective_function(of)).unwrap();
    path
}
