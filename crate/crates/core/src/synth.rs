//! Seeded synthetic datasets for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{DataRow, Dataset, RowId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub n_rows: usize,
    pub n_classes: usize,
    pub n_features: usize,
    /// Standard deviation of each cluster around its center.
    pub spread: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            n_rows: 200,
            n_classes: 3,
            n_features: 4,
            spread: 1.0,
            seed: 0,
        }
    }
}

pub fn class_label(c: usize) -> String {
    format!("c{c}")
}

pub fn row_id(i: usize) -> RowId {
    format!("r{i:05}")
}

fn feature_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

fn sample_around<R: Rng>(rng: &mut R, center: &[f64], spread: f64) -> Vec<f64> {
    let noise = Normal::new(0.0, spread).expect("finite spread");
    center.iter().map(|c| c + noise.sample(rng)).collect()
}

/// Gaussian clusters, one per class, with centers drawn from `[-5, 5]^d`.
/// Rows cycle through the classes so every class is represented.
pub fn gaussian_blobs(spec: &BlobSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| (0..spec.n_features).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();
    let rows = (0..spec.n_rows)
        .map(|i| {
            let c = i % spec.n_classes;
            DataRow {
                id: row_id(i),
                features: sample_around(&mut rng, &centers[c], spec.spread),
                label: class_label(c),
            }
        })
        .collect();
    Dataset::new("blobs", feature_names(spec.n_features), rows).expect("valid synthetic dataset")
}

/// Five overlapping classes plus a small, distant sub-population of the last
/// class. Learners only get that sub-population right when its rows are in
/// the training data.
#[derive(Debug, Clone)]
pub struct CaseStudyData {
    pub dataset: Dataset,
    /// Ids of the distant sub-population, in dataset order.
    pub outlier_ids: Vec<RowId>,
}

pub fn case_study(n_rows: usize, n_outliers: usize, seed: u64) -> CaseStudyData {
    const CLASSES: usize = 5;
    const FEATURES: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..CLASSES)
        .map(|c| {
            (0..FEATURES)
                .map(|j| if j == c { 3.0 } else { 0.0 } + rng.gen_range(-0.5..0.5))
                .collect()
        })
        .collect();
    let far: Vec<f64> = (0..FEATURES).map(|j| if j % 2 == 0 { -9.0 } else { 9.0 }).collect();
    let mut rows = Vec::with_capacity(n_rows);
    let mut outlier_ids = Vec::with_capacity(n_outliers);
    for i in 0..n_rows {
        let (features, label) = if i % (n_rows / n_outliers.max(1)).max(1) == 0 && outlier_ids.len() < n_outliers {
            outlier_ids.push(row_id(i));
            (sample_around(&mut rng, &far, 0.7), class_label(CLASSES - 1))
        } else {
            let c = i % CLASSES;
            (sample_around(&mut rng, &centers[c], 1.2), class_label(c))
        };
        rows.push(DataRow {
            id: row_id(i),
            features,
            label,
        });
    }
    CaseStudyData {
        dataset: Dataset::new("case-study", feature_names(FEATURES), rows)
            .expect("valid synthetic dataset"),
        outlier_ids,
    }
}
