#[path = "support/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;

use cactus_core::synth::{gaussian_blobs, BlobSpec};
use cactus_core::zoo::cross_entropy_loss_and_gradient;
use cactus_core::zoo::{fit, sample_configs, train, HyperparameterSpace, LearnerKind, ModelConfig, ParamValue};
use cactus_core::RowId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_ids(ds: &cactus_core::Dataset) -> BTreeSet<RowId> {
    ds.rows().iter().map(|r| r.id.clone()).collect()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for probe in 0..20 {
        let n_classes = rng.gen_range(2..5);
        let d = rng.gen_range(1..6);
        let n = rng.gen_range(5..40);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let x: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n_classes)).collect();
        let w: Vec<f64> = (0..n_classes * (d + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l2 = [0.0, 1e-3, 0.5][probe % 3];
        let (_, analytic) = cross_entropy_loss_and_gradient(&w, n_classes, &x, &y, l2);
        let numeric = oracles::finite_difference(
            |v| cross_entropy_loss_and_gradient(v, n_classes, &x, &y, l2).0,
            &w,
            1e-6,
        );
        let err = oracles::relative_error(&analytic, &numeric);
        assert!(err < 1e-5, "probe {probe}: relative error {err}");
    }
}

#[test]
fn deep_tree_fits_separable_data() {
    let ds = gaussian_blobs(&BlobSpec { n_rows: 300, n_classes: 4, n_features: 3, spread: 0.3, seed: 8 });
    let config = ModelConfig::new(0, LearnerKind::DecisionTree, 1)
        .with("max_depth", ParamValue::Int(12))
        .with("min_leaf", ParamValue::Int(1));
    let clf = train(&config, &ds, &all_ids(&ds)).unwrap();
    let preds = clf.predict(ds.rows()).unwrap();
    let hits = preds.iter().zip(ds.rows()).filter(|(p, r)| p.label == r.label).count();
    assert_eq!(hits, ds.len());
}

#[test]
fn one_neighbour_recovers_training_rows() {
    let ds = gaussian_blobs(&BlobSpec { n_rows: 150, n_classes: 3, n_features: 4, spread: 2.5, seed: 4 });
    for distance in ["euclidean", "manhattan"] {
        let config = ModelConfig::new(0, LearnerKind::KNearestNeighbors, 1)
            .with("k", ParamValue::Int(1))
            .with("distance", ParamValue::Text(distance.into()));
        let clf = train(&config, &ds, &all_ids(&ds)).unwrap();
        for (p, r) in clf.predict(ds.rows()).unwrap().iter().zip(ds.rows()) {
            assert_eq!(p.label, r.label);
        }
    }
}

#[test]
fn single_class_training_is_degenerate() {
    let labels = vec!["a".to_string(), "b".to_string()];
    let rows = [[0.0, 1.0], [2.0, 3.0]];
    let x: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    for config in sample_configs(&HyperparameterSpace::default(), 12, 3) {
        let clf = fit(&config, &labels, &x, &[1, 1]).unwrap();
        assert!(clf.degenerate);
        assert_eq!(clf.predict_proba(&[9.0, 9.0]).unwrap(), vec![0.0, 1.0]);
    }
}

#[test]
fn arity_mismatch_is_rejected() {
    let ds = gaussian_blobs(&BlobSpec::default());
    let config = sample_configs(&HyperparameterSpace::default(), 1, 0).remove(0);
    let clf = train(&config, &ds, &all_ids(&ds)).unwrap();
    assert_eq!(clf.predict_proba(&[1.0]).unwrap_err().code(), "ArityMismatch");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probabilities_form_a_distribution(seed in any::<u64>(), data_seed in 0u64..1000) {
        let ds = gaussian_blobs(&BlobSpec { n_rows: 90, n_classes: 3, n_features: 3, spread: 1.5, seed: data_seed });
        let config = sample_configs(&HyperparameterSpace::default(), 1, seed).remove(0);
        let clf = train(&config, &ds, &all_ids(&ds)).unwrap();
        for p in clf.predict(ds.rows()).unwrap() {
            prop_assert_eq!(p.probabilities.len(), 3);
            prop_assert!(p.probabilities.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(&ds.label_domain()[p.label_index], &p.label);
        }
    }

    #[test]
    fn training_is_deterministic(seed in any::<u64>()) {
        let ds = gaussian_blobs(&BlobSpec { n_rows: 60, n_classes: 2, n_features: 3, spread: 1.0, seed: 1 });
        let config = sample_configs(&HyperparameterSpace::default(), 1, seed).remove(0);
        let a = train(&config, &ds, &all_ids(&ds)).unwrap();
        let b = train(&config, &ds, &all_ids(&ds)).unwrap();
        prop_assert_eq!(a.model_card(), b.model_card());
        prop_assert_eq!(a.predict(ds.rows()).unwrap(), b.predict(ds.rows()).unwrap());
    }

    #[test]
    fn sampled_configs_stay_in_their_domains(seed in any::<u64>(), n in 1usize..50) {
        let space = HyperparameterSpace::default();
        let configs = sample_configs(&space, n, seed);
        prop_assert_eq!(&configs, &sample_configs(&space, n, seed));
        for (i, c) in configs.iter().enumerate() {
            prop_assert_eq!(c.index, i);
            for (name, domain) in &space.learners[&c.learner] {
                prop_assert!(domain.contains(&c.params[name]), "{} out of domain", name);
            }
        }
    }
}
