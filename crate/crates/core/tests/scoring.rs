#[path = "support/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;
use std::sync::Mutex;

use cactus_core::data::{make_split, DataSplit, Dataset, RowId};
use cactus_core::scorer::{aggregate_score, select_from_pool, select_model_with, SolverOptions};
use cactus_core::synth::{gaussian_blobs, BlobSpec};
use cactus_core::zoo::{sample_configs, train, HyperparameterSpace};
use cactus_core::{score_objective, ObjectiveFunction, ObjectiveKind, ObjectiveSpec, ScoringContext};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64) -> (Dataset, DataSplit) {
    let ds = gaussian_blobs(&BlobSpec { n_rows: 160, n_classes: 3, n_features: 4, spread: 2.0, seed });
    let split = make_split(&ds, 0.25, seed).unwrap();
    (ds, split)
}

fn function(rng: &mut ChaCha8Rng, ds: &Dataset, split: &DataSplit) -> ObjectiveFunction {
    let ids: Vec<RowId> = split.train_ids.iter().cloned().collect();
    let mut of = oracles::random_function_over(rng, 1..=8, &ids, ds.label_domain());
    if of.total_weight() == 0.0 {
        of.objectives[0].weight = 1.0;
    }
    of.seed = rng.gen();
    of.n_samples = 6;
    of
}

fn solver() -> SolverOptions {
    SolverOptions { max_samples: Some(6), ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_scores_match_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, split) = setup(seed % 50);
        let of = function(&mut rng, &ds, &split);
        let ctx = ScoringContext::new(&of, &ds, &split).unwrap();
        let config = sample_configs(&HyperparameterSpace::default(), 1, seed).remove(0);
        let clf = train(&config, &ds, &ctx.effective_train_ids).unwrap();
        for (i, obj) in of.objectives.iter().enumerate() {
            let got = score_objective(&clf, i, obj, &ctx).unwrap();
            let expected = oracles::brute_score(&clf, obj, &ds, &split, &ctx.effective_train_ids);
            prop_assert!((got.score - expected).abs() < 1e-12, "{:?}: {} vs {}", obj.kind, got.score, expected);
            prop_assert!((0.0..=1.0).contains(&got.score));
        }
    }

    #[test]
    fn scaling_all_weights_keeps_the_winner(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, split) = setup(seed % 20);
        let of = function(&mut rng, &ds, &split);
        let base = select_model_with(&of, &ds, &split, &solver(), None).unwrap();
        for c in [0.1, 2.0, 10.0] {
            let mut scaled = of.clone();
            scaled.objectives.iter_mut().for_each(|o| o.weight *= c);
            let r = select_from_pool(&scaled, &base.all).unwrap();
            prop_assert_eq!(r.best.config.index, base.best.config.index);
        }
    }

    #[test]
    fn aggregate_stays_within_weighted_scores(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, split) = setup(seed % 20);
        let of = function(&mut rng, &ds, &split);
        let r = select_model_with(&of, &ds, &split, &solver(), None).unwrap();
        for e in &r.all {
            let weighted: Vec<f64> = e.per_objective.iter()
                .filter(|s| of.objectives[s.objective].weight > 0.0).map(|s| s.score).collect();
            let lo = weighted.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = weighted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= e.aggregate && e.aggregate <= hi);
            prop_assert_eq!(aggregate_score(&of, &e.per_objective).unwrap(), e.aggregate);
            prop_assert!(r.best.aggregate >= e.aggregate);
        }
    }

    #[test]
    fn ignored_rows_never_reach_a_learner(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, split) = setup(seed % 20);
        let mut of = function(&mut rng, &ds, &split);
        let ids: Vec<RowId> = split.train_ids.iter().take(30).cloned().collect();
        of.objectives.push(ObjectiveSpec::instance_set(ObjectiveKind::Ignore, None, ids, 0.5));
        let ignored: BTreeSet<usize> = of.objectives.iter()
            .filter(|o| o.kind == ObjectiveKind::Ignore)
            .flat_map(|o| o.ids.iter().map(|id| ds.position(id).unwrap()))
            .collect();
        let seen = Mutex::new(Vec::new());
        let observer = |_: &cactus_core::ModelConfig, rows: &[usize]| seen.lock().unwrap().push(rows.to_vec());
        select_model_with(&of, &ds, &split, &solver(), Some(&observer)).unwrap();
        let seen = seen.into_inner().unwrap();
        prop_assert_eq!(seen.len(), 6);
        for rows in seen {
            for p in rows {
                prop_assert!(!ignored.contains(&p));
                prop_assert!(split.train_ids.contains(&ds.rows()[p].id));
            }
        }
    }
}

#[test]
fn raising_critical_weight_never_lowers_its_score() {
    for seed in 0..10u64 {
        let (ds, split) = setup(seed);
        let critical: Vec<RowId> = split.train_ids.iter().step_by(5).cloned().collect();
        let of = ObjectiveFunction::new("f", "blobs")
            .with_objective(ObjectiveSpec::metric(ObjectiveKind::ValidationAccuracy, 0.7))
            .with_objective(ObjectiveSpec::metric(ObjectiveKind::F1Macro, 0.3))
            .with_objective(ObjectiveSpec::instance_set(ObjectiveKind::Critical, None, critical, 0.0));
        let options = SolverOptions { max_samples: Some(16), ..Default::default() };
        let pool = select_model_with(&of, &ds, &split, &options, None).unwrap().all;
        let mut last = f64::NEG_INFINITY;
        for w in [0.0, 0.1, 0.3, 0.6, 1.0] {
            let mut next = of.clone();
            next.objectives[2].weight = w;
            let score = select_from_pool(&next, &pool).unwrap().best.score_of(2).unwrap();
            assert!(score >= last, "seed {seed}: weight {w} dropped critical score {score} < {last}");
            last = score;
        }
    }
}

#[test]
fn selection_is_reproducible_and_rejects_zero_weights() {
    let (ds, split) = setup(3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let of = function(&mut rng, &ds, &split);
    let a = select_model_with(&of, &ds, &split, &solver(), None).unwrap();
    let b = select_model_with(&of, &ds, &split, &solver(), None).unwrap();
    assert_eq!(a, b);

    let mut zero = of.clone();
    zero.objectives.iter_mut().for_each(|o| o.weight = 0.0);
    let err = select_model_with(&zero, &ds, &split, &solver(), None).unwrap_err();
    assert_eq!(err.code(), "AllZeroWeights");
}
