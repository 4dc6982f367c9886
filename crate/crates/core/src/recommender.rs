//! Weight recommendations from iteration history.
//!
//! Until enough iterations exist, every objective gets a seeded random
//! weight. Afterwards each objective's recommendation is a softmax-weighted
//! mean of the weights it had in past iterations, where an iteration's mass
//! grows with both its overall validation accuracy and that objective's own
//! score.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::objective::{ObjectiveFunction, ObjectiveKey};

/// One trained iteration, keyed by objective identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub weights: BTreeMap<ObjectiveKey, f64>,
    pub scores: BTreeMap<ObjectiveKey, f64>,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecommenderConfig {
    /// Blend between overall accuracy (1.0) and the objective's score (0.0).
    pub alpha: f64,
    /// Softmax inverse temperature.
    pub beta: f64,
    /// Iterations required before history drives recommendations.
    pub warmup: usize,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 5.0,
            warmup: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    WarmupRandom,
    HistoryDerived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedWeight {
    pub objective: usize,
    pub key: ObjectiveKey,
    pub weight: f64,
    pub display: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecommendation {
    pub weights: Vec<RecommendedWeight>,
}

impl WeightRecommendation {
    pub fn get(&self, key: &ObjectiveKey) -> Option<&RecommendedWeight> {
        self.weights.iter().find(|w| &w.key == key)
    }
}

fn warmup_weight(seed: u64, iterations: usize, key: &ObjectiveKey) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((iterations as u64).to_le_bytes());
    h.update(key.to_string().as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest).gen_range(0.0..=1.0)
}

/// Softmax masses over `utilities`, computed stably.
pub fn softmax(utilities: &[f64], beta: f64) -> Vec<f64> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = utilities.iter().map(|u| (beta * (u - max)).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

pub fn recommend_weights(
    history: &[IterationRecord],
    of: &ObjectiveFunction,
    seed: u64,
) -> WeightRecommendation {
    recommend_weights_with(history, of, seed, &RecommenderConfig::default())
}

pub fn recommend_weights_with(
    history: &[IterationRecord],
    of: &ObjectiveFunction,
    seed: u64,
    config: &RecommenderConfig,
) -> WeightRecommendation {
    let weights = of
        .objectives
        .iter()
        .enumerate()
        .map(|(objective, spec)| {
            let key = spec.key();
            let observed: Vec<(f64, f64)> = if history.len() < config.warmup {
                Vec::new()
            } else {
                history
                    .iter()
                    .filter_map(|h| {
                        let w = h.weights.get(&key)?;
                        let s = h.scores.get(&key)?;
                        let utility = config.alpha * h.validation_accuracy + (1.0 - config.alpha) * s;
                        Some((utility, *w))
                    })
                    .collect()
            };
            let (weight, provenance) = if observed.is_empty() {
                (warmup_weight(seed, history.len(), &key), Provenance::WarmupRandom)
            } else {
                let utilities: Vec<f64> = observed.iter().map(|(u, _)| *u).collect();
                let lambda = softmax(&utilities, config.beta);
                let lo = observed.iter().map(|(_, w)| *w).fold(f64::INFINITY, f64::min);
                let hi = observed.iter().map(|(_, w)| *w).fold(f64::NEG_INFINITY, f64::max);
                let mean: f64 = lambda.iter().zip(&observed).map(|(l, (_, w))| l * w).sum();
                (mean.clamp(lo, hi), Provenance::HistoryDerived)
            };
            RecommendedWeight {
                objective,
                key,
                display: (weight * 100.0).round() / 100.0,
                weight,
                provenance,
            }
        })
        .collect();
    WeightRecommendation { weights }
}
