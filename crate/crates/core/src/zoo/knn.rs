use serde::Serialize;

use super::Scaler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Euclidean,
    Manhattan,
}

/// k-nearest-neighbour vote over standardized features.
///
/// Probabilities are vote shares among the `k` closest training rows;
/// distance ties go to the earlier training row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KNearestNeighbors {
    pub k: usize,
    pub distance: Distance,
    pub scaler: Scaler,
    #[serde(skip)]
    points: Vec<f64>,
    #[serde(skip)]
    labels: Vec<usize>,
    #[serde(skip)]
    n_classes: usize,
}

impl KNearestNeighbors {
    pub fn fit(x: &[&[f64]], y: &[usize], n_classes: usize, k: usize, distance: Distance) -> Self {
        let scaler = Scaler::fit(x);
        let points = x.iter().flat_map(|r| scaler.transform(r)).collect();
        Self {
            k: k.max(1),
            distance,
            scaler,
            points,
            labels: y.to_vec(),
            n_classes,
        }
    }

    pub fn predict_proba(&self, features: &[f64]) -> Vec<f64> {
        let q = self.scaler.transform(features);
        let d = q.len();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .chunks_exact(d.max(1))
            .enumerate()
            .map(|(i, p)| {
                let v = match self.distance {
                    Distance::Euclidean => p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(),
                    Distance::Manhattan => p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum(),
                };
                (v, i)
            })
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = vec![0.0; self.n_classes];
        for &(_, i) in &dist[..k] {
            votes[self.labels[i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= k as f64);
        votes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_neighbour_recovers_training_label() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 5.0]];
        let x: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let y = [0, 1, 0, 1];
        for distance in [Distance::Euclidean, Distance::Manhattan] {
            let m = KNearestNeighbors::fit(&x, &y, 2, 1, distance);
            for (p, &c) in x.iter().zip(&y) {
                assert_eq!(m.predict_proba(p)[c], 1.0);
            }
        }
    }

    #[test]
    fn k_larger_than_training_set_uses_everything() {
        let pts = [[0.0], [1.0], [2.0]];
        let x: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let m = KNearestNeighbors::fit(&x, &[0, 0, 1], 2, 25, Distance::Euclidean);
        let p = m.predict_proba(&[10.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
    }
}
