//! Multinomial logistic regression trained by full-batch gradient descent.

use serde::Serialize;

use super::Scaler;

/// Row-major `n_classes x (n_features + 1)` weights; column 0 is the bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticRegression {
    pub l2_strength: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub scaler: Scaler,
    pub n_classes: usize,
    pub weights: Vec<f64>,
}

fn softmax_into(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    logits.iter_mut().for_each(|v| *v /= total);
}

fn logits(weights: &[f64], n_classes: usize, row: &[f64], out: &mut [f64]) {
    let stride = row.len() + 1;
    for (c, o) in out.iter_mut().enumerate().take(n_classes) {
        let w = &weights[c * stride..(c + 1) * stride];
        *o = w[0] + w[1..].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Mean cross-entropy plus `l2 / 2 * ||W||^2` (bias excluded), and its
/// gradient with respect to the flattened weights.
pub fn cross_entropy_loss_and_gradient(
    weights: &[f64],
    n_classes: usize,
    x: &[&[f64]],
    y: &[usize],
    l2: f64,
) -> (f64, Vec<f64>) {
    let d = x.first().map_or(0, |r| r.len());
    let stride = d + 1;
    assert_eq!(weights.len(), n_classes * stride);
    let n = x.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    let mut p = vec![0.0; n_classes];
    for (row, &target) in x.iter().zip(y) {
        logits(weights, n_classes, row, &mut p);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + p.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss -= p[target] - lse;
        softmax_into(&mut p);
        for c in 0..n_classes {
            let residual = p[c] - if c == target { 1.0 } else { 0.0 };
            let g = &mut grad[c * stride..(c + 1) * stride];
            g[0] += residual;
            for (gj, xj) in g[1..].iter_mut().zip(row.iter()) {
                *gj += residual * xj;
            }
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for c in 0..n_classes {
        for j in 1..stride {
            let w = weights[c * stride + j];
            loss += 0.5 * l2 * w * w;
            grad[c * stride + j] += l2 * w;
        }
    }
    (loss, grad)
}

impl LogisticRegression {
    pub fn fit(
        x: &[&[f64]],
        y: &[usize],
        n_classes: usize,
        l2_strength: f64,
        epochs: usize,
        learning_rate: f64,
    ) -> Self {
        let scaler = Scaler::fit(x);
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| scaler.transform(r)).collect();
        let rows: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let d = scaler.mean.len();
        let mut weights = vec![0.0; n_classes * (d + 1)];
        for _ in 0..epochs {
            let (_, grad) = cross_entropy_loss_and_gradient(&weights, n_classes, &rows, y, l2_strength);
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= learning_rate * g;
            }
        }
        Self {
            l2_strength,
            epochs,
            learning_rate,
            scaler,
            n_classes,
            weights,
        }
    }

    pub fn predict_proba(&self, features: &[f64]) -> Vec<f64> {
        let row = self.scaler.transform(features);
        let mut p = vec![0.0; self.n_classes];
        logits(&self.weights, self.n_classes, &row, &mut p);
        softmax_into(&mut p);
        p
    }
}
