use serde::Serialize;

/// Gaussian naive Bayes with variance smoothing.
///
/// `epsilon = var_smoothing * max feature variance` is added to every class
/// variance. Classes absent from the training rows get probability zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianNaiveBayes {
    pub var_smoothing: f64,
    pub epsilon: f64,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GaussianNaiveBayes {
    pub fn fit(x: &[&[f64]], y: &[usize], n_classes: usize, var_smoothing: f64) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut counts = vec![0usize; n_classes];
        let mut means = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        for (m, &cnt) in means.iter_mut().zip(&counts) {
            if cnt > 0 {
                m.iter_mut().for_each(|v| *v /= cnt as f64);
            }
        }
        let mut variances = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            for j in 0..d {
                let dv = row[j] - means[c][j];
                variances[c][j] += dv * dv;
            }
        }
        for (v, &cnt) in variances.iter_mut().zip(&counts) {
            if cnt > 0 {
                v.iter_mut().for_each(|s| *s /= cnt as f64);
            }
        }

        let max_var = (0..d)
            .map(|j| {
                let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
                x.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let epsilon = var_smoothing * if max_var > 0.0 { max_var } else { 1.0 };
        for v in variances.iter_mut().flatten() {
            *v += epsilon;
        }
        Self {
            var_smoothing,
            epsilon,
            priors: counts.iter().map(|&c| c as f64 / n).collect(),
            means,
            variances,
        }
    }

    pub fn predict_proba(&self, features: &[f64]) -> Vec<f64> {
        let log_joint: Vec<f64> = self
            .priors
            .iter()
            .enumerate()
            .map(|(c, &prior)| {
                if prior == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let ll: f64 = features
                    .iter()
                    .zip(self.means[c].iter().zip(&self.variances[c]))
                    .map(|(x, (m, v))| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
                    .sum();
                prior.ln() + ll
            })
            .collect();
        let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = log_joint.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        p
    }
}
