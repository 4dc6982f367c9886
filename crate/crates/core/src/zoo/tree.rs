//! CART classification tree with greedy Gini splits.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        samples: usize,
        impurity: f64,
        distribution: Vec<f64>,
    },
    Split {
        samples: usize,
        impurity: f64,
        /// Sample-weighted impurity of the two children.
        split_impurity: f64,
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionTree {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub root: TreeNode,
}

pub(crate) fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

struct Builder<'a> {
    x: &'a [&'a [f64]],
    y: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    min_leaf: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    fn best_split(&self, rows: &[usize], parent: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let d = self.x[rows[0]].len();
        let mut best: Option<BestSplit> = None;
        let mut order = rows.to_vec();
        for feature in 0..d {
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            let mut right = parent.to_vec();
            for i in 0..n - 1 {
                let cls = self.y[order[i]];
                left[cls] += 1;
                right[cls] -= 1;
                let (nl, nr) = (i + 1, n - i - 1);
                let (here, next) = (self.x[order[i]][feature], self.x[order[i + 1]][feature]);
                if here == next || nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.as_ref().map_or(true, |b| impurity < b.impurity) {
                    let mid = here + (next - here) / 2.0;
                    // Midpoint can round up to `next` for adjacent floats.
                    let threshold = if mid < next { mid } else { here };
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn build(&self, rows: &[usize], depth: usize) -> TreeNode {
        let counts = self.counts(rows);
        let n = rows.len();
        let impurity = gini(&counts, n);
        let leaf = |counts: &[usize]| TreeNode::Leaf {
            samples: n,
            impurity,
            distribution: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        };
        if depth >= self.max_depth || impurity == 0.0 || n < 2 * self.min_leaf {
            return leaf(&counts);
        }
        match self.best_split(rows, &counts) {
            Some(split) if split.impurity < impurity => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| self.x[i][split.feature] <= split.threshold);
                TreeNode::Split {
                    samples: n,
                    impurity,
                    split_impurity: split.impurity,
                    feature: split.feature,
                    threshold: split.threshold,
                    left: Box::new(self.build(&l, depth + 1)),
                    right: Box::new(self.build(&r, depth + 1)),
                }
            }
            _ => leaf(&counts),
        }
    }
}

impl DecisionTree {
    pub fn fit(
        x: &[&[f64]],
        y: &[usize],
        n_classes: usize,
        max_depth: usize,
        min_leaf: usize,
    ) -> Self {
        let builder = Builder {
            x,
            y,
            n_classes,
            max_depth,
            min_leaf: min_leaf.max(1),
        };
        let rows: Vec<usize> = (0..x.len()).collect();
        Self {
            max_depth,
            min_leaf,
            root: builder.build(&rows, 0),
        }
    }

    pub fn predict_proba(&self, features: &[f64]) -> Vec<f64> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { distribution, .. } => return distribution.clone(),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if features[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    /// Every internal node in pre-order.
    pub fn splits(&self) -> Vec<&TreeNode> {
        fn walk<'a>(n: &'a TreeNode, out: &mut Vec<&'a TreeNode>) {
            if let TreeNode::Split { left, right, .. } = n {
                out.push(n);
                walk(left, out);
                walk(right, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0], 4), 0.0);
        assert_eq!(gini(&[2, 2], 4), 0.5);
        assert!((gini(&[1, 1, 1], 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn separable_data_fits_exactly() {
        let pts = [[0.1, 5.0], [0.3, 1.0], [0.2, 3.0], [0.9, 4.0], [0.8, 2.0], [0.7, 0.5]];
        let x: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let y = [0, 0, 0, 1, 1, 1];
        let tree = DecisionTree::fit(&x, &y, 2, 12, 1);
        assert_eq!(tree.depth(), 1);
        for (p, &c) in x.iter().zip(&y) {
            assert_eq!(tree.predict_proba(p)[c], 1.0);
        }
    }

    #[test]
    fn depth_and_leaf_limits_hold() {
        let pts: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let x: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let y: Vec<usize> = (0..40).map(|i| (i / 3) % 2).collect();
        let tree = DecisionTree::fit(&x, &y, 2, 3, 4);
        assert!(tree.depth() <= 3);
        fn leaves_ok(n: &TreeNode, min: usize) -> bool {
            match n {
                TreeNode::Leaf { samples, .. } => *samples >= min,
                TreeNode::Split { left, right, .. } => leaves_ok(left, min) && leaves_ok(right, min),
            }
        }
        assert!(leaves_ok(&tree.root, 4));
    }

    #[test]
    fn split_impurity_never_exceeds_parent() {
        let pts: Vec<[f64; 2]> = (0..60)
            .map(|i| [((i * 37) % 17) as f64, ((i * 11) % 7) as f64])
            .collect();
        let x: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let y: Vec<usize> = (0..60).map(|i| (i * 7 % 5) % 3).collect();
        let tree = DecisionTree::fit(&x, &y, 3, 8, 1);
        for node in tree.splits() {
            if let TreeNode::Split {
                impurity,
                split_impurity,
                ..
            } = node
            {
                assert!(split_impurity <= impurity);
            }
        }
    }
}
