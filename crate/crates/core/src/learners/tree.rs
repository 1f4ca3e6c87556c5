use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// CART-style classification tree grown with the Gini criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Nodes with fewer rows are not split.
    pub min_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_split: 5,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.min_split < 2 {
            return Err(Error::InvalidHyperparameter(format!(
                "tree min_split must be at least 2, got {}",
                self.min_split
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Positive fraction of the training rows that reached this leaf.
    Leaf { prob: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

impl TreeModel {
    pub(crate) fn fit(params: &TreeParams, features: ArrayView2<'_, f64>, target: ArrayView1<'_, u8>) -> Self {
        let mut tree = TreeModel { nodes: Vec::new() };
        let rows: Vec<usize> = (0..features.nrows()).collect();
        tree.grow(params, features, target, rows, 0);
        tree
    }

    fn grow(
        &mut self,
        params: &TreeParams,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, u8>,
        rows: Vec<usize>,
        depth: usize,
    ) -> usize {
        let id = self.nodes.len();
        let pos = rows.iter().filter(|&&i| y[i] == 1).count();
        let prob = pos as f64 / rows.len() as f64;
        self.nodes.push(TreeNode::Leaf { prob });

        let pure = pos == 0 || pos == rows.len();
        if pure || depth >= params.max_depth || rows.len() < params.min_split {
            return id;
        }
        let Some(best) = best_split(x, y, &rows) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| x[[i, best.feature]] <= best.threshold);
        let left = self.grow(params, x, y, left_rows, depth + 1);
        let right = self.grow(params, x, y, right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    pub(crate) fn predict_prob(&self, features: ArrayView2<'_, f64>) -> Array1<f64> {
        features
            .rows()
            .into_iter()
            .map(|row| {
                let mut node = 0;
                loop {
                    match &self.nodes[node] {
                        TreeNode::Leaf { prob } => break *prob,
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => node = if row[*feature] <= *threshold { *left } else { *right },
                    }
                }
            })
            .collect()
    }
}

/// Lowest weighted child Gini over all features and midpoints between
/// consecutive distinct values. Ties keep the first candidate found (lowest
/// feature, then lowest threshold). A zero-gain split is still accepted, which
/// lets depth-2 trees solve XOR.
fn best_split(x: ArrayView2<'_, f64>, y: ArrayView1<'_, u8>, rows: &[usize]) -> Option<Candidate> {
    let n = rows.len() as f64;
    let total_pos = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
    let mut best: Option<Candidate> = None;
    let mut sorted = rows.to_vec();
    for j in 0..x.ncols() {
        sorted.sort_by(|&a, &b| x[[a, j]].total_cmp(&x[[b, j]]));
        let mut left_pos = 0.0;
        for s in 0..sorted.len() - 1 {
            left_pos += f64::from(y[sorted[s]]);
            let (lo, hi) = (x[[sorted[s], j]], x[[sorted[s + 1], j]]);
            if lo == hi {
                continue;
            }
            let left_n = (s + 1) as f64;
            let right_n = n - left_n;
            let impurity = (left_n * gini(left_pos, left_n) + right_n * gini(total_pos - left_pos, right_n)) / n;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Candidate {
                    feature: j,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{fit_binary, BaseLearnerSpec};
    use crate::rng::seeded;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn training_errors(depth: usize, x: &Array2<f64>, y: &Array1<u8>) -> usize {
        let spec = BaseLearnerSpec::Tree(TreeParams {
            max_depth: depth,
            min_split: 2,
        });
        let m = fit_binary(&spec, x.view(), y.view()).unwrap();
        let pred = m.predict_label(x.view(), 0.5).unwrap();
        pred.iter().zip(y).filter(|(a, b)| a != b).count()
    }

    #[test]
    fn depth_two_solves_xor() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = array![0u8, 1, 1, 0];
        assert_eq!(training_errors(2, &x, &y), 0);
        assert!(training_errors(1, &x, &y) > 0);
    }

    #[test]
    fn depth_zero_is_a_single_leaf() {
        let x = array![[0.0], [1.0], [2.0]];
        let y = array![0u8, 1, 1];
        let m = TreeModel::fit(
            &TreeParams {
                max_depth: 0,
                min_split: 2,
            },
            x.view(),
            y.view(),
        );
        assert_eq!(m.nodes, vec![TreeNode::Leaf { prob: 2.0 / 3.0 }]);
    }

    #[test]
    fn min_split_stops_growth() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = array![0u8, 0, 1, 1];
        let m = TreeModel::fit(
            &TreeParams {
                max_depth: 5,
                min_split: 5,
            },
            x.view(),
            y.view(),
        );
        assert_eq!(m.nodes.len(), 1);
        let m = TreeModel::fit(
            &TreeParams {
                max_depth: 5,
                min_split: 4,
            },
            x.view(),
            y.view(),
        );
        assert_eq!(
            m.nodes[0],
            TreeNode::Split {
                feature: 0,
                threshold: 1.5,
                left: 1,
                right: 2
            }
        );
    }

    #[test]
    fn training_error_is_monotone_in_depth() {
        let mut rng = seeded(17);
        for _ in 0..20 {
            let x = Array2::from_shape_simple_fn((40, 3), || rng.random_range(0..4) as f64);
            let y = Array1::from_shape_simple_fn(40, || rng.random_range(0..2u8));
            let errors: Vec<usize> = (0..8).map(|d| training_errors(d, &x, &y)).collect();
            assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
        }
    }
}
