//! Synthetic tasks with chained label dependence.
//!
//! Features are i.i.d. standard normal. Labels are drawn by ancestral
//! sampling along the label order: label `k` is the indicator of a linear
//! score in the features and the already drawn labels, flipped with its own
//! noise rate.

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::data::{MultilabelDataset, Task};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// `y_k = 1{feature_weights·x + label_weights·(y_0..y_{k-1}) + bias > 0}`, then flipped with probability `noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRule {
    pub feature_weights: Vec<f64>,
    pub label_weights: Vec<f64>,
    pub bias: f64,
    pub noise: f64,
}

impl LabelRule {
    /// Linear rule on the features only.
    pub fn linear(feature_weights: Vec<f64>, bias: f64, noise: f64) -> Self {
        Self {
            feature_weights,
            label_weights: Vec::new(),
            bias,
            noise,
        }
    }

    /// `y_k := y_source` (before this rule's own noise).
    pub fn copy_of(source: usize, noise: f64) -> Self {
        let mut label_weights = vec![0.0; source + 1];
        label_weights[source] = 1.0;
        Self {
            feature_weights: Vec::new(),
            label_weights,
            bias: -0.5,
            noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceSpec {
    pub rules: Vec<LabelRule>,
}

impl DependenceSpec {
    fn validate(&self, p: usize) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::InvalidArgument("dependence spec has no labels".into()));
        }
        for (k, r) in self.rules.iter().enumerate() {
            if !(0.0..=1.0).contains(&r.noise) {
                return Err(Error::InvalidArgument(format!(
                    "noise rate {} of label {k} outside [0, 1]",
                    r.noise
                )));
            }
            if r.feature_weights.len() > p {
                return Err(Error::InvalidArgument(format!(
                    "label {k} has {} feature weights but p = {p}",
                    r.feature_weights.len()
                )));
            }
            if r.label_weights.len() > k {
                return Err(Error::InvalidArgument(format!(
                    "label {k} may only depend on earlier labels"
                )));
            }
        }
        Ok(())
    }
}

/// Generates an `n × p` task following `spec`; bit-reproducible for a fixed seed.
pub fn make_synthetic_task(n: usize, p: usize, spec: &DependenceSpec, seed: u64) -> Result<Task> {
    spec.validate(p)?;
    let m = spec.rules.len();
    let mut rng = seeded(seed);
    let features = Array2::from_shape_simple_fn((n, p), || rng.sample::<f64, _>(StandardNormal));
    let mut labels = Array2::<u8>::zeros((n, m));
    for i in 0..n {
        for (k, rule) in spec.rules.iter().enumerate() {
            let mut score = rule.bias;
            for (j, w) in rule.feature_weights.iter().enumerate() {
                score += w * features[[i, j]];
            }
            for (l, w) in rule.label_weights.iter().enumerate() {
                score += w * f64::from(labels[[i, l]]);
            }
            let mut y = u8::from(score > 0.0);
            // draw unconditionally so the stream layout does not depend on the noise rate
            let u: f64 = rng.random();
            if u < rule.noise {
                y = 1 - y;
            }
            labels[[i, k]] = y;
        }
    }
    let ds = MultilabelDataset::new(
        features,
        labels,
        (0..p).map(|j| format!("x{}", j + 1)).collect(),
        (0..m).map(|k| format!("y{}", k + 1)).collect(),
    )?;
    Task::new(format!("synthetic-{seed}"), ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copy_rule_duplicates_column() {
        let spec = DependenceSpec {
            rules: vec![LabelRule::linear(vec![1.0, -1.0], 0.0, 0.0), LabelRule::copy_of(0, 0.0)],
        };
        let task = make_synthetic_task(200, 2, &spec, 3).unwrap();
        let d = task.dataset();
        assert_eq!(d.label(0), d.label(1));
        assert!(d.prevalences()[0] > 0.2);
    }

    #[test]
    fn full_noise_gives_half_prevalence() {
        let spec = DependenceSpec {
            rules: (0..3).map(|_| LabelRule::linear(vec![1.0], 1.0, 0.5)).collect(),
        };
        let task = make_synthetic_task(10_000, 1, &spec, 11).unwrap();
        for p in task.dataset().prevalences() {
            assert!((p - 0.5).abs() <= 0.05, "prevalence {p}");
        }
    }

    #[test]
    fn same_seed_same_data() {
        let spec = DependenceSpec {
            rules: vec![
                LabelRule::linear(vec![0.3, 0.2, -0.4], 0.1, 0.2),
                LabelRule::copy_of(0, 0.1),
            ],
        };
        let a = make_synthetic_task(100, 3, &spec, 5).unwrap();
        let b = make_synthetic_task(100, 3, &spec, 5).unwrap();
        assert_eq!(a, b);
        let c = make_synthetic_task(100, 3, &spec, 6).unwrap();
        assert_ne!(a.dataset(), c.dataset());
    }

    #[test]
    fn invalid_noise_is_rejected() {
        let spec = DependenceSpec {
            rules: vec![LabelRule::linear(vec![1.0], 0.0, 1.5)],
        };
        assert!(make_synthetic_task(10, 1, &spec, 0).is_err());
    }
}
