//! Binary base learners.
//!
//! Every transformation method reduces its task to calls of [`fit_binary`]
//! on a numeric matrix and a 0/1 target. Three real learners are provided
//! (featureless majority, L2-regularized logistic regression, Gini tree) plus
//! test doubles used to observe what the transformation methods feed them.
//!
//! Training on a constant target never fails: the real learners fall back to
//! a constant predictor of that class.

mod logistic;
mod mock;
mod tree;

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

pub use logistic::{loss_and_gradient, LogisticModel, LogisticParams};
pub use mock::{FitRecord, Memorizer, Recorder};
pub use tree::{TreeModel, TreeNode, TreeParams};

/// Default probability threshold for hard labels.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Construction recipe for a binary classifier.
#[derive(Debug, Clone)]
pub enum BaseLearnerSpec {
    /// Predicts the training positive rate for every row.
    Featureless,
    Logistic(LogisticParams),
    Tree(TreeParams),
    /// Ignores data; label `k` gets `values[k % values.len()]`.
    MockConstant(Vec<u8>),
    /// Records every fit, then delegates to the wrapped learner.
    MockRecorder(Recorder),
    /// Exact lookup of training rows; unseen rows get the training positive rate.
    MockMemorizer,
    /// Returns the value of the column `offset` places from the right (0 = last column).
    MockCopyColumn(usize),
}

impl PartialEq for BaseLearnerSpec {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl BaseLearnerSpec {
    pub fn logistic() -> Self {
        BaseLearnerSpec::Logistic(LogisticParams::default())
    }

    pub fn tree() -> Self {
        BaseLearnerSpec::Tree(TreeParams::default())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BaseLearnerSpec::Featureless => "featureless",
            BaseLearnerSpec::Logistic(_) => "logistic",
            BaseLearnerSpec::Tree(_) => "tree",
            BaseLearnerSpec::MockConstant(_) => "mock_constant",
            BaseLearnerSpec::MockRecorder(_) => "mock_recorder",
            BaseLearnerSpec::MockMemorizer => "mock_memorizer",
            BaseLearnerSpec::MockCopyColumn(_) => "mock_copy_column",
        }
    }

    /// Builds a spec from a kind name and string hyperparameters, validating both.
    pub fn from_params(kind: &str, params: &BTreeMap<String, String>) -> Result<Self> {
        let mut params = Params::new(kind, params);
        let spec = match kind {
            "featureless" | "fl" => BaseLearnerSpec::Featureless,
            "logistic" => {
                let d = LogisticParams::default();
                BaseLearnerSpec::Logistic(LogisticParams {
                    learning_rate: params.f64("learning_rate", d.learning_rate)?,
                    iterations: params.usize("iterations", d.iterations)?,
                    l2: params.f64("l2", d.l2)?,
                })
            }
            "tree" => {
                let d = TreeParams::default();
                BaseLearnerSpec::Tree(TreeParams {
                    max_depth: params.usize("max_depth", d.max_depth)?,
                    min_split: params.usize("min_split", d.min_split)?,
                })
            }
            "mock_constant" => {
                let raw = params.take("values").unwrap_or_else(|| "0".into());
                let values = raw
                    .split('/')
                    .map(|v| match v.trim() {
                        "0" => Ok(0),
                        "1" => Ok(1),
                        other => Err(Error::InvalidHyperparameter(format!(
                            "mock_constant value `{other}` is not 0 or 1"
                        ))),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                BaseLearnerSpec::MockConstant(values)
            }
            "mock_recorder" => {
                let inner = params.take("inner").unwrap_or_else(|| "featureless".into());
                let inner = BaseLearnerSpec::from_params(&inner, &BTreeMap::new())?;
                BaseLearnerSpec::MockRecorder(Recorder::wrap(inner))
            }
            "mock_memorizer" => BaseLearnerSpec::MockMemorizer,
            "mock_copy_column" => BaseLearnerSpec::MockCopyColumn(params.usize("offset", 0)?),
            other => return Err(Error::InvalidHyperparameter(format!("unknown base learner `{other}`"))),
        };
        params.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `kind` or `kind:key=value,key=value`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidHyperparameter(format!("expected key=value, got `{pair}`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_params(kind.trim(), &params)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseLearnerSpec::Logistic(p) => p.validate(),
            BaseLearnerSpec::Tree(p) => p.validate(),
            BaseLearnerSpec::MockConstant(v) if v.is_empty() || v.iter().any(|&b| b > 1) => {
                Err(Error::InvalidHyperparameter("mock_constant needs 0/1 values".into()))
            }
            BaseLearnerSpec::MockRecorder(r) => r.inner().validate(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for BaseLearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseLearnerSpec::Logistic(p) => write!(
                f,
                "logistic:learning_rate={},iterations={},l2={}",
                p.learning_rate, p.iterations, p.l2
            ),
            BaseLearnerSpec::Tree(p) => {
                write!(f, "tree:max_depth={},min_split={}", p.max_depth, p.min_split)
            }
            BaseLearnerSpec::MockConstant(v) => {
                let vals: Vec<String> = v.iter().map(u8::to_string).collect();
                write!(f, "mock_constant:values={}", vals.join("/"))
            }
            BaseLearnerSpec::MockRecorder(r) => write!(f, "mock_recorder:inner={}", r.inner().kind()),
            BaseLearnerSpec::MockCopyColumn(o) => write!(f, "mock_copy_column:offset={o}"),
            other => f.write_str(other.kind()),
        }
    }
}

struct Params<'a> {
    kind: &'a str,
    remaining: BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    fn new(kind: &'a str, params: &BTreeMap<String, String>) -> Self {
        Self {
            kind,
            remaining: params.clone(),
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.remaining.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidHyperparameter(format!("{}: `{key}` = `{v}` is not a number", self.kind))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::InvalidHyperparameter(format!("{}: `{key}` = `{v}` is not a non-negative integer", self.kind))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        match self.remaining.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::InvalidHyperparameter(format!(
                "{} does not take `{k}`",
                self.kind
            ))),
        }
    }
}

/// Why a binary model is being fitted. Carried to the test doubles so they
/// can tell final per-label classifiers from internal cross-fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitRole {
    /// A standalone fit outside any transformation method.
    Single,
    /// The per-label classifier that produces the method's output.
    Final,
    /// A full-data first-level model (the BR stage of DBR and STA).
    FirstLevel,
    /// A model trained without one internal fold, used for out-of-sample labels.
    CrossFit { fold: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitContext {
    /// Original label index the model predicts.
    pub label: usize,
    pub role: FitRole,
}

impl Default for FitContext {
    fn default() -> Self {
        Self {
            label: 0,
            role: FitRole::Single,
        }
    }
}

/// Fitted parameters, one variant per learner family.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedState {
    Constant(f64),
    Featureless,
    Logistic(LogisticModel),
    Tree(TreeModel),
    Memorizer(Memorizer),
    CopyColumn(usize),
}

/// A fitted binary classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    input_dimension: usize,
    train_positive_rate: f64,
    state: FittedState,
}

impl BinaryModel {
    pub(crate) fn from_parts(input_dimension: usize, train_positive_rate: f64, state: FittedState) -> Self {
        Self {
            input_dimension,
            train_positive_rate,
            state,
        }
    }

    pub fn input_dimension(&self) -> usize {
        self.input_dimension
    }

    pub fn train_positive_rate(&self) -> f64 {
        self.train_positive_rate
    }

    pub fn state(&self) -> &FittedState {
        &self.state
    }

    pub fn predict_prob(&self, features: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if features.ncols() != self.input_dimension {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} input columns, got {}",
                self.input_dimension,
                features.ncols()
            )));
        }
        let n = features.nrows();
        let probs = match &self.state {
            FittedState::Constant(p) => Array1::from_elem(n, *p),
            FittedState::Featureless => Array1::from_elem(n, self.train_positive_rate),
            FittedState::Logistic(m) => m.predict_prob(features),
            FittedState::Tree(t) => t.predict_prob(features),
            FittedState::Memorizer(m) => m.predict_prob(features, self.train_positive_rate),
            FittedState::CopyColumn(offset) => {
                if *offset >= self.input_dimension {
                    Array1::from_elem(n, self.train_positive_rate)
                } else {
                    features
                        .column(self.input_dimension - 1 - offset)
                        .mapv(|v| v.clamp(0.0, 1.0))
                }
            }
        };
        Ok(probs)
    }

    /// Hard labels: 1 iff the probability is at least `threshold`.
    pub fn predict_label(&self, features: ArrayView2<'_, f64>, threshold: f64) -> Result<Array1<u8>> {
        check_threshold(threshold)?;
        Ok(self.predict_prob(features)?.mapv(|p| u8::from(p >= threshold)))
    }
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold {threshold} must lie strictly between 0 and 1"
        )))
    }
}

/// Fits `spec` on `(features, target)` outside any transformation method.
pub fn fit_binary(
    spec: &BaseLearnerSpec,
    features: ArrayView2<'_, f64>,
    target: ArrayView1<'_, u8>,
) -> Result<BinaryModel> {
    fit_binary_with(spec, features, target, FitContext::default())
}

/// As [`fit_binary`], with the label index and role passed through to the learner.
pub fn fit_binary_with(
    spec: &BaseLearnerSpec,
    features: ArrayView2<'_, f64>,
    target: ArrayView1<'_, u8>,
    ctx: FitContext,
) -> Result<BinaryModel> {
    let n = features.nrows();
    if n == 0 || n != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows but {} targets",
            target.len()
        )));
    }
    if target.iter().any(|&v| v > 1) {
        return Err(Error::InvalidArgument("target must be 0/1".into()));
    }
    spec.validate()?;
    let p = features.ncols();
    let positives = target.iter().filter(|&&v| v == 1).count();
    let rate = positives as f64 / n as f64;
    let constant_target = positives == 0 || positives == n;

    let state = match spec {
        BaseLearnerSpec::Featureless => FittedState::Featureless,
        BaseLearnerSpec::Logistic(_) | BaseLearnerSpec::Tree(_) if constant_target => FittedState::Constant(rate),
        BaseLearnerSpec::Logistic(params) => FittedState::Logistic(LogisticModel::fit(params, features, target)),
        BaseLearnerSpec::Tree(params) => FittedState::Tree(TreeModel::fit(params, features, target)),
        BaseLearnerSpec::MockConstant(values) => FittedState::Constant(f64::from(values[ctx.label % values.len()])),
        BaseLearnerSpec::MockRecorder(recorder) => {
            recorder.record(ctx, features, target);
            return fit_binary_with(recorder.inner(), features, target, ctx);
        }
        BaseLearnerSpec::MockMemorizer => FittedState::Memorizer(Memorizer::fit(features, target)),
        BaseLearnerSpec::MockCopyColumn(offset) => FittedState::CopyColumn(*offset),
    };
    Ok(BinaryModel::from_parts(p, rate, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn featureless_positive_rate() {
        let x = Array2::<f64>::zeros((4, 0));
        let m = fit_binary(&BaseLearnerSpec::Featureless, x.view(), array![1u8, 1, 0, 0].view()).unwrap();
        assert_eq!(m.train_positive_rate(), 0.5);
        let probs = m.predict_prob(Array2::<f64>::zeros((3, 0)).view()).unwrap();
        assert_eq!(probs.to_vec(), vec![0.5; 3]);
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        let m = BinaryModel::from_parts(1, 0.5, FittedState::Featureless);
        let x = array![[0.0], [1.0]];
        assert_eq!(m.predict_label(x.view(), 0.5).unwrap().to_vec(), vec![1, 1]);
        let m = BinaryModel::from_parts(1, 0.49, FittedState::Featureless);
        assert_eq!(m.predict_label(x.view(), 0.5).unwrap().to_vec(), vec![0, 0]);
    }

    #[test]
    fn labels_from_probabilities() {
        let m = BinaryModel::from_parts(1, 0.0, FittedState::CopyColumn(0));
        let x = array![[0.4], [0.5], [0.6]];
        assert_eq!(m.predict_label(x.view(), 0.5).unwrap().to_vec(), vec![0, 1, 1]);
        assert!(m.predict_label(x.view(), 1.0).is_err());
        assert!(m.predict_label(x.view(), 0.0).is_err());
    }

    #[test]
    fn dimension_is_enforced() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let m = fit_binary(&BaseLearnerSpec::logistic(), x.view(), array![0u8, 1].view()).unwrap();
        assert_eq!(m.input_dimension(), 2);
        assert!(matches!(
            m.predict_prob(array![[1.0]].view()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(fit_binary(&BaseLearnerSpec::logistic(), x.view(), array![0u8].view()).is_err());
    }

    #[test]
    fn constant_targets_give_constant_predictors() {
        let x = array![[1.0, -1.0], [2.0, 0.0], [3.0, 5.0]];
        for spec in [
            BaseLearnerSpec::Featureless,
            BaseLearnerSpec::logistic(),
            BaseLearnerSpec::tree(),
        ] {
            for class in [0u8, 1] {
                let y = Array1::from_elem(3, class);
                let m = fit_binary(&spec, x.view(), y.view()).unwrap();
                let p = m.predict_prob(array![[9.0, 9.0], [-4.0, 0.5]].view()).unwrap();
                assert_eq!(p.to_vec(), vec![f64::from(class); 2], "{spec}");
            }
        }
    }

    #[test]
    fn mock_constant_cycles_by_label() {
        let spec = BaseLearnerSpec::MockConstant(vec![1, 0, 1]);
        let x = array![[0.0], [1.0]];
        let y = array![0u8, 0];
        for (label, want) in [(0, 1.0), (1, 0.0), (2, 1.0), (3, 1.0)] {
            let ctx = FitContext {
                label,
                role: FitRole::Final,
            };
            let m = fit_binary_with(&spec, x.view(), y.view(), ctx).unwrap();
            assert_eq!(m.predict_prob(x.view()).unwrap().to_vec(), vec![want; 2]);
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for text in [
            "featureless",
            "logistic:learning_rate=0.05,iterations=200,l2=0.001",
            "tree:max_depth=3,min_split=2",
            "mock_constant:values=1/0/1",
            "mock_recorder:inner=mock_memorizer",
            "mock_memorizer",
            "mock_copy_column:offset=1",
        ] {
            let spec = BaseLearnerSpec::parse(text).unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert_eq!(
            BaseLearnerSpec::parse("tree").unwrap().to_string(),
            "tree:max_depth=8,min_split=5"
        );
    }

    #[test]
    fn bad_hyperparameters_are_rejected() {
        for text in [
            "tree:depth=3",
            "tree:min_split=1",
            "logistic:learning_rate=-1",
            "logistic:iterations=abc",
            "mock_constant:values=2",
            "forest",
            "tree:max_depth",
        ] {
            assert!(BaseLearnerSpec::parse(text).is_err(), "{text}");
        }
    }

    fn arb_problem() -> impl Strategy<Value = (Array2<f64>, Array1<u8>, Array2<f64>)> {
        (2usize..12, 1usize..4).prop_flat_map(|(n, p)| {
            (
                proptest::collection::vec(-50.0f64..50.0, n * p),
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(-1e3f64..1e3, 5 * p),
            )
                .prop_map(move |(x, y, t)| {
                    (
                        Array2::from_shape_vec((n, p), x).unwrap(),
                        Array1::from(y),
                        Array2::from_shape_vec((5, p), t).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn probabilities_lie_in_unit_interval((x, y, test) in arb_problem()) {
            let specs = [
                BaseLearnerSpec::Featureless,
                BaseLearnerSpec::Logistic(LogisticParams { iterations: 50, ..Default::default() }),
                BaseLearnerSpec::Tree(TreeParams { max_depth: 3, min_split: 2 }),
                BaseLearnerSpec::MockMemorizer,
                BaseLearnerSpec::MockCopyColumn(0),
            ];
            for spec in &specs {
                let m = fit_binary(spec, x.view(), y.view()).unwrap();
                for p in m.predict_prob(test.view()).unwrap() {
                    prop_assert!((0.0..=1.0).contains(&p), "{} gave {}", spec, p);
                }
            }
        }
    }
}
