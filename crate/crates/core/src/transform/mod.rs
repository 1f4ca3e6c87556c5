//! The five problem-transformation meta-learners.
//!
//! | method | extra inputs of the classifier for label `k`        | label information |
//! |--------|------------------------------------------------------|-------------------|
//! | BR     | none                                                 | -                 |
//! | CC     | labels preceding `k` in the chain order              | true              |
//! | NST    | labels preceding `k` in the chain order              | cross-fitted      |
//! | DBR    | all labels except `k`                                | true              |
//! | STA    | all labels, `k` included                             | cross-fitted      |
//!
//! Augmenting columns are always hard 0/1 labels. At prediction time CC and
//! NST predict along the chain, feeding earlier predictions forward; DBR and
//! STA first run a BR model and feed its predictions to the per-label
//! meta classifiers.

mod fit;
mod predict;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learners::{BaseLearnerSpec, BinaryModel, DEFAULT_THRESHOLD};
use crate::rng;

pub use fit::{
    cross_fit_labels, fit_binary_relevance, fit_classifier_chains, fit_dbr, fit_nested_stacking, fit_stacking,
    out_of_sample_labels,
};
pub use predict::predict_multilabel;

/// Default number of internal folds for cross-fitted labels.
pub const DEFAULT_INTERNAL_FOLDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    BinaryRelevance,
    ClassifierChains,
    NestedStacking,
    DependentBinaryRelevance,
    Stacking,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::BinaryRelevance,
        Method::ClassifierChains,
        Method::NestedStacking,
        Method::DependentBinaryRelevance,
        Method::Stacking,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Method::BinaryRelevance => "BR",
            Method::ClassifierChains => "CC",
            Method::NestedStacking => "NST",
            Method::DependentBinaryRelevance => "DBR",
            Method::Stacking => "STA",
        }
    }

    pub fn uses_chain(self) -> bool {
        matches!(self, Method::ClassifierChains | Method::NestedStacking)
    }

    pub fn uses_internal_cv(self) -> bool {
        matches!(self, Method::NestedStacking | Method::Stacking)
    }

    pub fn has_first_level(self) -> bool {
        matches!(self, Method::DependentBinaryRelevance | Method::Stacking)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BR" => Ok(Method::BinaryRelevance),
            "CC" => Ok(Method::ClassifierChains),
            "NST" => Ok(Method::NestedStacking),
            "DBR" => Ok(Method::DependentBinaryRelevance),
            "STA" => Ok(Method::Stacking),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// A permutation of label indices; position `j` of the chain predicts label `order[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainOrder(Vec<usize>);

impl ChainOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &k in &order {
            if k >= order.len() || std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidChainOrder(format!(
                    "{order:?} is not a permutation of 0..{}",
                    order.len()
                )));
            }
        }
        Ok(Self(order))
    }

    pub fn identity(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn random(m: usize, seed: u64) -> Self {
        Self(rng::permutation(m, seed))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ChainOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ChainOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let order = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidChainOrder(format!("`{t}` is not an index")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(order)
    }
}

/// Configuration of a multilabel learner: a method wrapped around a base learner.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilabelLearner {
    pub method: Method,
    pub base: BaseLearnerSpec,
    /// Meta-level learner for DBR and STA; `None` reuses `base`.
    pub meta: Option<BaseLearnerSpec>,
    pub threshold: f64,
    /// CC/NST chain order; `None` is the identity.
    pub chain_order: Option<ChainOrder>,
    pub internal_folds: usize,
    /// Seeds the internal fold assignment of NST and STA.
    pub seed: u64,
    /// Threads for label-parallel fitting (BR, DBR, STA).
    pub workers: usize,
}

impl MultilabelLearner {
    pub fn new(method: Method, base: BaseLearnerSpec) -> Self {
        Self {
            method,
            base,
            meta: None,
            threshold: DEFAULT_THRESHOLD,
            chain_order: None,
            internal_folds: DEFAULT_INTERNAL_FOLDS,
            seed: 0,
            workers: 1,
        }
    }

    pub fn with_meta(mut self, meta: BaseLearnerSpec) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_chain_order(mut self, order: ChainOrder) -> Self {
        self.chain_order = Some(order);
        self
    }

    pub fn with_internal_folds(mut self, folds: usize) -> Self {
        self.internal_folds = folds;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// e.g. `CC(logistic)`
    pub fn name(&self) -> String {
        format!("{}({})", self.method, self.base.kind())
    }

    pub fn meta_spec(&self) -> &BaseLearnerSpec {
        self.meta.as_ref().unwrap_or(&self.base)
    }

    pub fn fit(&self, task: &crate::data::Task) -> Result<MultilabelModel> {
        fit::fit_learner(self, task)
    }
}

/// A fitted multilabel model.
///
/// `per_label[k]` is the classifier producing label `k`. For DBR and STA,
/// `first_level[k]` is the full-data BR model for label `k`; it is empty for
/// the other methods.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilabelModel {
    pub(crate) method: Method,
    pub(crate) base: BaseLearnerSpec,
    pub(crate) meta: BaseLearnerSpec,
    pub(crate) threshold: f64,
    pub(crate) chain_order: Option<ChainOrder>,
    pub(crate) internal_folds: Option<usize>,
    pub(crate) seed: u64,
    pub(crate) label_names: Vec<String>,
    pub(crate) feature_names: Vec<String>,
    pub(crate) per_label: Vec<BinaryModel>,
    pub(crate) first_level: Vec<BinaryModel>,
}

impl MultilabelModel {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn base(&self) -> &BaseLearnerSpec {
        &self.base
    }

    pub fn meta(&self) -> &BaseLearnerSpec {
        &self.meta
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn chain_order(&self) -> Option<&ChainOrder> {
        self.chain_order.as_ref()
    }

    pub fn internal_folds(&self) -> Option<usize> {
        self.internal_folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn per_label_models(&self) -> &[BinaryModel] {
        &self.per_label
    }

    pub fn first_level_models(&self) -> &[BinaryModel] {
        &self.first_level
    }

    /// Checks the input width of every stored classifier against the method's layout.
    pub(crate) fn check_layout(&self) -> Result<()> {
        let p = self.n_features();
        let m = self.n_labels();
        let bad = |what: &str| Err(Error::CorruptedBlock(format!("{} model: {what}", self.method)));
        if self.per_label.len() != m {
            return bad("wrong number of per-label classifiers");
        }
        let expected: Vec<usize> = match self.method {
            Method::BinaryRelevance => vec![p; m],
            Method::ClassifierChains | Method::NestedStacking => {
                let Some(order) = &self.chain_order else {
                    return bad("missing chain order");
                };
                if order.len() != m {
                    return bad("chain order length differs from label count");
                }
                let mut widths = vec![0; m];
                for (j, &k) in order.as_slice().iter().enumerate() {
                    widths[k] = p + j;
                }
                widths
            }
            Method::DependentBinaryRelevance => vec![p + m - 1; m],
            Method::Stacking => vec![p + m; m],
        };
        if self.per_label.iter().map(BinaryModel::input_dimension).ne(expected) {
            return bad("classifier input widths do not match the method");
        }
        let first_expected = if self.method.has_first_level() { m } else { 0 };
        if self.first_level.len() != first_expected || self.first_level.iter().any(|f| f.input_dimension() != p) {
            return bad("first-level models do not match");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_order_validation() {
        assert!(ChainOrder::new(vec![2, 0, 1]).is_ok());
        assert!(ChainOrder::new(vec![0, 0, 1]).is_err());
        assert!(ChainOrder::new(vec![0, 3, 1]).is_err());
        assert_eq!("2,0,1".parse::<ChainOrder>().unwrap().as_slice(), &[2, 0, 1]);
        assert!("2,x".parse::<ChainOrder>().is_err());
        let r = ChainOrder::random(7, 4);
        assert!(ChainOrder::new(r.as_slice().to_vec()).is_ok());
        assert_eq!(r, ChainOrder::random(7, 4));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.short_name().parse::<Method>().unwrap(), m);
        }
        assert!("XYZ".parse::<Method>().is_err());
    }
}
