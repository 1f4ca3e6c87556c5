//! Multilabel performance measures and per-label binary performances.
//!
//! All six multilabel measures are computed per instance and averaged
//! uniformly over instances. Zero denominators follow one convention:
//!
//! | measure   | `|y| = |ŷ| = 0` | other zero denominator               |
//! |-----------|-----------------|--------------------------------------|
//! | accuracy  | 1               | n/a                                   |
//! | recall    | 1               | `|y| = 0`, `|ŷ| > 0` gives 0          |
//! | F1        | 1               | n/a                                   |
//! | precision | see policy      | `|ŷ| = 0`, `|y| > 0` is undefined     |
//!
//! Under [`UndefinedPolicy::Strict`] precision is undefined as soon as one
//! instance predicts no label at all (matching the NA reported for the
//! featureless learner); [`UndefinedPolicy::SkipUndefined`] averages the
//! defined instances instead, scoring `|y| = |ŷ| = 0` as 1.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Predictions for `n` instances over `m` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    truth: Option<Array2<u8>>,
    probs: Array2<f64>,
    predicted: Array2<u8>,
    label_names: Vec<String>,
    threshold: f64,
}

impl PredictionSet {
    /// Thresholds `probs` (`1` iff `p >= threshold`) to obtain hard labels.
    pub fn from_probs(
        probs: Array2<f64>,
        threshold: f64,
        label_names: Vec<String>,
        truth: Option<Array2<u8>>,
    ) -> Result<Self> {
        let predicted = probs.mapv(|p| u8::from(p >= threshold));
        Self::new(truth, probs, predicted, label_names, threshold)
    }

    /// Validates shapes, ranges and the thresholding invariant.
    pub fn new(
        truth: Option<Array2<u8>>,
        probs: Array2<f64>,
        predicted: Array2<u8>,
        label_names: Vec<String>,
        threshold: f64,
    ) -> Result<Self> {
        crate::learners::check_threshold(threshold)?;
        if probs.dim() != predicted.dim() || probs.ncols() != label_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "probabilities {:?}, hard labels {:?}, {} label names",
                probs.dim(),
                predicted.dim(),
                label_names.len()
            )));
        }
        if let Some(t) = &truth {
            if t.dim() != probs.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "truth {:?} vs predictions {:?}",
                    t.dim(),
                    probs.dim()
                )));
            }
            if t.iter().any(|&v| v > 1) {
                return Err(Error::InvalidArgument("truth must be 0/1".into()));
            }
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        if probs
            .iter()
            .zip(predicted.iter())
            .any(|(&p, &h)| h != u8::from(p >= threshold))
        {
            return Err(Error::InvalidArgument(
                "hard labels disagree with thresholded probabilities".into(),
            ));
        }
        Ok(Self {
            truth,
            probs,
            predicted,
            label_names,
            threshold,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_labels(&self) -> usize {
        self.probs.ncols()
    }

    pub fn truth(&self) -> Option<&Array2<u8>> {
        self.truth.as_ref()
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn predicted(&self) -> &Array2<u8> {
        &self.predicted
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_truth(self, truth: Array2<u8>) -> Result<Self> {
        Self::new(
            Some(truth),
            self.probs,
            self.predicted,
            self.label_names,
            self.threshold,
        )
    }

    fn require_truth(&self) -> Result<&Array2<u8>> {
        self.truth.as_ref().ok_or(Error::MissingTruth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Subset01,
    Hamming,
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::Subset01,
        Measure::Hamming,
        Measure::Accuracy,
        Measure::Precision,
        Measure::Recall,
        Measure::F1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Subset01 => "subset01",
            Measure::Hamming => "hamming",
            Measure::Accuracy => "accuracy",
            Measure::Precision => "precision",
            Measure::Recall => "recall",
            Measure::F1 => "f1",
        }
    }

    /// Losses are minimized, scores maximized.
    pub fn is_loss(self) -> bool {
        matches!(self, Measure::Subset01 | Measure::Hamming)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "subset01" | "subset0/1" => Ok(Measure::Subset01),
            "hamming" | "hamloss" => Ok(Measure::Hamming),
            "accuracy" | "acc" | "jaccard" => Ok(Measure::Accuracy),
            "precision" | "ppv" => Ok(Measure::Precision),
            "recall" | "tpr" => Ok(Measure::Recall),
            "f1" => Ok(Measure::F1),
            other => Err(Error::InvalidArgument(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndefinedPolicy {
    #[default]
    Strict,
    SkipUndefined,
}

impl FromStr for UndefinedPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(UndefinedPolicy::Strict),
            "skip" | "skip-undefined" => Ok(UndefinedPolicy::SkipUndefined),
            other => Err(Error::InvalidArgument(format!("unknown undefined policy `{other}`"))),
        }
    }
}

/// An aggregated measure. `value` is `None` when it is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureValue {
    pub measure: Measure,
    pub value: Option<f64>,
    pub n_undefined_instances: usize,
}

/// Set sizes of one instance: `|y ∧ ŷ|`, `|y ∨ ŷ|`, `|y|`, `|ŷ|`, and the count of differing slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceCounts {
    pub both: usize,
    pub either: usize,
    pub truth: usize,
    pub predicted: usize,
    pub mismatches: usize,
    pub m: usize,
}

impl InstanceCounts {
    pub fn of(y: ArrayView1<'_, u8>, yhat: ArrayView1<'_, u8>) -> Self {
        let mut c = InstanceCounts {
            both: 0,
            either: 0,
            truth: 0,
            predicted: 0,
            mismatches: 0,
            m: y.len(),
        };
        for (&a, &b) in y.iter().zip(yhat.iter()) {
            c.both += usize::from(a == 1 && b == 1);
            c.either += usize::from(a == 1 || b == 1);
            c.truth += usize::from(a == 1);
            c.predicted += usize::from(b == 1);
            c.mismatches += usize::from(a != b);
        }
        c
    }
}

/// Score of one instance; `None` marks an undefined precision.
pub fn instance_score(measure: Measure, c: InstanceCounts) -> Option<f64> {
    let ratio = |num: usize, den: usize| num as f64 / den as f64;
    match measure {
        Measure::Subset01 => Some(if c.mismatches > 0 { 1.0 } else { 0.0 }),
        Measure::Hamming => Some(ratio(c.mismatches, c.m)),
        Measure::Accuracy => Some(if c.either == 0 { 1.0 } else { ratio(c.both, c.either) }),
        Measure::Precision => match (c.predicted, c.truth) {
            (0, 0) => Some(1.0),
            (0, _) => None,
            (p, _) => Some(ratio(c.both, p)),
        },
        Measure::Recall => match (c.truth, c.predicted) {
            (0, 0) => Some(1.0),
            (0, _) => Some(0.0),
            (t, _) => Some(ratio(c.both, t)),
        },
        Measure::F1 => {
            let den = c.truth + c.predicted;
            Some(if den == 0 { 1.0 } else { ratio(2 * c.both, den) })
        }
    }
}

/// Evaluates one measure over all instances of `pred`.
pub fn evaluate(pred: &PredictionSet, measure: Measure, policy: UndefinedPolicy) -> Result<MeasureValue> {
    let truth = pred.require_truth()?;
    let mut sum = 0.0;
    let mut defined = 0usize;
    let mut undefined = 0usize;
    for (y, yhat) in truth.rows().into_iter().zip(pred.predicted.rows()) {
        let c = InstanceCounts::of(y, yhat);
        // strict precision treats every empty prediction as NA, even when y is empty too
        let strict_na = measure == Measure::Precision && policy == UndefinedPolicy::Strict && c.predicted == 0;
        match instance_score(measure, c) {
            Some(s) if !strict_na => {
                sum += s;
                defined += 1;
            }
            _ => undefined += 1,
        }
    }
    let value = match policy {
        UndefinedPolicy::Strict if undefined > 0 => None,
        _ if defined == 0 => None,
        _ => Some(sum / defined as f64),
    };
    Ok(MeasureValue {
        measure,
        value,
        n_undefined_instances: undefined,
    })
}

pub fn evaluate_all(pred: &PredictionSet, measures: &[Measure], policy: UndefinedPolicy) -> Result<Vec<MeasureValue>> {
    measures.iter().map(|&m| evaluate(pred, m, policy)).collect()
}

fn always_defined(pred: &PredictionSet, measure: Measure) -> Result<f64> {
    Ok(evaluate(pred, measure, UndefinedPolicy::Strict)?
        .value
        .expect("measure is defined on every instance"))
}

/// Fraction of instances whose predicted label vector is not exactly right.
pub fn subset01_loss(pred: &PredictionSet) -> Result<f64> {
    always_defined(pred, Measure::Subset01)
}

/// Mean fraction of wrongly predicted label slots.
pub fn hamming_loss(pred: &PredictionSet) -> Result<f64> {
    always_defined(pred, Measure::Hamming)
}

/// Jaccard index `|y ∧ ŷ| / |y ∨ ŷ|`.
pub fn accuracy_score(pred: &PredictionSet) -> Result<MeasureValue> {
    evaluate(pred, Measure::Accuracy, UndefinedPolicy::Strict)
}

pub fn precision_score(pred: &PredictionSet, policy: UndefinedPolicy) -> Result<MeasureValue> {
    evaluate(pred, Measure::Precision, policy)
}

pub fn recall_score(pred: &PredictionSet) -> Result<MeasureValue> {
    evaluate(pred, Measure::Recall, UndefinedPolicy::Strict)
}

pub fn f1_score(pred: &PredictionSet) -> Result<MeasureValue> {
    evaluate(pred, Measure::F1, UndefinedPolicy::Strict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryMeasure {
    Acc,
    Mmce,
    Auc,
}

impl FromStr for BinaryMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "acc" => Ok(BinaryMeasure::Acc),
            "mmce" => Ok(BinaryMeasure::Mmce),
            "auc" => Ok(BinaryMeasure::Auc),
            other => Err(Error::InvalidArgument(format!("unknown binary measure `{other}`"))),
        }
    }
}

/// Binary performances of one label; `auc` is `None` when not requested or
/// when the truth column has a single class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPerformance {
    pub label: String,
    pub acc: Option<f64>,
    pub mmce: Option<f64>,
    pub auc: Option<f64>,
}

pub fn binary_label_performance(pred: &PredictionSet, measures: &[BinaryMeasure]) -> Result<Vec<LabelPerformance>> {
    let truth = pred.require_truth()?;
    let n = pred.n_instances() as f64;
    Ok((0..pred.n_labels())
        .map(|k| {
            let y = truth.column(k);
            let hits = y.iter().zip(pred.predicted.column(k)).filter(|(a, b)| a == b).count() as f64;
            let acc = hits / n;
            let want = |m| measures.contains(&m);
            let probs: Vec<f64> = pred.probs.column(k).to_vec();
            LabelPerformance {
                label: pred.label_names[k].clone(),
                acc: want(BinaryMeasure::Acc).then_some(acc),
                mmce: want(BinaryMeasure::Mmce).then_some(1.0 - acc),
                auc: if want(BinaryMeasure::Auc) {
                    auc(&probs, &y.to_vec())
                } else {
                    None
                },
            }
        })
        .collect())
}

/// Area under the ROC curve as the normalized Mann–Whitney statistic:
/// the fraction of (positive, negative) pairs ranked correctly, ties counting
/// one half. `None` when either class is absent.
pub fn auc(scores: &[f64], truth: &[u8]) -> Option<f64> {
    assert_eq!(scores.len(), truth.len(), "scores and truth differ in length");
    let n_pos = truth.iter().filter(|&&t| t == 1).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of mid-ranks of the positives (1-based ranks)
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&o| truth[o] == 1).count();
        rank_sum += mid_rank * pos_in_group as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Some(u / (p * q))
}
