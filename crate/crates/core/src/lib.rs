//! Multilabel classification by problem transformation.
//!
//! A multilabel task pairs an `n × p` feature matrix with an `n × m` binary
//! label matrix. The transformation methods in [`transform`] reduce it to
//! binary problems solved by a pluggable base learner from [`learners`]:
//!
//! - binary relevance (BR): one independent classifier per label;
//! - classifier chains (CC): true preceding labels as extra inputs;
//! - nested stacking (NST): the chain structure with cross-fitted predicted labels;
//! - dependent binary relevance (DBR): all other true labels as extra inputs;
//! - stacking (STA): all cross-fitted first-level predictions as extra inputs.
//!
//! [`metrics`] holds the six instance-averaged multilabel measures and the
//! per-label binary performances, [`resample`] the cross-validation and
//! benchmark harness, and [`io`] the ARFF/CSV readers and the prediction and
//! model file formats.

pub mod data;
pub mod error;
pub mod io;
pub mod learners;
pub mod metrics;
pub mod parallel;
pub mod resample;
pub mod rng;
pub mod synthetic;
pub mod transform;

pub use data::{augment_features, DatasetStats, MultilabelDataset, Task};
pub use error::{Error, Result};
pub use learners::{BaseLearnerSpec, BinaryModel};
pub use metrics::{Measure, MeasureValue, PredictionSet, UndefinedPolicy};
pub use resample::{kfold_split, resample, FoldAssignment, ResampleDesc, ResampleResult};
pub use transform::{ChainOrder, Method, MultilabelLearner, MultilabelModel};
