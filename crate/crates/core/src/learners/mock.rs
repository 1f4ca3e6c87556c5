//! Test doubles that expose what the transformation methods train on.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::{BaseLearnerSpec, FitContext};

/// One observed call to `fit`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub label: usize,
    pub role: super::FitRole,
    pub input_dimension: usize,
    pub features: Array2<f64>,
    pub target: Array1<u8>,
}

/// Shared log of fits; clones of the spec share the same log.
#[derive(Debug, Clone)]
pub struct Recorder {
    inner: Box<BaseLearnerSpec>,
    log: Arc<Mutex<Vec<FitRecord>>>,
}

impl Recorder {
    pub fn wrap(inner: BaseLearnerSpec) -> Self {
        Self {
            inner: Box::new(inner),
            log: Arc::default(),
        }
    }

    pub fn inner(&self) -> &BaseLearnerSpec {
        &self.inner
    }

    pub(crate) fn record(&self, ctx: FitContext, features: ArrayView2<'_, f64>, target: ArrayView1<'_, u8>) {
        self.log.lock().expect("recorder poisoned").push(FitRecord {
            label: ctx.label,
            role: ctx.role,
            input_dimension: features.ncols(),
            features: features.to_owned(),
            target: target.to_owned(),
        });
    }

    /// All fits so far, in call order.
    pub fn records(&self) -> Vec<FitRecord> {
        self.log.lock().expect("recorder poisoned").clone()
    }

    pub fn clear(&self) {
        self.log.lock().expect("recorder poisoned").clear();
    }
}

/// Exact-match lookup table from feature rows to their mean training target.
#[derive(Debug, Clone, PartialEq)]
pub struct Memorizer {
    pub entries: Vec<(Vec<f64>, f64)>,
    index: HashMap<Vec<u64>, usize>,
}

fn key(row: ArrayView1<'_, f64>) -> Vec<u64> {
    // + 0.0 folds -0.0 into 0.0
    row.iter().map(|&v| (v + 0.0).to_bits()).collect()
}

impl Memorizer {
    pub(crate) fn fit(features: ArrayView2<'_, f64>, target: ArrayView1<'_, u8>) -> Self {
        let mut sums: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        let mut index = HashMap::new();
        for (row, &y) in features.rows().into_iter().zip(target) {
            let slot = *index.entry(key(row)).or_insert_with(|| {
                sums.push((row.to_vec(), 0.0, 0.0));
                sums.len() - 1
            });
            sums[slot].1 += f64::from(y);
            sums[slot].2 += 1.0;
        }
        Self::from_entries(sums.into_iter().map(|(r, s, c)| (r, s / c)).collect())
    }

    pub(crate) fn from_entries(entries: Vec<(Vec<f64>, f64)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (row, _))| (key(ArrayView1::from(row.as_slice())), i))
            .collect();
        Self { entries, index }
    }

    pub(crate) fn predict_prob(&self, features: ArrayView2<'_, f64>, unseen: f64) -> Array1<f64> {
        features
            .rows()
            .into_iter()
            .map(|row| self.index.get(&key(row)).map_or(unseen, |&i| self.entries[i].1))
            .collect()
    }
}
