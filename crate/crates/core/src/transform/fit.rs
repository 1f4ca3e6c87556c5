use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{ChainOrder, Method, MultilabelLearner, MultilabelModel};
use crate::data::{augment_features, MultilabelDataset, Task};
use crate::error::{Error, Result};
use crate::learners::{check_threshold, fit_binary_with, BaseLearnerSpec, BinaryModel, FitContext, FitRole};
use crate::parallel::map_indexed;
use crate::resample::{kfold_split, FoldAssignment};

pub(super) fn fit_learner(learner: &MultilabelLearner, task: &Task) -> Result<MultilabelModel> {
    learner.base.validate()?;
    learner.meta_spec().validate()?;
    check_threshold(learner.threshold)?;
    let data = task.dataset();
    let m = data.n_labels();

    let chain_order = if learner.method.uses_chain() {
        let order = learner.chain_order.clone().unwrap_or_else(|| ChainOrder::identity(m));
        if order.len() != m {
            return Err(Error::InvalidChainOrder(format!(
                "chain order has {} entries but the task has {m} labels",
                order.len()
            )));
        }
        Some(order)
    } else {
        None
    };
    let folds = if learner.method.uses_internal_cv() {
        Some(kfold_split(data.n_instances(), learner.internal_folds, learner.seed)?)
    } else {
        None
    };

    let (per_label, first_level) = match learner.method {
        Method::BinaryRelevance => (
            fit_independent(
                &learner.base,
                data.features(),
                data.labels(),
                FitRole::Final,
                learner.workers,
            )?,
            Vec::new(),
        ),
        Method::ClassifierChains => (
            fit_chain_true(learner, data, chain_order.as_ref().unwrap())?,
            Vec::new(),
        ),
        Method::NestedStacking => (
            fit_chain_predicted(learner, data, chain_order.as_ref().unwrap(), folds.as_ref().unwrap())?,
            Vec::new(),
        ),
        Method::DependentBinaryRelevance => fit_dependent(learner, data)?,
        Method::Stacking => fit_stacked(learner, data, folds.as_ref().unwrap())?,
    };

    Ok(MultilabelModel {
        method: learner.method,
        base: learner.base.clone(),
        meta: learner.meta_spec().clone(),
        threshold: learner.threshold,
        chain_order,
        internal_folds: folds.map(|f| f.k()),
        seed: learner.seed,
        label_names: data.label_names().to_vec(),
        feature_names: data.feature_names().to_vec(),
        per_label,
        first_level,
    })
}

/// One model per label column, each on the same inputs.
fn fit_independent(
    spec: &BaseLearnerSpec,
    x: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, u8>,
    role: FitRole,
    workers: usize,
) -> Result<Vec<BinaryModel>> {
    map_indexed(workers, targets.ncols(), |k| {
        fit_binary_with(spec, x, targets.column(k), FitContext { label: k, role })
    })
}

fn scatter(order: &ChainOrder, staged: Vec<BinaryModel>) -> Vec<BinaryModel> {
    let mut slots: Vec<Option<BinaryModel>> = vec![None; staged.len()];
    for (&k, model) in order.as_slice().iter().zip(staged) {
        slots[k] = Some(model);
    }
    slots
        .into_iter()
        .map(|s| s.expect("chain order is a permutation"))
        .collect()
}

fn fit_chain_true(
    learner: &MultilabelLearner,
    data: &MultilabelDataset,
    order: &ChainOrder,
) -> Result<Vec<BinaryModel>> {
    let tau = order.as_slice();
    let mut staged = Vec::with_capacity(tau.len());
    for (j, &k) in tau.iter().enumerate() {
        let preceding = data.labels().select(Axis(1), &tau[..j]);
        let x = augment_features(data.features(), preceding.view())?;
        let ctx = FitContext {
            label: k,
            role: FitRole::Final,
        };
        staged.push(fit_binary_with(&learner.base, x.view(), data.label(k), ctx)?);
    }
    Ok(scatter(order, staged))
}

/// Stage `j` trains on X plus the cross-fitted labels of stages `0..j`, then
/// cross-fits its own label on the same inputs for the stages after it.
fn fit_chain_predicted(
    learner: &MultilabelLearner,
    data: &MultilabelDataset,
    order: &ChainOrder,
    folds: &FoldAssignment,
) -> Result<Vec<BinaryModel>> {
    let tau = order.as_slice();
    let n = data.n_instances();
    let mut predicted = Array2::<u8>::zeros((n, tau.len()));
    let mut staged = Vec::with_capacity(tau.len());
    for (j, &k) in tau.iter().enumerate() {
        let x = augment_features(data.features(), predicted.slice(ndarray::s![.., ..j]))?;
        let ctx = FitContext {
            label: k,
            role: FitRole::Final,
        };
        staged.push(fit_binary_with(&learner.base, x.view(), data.label(k), ctx)?);
        if j + 1 < tau.len() {
            let yhat = cross_fit(&learner.base, x.view(), data.label(k), folds, k, learner.threshold, 1)?;
            predicted.column_mut(j).assign(&yhat);
        }
    }
    Ok(scatter(order, staged))
}

fn fit_dependent(
    learner: &MultilabelLearner,
    data: &MultilabelDataset,
) -> Result<(Vec<BinaryModel>, Vec<BinaryModel>)> {
    let m = data.n_labels();
    let first = fit_independent(
        &learner.base,
        data.features(),
        data.labels(),
        FitRole::FirstLevel,
        learner.workers,
    )?;
    let meta = map_indexed(learner.workers, m, |k| {
        let others: Vec<usize> = (0..m).filter(|&l| l != k).collect();
        let x = augment_features(data.features(), data.labels().select(Axis(1), &others).view())?;
        fit_binary_with(
            learner.meta_spec(),
            x.view(),
            data.label(k),
            FitContext {
                label: k,
                role: FitRole::Final,
            },
        )
    })?;
    Ok((meta, first))
}

fn fit_stacked(
    learner: &MultilabelLearner,
    data: &MultilabelDataset,
    folds: &FoldAssignment,
) -> Result<(Vec<BinaryModel>, Vec<BinaryModel>)> {
    let m = data.n_labels();
    let x = data.features();
    let columns = map_indexed(learner.workers, m, |k| {
        cross_fit(&learner.base, x, data.label(k), folds, k, learner.threshold, 1)
    })?;
    let mut predicted = Array2::<u8>::zeros((data.n_instances(), m));
    for (k, col) in columns.iter().enumerate() {
        predicted.column_mut(k).assign(col);
    }
    let augmented = augment_features(x, predicted.view())?;
    let first = fit_independent(&learner.base, x, data.labels(), FitRole::FirstLevel, learner.workers)?;
    let meta = fit_independent(
        learner.meta_spec(),
        augmented.view(),
        data.labels(),
        FitRole::Final,
        learner.workers,
    )?;
    Ok((meta, first))
}

fn cross_fit(
    spec: &BaseLearnerSpec,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, u8>,
    folds: &FoldAssignment,
    label: usize,
    threshold: f64,
    workers: usize,
) -> Result<Array1<u8>> {
    if folds.n() != x.nrows() || y.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "fold assignment covers {} rows but the data has {}",
            folds.n(),
            x.nrows()
        )));
    }
    let parts = map_indexed(workers, folds.k(), |f| {
        let train = folds.train_indices(f);
        let test = folds.test_indices(f);
        let xt = x.select(Axis(0), &train);
        let yt = y.select(Axis(0), &train);
        let ctx = FitContext {
            label,
            role: FitRole::CrossFit { fold: f },
        };
        let model = fit_binary_with(spec, xt.view(), yt.view(), ctx)?;
        let hard = model.predict_label(x.select(Axis(0), &test).view(), threshold)?;
        Ok((test, hard))
    })?;
    let mut out = Array1::<u8>::zeros(x.nrows());
    for (test, hard) in parts {
        for (&i, &v) in test.iter().zip(&hard) {
            out[i] = v;
        }
    }
    Ok(out)
}

/// Out-of-sample hard labels for `y` under an explicit fold assignment: the
/// entry for row `i` comes from a model fit on the folds not containing `i`.
pub fn cross_fit_labels(
    spec: &BaseLearnerSpec,
    features: ArrayView2<'_, f64>,
    target: ArrayView1<'_, u8>,
    folds: &FoldAssignment,
    threshold: f64,
) -> Result<Array1<u8>> {
    spec.validate()?;
    check_threshold(threshold)?;
    cross_fit(spec, features, target, folds, 0, threshold, 1)
}

/// Cross-fitted hard labels for `target_column`, with the features augmented
/// by the true label columns listed in `augmenting_columns`. Folds come from
/// [`kfold_split`] with `seed`.
pub fn out_of_sample_labels(
    task: &Task,
    base: &BaseLearnerSpec,
    folds: usize,
    seed: u64,
    target_column: usize,
    augmenting_columns: &[usize],
) -> Result<Array1<u8>> {
    let data = task.dataset();
    let m = data.n_labels();
    if let Some(&bad) = augmenting_columns.iter().chain([&target_column]).find(|&&c| c >= m) {
        return Err(Error::InvalidArgument(format!(
            "label index {bad} out of range for {m} labels"
        )));
    }
    let assignment = kfold_split(data.n_instances(), folds, seed)?;
    let x = augment_features(
        data.features(),
        data.labels().select(Axis(1), augmenting_columns).view(),
    )?;
    base.validate()?;
    cross_fit(
        base,
        x.view(),
        data.label(target_column),
        &assignment,
        target_column,
        crate::learners::DEFAULT_THRESHOLD,
        1,
    )
}

pub fn fit_binary_relevance(task: &Task, base: &BaseLearnerSpec, threshold: f64) -> Result<MultilabelModel> {
    MultilabelLearner::new(Method::BinaryRelevance, base.clone())
        .with_threshold(threshold)
        .fit(task)
}

pub fn fit_classifier_chains(
    task: &Task,
    base: &BaseLearnerSpec,
    order: ChainOrder,
    threshold: f64,
) -> Result<MultilabelModel> {
    MultilabelLearner::new(Method::ClassifierChains, base.clone())
        .with_chain_order(order)
        .with_threshold(threshold)
        .fit(task)
}

pub fn fit_nested_stacking(
    task: &Task,
    base: &BaseLearnerSpec,
    order: ChainOrder,
    folds: usize,
    seed: u64,
    threshold: f64,
) -> Result<MultilabelModel> {
    MultilabelLearner::new(Method::NestedStacking, base.clone())
        .with_chain_order(order)
        .with_internal_folds(folds)
        .with_seed(seed)
        .with_threshold(threshold)
        .fit(task)
}

pub fn fit_dbr(task: &Task, base: &BaseLearnerSpec, threshold: f64) -> Result<MultilabelModel> {
    MultilabelLearner::new(Method::DependentBinaryRelevance, base.clone())
        .with_threshold(threshold)
        .fit(task)
}

pub fn fit_stacking(
    task: &Task,
    base: &BaseLearnerSpec,
    folds: usize,
    seed: u64,
    threshold: f64,
) -> Result<MultilabelModel> {
    MultilabelLearner::new(Method::Stacking, base.clone())
        .with_internal_folds(folds)
        .with_seed(seed)
        .with_threshold(threshold)
        .fit(task)
}
