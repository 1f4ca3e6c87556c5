//! Datasets, tasks and label statistics.

use std::collections::HashSet;

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Default prevalence below which a label is treated as sparse and removed.
pub const DEFAULT_MIN_PREVALENCE: f64 = 0.02;

/// Dense multilabel data: an `n × p` feature matrix and an `n × m` label matrix.
///
/// Categorical inputs are one-hot encoded before they reach this type, so the
/// feature matrix is always numeric. Rows whose label vector is all zero are
/// legal.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilabelDataset {
    features: Array2<f64>,
    labels: Array2<u8>,
    feature_names: Vec<String>,
    label_names: Vec<String>,
}

impl MultilabelDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Array2<u8>,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = features.dim();
        let (ln, m) = labels.dim();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        if m == 0 {
            return Err(Error::InvalidDataset("dataset has no labels".into()));
        }
        if ln != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} feature rows but {ln} label rows"
            )));
        }
        if feature_names.len() != p || label_names.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "expected {p} feature names and {m} label names, got {} and {}",
                feature_names.len(),
                label_names.len()
            )));
        }
        if let Some(v) = labels.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidDataset(format!("label matrix contains {v}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(
                "feature matrix contains missing or non-finite values".into(),
            ));
        }
        let mut seen = HashSet::new();
        for name in feature_names.iter().chain(label_names.iter()) {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate column name `{name}`")));
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            label_names,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> ArrayView2<'_, u8> {
        self.labels.view()
    }

    pub fn label(&self, k: usize) -> ArrayView1<'_, u8> {
        self.labels.column(k)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Rows in the given order (duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(
            self.features.select(Axis(0), rows),
            self.labels.select(Axis(0), rows),
            self.feature_names.clone(),
            self.label_names.clone(),
        )
    }

    /// Keep only the given label columns, in the given order.
    pub fn select_labels(&self, keep: &[usize]) -> Result<Self> {
        Self::new(
            self.features.clone(),
            self.labels.select(Axis(1), keep),
            self.feature_names.clone(),
            keep.iter().map(|&k| self.label_names[k].clone()).collect(),
        )
    }

    /// Mean of each label column.
    pub fn prevalences(&self) -> Vec<f64> {
        let n = self.n_instances() as f64;
        self.labels
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|&v| v as f64).sum::<f64>() / n)
            .collect()
    }
}

/// A named multilabel task. The positive class of every label is `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    id: String,
    dataset: MultilabelDataset,
}

impl Task {
    pub fn new(id: impl Into<String>, dataset: MultilabelDataset) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidArgument("task id must be nonempty".into()));
        }
        Ok(Self { id, dataset })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dataset(&self) -> &MultilabelDataset {
        &self.dataset
    }

    pub fn with_dataset(&self, dataset: MultilabelDataset) -> Self {
        Self {
            id: self.id.clone(),
            dataset,
        }
    }
}

/// One column of a raw table, before features and labels are separated.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Categorical values; `levels` fixes the one-hot column order.
    Nominal {
        values: Vec<String>,
        levels: Vec<String>,
    },
    Logical(Vec<bool>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Nominal { values, .. } => values.len(),
            Column::Logical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when every row carries the same value.
    pub fn is_constant(&self) -> bool {
        match self {
            Column::Numeric(v) => v.windows(2).all(|w| w[0] == w[1]),
            Column::Nominal { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
            Column::Logical(v) => v.windows(2).all(|w| w[0] == w[1]),
        }
    }

    fn to_binary(&self, name: &str) -> Result<Vec<u8>> {
        let bad = || Error::NonBinaryLabel(name.to_string());
        match self {
            Column::Logical(v) => Ok(v.iter().map(|&b| b as u8).collect()),
            Column::Numeric(v) => v
                .iter()
                .map(|&x| match x {
                    0.0 => Ok(0),
                    1.0 => Ok(1),
                    _ => Err(bad()),
                })
                .collect(),
            Column::Nominal { values, levels } => {
                if levels.iter().any(|l| parse_binary_token(l).is_none()) {
                    return Err(bad());
                }
                values.iter().map(|v| parse_binary_token(v).ok_or_else(bad)).collect()
            }
        }
    }
}

/// Accepts `0`/`1` and `true`/`false` in any case.
pub(crate) fn parse_binary_token(s: &str) -> Option<u8> {
    match s.trim() {
        "0" => Some(0),
        "1" => Some(1),
        t if t.eq_ignore_ascii_case("false") => Some(0),
        t if t.eq_ignore_ascii_case("true") => Some(1),
        _ => None,
    }
}

/// Column-oriented table with unique column names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    names: Vec<String>,
    columns: Vec<Column>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::InvalidDataset(format!("duplicate column name `{name}`")));
        }
        if let Some(first) = self.columns.first() {
            if first.len() != column.len() {
                return Err(Error::DimensionMismatch(format!(
                    "column `{name}` has {} rows, expected {}",
                    column.len(),
                    first.len()
                )));
            }
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    /// Drops every constant column that is not listed in `keep`; returns the dropped names.
    pub fn drop_constant_columns(&mut self, keep: &[String]) -> Vec<String> {
        let mut dropped = Vec::new();
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for (name, col) in self.names.drain(..).zip(self.columns.drain(..)) {
            if col.is_constant() && !keep.contains(&name) {
                dropped.push(name);
            } else {
                names.push(name);
                columns.push(col);
            }
        }
        self.names = names;
        self.columns = columns;
        dropped
    }
}

/// Splits a table into labels (the named target columns) and one-hot encoded features.
pub fn dataset_from_table(table: &Table, target_names: &[String]) -> Result<MultilabelDataset> {
    let n = table.n_rows();
    for t in target_names {
        if table.column(t).is_none() {
            return Err(Error::UnknownTarget(t.clone()));
        }
    }
    let mut labels = Array2::<u8>::zeros((n, target_names.len()));
    for (k, t) in target_names.iter().enumerate() {
        let bits = table.column(t).expect("checked above").to_binary(t)?;
        labels.column_mut(k).assign(&Array1::from(bits));
    }

    let (feature_names, feature_cols) = encode_features(table, target_names)?;
    let mut features = Array2::<f64>::zeros((n, feature_cols.len()));
    for (j, col) in feature_cols.into_iter().enumerate() {
        features.column_mut(j).assign(&Array1::from(col));
    }
    MultilabelDataset::new(features, labels, feature_names, target_names.to_vec())
}

/// One-hot encodes every column not listed in `exclude`: numeric columns pass
/// through, logical columns become 0/1, nominal columns expand to one
/// `name=level` column per declared level.
fn encode_features(table: &Table, exclude: &[String]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut feature_cols: Vec<Vec<f64>> = Vec::new();
    let mut feature_names = Vec::new();
    for (name, col) in table.names().iter().zip(table.columns()) {
        if exclude.contains(name) {
            continue;
        }
        match col {
            Column::Numeric(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidDataset(format!(
                        "column `{name}` has missing or non-finite values"
                    )));
                }
                feature_cols.push(v.clone());
                feature_names.push(name.clone());
            }
            Column::Logical(v) => {
                feature_cols.push(v.iter().map(|&b| b as u8 as f64).collect());
                feature_names.push(name.clone());
            }
            Column::Nominal { values, levels } => {
                if let Some(v) = values.iter().find(|v| !levels.contains(v)) {
                    return Err(Error::InvalidDataset(format!(
                        "column `{name}` has undeclared value `{v}`"
                    )));
                }
                for level in levels {
                    feature_cols.push(values.iter().map(|v| (v == level) as u8 as f64).collect());
                    feature_names.push(format!("{name}={level}"));
                }
            }
        }
    }
    Ok((feature_names, feature_cols))
}

/// Feature matrix with exactly the columns `names`, in that order, encoded as
/// in [`dataset_from_table`]. A one-hot column `a=v` whose level never occurs
/// in this table is all zeros; any other missing name is an error.
pub fn feature_matrix_for(table: &Table, names: &[String]) -> Result<Array2<f64>> {
    let (have, cols) = encode_features(table, &[])?;
    let n = table.n_rows();
    let mut out = Array2::<f64>::zeros((n, names.len()));
    for (j, name) in names.iter().enumerate() {
        if let Some(i) = have.iter().position(|h| h == name) {
            out.column_mut(j).assign(&Array1::from(cols[i].clone()));
        } else {
            let nominal_parent = name
                .split_once('=')
                .and_then(|(attr, _)| table.column(attr))
                .is_some_and(|c| matches!(c, Column::Nominal { .. }));
            if !nominal_parent {
                return Err(Error::InvalidDataset(format!("missing feature column `{name}`")));
            }
        }
    }
    Ok(out)
}

/// Builds a task whose labels are the named target columns and whose features
/// are all remaining columns. A task with no feature columns is allowed.
pub fn make_multilabel_task(table: &Table, target_names: &[String], id: &str) -> Result<Task> {
    Task::new(id, dataset_from_table(table, target_names)?)
}

/// Size and label statistics of a task.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub n_instances: usize,
    pub n_predictors: usize,
    pub n_labels: usize,
    /// Mean number of relevant labels per instance.
    pub cardinality: f64,
    pub per_label_prevalence: Vec<f64>,
}

impl DatasetStats {
    /// Tasks without predictors can only be used with the featureless learner.
    pub fn is_featureless(&self) -> bool {
        self.n_predictors == 0
    }
}

pub fn dataset_stats(task: &Task) -> DatasetStats {
    let d = task.dataset();
    let per_label_prevalence = d.prevalences();
    DatasetStats {
        n_instances: d.n_instances(),
        n_predictors: d.n_features(),
        n_labels: d.n_labels(),
        cardinality: per_label_prevalence.iter().sum(),
        per_label_prevalence,
    }
}

/// Names of the labels whose prevalence is strictly below `min_prevalence`.
pub fn sparse_labels(task: &Task, min_prevalence: f64) -> Vec<String> {
    let d = task.dataset();
    d.prevalences()
        .iter()
        .zip(d.label_names())
        .filter(|(&p, _)| p < min_prevalence)
        .map(|(_, name)| name.clone())
        .collect()
}

/// Removes labels that occur in fewer than `min_prevalence` of the instances.
pub fn filter_sparse_labels(task: &Task, min_prevalence: f64) -> Result<(Task, Vec<String>)> {
    if !(0.0..=1.0).contains(&min_prevalence) {
        return Err(Error::InvalidArgument(format!(
            "min_prevalence {min_prevalence} outside [0, 1]"
        )));
    }
    let d = task.dataset();
    let prevalences = d.prevalences();
    let keep: Vec<usize> = (0..d.n_labels())
        .filter(|&k| prevalences[k] >= min_prevalence)
        .collect();
    if keep.is_empty() {
        return Err(Error::NoLabelsRemain);
    }
    let removed = sparse_labels(task, min_prevalence);
    Ok((task.with_dataset(d.select_labels(&keep)?), removed))
}

/// Appends binary columns to a feature matrix; original columns come first.
pub fn augment_features(features: ArrayView2<'_, f64>, extra: ArrayView2<'_, u8>) -> Result<Array2<f64>> {
    if features.nrows() != extra.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows but {} augmenting rows",
            features.nrows(),
            extra.nrows()
        )));
    }
    let extra = extra.mapv(f64::from);
    Ok(concatenate(Axis(1), &[features, extra.view()]).expect("row counts checked"))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use ndarray::array;

    /// The six-row, three-feature, three-label illustration table.
    pub fn toy_table() -> Table {
        let mut t = Table::new();
        t.push("x1", Column::Numeric(vec![0.1, 0.7, -1.2, 2.0, 0.3, -0.4]))
            .unwrap();
        t.push("x2", Column::Numeric(vec![1.0, 0.0, 3.5, -2.2, 0.9, 1.1]))
            .unwrap();
        t.push("x3", Column::Numeric(vec![-0.5, 0.2, 0.8, 1.7, -1.3, 0.6]))
            .unwrap();
        let y = array![[0u8, 0, 1], [1, 0, 1], [1, 1, 0], [1, 1, 1], [1, 1, 0], [1, 1, 0]];
        for (k, name) in ["y1", "y2", "y3"].iter().enumerate() {
            t.push(*name, Column::Logical(y.column(k).iter().map(|&v| v == 1).collect()))
                .unwrap();
        }
        t
    }

    pub fn toy_task() -> Task {
        let targets: Vec<String> = ["y1", "y2", "y3"].iter().map(|s| s.to_string()).collect();
        make_multilabel_task(&toy_table(), &targets, "toy").unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use ndarray::{array, s};
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn task_with_labels(labels: Array2<u8>) -> Task {
        let n = labels.nrows();
        let m = labels.ncols();
        let ds = MultilabelDataset::new(
            Array2::from_shape_fn((n, 1), |(i, _)| i as f64),
            labels,
            names(&["x"]),
            (0..m).map(|k| format!("y{k}")).collect(),
        )
        .unwrap();
        Task::new("t", ds).unwrap()
    }

    #[test]
    fn task_from_toy_table() {
        let task = toy_task();
        let d = task.dataset();
        assert_eq!((d.n_instances(), d.n_features(), d.n_labels()), (6, 3, 3));
        assert_eq!(d.label(2).to_vec(), vec![1, 1, 0, 1, 0, 0]);
    }

    #[test]
    fn all_columns_as_targets_gives_no_features() {
        let mut t = Table::new();
        t.push("a", Column::Logical(vec![true, false])).unwrap();
        t.push("b", Column::Numeric(vec![0.0, 1.0])).unwrap();
        let task = make_multilabel_task(&t, &names(&["a", "b"]), "t").unwrap();
        assert_eq!(task.dataset().n_features(), 0);
        assert!(dataset_stats(&task).is_featureless());
    }

    #[test]
    fn unknown_target_is_rejected() {
        let err = make_multilabel_task(&toy_table(), &names(&["y9"]), "t").unwrap_err();
        assert!(matches!(err, Error::UnknownTarget(ref t) if t == "y9"));
    }

    #[test]
    fn non_binary_target_is_rejected() {
        let err = make_multilabel_task(&toy_table(), &names(&["x1"]), "t").unwrap_err();
        assert!(matches!(err, Error::NonBinaryLabel(_)));
    }

    #[test]
    fn nominal_features_are_one_hot() {
        let mut t = Table::new();
        t.push(
            "c",
            Column::Nominal {
                values: names(&["b", "a", "c"]),
                levels: names(&["a", "b", "c"]),
            },
        )
        .unwrap();
        t.push("y", Column::Numeric(vec![1.0, 0.0, 1.0])).unwrap();
        let d = dataset_from_table(&t, &names(&["y"])).unwrap();
        assert_eq!(d.feature_names(), &names(&["c=a", "c=b", "c=c"])[..]);
        assert_eq!(d.features(), array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn cardinality_of_toy_labels() {
        let stats = dataset_stats(&toy_task());
        assert_eq!(stats.cardinality, 2.0);
        assert_eq!(stats.per_label_prevalence, vec![5.0 / 6.0, 4.0 / 6.0, 3.0 / 6.0]);
    }

    #[test]
    fn cardinality_edge_cases() {
        assert_eq!(dataset_stats(&task_with_labels(Array2::zeros((4, 3)))).cardinality, 0.0);
        assert_eq!(dataset_stats(&task_with_labels(array![[1, 1]])).cardinality, 2.0);
    }

    #[test]
    fn filter_removes_sparse_label() {
        // prevalences 0.5, 0.01, 0.3 over 100 rows
        let mut y = Array2::<u8>::zeros((100, 3));
        y.slice_mut(s![..50, 0]).fill(1);
        y[[0, 1]] = 1;
        y.slice_mut(s![..30, 2]).fill(1);
        let task = task_with_labels(y);
        let (filtered, removed) = filter_sparse_labels(&task, 0.02).unwrap();
        assert_eq!(removed, names(&["y1"]));
        assert_eq!(filtered.dataset().label_names(), &names(&["y0", "y2"])[..]);
        assert_eq!(filtered.dataset().features(), task.dataset().features());
    }

    #[test]
    fn filter_identity_and_exhaustion() {
        let task = toy_task();
        let (same, removed) = filter_sparse_labels(&task, 0.0).unwrap();
        assert!(removed.is_empty());
        assert_eq!(same, task);
        assert!(matches!(filter_sparse_labels(&task, 1.0), Err(Error::NoLabelsRemain)));
        assert!(filter_sparse_labels(&task, 1.5).is_err());
    }

    #[test]
    fn augment_appends_columns() {
        let task = toy_task();
        let d = task.dataset();
        let extra = d.labels().slice(s![.., 2..3]).to_owned();
        let aug = augment_features(d.features(), extra.view()).unwrap();
        assert_eq!(aug.ncols(), 4);
        assert_eq!(aug.column(3).to_vec(), vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);

        let none = Array2::<u8>::zeros((6, 0));
        assert_eq!(augment_features(d.features(), none.view()).unwrap(), d.features());

        let short = Array2::<u8>::zeros((5, 1));
        assert!(augment_features(d.features(), short.view()).is_err());
    }

    #[test]
    fn dataset_rejects_bad_input() {
        let f = Array2::<f64>::zeros((2, 1));
        assert!(MultilabelDataset::new(f.clone(), array![[2u8], [0]], names(&["x"]), names(&["y"])).is_err());
        assert!(MultilabelDataset::new(f.clone(), array![[1u8], [0]], names(&["y"]), names(&["y"])).is_err());
        let mut nan = f.clone();
        nan[[0, 0]] = f64::NAN;
        assert!(MultilabelDataset::new(nan, array![[1u8], [0]], names(&["x"]), names(&["y"])).is_err());
    }

    proptest! {
        #[test]
        fn cardinality_is_sum_of_prevalences(bits in proptest::collection::vec(0u8..2, 12..=12)) {
            let y = Array2::from_shape_vec((4, 3), bits).unwrap();
            let stats = dataset_stats(&task_with_labels(y));
            let total: f64 = stats.per_label_prevalence.iter().sum();
            prop_assert_eq!(stats.cardinality, total);
            prop_assert!(stats.cardinality >= 0.0 && stats.cardinality <= 3.0);
        }

        #[test]
        fn filter_is_idempotent(bits in proptest::collection::vec(0u8..2, 40..=40), thr in 0.0f64..0.6) {
            let y = Array2::from_shape_vec((10, 4), bits).unwrap();
            let task = task_with_labels(y);
            if let Ok((once, _)) = filter_sparse_labels(&task, thr) {
                let (twice, removed) = filter_sparse_labels(&once, thr).unwrap();
                prop_assert!(removed.is_empty());
                prop_assert_eq!(twice, once);
            }
        }

        #[test]
        fn augment_then_slice_recovers_parts(
            vals in proptest::collection::vec(-1e6f64..1e6, 15..=15),
            bits in proptest::collection::vec(0u8..2, 10..=10),
        ) {
            let a = Array2::from_shape_vec((5, 3), vals).unwrap();
            let b = Array2::from_shape_vec((5, 2), bits).unwrap();
            let ab = augment_features(a.view(), b.view()).unwrap();
            prop_assert_eq!(ab.slice(s![.., ..3]), a.view());
            prop_assert_eq!(ab.slice(s![.., 3..]).mapv(|v| v as u8), b);
        }
    }
}
