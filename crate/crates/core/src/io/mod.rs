//! Dataset readers and the prediction and model file formats.

pub mod arff;
mod delimited;
pub mod model_file;
pub mod predictions;

use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::data::{dataset_from_table, feature_matrix_for, Column, MultilabelDataset, Table, Task};
use crate::error::{Error, Result};
use crate::transform::MultilabelModel;

pub use arff::{ArffDocument, Attribute, AttributeType, Value};
pub use delimited::read_csv_table;
pub use model_file::{load_model, save_model};
pub use predictions::{read_predictions, write_predictions};

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| with_path(path, e))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Which columns of a file are labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSpec {
    Names(Vec<String>),
    /// The last `k` columns.
    Trailing(usize),
}

impl LabelSpec {
    pub fn resolve(&self, table: &Table) -> Result<Vec<String>> {
        match self {
            LabelSpec::Names(names) => {
                if names.is_empty() {
                    return Err(Error::InvalidArgument("no label columns given".into()));
                }
                for n in names {
                    if table.column(n).is_none() {
                        return Err(Error::UnknownTarget(n.clone()));
                    }
                }
                Ok(names.clone())
            }
            LabelSpec::Trailing(k) => {
                let all = table.names();
                if *k == 0 || *k > all.len() {
                    return Err(Error::InvalidArgument(format!(
                        "cannot take {k} trailing labels from {} columns",
                        all.len()
                    )));
                }
                Ok(all[all.len() - k..].to_vec())
            }
        }
    }
}

/// `last:K` for the trailing `K` columns, otherwise a comma-separated name list.
impl FromStr for LabelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("last:") {
            let k = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad trailing label count `{k}`")))?;
            return Ok(LabelSpec::Trailing(k));
        }
        let names: Vec<String> = s
            .split(',')
            .map(|n| n.trim().to_string())
            .filter(|n| !n.is_empty())
            .collect();
        if names.is_empty() {
            return Err(Error::InvalidArgument("empty label list".into()));
        }
        Ok(LabelSpec::Names(names))
    }
}

impl std::fmt::Display for LabelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelSpec::Names(n) => f.write_str(&n.join(",")),
            LabelSpec::Trailing(k) => write!(f, "last:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    /// Drop constant non-label attributes before encoding.
    pub drop_constant: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self { drop_constant: true }
    }
}

/// Reads `.arff` files with the ARFF parser and anything else as CSV.
pub fn read_table(path: &Path) -> Result<Table> {
    let is_arff = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("arff"));
    if is_arff {
        ArffDocument::read(path)?.to_table()
    } else {
        read_csv_table(path)
    }
}

fn finish(mut table: Table, labels: &LabelSpec, options: &ReadOptions, source: &Path) -> Result<MultilabelDataset> {
    let targets = labels.resolve(&table)?;
    if options.drop_constant {
        let dropped = table.drop_constant_columns(&targets);
        if !dropped.is_empty() {
            log::info!(
                "{}: dropped {} constant column(s): {}",
                source.display(),
                dropped.len(),
                dropped.join(", ")
            );
        }
    }
    dataset_from_table(&table, &targets)
}

/// Label columns may be nominal with levels `{0,1}` (either order) or numeric 0/1.
/// Nominal features are one-hot encoded in declared level order.
pub fn read_arff(path: &Path, labels: &LabelSpec, options: &ReadOptions) -> Result<MultilabelDataset> {
    finish(ArffDocument::read(path)?.to_table()?, labels, options, path)
}

pub fn read_csv(path: &Path, labels: &LabelSpec, options: &ReadOptions) -> Result<MultilabelDataset> {
    finish(read_csv_table(path)?, labels, options, path)
}

/// Reads a dataset by extension; the task id is the file stem.
pub fn read_task(path: &Path, labels: &LabelSpec, options: &ReadOptions) -> Result<Task> {
    let data = finish(read_table(path)?, labels, options, path)?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .unwrap_or("task");
    Task::new(id, data)
}

/// Feature matrix for `model` from a raw table, plus the truth matrix when
/// every model label is a column of the table. Columns are matched by name;
/// extra columns are allowed only if they are constant (dropped at training).
pub fn prediction_inputs(table: &Table, model: &MultilabelModel) -> Result<(Array2<f64>, Option<Array2<u8>>)> {
    let labels = model.label_names();
    let has_truth = labels.iter().all(|l| table.column(l).is_some());
    let source_of = |feature: &str| -> String {
        match feature.split_once('=') {
            Some((attr, _)) if table.column(attr).is_some_and(|c| matches!(c, Column::Nominal { .. })) => {
                attr.to_string()
            }
            _ => feature.to_string(),
        }
    };
    let used: Vec<String> = model.feature_names().iter().map(|f| source_of(f)).collect();
    let extra: Vec<&String> = table
        .names()
        .iter()
        .zip(table.columns())
        .filter(|(n, c)| !labels.contains(n) && !used.contains(n) && !c.is_constant())
        .map(|(n, _)| n)
        .collect();
    if !extra.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} feature columns; the data has extra column(s) {}",
            model.n_features(),
            extra.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        )));
    }
    let features = feature_matrix_for(table, model.feature_names()).map_err(|e| match e {
        Error::InvalidDataset(msg) => {
            Error::DimensionMismatch(format!("model expects {} features: {msg}", model.n_features()))
        }
        other => other,
    })?;
    let truth = if has_truth {
        Some(dataset_from_table(table, labels)?.labels().to_owned())
    } else {
        None
    };
    Ok((features, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(ext: &str, body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    const FIVE: &str = "@relation r\n@attribute a numeric\n@attribute b numeric\n@attribute c numeric\n\
        @attribute y1 {0,1}\n@attribute y2 {1,0}\n@data\n1,2,3,0,1\n2,3,4,1,1\n3,4,5,0,0\n4,5,7,1,0\n";

    #[test]
    fn trailing_labels_from_arff() {
        let f = file(".arff", FIVE);
        let d = read_arff(f.path(), &LabelSpec::Trailing(2), &ReadOptions::default()).unwrap();
        assert_eq!((d.n_instances(), d.n_features(), d.n_labels()), (4, 3, 2));
        assert_eq!(d.label(1).to_vec(), vec![1, 1, 0, 0]);
    }

    #[test]
    fn non_binary_label_levels_fail() {
        let f = file(
            ".arff",
            "@relation r\n@attribute a numeric\n@attribute y {yes,no}\n@data\n1,yes\n2,no\n",
        );
        let e = read_arff(f.path(), &LabelSpec::Trailing(1), &ReadOptions::default()).unwrap_err();
        assert!(matches!(e, Error::NonBinaryLabel(_)));
    }

    #[test]
    fn nominal_feature_is_one_hot() {
        let f = file(
            ".arff",
            "@relation r\n@attribute a numeric\n@attribute c {x,y,z}\n@attribute y {0,1}\n@data\n1,x,0\n2,z,1\n3,y,1\n",
        );
        let d = read_arff(f.path(), &"y".parse().unwrap(), &ReadOptions::default()).unwrap();
        assert_eq!(d.feature_names(), ["a", "c=x", "c=y", "c=z"]);
        assert_eq!(d.features().row(1).to_vec(), vec![2.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_attributes_are_dropped_unless_disabled() {
        let body = "@relation r\n@attribute a numeric\n@attribute k {u,v}\n@attribute y {0,1}\n@data\n1,u,1\n2,u,1\n";
        let f = file(".arff", body);
        let d = read_arff(f.path(), &LabelSpec::Trailing(1), &ReadOptions::default()).unwrap();
        assert_eq!(d.feature_names(), ["a"]);
        // the constant label column itself stays
        assert_eq!(d.n_labels(), 1);
        let keep = ReadOptions { drop_constant: false };
        let d = read_arff(f.path(), &LabelSpec::Trailing(1), &keep).unwrap();
        assert_eq!(d.feature_names(), ["a", "k=u", "k=v"]);
    }

    #[test]
    fn csv_examples() {
        let f = file(".csv", "x1,x2,y1\n0.5,1,0\n1.5,2,1\n");
        let d = read_csv(f.path(), &"y1".parse().unwrap(), &ReadOptions::default()).unwrap();
        assert_eq!((d.n_features(), d.n_labels()), (2, 1));
        let f = file(".csv", "x1,y1\n0.5,2\n1.5,1\n");
        assert!(matches!(
            read_csv(f.path(), &"y1".parse().unwrap(), &ReadOptions::default()),
            Err(Error::NonBinaryLabel(_))
        ));
        let f = file(".csv", "x1,x1\n0.5,1\n");
        assert!(read_csv(f.path(), &LabelSpec::Trailing(1), &ReadOptions::default()).is_err());
    }

    #[test]
    fn label_spec_parsing() {
        assert_eq!("last:3".parse::<LabelSpec>().unwrap(), LabelSpec::Trailing(3));
        assert_eq!(
            "a, b".parse::<LabelSpec>().unwrap(),
            LabelSpec::Names(vec!["a".into(), "b".into()])
        );
        assert!("last:x".parse::<LabelSpec>().is_err());
        assert_eq!(LabelSpec::Trailing(2).to_string(), "last:2");
    }

    #[test]
    fn prediction_inputs_match_by_name() {
        use crate::learners::BaseLearnerSpec;
        use crate::transform::{Method, MultilabelLearner};
        let train = file(".arff", FIVE);
        let task = read_task(train.path(), &LabelSpec::Trailing(2), &ReadOptions::default()).unwrap();
        let model = MultilabelLearner::new(Method::BinaryRelevance, BaseLearnerSpec::Featureless)
            .fit(&task)
            .unwrap();
        let table = read_table(train.path()).unwrap();
        let (x, truth) = prediction_inputs(&table, &model).unwrap();
        assert_eq!(x, task.dataset().features());
        assert_eq!(truth.unwrap(), task.dataset().labels());

        let wider = file(".csv", "a,b,c,d,y1,y2\n1,2,3,4,0,1\n2,3,4,5,1,0\n");
        let e = prediction_inputs(&read_table(wider.path()).unwrap(), &model).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch(_)), "{e}");
        let unlabeled = file(".csv", "c,b,a\n1,2,3\n");
        let (x, truth) = prediction_inputs(&read_table(unlabeled.path()).unwrap(), &model).unwrap();
        assert_eq!(x.row(0).to_vec(), vec![3.0, 2.0, 1.0]);
        assert!(truth.is_none());
    }

    #[test]
    fn read_task_uses_file_stem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emotions.arff");
        std::fs::write(&path, FIVE).unwrap();
        let t = read_task(&path, &LabelSpec::Trailing(2), &ReadOptions::default()).unwrap();
        assert_eq!(t.id(), "emotions");
    }
}
