use ndarray::{Array2, ArrayView2, Axis};

use super::{Method, MultilabelModel};
use crate::data::{augment_features, MultilabelDataset};
use crate::error::{Error, Result};
use crate::metrics::PredictionSet;

fn hard(probs: &Array2<f64>, threshold: f64) -> Array2<u8> {
    probs.mapv(|p| u8::from(p >= threshold))
}

impl MultilabelModel {
    /// Probability matrix of the final stage, one column per label.
    pub fn predict_probs(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.n_features(),
                features.ncols()
            )));
        }
        let (n, m) = (features.nrows(), self.n_labels());
        let mut probs = Array2::<f64>::zeros((n, m));
        match self.method {
            Method::BinaryRelevance => {
                for (k, model) in self.per_label.iter().enumerate() {
                    probs.column_mut(k).assign(&model.predict_prob(features)?);
                }
            }
            Method::ClassifierChains | Method::NestedStacking => {
                let order = self.chain_order.as_ref().expect("chain methods store an order");
                let tau = order.as_slice();
                let mut chained = Array2::<u8>::zeros((n, m));
                for (j, &k) in tau.iter().enumerate() {
                    let x = augment_features(features, chained.slice(ndarray::s![.., ..j]))?;
                    let p = self.per_label[k].predict_prob(x.view())?;
                    chained.column_mut(j).assign(&p.mapv(|v| u8::from(v >= self.threshold)));
                    probs.column_mut(k).assign(&p);
                }
            }
            Method::DependentBinaryRelevance | Method::Stacking => {
                let mut first = Array2::<f64>::zeros((n, m));
                for (k, model) in self.first_level.iter().enumerate() {
                    first.column_mut(k).assign(&model.predict_prob(features)?);
                }
                let first = hard(&first, self.threshold);
                let stacked = if self.method == Method::Stacking {
                    Some(augment_features(features, first.view())?)
                } else {
                    None
                };
                for (k, model) in self.per_label.iter().enumerate() {
                    let p = match &stacked {
                        Some(x) => model.predict_prob(x.view())?,
                        None => {
                            let others: Vec<usize> = (0..m).filter(|&l| l != k).collect();
                            let x = augment_features(features, first.select(Axis(1), &others).view())?;
                            model.predict_prob(x.view())?
                        }
                    };
                    probs.column_mut(k).assign(&p);
                }
            }
        }
        Ok(probs)
    }

    pub fn predict(&self, features: ArrayView2<'_, f64>) -> Result<PredictionSet> {
        let probs = self.predict_probs(features)?;
        PredictionSet::from_probs(probs, self.threshold, self.label_names.clone(), None)
    }

    /// Predicts a dataset with the same label columns and attaches its labels as truth.
    pub fn predict_dataset(&self, data: &MultilabelDataset) -> Result<PredictionSet> {
        if data.label_names() != self.label_names.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "dataset labels {:?} differ from model labels {:?}",
                data.label_names(),
                self.label_names
            )));
        }
        let probs = self.predict_probs(data.features())?;
        PredictionSet::from_probs(
            probs,
            self.threshold,
            self.label_names.clone(),
            Some(data.labels().to_owned()),
        )
    }
}

pub fn predict_multilabel(model: &MultilabelModel, features: ArrayView2<'_, f64>) -> Result<PredictionSet> {
    model.predict(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::toy_task;
    use crate::data::Task;
    use crate::learners::{fit_binary, BaseLearnerSpec};
    use crate::metrics::hamming_loss;
    use crate::synthetic::{make_synthetic_task, DependenceSpec, LabelRule};
    use crate::transform::{ChainOrder, MultilabelLearner};
    use ndarray::{array, Array1};
    use proptest::prelude::*;

    fn fit(method: Method, base: BaseLearnerSpec, task: &Task) -> MultilabelModel {
        MultilabelLearner::new(method, base).fit(task).unwrap()
    }

    #[test]
    fn constants_ignore_augmentation() {
        let task = toy_task();
        let x = array![[0.3, 9.0, -1.0], [2.0, 2.0, 2.0]];
        for method in Method::ALL {
            let model = fit(method, BaseLearnerSpec::MockConstant(vec![1, 0, 1]), &task);
            let pred = model.predict(x.view()).unwrap();
            for row in pred.predicted().rows() {
                assert_eq!(row.to_vec(), vec![1, 0, 1], "{method}");
            }
        }
    }

    #[test]
    fn br_memorizer_recalls_training_labels() {
        let task = toy_task();
        let model = fit(Method::BinaryRelevance, BaseLearnerSpec::MockMemorizer, &task);
        let pred = model.predict_dataset(task.dataset()).unwrap();
        assert_eq!(pred.predicted(), task.dataset().labels());
        assert_eq!(hamming_loss(&pred).unwrap(), 0.0);
    }

    #[test]
    fn dbr_two_level_trace() {
        let data = MultilabelDataset::new(
            array![[0.5], [1.5]],
            array![[0u8, 1], [1, 0]],
            vec!["x".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let task = Task::new("dbr", data).unwrap();
        let model = MultilabelLearner::new(
            Method::DependentBinaryRelevance,
            BaseLearnerSpec::MockConstant(vec![1, 1]),
        )
        .with_meta(BaseLearnerSpec::MockCopyColumn(0))
        .fit(&task)
        .unwrap();
        let pred = model.predict(array![[7.0], [-3.0]].view()).unwrap();
        assert_eq!(pred.predicted(), array![[1u8, 1], [1, 1]]);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let model = fit(Method::BinaryRelevance, BaseLearnerSpec::Featureless, &toy_task());
        assert!(matches!(
            model.predict(array![[1.0, 2.0]].view()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    fn single_label_task(n: usize, seed: u64) -> Task {
        let spec = DependenceSpec {
            rules: vec![LabelRule::linear(vec![1.5, -1.0], 0.2, 0.1)],
        };
        make_synthetic_task(n, 2, &spec, seed).unwrap()
    }

    #[test]
    fn single_label_collapse() {
        let task = single_label_task(60, 5);
        let data = task.dataset();
        for base in [
            BaseLearnerSpec::logistic(),
            BaseLearnerSpec::tree(),
            BaseLearnerSpec::Featureless,
        ] {
            let bare = fit_binary(&base, data.features(), data.label(0)).unwrap();
            let expected = bare.predict_prob(data.features()).unwrap();
            for method in [
                Method::BinaryRelevance,
                Method::ClassifierChains,
                Method::NestedStacking,
            ] {
                let probs = fit(method, base.clone(), &task).predict_probs(data.features()).unwrap();
                assert_eq!(probs.column(0), expected.view(), "{method}");
            }
        }
    }

    #[test]
    fn nst_featureless_matches_br() {
        let task = toy_task();
        let x = task.dataset().features();
        let br = fit(Method::BinaryRelevance, BaseLearnerSpec::Featureless, &task)
            .predict_probs(x)
            .unwrap();
        let nst = fit(Method::NestedStacking, BaseLearnerSpec::Featureless, &task)
            .predict_probs(x)
            .unwrap();
        assert_eq!(br, nst);
    }

    #[test]
    fn sta_with_zero_first_level_matches_zero_padded_meta() {
        // all prevalences below one half: featureless first level predicts 0 everywhere
        let spec = DependenceSpec {
            rules: vec![
                LabelRule::linear(vec![2.0, 0.0], -1.5, 0.0),
                LabelRule::linear(vec![0.0, 2.0], -1.5, 0.0),
            ],
        };
        let task = make_synthetic_task(80, 2, &spec, 3).unwrap();
        let data = task.dataset();
        assert!(data.prevalences().iter().all(|&p| p < 0.5));
        let model = MultilabelLearner::new(Method::Stacking, BaseLearnerSpec::Featureless)
            .with_meta(BaseLearnerSpec::logistic())
            .fit(&task)
            .unwrap();
        let padded = augment_features(data.features(), Array2::<u8>::zeros((80, 2)).view()).unwrap();
        for k in 0..2 {
            let direct = fit_binary(&BaseLearnerSpec::logistic(), padded.view(), data.label(k)).unwrap();
            assert_eq!(
                model.predict_probs(data.features()).unwrap().column(k),
                direct.predict_prob(padded.view()).unwrap()
            );
        }
    }

    #[test]
    fn chain_with_memorizer_fits_copied_label() {
        let spec = DependenceSpec {
            rules: vec![
                LabelRule::linear(vec![3.0, 0.0, 0.0], 0.0, 0.0),
                LabelRule::copy_of(0, 0.0),
            ],
        };
        let task = make_synthetic_task(200, 3, &spec, 11).unwrap();
        let model = fit(Method::ClassifierChains, BaseLearnerSpec::MockMemorizer, &task);
        let pred = model.predict_dataset(task.dataset()).unwrap();
        assert_eq!(crate::metrics::subset01_loss(&pred).unwrap(), 0.0);
    }

    fn permuted(task: &Task, perm: &[usize]) -> Task {
        let data = task.dataset().select_labels(perm).unwrap();
        task.with_dataset(data)
    }

    #[test]
    fn label_permutation_equivariance() {
        let spec = DependenceSpec {
            rules: vec![
                LabelRule::linear(vec![1.0, 0.5, 0.0], 0.0, 0.1),
                LabelRule::copy_of(0, 0.2),
                LabelRule::linear(vec![0.0, -1.0, 1.0], 0.3, 0.1),
            ],
        };
        let task = make_synthetic_task(70, 3, &spec, 21).unwrap();
        let perm = [2usize, 0, 1];
        let other = permuted(&task, &perm);
        let x = task.dataset().features();
        // DBR and STA see the augmenting columns in a different order, so sums
        // inside the logistic fit may round differently
        let base = BaseLearnerSpec::logistic();
        {
            for method in Method::ALL {
                let mut a = MultilabelLearner::new(method, base.clone()).with_seed(4);
                let mut b = a.clone();
                if method.uses_chain() {
                    // chain on original labels 1,2,0 == chain on permuted labels 1,2,0 mapped through perm
                    a = a.with_chain_order(ChainOrder::new(vec![1, 2, 0]).unwrap());
                    let inverse: Vec<usize> = [1usize, 2, 0]
                        .iter()
                        .map(|&k| perm.iter().position(|&p| p == k).unwrap())
                        .collect();
                    b = b.with_chain_order(ChainOrder::new(inverse).unwrap());
                }
                let pa = a.fit(&task).unwrap().predict_probs(x).unwrap();
                let pb = b.fit(&other).unwrap().predict_probs(x).unwrap();
                let diff = (&pa.select(Axis(1), &perm) - &pb)
                    .mapv(f64::abs)
                    .fold(0.0, |a: f64, &b| a.max(b));
                assert!(diff < 1e-9, "{method}: {diff}");
            }
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let task = single_label_task(50, 8);
        let task = task.with_dataset(
            MultilabelDataset::new(
                task.dataset().features().to_owned(),
                ndarray::concatenate![Axis(1), task.dataset().labels(), task.dataset().labels()],
                task.dataset().feature_names().to_vec(),
                vec!["a".into(), "b".into()],
            )
            .unwrap(),
        );
        for method in Method::ALL {
            let l = MultilabelLearner::new(method, BaseLearnerSpec::logistic())
                .with_seed(99)
                .with_workers(3);
            assert_eq!(l.fit(&task).unwrap(), l.fit(&task).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn predictions_are_consistent_with_threshold(seed in 0u64..1000, thr in 0.05f64..0.95) {
            let task = single_label_task(30, seed);
            for method in Method::ALL {
                let model = MultilabelLearner::new(method, BaseLearnerSpec::tree()).with_threshold(thr).fit(&task).unwrap();
                let pred = model.predict(task.dataset().features()).unwrap();
                let expected: Array1<u8> = pred.probs().column(0).mapv(|p| u8::from(p >= thr));
                prop_assert_eq!(pred.predicted().column(0), expected.view());
            }
        }
    }
}
