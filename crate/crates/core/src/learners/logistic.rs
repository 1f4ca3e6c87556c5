use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Batch gradient descent on the L2-regularized mean log-loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            iterations: 1000,
            l2: 1e-4,
        }
    }
}

impl LogisticParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "logistic learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "logistic l2 must be non-negative, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

/// Linear model on internally standardized inputs. Columns with zero spread
/// at training time have `scale == 0` and are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective and gradient of
/// `(1/n) Σ [log(1 + e^{z_i}) - y_i z_i] + (l2/2)‖w‖²` with `z = Xw + b`.
///
/// Returns `(loss, d/dw, d/db)`.
pub fn loss_and_gradient(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, u8>,
    weights: ArrayView1<'_, f64>,
    bias: f64,
    l2: f64,
) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x.dot(&weights) + bias;
    let mut loss = 0.0;
    let mut residual = Array1::<f64>::zeros(z.len());
    for (i, &zi) in z.iter().enumerate() {
        let yi = f64::from(y[i]);
        loss += softplus(zi) - yi * zi;
        residual[i] = sigmoid(zi) - yi;
    }
    loss = loss / n + 0.5 * l2 * weights.dot(&weights);
    let grad_w = x.t().dot(&residual) / n + &weights * l2;
    let grad_b = residual.sum() / n;
    (loss, grad_w, grad_b)
}

impl LogisticModel {
    pub(crate) fn fit(params: &LogisticParams, features: ArrayView2<'_, f64>, target: ArrayView1<'_, u8>) -> Self {
        let n = features.nrows() as f64;
        // explicit row-order sums keep the result independent of memory layout
        let means: Vec<f64> = features
            .columns()
            .into_iter()
            .map(|c| c.iter().sum::<f64>() / n)
            .collect();
        let scales: Vec<f64> = features
            .columns()
            .into_iter()
            .zip(&means)
            .map(|(c, &mu)| (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        let active: Vec<usize> = (0..scales.len()).filter(|&j| scales[j] > 0.0).collect();

        let mut x = Array2::<f64>::zeros((features.nrows(), active.len()));
        for (a, &j) in active.iter().enumerate() {
            let (mu, sd) = (means[j], scales[j]);
            x.column_mut(a).assign(&features.column(j).mapv(|v| (v - mu) / sd));
        }

        let mut w = Array1::<f64>::zeros(active.len());
        let mut b = 0.0;
        for _ in 0..params.iterations {
            let (_, gw, gb) = loss_and_gradient(x.view(), target, w.view(), b, params.l2);
            w.scaled_add(-params.learning_rate, &gw);
            b -= params.learning_rate * gb;
        }

        let mut weights = vec![0.0; scales.len()];
        for (a, &j) in active.iter().enumerate() {
            weights[j] = w[a];
        }
        Self {
            means,
            scales,
            weights,
            bias: b,
        }
    }

    pub(crate) fn predict_prob(&self, features: ArrayView2<'_, f64>) -> Array1<f64> {
        features
            .rows()
            .into_iter()
            .map(|row| {
                let mut z = self.bias;
                for (j, &v) in row.iter().enumerate() {
                    if self.scales[j] > 0.0 {
                        z += self.weights[j] * (v - self.means[j]) / self.scales[j];
                    }
                }
                sigmoid(z)
            })
            .collect()
    }
}
