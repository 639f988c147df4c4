use nalgebra::DMatrix;

use super::{LossOracle, ParamVector};
use crate::error::{Error, Result};

const POWER_ITERATIONS: usize = 50;
const POWER_SAFETY: f64 = 1.01;

/// l2-regularized logistic loss
/// `(1/m) sum_i log(1 + exp(-y_i a_i'x)) + (lambda/2)||x||^2`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    features: DMatrix<f64>,
    labels: ParamVector,
    lambda: f64,
    l: f64,
}

pub fn make_logistic(features: DMatrix<f64>, labels: ParamVector, lambda: f64) -> Result<LogisticLoss> {
    if features.nrows() == 0 || features.ncols() == 0 {
        return Err(Error::Empty("logistic dataset"));
    }
    if labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            got: labels.len(),
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if let Some(&label) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidLabel { label });
    }
    let m = features.nrows() as f64;
    let l = lambda + POWER_SAFETY * gram_top_eigenvalue(&features) / (4.0 * m);
    Ok(LogisticLoss {
        features,
        labels,
        lambda,
        l,
    })
}

/// Power iteration on `A'A` without forming it.
fn gram_top_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let d = a.ncols();
    let mut v = ParamVector::from_element(d, 1.0 / (d as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = a.tr_mul(&(a * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = v.dot(&w);
        v = w / norm;
    }
    // Rayleigh quotient of the last normalized iterate.
    estimate.max(v.dot(&a.tr_mul(&(a * &v))))
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticLoss {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn samples(&self) -> usize {
        self.features.nrows()
    }

    fn margins(&self, x: &ParamVector) -> ParamVector {
        (&self.features * x).component_mul(&self.labels)
    }
}

impl LossOracle for LogisticLoss {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &ParamVector) -> f64 {
        let m = self.samples() as f64;
        let data: f64 = self.margins(x).iter().map(|&z| softplus(-z)).sum();
        data / m + 0.5 * self.lambda * x.norm_squared()
    }

    fn grad(&self, x: &ParamVector) -> ParamVector {
        let m = self.samples() as f64;
        // d/dz log(1 + e^{-z}) = -sigmoid(-z)
        let weights = self.margins(x).zip_map(&self.labels, |z, y| -y * sigmoid(-z) / m);
        self.features.tr_mul(&weights) + x * self.lambda
    }

    fn hvp(&self, x: &ParamVector, v: &ParamVector) -> Option<ParamVector> {
        let m = self.samples() as f64;
        let av = &self.features * v;
        let weights = self.margins(x).zip_map(&av, |z, t| {
            let s = sigmoid(z);
            s * (1.0 - s) * t / m
        });
        Some(self.features.tr_mul(&weights) + v * self.lambda)
    }

    fn mu(&self) -> Option<f64> {
        Some(self.lambda)
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn value_at_origin_is_log_two() {
        let loss = make_logistic(dmatrix![1.0, 2.0; -3.0, 0.5], dvector![1.0, -1.0], 0.7).unwrap();
        assert!((loss.value(&ParamVector::zeros(2)) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn single_sample_gradient_at_origin() {
        let loss = make_logistic(dmatrix![1.0, 0.0], dvector![1.0], 1.0).unwrap();
        assert_eq!(loss.grad(&ParamVector::zeros(2)), dvector![-0.5, 0.0]);
    }

    #[test]
    fn smoothness_dominates_exact_gram_bound() {
        let a = dmatrix![1.0, 2.0, 0.0; -3.0, 0.5, 1.0; 0.2, 0.2, 0.2; 4.0, -1.0, 2.0];
        let loss = make_logistic(a.clone(), dvector![1.0, -1.0, 1.0, 1.0], 0.1).unwrap();
        let exact = (a.transpose() * &a).symmetric_eigen().eigenvalues.max();
        let bound = 0.1 + exact / 16.0;
        let l = loss.smoothness().unwrap();
        assert!(l >= bound && l <= 0.1 + 1.02 * exact / 16.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            make_logistic(dmatrix![1.0], dvector![0.0], 1.0),
            Err(Error::InvalidLabel { .. })
        ));
        assert!(make_logistic(dmatrix![1.0], dvector![1.0], 0.0).is_err());
        assert!(make_logistic(dmatrix![1.0; 2.0], dvector![1.0], 1.0).is_err());
        assert!(make_logistic(DMatrix::zeros(0, 3), dvector![], 1.0).is_err());
    }

    #[test]
    fn extreme_margins_stay_finite() {
        let loss = make_logistic(dmatrix![1.0], dvector![1.0], 1.0).unwrap();
        for x in [-1e4, 1e4] {
            let x = dvector![x];
            assert!(loss.value(&x).is_finite());
            assert!(loss.grad(&x).iter().all(|g| g.is_finite()));
        }
    }
}
