use nalgebra::DMatrix;

use super::{LossOracle, ParamVector};
use crate::error::{Error, Result};

/// `L(x) = x'Ax/2 - b'x` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    a: DMatrix<f64>,
    b: ParamVector,
    mu: f64,
    l: f64,
    minimizer: Option<ParamVector>,
}

pub fn make_quadratic(a: DMatrix<f64>, b: ParamVector) -> Result<QuadraticLoss> {
    let d = b.len();
    if d == 0 {
        return Err(Error::Empty("quadratic of dimension zero"));
    }
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.nrows().max(a.ncols()),
        });
    }
    let scale = a.amax().max(1.0);
    let asymmetry = (&a - a.transpose()).amax();
    if asymmetry > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let eig = a.clone().symmetric_eigen();
    let mu = eig.eigenvalues.min();
    let l = eig.eigenvalues.max();
    if mu < -1e-12 * scale {
        return Err(Error::NotPsd { min_eigenvalue: mu });
    }
    let mu = mu.max(0.0);
    let minimizer = if mu > 1e-12 * l {
        a.clone().cholesky().map(|c| c.solve(&b))
    } else {
        None
    };
    Ok(QuadraticLoss { a, b, mu, l, minimizer })
}

impl QuadraticLoss {
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear_term(&self) -> &ParamVector {
        &self.b
    }
}

impl LossOracle for QuadraticLoss {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &ParamVector) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x)
    }

    fn grad(&self, x: &ParamVector) -> ParamVector {
        &self.a * x - &self.b
    }

    fn hvp(&self, _x: &ParamVector, v: &ParamVector) -> Option<ParamVector> {
        Some(&self.a * v)
    }

    fn mu(&self) -> Option<f64> {
        Some(self.mu)
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.l)
    }

    fn minimizer(&self) -> Option<ParamVector> {
        self.minimizer.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn identity_gradient() {
        let q = make_quadratic(DMatrix::identity(2, 2), dvector![0.0, 0.0]).unwrap();
        assert_eq!(q.grad(&dvector![1.0, 1.0]), dvector![1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum() {
        let q = make_quadratic(dmatrix![1.0, 0.0; 0.0, 100.0], dvector![0.0, 0.0]).unwrap();
        assert_eq!(q.mu(), Some(1.0));
        assert_eq!(q.smoothness(), Some(100.0));
        assert_eq!(q.minimizer(), Some(dvector![0.0, 0.0]));
    }

    #[test]
    fn minimizer_solves_linear_system() {
        let q = make_quadratic(dmatrix![2.0, 0.0; 0.0, 3.0], dvector![2.0, 3.0]).unwrap();
        let x = q.minimizer().unwrap();
        assert!((x - dvector![1.0, 1.0]).norm() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let err = make_quadratic(dmatrix![1.0, 2.0; 0.0, 1.0], dvector![0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn singular_has_no_minimizer() {
        let q = make_quadratic(dmatrix![1.0, 0.0; 0.0, 0.0], dvector![0.0, 0.0]).unwrap();
        assert_eq!(q.mu(), Some(0.0));
        assert!(q.minimizer().is_none());
    }
}
