use std::sync::Arc;

use super::lbfgs::{minimize_lbfgs, LbfgsSettings};
use crate::error::{Error, Result};
use crate::problems::{LossOracle, ParamVector};

/// The server-side subproblem of one PIGS round,
/// `phi_k(x) = Lhat(x) + <g_tilde_k - grad Lhat(x_k), x> + ||x - x_k||^2 / (2 eta)`.
#[derive(Clone)]
pub struct ProxSubproblem {
    pub proxy: Arc<dyn LossOracle>,
    pub g_tilde_k: ParamVector,
    pub grad_proxy_at_xk: ParamVector,
    pub x_k: ParamVector,
    pub eta: f64,
    /// `g_tilde_k - grad Lhat(x_k)`.
    correction: ParamVector,
}

impl ProxSubproblem {
    pub fn new(proxy: Arc<dyn LossOracle>, g_tilde_k: ParamVector, x_k: ParamVector, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        for v in [&g_tilde_k, &x_k] {
            if v.len() != proxy.dim() {
                return Err(Error::DimensionMismatch {
                    expected: proxy.dim(),
                    got: v.len(),
                });
            }
        }
        let grad_proxy_at_xk = proxy.grad(&x_k);
        let correction = &g_tilde_k - &grad_proxy_at_xk;
        Ok(Self {
            proxy,
            g_tilde_k,
            grad_proxy_at_xk,
            x_k,
            eta,
            correction,
        })
    }
}

impl LossOracle for ProxSubproblem {
    fn dim(&self) -> usize {
        self.x_k.len()
    }

    fn value(&self, x: &ParamVector) -> f64 {
        self.proxy.value(x) + self.correction.dot(x) + (x - &self.x_k).norm_squared() / (2.0 * self.eta)
    }

    fn grad(&self, x: &ParamVector) -> ParamVector {
        self.proxy.grad(x) + &self.correction + (x - &self.x_k) / self.eta
    }

    fn hvp(&self, x: &ParamVector, v: &ParamVector) -> Option<ParamVector> {
        Some(self.proxy.hvp(x, v)? + v / self.eta)
    }

    fn mu(&self) -> Option<f64> {
        self.proxy.mu().map(|m| m + 1.0 / self.eta)
    }

    fn smoothness(&self) -> Option<f64> {
        self.proxy.smoothness().map(|l| l + 1.0 / self.eta)
    }
}

/// Multiple of machine epsilon, relative to the magnitude of the terms of
/// `grad phi_k`, below which its norm is indistinguishable from rounding.
pub const ROUNDING_FACTOR: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ProxSolution {
    pub x_next: ParamVector,
    pub inner_iters: usize,
    /// `||grad phi_k(x_next)||^2`.
    pub criterion_value: f64,
    /// `c ||x_next - x_k||^2 + E^2`.
    pub bound: f64,
    /// Squared rounding level of `grad phi_k` at `x_next`; the step is
    /// accepted when `criterion_value <= bound + rounding_floor`.
    pub rounding_floor: f64,
}

/// Approximately minimizes `phi_k` with L-BFGS warm-started at `x_k`,
/// stopping at the first iterate with
/// `||grad phi_k(x)||^2 <= c ||x - x_k||^2 + E^2`, read up to the rounding
/// level of the computed gradient so that `c = E = 0` remains satisfiable.
pub fn solve_prox(sub: &ProxSubproblem, c: f64, e: f64, max_inner: usize) -> Result<ProxSolution> {
    if !(c >= 0.0 && e >= 0.0) {
        return Err(Error::InvalidParameter(format!("need c, E >= 0, got c = {c}, E = {e}")));
    }
    let e2 = e * e;
    let bound_at = |x: &ParamVector| c * (x - &sub.x_k).norm_squared() + e2;
    // The proxy gradient itself is a difference of terms of size about `L ||x||`.
    let curvature = sub.proxy.smoothness().unwrap_or(0.0);
    let magnitude = sub.grad_proxy_at_xk.norm() + sub.correction.norm();
    let floor_at = |x: &ParamVector| {
        let scale = magnitude + curvature * x.norm() + (x - &sub.x_k).norm() / sub.eta;
        (ROUNDING_FACTOR * f64::EPSILON * scale).powi(2)
    };
    let settings = LbfgsSettings {
        max_iter: max_inner,
        ..LbfgsSettings::default()
    };
    let out = minimize_lbfgs(
        &sub.x_k,
        |x| (sub.value(x), sub.grad(x)),
        |x, g| g.norm_squared() <= bound_at(x) + floor_at(x),
        settings,
    );
    let criterion_value = out.grad.norm_squared();
    let bound = bound_at(&out.x);
    let rounding_floor = floor_at(&out.x);
    if !out.accepted {
        return Err(Error::ProxNotConverged {
            iterations: out.iterations,
            criterion: criterion_value,
            bound,
            best: out.x,
        });
    }
    Ok(ProxSolution {
        x_next: out.x,
        inner_iters: out.iterations,
        criterion_value,
        bound,
        rounding_floor,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::{dmatrix, dvector, DMatrix};

    use super::*;
    use crate::problems::make_quadratic;

    fn proxy() -> Arc<dyn LossOracle> {
        Arc::new(
            make_quadratic(
                dmatrix![3.0, 1.0, 0.0; 1.0, 2.0, 0.5; 0.0, 0.5, 1.0],
                dvector![1.0, -1.0, 2.0],
            )
            .unwrap(),
        )
    }

    #[test]
    fn stationary_warm_start_takes_no_steps() {
        let p = proxy();
        let x_star = p.minimizer().unwrap();
        let g = p.grad(&x_star);
        let sub = ProxSubproblem::new(p, g, x_star.clone(), 0.7).unwrap();
        let sol = solve_prox(&sub, 0.0, 0.0, 100).unwrap();
        assert_eq!(sol.inner_iters, 0);
        assert_eq!(sol.x_next, x_star);
    }

    #[test]
    fn quadratic_prox_matches_linear_solve() {
        let p = proxy();
        let x_k = dvector![0.5, 0.2, -1.0];
        let g_tilde = dvector![0.3, -2.0, 1.0];
        let eta = 2.0;
        let sub = ProxSubproblem::new(p, g_tilde.clone(), x_k.clone(), eta).unwrap();
        let sol = solve_prox(&sub, 0.0, 1e-10, 500).unwrap();

        // (A + I/eta) x = b - (g_tilde - grad Lhat(x_k)) + x_k / eta
        let a = dmatrix![3.0, 1.0, 0.0; 1.0, 2.0, 0.5; 0.0, 0.5, 1.0];
        let b = dvector![1.0, -1.0, 2.0];
        let grad_k = &a * &x_k - &b;
        let lhs = &a + DMatrix::identity(3, 3) / eta;
        let rhs = &b - (&g_tilde - grad_k) + &x_k / eta;
        let exact = lhs.lu().solve(&rhs).unwrap();
        assert!((sol.x_next - exact).norm() < 1e-8);
        assert!(sol.criterion_value <= sol.bound);
    }

    #[test]
    fn exact_solve_stops_at_rounding_level() {
        let p = proxy();
        let sub = ProxSubproblem::new(p, dvector![0.3, -2.0, 1.0], dvector![0.5, 0.2, -1.0], 2.0).unwrap();
        let sol = solve_prox(&sub, 0.0, 0.0, 500).unwrap();
        assert!(sol.criterion_value <= sol.rounding_floor);
        assert!(sol.rounding_floor < 1e-24);
    }

    #[test]
    fn exhausted_budget_is_an_error() {
        let p = proxy();
        let sub = ProxSubproblem::new(p, dvector![5.0, 5.0, 5.0], dvector![0.0, 0.0, 0.0], 1.0).unwrap();
        let err = solve_prox(&sub, 0.0, 0.0, 1).unwrap_err();
        assert!(matches!(err, Error::ProxNotConverged { .. }));
    }
}
