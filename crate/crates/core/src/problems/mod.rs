//! Loss oracles, client pools, heterogeneous data partitioning and the
//! closed-form Byzantine lower bounds.

mod bounds;
mod dataset;
mod heterogeneity;
mod logistic;
mod partition;
mod quadratic;

use std::sync::Arc;

use nalgebra::DVector;

use crate::attacks::AttackStrategy;
use crate::error::{Error, Result};

pub use bounds::{byzantine_bounds, ByzantineBounds};
pub use dataset::{binarize_labels, parse_dataset_csv, read_dataset_csv, two_gaussians, Dataset, SyntheticLogistic};
pub use heterogeneity::{estimate_heterogeneity, HeterogeneityEstimate};
pub use logistic::{make_logistic, LogisticLoss};
pub use partition::dirichlet_partition;
pub use quadratic::{make_quadratic, QuadraticLoss};

/// Dense model parameters, gradients and aggregated updates.
pub type ParamVector = DVector<f64>;

/// A differentiable loss with exact first-order information.
///
/// Implementations are pure: evaluating the oracle never mutates it, so a
/// single instance may be shared across threads.
pub trait LossOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &ParamVector) -> f64;

    fn grad(&self, x: &ParamVector) -> ParamVector;

    /// Hessian-vector product, when the loss supports it.
    fn hvp(&self, _x: &ParamVector, _v: &ParamVector) -> Option<ParamVector> {
        None
    }

    /// Strong-convexity modulus, if known.
    fn mu(&self) -> Option<f64> {
        None
    }

    /// Smoothness constant, if known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Exact minimizer, if available in closed form.
    fn minimizer(&self) -> Option<ParamVector> {
        None
    }
}

/// Unweighted arithmetic mean of a list of losses, i.e. the honest global
/// loss `L_H = (1/|H|) sum_i L_i`.
#[derive(Clone)]
pub struct MeanLoss {
    parts: Vec<Arc<dyn LossOracle>>,
}

impl MeanLoss {
    pub fn new(parts: Vec<Arc<dyn LossOracle>>) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("mean of zero losses"))?;
        let d = first.dim();
        for p in &parts {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[Arc<dyn LossOracle>] {
        &self.parts
    }
}

impl LossOracle for MeanLoss {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn value(&self, x: &ParamVector) -> f64 {
        self.parts.iter().map(|p| p.value(x)).sum::<f64>() / self.parts.len() as f64
    }

    fn grad(&self, x: &ParamVector) -> ParamVector {
        let mut g = ParamVector::zeros(self.dim());
        for p in &self.parts {
            g += p.grad(x);
        }
        g / self.parts.len() as f64
    }

    fn hvp(&self, x: &ParamVector, v: &ParamVector) -> Option<ParamVector> {
        let mut h = ParamVector::zeros(self.dim());
        for p in &self.parts {
            h += p.hvp(x, v)?;
        }
        Some(h / self.parts.len() as f64)
    }

    // The mean of mu_i-strongly convex losses is (mean mu_i)-strongly convex,
    // and likewise for smoothness.
    fn mu(&self) -> Option<f64> {
        let total: Option<f64> = self.parts.iter().map(|p| p.mu()).sum();
        total.map(|t| t / self.parts.len() as f64)
    }

    fn smoothness(&self) -> Option<f64> {
        let total: Option<f64> = self.parts.iter().map(|p| p.smoothness()).sum();
        total.map(|t| t / self.parts.len() as f64)
    }
}

/// The `n` clients of one simulation: honest loss oracles and Byzantine
/// strategies, laid out on client indices `0..n`.
#[derive(Clone)]
pub struct ClientPool {
    honest: Vec<Arc<dyn LossOracle>>,
    byzantine: Vec<AttackStrategy>,
    /// `true` at the client indices held by Byzantine clients.
    byzantine_slots: Vec<bool>,
    global: MeanLoss,
}

impl ClientPool {
    /// Honest clients take the first `n - f` indices, Byzantine ones the rest.
    pub fn new(honest: Vec<Arc<dyn LossOracle>>, byzantine: Vec<AttackStrategy>) -> Result<Self> {
        let n = honest.len() + byzantine.len();
        let slots = (0..n).map(|i| i >= honest.len()).collect();
        Self::with_slots(honest, byzantine, slots)
    }

    /// Places clients explicitly; `byzantine_slots[i]` marks index `i` as Byzantine.
    pub fn with_slots(
        honest: Vec<Arc<dyn LossOracle>>,
        byzantine: Vec<AttackStrategy>,
        byzantine_slots: Vec<bool>,
    ) -> Result<Self> {
        let n = honest.len() + byzantine.len();
        if byzantine_slots.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: byzantine_slots.len(),
            });
        }
        let marked = byzantine_slots.iter().filter(|&&b| b).count();
        if marked != byzantine.len() {
            return Err(Error::InvalidParameter(format!(
                "{marked} Byzantine slots marked for {} Byzantine clients",
                byzantine.len()
            )));
        }
        let global = MeanLoss::new(honest.clone())?;
        Ok(Self {
            honest,
            byzantine,
            byzantine_slots,
            global,
        })
    }

    pub fn n(&self) -> usize {
        self.byzantine_slots.len()
    }

    pub fn f(&self) -> usize {
        self.byzantine.len()
    }

    pub fn dim(&self) -> usize {
        self.global.dim()
    }

    pub fn honest(&self) -> &[Arc<dyn LossOracle>] {
        &self.honest
    }

    pub fn byzantine(&self) -> &[AttackStrategy] {
        &self.byzantine
    }

    pub fn byzantine_slots(&self) -> &[bool] {
        &self.byzantine_slots
    }

    /// The honest global loss `L_H`.
    pub fn mean_loss(&self) -> &MeanLoss {
        &self.global
    }

    pub fn honest_grads(&self, x: &ParamVector) -> Vec<ParamVector> {
        self.honest.iter().map(|l| l.grad(x)).collect()
    }
}

/// Reference minimizer for a problem without a closed-form solution: exact
/// full-gradient descent at step `1/L` until `||grad|| <= tol`.
pub fn reference_minimizer(loss: &dyn LossOracle, x0: &ParamVector, tol: f64, max_iter: usize) -> Result<ParamVector> {
    if let Some(x) = loss.minimizer() {
        return Ok(x);
    }
    let l = loss
        .smoothness()
        .ok_or_else(|| Error::InvalidParameter("reference minimizer needs a smoothness constant".into()))?;
    let mut x = x0.clone();
    for _ in 0..max_iter {
        let g = loss.grad(&x);
        if g.norm() <= tol {
            return Ok(x);
        }
        x.axpy(-1.0 / l, &g, 1.0);
    }
    let residual = loss.grad(&x).norm();
    log::warn!("reference minimizer stopped at ||grad|| = {residual:e} after {max_iter} iterations");
    Ok(x)
}
