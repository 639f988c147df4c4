//! One synchronous communication round: the server broadcasts `x`, honest
//! clients answer with exact local gradients, Byzantine clients answer with
//! their attack, and the server aggregates. The result is an inexact
//! gradient of the honest global loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aggregation::AggregatorSpec;
use crate::error::{Error, Result};
use crate::problems::{ClientPool, HeterogeneityEstimate, LossOracle, ParamVector};

/// `nu G^2 + nu B^2 ||grad L_H(x)||^2`: the squared-error budget of a robust
/// aggregate under `(G, B)`-heterogeneity.
pub fn lemma1_bound(nu: f64, g2: f64, b2: f64, grad_norm_sq: f64) -> f64 {
    if nu == 0.0 {
        return 0.0;
    }
    nu * g2 + nu * b2 * grad_norm_sq
}

/// Squared-error budget under pairwise Hessian similarity `delta`:
/// `zeta^2 + alpha mu <grad L_H(x), x - x*>` with
/// `zeta^2 = 2 nu (1/|H|) sum_i ||grad L_i(x*)||^2` and `alpha = 4 nu delta / mu`.
///
/// `grads_at_opt_ms` is the mean squared norm of the honest gradients at
/// `x*`; `inner` is `<grad L_H(x), x - x*>`, which convexity makes
/// nonnegative.
pub fn eq8_bound(nu: f64, delta: f64, mu: f64, grads_at_opt_ms: f64, inner: f64) -> Result<f64> {
    if inner < 0.0 {
        return Err(Error::NegativeInnerProduct(inner));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let zeta2 = nu * 2.0 * grads_at_opt_ms;
    let alpha = nu * 4.0 * delta / mu;
    Ok(zeta2 + alpha * mu * inner)
}

/// Constants used to audit each round against the robust-aggregation budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditParams {
    /// Closed-form catalog coefficient of the aggregator.
    pub nu: f64,
    pub g2: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub true_grad: ParamVector,
    /// `||g_tilde - grad L_H(x)||^2`.
    pub err_sq: f64,
    pub grad_norm_sq: f64,
    /// Present when audit constants were supplied.
    pub lemma1_bound: Option<f64>,
    /// Attack parameter chosen this round (line search), if any Byzantine client exists.
    pub attack_scale: Option<f64>,
}

impl AuditRecord {
    pub fn violates_bound(&self) -> bool {
        self.lemma1_bound
            .is_some_and(|b| self.err_sq > b * (1.0 + 1e-9) + 1e-15)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub g_tilde: ParamVector,
    pub audit: AuditRecord,
}

/// The server side of the simulation.
#[derive(Clone)]
pub struct InexactOracle {
    pool: ClientPool,
    aggregator: AggregatorSpec,
    rng_seed: u64,
    rounds: usize,
    audit: Option<AuditParams>,
}

impl InexactOracle {
    pub fn new(pool: ClientPool, aggregator: AggregatorSpec, rng_seed: u64) -> Result<Self> {
        if aggregator.f != pool.f() {
            return Err(Error::InvalidParameter(format!(
                "aggregator tolerates f = {} but the pool has {} Byzantine clients",
                aggregator.f,
                pool.f()
            )));
        }
        Ok(Self {
            pool,
            aggregator,
            rng_seed,
            rounds: 0,
            audit: None,
        })
    }

    /// Audits every round with the aggregator's catalog coefficient and the
    /// given heterogeneity certificate.
    pub fn with_audit(mut self, heterogeneity: &HeterogeneityEstimate) -> Result<Self> {
        let nu = self.aggregator.robustness_coefficient(self.pool.n())?;
        self.audit = Some(AuditParams {
            nu,
            g2: heterogeneity.g2,
            b2: heterogeneity.b2,
        });
        Ok(self)
    }

    pub fn with_audit_params(mut self, params: AuditParams) -> Self {
        self.audit = Some(params);
        self
    }

    pub fn pool(&self) -> &ClientPool {
        &self.pool
    }

    pub fn aggregator(&self) -> &AggregatorSpec {
        &self.aggregator
    }

    pub fn audit_params(&self) -> Option<AuditParams> {
        self.audit
    }

    /// Communication rounds consumed so far.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Runs one round at `x`.
    pub fn sample(&mut self, x: &ParamVector) -> Result<OracleSample> {
        let d = self.pool.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let honest: Vec<ParamVector> = self.pool.honest().par_iter().map(|l| l.grad(x)).collect();
        let true_grad = self.pool.mean_loss().grad(x);

        let mut attack_scale = None;
        let mut byzantine = Vec::with_capacity(self.pool.f());
        for strategy in self.pool.byzantine() {
            let out = strategy.emit(&honest, &self.aggregator, self.pool.f())?;
            attack_scale = Some(out.scale);
            byzantine.push(out.vector);
        }

        let mut honest_iter = honest.into_iter();
        let mut byz_iter = byzantine.into_iter();
        let mut received: Vec<ParamVector> = self
            .pool
            .byzantine_slots()
            .iter()
            .map(|&is_byz| {
                if is_byz { byz_iter.next() } else { honest_iter.next() }.expect("slot layout matches pool sizes")
            })
            .collect();
        // The server does not know which client is which; present the
        // vectors in a per-round order derived from the seed.
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.rng_seed ^ (self.rounds as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        received.shuffle(&mut rng);

        let g_tilde = self.aggregator.aggregate(&received)?;
        self.rounds += 1;

        let grad_norm_sq = true_grad.norm_squared();
        let err_sq = (&g_tilde - &true_grad).norm_squared();
        let lemma1 = self.audit.map(|a| lemma1_bound(a.nu, a.g2, a.b2, grad_norm_sq));
        Ok(OracleSample {
            g_tilde,
            audit: AuditRecord {
                true_grad,
                err_sq,
                grad_norm_sq,
                lemma1_bound: lemma1,
                attack_scale,
            },
        })
    }
}
