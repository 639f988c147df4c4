use std::sync::Arc;
use std::time::Instant;

use super::prox::{solve_prox, ProxSubproblem};
use super::{check_start, ProxRecord, Reference, RunOutcome};
use crate::error::{Error, Result};
use crate::oracle::InexactOracle;
use crate::problems::{LossOracle, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PigsParams {
    pub eta: f64,
    /// Relative slack of the inner stopping rule.
    pub c: f64,
    /// Absolute slack of the inner stopping rule.
    pub e: f64,
    pub rounds: usize,
    /// Strong convexity used for the averaging weights.
    pub mu: f64,
    pub max_inner: usize,
}

/// Weight of the `k`-th term when folding it into a running average with
/// weights `q^0, q^1, ...`, i.e. `q^k / sum_{j<=k} q^j`.
pub fn weighted_average_weight(q: f64, k: usize) -> f64 {
    if q == 1.0 {
        return 1.0 / (k as f64 + 1.0);
    }
    let w = (q - 1.0) / (q - q.powi(-(k as i32)));
    if w.is_finite() {
        w
    } else {
        // q^-k underflowed or q^k overflowed
        (q - 1.0) / q
    }
}

/// Preconditioned inexact gradient with similarity. Each round queries the
/// robust oracle once at `x_k` and moves to an approximate minimizer of
/// `phi_k` built on the server's `proxy` loss. The outcome also carries
/// `x_hat_K = sum_k beta_k x_k / sum_k beta_k` over `x_0..x_K` with
/// `beta_k = (1 + eta mu / 8)^k`.
pub fn pigs(
    oracle: &mut InexactOracle,
    reference: &Reference<'_>,
    proxy: Arc<dyn LossOracle>,
    x0: &ParamVector,
    params: PigsParams,
) -> Result<RunOutcome> {
    check_start(reference, x0, params.rounds)?;
    if proxy.dim() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            got: proxy.dim(),
        });
    }
    if !(params.mu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mu must be nonnegative, got {}",
            params.mu
        )));
    }
    let q = 1.0 + params.eta * params.mu / 8.0;
    let mut out = RunOutcome::new("pigs", x0);
    let mut x = x0.clone();
    let mut averaged = x0.clone();
    for k in 0..params.rounds {
        let started = Instant::now();
        let sample = oracle.sample(&x).map_err(|e| e.at_round(k))?;
        let sub = ProxSubproblem::new(proxy.clone(), sample.g_tilde.clone(), x.clone(), params.eta)?;
        let sol = solve_prox(&sub, params.c, params.e, params.max_inner).map_err(|e| e.at_round(k))?;
        let mut row = reference.row(k, &x, &sample, started);
        row.inner_iters = sol.inner_iters;
        if reference.wall_clock {
            row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        }
        if !out.push(row) {
            break;
        }
        out.prox_steps.push(ProxRecord {
            round: k,
            inner_iters: sol.inner_iters,
            criterion: sol.criterion_value,
            bound: sol.bound,
            rounding_floor: sol.rounding_floor,
        });
        x = sol.x_next;
        averaged += (&x - &averaged) * weighted_average_weight(q, k + 1);
    }
    out.averaged = Some(averaged);
    Ok(out.finish(reference, x))
}

#[cfg(test)]
mod tests {
    use nalgebra::{dmatrix, dvector};

    use super::*;
    use crate::aggregation::{AggregatorSpec, Rule};
    use crate::problems::{make_quadratic, ClientPool};

    fn setup() -> (Arc<dyn LossOracle>, InexactOracle) {
        let q: Arc<dyn LossOracle> =
            Arc::new(make_quadratic(dmatrix![5.0, 1.0; 1.0, 2.0], dvector![1.0, -3.0]).unwrap());
        let pool = ClientPool::new(vec![q.clone()], vec![]).unwrap();
        let oracle = InexactOracle::new(pool, AggregatorSpec::new(Rule::Mean, 0), 0).unwrap();
        (q, oracle)
    }

    fn params(eta: f64, mu: f64, rounds: usize) -> PigsParams {
        PigsParams {
            eta,
            c: 0.0,
            e: 1e-12,
            rounds,
            mu,
            max_inner: 1000,
        }
    }

    #[test]
    fn minimizer_is_a_fixed_point() {
        let (q, mut oracle) = setup();
        let x_star = q.minimizer().unwrap();
        let reference = Reference::new(q.as_ref(), x_star.clone());
        let out = pigs(
            &mut oracle,
            &reference,
            q.clone(),
            &x_star,
            params(0.3, q.mu().unwrap(), 5),
        )
        .unwrap();
        assert!((out.last - &x_star).norm() < 1e-12);
        assert!(out.trace.rows.iter().all(|r| r.inner_iters == 0));
    }

    #[test]
    fn huge_step_solves_in_one_round() {
        let (q, mut oracle) = setup();
        let mu = q.mu().unwrap();
        let x_star = q.minimizer().unwrap();
        let reference = Reference::new(q.as_ref(), x_star.clone());
        let out = pigs(
            &mut oracle,
            &reference,
            q.clone(),
            &dvector![4.0, 4.0],
            params(1e6 / mu, mu, 1),
        )
        .unwrap();
        assert!((out.last - x_star).norm() < 1e-5);
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.prox_steps.len(), 1);
    }

    #[test]
    fn every_step_meets_its_stopping_rule() {
        let (q, mut oracle) = setup();
        let reference = Reference::new(q.as_ref(), q.minimizer().unwrap());
        let mut p = params(0.5, q.mu().unwrap(), 20);
        p.c = 0.5;
        p.e = 1e-6;
        let out = pigs(&mut oracle, &reference, q.clone(), &dvector![-3.0, 7.0], p).unwrap();
        assert_eq!(out.prox_steps.len(), 20);
        assert!(out.prox_steps.iter().all(|s| s.satisfied()));
        assert!(out.averaged.is_some());
    }

    #[test]
    fn weights_reproduce_the_geometric_average() {
        let q = 1.3;
        let xs = [2.0, -1.0, 5.0, 0.5, 3.0];
        let mut avg = 0.0;
        for (k, x) in xs.iter().enumerate() {
            avg += weighted_average_weight(q, k) * (x - avg);
        }
        let num: f64 = xs.iter().enumerate().map(|(k, x)| q.powi(k as i32) * x).sum();
        let den: f64 = (0..xs.len()).map(|k| q.powi(k as i32)).sum();
        assert!((avg - num / den).abs() < 1e-12);
        assert_eq!(weighted_average_weight(1.0, 3), 0.25);
        assert_eq!(weighted_average_weight(2.0, 0), 1.0);
    }
}
