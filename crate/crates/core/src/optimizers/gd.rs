use std::time::Instant;

use super::{check_start, Reference, RunOutcome};
use crate::error::{Error, Result};
use crate::oracle::InexactOracle;
use crate::problems::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdParams {
    pub eta: f64,
    pub rounds: usize,
}

/// Robust distributed gradient descent: `x_{k+1} = x_k - eta g_tilde(x_k)`.
pub fn gd(
    oracle: &mut InexactOracle,
    reference: &Reference<'_>,
    x0: &ParamVector,
    params: GdParams,
) -> Result<RunOutcome> {
    check_start(reference, x0, params.rounds)?;
    if !(params.eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be positive, got {}",
            params.eta
        )));
    }
    let mut out = RunOutcome::new("gd", x0);
    let mut x = x0.clone();
    for k in 0..params.rounds {
        let started = Instant::now();
        let sample = oracle.sample(&x).map_err(|e| e.at_round(k))?;
        let row = reference.row(k, &x, &sample, started);
        if !out.push(row) {
            break;
        }
        x.axpy(-params.eta, &sample.g_tilde, 1.0);
    }
    Ok(out.finish(reference, x))
}
