use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check_start, gamma_schedule, Reference, RunOutcome};
use crate::error::{Error, Result};
use crate::oracle::InexactOracle;
use crate::problems::ParamVector;

/// How `x_{k+1}` is recombined from `x_k`, `y_k` and `y_{k-1}`.
///
/// With `r = gamma_k/gamma_{k+1}`, `p = Gamma_{k-1}/Gamma_k`,
/// `q = Gamma_k/Gamma_{k+1}` and `s = mu/(4L)`:
///
/// * `Derived`:  `x+ = q y_k + r (s x_k + y_k - p y_{k-1})`, the exact
///   two-sequence form of the three-sequence fast gradient method
///   (`x+ = (1 - tau_k) y_k + tau_k z_k`). Coefficients sum to one, so
///   minimizers are fixed points.
/// * `Scaled`:   `x+ = r (s x_k + y_k) + p (y_k - r y_{k-1})`.
/// * `Momentum`: `x+ = y_k + p r (y_k - y_{k-1}) - p y_k + r s x_k`.
///
/// The last two are kept for comparison; their coefficients do not sum to
/// one and `Momentum` is unstable for moderate condition numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FgmVariant {
    #[default]
    Derived,
    Scaled,
    Momentum,
}

impl FromStr for FgmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "derived" => Ok(FgmVariant::Derived),
            "scaled" => Ok(FgmVariant::Scaled),
            "momentum" => Ok(FgmVariant::Momentum),
            other => Err(Error::Parse(format!("unknown fgm variant {other:?}"))),
        }
    }
}

impl fmt::Display for FgmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FgmVariant::Derived => "derived",
            FgmVariant::Scaled => "scaled",
            FgmVariant::Momentum => "momentum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgmParams {
    pub l: f64,
    pub mu: f64,
    pub rounds: usize,
    pub variant: FgmVariant,
}

/// Byzantine-resilient fast gradient method. Each round takes the short
/// step `y_k = x_k - g_tilde(x_k) / (2L)` and recombines with the previous
/// `y`; the first round uses `y_{-1} = y_0` and `Gamma_{-1} = 0`.
pub fn fgm(
    oracle: &mut InexactOracle,
    reference: &Reference<'_>,
    x0: &ParamVector,
    params: FgmParams,
) -> Result<RunOutcome> {
    check_start(reference, x0, params.rounds)?;
    let FgmParams { l, mu, rounds, variant } = params;
    if !(l > 0.0 && mu > 0.0 && l >= mu) {
        return Err(Error::InvalidParameter(format!(
            "need L >= mu > 0, got L = {l}, mu = {mu}"
        )));
    }
    let schedule = gamma_schedule(l, mu, rounds);
    let s = mu / (4.0 * l);
    let mut out = RunOutcome::new("fgm", x0);
    let mut x = x0.clone();
    let mut y_prev: Option<ParamVector> = None;
    for k in 0..rounds {
        let started = Instant::now();
        let sample = oracle.sample(&x).map_err(|e| e.at_round(k))?;
        let row = reference.row(k, &x, &sample, started);
        if !out.push(row) {
            break;
        }
        let y = &x - &sample.g_tilde / (2.0 * l);
        let yp = y_prev.as_ref().unwrap_or(&y);
        let r = schedule.ratio_next_gamma(k);
        let p = schedule.ratio_prev_partial(k);
        let next = match variant {
            FgmVariant::Derived => {
                let q = schedule.ratio_next_partial(k);
                &y * (q + r) + &x * (r * s) - yp * (r * p)
            }
            FgmVariant::Scaled => &x * (r * s) + &y * (r + p) - yp * (p * r),
            FgmVariant::Momentum => &y * (1.0 + p * r - p) - yp * (p * r) + &x * (r * s),
        };
        x = next;
        y_prev = Some(y);
    }
    Ok(out.finish(reference, x))
}
