use serde::Serialize;

use crate::error::{Error, Result};

/// Lower bounds on the error any algorithm can guarantee under
/// `(G, B)`-heterogeneity with `f` of `n` clients Byzantine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ByzantineBounds {
    /// `f/n <= 1/(B^2 + 2)`.
    pub breakdown_ok: bool,
    /// Function-value gap bound; `+inf` past the breakdown point.
    pub value_bound: f64,
    /// Squared gradient-norm bound; `+inf` past the breakdown point.
    pub gradnorm_bound: f64,
}

impl ByzantineBounds {
    pub fn is_finite(&self) -> bool {
        self.value_bound.is_finite()
    }
}

pub fn byzantine_bounds(g: f64, b: f64, mu: f64, f: usize, n: usize) -> Result<ByzantineBounds> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if f >= n {
        return Err(Error::InvalidParameter(format!("need f < n, got f = {f}, n = {n}")));
    }
    let (g2, b2) = (g * g, b * b);
    let (f, n) = (f as f64, n as f64);
    let breakdown_ok = f * (b2 + 2.0) <= n;
    let denominator = n - (2.0 + b2) * f;
    let (value_bound, gradnorm_bound) = if f == 0.0 {
        (0.0, 0.0)
    } else if denominator > 0.0 {
        let ratio = f / denominator;
        (g2 / (8.0 * mu) * ratio, g2 / 4.0 * ratio)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(ByzantineBounds {
        breakdown_ok,
        value_bound,
        gradnorm_bound,
    })
}
