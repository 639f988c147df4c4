use super::{ClientPool, ParamVector};
use crate::error::{Error, Result};

/// Empirical `(G, B)`-heterogeneity certificate on a finite set of points:
/// `(1/|H|) sum_i ||grad L_i(x) - grad L_H(x)||^2 <= G2 + B2 ||grad L_H(x)||^2`
/// holds at every sample point. Nothing is claimed away from them.
#[derive(Debug, Clone)]
pub struct HeterogeneityEstimate {
    pub g2: f64,
    pub b2: f64,
    pub sample_points: Vec<ParamVector>,
    /// `max_x (variance(x) - G2 - B2 ||grad L_H(x)||^2)`, at most zero.
    pub max_violation: f64,
}

/// Honest gradient spread at `x`: `(variance, ||grad L_H(x)||^2)`.
pub(crate) fn spread_at(pool: &ClientPool, x: &ParamVector) -> (f64, f64) {
    let grads = pool.honest_grads(x);
    let h = grads.len() as f64;
    let mean = grads.iter().fold(ParamVector::zeros(x.len()), |acc, g| acc + g) / h;
    let variance = grads.iter().map(|g| (g - &mean).norm_squared()).sum::<f64>() / h;
    (variance, mean.norm_squared())
}

/// Fits `variance ~ G2 + B2 * ||grad L_H||^2` by nonnegative least squares,
/// then raises `G2` by the largest remaining positive residual.
pub fn estimate_heterogeneity(pool: &ClientPool, points: &[ParamVector]) -> Result<HeterogeneityEstimate> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 sample points, got {}",
            points.len()
        )));
    }
    for p in points {
        if p.len() != pool.dim() {
            return Err(Error::DimensionMismatch {
                expected: pool.dim(),
                got: p.len(),
            });
        }
    }
    let samples: Vec<(f64, f64)> = points.iter().map(|x| spread_at(pool, x)).collect();
    let (mut g2, b2) = nonnegative_line_fit(&samples);
    let violation = |g2: f64| {
        samples
            .iter()
            .map(|&(v, s)| v - g2 - b2 * s)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut max_violation = violation(g2);
    // Rounding can leave a residual of a few ulps after one inflation.
    while max_violation > 0.0 {
        g2 += max_violation.max(g2 * f64::EPSILON);
        max_violation = violation(g2);
    }
    Ok(HeterogeneityEstimate {
        g2,
        b2,
        sample_points: points.to_vec(),
        max_violation,
    })
}

/// Least squares `v = a + b s` with `a, b >= 0`, by checking the free
/// solution and each active-set face.
fn nonnegative_line_fit(samples: &[(f64, f64)]) -> (f64, f64) {
    let k = samples.len() as f64;
    let sum_s: f64 = samples.iter().map(|p| p.1).sum();
    let sum_v: f64 = samples.iter().map(|p| p.0).sum();
    let sum_ss: f64 = samples.iter().map(|p| p.1 * p.1).sum();
    let sum_sv: f64 = samples.iter().map(|p| p.1 * p.0).sum();
    let sse = |a: f64, b: f64| samples.iter().map(|&(v, s)| (v - a - b * s).powi(2)).sum::<f64>();

    let mut candidates = vec![(0.0, 0.0), (sum_v / k, 0.0)];
    if sum_ss > 0.0 {
        candidates.push((0.0, (sum_sv / sum_ss).max(0.0)));
    }
    let det = k * sum_ss - sum_s * sum_s;
    if det > 1e-12 * k * sum_ss {
        let b = (k * sum_sv - sum_s * sum_v) / det;
        let a = (sum_v - b * sum_s) / k;
        if a >= 0.0 && b >= 0.0 {
            candidates.push((a, b));
        }
    }
    candidates
        .into_iter()
        .map(|(a, b)| (a.max(0.0), b.max(0.0)))
        .min_by(|x, y| sse(x.0, x.1).total_cmp(&sse(y.0, y.1)))
        .unwrap_or((0.0, 0.0))
}
