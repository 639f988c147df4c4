use super::rules::check_inputs;
use super::AggregatorSpec;
use crate::error::{Error, Result};
use crate::problems::ParamVector;

/// Largest `n` for which every honest subset is enumerated.
pub const MAX_ENUMERATION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessCheck {
    /// `max_S ||F(x) - mean_S||^2 / var_S` over all subsets of size `n - f`;
    /// `+inf` when some subset has zero variance but nonzero error.
    pub worst_ratio: f64,
    /// Catalog coefficient the ratio is compared against.
    pub nu: f64,
    pub holds: bool,
}

/// Brute-force check of `(f, nu)`-robustness on one input configuration:
/// every subset `S` of size `n - f` is treated as the honest set.
pub fn verify_robustness(agg: &AggregatorSpec, vectors: &[ParamVector]) -> Result<RobustnessCheck> {
    check_inputs(vectors)?;
    let n = vectors.len();
    if n > MAX_ENUMERATION {
        return Err(Error::TooManyForEnumeration {
            n,
            max: MAX_ENUMERATION,
        });
    }
    let nu = agg.robustness_coefficient(n)?;
    let output = agg.aggregate(vectors)?;
    let size = n - agg.f;
    let mut worst: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let members: Vec<&ParamVector> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &vectors[i]).collect();
        let centre = members.iter().fold(ParamVector::zeros(output.len()), |acc, v| acc + *v) / size as f64;
        let variance = members.iter().map(|v| (*v - &centre).norm_squared()).sum::<f64>() / size as f64;
        let error = (&output - &centre).norm_squared();
        let ratio = if error == 0.0 {
            0.0
        } else if variance == 0.0 {
            f64::INFINITY
        } else {
            error / variance
        };
        worst = worst.max(ratio);
    }
    Ok(RobustnessCheck {
        worst_ratio: worst,
        nu,
        holds: worst <= nu,
    })
}
