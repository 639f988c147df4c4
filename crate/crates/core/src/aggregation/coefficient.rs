use super::{AggregatorSpec, Mixing, Rule};
use crate::error::{Error, Result};

/// No `(f, nu)`-robust rule can have `nu` below `f / (n - 2f)`.
pub fn lower_bound_coefficient(n: usize, f: usize) -> f64 {
    f as f64 / (n as f64 - 2.0 * f as f64)
}

fn base_coefficient(rule: Rule, n: usize, f: usize) -> Result<f64> {
    if n <= 2 * f {
        return Err(Error::TooFewInputs {
            rule: rule.name(),
            n,
            f,
        });
    }
    let r = f as f64 / (n - 2 * f) as f64;
    Ok(match rule {
        Rule::Cwtm => 6.0 * r * (1.0 + 6.0 * r),
        Rule::Krum => 6.0 * (1.0 + 6.0 * r),
        Rule::Gm | Rule::Cwm => 4.0 * (1.0 + r).powi(2),
        // the plain mean tolerates no adversary at all
        Rule::Mean if f == 0 => 0.0,
        Rule::Mean => f64::INFINITY,
    })
}

/// Contraction factor `delta` of a mixing, after checking its breakdown point.
fn contraction(mixing: Mixing, n: usize, f: usize) -> Result<f64> {
    let (scale, limit) = match mixing {
        Mixing::Nnm => (8.0, 1.0 / 9.0),
        Mixing::FrgGts { rho } => (2.0 * rho, 1.0 / (2.0 * rho + 1.0)),
    };
    if f > 0 && f as f64 / n as f64 >= limit {
        return Err(Error::BreakdownExceeded {
            mixing: mixing.name(),
            n,
            f,
            limit,
        });
    }
    Ok(scale * f as f64 / (n - f) as f64)
}

/// Closed-form robustness coefficient of the whole chain. Each mixing
/// wrapped around an `(f, nu)`-robust aggregator gives `delta (1 + nu)`.
pub fn robustness_coefficient(spec: &AggregatorSpec, n: usize) -> Result<f64> {
    let f = spec.f;
    let mut nu = base_coefficient(spec.rule, n, f)?;
    for &mixing in spec.mixings.iter().rev() {
        nu = contraction(mixing, n, f)? * (1.0 + nu);
    }
    Ok(nu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str, f: usize) -> AggregatorSpec {
        AggregatorSpec::parse(text, f).unwrap()
    }

    #[test]
    fn cwtm_closed_form() {
        assert_eq!(robustness_coefficient(&spec("cwtm", 1), 10).unwrap(), 1.3125);
    }

    #[test]
    fn no_adversaries() {
        assert_eq!(robustness_coefficient(&spec("cwtm", 0), 10).unwrap(), 0.0);
        assert_eq!(robustness_coefficient(&spec("mean", 0), 10).unwrap(), 0.0);
        assert_eq!(robustness_coefficient(&spec("gm", 0), 10).unwrap(), 4.0);
        for text in ["nnm+krum", "frg(gts)+gm", "nnm+cwm"] {
            assert_eq!(robustness_coefficient(&spec(text, 0), 10).unwrap(), 0.0);
        }
    }

    #[test]
    fn nnm_composition() {
        let base = robustness_coefficient(&spec("cwtm", 1), 21).unwrap();
        let composed = robustness_coefficient(&spec("nnm+cwtm", 1), 21).unwrap();
        assert!((composed - 0.4 * (1.0 + base)).abs() < 1e-15);
    }

    #[test]
    fn frg_default_rho_matches_nnm() {
        let nnm = robustness_coefficient(&spec("nnm+gm", 2), 30).unwrap();
        let frg = robustness_coefficient(&spec("frg(gts)+gm", 2), 30).unwrap();
        assert!((nnm - frg).abs() < 1e-15);
    }

    #[test]
    fn mixing_breakdown_is_enforced() {
        let err = robustness_coefficient(&spec("nnm+cwtm", 1), 9).unwrap_err();
        assert!(matches!(err, Error::BreakdownExceeded { .. }));
        assert!(robustness_coefficient(&spec("nnm+cwtm", 1), 10).is_ok());
        assert!(robustness_coefficient(&spec("frg(gts,rho=1)+cwtm", 1), 3).is_err());
    }

    #[test]
    fn base_rules_need_honest_majority() {
        assert!(robustness_coefficient(&spec("cwtm", 2), 4).is_err());
        assert_eq!(robustness_coefficient(&spec("mean", 1), 4).unwrap(), f64::INFINITY);
    }

    #[test]
    fn catalog_dominates_lower_bound() {
        for n in 3usize..40 {
            for f in 0..n.div_ceil(2) {
                if n <= 2 * f {
                    continue;
                }
                for rule in Rule::ROBUST {
                    let nu = robustness_coefficient(&AggregatorSpec::new(rule, f), n).unwrap();
                    assert!(nu >= lower_bound_coefficient(n, f), "{rule:?} n={n} f={f}");
                }
            }
        }
    }
}
