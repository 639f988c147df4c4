use super::rules::{argsort, check_inputs};
use crate::error::{Error, Result};
use crate::problems::ParamVector;

fn check_f(vectors: &[ParamVector], f: usize, what: &'static str) -> Result<usize> {
    let d = check_inputs(vectors)?;
    if vectors.len() <= f {
        return Err(Error::TooFewInputs {
            rule: what,
            n: vectors.len(),
            f,
        });
    }
    Ok(d)
}

/// Nearest Neighbors Mixing: output `i` is the mean of the `n - f` inputs
/// closest to input `i`, itself included.
pub fn nnm(vectors: &[ParamVector], f: usize) -> Result<Vec<ParamVector>> {
    let d = check_f(vectors, f, "nnm")?;
    let keep = vectors.len() - f;
    Ok(vectors
        .iter()
        .map(|vi| {
            let dists: Vec<f64> = vectors.iter().map(|vj| (vi - vj).norm_squared()).collect();
            let sum = argsort(&dists)[..keep]
                .iter()
                .fold(ParamVector::zeros(d), |acc, &j| acc + &vectors[j]);
            sum / keep as f64
        })
        .collect())
}

/// Geometrically trimmed sum with uniform weights `1/(n - f)`: the sum of
/// the `n - f` smallest-norm inputs, divided by `n - f`.
pub fn gts(diffs: &[ParamVector], f: usize) -> Result<ParamVector> {
    let d = check_f(diffs, f, "gts")?;
    let keep = diffs.len() - f;
    let norms: Vec<f64> = diffs.iter().map(|z| z.norm_squared()).collect();
    let sum = argsort(&norms)[..keep]
        .iter()
        .fold(ParamVector::zeros(d), |acc, &i| acc + &diffs[i]);
    Ok(sum / keep as f64)
}

/// One server-emulated robust-gossip step on the complete graph with
/// uniform weights and unit step: `y_i = x_i - GTS((x_i - x_j)_j)`.
pub fn frg_mix(vectors: &[ParamVector], f: usize) -> Result<Vec<ParamVector>> {
    check_f(vectors, f, "frg")?;
    vectors
        .iter()
        .map(|xi| {
            let diffs: Vec<ParamVector> = vectors.iter().map(|xj| xi - xj).collect();
            Ok(xi - gts(&diffs, f)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use nalgebra::dvector;

    use super::*;

    #[test]
    fn nnm_without_adversaries_is_global_mean() {
        let v = vec![dvector![1.0, 2.0], dvector![3.0, -4.0], dvector![0.0, 5.0]];
        let mean = (&v[0] + &v[1] + &v[2]) / 3.0;
        for out in nnm(&v, 0).unwrap() {
            assert!((out - &mean).norm() < 1e-15);
        }
    }

    #[test]
    fn gts_trims_largest_norm() {
        let z = vec![dvector![1.0], dvector![-1.0], dvector![50.0]];
        assert_eq!(gts(&z, 1).unwrap(), dvector![0.0]);
        assert_eq!(gts(&vec![dvector![0.0, 0.0]; 4], 2).unwrap(), dvector![0.0, 0.0]);
    }

    #[test]
    fn frg_two_points_meet_in_the_middle() {
        let (a, b) = (dvector![1.0, -3.0], dvector![5.0, 1.0]);
        let out = frg_mix(&[a.clone(), b.clone()], 0).unwrap();
        let mid = (a + b) / 2.0;
        assert_eq!(out, vec![mid.clone(), mid]);
    }

    #[test]
    fn mixing_constant_inputs_is_identity() {
        let v = vec![dvector![2.0, 7.0]; 5];
        assert_eq!(nnm(&v, 2).unwrap(), v);
        assert_eq!(frg_mix(&v, 2).unwrap(), v);
    }

    #[test]
    fn f_must_be_below_n() {
        assert!(nnm(&[dvector![1.0]], 1).is_err());
        assert!(gts(&[dvector![1.0]], 1).is_err());
    }
}
