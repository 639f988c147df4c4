use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::problems::ParamVector;

/// Smoothing floor on Weiszfeld distances.
pub const WEISZFELD_EPS: f64 = 1e-12;

pub(crate) fn check_inputs(vectors: &[ParamVector]) -> Result<usize> {
    let first = vectors.first().ok_or(Error::Empty("no vectors to aggregate"))?;
    let d = first.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    Ok(d)
}

/// Values of one coordinate across inputs, sorted ascending.
fn sorted_column(vectors: &[ParamVector], j: usize) -> Vec<f64> {
    let mut col: Vec<f64> = vectors.iter().map(|v| v[j]).collect();
    col.sort_by(f64::total_cmp);
    col
}

pub fn mean(vectors: &[ParamVector]) -> Result<ParamVector> {
    let d = check_inputs(vectors)?;
    let sum = vectors.iter().fold(ParamVector::zeros(d), |acc, v| acc + v);
    Ok(sum / vectors.len() as f64)
}

/// Coordinate-wise trimmed mean: drop the `f` largest and `f` smallest
/// values of every coordinate and average the rest.
pub fn cwtm(vectors: &[ParamVector], f: usize) -> Result<ParamVector> {
    let d = check_inputs(vectors)?;
    let n = vectors.len();
    if n <= 2 * f {
        return Err(Error::TooFewInputs { rule: "cwtm", n, f });
    }
    let kept = (n - 2 * f) as f64;
    Ok(ParamVector::from_fn(d, |j, _| {
        sorted_column(vectors, j)[f..n - f].iter().sum::<f64>() / kept
    }))
}

/// Coordinate-wise median; mean of the two middle values for even `n`.
pub fn cwm(vectors: &[ParamVector]) -> Result<ParamVector> {
    let d = check_inputs(vectors)?;
    let n = vectors.len();
    Ok(ParamVector::from_fn(d, |j, _| {
        let col = sorted_column(vectors, j);
        if n % 2 == 1 {
            col[n / 2]
        } else {
            0.5 * (col[n / 2 - 1] + col[n / 2])
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricMedian {
    pub point: ParamVector,
    pub iterations: usize,
    /// `||sum_i (v_i - m) / max(||v_i - m||, eps)||` at the returned point.
    pub residual: f64,
    /// `false` when `max_iter` ran out before `residual <= tol * n`.
    pub converged: bool,
}

fn weiszfeld_residual(vectors: &[ParamVector], m: &ParamVector) -> f64 {
    vectors
        .iter()
        .fold(ParamVector::zeros(m.len()), |acc, v| {
            let diff = v - m;
            let w = 1.0 / diff.norm().max(WEISZFELD_EPS);
            acc + diff * w
        })
        .norm()
}

/// Smoothed Weiszfeld iteration started from the arithmetic mean.
pub fn geometric_median(vectors: &[ParamVector], tol: f64, max_iter: usize) -> Result<GeometricMedian> {
    check_inputs(vectors)?;
    let n = vectors.len() as f64;
    let mut m = mean(vectors)?;
    let mut residual = weiszfeld_residual(vectors, &m);
    let mut best = (m.clone(), residual);
    for it in 0..max_iter {
        if residual <= tol * n {
            return Ok(GeometricMedian {
                point: m,
                iterations: it,
                residual,
                converged: true,
            });
        }
        let mut num = ParamVector::zeros(m.len());
        let mut den = 0.0;
        for v in vectors {
            let w = 1.0 / (v - &m).norm().max(WEISZFELD_EPS);
            num.axpy(w, v, 1.0);
            den += w;
        }
        m = num / den;
        residual = weiszfeld_residual(vectors, &m);
        if residual < best.1 {
            best = (m.clone(), residual);
        }
    }
    if residual <= tol * n {
        return Ok(GeometricMedian {
            point: m,
            iterations: max_iter,
            residual,
            converged: true,
        });
    }
    log::warn!(
        "geometric median did not converge in {max_iter} iterations (residual {:e})",
        best.1
    );
    Ok(GeometricMedian {
        point: best.0,
        iterations: max_iter,
        residual: best.1,
        converged: false,
    })
}

fn by_value_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Krum score of input `i`: sum of squared distances to its `neighbors`
/// nearest other inputs.
pub(crate) fn krum_scores(vectors: &[ParamVector], neighbors: usize) -> Vec<f64> {
    let n = vectors.len();
    (0..n)
        .map(|i| {
            let mut dists: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (&vectors[i] - &vectors[j]).norm_squared())
                .collect();
            dists.sort_by(f64::total_cmp);
            dists[..neighbors].iter().sum()
        })
        .collect()
}

/// Krum with `n - f - 1` neighbours.
pub fn krum(vectors: &[ParamVector], f: usize) -> Result<ParamVector> {
    let n = vectors.len();
    krum_with_neighbors(vectors, f, n.saturating_sub(f + 1))
}

/// Returns the input with the smallest Krum score; ties go to the lowest index.
pub fn krum_with_neighbors(vectors: &[ParamVector], f: usize, neighbors: usize) -> Result<ParamVector> {
    check_inputs(vectors)?;
    let n = vectors.len();
    if n < f + 3 {
        return Err(Error::TooFewInputs { rule: "krum", n, f });
    }
    if neighbors == 0 || neighbors >= n {
        return Err(Error::InvalidParameter(format!(
            "krum neighbour count must be in 1..{n}, got {neighbors}"
        )));
    }
    let scores = krum_scores(vectors, neighbors);
    let best = scores
        .iter()
        .copied()
        .zip(0..)
        .min_by(by_value_then_index)
        .map(|(_, i)| i)
        .unwrap_or(0);
    Ok(vectors[best].clone())
}

/// Indices sorted by `(key, index)`.
pub(crate) fn argsort(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = keys.iter().copied().zip(0..).collect();
    order.sort_by(by_value_then_index);
    order.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use nalgebra::dvector;

    use super::*;

    fn scalars(xs: &[f64]) -> Vec<ParamVector> {
        xs.iter().map(|&x| dvector![x]).collect()
    }

    #[test]
    fn trimmed_mean_keeps_middle() {
        assert_eq!(cwtm(&scalars(&[1.0, 2.0, 100.0]), 1).unwrap(), dvector![2.0]);
        assert!(matches!(
            cwtm(&scalars(&[1.0, 2.0]), 1),
            Err(Error::TooFewInputs { .. })
        ));
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(cwm(&scalars(&[1.0, 2.0, 100.0])).unwrap(), dvector![2.0]);
        assert_eq!(cwm(&scalars(&[4.0, 1.0, 3.0, 100.0])).unwrap(), dvector![3.5]);
        assert_eq!(cwm(&scalars(&[5.0])).unwrap(), dvector![5.0]);
        assert!(cwm(&[]).is_err());
    }

    #[test]
    fn geometric_median_of_identical_points() {
        let p = dvector![1.5, -2.0, 3.0];
        let gm = geometric_median(&vec![p.clone(); 3], 1e-8, 1000).unwrap();
        assert_eq!(gm.point, p);
        assert_eq!(gm.iterations, 0);
    }

    #[test]
    fn geometric_median_of_equilateral_triangle() {
        let c = dvector![2.0, -1.0];
        let r = 3.0;
        let pts: Vec<ParamVector> = (0..3)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                &c + dvector![r * t.cos(), r * t.sin()]
            })
            .collect();
        let gm = geometric_median(&pts, 1e-8, 1000).unwrap();
        assert!((gm.point - c).norm() < 1e-8);
    }

    #[test]
    fn geometric_median_at_repeated_data_point() {
        let gm = geometric_median(&scalars(&[0.0, 0.0, 10.0]), 1e-8, 100_000).unwrap();
        assert!(gm.converged);
        assert!(gm.residual <= 3e-8);
        // sum-of-distances oracle: 2|m| + |10 - m| is minimized at 0
        assert!(gm.point[0].abs() < 1e-9);
    }

    #[test]
    fn geometric_median_flags_iteration_cap() {
        let gm = geometric_median(&scalars(&[0.0, 0.0, 10.0]), 1e-14, 2).unwrap();
        assert!(!gm.converged);
    }

    #[test]
    fn krum_picks_from_cluster() {
        let v = scalars(&[0.0, 0.1, -0.1, 100.0]);
        let out = krum(&v, 1).unwrap();
        assert!(out[0].abs() <= 0.1);
        assert!(krum(&scalars(&[0.0, 1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn krum_breaks_ties_by_index() {
        let v = scalars(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(krum(&v, 1).unwrap(), dvector![1.0]);
        // symmetric configuration: inputs 0 and 3 tie, as do 1 and 2
        let v = scalars(&[-1.0, -0.5, 0.5, 1.0]);
        assert_eq!(krum(&v, 1).unwrap(), dvector![-0.5]);
    }
}
