//! Omniscient Byzantine strategies. Every Byzantine client sees all honest
//! gradients of the round, and all of them send the same vector.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::aggregation::AggregatorSpec;
use crate::error::{Error, Result};
use crate::problems::ParamVector;

pub const DEFAULT_ALIE_GRID: [f64; 6] = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0];
pub const DEFAULT_IPM_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

/// User-supplied attack: `(honest gradients, parameter) -> vector`.
pub type CustomAttack = Arc<dyn Fn(&[ParamVector], f64) -> ParamVector + Send + Sync>;

#[derive(Clone)]
pub enum AttackKind {
    /// "A little is enough": `mean - z * std`, coordinate-wise.
    Alie,
    /// Inner product manipulation: `-epsilon * mean`.
    Ipm,
    /// Sends the zero vector.
    Zero,
    /// Sends the honest mean, i.e. behaves as an average honest client.
    None,
    Custom(CustomAttack),
}

impl fmt::Debug for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::Alie => "Alie",
            AttackKind::Ipm => "Ipm",
            AttackKind::Zero => "Zero",
            AttackKind::None => "None",
            AttackKind::Custom(_) => "Custom",
        })
    }
}

#[derive(Debug, Clone)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    /// `z` for ALIE, `epsilon` for IPM; ignored by the other kinds and
    /// whenever a line-search grid is set.
    pub scale: f64,
    /// Candidate parameters; when present the most damaging one is used.
    pub line_search: Option<Vec<f64>>,
}

/// Vector the Byzantine clients send, with the parameter that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutput {
    pub vector: ParamVector,
    pub scale: f64,
    /// `||F(honest, byzantine) - mean(honest)||`, when computed.
    pub deviation: Option<f64>,
}

fn honest_mean(honest: &[ParamVector]) -> ParamVector {
    let d = honest[0].len();
    honest.iter().fold(ParamVector::zeros(d), |acc, g| acc + g) / honest.len() as f64
}

/// `mu_H - z sigma_H` with population standard deviation per coordinate.
pub fn alie(honest: &[ParamVector], z: f64) -> ParamVector {
    let mean = honest_mean(honest);
    let h = honest.len() as f64;
    let var = honest.iter().fold(ParamVector::zeros(mean.len()), |acc, g| {
        acc + (g - &mean).map(|t| t * t)
    }) / h;
    mean - var.map(f64::sqrt) * z
}

/// `-epsilon * mean(honest)`.
pub fn ipm(honest: &[ParamVector], epsilon: f64) -> ParamVector {
    honest_mean(honest) * -epsilon
}

/// Deviation of the aggregate from the honest mean when all `f` Byzantine
/// slots carry `byzantine`.
fn deviation(honest: &[ParamVector], byzantine: &ParamVector, aggregator: &AggregatorSpec, f: usize) -> Result<f64> {
    let mut all = honest.to_vec();
    all.extend(std::iter::repeat_n(byzantine.clone(), f));
    Ok((aggregator.aggregate(&all)? - honest_mean(honest)).norm())
}

impl AttackStrategy {
    pub fn new(kind: AttackKind, scale: f64) -> Self {
        Self {
            kind,
            scale,
            line_search: None,
        }
    }

    pub fn with_line_search(mut self, grid: Vec<f64>) -> Self {
        self.line_search = Some(grid);
        self
    }

    /// The attack vector for a fixed parameter.
    pub fn vector(&self, honest: &[ParamVector], scale: f64) -> ParamVector {
        match &self.kind {
            AttackKind::Alie => alie(honest, scale),
            AttackKind::Ipm => ipm(honest, scale),
            AttackKind::Zero => ParamVector::zeros(honest[0].len()),
            AttackKind::None => honest_mean(honest),
            AttackKind::Custom(attack) => attack(honest, scale),
        }
    }

    /// What the `f` Byzantine clients send this round.
    pub fn emit(&self, honest: &[ParamVector], aggregator: &AggregatorSpec, f: usize) -> Result<AttackOutput> {
        if honest.is_empty() {
            return Err(Error::Empty("attack needs at least one honest gradient"));
        }
        match &self.line_search {
            Some(_) => line_search_scale(self, honest, aggregator, f),
            None => Ok(AttackOutput {
                vector: self.vector(honest, self.scale),
                scale: self.scale,
                deviation: None,
            }),
        }
    }
}

/// Tries every grid parameter against the full aggregation and keeps the one
/// that pushes the aggregate furthest from the honest mean. Ties go to the
/// smallest parameter.
pub fn line_search_scale(
    attack: &AttackStrategy,
    honest: &[ParamVector],
    aggregator: &AggregatorSpec,
    f: usize,
) -> Result<AttackOutput> {
    let mut grid = attack
        .line_search
        .clone()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| Error::InvalidParameter("line search needs a nonempty grid".into()))?;
    grid.sort_by(f64::total_cmp);
    let mut best: Option<AttackOutput> = None;
    for scale in grid {
        let vector = attack.vector(honest, scale);
        let dev = deviation(honest, &vector, aggregator, f)?;
        if best
            .as_ref()
            .is_none_or(|b| dev > b.deviation.unwrap_or(f64::NEG_INFINITY))
        {
            best = Some(AttackOutput {
                vector,
                scale,
                deviation: Some(dev),
            });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

impl FromStr for AttackStrategy {
    type Err = Error;

    /// `alie`, `ipm`, `zero`, `none`, optionally suffixed with `:ls` to enable
    /// line search over the default grid.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, ls) = match s.split_once(':') {
            Some((name, "ls")) => (name.trim(), true),
            Some(_) => return Err(Error::Parse(format!("unknown attack modifier in {s:?}"))),
            None => (s.as_str(), false),
        };
        let (kind, grid): (AttackKind, &[f64]) = match name {
            "alie" => (AttackKind::Alie, &DEFAULT_ALIE_GRID),
            "ipm" => (AttackKind::Ipm, &DEFAULT_IPM_GRID),
            "zero" if !ls => (AttackKind::Zero, &[]),
            "none" if !ls => (AttackKind::None, &[]),
            _ => return Err(Error::Parse(format!("unknown attack {s:?}"))),
        };
        let strategy = AttackStrategy::new(kind, 1.0);
        Ok(if ls {
            strategy.with_line_search(grid.to_vec())
        } else {
            strategy
        })
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            AttackKind::Alie => "alie",
            AttackKind::Ipm => "ipm",
            AttackKind::Zero => "zero",
            AttackKind::None => "none",
            AttackKind::Custom(_) => "custom",
        };
        f.write_str(name)?;
        if self.line_search.is_some() {
            f.write_str(":ls")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::dvector;

    use super::*;
    use crate::aggregation::Rule;

    #[test]
    fn alie_examples() {
        let h = vec![dvector![0.0, 1.0], dvector![2.0, 3.0]];
        assert_eq!(alie(&h, 0.0), dvector![1.0, 2.0]);
        assert_eq!(alie(&[dvector![0.0], dvector![2.0]], 1.0), dvector![0.0]);
        let same = vec![dvector![4.0, -2.0]; 3];
        assert_eq!(alie(&same, 17.0), dvector![4.0, -2.0]);
    }

    #[test]
    fn ipm_examples() {
        let h = vec![dvector![1.0, 0.0], dvector![3.0, 0.0]];
        assert_eq!(ipm(&h, 0.5), dvector![-1.0, 0.0]);
        assert_eq!(ipm(&h, 1.0), dvector![-2.0, 0.0]);
        assert_eq!(ipm(&h, 0.0).norm(), 0.0);
    }

    #[test]
    fn line_search_against_mean_takes_largest_epsilon() {
        let h = vec![dvector![1.0, 2.0], dvector![3.0, 0.0], dvector![2.0, 1.0]];
        let attack = AttackStrategy::new(AttackKind::Ipm, 1.0).with_line_search(vec![10.0, 1.0]);
        let out = line_search_scale(&attack, &h, &AggregatorSpec::new(Rule::Mean, 1), 1).unwrap();
        assert_eq!(out.scale, 10.0);
    }

    #[test]
    fn line_search_is_argmax_over_grid() {
        let h: Vec<ParamVector> = (0..4).map(|i| dvector![i as f64, (i * i) as f64 - 2.0]).collect();
        let agg = AggregatorSpec::new(Rule::Cwtm, 1);
        let attack: AttackStrategy = "alie:ls".parse().unwrap();
        let out = line_search_scale(&attack, &h, &agg, 1).unwrap();
        for &z in &DEFAULT_ALIE_GRID {
            assert!(out.deviation.unwrap() >= deviation(&h, &alie(&h, z), &agg, 1).unwrap());
        }
    }

    #[test]
    fn equal_deviations_pick_smallest_parameter() {
        // identical honest gradients: every ALIE candidate equals the mean
        let h = vec![dvector![1.0, 1.0]; 4];
        let attack: AttackStrategy = "alie:ls".parse().unwrap();
        let out = line_search_scale(&attack, &h, &AggregatorSpec::new(Rule::Cwtm, 1), 1).unwrap();
        assert_eq!(out.scale, 0.1);
        assert_eq!(out.deviation, Some(0.0));
    }

    #[test]
    fn parses_selection_strings() {
        for s in ["alie", "ipm", "alie:ls", "ipm:ls", "none", "zero"] {
            assert_eq!(s.parse::<AttackStrategy>().unwrap().to_string(), s);
        }
        for s in ["", "alie:xx", "none:ls", "krum"] {
            assert!(s.parse::<AttackStrategy>().is_err());
        }
    }
}
