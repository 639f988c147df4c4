//! `(f, nu)`-robust aggregation rules, pre-aggregation mixings and their
//! robustness coefficients.
//!
//! An aggregator is written as a `+`-separated chain read left to right:
//! every token but the last is a mixing applied to the client vectors, and
//! the last token is the base rule. For example `nnm+cwtm` mixes with
//! nearest neighbours and then takes the coordinate-wise trimmed mean, and
//! `frg(gts)+gm` runs one robust-gossip step with a geometrically trimmed
//! summand before the geometric median.

mod coefficient;
mod mixing;
mod rules;
mod verify;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::ParamVector;

pub use coefficient::{lower_bound_coefficient, robustness_coefficient};
pub use mixing::{frg_mix, gts, nnm};
pub use rules::{cwm, cwtm, geometric_median, krum, krum_with_neighbors, mean, GeometricMedian, WEISZFELD_EPS};
pub use verify::{verify_robustness, RobustnessCheck, MAX_ENUMERATION};

/// Default Weiszfeld stationarity tolerance.
pub const DEFAULT_GM_TOL: f64 = 1e-8;
pub const DEFAULT_GM_MAX_ITER: usize = 10_000;

/// Default `rho` declared for the geometrically trimmed summand. On the
/// complete graph with uniform weights F-RG(GTS) coincides with NNM, and
/// `rho = 4` makes the F-RG contraction factor equal NNM's `8f/(n-f)`.
pub const DEFAULT_GTS_RHO: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Cwtm,
    Cwm,
    Gm,
    Krum,
    Mean,
}

impl Rule {
    pub const ROBUST: [Rule; 4] = [Rule::Cwtm, Rule::Cwm, Rule::Gm, Rule::Krum];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Cwtm => "cwtm",
            Rule::Cwm => "cwm",
            Rule::Gm => "gm",
            Rule::Krum => "krum",
            Rule::Mean => "mean",
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cwtm" => Ok(Rule::Cwtm),
            "cwm" => Ok(Rule::Cwm),
            "gm" => Ok(Rule::Gm),
            "krum" => Ok(Rule::Krum),
            "mean" => Ok(Rule::Mean),
            other => Err(Error::Parse(format!("unknown aggregation rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mixing {
    Nnm,
    /// Robust gossip with the geometrically trimmed summand; `rho` is the
    /// summand's declared robustness constant.
    FrgGts {
        rho: f64,
    },
}

impl Mixing {
    pub fn name(self) -> &'static str {
        match self {
            Mixing::Nnm => "nnm",
            Mixing::FrgGts { .. } => "frg(gts)",
        }
    }

    pub fn apply(self, vectors: &[ParamVector], f: usize) -> Result<Vec<ParamVector>> {
        match self {
            Mixing::Nnm => nnm(vectors, f),
            Mixing::FrgGts { .. } => frg_mix(vectors, f),
        }
    }
}

impl FromStr for Mixing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        match token.as_str() {
            "nnm" => Ok(Mixing::Nnm),
            "frg(gts)" | "frg" => Ok(Mixing::FrgGts { rho: DEFAULT_GTS_RHO }),
            _ => {
                // frg(gts,rho=<value>)
                let rho = token
                    .strip_prefix("frg(gts,rho=")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|r| r.is_finite() && *r >= 0.0)
                    .ok_or_else(|| Error::Parse(format!("unknown mixing {token:?}")))?;
                Ok(Mixing::FrgGts { rho })
            }
        }
    }
}

impl fmt::Display for Mixing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Mixing::Nnm => f.write_str("nnm"),
            Mixing::FrgGts { rho } if rho == DEFAULT_GTS_RHO => f.write_str("frg(gts)"),
            Mixing::FrgGts { rho } => write!(f, "frg(gts,rho={rho})"),
        }
    }
}

/// A base rule preceded by a chain of mixings, for a fixed number `f` of
/// tolerated Byzantine inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorSpec {
    pub rule: Rule,
    pub mixings: Vec<Mixing>,
    pub f: usize,
    pub gm_tol: f64,
    pub gm_max_iter: usize,
    /// Krum neighbour count; `None` means `n - f - 1`.
    pub krum_neighbors: Option<usize>,
}

impl AggregatorSpec {
    pub fn new(rule: Rule, f: usize) -> Self {
        Self {
            rule,
            mixings: Vec::new(),
            f,
            gm_tol: DEFAULT_GM_TOL,
            gm_max_iter: DEFAULT_GM_MAX_ITER,
            krum_neighbors: None,
        }
    }

    pub fn with_mixing(mut self, mixing: Mixing) -> Self {
        self.mixings.push(mixing);
        self
    }

    /// Parses the chain syntax, e.g. `"nnm+cwtm"`.
    pub fn parse(text: &str, f: usize) -> Result<Self> {
        let tokens: Vec<&str> = text.split('+').map(str::trim).collect();
        let (base, chain) = tokens
            .split_last()
            .ok_or_else(|| Error::Parse("empty aggregator".into()))?;
        if base.is_empty() {
            return Err(Error::Parse(format!("missing base rule in {text:?}")));
        }
        let mut spec = Self::new(base.parse()?, f);
        for token in chain {
            spec.mixings.push(token.parse()?);
        }
        Ok(spec)
    }

    /// Applies the mixings in order, then the base rule.
    pub fn aggregate(&self, vectors: &[ParamVector]) -> Result<ParamVector> {
        let mut mixed;
        let mut current = vectors;
        for mixing in &self.mixings {
            mixed = mixing.apply(current, self.f)?;
            current = &mixed;
        }
        match self.rule {
            Rule::Mean => mean(current),
            Rule::Cwtm => cwtm(current, self.f),
            Rule::Cwm => cwm(current),
            Rule::Gm => Ok(geometric_median(current, self.gm_tol, self.gm_max_iter)?.point),
            Rule::Krum => match self.krum_neighbors {
                Some(k) => krum_with_neighbors(current, self.f, k),
                None => krum(current, self.f),
            },
        }
    }

    pub fn robustness_coefficient(&self, n: usize) -> Result<f64> {
        robustness_coefficient(self, n)
    }
}

impl fmt::Display for AggregatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mixings {
            write!(f, "{m}+")?;
        }
        f.write_str(self.rule.name())
    }
}
