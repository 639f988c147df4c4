use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aggregation::AggregatorSpec;
use crate::attacks::AttackStrategy;
use crate::error::{Error, Result};
use crate::optimizers::FgmVariant;
use crate::problems::SyntheticLogistic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Honest client `i` holds `x'A_i x/2 - b_i'x` with
    /// `A_i = (1 + hessian_spread t_i) A` and `b_i = b + heterogeneity s_i`,
    /// where the `t_i` and `s_i` average to zero, so `L_H = x'Ax/2 - b'x`.
    /// `A` has eigenvalues spaced geometrically in `[mu, smoothness]` and
    /// `b = A z` for a standard normal `z`, so the minimizer has unit scale.
    Quadratic {
        dim: usize,
        mu: f64,
        smoothness: f64,
        #[serde(default)]
        heterogeneity: f64,
        #[serde(default)]
        hessian_spread: f64,
        /// Rotate the eigenbasis randomly instead of using the axes.
        #[serde(default)]
        rotate: bool,
    },
    /// Regularized logistic regression on seeded Gaussian client data.
    SyntheticLogistic {
        samples_per_client: usize,
        dim: usize,
        separation: f64,
        heterogeneity: f64,
        lambda: f64,
    },
    /// Regularized logistic regression on a CSV dataset split across the
    /// honest clients, by Dirichlet shares when `beta` is set and uniformly
    /// at random otherwise.
    DatasetLogistic {
        path: PathBuf,
        lambda: f64,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        positive_label: Option<f64>,
        /// Size of the server's own sample; defaults to the mean client size.
        #[serde(default)]
        proxy_samples: Option<usize>,
    },
}

/// Which loss the server uses as `Lhat` in PIGS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyChoice {
    /// Server-side data from the global distribution.
    #[default]
    Server,
    /// The first honest client's loss.
    Client,
    /// The honest global loss itself.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    /// Total clients, Byzantine included.
    pub n: usize,
    pub f: usize,
    #[serde(default = "default_aggregator")]
    pub aggregator: String,
    #[serde(default = "default_attack")]
    pub attack: String,
    /// Fixed attack parameter, used without line search.
    #[serde(default)]
    pub attack_param: Option<f64>,
    /// Line-search grid replacing the attack's default.
    #[serde(default)]
    pub attack_grid: Option<Vec<f64>>,
    pub optimizer: String,
    #[serde(rename = "K", alias = "rounds")]
    pub rounds: usize,
    /// Step size; defaults to `1/L` for gd and `1/(2 Delta)` for pigs.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Smoothness constant override.
    #[serde(default, rename = "L", alias = "l")]
    pub smoothness: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub fgm_variant: FgmVariant,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_e", rename = "E", alias = "e")]
    pub e: f64,
    #[serde(default = "default_max_inner")]
    pub max_inner: usize,
    #[serde(default)]
    pub proxy: ProxyChoice,
    /// Random points around the optimum used to certify `(G, B)` and audit
    /// every oracle round; zero disables auditing.
    #[serde(default)]
    pub audit_points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub wall_clock: bool,
}

fn default_aggregator() -> String {
    "nnm+cwtm".into()
}

fn default_attack() -> String {
    "alie:ls".into()
}

fn default_e() -> f64 {
    1e-8
}

fn default_max_inner() -> usize {
    1000
}

/// The optimizers a config can name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Gd,
    Fgm,
    Pigs,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gd" => Ok(OptimizerKind::Gd),
            "fgm" => Ok(OptimizerKind::Fgm),
            "pigs" => Ok(OptimizerKind::Pigs),
            other => Err(Error::Parse(format!("unknown optimizer {other:?}"))),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config; a relative dataset path is resolved against the
    /// config file's directory.
    /// Reads a config file. Relative dataset and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let ProblemConfig::DatasetLogistic { path: data, .. } = &mut config.problem {
            anchor(data);
        }
        if let Some(out) = &mut config.output {
            anchor(out);
        }
        Ok(config)
    }

    /// Applies `key=value` overrides. Keys are dotted paths into the JSON
    /// form (`problem.lambda`); values are JSON, or plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut json = serde_json::to_value(self)?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("override {item:?} is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
            set_path(&mut json, canonical_key(key.trim()), value)?;
        }
        let config: Self = serde_json::from_value(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn optimizer_kind(&self) -> Result<OptimizerKind> {
        self.optimizer.parse()
    }

    pub fn aggregator_spec(&self) -> Result<AggregatorSpec> {
        AggregatorSpec::parse(&self.aggregator, self.f)
    }

    pub fn attack_strategy(&self) -> Result<AttackStrategy> {
        let mut strategy: AttackStrategy = self.attack.parse()?;
        if let Some(p) = self.attack_param {
            strategy.scale = p;
        }
        if let (Some(grid), Some(_)) = (&self.attack_grid, &strategy.line_search) {
            if grid.is_empty() {
                return Err(Error::InvalidParameter("attack_grid is empty".into()));
            }
            strategy.line_search = Some(grid.clone());
        }
        Ok(strategy)
    }

    /// Checks that every string names a known entry and the counts fit.
    pub fn validate(&self) -> Result<()> {
        if self.f >= self.n {
            return Err(Error::InvalidParameter(format!(
                "need f < n, got f = {}, n = {}",
                self.f, self.n
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be positive".into()));
        }
        self.optimizer_kind()?;
        self.aggregator_spec()?;
        self.attack_strategy()?;
        for (name, v) in [("eta", self.eta), ("L", self.smoothness), ("mu", self.mu)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.c >= 0.0 && self.e >= 0.0) {
            return Err(Error::InvalidParameter("c and E must be nonnegative".into()));
        }
        match &self.problem {
            ProblemConfig::Quadratic {
                dim,
                mu,
                smoothness,
                heterogeneity,
                hessian_spread,
                ..
            } => {
                if *dim == 0 || !(*mu > 0.0 && smoothness >= mu) {
                    return Err(Error::InvalidParameter(
                        "quadratic needs dim > 0 and smoothness >= mu > 0".into(),
                    ));
                }
                if !(*heterogeneity >= 0.0) || !(0.0..1.0).contains(hessian_spread) {
                    return Err(Error::InvalidParameter(
                        "quadratic needs heterogeneity >= 0 and 0 <= hessian_spread < 1".into(),
                    ));
                }
            }
            ProblemConfig::SyntheticLogistic {
                samples_per_client,
                dim,
                lambda,
                ..
            } => {
                if *samples_per_client == 0 || *dim == 0 || !(*lambda > 0.0) {
                    return Err(Error::InvalidParameter(
                        "synthetic logistic needs samples, dim and lambda positive".into(),
                    ));
                }
            }
            ProblemConfig::DatasetLogistic { lambda, beta, .. } => {
                if !(*lambda > 0.0) || beta.is_some_and(|b| !(b > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "dataset logistic needs lambda > 0 and beta > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn synthetic(&self) -> Option<SyntheticLogistic> {
        match self.problem {
            ProblemConfig::SyntheticLogistic {
                samples_per_client,
                dim,
                separation,
                heterogeneity,
                ..
            } => Some(SyntheticLogistic {
                samples_per_client,
                dim,
                separation,
                heterogeneity,
            }),
            _ => None,
        }
    }
}

/// Serialized name of a top-level key given by one of its aliases.
fn canonical_key(key: &str) -> &str {
    match key {
        "rounds" => "K",
        "l" => "L",
        "e" => "E",
        other => other,
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| Error::Parse(format!("override {key:?}: {part:?} is not inside an object")))?;
        if parts.peek().is_none() {
            map.insert(part.to_owned(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_owned())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(Error::Parse("empty override key".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "problem": {"kind": "synthetic_logistic", "samples_per_client": 50, "dim": 5,
                    "separation": 1.0, "heterogeneity": 0.1, "lambda": 0.01},
        "n": 21, "f": 1, "aggregator": "nnm+cwtm", "attack": "alie:ls",
        "optimizer": "pigs", "K": 30, "eta": 2.0, "seed": 7
    }"#;

    #[test]
    fn round_trips() {
        let config = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(config.rounds, 30);
        let again = ExperimentConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let config = ExperimentConfig::from_json(SAMPLE).unwrap();
        let changed = config
            .with_overrides(&["problem.lambda=0.5", "optimizer=gd", "fgm_variant=momentum", "rounds=3"])
            .unwrap();
        assert_eq!(changed.optimizer, "gd");
        assert_eq!(changed.fgm_variant, FgmVariant::Momentum);
        assert_eq!(changed.rounds, 3);
        match changed.problem {
            ProblemConfig::SyntheticLogistic { lambda, .. } => assert_eq!(lambda, 0.5),
            _ => panic!("problem kind changed"),
        }
    }

    #[test]
    fn rejects_unknown_names() {
        let config = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert!(config.with_overrides(&["optimizer=adam"]).is_err());
        assert!(config.with_overrides(&["aggregator=median"]).is_err());
        assert!(config.with_overrides(&["attack=flip"]).is_err());
        assert!(config.with_overrides(&["f=21"]).is_err());
        assert!(config.with_overrides(&["bogus=1"]).is_err());
        assert!(config.with_overrides(&["novalue"]).is_err());
    }
}
