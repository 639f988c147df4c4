use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{ExperimentConfig, OptimizerKind, ProblemConfig, ProxyChoice};
use super::trace::RunTrace;
use crate::error::{Error, Result};
use crate::optimizers::{
    fgm, gd, minimize_lbfgs, pigs, FgmParams, GdParams, LbfgsSettings, PigsParams, Reference, RunOutcome,
};
use crate::oracle::InexactOracle;
use crate::problems::{
    binarize_labels, dirichlet_partition, estimate_heterogeneity, make_logistic, make_quadratic, read_dataset_csv,
    reference_minimizer, ClientPool, Dataset, HeterogeneityEstimate, LossOracle, MeanLoss, ParamVector,
};

/// Stopping tolerance on `||grad L_H||` for the reference minimizer.
pub const REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_ITER: usize = 1_000_000;

/// Everything one experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub outcome: RunOutcome,
    pub x_star: ParamVector,
    pub f_star: f64,
    /// Smoothness and strong convexity handed to the optimizer.
    pub smoothness: f64,
    pub mu: f64,
    /// Step size used by gd or pigs.
    pub eta: Option<f64>,
    /// Estimated proxy dissimilarity, for pigs.
    pub delta: Option<f64>,
    /// Catalog robustness coefficient of the aggregator.
    pub nu: f64,
    pub heterogeneity: Option<HeterogeneityEstimate>,
}

impl ExperimentRun {
    pub fn trace(&self) -> &RunTrace {
        &self.outcome.trace
    }
}

/// Honest losses plus the server's own loss.
struct Problem {
    honest: Vec<Arc<dyn LossOracle>>,
    server: Arc<dyn LossOracle>,
    /// Closed-form honest global loss, when the problem is quadratic.
    exact_global: Option<Arc<dyn LossOracle>>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn quadratic_problem(config: &ExperimentConfig, honest: usize) -> Result<Problem> {
    let ProblemConfig::Quadratic {
        dim,
        mu,
        smoothness,
        heterogeneity,
        hessian_spread,
        rotate,
    } = config.problem
    else {
        unreachable!("called for quadratic problems only");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ratio = smoothness / mu;
    let eigen: Vec<f64> = (0..dim)
        .map(|j| {
            if dim == 1 {
                mu
            } else {
                mu * ratio.powf(j as f64 / (dim - 1) as f64)
            }
        })
        .collect();
    let diag = DMatrix::from_diagonal(&ParamVector::from_vec(eigen));
    let a = if rotate {
        let q = DMatrix::from_fn(dim, dim, |_, _| gaussian(&mut rng)).qr().q();
        let a = &q * diag * q.transpose();
        (&a + a.transpose()) * 0.5
    } else {
        diag
    };
    let b = &a * ParamVector::from_fn(dim, |_, _| gaussian(&mut rng));

    let mut shifts: Vec<ParamVector> = (0..honest)
        .map(|_| ParamVector::from_fn(dim, |_, _| gaussian(&mut rng)))
        .collect();
    let centre = shifts.iter().fold(ParamVector::zeros(dim), |acc, s| acc + s) / honest as f64;
    for s in &mut shifts {
        *s -= &centre;
    }
    let mut parts: Vec<Arc<dyn LossOracle>> = Vec::with_capacity(honest);
    let mut a_mean = DMatrix::zeros(dim, dim);
    let mut b_mean = ParamVector::zeros(dim);
    for (i, s) in shifts.iter().enumerate() {
        let t = if honest == 1 {
            0.0
        } else {
            -1.0 + 2.0 * i as f64 / (honest - 1) as f64
        };
        let a_i = &a * (1.0 + hessian_spread * t);
        let b_i = &b + s * heterogeneity;
        a_mean += &a_i;
        b_mean += &b_i;
        parts.push(Arc::new(make_quadratic(a_i, b_i)?));
    }
    let exact: Arc<dyn LossOracle> = Arc::new(make_quadratic(a_mean / honest as f64, b_mean / honest as f64)?);
    Ok(Problem {
        honest: parts,
        server: Arc::new(make_quadratic(a, b)?),
        exact_global: Some(exact),
    })
}

fn logistic_parts(datasets: &[Dataset], lambda: f64, positive: Option<f64>) -> Result<Vec<Arc<dyn LossOracle>>> {
    datasets
        .iter()
        .map(|d| {
            let labels = binarize_labels(&d.labels, positive)?;
            Ok(Arc::new(make_logistic(d.features.clone(), labels, lambda)?) as Arc<dyn LossOracle>)
        })
        .collect()
}

fn dataset_problem(config: &ExperimentConfig, honest: usize) -> Result<Problem> {
    let ProblemConfig::DatasetLogistic {
        ref path,
        lambda,
        beta,
        positive_label,
        proxy_samples,
    } = config.problem
    else {
        unreachable!("called for dataset problems only");
    };
    let data = read_dataset_csv(path)?;
    if data.len() < honest {
        return Err(Error::InvalidParameter(format!(
            "{} samples cannot cover {honest} honest clients",
            data.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shards = match beta {
        Some(beta) => dirichlet_partition(&data.class_ids(), honest, beta, config.seed)?,
        None => {
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut rng);
            let mut shards = vec![Vec::new(); honest];
            for (i, row) in order.into_iter().enumerate() {
                shards[i % honest].push(row);
            }
            shards
        }
    };
    let client_data: Vec<Dataset> = shards.iter().map(|rows| data.subset(rows)).collect();
    let server_size = proxy_samples.unwrap_or(data.len() / honest).clamp(1, data.len());
    let mut rows: Vec<usize> = (0..data.len()).collect();
    rows.shuffle(&mut rng);
    rows.truncate(server_size);
    rows.sort_unstable();
    let server = logistic_parts(&[data.subset(&rows)], lambda, positive_label)?.remove(0);
    Ok(Problem {
        honest: logistic_parts(&client_data, lambda, positive_label)?,
        server,
        exact_global: None,
    })
}

fn build_problem(config: &ExperimentConfig, honest: usize) -> Result<Problem> {
    match &config.problem {
        ProblemConfig::Quadratic { .. } => quadratic_problem(config, honest),
        ProblemConfig::SyntheticLogistic { lambda, .. } => {
            let generator = config.synthetic().expect("synthetic problem");
            let mut datasets = generator.generate(honest, config.seed);
            let server = datasets.pop().expect("generator returns a server dataset");
            Ok(Problem {
                honest: logistic_parts(&datasets, *lambda, None)?,
                server: logistic_parts(&[server], *lambda, None)?.remove(0),
                exact_global: None,
            })
        }
        ProblemConfig::DatasetLogistic { .. } => dataset_problem(config, honest),
    }
}

/// Minimizer of the honest global loss, certified by `||grad|| <= tol`.
fn certified_minimizer(global: &dyn LossOracle, exact: Option<&dyn LossOracle>, dim: usize) -> Result<ParamVector> {
    if let Some(x) = exact.and_then(|q| q.minimizer()) {
        return Ok(x);
    }
    let x0 = ParamVector::zeros(dim);
    let settings = LbfgsSettings {
        max_iter: 10_000,
        ..LbfgsSettings::default()
    };
    let warm = minimize_lbfgs(
        &x0,
        |x| (global.value(x), global.grad(x)),
        |_, g| g.norm() <= REFERENCE_TOL,
        settings,
    );
    reference_minimizer(global, &warm.x, REFERENCE_TOL, REFERENCE_MAX_ITER)
}

/// Largest-magnitude eigenvalue of `hess Lhat(x) - hess L_H(x)`, by power
/// iteration on Hessian-vector products.
pub fn estimate_dissimilarity(
    proxy: &dyn LossOracle,
    global: &dyn LossOracle,
    x: &ParamVector,
    seed: u64,
) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = ParamVector::from_fn(x.len(), |_, _| gaussian(&mut rng));
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..100 {
        let w = proxy.hvp(x, &v)? - global.hvp(x, &v)?;
        estimate = w.norm();
        if estimate == 0.0 {
            return Some(0.0);
        }
        v = w / estimate;
    }
    Some(estimate)
}

/// Everything a config describes up to the optimizer: clients, the robust
/// oracle and the certified reference point.
pub struct PreparedExperiment {
    pub oracle: InexactOracle,
    /// Honest global loss `L_H`.
    pub global: MeanLoss,
    pub honest: Vec<Arc<dyn LossOracle>>,
    /// The server's own loss.
    pub server: Arc<dyn LossOracle>,
    pub x_star: ParamVector,
    pub smoothness: f64,
    pub mu: f64,
    pub nu: f64,
    pub heterogeneity: Option<HeterogeneityEstimate>,
}

impl PreparedExperiment {
    /// `Lhat` for PIGS as chosen by the config.
    pub fn proxy(&self, choice: ProxyChoice) -> Arc<dyn LossOracle> {
        match choice {
            ProxyChoice::Server => self.server.clone(),
            ProxyChoice::Client => self.honest[0].clone(),
            ProxyChoice::Exact => Arc::new(self.global.clone()),
        }
    }
}

pub fn prepare_experiment(config: &ExperimentConfig) -> Result<PreparedExperiment> {
    config.validate()?;
    let honest_count = config.n - config.f;
    let problem = build_problem(config, honest_count).map_err(|e| e.at_stage("problem"))?;
    let dim = problem.server.dim();

    let attack = config.attack_strategy()?;
    let pool = ClientPool::new(problem.honest.clone(), vec![attack; config.f]).map_err(|e| e.at_stage("pool"))?;
    let global = MeanLoss::new(problem.honest.clone())?;
    let x_star =
        certified_minimizer(&global, problem.exact_global.as_deref(), dim).map_err(|e| e.at_stage("reference"))?;

    let exact_constants = problem.exact_global.as_deref().unwrap_or(&global);
    let smoothness = config
        .smoothness
        .or_else(|| exact_constants.smoothness())
        .ok_or_else(|| Error::InvalidParameter("smoothness unknown; set L".into()))?;
    let mu = config
        .mu
        .or_else(|| exact_constants.mu())
        .ok_or_else(|| Error::InvalidParameter("strong convexity unknown; set mu".into()))?;

    let aggregator = config.aggregator_spec()?;
    let nu = aggregator
        .robustness_coefficient(config.n)
        .map_err(|e| e.at_stage("aggregator"))?;
    let mut oracle = InexactOracle::new(pool, aggregator, config.seed ^ 0x5EED_0F0A_C1E5)?;
    let mut heterogeneity = None;
    if config.audit_points > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        let x0 = ParamVector::zeros(dim);
        let radius = (&x0 - &x_star).norm().max(1.0);
        let mut points = vec![x0, x_star.clone()];
        points.extend((0..config.audit_points).map(|_| {
            let dir = ParamVector::from_fn(dim, |_, _| gaussian(&mut rng));
            &x_star + dir * (radius / (dim as f64).sqrt())
        }));
        let estimate = estimate_heterogeneity(oracle.pool(), &points).map_err(|e| e.at_stage("audit"))?;
        oracle = oracle.with_audit(&estimate).map_err(|e| e.at_stage("audit"))?;
        heterogeneity = Some(estimate);
    }
    Ok(PreparedExperiment {
        oracle,
        global,
        honest: problem.honest,
        server: problem.server,
        x_star,
        smoothness,
        mu,
        nu,
        heterogeneity,
    })
}

/// Builds the pool, oracle and optimizer a config describes and runs it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let prepared = prepare_experiment(config)?;
    let proxy = prepared.proxy(config.proxy);
    let PreparedExperiment {
        mut oracle,
        global,
        x_star,
        smoothness,
        mu,
        nu,
        heterogeneity,
        ..
    } = prepared;
    let x0 = ParamVector::zeros(x_star.len());

    let reference = Reference::new(&global, x_star.clone()).with_wall_clock(config.wall_clock);
    let mut eta = None;
    let mut delta = None;
    let outcome = match config.optimizer_kind()? {
        OptimizerKind::Gd => {
            let step = config.eta.unwrap_or(1.0 / smoothness);
            eta = Some(step);
            gd(
                &mut oracle,
                &reference,
                &x0,
                GdParams {
                    eta: step,
                    rounds: config.rounds,
                },
            )
        }
        OptimizerKind::Fgm => fgm(
            &mut oracle,
            &reference,
            &x0,
            FgmParams {
                l: smoothness,
                mu,
                rounds: config.rounds,
                variant: config.fgm_variant,
            },
        ),
        OptimizerKind::Pigs => {
            let d = estimate_dissimilarity(proxy.as_ref(), &global, &x_star, config.seed);
            delta = d;
            let step = match (config.eta, d) {
                (Some(step), _) => step,
                // A tiny dissimilarity means the proxy is nearly exact; cap the
                // step where the proximal term still regularizes the solve.
                (None, Some(d)) => 1.0 / (2.0 * d.max(1e-3 * mu)),
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "proxy has no Hessian-vector product; set eta".into(),
                    ))
                }
            };
            eta = Some(step);
            pigs(
                &mut oracle,
                &reference,
                proxy,
                &x0,
                PigsParams {
                    eta: step,
                    c: config.c,
                    e: config.e,
                    rounds: config.rounds,
                    mu,
                    max_inner: config.max_inner,
                },
            )
        }
    }
    .map_err(|e| e.at_stage("optimizer"))?;

    let mut outcome = outcome;
    outcome.trace.label = config.optimizer.clone();
    log::info!(
        "{} finished {} rounds, last gap {:e}{}",
        config.optimizer,
        outcome.trace.len(),
        outcome.last_gap,
        if outcome.diverged { " (diverged)" } else { "" }
    );
    Ok(ExperimentRun {
        f_star: reference.f_star,
        outcome,
        x_star,
        smoothness,
        mu,
        eta,
        delta,
        nu,
        heterogeneity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(optimizer: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "problem": {{"kind": "synthetic_logistic", "samples_per_client": 40, "dim": 4,
                             "separation": 1.0, "heterogeneity": 0.0, "lambda": 0.1}},
                "n": 5, "f": 0, "aggregator": "mean", "attack": "none",
                "optimizer": "{optimizer}", "K": 300, "seed": 3
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn vanilla_gd_converges_monotonically() {
        let run = run_experiment(&config("gd")).unwrap();
        let gaps: Vec<f64> = run.trace().loss_gaps().collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(run.outcome.last_gap < 1e-6);
        assert!(gaps.iter().all(|&g| g >= -1e-12));
    }

    #[test]
    fn runs_are_reproducible() {
        let mut c = config("pigs");
        c.rounds = 10;
        let a = run_experiment(&c).unwrap().trace().to_csv_string();
        let b = run_experiment(&c).unwrap().trace().to_csv_string();
        assert_eq!(a, b);
    }

    #[test]
    fn quadratic_reference_is_closed_form() {
        let c = ExperimentConfig::from_json(
            r#"{
                "problem": {"kind": "quadratic", "dim": 3, "mu": 1.0, "smoothness": 10.0,
                            "heterogeneity": 0.5, "rotate": true},
                "n": 6, "f": 1, "aggregator": "cwtm", "attack": "ipm",
                "optimizer": "fgm", "K": 5, "audit_points": 4
            }"#,
        )
        .unwrap();
        let run = run_experiment(&c).unwrap();
        assert!((run.smoothness - 10.0).abs() < 1e-9);
        assert!((run.mu - 1.0).abs() < 1e-9);
        assert_eq!(run.trace().len(), 5);
        let h = run.heterogeneity.as_ref().unwrap();
        assert!(h.max_violation <= 0.0);
        assert!(run.trace().rows.iter().all(|r| r.lemma1_bound.is_finite()));
    }
}
