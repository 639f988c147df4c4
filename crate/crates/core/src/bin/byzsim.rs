use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use byzsim::aggregation::{verify_robustness, AggregatorSpec};
use byzsim::harness::{compare_runs, emit_csv, emit_plot, run_experiment, sweep, ExperimentConfig, RunTrace};
use byzsim::problems::byzantine_bounds;

#[derive(Parser)]
#[command(
    name = "byzsim",
    version,
    about = "Byzantine-robust distributed optimization simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trace CSV.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set K=200` or `--set problem.lambda=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output CSV; defaults to the config's `output`, else stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every config in a directory in parallel.
    Sweep {
        dir: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Lower bounds on the achievable error under (G, B)-heterogeneity.
    Bounds {
        #[arg(long = "G")]
        g: f64,
        #[arg(long = "B", default_value_t = 0.0)]
        b: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        f: usize,
        #[arg(long)]
        n: usize,
    },
    /// Worst observed robustness ratio of an aggregator on random inputs.
    AggVerify {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        f: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plot loss gaps of trace CSVs as a log-scale SVG.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, set, output } => {
            let config = ExperimentConfig::load(&config)
                .and_then(|c| c.with_overrides(&set))
                .with_context(|| format!("loading {}", config.display()))?;
            let run = run_experiment(&config)?;
            match output.or(config.output.clone()) {
                Some(path) => {
                    emit_csv(run.trace(), &path)?;
                    eprintln!(
                        "{} rounds, final loss gap {:e}, wrote {}",
                        run.trace().len(),
                        run.outcome.last_gap,
                        path.display()
                    );
                }
                None => print!("{}", run.trace().to_csv_string()),
            }
            if run.outcome.diverged {
                eprintln!("warning: run diverged");
            }
        }
        Command::Sweep { dir, set } => {
            let items = sweep(&dir, &set)?;
            let mut failed = 0;
            let mut traces = Vec::new();
            for item in items {
                match item.result {
                    Ok(run) => {
                        println!("{} -> {}", item.config.display(), item.output.display());
                        let mut trace = run.outcome.trace;
                        trace.label = item
                            .config
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or(trace.label);
                        traces.push(trace);
                    }
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: {e:#}", item.config.display());
                    }
                }
            }
            if !traces.is_empty() {
                print!("{}", compare_runs(&traces, None));
            }
            if failed > 0 {
                bail!("{failed} config(s) failed");
            }
        }
        Command::Bounds { g, b, mu, f, n } => {
            let bounds = byzantine_bounds(g, b, mu, f, n)?;
            println!("breakdown_ok {}", bounds.breakdown_ok);
            println!("value_bound {:e}", bounds.value_bound);
            println!("gradnorm_bound {:e}", bounds.gradnorm_bound);
        }
        Command::AggVerify {
            rule,
            n,
            f,
            trials,
            dim,
            seed,
        } => {
            let spec = AggregatorSpec::parse(&rule, f)?;
            let nu = spec.robustness_coefficient(n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let vectors: Vec<DVector<f64>> = (0..n)
                    .map(|_| DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng)))
                    .collect();
                worst = worst.max(verify_robustness(&spec, &vectors)?.worst_ratio);
            }
            println!("rule {spec} n {n} f {f} trials {trials}");
            println!("worst_ratio {worst:e}");
            println!("catalog_nu {nu:e}");
            println!("holds {}", worst <= nu * (1.0 + 1e-9));
        }
        Command::Plot { csv, output } => {
            let traces = csv
                .iter()
                .map(|p| RunTrace::read_csv(p).with_context(|| format!("reading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            emit_plot(&traces, &output)?;
        }
    }
    Ok(())
}
