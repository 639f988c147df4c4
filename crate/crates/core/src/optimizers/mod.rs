//! First-order methods driven by an [`InexactOracle`]. Each outer iteration
//! consumes exactly one communication round.

mod fgm;
mod gamma;
mod gd;
mod lbfgs;
mod pigs;
mod prox;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::harness::{RunTrace, TraceRow};
use crate::oracle::OracleSample;
use crate::problems::{LossOracle, ParamVector};

pub use fgm::{fgm, FgmParams, FgmVariant};
pub use gamma::{gamma_schedule, GammaSchedule};
pub use gd::{gd, GdParams};
pub use lbfgs::{minimize_lbfgs, LbfgsOutcome, LbfgsSettings};
pub use pigs::{pigs, weighted_average_weight, PigsParams};
pub use prox::{solve_prox, ProxSolution, ProxSubproblem, ROUNDING_FACTOR};

/// Loss gap beyond which a run is declared divergent.
pub const DIVERGENCE_GAP: f64 = 1e12;

/// Ground truth used to score iterates.
pub struct Reference<'a> {
    pub loss: &'a dyn LossOracle,
    pub x_star: ParamVector,
    pub f_star: f64,
    /// Record per-round wall-clock time; off by default so traces are
    /// byte-reproducible.
    pub wall_clock: bool,
}

impl<'a> Reference<'a> {
    pub fn new(loss: &'a dyn LossOracle, x_star: ParamVector) -> Self {
        let f_star = loss.value(&x_star);
        Self {
            loss,
            x_star,
            f_star,
            wall_clock: false,
        }
    }

    pub fn with_wall_clock(mut self, on: bool) -> Self {
        self.wall_clock = on;
        self
    }

    pub fn loss_gap(&self, x: &ParamVector) -> f64 {
        self.loss.value(x) - self.f_star
    }

    fn row(&self, round: usize, x: &ParamVector, sample: &OracleSample, started: Instant) -> TraceRow {
        TraceRow {
            round,
            loss_gap: self.loss_gap(x),
            grad_norm: sample.audit.grad_norm_sq.sqrt(),
            dist_to_opt: (x - &self.x_star).norm(),
            oracle_err_sq: sample.audit.err_sq,
            lemma1_bound: sample.audit.lemma1_bound.unwrap_or(f64::NAN),
            inner_iters: 0,
            wall_ms: if self.wall_clock {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        }
    }
}

/// One accepted proximal step of PIGS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxRecord {
    pub round: usize,
    pub inner_iters: usize,
    /// `||grad phi_k(x_{k+1})||^2`.
    pub criterion: f64,
    /// `c ||x_{k+1} - x_k||^2 + E^2`.
    pub bound: f64,
    /// Squared rounding level of `grad phi_k(x_{k+1})`.
    pub rounding_floor: f64,
}

impl ProxRecord {
    /// Whether the step meets its stopping rule up to rounding.
    pub fn satisfied(&self) -> bool {
        self.criterion <= self.bound + self.rounding_floor
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    /// Iterate after the last round.
    pub last: ParamVector,
    /// Loss gap of `last`.
    pub last_gap: f64,
    /// Set when the loss gap exceeded [`DIVERGENCE_GAP`] or became non-finite.
    pub diverged: bool,
    /// PIGS weighted average `x_hat_K`.
    pub averaged: Option<ParamVector>,
    pub prox_steps: Vec<ProxRecord>,
}

impl RunOutcome {
    fn new(label: &str, x0: &ParamVector) -> Self {
        Self {
            trace: RunTrace::new(label),
            last: x0.clone(),
            last_gap: f64::NAN,
            diverged: false,
            averaged: None,
            prox_steps: Vec::new(),
        }
    }

    /// Records a row; returns `false` if the run diverged.
    fn push(&mut self, row: TraceRow) -> bool {
        let ok = row.loss_gap.is_finite() && row.loss_gap <= DIVERGENCE_GAP;
        self.trace.rows.push(row);
        if !ok {
            self.diverged = true;
        }
        ok
    }

    fn finish(mut self, reference: &Reference<'_>, last: ParamVector) -> Self {
        self.last_gap = reference.loss_gap(&last);
        if !self.last_gap.is_finite() || self.last_gap > DIVERGENCE_GAP {
            self.diverged = true;
        }
        self.last = last;
        self
    }
}

fn check_start(reference: &Reference<'_>, x0: &ParamVector, rounds: usize) -> Result<()> {
    if x0.len() != reference.loss.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.loss.dim(),
            got: x0.len(),
        });
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter("need at least one round".into()));
    }
    Ok(())
}
