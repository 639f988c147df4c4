use std::fmt;

use super::trace::RunTrace;

/// Share of final rounds over which a trace's plateau is measured.
pub const PLATEAU_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundsToTarget {
    pub label: String,
    /// `None` when the target is never reached.
    pub rounds: Option<usize>,
    pub plateau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub target: f64,
    pub entries: Vec<RoundsToTarget>,
}

impl Comparison {
    pub fn rounds(&self, label: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.label == label).and_then(|e| e.rounds)
    }
}

/// `1.5` times the lowest plateau among the traces.
pub fn default_target(traces: &[RunTrace]) -> f64 {
    1.5 * traces
        .iter()
        .map(|t| t.plateau(PLATEAU_FRACTION))
        .filter(|p| !p.is_nan())
        .fold(f64::INFINITY, f64::min)
}

/// First round at which each trace's loss gap is within `target`
/// (default: [`default_target`]).
pub fn compare_runs(traces: &[RunTrace], target: Option<f64>) -> Comparison {
    let target = target.unwrap_or_else(|| default_target(traces));
    let entries = traces
        .iter()
        .map(|t| RoundsToTarget {
            label: t.label.clone(),
            rounds: t.rounds_to(target),
            plateau: t.plateau(PLATEAU_FRACTION),
        })
        .collect();
    Comparison { target, entries }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "target loss gap {:e}", self.target)?;
        writeln!(f, "{:<16} {:>10} {:>14}", "run", "rounds", "plateau")?;
        for e in &self.entries {
            let rounds = e.rounds.map_or_else(|| "never".to_owned(), |r| r.to_string());
            writeln!(f, "{:<16} {:>10} {:>14.6e}", e.label, rounds, e.plateau)?;
        }
        Ok(())
    }
}
