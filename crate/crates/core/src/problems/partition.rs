use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

const MAX_RETRIES: usize = 100;

/// Splits sample indices across `n_clients` so that, within each class,
/// client shares follow `Dir(beta, ..., beta)`. Smaller `beta` gives more
/// heterogeneous clients. Draws are repeated until no client is empty.
pub fn dirichlet_partition(labels: &[usize], n_clients: usize, beta: f64, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_clients == 0 {
        return Err(Error::InvalidParameter("n_clients must be at least 1".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if labels.is_empty() {
        return Err(Error::Empty("no samples to partition"));
    }
    let classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let gamma = Gamma::new(beta, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..MAX_RETRIES {
        let mut clients: Vec<Vec<usize>> = vec![Vec::new(); n_clients];
        for members in by_class.iter().filter(|m| !m.is_empty()) {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            let shares = dirichlet_draw(&gamma, n_clients, &mut rng);
            let total = members.len();
            let mut start = 0;
            let mut cumulative = 0.0;
            for (client, share) in shares.iter().enumerate() {
                cumulative += share;
                let end = if client + 1 == n_clients {
                    total
                } else {
                    ((cumulative * total as f64).round() as usize).clamp(start, total)
                };
                clients[client].extend_from_slice(&members[start..end]);
                start = end;
            }
        }
        if clients.iter().all(|c| !c.is_empty()) {
            for c in &mut clients {
                c.sort_unstable();
            }
            return Ok(clients);
        }
    }
    Err(Error::PartitionRetriesExhausted { retries: MAX_RETRIES })
}

fn dirichlet_draw(gamma: &Gamma<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        draws.iter_mut().for_each(|d| *d /= sum);
    } else {
        // every gamma draw underflowed (tiny beta): all mass on one client
        let hot = rng.random_range(0..k);
        draws
            .iter_mut()
            .enumerate()
            .for_each(|(i, d)| *d = if i == hot { 1.0 } else { 0.0 });
    }
    draws
}
