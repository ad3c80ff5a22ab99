use rand::Rng;
use rayon::prelude::*;

use super::{geometric, Adjacency, AnnealConfig, Sample, SampleSet, SolveError};
use crate::qubo::QuboModel;
use crate::rng;

/// Inverse temperature at which the largest possible uphill move is accepted
/// with probability 1/2, capped at 0.1.
pub fn auto_beta_start(model: &QuboModel) -> f64 {
    beta_for(&Adjacency::new(model))
}

fn beta_for(adj: &Adjacency) -> f64 {
    let max_delta = adj.max_delta();
    if max_delta > 0.0 {
        (std::f64::consts::LN_2 / max_delta).min(0.1)
    } else {
        0.1
    }
}

/// Single-flip Metropolis over a geometric β schedule, one independent
/// restart per read. Each read reports the lowest-energy state seen at a
/// sweep boundary.
pub fn solve_sa(model: &QuboModel, config: &AnnealConfig) -> Result<SampleSet, SolveError> {
    config.validate()?;
    let n = model.n_vars();
    if n == 0 {
        return Err(SolveError::EmptyModel);
    }
    let adj = Adjacency::new(model);
    let beta_end = config.beta_end;
    let beta_start = config.beta_start.unwrap_or_else(|| beta_for(&adj));
    let beta_start = beta_start.min(beta_end);
    let sweeps = config.sweeps_per_read.unwrap_or(50 * n);

    let samples = (0..config.num_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = rng::stream(config.seed, read as u64);
            let mut bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
            let mut field = adj.fields(&bits);
            let mut energy = model.energy_unchecked(&bits);
            let mut best = bits.clone();
            let mut best_energy = energy;
            for s in 0..sweeps {
                let beta = geometric(beta_start, beta_end, s, sweeps);
                for u in 0..n {
                    let local = adj.diag[u] + field[u];
                    let delta = if bits[u] == 0 { local } else { -local };
                    if metropolis(delta, beta, &mut rng) {
                        bits[u] ^= 1;
                        energy += delta;
                        let sign = if bits[u] == 1 { 1.0 } else { -1.0 };
                        for (v, w) in adj.neighbors(u) {
                            field[v] += sign * w;
                        }
                    }
                }
                if energy < best_energy {
                    best_energy = energy;
                    best.clone_from(&bits);
                }
            }
            let energy = model.energy_unchecked(&best);
            Sample {
                bits: best,
                energy,
                read_index: read,
            }
        })
        .collect();
    Ok(SampleSet { samples })
}

#[inline]
pub(crate) fn metropolis<R: Rng>(log_weight: f64, beta: f64, rng: &mut R) -> bool {
    let x = beta * log_weight;
    if x <= 0.0 {
        true
    } else if x > 40.0 {
        false
    } else {
        rng.gen::<f64>() < (-x).exp()
    }
}
