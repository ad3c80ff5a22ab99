use rand::Rng;
use rayon::prelude::*;

use super::anneal::metropolis;
use super::{geometric, Adjacency, AnnealConfig, Sample, SampleSet, SolveError};
use crate::qubo::QuboModel;
use crate::rng;

/// J⊥(Γ) = −(1/(2β))·ln tanh(βΓ/M).
pub fn replica_coupling(beta: f64, gamma: f64, slices: usize) -> f64 {
    -(0.5 / beta) * (beta * gamma / slices as f64).tanh().ln()
}

/// Path-integral Monte Carlo with `M` Trotter replicas on a ring. Replica k
/// sees the classical energy at β/M; neighbouring replicas of the same spin
/// are coupled ferromagnetically by J⊥(Γ) while Γ decays geometrically.
pub fn solve_sqa(model: &QuboModel, config: &AnnealConfig) -> Result<SampleSet, SolveError> {
    config.validate()?;
    let n = model.n_vars();
    if n == 0 {
        return Err(SolveError::EmptyModel);
    }
    let adj = Adjacency::new(model);
    let m = config.sqa_trotter_slices;
    let beta = config.sqa_beta;
    let beta_slice = beta / m as f64;
    let sweeps = config.sweeps_per_read.unwrap_or(20 * n);

    let samples = (0..config.num_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = rng::stream(config.seed, read as u64);
            let mut replicas: Vec<Vec<u8>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0..=1u8)).collect())
                .collect();
            let mut fields: Vec<Vec<f64>> = replicas.iter().map(|r| adj.fields(r)).collect();
            for s in 0..sweeps {
                let gamma = geometric(config.gamma_start, config.gamma_end, s, sweeps);
                let j_perp = if m > 1 { replica_coupling(beta, gamma, m) } else { 0.0 };
                for k in 0..m {
                    let prev = (k + m - 1) % m;
                    let next = (k + 1) % m;
                    for u in 0..n {
                        let x = replicas[k][u];
                        let local = adj.diag[u] + fields[k][u];
                        let d_classical = if x == 0 { local } else { -local };
                        // σ = 2x − 1; flipping σ changes −J⊥ σ (σ_prev + σ_next) by 2 J⊥ σ (σ_prev + σ_next)
                        let d_coupling = if m > 1 {
                            let sigma = 2.0 * f64::from(x) - 1.0;
                            let around =
                                (2.0 * f64::from(replicas[prev][u]) - 1.0) + (2.0 * f64::from(replicas[next][u]) - 1.0);
                            2.0 * j_perp * sigma * around
                        } else {
                            0.0
                        };
                        if metropolis(beta_slice * d_classical + beta * d_coupling, 1.0, &mut rng) {
                            replicas[k][u] ^= 1;
                            let sign = if replicas[k][u] == 1 { 1.0 } else { -1.0 };
                            let f = &mut fields[k];
                            for (v, w) in adj.neighbors(u) {
                                f[v] += sign * w;
                            }
                        }
                    }
                }
            }
            let (bits, energy) = replicas
                .into_iter()
                .map(|r| {
                    let e = model.energy_unchecked(&r);
                    (r, e)
                })
                .reduce(|a, b| if b.1 < a.1 { b } else { a })
                .expect("at least one replica");
            Sample {
                bits,
                energy,
                read_index: read,
            }
        })
        .collect();
    Ok(SampleSet { samples })
}
