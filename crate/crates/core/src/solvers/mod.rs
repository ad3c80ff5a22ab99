//! QUBO samplers (simulated and simulated-quantum annealing) and the
//! penalized-objective metaheuristics (PSO, GA, ACO).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qubo::{QuboModel, Weights};

mod aco;
mod anneal;
mod fitness;
mod ga;
mod pso;
mod repair;
mod sqa;

pub use aco::{construction_probability, heuristic_information, solve_aco, update_pheromone};
pub use anneal::{auto_beta_start, solve_sa};
pub use fitness::{classical_fitness, FitnessForm, CAPACITY_SCALE};
pub use ga::{crossover, solve_ga};
pub use pso::{sigmoid, solve_pso, velocity_update};
pub use repair::repair_capacity;
pub use sqa::{replica_coupling, solve_sqa};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("bit vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("period {period}: top-5 demand {top5_demand} alone exceeds capacity {capacity}")]
    Infeasible {
        period: usize,
        top5_demand: f64,
        capacity: f64,
    },
    #[error("empty model")]
    EmptyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub energy: f64,
    pub read_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
}

impl SampleSet {
    /// Lowest energy; the earliest read wins ties.
    pub fn best(&self) -> &Sample {
        self.samples
            .iter()
            .reduce(|a, b| if b.energy < a.energy { b } else { a })
            .expect("sample sets are never empty")
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub num_reads: usize,
    /// `None`: 50·n_vars for SA, 20·n_vars for SQA.
    pub sweeps_per_read: Option<usize>,
    /// `None`: min(0.1, ln 2 / largest single-flip |ΔE|).
    pub beta_start: Option<f64>,
    pub beta_end: f64,
    pub sqa_trotter_slices: usize,
    pub sqa_beta: f64,
    pub gamma_start: f64,
    pub gamma_end: f64,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            num_reads: 500,
            sweeps_per_read: None,
            beta_start: None,
            beta_end: 50.0,
            sqa_trotter_slices: 8,
            sqa_beta: 10.0,
            gamma_start: 3.0,
            gamma_end: 0.05,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Config(m.to_string()));
        if self.num_reads == 0 {
            return bad("num_reads must be at least 1");
        }
        if self.sweeps_per_read == Some(0) {
            return bad("sweeps_per_read must be at least 1");
        }
        if let Some(b0) = self.beta_start {
            if !(b0 > 0.0 && b0 < self.beta_end) {
                return bad("need 0 < beta_start < beta_end");
            }
        }
        if !(self.beta_end > 0.0 && self.beta_end.is_finite()) {
            return bad("beta_end must be positive");
        }
        if self.sqa_trotter_slices == 0 {
            return bad("sqa_trotter_slices must be at least 1");
        }
        if !(self.sqa_beta > 0.0) {
            return bad("sqa_beta must be positive");
        }
        if !(self.gamma_start > self.gamma_end && self.gamma_end > 0.0) {
            return bad("need gamma_start > gamma_end > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub crossover_rate: f64,
    pub mutation_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcoParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaheuristicConfig {
    pub pop_size: usize,
    pub iterations: usize,
    pub pso: PsoParams,
    pub ga: GaParams,
    pub aco: AcoParams,
    pub weights: Weights,
    pub seed: u64,
}

impl Default for MetaheuristicConfig {
    fn default() -> Self {
        MetaheuristicConfig {
            pop_size: 50,
            iterations: 100,
            pso: PsoParams {
                inertia: 0.7,
                cognitive: 1.5,
                social: 1.5,
            },
            ga: GaParams {
                crossover_rate: 0.8,
                mutation_rate: 0.1,
            },
            aco: AcoParams {
                alpha: 1.0,
                beta: 2.0,
                rho: 0.5,
                q: 100.0,
            },
            weights: Weights::classical_defaults(),
            seed: 0,
        }
    }
}

impl MetaheuristicConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Config(m.to_string()));
        if self.pop_size < 2 {
            return bad("pop_size must be at least 2");
        }
        for (name, r) in [
            ("crossover_rate", self.ga.crossover_rate),
            ("mutation_rate", self.ga.mutation_rate),
            ("rho", self.aco.rho),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(SolveError::Config(format!("{name} must lie in [0,1]")));
            }
        }
        for (name, p) in [
            ("inertia", self.pso.inertia),
            ("cognitive", self.pso.cognitive),
            ("social", self.pso.social),
            ("alpha", self.aco.alpha),
            ("beta", self.aco.beta),
            ("q", self.aco.q),
        ] {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(SolveError::Config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Result of a classical run: `T·N` decision bits and their fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSolution {
    pub bits: Vec<u8>,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    Sa,
    Sqa,
    Pso,
    Ga,
    Aco,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Sa => "sa",
            SolverKind::Sqa => "sqa",
            SolverKind::Pso => "pso",
            SolverKind::Ga => "ga",
            SolverKind::Aco => "aco",
        }
    }

    pub fn is_qubo(self) -> bool {
        matches!(self, SolverKind::Sa | SolverKind::Sqa)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sa" => Ok(SolverKind::Sa),
            "sqa" => Ok(SolverKind::Sqa),
            "pso" => Ok(SolverKind::Pso),
            "ga" => Ok(SolverKind::Ga),
            "aco" => Ok(SolverKind::Aco),
            other => Err(format!("unknown solver {other:?} (sa, sqa, pso, ga, aco)")),
        }
    }
}

/// Compressed sparse rows of the off-diagonal couplings, both directions.
pub(crate) struct Adjacency {
    pub diag: Vec<f64>,
    offsets: Vec<usize>,
    nbr: Vec<u32>,
    weight: Vec<f64>,
}

impl Adjacency {
    pub fn new(model: &QuboModel) -> Self {
        let n = model.n_vars();
        let mut diag = vec![0.0; n];
        let mut degree = vec![0usize; n];
        for (u, v, c) in model.terms() {
            if u == v {
                diag[u] += c;
            } else {
                degree[u] += 1;
                degree[v] += 1;
            }
        }
        let mut offsets = vec![0; n + 1];
        for u in 0..n {
            offsets[u + 1] = offsets[u] + degree[u];
        }
        let mut fill = offsets.clone();
        let mut nbr = vec![0u32; offsets[n]];
        let mut weight = vec![0.0; offsets[n]];
        for (u, v, c) in model.terms() {
            if u != v {
                nbr[fill[u]] = v as u32;
                weight[fill[u]] = c;
                fill[u] += 1;
                nbr[fill[v]] = u as u32;
                weight[fill[v]] = c;
                fill[v] += 1;
            }
        }
        Adjacency {
            diag,
            offsets,
            nbr,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.nbr[r.clone()]
            .iter()
            .zip(&self.weight[r])
            .map(|(&v, &w)| (v as usize, w))
    }

    /// Σ_v J_uv x_v for every u.
    pub fn fields(&self, bits: &[u8]) -> Vec<f64> {
        (0..self.len())
            .map(|u| self.neighbors(u).filter(|&(v, _)| bits[v] != 0).map(|(_, w)| w).sum())
            .collect()
    }

    /// Largest |ΔE| any single flip can produce.
    pub fn max_delta(&self) -> f64 {
        (0..self.len())
            .map(|u| {
                let (pos, neg) = self.neighbors(u).fold(
                    (0.0, 0.0),
                    |(p, n), (_, w)| {
                        if w > 0.0 {
                            (p + w, n)
                        } else {
                            (p, n + w)
                        }
                    },
                );
                (self.diag[u] + pos).abs().max((self.diag[u] + neg).abs())
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn geometric(start: f64, end: f64, step: usize, steps: usize) -> f64 {
    if steps <= 1 {
        return end;
    }
    start * (end / start).powf(step as f64 / (steps - 1) as f64)
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::qubo::QuboModel;
    use rand::{Rng, SeedableRng};

    pub fn random_model(n: usize, density: f64, seed: u64) -> QuboModel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for u in 0..n {
            for v in u..n {
                if u == v || rng.gen_bool(density) {
                    t.push((u, v, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        QuboModel::from_terms(n, t, 0.0).unwrap()
    }

    /// Integer couplings in [−10, 10], so distinct energies differ by ≥ 1.
    pub fn integer_model(n: usize, density: f64, seed: u64) -> QuboModel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for u in 0..n {
            for v in u..n {
                if u == v || rng.gen_bool(density) {
                    t.push((u, v, f64::from(rng.gen_range(-10..=10))));
                }
            }
        }
        QuboModel::from_terms(n, t, 0.0).unwrap()
    }

    pub fn brute_force_min(model: &QuboModel) -> f64 {
        let n = model.n_vars();
        (0u64..(1 << n))
            .map(|s| {
                let bits: Vec<u8> = (0..n).map(|k| ((s >> k) & 1) as u8).collect();
                model.energy(&bits).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_fields_match_energy_differences() {
        let m = testutil::random_model(9, 0.5, 3);
        let adj = Adjacency::new(&m);
        let bits = [1, 0, 1, 1, 0, 0, 1, 0, 1];
        let f = adj.fields(&bits);
        for u in 0..9 {
            let mut flipped = bits;
            flipped[u] ^= 1;
            let de = m.energy(&flipped).unwrap() - m.energy(&bits).unwrap();
            let local = adj.diag[u] + f[u];
            let expect = if bits[u] == 0 { local } else { -local };
            assert!((de - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_endpoints() {
        assert_eq!(geometric(0.1, 50.0, 0, 10), 0.1);
        assert!((geometric(0.1, 50.0, 9, 10) - 50.0).abs() < 1e-12);
        assert_eq!(geometric(0.1, 50.0, 0, 1), 50.0);
    }

    #[test]
    fn config_validation() {
        assert!(AnnealConfig::default().validate().is_ok());
        let c = AnnealConfig {
            beta_start: Some(60.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = AnnealConfig {
            gamma_end: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut m = MetaheuristicConfig::default();
        m.ga.mutation_rate = 1.5;
        assert!(m.validate().is_err());
    }

    #[test]
    fn best_prefers_earliest_tie() {
        let s = SampleSet {
            samples: vec![
                Sample {
                    bits: vec![1],
                    energy: 2.0,
                    read_index: 0,
                },
                Sample {
                    bits: vec![0],
                    energy: 1.0,
                    read_index: 1,
                },
                Sample {
                    bits: vec![1],
                    energy: 1.0,
                    read_index: 2,
                },
            ],
        };
        assert_eq!(s.best().read_index, 1);
    }
}
