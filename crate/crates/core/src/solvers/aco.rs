use rand::Rng;

use super::fitness::{classical_fitness, FitnessForm};
use super::repair::{check_top5_fits, repair_capacity};
use super::{AcoParams, ClassicalSolution, MetaheuristicConfig, SolveError};
use crate::qubo::ProblemInstance;
use crate::rng;

const PHEROMONE_FLOOR: f64 = 1e-6;

/// P(x=1) = τ₁^α η^β / (τ₀^α + τ₁^α η^β).
pub fn construction_probability(tau0: f64, tau1: f64, eta: f64, alpha: f64, beta: f64) -> f64 {
    let one = tau1.powf(alpha) * eta.powf(beta);
    let denom = tau0.powf(alpha) + one;
    if denom > 0.0 {
        one / denom
    } else {
        0.0
    }
}

/// η_i = max(U_i D_i, 0) / max_i U_i D_i, or 1 everywhere when no SKU has a
/// positive total margin.
pub fn heuristic_information(instance: &ProblemInstance) -> Vec<f64> {
    let total: Vec<f64> = (0..instance.n_skus).map(|i| instance.sku.total_margin(i)).collect();
    let max = total.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > 0.0 {
        total.iter().map(|&m| m.max(0.0) / max).collect()
    } else {
        vec![1.0; total.len()]
    }
}

/// τ_c ← (1−ρ)τ_c + q/(1 + max(F, 0))·𝟙(best = c), floored at 1e-6.
pub fn update_pheromone(tau: &mut [[f64; 2]], best: &[u8], best_fitness: f64, p: &AcoParams) {
    let deposit = p.q / (1.0 + best_fitness.max(0.0));
    for (t, &b) in tau.iter_mut().zip(best) {
        for (c, v) in t.iter_mut().enumerate() {
            *v *= 1.0 - p.rho;
            if usize::from(b) == c {
                *v += deposit;
            }
            *v = v.max(PHEROMONE_FLOOR);
        }
    }
}

/// Each ant builds a plan bit by bit, forces the top-5, and is repaired
/// before scoring; the iteration-best ant reinforces the trail.
pub fn solve_aco(instance: &ProblemInstance, config: &MetaheuristicConfig) -> Result<ClassicalSolution, SolveError> {
    config.validate()?;
    check_top5_fits(instance)?;
    let n = instance.n_skus;
    let dim = instance.periods * n;
    let p = config.aco;
    let mut rng = rng::stream(config.seed, 0xAC0);
    let eta = heuristic_information(instance);
    let mut tau = vec![[1.0f64; 2]; dim];
    let mut best: Option<ClassicalSolution> = None;

    for _ in 0..config.iterations {
        let mut iter_best: Option<ClassicalSolution> = None;
        for _ in 0..config.pop_size {
            let mut bits: Vec<u8> = (0..dim)
                .map(|j| {
                    let prob = construction_probability(tau[j][0], tau[j][1], eta[j % n], p.alpha, p.beta);
                    u8::from(rng.gen::<f64>() < prob)
                })
                .collect();
            for period in bits.chunks_mut(n.max(1)) {
                for &i in instance.top5() {
                    period[i] = 1;
                }
            }
            let bits = repair_capacity(&bits, instance)?;
            let fitness = classical_fitness(&bits, instance, &config.weights, FitnessForm::Penalized)?;
            if iter_best.as_ref().is_none_or(|b| fitness < b.fitness) {
                iter_best = Some(ClassicalSolution { bits, fitness });
            }
        }
        let it = iter_best.expect("pop_size ≥ 2");
        update_pheromone(&mut tau, &it.bits, it.fitness, &p);
        if best.as_ref().is_none_or(|b| it.fitness < b.fitness) {
            best = Some(it);
        }
    }

    let best = match best {
        Some(b) => b,
        None => {
            let mut bits = vec![0u8; dim];
            for period in bits.chunks_mut(n.max(1)) {
                for &i in instance.top5() {
                    period[i] = 1;
                }
            }
            let fitness = classical_fitness(&bits, instance, &config.weights, FitnessForm::Penalized)?;
            ClassicalSolution { bits, fitness }
        }
    };
    let bits = repair_capacity(&best.bits, instance)?;
    let fitness = classical_fitness(&bits, instance, &config.weights, FitnessForm::Penalized)?;
    Ok(ClassicalSolution { bits, fitness })
}
