use rand::Rng;

use super::fitness::{classical_fitness, FitnessForm};
use super::repair::{check_top5_fits, repair_capacity};
use super::{ClassicalSolution, MetaheuristicConfig, SolveError};
use crate::qubo::ProblemInstance;
use crate::rng;

/// First `point` genes from `a`, the rest from `b`.
pub fn crossover(a: &[u8], b: &[u8], point: usize) -> Vec<u8> {
    a[..point].iter().chain(&b[point..]).copied().collect()
}

fn force_top5(bits: &mut [u8], instance: &ProblemInstance) {
    for period in bits.chunks_mut(instance.n_skus.max(1)) {
        for &i in instance.top5() {
            period[i] = 1;
        }
    }
}

/// Elitist GA: the best half survive unchanged and breed the other half.
/// The final best individual is capacity-repaired.
pub fn solve_ga(instance: &ProblemInstance, config: &MetaheuristicConfig) -> Result<ClassicalSolution, SolveError> {
    config.validate()?;
    check_top5_fits(instance)?;
    let dim = instance.periods * instance.n_skus;
    let mut rng = rng::stream(config.seed, 0x6A);
    let fitness = |b: &[u8]| classical_fitness(b, instance, &config.weights, FitnessForm::Penalized);
    let protected: Vec<bool> = (0..dim).map(|j| instance.is_top5(j % instance.n_skus.max(1))).collect();

    let mut population: Vec<Vec<u8>> = (0..config.pop_size)
        .map(|_| {
            let mut x: Vec<u8> = (0..dim).map(|_| rng.gen_range(0..=1u8)).collect();
            force_top5(&mut x, instance);
            x
        })
        .collect();
    let n_parents = (config.pop_size / 2).max(1);

    for _ in 0..config.iterations {
        let scores: Vec<f64> = population.iter().map(|x| fitness(x)).collect::<Result<_, _>>()?;
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let parents: Vec<Vec<u8>> = order[..n_parents].iter().map(|&k| population[k].clone()).collect();

        let mut next = parents.clone();
        while next.len() < config.pop_size {
            let a = &parents[rng.gen_range(0..n_parents)];
            let b = &parents[rng.gen_range(0..n_parents)];
            let mut child = if dim > 1 && rng.gen::<f64>() < config.ga.crossover_rate {
                crossover(a, b, rng.gen_range(1..dim))
            } else {
                a.clone()
            };
            force_top5(&mut child, instance);
            for j in 0..dim {
                if !protected[j] && rng.gen::<f64>() < config.ga.mutation_rate {
                    child[j] ^= 1;
                }
            }
            next.push(child);
        }
        population = next;
    }

    let scores: Vec<f64> = population.iter().map(|x| fitness(x)).collect::<Result<_, _>>()?;
    let best = super::pso::argmin(&scores);
    let bits = repair_capacity(&population[best], instance)?;
    let fitness = fitness(&bits)?;
    Ok(ClassicalSolution { bits, fitness })
}
