use rand::Rng;

use super::fitness::{classical_fitness, FitnessForm};
use super::{ClassicalSolution, MetaheuristicConfig, PsoParams, SolveError};
use crate::qubo::ProblemInstance;
use crate::rng;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// v ← ω v + c₁ r₁ (pbest − x) + c₂ r₂ (gbest − x), elementwise.
pub fn velocity_update(v: &mut [f64], x: &[u8], pbest: &[u8], gbest: &[u8], p: &PsoParams, r1: &[f64], r2: &[f64]) {
    for j in 0..v.len() {
        let xj = f64::from(x[j]);
        v[j] = p.inertia * v[j]
            + p.cognitive * r1[j] * (f64::from(pbest[j]) - xj)
            + p.social * r2[j] * (f64::from(gbest[j]) - xj);
    }
}

fn force_top5(bits: &mut [u8], instance: &ProblemInstance) {
    for period in bits.chunks_mut(instance.n_skus.max(1)) {
        for &i in instance.top5() {
            period[i] = 1;
        }
    }
}

/// Binary PSO with sigmoid transfer. No capacity repair is applied.
pub fn solve_pso(instance: &ProblemInstance, config: &MetaheuristicConfig) -> Result<ClassicalSolution, SolveError> {
    config.validate()?;
    let dim = instance.periods * instance.n_skus;
    let mut rng = rng::stream(config.seed, 0x9_5000);
    let fitness = |b: &[u8]| classical_fitness(b, instance, &config.weights, FitnessForm::Swarm);

    let mut xs: Vec<Vec<u8>> = Vec::with_capacity(config.pop_size);
    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(config.pop_size);
    for _ in 0..config.pop_size {
        let mut x: Vec<u8> = (0..dim).map(|_| rng.gen_range(0..=1u8)).collect();
        force_top5(&mut x, instance);
        positions.push(x.iter().map(|&b| f64::from(b)).collect());
        xs.push(x);
    }
    let mut vs = vec![vec![0.0; dim]; config.pop_size];
    let mut pbest = xs.clone();
    let mut pbest_f: Vec<f64> = xs.iter().map(|x| fitness(x)).collect::<Result<_, _>>()?;
    let mut g = argmin(&pbest_f);
    let mut gbest = pbest[g].clone();
    let mut gbest_f = pbest_f[g];

    let mut r1 = vec![0.0; dim];
    let mut r2 = vec![0.0; dim];
    for _ in 0..config.iterations {
        for p in 0..config.pop_size {
            r1.iter_mut().for_each(|r| *r = rng.gen());
            r2.iter_mut().for_each(|r| *r = rng.gen());
            velocity_update(&mut vs[p], &xs[p], &pbest[p], &gbest, &config.pso, &r1, &r2);
            for j in 0..dim {
                positions[p][j] = (positions[p][j] + vs[p][j]).clamp(0.0, 1.0);
                xs[p][j] = u8::from(sigmoid(vs[p][j]) > rng.gen::<f64>());
            }
            force_top5(&mut xs[p], instance);
            let f = fitness(&xs[p])?;
            if f < pbest_f[p] {
                pbest_f[p] = f;
                pbest[p].clone_from(&xs[p]);
            }
        }
        g = argmin(&pbest_f);
        if pbest_f[g] < gbest_f {
            gbest_f = pbest_f[g];
            gbest.clone_from(&pbest[g]);
        }
    }
    Ok(ClassicalSolution {
        bits: gbest,
        fitness: gbest_f,
    })
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &f)| if f < values[best] { i } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_midpoint() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(10.0) > 0.99 && sigmoid(-10.0) < 0.01);
    }

    #[test]
    fn zero_velocity_fixed_point() {
        let p = PsoParams {
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
        };
        let x = [1, 0, 1];
        let mut v = [0.0; 3];
        velocity_update(&mut v, &x, &x, &x, &p, &[0.3; 3], &[0.9; 3]);
        assert_eq!(v, [0.0; 3]);
    }

    #[test]
    fn velocity_follows_equation() {
        let p = PsoParams {
            inertia: 0.5,
            cognitive: 1.0,
            social: 2.0,
        };
        let mut v = [1.0, -1.0];
        velocity_update(&mut v, &[0, 1], &[1, 1], &[1, 0], &p, &[0.5, 0.5], &[0.25, 0.25]);
        assert_eq!(v, [0.5 + 0.5 + 0.5, -0.5 + 0.0 - 0.5]);
    }
}
