#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skualloc::kernel::SimilarityMethod;
use skualloc::qubo::{InstanceParams, SkuTerms};
use skualloc::{ProblemInstance, QuboModel, SimilarityMatrix, Weights};

/// Small random instance with integer demands and a symmetric similarity.
pub fn tiny_instance(n: usize, periods: usize, slack_bits: usize, seed: u64, weights: Weights) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demand: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(1..=10))).collect();
    let sku = SkuTerms {
        unit_margin: (0..n).map(|_| rng.gen_range(1.0..20.0)).collect(),
        unified_risk: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        inventory_risk: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        defect_risk: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        demand,
    };
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        sim[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let s = rng.gen_range(0.0..1.0);
            sim[i * n + j] = s;
            sim[j * n + i] = s;
        }
    }
    let total: f64 = sku.demand.iter().sum();
    let capacity = (total * rng.gen_range(0.3..0.6)).round();
    let sku_target = rng.gen_range(2..=n.max(2));
    ProblemInstance::new(
        InstanceParams {
            periods,
            slack_bits,
            capacity,
            sku_target,
            weights,
        },
        sku,
        SimilarityMatrix::from_values(n, SimilarityMethod::Cosine, sim).unwrap(),
    )
    .unwrap()
}

pub fn top5_by_total_margin(sku: &SkuTerms) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sku.demand.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ma, mb) = (sku.unit_margin[a] * sku.demand[a], sku.unit_margin[b] * sku.demand[b]);
        mb.partial_cmp(&ma).unwrap().then(a.cmp(&b))
    });
    idx.truncate(5);
    idx
}

fn top5_lambda(inst: &ProblemInstance, factor: f64) -> f64 {
    let s = &inst.sku;
    factor
        * (0..inst.n_skus)
            .map(|i| (s.unit_margin[i] * s.demand[i]).abs())
            .fold(0.0, f64::max)
}

/// One period of the objective, straight from the formulas.
pub fn period_hamiltonian(x: &[u8], slack: &[u8], inst: &ProblemInstance) -> f64 {
    let w = &inst.weights;
    let s = &inst.sku;
    let k = inst.sku_target as f64;
    let top5 = top5_by_total_margin(s);
    let on: Vec<usize> = (0..x.len()).filter(|&i| x[i] == 1).collect();

    let margin: f64 = on.iter().map(|&i| s.unit_margin[i] * s.demand[i]).sum();
    let risk: f64 = on.iter().map(|&i| s.unified_risk[i] * s.demand[i]).sum();
    let inventory: f64 = on.iter().map(|&i| s.inventory_risk[i]).sum();
    let defect: f64 = on.iter().map(|&i| s.defect_risk[i]).sum();
    let mut similarity = 0.0;
    for a in 0..on.len() {
        for b in (a + 1)..on.len() {
            similarity += inst.similarity.get(on[a], on[b]);
        }
    }
    let load: f64 = on.iter().map(|&i| s.demand[i]).sum();
    let slack_value: f64 = slack
        .iter()
        .enumerate()
        .map(|(b, &v)| f64::from(v) * 2f64.powi(b as i32))
        .sum();
    let count = on.len() as f64;
    let top5_hits = top5.iter().filter(|&&i| x[i] == 1).count() as f64;
    let sku_limit = if inst.sku_target == 0 {
        0.0
    } else {
        w.sku_limit / k * count
    };

    -w.margin * margin
        + w.similarity * similarity
        + w.risk * risk
        + w.inventory * inventory
        + w.defect * defect
        + w.capacity * (load - inst.capacity + slack_value).powi(2)
        + w.cardinality * (count - k).powi(2)
        + sku_limit
        - top5_lambda(inst, w.top5_factor) * top5_hits
}

pub fn hamiltonian(bits: &[u8], inst: &ProblemInstance) -> f64 {
    let (n, b) = (inst.n_skus, inst.slack_bits);
    bits.chunks(n + b)
        .map(|block| period_hamiltonian(&block[..n], &block[n..], inst))
        .sum()
}

/// Exhaustive minimum of the direct objective: the minimal energy and every
/// bitstring within `tol` of it. Periods are independent, so each period is
/// tabulated once and the full space is swept over table sums.
pub fn hamiltonian_minima(inst: &ProblemInstance, tol: f64) -> (f64, Vec<Vec<u8>>) {
    let block = inst.n_skus + inst.slack_bits;
    let table: Vec<f64> = (0u64..1 << block)
        .map(|s| {
            let bits = to_bits(s, block);
            period_hamiltonian(&bits[..inst.n_skus], &bits[inst.n_skus..], inst)
        })
        .collect();
    let total = block * inst.periods;
    let energy = |s: u64| -> f64 {
        (0..inst.periods)
            .map(|t| table[((s >> (t * block)) & ((1 << block) - 1)) as usize])
            .sum()
    };
    let min = (0u64..1 << total).map(energy).fold(f64::INFINITY, f64::min);
    let argmin = (0u64..1 << total)
        .filter(|&s| energy(s) - min <= tol)
        .map(|s| to_bits(s, total))
        .collect();
    (min, argmin)
}

pub fn qubo_minima(model: &QuboModel, tol: f64) -> (f64, Vec<Vec<u8>>) {
    let n = model.n_vars();
    let energies: Vec<f64> = (0u64..1 << n).map(|s| model.energy(&to_bits(s, n)).unwrap()).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let argmin = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - min <= tol)
        .map(|(s, _)| to_bits(s as u64, n))
        .collect();
    (min, argmin)
}

pub fn to_bits(s: u64, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((s >> k) & 1) as u8).collect()
}

pub fn random_bits(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..=1u8)).collect()
}

/// Random QUBO with integer coefficients in [−10, 10].
pub fn integer_qubo(n: usize, density: f64, seed: u64) -> QuboModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for u in 0..n {
        for v in u..n {
            if u == v || rng.gen_bool(density) {
                terms.push((u, v, f64::from(rng.gen_range(-10..=10))));
            }
        }
    }
    QuboModel::from_terms(n, terms, 0.0).unwrap()
}

/// Dense table of x^T Q x over all 2^n states.
pub fn qubo_brute_force(model: &QuboModel) -> f64 {
    let n = model.n_vars();
    let mut q = vec![0.0; n * n];
    for (u, v, c) in model.terms() {
        q[u * n + v] += c;
    }
    (0u64..1 << n)
        .map(|s| {
            let mut e = model.offset;
            for u in 0..n {
                if (s >> u) & 1 == 0 {
                    continue;
                }
                for v in u..n {
                    if (s >> v) & 1 == 1 {
                        e += q[u * n + v];
                    }
                }
            }
            e
        })
        .fold(f64::INFINITY, f64::min)
}

/// GA/ACO (`swarm = false`) or PSO (`swarm = true`) fitness from the formulas.
pub fn fitness_oracle(bits: &[u8], inst: &ProblemInstance, w: &Weights, swarm: bool) -> f64 {
    let n = inst.n_skus;
    let s = &inst.sku;
    let k = inst.sku_target as f64;
    let top5 = top5_by_total_margin(s);
    let lambda_top5 = top5_lambda(inst, w.top5_factor);
    let mut f = 0.0;
    for x in bits.chunks(n) {
        let on: Vec<usize> = (0..n).filter(|&i| x[i] == 1).collect();
        for a in 0..on.len() {
            for b in (a + 1)..on.len() {
                f += w.similarity * inst.similarity.get(on[a], on[b]);
            }
        }
        for &i in &on {
            f += -w.margin * s.unit_margin[i] * s.demand[i]
                + w.risk * s.unified_risk[i] * s.demand[i]
                + w.inventory * s.inventory_risk[i]
                + w.defect * s.defect_risk[i];
        }
        let count = on.len() as f64;
        let over = (on.iter().map(|&i| s.demand[i]).sum::<f64>() - inst.capacity).max(0.0);
        let hits = top5.iter().filter(|&&i| x[i] == 1).count() as f64;
        if swarm {
            f += w.cardinality * (count - k).powi(2) + w.capacity * over.powi(6) - lambda_top5 * hits;
        } else {
            f += w.cardinality * (count * count - 2.0 * k * count)
                + w.sku_limit * (count - k).max(0.0).powi(2)
                + w.capacity * 1e7 * over.powi(6)
                + lambda_top5 * (top5.len() as f64 - hits);
        }
    }
    f
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
