use serde::{Deserialize, Serialize};

use super::SolveError;
use crate::qubo::{ProblemInstance, Weights};

/// Multiplier on λc in the GA/ACO sixth-order capacity penalty.
pub const CAPACITY_SCALE: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitnessForm {
    /// GA and ACO: λk((Σx)² − 2KΣx) + λsku·max(0, Σx−K)² + λc·10⁷·max(0, ΣDx−C)⁶
    /// + λtop5·Σ(1−x) over top-5.
    Penalized,
    /// PSO: λk(Σx−K)² + λc·max(0, ΣDx−C)⁶ − λtop5·Σx over top-5.
    Swarm,
}

/// Penalized objective over `T·N` decision bits laid out period-major.
pub fn classical_fitness(
    bits: &[u8],
    instance: &ProblemInstance,
    weights: &Weights,
    form: FitnessForm,
) -> Result<f64, SolveError> {
    let n = instance.n_skus;
    let expected = instance.periods * n;
    if bits.len() != expected {
        return Err(SolveError::Length {
            expected,
            got: bits.len(),
        });
    }
    let sku = &instance.sku;
    let k = instance.sku_target as f64;
    let top5_w = weights.top5_factor * (0..n).map(|i| sku.total_margin(i).abs()).fold(0.0, f64::max);
    let mut total = 0.0;
    let mut selected = Vec::with_capacity(n);
    for period in bits.chunks(n.max(1)) {
        selected.clear();
        selected.extend(period.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i));

        let mut similarity = 0.0;
        for (a, &i) in selected.iter().enumerate() {
            for &j in &selected[a + 1..] {
                similarity += instance.similarity.get(i, j);
            }
        }
        let mut linear = 0.0;
        let mut demand = 0.0;
        for &i in &selected {
            linear += -weights.margin * sku.total_margin(i)
                + weights.risk * sku.unified_risk[i] * sku.demand[i]
                + weights.inventory * sku.inventory_risk[i]
                + weights.defect * sku.defect_risk[i];
            demand += sku.demand[i];
        }
        let count = selected.len() as f64;
        let over = (demand - instance.capacity).max(0.0);
        let top5_hits = instance.top5().iter().filter(|&&i| period[i] != 0).count() as f64;

        total += weights.similarity * similarity + linear;
        match form {
            FitnessForm::Penalized => {
                total += weights.cardinality * (count * count - 2.0 * k * count)
                    + weights.sku_limit * (count - k).max(0.0).powi(2)
                    + weights.capacity * CAPACITY_SCALE * over.powi(6)
                    + top5_w * (instance.top5().len() as f64 - top5_hits);
            }
            FitnessForm::Swarm => {
                total +=
                    weights.cardinality * (count - k).powi(2) + weights.capacity * over.powi(6) - top5_w * top5_hits;
            }
        }
    }
    Ok(total)
}
