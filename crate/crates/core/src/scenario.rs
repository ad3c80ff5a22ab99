//! End-to-end assembly: catalog → features → embedding → similarity →
//! instance, and solving an instance with any of the back-ends.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{AllocationPlan, AuditInputs};
use crate::data::synth::CategoryMix;
use crate::data::{
    engineer_features, generate_base_catalog, pca_reduce, synthesize_catalog, zscored_pca_inputs, DataError,
    EmbeddingMatrix, FeatureTable, SkuFeatures, SkuRecord, SynthesisSpec,
};
use crate::kernel::{similarity_matrix, KernelConfig, KernelError, SimilarityMatrix};
use crate::qubo::{build_qubo, decode, BuildError, InstanceParams, ProblemInstance, SkuTerms, Weights};
use crate::solvers::{
    solve_aco, solve_ga, solve_pso, solve_sa, solve_sqa, AnnealConfig, MetaheuristicConfig, SolveError, SolverKind,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Per-period capacity: a fixed number of units, or derived from the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapacityRule {
    Fixed(f64),
    /// Top-5 demand plus half the remaining demand of the top-K SKUs by
    /// U·D, so the top-5 always fit but the full top-K never does.
    Auto,
}

impl fmt::Display for CapacityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacityRule::Fixed(c) => write!(f, "{c}"),
            CapacityRule::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for CapacityRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(CapacityRule::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|c| c.is_finite() && *c >= 0.0)
            .map(CapacityRule::Fixed)
            .ok_or_else(|| format!("capacity must be a non-negative number or `auto`, got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub periods: usize,
    pub slack_bits: usize,
    pub sku_target: usize,
    pub capacity: CapacityRule,
    pub weights: Weights,
    pub kernel: KernelConfig,
    pub pca_dims: usize,
    /// Skip PCA and feed the z-scored inputs straight to the kernel.
    pub bypass_pca: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = InstanceParams::default();
        ScenarioConfig {
            periods: p.periods,
            slack_bits: p.slack_bits,
            sku_target: p.sku_target,
            capacity: CapacityRule::Fixed(p.capacity),
            weights: p.weights,
            kernel: KernelConfig::default(),
            pca_dims: 5,
            bypass_pca: false,
        }
    }
}

impl ScenarioConfig {
    /// 40 SKUs over 8 periods with K=10 and the auto capacity rule.
    pub fn desk() -> Self {
        ScenarioConfig {
            sku_target: 10,
            capacity: CapacityRule::Auto,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub features: FeatureTable,
    pub embedding: EmbeddingMatrix,
    pub similarity: SimilarityMatrix,
    pub instance: ProblemInstance,
    pub audit_inputs: AuditInputs,
}

pub fn sku_terms(features: &[SkuFeatures]) -> SkuTerms {
    SkuTerms {
        unit_margin: features.iter().map(|f| f.unit_margin).collect(),
        demand: features.iter().map(|f| f.demand).collect(),
        unified_risk: features.iter().map(|f| f.unified_risk).collect(),
        inventory_risk: features.iter().map(|f| f.inventory_risk).collect(),
        defect_risk: features.iter().map(|f| f.defect_risk).collect(),
    }
}

pub fn auto_capacity(sku: &SkuTerms, sku_target: usize) -> f64 {
    let mut idx: Vec<usize> = (0..sku.len()).collect();
    idx.sort_by(|&a, &b| sku.total_margin(b).total_cmp(&sku.total_margin(a)).then(a.cmp(&b)));
    let top5: f64 = idx.iter().take(5).map(|&i| sku.demand[i]).sum();
    let top_k: f64 = idx.iter().take(sku_target.max(5)).map(|&i| sku.demand[i]).sum();
    top5 + ((top_k - top5) / 2.0).floor()
}

pub fn embed(features: &[SkuFeatures], config: &ScenarioConfig) -> Result<EmbeddingMatrix, DataError> {
    let z = zscored_pca_inputs(features);
    if config.bypass_pca {
        Ok(EmbeddingMatrix::from_rows(&z))
    } else {
        pca_reduce(&z, config.pca_dims)
    }
}

pub fn build_scenario(records: &[SkuRecord], config: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    let features = engineer_features(records)?;
    if features.features.is_empty() {
        return Err(DataError::Empty.into());
    }
    let embedding = embed(&features.features, config)?;
    let similarity = similarity_matrix(&embedding, &config.kernel)?;
    let sku = sku_terms(&features.features);
    let capacity = match config.capacity {
        CapacityRule::Fixed(c) => c,
        CapacityRule::Auto => auto_capacity(&sku, config.sku_target),
    };
    let params = InstanceParams {
        periods: config.periods,
        slack_bits: config.slack_bits,
        capacity,
        sku_target: config.sku_target,
        weights: config.weights,
    };
    let instance = ProblemInstance::new(params, sku, similarity.clone())?;
    let audit_inputs = AuditInputs::from_features(&features.features);
    Ok(Scenario {
        config: *config,
        features,
        embedding,
        similarity,
        instance,
        audit_inputs,
    })
}

/// Synthetic catalog of `n_skus` rows grown from a base of `n_skus / 2`.
pub fn desk_catalog(n_skus: usize, seed: u64) -> Result<Vec<SkuRecord>, DataError> {
    let base_n = (n_skus / 2).max(1);
    let mix = CategoryMix::default();
    let base = generate_base_catalog(base_n, &mix, seed)?;
    synthesize_catalog(
        &base,
        &SynthesisSpec {
            target_count: n_skus,
            category_mix: mix,
            seed,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub solver: SolverKind,
    pub plan: AllocationPlan,
    /// Full QUBO sample for SA/SQA, `T·N` decisions otherwise.
    pub bits: Vec<u8>,
    /// Lowest QUBO energy or classical fitness.
    pub objective: f64,
    pub per_read: Vec<f64>,
}

pub fn solve_instance(
    instance: &ProblemInstance,
    solver: SolverKind,
    anneal: &AnnealConfig,
    meta: &MetaheuristicConfig,
) -> Result<SolveOutcome, ScenarioError> {
    match solver {
        SolverKind::Sa | SolverKind::Sqa => {
            let model = build_qubo(instance)?;
            let set = if solver == SolverKind::Sa {
                solve_sa(&model, anneal)?
            } else {
                solve_sqa(&model, anneal)?
            };
            let best = set.best();
            Ok(SolveOutcome {
                solver,
                plan: decode(&best.bits, instance),
                bits: best.bits.clone(),
                objective: best.energy,
                per_read: set.energies(),
            })
        }
        SolverKind::Pso | SolverKind::Ga | SolverKind::Aco => {
            let sol = match solver {
                SolverKind::Pso => solve_pso(instance, meta)?,
                SolverKind::Ga => solve_ga(instance, meta)?,
                _ => solve_aco(instance, meta)?,
            };
            Ok(SolveOutcome {
                solver,
                plan: AllocationPlan::from_decisions(&sol.bits, instance.n_skus),
                bits: sol.bits,
                objective: sol.fitness,
                per_read: vec![sol.fitness],
            })
        }
    }
}
