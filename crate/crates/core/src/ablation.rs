//! Term-removal experiments: each variant switches one part of the objective
//! off, is solved `repeats` times with seeds `base_seed + r`, and summarized.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{compute_kpis, AuditConfig, KpiReport};
use crate::kernel::similarity_matrix;
use crate::qubo::Weights;
use crate::scenario::{embed, solve_instance, Scenario, ScenarioConfig, ScenarioError};
use crate::solvers::{AnnealConfig, MetaheuristicConfig, SolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AblationVariant {
    Full,
    NoCapacity,
    NoSimilarity,
    NoMarginWeight,
    NoLegacyInvRisk,
    NoSkuLimit,
    NoTop5,
    NoPCA,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 8] = [
        AblationVariant::Full,
        AblationVariant::NoCapacity,
        AblationVariant::NoSimilarity,
        AblationVariant::NoMarginWeight,
        AblationVariant::NoLegacyInvRisk,
        AblationVariant::NoSkuLimit,
        AblationVariant::NoTop5,
        AblationVariant::NoPCA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationVariant::Full => "Full",
            AblationVariant::NoCapacity => "NoCapacity",
            AblationVariant::NoSimilarity => "NoSimilarity",
            AblationVariant::NoMarginWeight => "NoMarginWeight",
            AblationVariant::NoLegacyInvRisk => "NoLegacyInvRisk",
            AblationVariant::NoSkuLimit => "NoSkuLimit",
            AblationVariant::NoTop5 => "NoTop5",
            AblationVariant::NoPCA => "NoPCA",
        }
    }

    pub fn apply(self, w: Weights) -> Weights {
        match self {
            AblationVariant::Full | AblationVariant::NoPCA => w,
            AblationVariant::NoCapacity => Weights { capacity: 0.0, ..w },
            AblationVariant::NoSimilarity => Weights { similarity: 0.0, ..w },
            AblationVariant::NoMarginWeight => Weights { margin: 0.0, ..w },
            AblationVariant::NoLegacyInvRisk => Weights {
                inventory: 0.0,
                defect: 0.0,
                risk: 0.0,
                ..w
            },
            AblationVariant::NoSkuLimit => Weights { cardinality: 0.0, ..w },
            AblationVariant::NoTop5 => Weights { top5_factor: 0.0, ..w },
        }
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown ablation variant {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub repeats: usize,
    pub base_seed: u64,
    pub solver: SolverKind,
    pub anneal: AnnealConfig,
    pub meta: MetaheuristicConfig,
    pub audit: AuditConfig,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            repeats: 5,
            base_seed: 0,
            solver: SolverKind::Sa,
            anneal: AnnealConfig::default(),
            meta: MetaheuristicConfig::default(),
            audit: AuditConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub variant: AblationVariant,
    pub repeat: usize,
    pub seed: u64,
    pub objective: Option<f64>,
    pub report: Option<KpiReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation (n − 1); zero for fewer than two values.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: AblationVariant,
    pub total_profit: MeanStd,
    pub total_units: MeanStd,
    pub distinct_skus: MeanStd,
    pub capacity_violations: MeanStd,
    pub capacity_excess: MeanStd,
    pub redundant_pairs: MeanStd,
    pub avg_redundancy: MeanStd,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub solver: SolverKind,
    pub repeats: usize,
    pub base_seed: u64,
    pub rows: Vec<VariantSummary>,
    pub cells: Vec<AblationCell>,
}

pub const SUMMARY_HEADER: [&str; 15] = [
    "Experiment",
    "Total Profit Mean",
    "Total Profit Std",
    "Total Units Mean",
    "Total Units Std",
    "Distinct SKUs Mean",
    "Distinct SKUs Std",
    "Cap. Violations Mean",
    "Cap. Violations Std",
    "Cap. Excess Mean",
    "Cap. Excess Std",
    "Redundant Pairs Mean",
    "Redundant Pairs Std",
    "Avg. Redundancy Mean",
    "Avg. Redundancy Std",
];

impl AblationSummary {
    pub fn row(&self, variant: AblationVariant) -> Option<&VariantSummary> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", SUMMARY_HEADER.join(","));
        for r in &self.rows {
            let cols = [
                r.total_profit,
                r.total_units,
                r.distinct_skus,
                r.capacity_violations,
                r.capacity_excess,
                r.redundant_pairs,
                r.avg_redundancy,
            ];
            let _ = write!(s, "{}", r.variant);
            for c in cols {
                let _ = write!(s, ",{},{}", c.mean, c.std);
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every (variant, repeat) cell and aggregates in (variant, repeat)
/// order. A failed solve is recorded on its cell and left out of the means.
pub fn run_ablation(
    scenario: &Scenario,
    variants: &[AblationVariant],
    config: &AblationConfig,
) -> Result<AblationSummary, ScenarioError> {
    let mut prepared = Vec::with_capacity(variants.len());
    for &v in variants {
        let mut instance = scenario.instance.with_weights(v.apply(scenario.instance.weights));
        let mut similarity = scenario.similarity.clone();
        if v == AblationVariant::NoPCA {
            let cfg = ScenarioConfig {
                bypass_pca: true,
                ..scenario.config
            };
            let raw = embed(&scenario.features.features, &cfg)?;
            similarity = similarity_matrix(&raw, &scenario.config.kernel)?;
            instance = instance.with_similarity(similarity.clone())?;
        }
        prepared.push((v, instance, similarity));
    }

    let jobs: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|k| (0..config.repeats).map(move |r| (k, r)))
        .collect();
    let cells: Vec<AblationCell> = jobs
        .into_par_iter()
        .map(|(k, r)| {
            let (variant, instance, similarity) = &prepared[k];
            let seed = config.base_seed.wrapping_add(r as u64);
            let anneal = AnnealConfig { seed, ..config.anneal };
            let meta = MetaheuristicConfig {
                seed,
                weights: variant.apply(config.meta.weights),
                ..config.meta
            };
            match solve_instance(instance, config.solver, &anneal, &meta) {
                Ok(out) => AblationCell {
                    variant: *variant,
                    repeat: r,
                    seed,
                    objective: Some(out.objective),
                    report: Some(compute_kpis(
                        &out.plan,
                        &scenario.audit_inputs,
                        similarity,
                        instance,
                        &config.audit,
                    )),
                    error: None,
                },
                Err(e) => AblationCell {
                    variant: *variant,
                    repeat: r,
                    seed,
                    objective: None,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let rows = prepared
        .iter()
        .zip(cells.chunks(config.repeats.max(1)))
        .map(|((v, _, _), group)| {
            let reports: Vec<&KpiReport> = group.iter().filter_map(|c| c.report.as_ref()).collect();
            let stat = |f: &dyn Fn(&KpiReport) -> f64| MeanStd::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
            VariantSummary {
                variant: *v,
                total_profit: stat(&|r| r.net_profit),
                total_units: stat(&|r| r.total_units),
                distinct_skus: stat(&|r| r.distinct_skus as f64),
                capacity_violations: stat(&|r| r.capacity_violations as f64),
                capacity_excess: stat(&|r| r.capacity_excess),
                redundant_pairs: stat(&|r| r.redundant_pairs as f64),
                avg_redundancy: stat(&|r| r.redundancy_score),
                failures: config.repeats - reports.len(),
            }
        })
        .collect();

    Ok(AblationSummary {
        solver: config.solver,
        repeats: config.repeats,
        base_seed: config.base_seed,
        rows,
        cells,
    })
}
