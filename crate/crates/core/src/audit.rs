//! Feasibility checks, business KPIs and the penalty-tuning loop.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{zscore_normalize, SkuFeatures};
use crate::kernel::SimilarityMatrix;
use crate::qubo::ProblemInstance;

/// Selected SKUs per period, plus decoded slack integers on the QUBO path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub selections: Vec<Vec<usize>>,
    pub slack: Option<Vec<u64>>,
}

impl AllocationPlan {
    /// From a `T·N` decision vector (no slack bits).
    pub fn from_decisions(bits: &[u8], n_skus: usize) -> Self {
        let selections = bits
            .chunks(n_skus.max(1))
            .map(|c| c.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect())
            .collect();
        AllocationPlan {
            selections,
            slack: None,
        }
    }

    pub fn periods(&self) -> usize {
        self.selections.len()
    }

    pub fn period_demand(&self, demand: &[f64]) -> Vec<f64> {
        self.selections
            .iter()
            .map(|s| s.iter().map(|&i| demand[i]).sum())
            .collect()
    }
}

/// Per-SKU values the KPIs need beyond the instance itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditInputs {
    pub norm_total_cost: Vec<f64>,
    /// z-scored unit margin
    pub z_margin: Vec<f64>,
}

impl AuditInputs {
    pub fn from_features(features: &[SkuFeatures]) -> Self {
        let margins: Vec<f64> = features.iter().map(|f| f.unit_margin).collect();
        AuditInputs {
            norm_total_cost: features.iter().map(|f| f.norm_total_cost).collect(),
            z_margin: zscore_normalize(&margins),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Pairs with similarity ≥ this count as redundant.
    pub redundancy_threshold: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            redundancy_threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    #[serde(rename = "Total Units")]
    pub total_units: f64,
    #[serde(rename = "Distinct SKUs")]
    pub distinct_skus: usize,
    #[serde(rename = "Net Profit")]
    pub net_profit: f64,
    #[serde(rename = "Total Cost")]
    pub total_cost: f64,
    #[serde(rename = "Period Demand")]
    pub period_demand: Vec<f64>,
    #[serde(rename = "Period SKUs")]
    pub period_skus: Vec<usize>,
    #[serde(rename = "Capacity")]
    pub capacity: f64,
    #[serde(rename = "Cap. Violations")]
    pub capacity_violations: usize,
    #[serde(rename = "Cap. Excess")]
    pub capacity_excess: f64,
    #[serde(rename = "Top5 Present All Periods")]
    pub top5_present_all_periods: bool,
    #[serde(rename = "Redundant Pairs")]
    pub redundant_pairs: usize,
    #[serde(rename = "Avg. Redundancy")]
    pub redundancy_score: f64,
}

impl KpiReport {
    pub fn is_feasible(&self) -> bool {
        self.capacity_violations == 0
    }

    /// Period, demand, capacity rows.
    pub fn utilization_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str("period,demand,capacity\n");
        for (t, d) in self.period_demand.iter().enumerate() {
            let _ = writeln!(s, "{t},{d},{}", self.capacity);
        }
        s
    }
}

/// (violations, excess) with violations = #{t : Σ D > C}.
pub fn capacity_audit(plan: &AllocationPlan, instance: &ProblemInstance) -> (usize, f64) {
    plan.period_demand(&instance.sku.demand)
        .into_iter()
        .filter(|&d| d > instance.capacity)
        .fold((0, 0.0), |(v, e), d| (v + 1, e + (d - instance.capacity)))
}

pub fn compute_kpis(
    plan: &AllocationPlan,
    inputs: &AuditInputs,
    similarity: &SimilarityMatrix,
    instance: &ProblemInstance,
    config: &AuditConfig,
) -> KpiReport {
    let d = &instance.sku.demand;
    let u = &instance.sku.unit_margin;
    let mut total_units = 0.0;
    let mut net_profit = 0.0;
    let mut total_cost = 0.0;
    let mut distinct = BTreeSet::new();
    let mut pairs = 0usize;
    let mut redundancy_sum = 0.0;
    let mut redundancy_n = 0usize;
    for sel in &plan.selections {
        for &i in sel {
            total_units += d[i];
            net_profit += u[i] * d[i];
            total_cost += inputs.norm_total_cost[i] * d[i];
            distinct.insert(i);
        }
        for (a, &i) in sel.iter().enumerate() {
            for &j in &sel[a + 1..] {
                let s = similarity.get(i, j);
                if s >= config.redundancy_threshold {
                    pairs += 1;
                }
                redundancy_sum += s * (inputs.z_margin[i] + inputs.z_margin[j]) / 2.0;
                redundancy_n += 1;
            }
        }
    }
    let (violations, excess) = capacity_audit(plan, instance);
    let top5_present_all_periods = plan
        .selections
        .iter()
        .all(|sel| instance.top5().iter().all(|t| sel.contains(t)));
    KpiReport {
        total_units,
        distinct_skus: distinct.len(),
        net_profit,
        total_cost,
        period_demand: plan.period_demand(d),
        period_skus: plan.selections.iter().map(Vec::len).collect(),
        capacity: instance.capacity,
        capacity_violations: violations,
        capacity_excess: excess,
        top5_present_all_periods,
        redundant_pairs: pairs,
        redundancy_score: if redundancy_n == 0 {
            0.0
        } else {
            redundancy_sum / redundancy_n as f64
        },
    }
}

/// Similarity among SKUs selected in any period, as CSV with SKU indices as
/// header.
pub fn selected_similarity_csv(plan: &AllocationPlan, similarity: &SimilarityMatrix, comments: &[String]) -> String {
    let idx: Vec<usize> = plan
        .selections
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let sub = similarity.submatrix(&idx);
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    let header: Vec<String> = idx.iter().map(|i| format!("sku{i}")).collect();
    let _ = writeln!(s, "{}", header.join(","));
    for a in 0..idx.len() {
        let row: Vec<String> = (0..idx.len()).map(|b| format!("{:.16e}", sub.get(a, b))).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningOutcome {
    pub instance: ProblemInstance,
    pub report: KpiReport,
    pub rounds: usize,
    pub feasible: bool,
}

/// Solve, audit, and on infeasibility double λc (and λk when some period
/// holds more than 1.2·K SKUs), until feasible or `max_rounds` solves.
pub fn tune_penalties<E>(
    instance: &ProblemInstance,
    max_rounds: usize,
    mut solve: impl FnMut(&ProblemInstance) -> Result<AllocationPlan, E>,
    mut audit: impl FnMut(&AllocationPlan, &ProblemInstance) -> KpiReport,
) -> Result<TuningOutcome, E> {
    let mut current = instance.clone();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let plan = solve(&current)?;
        let report = audit(&plan, &current);
        if report.is_feasible() || rounds >= max_rounds.max(1) {
            let feasible = report.is_feasible();
            return Ok(TuningOutcome {
                instance: current,
                report,
                rounds,
                feasible,
            });
        }
        let mut w = current.weights;
        w.capacity = (2.0 * w.capacity).max(1.0);
        let limit = 1.2 * current.sku_target as f64;
        if report.period_skus.iter().any(|&n| n as f64 > limit) {
            w.cardinality = (2.0 * w.cardinality).max(1.0);
        }
        current = current.with_weights(w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::{InstanceParams, SkuTerms, Weights};

    fn instance(u: &[f64], d: &[f64], periods: usize, capacity: f64) -> ProblemInstance {
        let n = d.len();
        ProblemInstance::new(
            InstanceParams {
                periods,
                slack_bits: 3,
                capacity,
                sku_target: 2,
                weights: Weights::qubo_defaults(),
            },
            SkuTerms {
                unit_margin: u.to_vec(),
                demand: d.to_vec(),
                unified_risk: vec![0.0; n],
                inventory_risk: vec![0.0; n],
                defect_risk: vec![0.0; n],
            },
            SimilarityMatrix::identity(n),
        )
        .unwrap()
    }

    fn inputs(n: usize) -> AuditInputs {
        AuditInputs {
            norm_total_cost: vec![0.5; n],
            z_margin: vec![0.0; n],
        }
    }

    #[test]
    fn single_sku_profit() {
        let inst = instance(&[10.0], &[100.0], 1, 1000.0);
        let plan = AllocationPlan {
            selections: vec![vec![0]],
            slack: None,
        };
        let r = compute_kpis(&plan, &inputs(1), &inst.similarity, &inst, &AuditConfig::default());
        assert_eq!(r.net_profit, 1000.0);
        assert_eq!(r.total_units, 100.0);
        assert_eq!(r.total_cost, 50.0);
    }

    #[test]
    fn union_versus_sum() {
        let inst = instance(&[1.0, 1.0], &[7.0, 3.0], 2, 1000.0);
        let plan = AllocationPlan {
            selections: vec![vec![0], vec![0]],
            slack: None,
        };
        let r = compute_kpis(&plan, &inputs(2), &inst.similarity, &inst, &AuditConfig::default());
        assert_eq!(r.distinct_skus, 1);
        assert_eq!(r.total_units, 14.0);
    }

    #[test]
    fn symmetric_margins_cancel() {
        let inst = instance(&[1.0, 1.0], &[1.0, 1.0], 1, 10.0);
        let sim = SimilarityMatrix::from_values(2, Default::default(), vec![1.0; 4]).unwrap();
        let plan = AllocationPlan {
            selections: vec![vec![0, 1]],
            slack: None,
        };
        let inp = AuditInputs {
            norm_total_cost: vec![0.0; 2],
            z_margin: vec![1.0, -1.0],
        };
        let r = compute_kpis(&plan, &inp, &sim, &inst, &AuditConfig::default());
        assert_eq!(r.redundancy_score, 0.0);
        assert_eq!(r.redundant_pairs, 1);
    }

    #[test]
    fn zero_threshold_counts_all_pairs() {
        let inst = instance(&[1.0; 6], &[1.0; 6], 3, 100.0);
        let plan = AllocationPlan {
            selections: vec![vec![0, 1, 2, 3], vec![], vec![2, 5, 4]],
            slack: None,
        };
        let r = compute_kpis(&plan, &inputs(6), &inst.similarity, &inst, &AuditConfig::default());
        assert_eq!(r.redundant_pairs, 6 + 3);
        let strict = compute_kpis(
            &plan,
            &inputs(6),
            &inst.similarity,
            &inst,
            &AuditConfig {
                redundancy_threshold: 0.5,
            },
        );
        assert_eq!(strict.redundant_pairs, 0);
    }

    #[test]
    fn audit_counts() {
        let inst = instance(&[1.0; 3], &[4.0, 5.0, 6.0], 2, 9.0);
        let ok = AllocationPlan {
            selections: vec![vec![0, 1], vec![2]],
            slack: None,
        };
        assert_eq!(capacity_audit(&ok, &inst), (0, 0.0));
        let over = AllocationPlan {
            selections: vec![vec![0, 1], vec![0, 2]],
            slack: None,
        };
        assert_eq!(capacity_audit(&over, &inst), (1, 1.0));
        let inst = instance(&[1.0; 2], &[5.0, 5.0], 2, 9.0);
        let all = AllocationPlan {
            selections: vec![vec![0, 1]; 2],
            slack: None,
        };
        assert_eq!(capacity_audit(&all, &inst), (2, 2.0));
    }

    #[test]
    fn plan_from_decisions() {
        let plan = AllocationPlan::from_decisions(&[1, 0, 1, 0, 1, 1], 3);
        assert_eq!(plan.selections, vec![vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn feasible_first_round_keeps_weights() {
        let inst = instance(&[1.0; 2], &[5.0, 5.0], 1, 9.0);
        let mut calls = 0;
        let out = tune_penalties::<()>(
            &inst,
            5,
            |_| {
                calls += 1;
                Ok(AllocationPlan {
                    selections: vec![vec![0]],
                    slack: None,
                })
            },
            |p, i| compute_kpis(p, &inputs(2), &i.similarity, i, &AuditConfig::default()),
        )
        .unwrap();
        assert_eq!(calls, 1);
        assert!(out.feasible);
        assert_eq!(out.instance.weights, inst.weights);
    }

    #[test]
    fn escalation_from_zero_is_monotone() {
        let mut inst = instance(&[1.0; 4], &[5.0; 4], 1, 9.0);
        inst.weights.capacity = 0.0;
        let mut seen = Vec::new();
        let out = tune_penalties::<()>(
            &inst,
            4,
            |i| {
                seen.push((i.weights.capacity, i.weights.cardinality));
                Ok(AllocationPlan {
                    selections: vec![vec![0, 1, 2, 3]],
                    slack: None,
                })
            },
            |p, i| compute_kpis(p, &inputs(4), &i.similarity, i, &AuditConfig::default()),
        )
        .unwrap();
        assert!(!out.feasible);
        assert_eq!(out.rounds, 4);
        assert!(seen.windows(2).all(|w| w[1].0 > w[0].0));
        // 4 SKUs against K=2 exceeds the 20% tolerance, so λk doubles too
        assert_eq!(seen[1].1, 2.0 * seen[0].1);
    }
}
