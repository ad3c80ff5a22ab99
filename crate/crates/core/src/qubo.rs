//! Multi-period QUBO over decision bits x(t,i) and per-period slack bits s(t,b).
//!
//! Variables are laid out period by period: `[x(0), s(0), x(1), s(1), …]`, so
//! decision (t,i) lives at `t·(N+B)+i` and slack (t,b) at `t·(N+B)+N+b`.
//! Periods never couple. Per period the model expands
//!
//! ```text
//!   −λm Σ U·D·x + λs Σ_{i<j} S·x·x + λr Σ r·D·x + λinv Σ Inv·x + λdef Σ Def·x
//!   + λc (Σ D·x − C + Σ 2^b s)²  + λk (Σ x − K)² + (λsku/K) Σ x − λtop5 Σ_{top5} x
//! ```
//!
//! with the constants `λc·C²` and `λk·K²` kept in [`QuboModel::offset`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::AllocationPlan;
use crate::kernel::SimilarityMatrix;

/// Stored coefficients smaller than this in magnitude are dropped.
pub const COEFF_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("bit vector has length {got}, model has {expected} variables")]
    Length { expected: usize, got: usize },
    #[error("malformed QUBO file at line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Penalty weights. `top5_factor` scales `max_i |U_i·D_i|` into λtop5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub margin: f64,
    pub similarity: f64,
    pub risk: f64,
    pub inventory: f64,
    pub defect: f64,
    pub capacity: f64,
    pub cardinality: f64,
    pub sku_limit: f64,
    pub top5_factor: f64,
}

impl Weights {
    /// Weights used for QUBO assembly.
    pub fn qubo_defaults() -> Self {
        Weights {
            margin: 0.02,
            similarity: 1.0,
            risk: 0.02,
            inventory: 50.0,
            defect: 50.0,
            capacity: 5000.0,
            cardinality: 1000.0,
            sku_limit: 5000.0,
            top5_factor: 1e9,
        }
    }

    /// Weights used by the PSO/GA/ACO fitness.
    pub fn classical_defaults() -> Self {
        Weights {
            similarity: 3.0,
            ..Self::qubo_defaults()
        }
    }

    pub fn zero() -> Self {
        Weights {
            margin: 0.0,
            similarity: 0.0,
            risk: 0.0,
            inventory: 0.0,
            defect: 0.0,
            capacity: 0.0,
            cardinality: 0.0,
            sku_limit: 0.0,
            top5_factor: 0.0,
        }
    }

    fn all(&self) -> [(&'static str, f64); 9] {
        [
            ("margin", self.margin),
            ("similarity", self.similarity),
            ("risk", self.risk),
            ("inventory", self.inventory),
            ("defect", self.defect),
            ("capacity", self.capacity),
            ("cardinality", self.cardinality),
            ("sku_limit", self.sku_limit),
            ("top5_factor", self.top5_factor),
        ]
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self::qubo_defaults()
    }
}

/// Per-SKU coefficients the objective reads.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SkuTerms {
    /// U_i
    pub unit_margin: Vec<f64>,
    /// D_i
    pub demand: Vec<f64>,
    /// r_i in [0,1]
    pub unified_risk: Vec<f64>,
    pub inventory_risk: Vec<f64>,
    pub defect_risk: Vec<f64>,
}

impl SkuTerms {
    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn total_margin(&self, i: usize) -> f64 {
        self.unit_margin[i] * self.demand[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub periods: usize,
    pub slack_bits: usize,
    pub capacity: f64,
    pub sku_target: usize,
    pub weights: Weights,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            periods: 8,
            slack_bits: 13,
            capacity: 28_392.0,
            sku_target: 50,
            weights: Weights::qubo_defaults(),
        }
    }
}

/// Everything needed to assemble the QUBO or evaluate a classical fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub n_skus: usize,
    pub periods: usize,
    pub slack_bits: usize,
    pub capacity: f64,
    pub sku_target: usize,
    pub weights: Weights,
    pub sku: SkuTerms,
    pub similarity: SimilarityMatrix,
    top5: Vec<usize>,
}

/// Indices of the (up to) five largest `U_i·D_i`, ties to the lower index.
pub fn top5_indices(sku: &SkuTerms) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sku.len()).collect();
    idx.sort_by(|&a, &b| sku.total_margin(b).total_cmp(&sku.total_margin(a)).then(a.cmp(&b)));
    idx.truncate(5);
    idx.sort_unstable();
    idx
}

impl ProblemInstance {
    pub fn new(params: InstanceParams, sku: SkuTerms, similarity: SimilarityMatrix) -> Result<Self, BuildError> {
        let n = sku.len();
        for (name, v) in [
            ("unit_margin", &sku.unit_margin),
            ("unified_risk", &sku.unified_risk),
            ("inventory_risk", &sku.inventory_risk),
            ("defect_risk", &sku.defect_risk),
        ] {
            if v.len() != n {
                return Err(BuildError::Dimension(format!(
                    "{name} has {} entries, demand has {n}",
                    v.len()
                )));
            }
        }
        if similarity.n != n {
            return Err(BuildError::Dimension(format!(
                "similarity is {0}×{0}, instance has {n} SKUs",
                similarity.n
            )));
        }
        if sku
            .unit_margin
            .iter()
            .chain(&sku.demand)
            .chain(&sku.unified_risk)
            .chain(&sku.inventory_risk)
            .chain(&sku.defect_risk)
            .chain(similarity.values())
            .any(|x| !x.is_finite())
        {
            return Err(BuildError::Invalid("non-finite per-SKU value".into()));
        }
        let top5 = top5_indices(&sku);
        let inst = ProblemInstance {
            n_skus: n,
            periods: params.periods,
            slack_bits: params.slack_bits,
            capacity: params.capacity,
            sku_target: params.sku_target,
            weights: params.weights,
            sku,
            similarity,
            top5,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn params(&self) -> InstanceParams {
        InstanceParams {
            periods: self.periods,
            slack_bits: self.slack_bits,
            capacity: self.capacity,
            sku_target: self.sku_target,
            weights: self.weights,
        }
    }

    pub fn with_weights(&self, weights: Weights) -> Self {
        ProblemInstance {
            weights,
            ..self.clone()
        }
    }

    pub fn with_similarity(&self, similarity: SimilarityMatrix) -> Result<Self, BuildError> {
        ProblemInstance::new(self.params(), self.sku.clone(), similarity)
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        for (name, w) in self.weights.all() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(BuildError::Invalid(format!(
                    "weight {name} = {w} must be finite and non-negative"
                )));
            }
        }
        if self.periods == 0 {
            return Err(BuildError::Invalid("at least one period required".into()));
        }
        if self.slack_bits > 52 {
            return Err(BuildError::Invalid(
                "slack_bits above 52 cannot be represented exactly".into(),
            ));
        }
        if !self.capacity.is_finite() || self.capacity < 0.0 {
            return Err(BuildError::Invalid("capacity must be finite and non-negative".into()));
        }
        if self.sku_target == 0 && self.weights.sku_limit != 0.0 {
            return Err(BuildError::Invalid(
                "sku_limit weight needs a positive sku_target".into(),
            ));
        }
        Ok(())
    }

    pub fn top5(&self) -> &[usize] {
        &self.top5
    }

    pub fn is_top5(&self, i: usize) -> bool {
        self.top5.binary_search(&i).is_ok()
    }

    /// λtop5 = top5_factor · max_i |U_i D_i|.
    pub fn top5_weight(&self) -> f64 {
        let m = (0..self.n_skus)
            .map(|i| self.sku.total_margin(i).abs())
            .fold(0.0, f64::max);
        self.weights.top5_factor * m
    }

    pub fn index(&self) -> VariableIndex {
        VariableIndex {
            n_skus: self.n_skus,
            slack_bits: self.slack_bits,
            periods: self.periods,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.index().n_vars()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Decision { period: usize, sku: usize },
    Slack { period: usize, bit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableIndex {
    pub n_skus: usize,
    pub slack_bits: usize,
    pub periods: usize,
}

impl VariableIndex {
    pub fn block(&self) -> usize {
        self.n_skus + self.slack_bits
    }

    pub fn n_vars(&self) -> usize {
        self.periods * self.block()
    }

    pub fn decision(&self, period: usize, sku: usize) -> usize {
        period * self.block() + sku
    }

    pub fn slack(&self, period: usize, bit: usize) -> usize {
        period * self.block() + self.n_skus + bit
    }

    pub fn locate(&self, u: usize) -> Variable {
        let period = u / self.block();
        let r = u % self.block();
        if r < self.n_skus {
            Variable::Decision { period, sku: r }
        } else {
            Variable::Slack {
                period,
                bit: r - self.n_skus,
            }
        }
    }
}

/// Sparse upper-triangular QUBO plus a constant offset.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    n_vars: usize,
    /// Sorted by (u, v), u ≤ v, no zeros.
    terms: Vec<(u32, u32, f64)>,
    pub offset: f64,
    /// (T, N, B) when the model came from [`build_qubo`]; (1, n, 0) otherwise.
    pub layout: (usize, usize, usize),
}

impl QuboModel {
    /// Builds a model from arbitrary (u, v, c) triples; (v, u) is folded onto
    /// (u, v) and duplicates are summed.
    pub fn from_terms(
        n_vars: usize,
        terms: impl IntoIterator<Item = (usize, usize, f64)>,
        offset: f64,
    ) -> Result<Self, BuildError> {
        let mut map: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for (a, b, c) in terms {
            let (u, v) = if a <= b { (a, b) } else { (b, a) };
            if v >= n_vars {
                return Err(BuildError::Dimension(format!("index {v} ≥ n_vars {n_vars}")));
            }
            if !c.is_finite() {
                return Err(BuildError::Invalid(format!("non-finite coefficient at ({u},{v})")));
            }
            *map.entry((u as u32, v as u32)).or_insert(0.0) += c;
        }
        let terms = map
            .into_iter()
            .filter(|(_, c)| c.abs() >= COEFF_EPSILON)
            .map(|((u, v), c)| (u, v, c))
            .collect();
        Ok(QuboModel {
            n_vars,
            terms,
            offset,
            layout: (1, n_vars, 0),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.terms.iter().map(|&(u, v, c)| (u as usize, v as usize, c))
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let key = if u <= v {
            (u as u32, v as u32)
        } else {
            (v as u32, u as u32)
        };
        self.terms
            .binary_search_by(|&(a, b, _)| (a, b).cmp(&key))
            .map(|k| self.terms[k].2)
            .unwrap_or(0.0)
    }

    /// Σ c·z_u·z_v + offset.
    pub fn energy(&self, bits: &[u8]) -> Result<f64, BuildError> {
        if bits.len() != self.n_vars {
            return Err(BuildError::Length {
                expected: self.n_vars,
                got: bits.len(),
            });
        }
        Ok(self.energy_unchecked(bits))
    }

    pub(crate) fn energy_unchecked(&self, bits: &[u8]) -> f64 {
        let mut e = 0.0;
        for &(u, v, c) in &self.terms {
            if bits[u as usize] != 0 && bits[v as usize] != 0 {
                e += c;
            }
        }
        e + self.offset
    }

    /// Text format: `#vars T N B`, `#offset <value>`, optional `# ...`
    /// comment lines, then one `u v coefficient` line per stored entry.
    /// With `fold_offset` the constant is added to entry (0,0) instead and
    /// `#offset 0` is written.
    pub fn to_text(&self, comments: &[String], fold_offset: bool) -> String {
        let mut s = String::with_capacity(40 * self.terms.len() + 64);
        let (t, n, b) = self.layout;
        let _ = writeln!(s, "#vars {t} {n} {b}");
        let folded = fold_offset && self.offset != 0.0;
        let _ = writeln!(s, "#offset {:.16e}", if folded { 0.0 } else { self.offset });
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let mut origin_written = false;
        for &(u, v, c) in &self.terms {
            let c = if folded && u == 0 && v == 0 {
                origin_written = true;
                c + self.offset
            } else {
                c
            };
            if folded && !origin_written && (u, v) > (0, 0) {
                origin_written = true;
                let _ = writeln!(s, "0 0 {:.16e}", self.offset);
            }
            let _ = writeln!(s, "{u} {v} {c:.16e}");
        }
        if folded && !origin_written {
            let _ = writeln!(s, "0 0 {:.16e}", self.offset);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, BuildError> {
        let mut layout = None;
        let mut offset = None;
        let mut terms = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line_no = k + 1;
            let err = |msg: &str| BuildError::Format {
                line: line_no,
                msg: msg.to_string(),
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#vars") {
                let nums: Vec<usize> = rest
                    .split_whitespace()
                    .map(usize::from_str)
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("bad #vars header"))?;
                if nums.len() != 3 {
                    return Err(err("#vars needs T N B"));
                }
                layout = Some((nums[0], nums[1], nums[2]));
            } else if let Some(rest) = line.strip_prefix("#offset") {
                offset = Some(rest.trim().parse::<f64>().map_err(|_| err("bad #offset"))?);
            } else if line.starts_with('#') {
                continue;
            } else {
                let mut it = line.split_whitespace();
                let (Some(u), Some(v), Some(c), None) = (it.next(), it.next(), it.next(), it.next()) else {
                    return Err(err("expected `u v coefficient`"));
                };
                let u: u32 = u.parse().map_err(|_| err("bad index"))?;
                let v: u32 = v.parse().map_err(|_| err("bad index"))?;
                let c: f64 = c.parse().map_err(|_| err("bad coefficient"))?;
                if u > v {
                    return Err(err("entries must satisfy u ≤ v"));
                }
                terms.push((u, v, c));
            }
        }
        let layout = layout.ok_or(BuildError::Format {
            line: 0,
            msg: "missing #vars".into(),
        })?;
        let n_vars = layout.0 * (layout.1 + layout.2);
        if let Some(&(u, v, _)) = terms.iter().find(|t| t.1 as usize >= n_vars) {
            return Err(BuildError::Format {
                line: 0,
                msg: format!("entry ({u},{v}) outside {n_vars} variables"),
            });
        }
        terms.sort_by_key(|&(u, v, _)| (u, v));
        if terms.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(BuildError::Format {
                line: 0,
                msg: "duplicate entry".into(),
            });
        }
        Ok(QuboModel {
            n_vars,
            terms,
            offset: offset.unwrap_or(0.0),
            layout,
        })
    }
}

/// Assembles the full QUBO. Periods are built independently and concatenated.
pub fn build_qubo(instance: &ProblemInstance) -> Result<QuboModel, BuildError> {
    instance.validate()?;
    let n = instance.n_skus;
    let b_bits = instance.slack_bits;
    let w = &instance.weights;
    let c = instance.capacity;
    let k = instance.sku_target as f64;
    let idx = instance.index();
    let top5_w = instance.top5_weight();
    let d = &instance.sku.demand;

    let sku_limit_linear = if instance.sku_target == 0 { 0.0 } else { w.sku_limit / k };
    let diag_decision: Vec<f64> = (0..n)
        .map(|i| {
            let mut q = -w.margin * instance.sku.total_margin(i)
                + w.risk * instance.sku.unified_risk[i] * d[i]
                + w.inventory * instance.sku.inventory_risk[i]
                + w.defect * instance.sku.defect_risk[i]
                + (w.cardinality + sku_limit_linear - 2.0 * w.cardinality * k)
                + w.capacity * (d[i] * d[i] - 2.0 * c * d[i]);
            if instance.is_top5(i) {
                q -= top5_w;
            }
            q
        })
        .collect();
    let pow2: Vec<f64> = (0..b_bits).map(|b| (b as f64).exp2()).collect();

    let per_period: Vec<Vec<(u32, u32, f64)>> = (0..instance.periods)
        .into_par_iter()
        .map(|t| {
            let mut out = Vec::with_capacity((n + b_bits) * (n + b_bits + 1) / 2);
            let mut push = |u: usize, v: usize, q: f64| {
                if q.abs() >= COEFF_EPSILON {
                    out.push((u as u32, v as u32, q));
                }
            };
            for i in 0..n {
                let u = idx.decision(t, i);
                push(u, u, diag_decision[i]);
                for j in (i + 1)..n {
                    let q = w.similarity * instance.similarity.get(i, j)
                        + 2.0 * w.capacity * d[i] * d[j]
                        + 2.0 * w.cardinality;
                    push(u, idx.decision(t, j), q);
                }
                for (bit, p) in pow2.iter().enumerate() {
                    push(u, idx.slack(t, bit), 2.0 * w.capacity * d[i] * p);
                }
            }
            for (bit, p) in pow2.iter().enumerate() {
                let u = idx.slack(t, bit);
                push(u, u, w.capacity * (p * p - 2.0 * c * p));
                for (bit2, p2) in pow2.iter().enumerate().skip(bit + 1) {
                    push(u, idx.slack(t, bit2), 2.0 * w.capacity * p * p2);
                }
            }
            out
        })
        .collect();

    let terms: Vec<(u32, u32, f64)> = per_period.into_iter().flatten().collect();
    if terms.iter().any(|t| !t.2.is_finite()) {
        return Err(BuildError::Invalid("non-finite coefficient".into()));
    }
    let periods = instance.periods as f64;
    let offset = w.capacity * c * c * periods + w.cardinality * k * k * periods;
    Ok(QuboModel {
        n_vars: idx.n_vars(),
        terms,
        offset,
        layout: (instance.periods, n, b_bits),
    })
}

/// Per-period selected SKUs and decoded slack integers.
pub fn decode(bits: &[u8], instance: &ProblemInstance) -> AllocationPlan {
    let idx = instance.index();
    let mut selections = Vec::with_capacity(instance.periods);
    let mut slack = Vec::with_capacity(instance.periods);
    for t in 0..instance.periods {
        selections.push(
            (0..instance.n_skus)
                .filter(|&i| bits.get(idx.decision(t, i)).copied().unwrap_or(0) != 0)
                .collect(),
        );
        let s: u64 = (0..instance.slack_bits)
            .filter(|&b| bits.get(idx.slack(t, b)).copied().unwrap_or(0) != 0)
            .map(|b| 1u64 << b)
            .sum();
        slack.push(s);
    }
    AllocationPlan {
        selections,
        slack: Some(slack),
    }
}

impl FromStr for Weights {
    type Err = String;
    /// `name=value` pairs separated by commas, applied over the QUBO defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut w = Weights::qubo_defaults();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected name=value, got {part:?}"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("bad number in {part:?}"))?;
            w.set(k.trim(), v)?;
        }
        Ok(w)
    }
}

impl Weights {
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        let slot = match name {
            "margin" => &mut self.margin,
            "similarity" => &mut self.similarity,
            "risk" => &mut self.risk,
            "inventory" => &mut self.inventory,
            "defect" => &mut self.defect,
            "capacity" => &mut self.capacity,
            "cardinality" => &mut self.cardinality,
            "sku_limit" => &mut self.sku_limit,
            "top5_factor" => &mut self.top5_factor,
            other => return Err(format!("unknown weight {other:?}")),
        };
        *slot = value;
        Ok(())
    }
}
