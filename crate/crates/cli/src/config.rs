//! Resolved run configuration: defaults, then a config file, then flags.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use skualloc::ablation::AblationVariant;
use skualloc::scenario::{CapacityRule, ScenarioConfig};
use skualloc::solvers::{AnnealConfig, MetaheuristicConfig, SolverKind};
use skualloc::{SimilarityMethod, Weights};

use crate::CliError;

/// First header line of every text artifact.
pub const ARTIFACT_MARKER: &str = "skualloc";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Seed for catalog synthesis; falls back to `seed`.
    pub data_seed: Option<u64>,
    /// Catalog CSV to ingest instead of synthesizing one.
    pub input: Option<PathBuf>,
    pub skus: usize,
    pub base: usize,
    pub scenario: ScenarioConfig,
    pub classical_similarity: f64,
    pub solver: SolverKind,
    pub anneal: AnnealConfig,
    pub meta: MetaheuristicConfig,
    pub redundancy_threshold: f64,
    pub tune_rounds: usize,
    pub repeats: usize,
    pub variants: Vec<AblationVariant>,
    pub fold_offset: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            data_seed: None,
            input: None,
            skus: 500,
            base: 100,
            scenario: ScenarioConfig::default(),
            classical_similarity: Weights::classical_defaults().similarity,
            solver: SolverKind::Sa,
            anneal: AnnealConfig::default(),
            meta: MetaheuristicConfig::default(),
            redundancy_threshold: 0.0,
            tune_rounds: 1,
            repeats: 5,
            variants: AblationVariant::ALL.to_vec(),
            fold_offset: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| CliError::Arg(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError>
where
    T::Err: Display,
{
    if value.trim().eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_auto<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

const WEIGHT_KEYS: [(&str, &str); 9] = [
    ("lambda_margin", "margin"),
    ("lambda_similarity", "similarity"),
    ("lambda_risk", "risk"),
    ("lambda_inventory", "inventory"),
    ("lambda_defect", "defect"),
    ("lambda_capacity", "capacity"),
    ("lambda_cardinality", "cardinality"),
    ("lambda_sku_limit", "sku_limit"),
    ("top5_factor", "top5_factor"),
];

impl RunConfig {
    pub fn data_seed(&self) -> u64 {
        self.data_seed.unwrap_or(self.seed)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        let v = value.trim();
        if let Some(&(_, field)) = WEIGHT_KEYS.iter().find(|(k, _)| *k == key) {
            let x: f64 = parse(key, v)?;
            return self.scenario.weights.set(field, x).map_err(CliError::Arg);
        }
        match key {
            "seed" => self.seed = parse(key, v)?,
            "data_seed" => self.data_seed = parse_auto(key, v)?,
            "input" => {
                self.input = if v.is_empty() || v == "none" {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "skus" => self.skus = parse(key, v)?,
            "base" => self.base = parse(key, v)?,
            "periods" => self.scenario.periods = parse(key, v)?,
            "slack_bits" => self.scenario.slack_bits = parse(key, v)?,
            "sku_target" => self.scenario.sku_target = parse(key, v)?,
            "capacity" => self.scenario.capacity = parse::<CapacityRule>(key, v)?,
            "pca_dims" => self.scenario.pca_dims = parse(key, v)?,
            "bypass_pca" => self.scenario.bypass_pca = parse(key, v)?,
            "similarity" => self.scenario.kernel.method = parse::<SimilarityMethod>(key, v)?,
            "angle_scale" => self.scenario.kernel.angle_scale = parse(key, v)?,
            "classical_similarity" => self.classical_similarity = parse(key, v)?,
            "solver" => self.solver = parse(key, v)?,
            "reads" => self.anneal.num_reads = parse(key, v)?,
            "sweeps" => self.anneal.sweeps_per_read = parse_auto(key, v)?,
            "beta_start" => self.anneal.beta_start = parse_auto(key, v)?,
            "beta_end" => self.anneal.beta_end = parse(key, v)?,
            "trotter_slices" => self.anneal.sqa_trotter_slices = parse(key, v)?,
            "sqa_beta" => self.anneal.sqa_beta = parse(key, v)?,
            "gamma_start" => self.anneal.gamma_start = parse(key, v)?,
            "gamma_end" => self.anneal.gamma_end = parse(key, v)?,
            "pop_size" => self.meta.pop_size = parse(key, v)?,
            "iterations" => self.meta.iterations = parse(key, v)?,
            "pso_inertia" => self.meta.pso.inertia = parse(key, v)?,
            "pso_cognitive" => self.meta.pso.cognitive = parse(key, v)?,
            "pso_social" => self.meta.pso.social = parse(key, v)?,
            "ga_crossover" => self.meta.ga.crossover_rate = parse(key, v)?,
            "ga_mutation" => self.meta.ga.mutation_rate = parse(key, v)?,
            "aco_alpha" => self.meta.aco.alpha = parse(key, v)?,
            "aco_beta" => self.meta.aco.beta = parse(key, v)?,
            "aco_rho" => self.meta.aco.rho = parse(key, v)?,
            "aco_q" => self.meta.aco.q = parse(key, v)?,
            "redundancy_threshold" => self.redundancy_threshold = parse(key, v)?,
            "tune_rounds" => self.tune_rounds = parse(key, v)?,
            "repeats" => self.repeats = parse(key, v)?,
            "variants" => self.variants = parse_variants(v)?,
            "fold_offset" => self.fold_offset = parse(key, v)?,
            _ => return Err(CliError::Arg(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Every setting in a fixed order, as it would appear in a config file.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.scenario;
        let a = &self.anneal;
        let m = &self.meta;
        let mut out = vec![
            ("seed", self.seed.to_string()),
            ("data_seed", self.data_seed().to_string()),
            (
                "input",
                self.input
                    .as_ref()
                    .map_or_else(|| "none".into(), |p| p.display().to_string()),
            ),
            ("skus", self.skus.to_string()),
            ("base", self.base.to_string()),
            ("periods", s.periods.to_string()),
            ("slack_bits", s.slack_bits.to_string()),
            ("sku_target", s.sku_target.to_string()),
            ("capacity", s.capacity.to_string()),
            ("pca_dims", s.pca_dims.to_string()),
            ("bypass_pca", s.bypass_pca.to_string()),
            ("similarity", s.kernel.method.as_str().to_string()),
            ("angle_scale", s.kernel.angle_scale.to_string()),
        ];
        let w = s.weights;
        let weights = [
            w.margin,
            w.similarity,
            w.risk,
            w.inventory,
            w.defect,
            w.capacity,
            w.cardinality,
            w.sku_limit,
            w.top5_factor,
        ];
        out.extend(WEIGHT_KEYS.iter().zip(weights).map(|(&(k, _), x)| (k, x.to_string())));
        out.extend([
            ("classical_similarity", self.classical_similarity.to_string()),
            ("solver", self.solver.as_str().to_string()),
            ("reads", a.num_reads.to_string()),
            ("sweeps", show_auto(a.sweeps_per_read)),
            ("beta_start", show_auto(a.beta_start)),
            ("beta_end", a.beta_end.to_string()),
            ("trotter_slices", a.sqa_trotter_slices.to_string()),
            ("sqa_beta", a.sqa_beta.to_string()),
            ("gamma_start", a.gamma_start.to_string()),
            ("gamma_end", a.gamma_end.to_string()),
            ("pop_size", m.pop_size.to_string()),
            ("iterations", m.iterations.to_string()),
            ("pso_inertia", m.pso.inertia.to_string()),
            ("pso_cognitive", m.pso.cognitive.to_string()),
            ("pso_social", m.pso.social.to_string()),
            ("ga_crossover", m.ga.crossover_rate.to_string()),
            ("ga_mutation", m.ga.mutation_rate.to_string()),
            ("aco_alpha", m.aco.alpha.to_string()),
            ("aco_beta", m.aco.beta.to_string()),
            ("aco_rho", m.aco.rho.to_string()),
            ("aco_q", m.aco.q.to_string()),
            ("redundancy_threshold", self.redundancy_threshold.to_string()),
            ("tune_rounds", self.tune_rounds.to_string()),
            ("repeats", self.repeats.to_string()),
            (
                "variants",
                self.variants.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(","),
            ),
            ("fold_offset", self.fold_offset.to_string()),
        ]);
        out
    }

    /// `key = value` lines, used as artifact headers.
    pub fn header(&self, command: &str) -> Vec<String> {
        let mut lines = vec![format!("{ARTIFACT_MARKER} {command}")];
        lines.extend(self.entries().into_iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
            .collect();
        serde_json::Value::Object(map)
    }

    /// Anneal settings with the run seed applied.
    pub fn anneal(&self) -> AnnealConfig {
        AnnealConfig {
            seed: self.seed,
            ..self.anneal
        }
    }

    /// Metaheuristic settings: the QUBO weights with the classical similarity weight.
    pub fn meta(&self) -> MetaheuristicConfig {
        MetaheuristicConfig {
            seed: self.seed,
            weights: Weights {
                similarity: self.classical_similarity,
                ..self.scenario.weights
            },
            ..self.meta
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let arg = |m: String| Err(CliError::Arg(m));
        if self.input.is_none() && self.skus < self.base {
            return arg(format!(
                "skus ({}) is below the base catalog size ({})",
                self.skus, self.base
            ));
        }
        if self.base == 0 {
            return arg("base must be at least 1".into());
        }
        if self.repeats == 0 {
            return arg("repeats must be at least 1".into());
        }
        if self.variants.is_empty() {
            return arg("variants must name at least one variant".into());
        }
        if self.tune_rounds == 0 {
            return arg("tune_rounds must be at least 1".into());
        }
        self.anneal.validate().map_err(|e| CliError::Arg(e.to_string()))?;
        self.meta().validate().map_err(|e| CliError::Arg(e.to_string()))
    }
}

pub fn parse_variants(s: &str) -> Result<Vec<AblationVariant>, CliError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(AblationVariant::ALL.to_vec());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<AblationVariant>().map_err(CliError::Arg))
        .collect()
}

/// `key = value` pairs from a config file, or from the header of any
/// artifact this tool wrote (text artifacts carry it as `# key = value`
/// lines after the marker, JSON artifacts under `"config"`).
pub fn read_settings(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Arg(format!("{}: {e}", path.display())))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| CliError::Arg(format!("{}: {e}", path.display())))?;
        let Some(cfg) = v.get("config").and_then(|c| c.as_object()) else {
            return Err(CliError::Arg(format!("{}: no \"config\" object", path.display())));
        };
        return Ok(cfg
            .iter()
            .map(|(k, v)| (k.clone(), v.as_str().map_or_else(|| v.to_string(), str::to_string)))
            .collect());
    }

    let marker = format!("# {ARTIFACT_MARKER} ");
    if let Some(start) = text.lines().position(|l| l.starts_with(&marker)) {
        return Ok(text
            .lines()
            .skip(start + 1)
            .map_while(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect());
    }

    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split_once('#').map_or(line, |(a, _)| a).trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Arg(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                k + 1
            )));
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}
