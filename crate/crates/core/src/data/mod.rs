//! Catalog ingestion, derived metrics and normalization.
//!
//! A catalog is a list of [`SkuRecord`]s. [`engineer_features`] turns it into
//! [`SkuFeatures`]: cost/margin/utilization metrics, the three risk signals and
//! a bounded unified risk, plus min-max normalized copies of every continuous
//! column. The PCA path ([`pca`]) works on z-scored columns instead.

pub mod pca;
pub mod synth;

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pca::{pca_reduce, EmbeddingMatrix};
pub use synth::{generate_base_catalog, synthesize_catalog, SynthesisSpec};

/// Column order of the catalog CSV.
pub const CATALOG_HEADER: [&str; 12] = [
    "sku_id",
    "category",
    "price",
    "manufacturing_cost",
    "shipping_cost",
    "other_cost",
    "units_sold",
    "production_volume",
    "inventory_level",
    "lead_time",
    "defect_rate",
    "inspection",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("catalog header does not match the expected schema: got [{0}]")]
    Schema(String),
    #[error("line {line}: cannot parse column `{column}` from {value:?}")]
    Parse {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("empty input")]
    Empty,
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Haircare,
    Skincare,
    Cosmetics,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Skincare, Category::Haircare, Category::Cosmetics];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Haircare => "haircare",
            Category::Skincare => "skincare",
            Category::Cosmetics => "cosmetics",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haircare" => Ok(Category::Haircare),
            "skincare" => Ok(Category::Skincare),
            "cosmetics" => Ok(Category::Cosmetics),
            other => Err(format!("unknown category {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inspection {
    Pass,
    Fail,
    Pending,
}

impl Inspection {
    pub fn as_str(self) -> &'static str {
        match self {
            Inspection::Pass => "pass",
            Inspection::Fail => "fail",
            Inspection::Pending => "pending",
        }
    }
}

impl FromStr for Inspection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pass" => Ok(Inspection::Pass),
            "fail" => Ok(Inspection::Fail),
            "pending" => Ok(Inspection::Pending),
            other => Err(format!("unknown inspection result {other:?}")),
        }
    }
}

/// One raw catalog row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkuRecord {
    pub sku_id: String,
    pub category: Category,
    pub price: f64,
    pub manufacturing_cost: f64,
    pub shipping_cost: f64,
    pub other_cost: f64,
    pub units_sold: f64,
    pub production_volume: f64,
    pub inventory_level: f64,
    /// Days, 1..=30.
    pub lead_time: f64,
    /// Fraction, not percent.
    pub defect_rate: f64,
    pub inspection: Inspection,
}

/// Result of [`ingest_catalog`]: the parsed rows and how many were dropped for
/// missing required cells.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub records: Vec<SkuRecord>,
    pub dropped: usize,
}

/// Reads a catalog CSV from disk. Lines starting with `#` are treated as
/// comments (artifacts written by this crate carry their config that way).
pub fn ingest_catalog(path: impl AsRef<Path>) -> Result<Catalog, DataError> {
    let file = std::fs::File::open(path)?;
    read_catalog(file)
}

pub fn read_catalog<R: Read>(reader: R) -> Result<Catalog, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != CATALOG_HEADER {
        return Err(DataError::Schema(got.join(",")));
    }

    let mut records = Vec::new();
    let mut dropped = 0;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| row.get(i).unwrap_or("").trim();
        if (0..CATALOG_HEADER.len()).any(|i| cell(i).is_empty()) {
            dropped += 1;
            continue;
        }
        let num = |i: usize| -> Result<f64, DataError> {
            cell(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::Parse {
                    line,
                    column: CATALOG_HEADER[i],
                    value: cell(i).to_string(),
                })
        };
        let category = cell(1).parse().map_err(|_| DataError::Parse {
            line,
            column: CATALOG_HEADER[1],
            value: cell(1).to_string(),
        })?;
        let inspection = cell(11).parse().map_err(|_| DataError::Parse {
            line,
            column: CATALOG_HEADER[11],
            value: cell(11).to_string(),
        })?;
        records.push(SkuRecord {
            sku_id: cell(0).to_string(),
            category,
            price: num(2)?,
            manufacturing_cost: num(3)?,
            shipping_cost: num(4)?,
            other_cost: num(5)?,
            units_sold: num(6)?,
            production_volume: num(7)?,
            inventory_level: num(8)?,
            lead_time: num(9)?,
            defect_rate: num(10)?,
            inspection,
        });
    }
    Ok(Catalog { records, dropped })
}

/// Writes records in the catalog schema. `comments` are emitted first as `# ...` lines.
pub fn write_catalog<W: std::io::Write>(
    mut out: W,
    records: &[SkuRecord],
    comments: &[String],
) -> Result<(), DataError> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", CATALOG_HEADER.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sku_id,
            r.category,
            r.price,
            r.manufacturing_cost,
            r.shipping_cost,
            r.other_cost,
            r.units_sold,
            r.production_volume,
            r.inventory_level,
            r.lead_time,
            r.defect_rate,
            r.inspection.as_str()
        )?;
    }
    Ok(())
}

/// How the "unit-cost ratio" PCA input is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitCostRatio {
    /// unit_margin / total_cost
    #[default]
    MarginOverCost,
    /// price / total_cost
    PriceOverCost,
}

impl FromStr for UnitCostRatio {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "margin_over_cost" => Ok(Self::MarginOverCost),
            "price_over_cost" => Ok(Self::PriceOverCost),
            other => Err(format!("unknown unit-cost ratio {other:?}")),
        }
    }
}

/// Engineered metrics for one SKU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkuFeatures {
    pub sku_id: String,
    pub total_cost: f64,
    pub unit_margin: f64,
    pub demand: f64,
    pub utilization: f64,
    pub overload: u8,
    pub inventory_risk: f64,
    pub lead_time: f64,
    pub lead_time_risk: u8,
    pub defect_risk: f64,
    pub unit_cost_ratio: f64,
    pub unified_risk: f64,
    pub norm_total_cost: f64,
    pub norm_unit_margin: f64,
    pub norm_demand: f64,
    pub norm_utilization: f64,
    pub norm_inventory_risk: f64,
    pub norm_lead_time: f64,
    pub norm_defect_risk: f64,
}

pub const FEATURES_HEADER: [&str; 19] = [
    "sku_id",
    "total_cost",
    "unit_margin",
    "demand",
    "utilization",
    "overload",
    "inventory_risk",
    "lead_time",
    "lead_time_risk",
    "defect_risk",
    "unit_cost_ratio",
    "unified_risk",
    "norm_total_cost",
    "norm_unit_margin",
    "norm_demand",
    "norm_utilization",
    "norm_inventory_risk",
    "norm_lead_time",
    "norm_defect_risk",
];

impl SkuFeatures {
    /// The five PCA input columns, in order: unit-cost ratio, total cost,
    /// inventory risk, utilization, lead time.
    pub fn pca_inputs(&self) -> [f64; 5] {
        [
            self.unit_cost_ratio,
            self.total_cost,
            self.inventory_risk,
            self.utilization,
            self.lead_time,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub features: Vec<SkuFeatures>,
    /// Records excluded because `units_sold == 0`.
    pub excluded: Vec<String>,
}

/// Linear-interpolation percentile (same convention as numpy's default).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn engineer_features(records: &[SkuRecord]) -> Result<FeatureTable, DataError> {
    engineer_features_with(records, UnitCostRatio::default())
}

pub fn engineer_features_with(records: &[SkuRecord], ratio: UnitCostRatio) -> Result<FeatureTable, DataError> {
    if records.is_empty() {
        return Err(DataError::Empty);
    }
    let (kept, dropped): (Vec<&SkuRecord>, Vec<&SkuRecord>) = records.iter().partition(|r| r.units_sold != 0.0);
    let excluded = dropped.into_iter().map(|r| r.sku_id.clone()).collect();
    if kept.is_empty() {
        return Ok(FeatureTable {
            features: Vec::new(),
            excluded,
        });
    }

    let lead_times: Vec<f64> = kept.iter().map(|r| r.lead_time).collect();
    let l75 = percentile(&lead_times, 75.0);

    let mut features: Vec<SkuFeatures> = kept
        .iter()
        .map(|r| {
            let total_cost = r.manufacturing_cost + r.shipping_cost + r.other_cost;
            let unit_margin = r.price - total_cost;
            let unit_cost_ratio = if total_cost == 0.0 {
                0.0
            } else {
                match ratio {
                    UnitCostRatio::MarginOverCost => unit_margin / total_cost,
                    UnitCostRatio::PriceOverCost => r.price / total_cost,
                }
            };
            SkuFeatures {
                sku_id: r.sku_id.clone(),
                total_cost,
                unit_margin,
                demand: r.units_sold,
                utilization: r.units_sold / r.production_volume,
                overload: u8::from(r.units_sold > r.production_volume),
                inventory_risk: (r.inventory_level - r.units_sold) / r.units_sold,
                lead_time: r.lead_time,
                lead_time_risk: u8::from(r.lead_time > l75),
                defect_risk: if r.inspection == Inspection::Fail {
                    r.defect_rate
                } else {
                    0.0
                },
                unit_cost_ratio,
                unified_risk: 0.0,
                norm_total_cost: 0.0,
                norm_unit_margin: 0.0,
                norm_demand: 0.0,
                norm_utilization: 0.0,
                norm_inventory_risk: 0.0,
                norm_lead_time: 0.0,
                norm_defect_risk: 0.0,
            }
        })
        .collect();

    let col =
        |f: &dyn Fn(&SkuFeatures) -> f64| -> Vec<f64> { minmax_normalize(&features.iter().map(f).collect::<Vec<_>>()) };
    let n_cost = col(&|x| x.total_cost);
    let n_margin = col(&|x| x.unit_margin);
    let n_demand = col(&|x| x.demand);
    let n_util = col(&|x| x.utilization);
    let n_inv = col(&|x| x.inventory_risk);
    let n_lead = col(&|x| x.lead_time);
    let n_def = col(&|x| x.defect_risk);

    let raw_risk: Vec<f64> = features
        .iter()
        .enumerate()
        .map(|(i, f)| (n_inv[i] + n_def[i] + f64::from(f.lead_time_risk)) / 3.0)
        .collect();
    let unified = minmax_normalize(&raw_risk);

    for (i, f) in features.iter_mut().enumerate() {
        f.norm_total_cost = n_cost[i];
        f.norm_unit_margin = n_margin[i];
        f.norm_demand = n_demand[i];
        f.norm_utilization = n_util[i];
        f.norm_inventory_risk = n_inv[i];
        f.norm_lead_time = n_lead[i];
        f.norm_defect_risk = n_def[i];
        f.unified_risk = unified[i];
    }
    Ok(FeatureTable { features, excluded })
}

/// Min-max scaling to [0, 1]. A constant column maps to zeros.
pub fn minmax_normalize(column: &[f64]) -> Vec<f64> {
    let (lo, hi) = column.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; column.len()];
    }
    column.iter().map(|&x| ((x - lo) / span).clamp(0.0, 1.0)).collect()
}

/// Standard score with population variance. Zero-variance columns map to zeros.
pub fn zscore_normalize(column: &[f64]) -> Vec<f64> {
    let n = column.len() as f64;
    if column.is_empty() {
        return Vec::new();
    }
    let mean = column.iter().sum::<f64>() / n;
    let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) || sd < 1e-300 {
        return vec![0.0; column.len()];
    }
    column.iter().map(|x| (x - mean) / sd).collect()
}

/// N×5 matrix of z-scored PCA input columns.
pub fn zscored_pca_inputs(features: &[SkuFeatures]) -> Vec<[f64; 5]> {
    let n = features.len();
    let mut cols: Vec<Vec<f64>> = (0..5)
        .map(|k| features.iter().map(|f| f.pca_inputs()[k]).collect())
        .collect();
    for c in cols.iter_mut() {
        *c = zscore_normalize(c);
    }
    (0..n)
        .map(|i| [cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i]])
        .collect()
}

pub fn write_features<W: std::io::Write>(
    mut out: W,
    features: &[SkuFeatures],
    comments: &[String],
) -> Result<(), DataError> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", FEATURES_HEADER.join(","))?;
    for f in features {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{},{:.17e},{},{:.17e},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            f.sku_id,
            f.total_cost,
            f.unit_margin,
            f.demand,
            f.utilization,
            f.overload,
            f.inventory_risk,
            f.lead_time,
            f.lead_time_risk,
            f.defect_risk,
            f.unit_cost_ratio,
            f.unified_risk,
            f.norm_total_cost,
            f.norm_unit_margin,
            f.norm_demand,
            f.norm_utilization,
            f.norm_inventory_risk,
            f.norm_lead_time,
            f.norm_defect_risk
        )?;
    }
    Ok(())
}
