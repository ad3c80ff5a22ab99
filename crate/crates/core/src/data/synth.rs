//! Synthetic catalogs: a base generator with the reference dataset's marginal
//! ranges, and an expander that grows a base catalog by per-category
//! resampling with log-normal jitter.

use std::collections::HashSet;

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Category, DataError, Inspection, SkuRecord};

const JITTER_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMix {
    pub skincare: f64,
    pub haircare: f64,
    pub cosmetics: f64,
}

impl Default for CategoryMix {
    fn default() -> Self {
        CategoryMix {
            skincare: 0.38,
            haircare: 0.32,
            cosmetics: 0.30,
        }
    }
}

impl CategoryMix {
    pub fn share(&self, c: Category) -> f64 {
        match c {
            Category::Skincare => self.skincare,
            Category::Haircare => self.haircare,
            Category::Cosmetics => self.cosmetics,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let parts = [self.skincare, self.haircare, self.cosmetics];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(DataError::Argument("category share outside [0,1]".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DataError::Argument("category mix must sum to 1".into()));
        }
        Ok(())
    }

    /// Integer counts summing to `total` (largest-remainder rounding).
    pub fn counts(&self, total: usize) -> [(Category, usize); 3] {
        let exact: Vec<f64> = Category::ALL.iter().map(|&c| self.share(c) * total as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut rest = total - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &k in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[k] += 1;
            rest -= 1;
        }
        [
            (Category::ALL[0], counts[0]),
            (Category::ALL[1], counts[1]),
            (Category::ALL[2], counts[2]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub target_count: usize,
    pub category_mix: CategoryMix,
    pub seed: u64,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        SynthesisSpec {
            target_count: 500,
            category_mix: CategoryMix::default(),
            seed: 0,
        }
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    crate::rng::stream(seed, row)
}

/// Generates a stand-in for the 100-SKU reference catalog: category shares
/// 38/32/30, stock 1–100, lead times 1–30 days, defect rates 0.02%–4.94%,
/// inspection outcomes pass/fail/pending.
pub fn generate_base_catalog(count: usize, mix: &CategoryMix, seed: u64) -> Result<Vec<SkuRecord>, DataError> {
    if count == 0 {
        return Err(DataError::Argument("base catalog size must be positive".into()));
    }
    mix.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cats: Vec<Category> = mix
        .counts(count)
        .iter()
        .flat_map(|&(c, k)| std::iter::repeat_n(c, k))
        .collect();
    cats.shuffle(&mut rng);

    Ok(cats
        .into_iter()
        .enumerate()
        .map(|(k, category)| {
            let price: f64 = rng.gen_range(10.0..100.0);
            let inspection = match rng.gen::<f64>() {
                u if u < 0.41 => Inspection::Pending,
                u if u < 0.77 => Inspection::Fail,
                _ => Inspection::Pass,
            };
            SkuRecord {
                sku_id: format!("SKU{k}"),
                category,
                price: round_to(price, 2),
                manufacturing_cost: round_to(price * rng.gen_range(0.1..0.5), 2),
                shipping_cost: round_to(rng.gen_range(1.0..10.0), 2),
                other_cost: round_to(rng.gen_range(0.5..5.0), 2),
                units_sold: rng.gen_range(8..=996) as f64,
                production_volume: rng.gen_range(104..=985) as f64,
                inventory_level: rng.gen_range(1..=100) as f64,
                lead_time: rng.gen_range(1..=30) as f64,
                defect_rate: round_to(rng.gen_range(0.0002..0.0494), 6),
                inspection,
            }
        })
        .collect())
}

/// Expands `base` to `spec.target_count` rows. Base rows are kept; new rows
/// resample a same-category template and jitter each numeric column by an
/// independent log-normal factor (σ = 0.1) drawn from the row's own stream.
pub fn synthesize_catalog(base: &[SkuRecord], spec: &SynthesisSpec) -> Result<Vec<SkuRecord>, DataError> {
    if base.is_empty() {
        return Err(DataError::Empty);
    }
    spec.category_mix.validate()?;
    if spec.target_count < base.len() {
        return Err(DataError::Argument(format!(
            "target count {} is below base size {}",
            spec.target_count,
            base.len()
        )));
    }

    let targets = spec.category_mix.counts(spec.target_count);
    let mut new_per_cat: Vec<(Category, usize)> = targets
        .iter()
        .map(|&(c, want)| {
            let have = base.iter().filter(|r| r.category == c).count();
            (c, want.saturating_sub(have))
        })
        .collect();
    // A skewed base can leave the totals short; top up the most under-filled category.
    let mut missing = spec.target_count - base.len() - new_per_cat.iter().map(|x| x.1).sum::<usize>();
    while missing > 0 {
        let k = (0..3)
            .max_by(|&a, &b| {
                let fa = targets[a].1 as f64 - new_per_cat[a].1 as f64;
                let fb = targets[b].1 as f64 - new_per_cat[b].1 as f64;
                fa.total_cmp(&fb).then(b.cmp(&a))
            })
            .unwrap();
        new_per_cat[k].1 += 1;
        missing -= 1;
    }
    let mut surplus = new_per_cat.iter().map(|x| x.1).sum::<usize>() - (spec.target_count - base.len());
    for slot in new_per_cat.iter_mut().rev() {
        let take = surplus.min(slot.1);
        slot.1 -= take;
        surplus -= take;
    }

    let mut used: HashSet<String> = base.iter().map(|r| r.sku_id.clone()).collect();
    let mut next_id = base.len();
    let mut out = base.to_vec();
    let mut row_index: u64 = 0;
    for (category, count) in new_per_cat {
        let pool: Vec<&SkuRecord> = {
            let same: Vec<&SkuRecord> = base.iter().filter(|r| r.category == category).collect();
            if same.is_empty() {
                base.iter().collect()
            } else {
                same
            }
        };
        for _ in 0..count {
            let mut rng = row_rng(spec.seed, row_index);
            row_index += 1;
            let template = pool[rng.gen_range(0..pool.len())];
            let mut jitter = || -> f64 {
                let z: f64 = rng.sample(StandardNormal);
                (JITTER_SIGMA * z).exp()
            };
            let mut id = format!("SKU{next_id}");
            while used.contains(&id) {
                next_id += 1;
                id = format!("SKU{next_id}");
            }
            next_id += 1;
            used.insert(id.clone());
            out.push(SkuRecord {
                sku_id: id,
                category,
                price: round_to(template.price * jitter(), 2).max(0.0),
                manufacturing_cost: round_to(template.manufacturing_cost * jitter(), 2).max(0.0),
                shipping_cost: round_to(template.shipping_cost * jitter(), 2).max(0.0),
                other_cost: round_to(template.other_cost * jitter(), 2).max(0.0),
                units_sold: (template.units_sold * jitter()).round().max(1.0),
                production_volume: (template.production_volume * jitter()).round().max(1.0),
                inventory_level: (template.inventory_level * jitter()).round().max(0.0),
                lead_time: (template.lead_time * jitter()).round().clamp(1.0, 30.0),
                defect_rate: round_to(template.defect_rate * jitter(), 6).clamp(0.0002, 0.0494),
                inspection: template.inspection,
            });
        }
    }
    Ok(out)
}
