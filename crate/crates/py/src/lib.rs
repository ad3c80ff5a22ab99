//! Python bindings: build a scenario, inspect its QUBO, sample it and audit
//! the result.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use skualloc_core::ablation::{run_ablation, AblationConfig, AblationVariant};
use skualloc_core::audit::{compute_kpis, AllocationPlan, AuditConfig};
use skualloc_core::data::synth::CategoryMix;
use skualloc_core::data::{generate_base_catalog, ingest_catalog, synthesize_catalog, SkuRecord, SynthesisSpec};
use skualloc_core::kernel;
use skualloc_core::qubo::decode;
use skualloc_core::scenario::{self, CapacityRule, ScenarioConfig};
use skualloc_core::solvers::{solve_sa, solve_sqa, AnnealConfig, MetaheuristicConfig, SampleSet, SolverKind};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_json_object<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn anneal_config(reads: usize, sweeps: Option<usize>, seed: u64) -> AnnealConfig {
    AnnealConfig {
        num_reads: reads,
        sweeps_per_read: sweeps,
        seed,
        ..AnnealConfig::default()
    }
}

fn samples<'py>(py: Python<'py>, set: &SampleSet) -> PyResult<Bound<'py, PyAny>> {
    let rows: Vec<(Vec<u8>, f64)> = set.samples.iter().map(|s| (s.bits.clone(), s.energy)).collect();
    rows.into_pyobject(py).map(|b| b.into_any())
}

/// Assembled QUBO: `x^T Q x + offset` over upper-triangular entries.
#[pyclass(module = "skualloc", frozen)]
struct QuboModel {
    inner: skualloc_core::QuboModel,
}

#[pymethods]
impl QuboModel {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        skualloc_core::QuboModel::from_text(text)
            .map(|inner| QuboModel { inner })
            .map_err(value_err)
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.inner.offset
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn terms(&self) -> Vec<(usize, usize, f64)> {
        self.inner.terms().collect()
    }

    fn energy(&self, bits: Vec<u8>) -> PyResult<f64> {
        self.inner.energy(&bits).map_err(value_err)
    }

    #[pyo3(signature = (fold_offset = false))]
    fn to_text(&self, fold_offset: bool) -> String {
        self.inner.to_text(&[], fold_offset)
    }

    /// Simulated annealing; returns `[(bits, energy), ...]` in read order.
    #[pyo3(signature = (reads = 100, sweeps = None, seed = 0))]
    fn sample_sa<'py>(
        &self,
        py: Python<'py>,
        reads: usize,
        sweeps: Option<usize>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg = anneal_config(reads, sweeps, seed);
        let set = py.detach(|| solve_sa(&self.inner, &cfg)).map_err(value_err)?;
        samples(py, &set)
    }

    /// Path-integral simulated quantum annealing, same return shape as `sample_sa`.
    #[pyo3(signature = (reads = 100, sweeps = None, seed = 0, trotter_slices = 8))]
    fn sample_sqa<'py>(
        &self,
        py: Python<'py>,
        reads: usize,
        sweeps: Option<usize>,
        seed: u64,
        trotter_slices: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg = AnnealConfig {
            sqa_trotter_slices: trotter_slices,
            ..anneal_config(reads, sweeps, seed)
        };
        let set = py.detach(|| solve_sqa(&self.inner, &cfg)).map_err(value_err)?;
        samples(py, &set)
    }

    fn __repr__(&self) -> String {
        format!(
            "QuboModel(n_vars={}, entries={})",
            self.inner.n_vars(),
            self.inner.len()
        )
    }
}

/// Catalog, features, similarity and problem instance in one object.
#[pyclass(module = "skualloc", frozen)]
struct Scenario {
    inner: scenario::Scenario,
}

fn load_records(catalog: Option<&str>, skus: usize, base: usize, seed: u64) -> PyResult<Vec<SkuRecord>> {
    if let Some(path) = catalog {
        return Ok(ingest_catalog(path).map_err(value_err)?.records);
    }
    let mix = CategoryMix::default();
    let base = generate_base_catalog(base, &mix, seed).map_err(value_err)?;
    synthesize_catalog(
        &base,
        &SynthesisSpec {
            target_count: skus,
            category_mix: mix,
            seed,
        },
    )
    .map_err(value_err)
}

#[pymethods]
impl Scenario {
    /// `capacity` is a number of units or `"auto"`; `catalog` is a CSV path
    /// that replaces synthesis.
    #[new]
    #[pyo3(signature = (
        skus = 40, base = 20, seed = 7, periods = 8, slack_bits = 13, sku_target = 10,
        capacity = "auto", similarity = "quantum", catalog = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        skus: usize,
        base: usize,
        seed: u64,
        periods: usize,
        slack_bits: usize,
        sku_target: usize,
        capacity: &str,
        similarity: &str,
        catalog: Option<&str>,
    ) -> PyResult<Self> {
        let mut config = ScenarioConfig {
            periods,
            slack_bits,
            sku_target,
            capacity: capacity.parse::<CapacityRule>().map_err(value_err)?,
            ..ScenarioConfig::default()
        };
        config.kernel.method = similarity.parse().map_err(value_err)?;
        let records = load_records(catalog, skus, base, seed)?;
        let inner = scenario::build_scenario(&records, &config).map_err(value_err)?;
        Ok(Scenario { inner })
    }

    #[getter]
    fn n_skus(&self) -> usize {
        self.inner.instance.n_skus
    }

    #[getter]
    fn periods(&self) -> usize {
        self.inner.instance.periods
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.inner.instance.capacity
    }

    #[getter]
    fn top5(&self) -> Vec<usize> {
        self.inner.instance.top5().to_vec()
    }

    #[getter]
    fn demand(&self) -> Vec<f64> {
        self.inner.instance.sku.demand.clone()
    }

    #[getter]
    fn unit_margin(&self) -> Vec<f64> {
        self.inner.instance.sku.unit_margin.clone()
    }

    fn similarity(&self) -> Vec<Vec<f64>> {
        let s = &self.inner.similarity;
        (0..s.n).map(|i| (0..s.n).map(|j| s.get(i, j)).collect()).collect()
    }

    fn embedding(&self) -> Vec<Vec<f64>> {
        let e = &self.inner.embedding;
        (0..e.rows).map(|i| e.row(i).to_vec()).collect()
    }

    fn build_qubo(&self) -> PyResult<QuboModel> {
        skualloc_core::build_qubo(&self.inner.instance)
            .map(|inner| QuboModel { inner })
            .map_err(value_err)
    }

    /// Per-period selected SKU indices for a full QUBO sample or `T·N` decisions.
    fn decode(&self, bits: Vec<u8>) -> PyResult<Vec<Vec<usize>>> {
        Ok(self.plan(&bits)?.selections)
    }

    /// Runs one solver (`sa`, `sqa`, `pso`, `ga`, `aco`) and returns a dict
    /// with the objective, best bits, per-period selections and per-read values.
    #[pyo3(signature = (solver = "sa", reads = 100, sweeps = None, seed = 0, pop_size = 50, iterations = 100))]
    #[allow(clippy::too_many_arguments)]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        solver: &str,
        reads: usize,
        sweeps: Option<usize>,
        seed: u64,
        pop_size: usize,
        iterations: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kind: SolverKind = solver.parse().map_err(value_err)?;
        let anneal = anneal_config(reads, sweeps, seed);
        let meta = MetaheuristicConfig {
            pop_size,
            iterations,
            seed,
            ..MetaheuristicConfig::default()
        };
        let out = py
            .detach(|| scenario::solve_instance(&self.inner.instance, kind, &anneal, &meta))
            .map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("solver", kind.as_str())?;
        d.set_item("objective", out.objective)?;
        d.set_item("bits", out.bits)?;
        d.set_item("selections", out.plan.selections)?;
        d.set_item("per_read", out.per_read)?;
        Ok(d)
    }

    /// KPI report for a solution's bits, as a dict.
    #[pyo3(signature = (bits, redundancy_threshold = 0.0))]
    fn audit<'py>(&self, py: Python<'py>, bits: Vec<u8>, redundancy_threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        let plan = self.plan(&bits)?;
        let s = &self.inner;
        let report = compute_kpis(
            &plan,
            &s.audit_inputs,
            &s.similarity,
            &s.instance,
            &AuditConfig { redundancy_threshold },
        );
        to_json_object(py, &report)
    }

    /// Ablation summary as CSV text. `variants` defaults to all eight.
    #[pyo3(signature = (variants = None, repeats = 5, reads = 100, sweeps = None, seed = 0))]
    fn ablate(
        &self,
        py: Python<'_>,
        variants: Option<Vec<String>>,
        repeats: usize,
        reads: usize,
        sweeps: Option<usize>,
        seed: u64,
    ) -> PyResult<String> {
        let variants: Vec<AblationVariant> = match variants {
            None => AblationVariant::ALL.to_vec(),
            Some(v) => v
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_, _>>()
                .map_err(value_err)?,
        };
        let cfg = AblationConfig {
            repeats,
            base_seed: seed,
            anneal: anneal_config(reads, sweeps, seed),
            ..AblationConfig::default()
        };
        let summary = py
            .detach(|| run_ablation(&self.inner, &variants, &cfg))
            .map_err(value_err)?;
        Ok(summary.to_csv(&[]))
    }

    fn __repr__(&self) -> String {
        let i = &self.inner.instance;
        format!(
            "Scenario(n_skus={}, periods={}, capacity={})",
            i.n_skus, i.periods, i.capacity
        )
    }
}

impl Scenario {
    fn plan(&self, bits: &[u8]) -> PyResult<AllocationPlan> {
        let inst = &self.inner.instance;
        if bits.len() == inst.n_vars() {
            Ok(decode(bits, inst))
        } else if bits.len() == inst.periods * inst.n_skus {
            Ok(AllocationPlan::from_decisions(bits, inst.n_skus))
        } else {
            Err(PyValueError::new_err(format!(
                "expected {} or {} bits, got {}",
                inst.n_vars(),
                inst.periods * inst.n_skus,
                bits.len()
            )))
        }
    }
}

/// Fidelity |<psi(x)|psi(y)>|^2 of the RX feature map on 5 qubits.
#[pyfunction]
fn pair_fidelity(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    kernel::pair_fidelity(&x, &y).map_err(value_err)
}

#[pymodule]
fn skualloc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<QuboModel>()?;
    m.add_function(wrap_pyfunction!(pair_fidelity, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
