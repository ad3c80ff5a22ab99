//! Multi-period SKU allocation as a QUBO.
//!
//! The pipeline runs catalog ingestion and feature engineering ([`data`]),
//! PCA plus a fidelity kernel for pairwise similarity ([`kernel`]), slack-bit
//! QUBO assembly ([`qubo`]), sampling or metaheuristic search ([`solvers`]),
//! and KPI auditing ([`audit`]). [`ablation`] repeats the whole thing with
//! individual terms switched off.

pub mod ablation;
pub mod audit;
pub mod data;
pub mod kernel;
pub mod qubo;
pub mod rng;
pub mod scenario;
pub mod solvers;

pub use audit::{AllocationPlan, KpiReport};
pub use kernel::{SimilarityMatrix, SimilarityMethod};
pub use qubo::{build_qubo, ProblemInstance, QuboModel, Weights};
