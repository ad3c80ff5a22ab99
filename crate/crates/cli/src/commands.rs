use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use skualloc::ablation::{run_ablation, AblationConfig};
use skualloc::audit::{compute_kpis, selected_similarity_csv, tune_penalties, AllocationPlan, AuditConfig};
use skualloc::data::synth::CategoryMix;
use skualloc::data::{
    generate_base_catalog, ingest_catalog, synthesize_catalog, write_catalog, write_features, SkuRecord, SynthesisSpec,
};
use skualloc::qubo::decode;
use skualloc::scenario::{build_scenario, solve_instance, Scenario, SolveOutcome};
use skualloc::{build_qubo, ProblemInstance};

use crate::config::RunConfig;
use crate::CliError;

pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub command: &'static str,
    written: Vec<PathBuf>,
}

impl Ctx {
    pub fn new(config: RunConfig, out_dir: PathBuf, command: &'static str) -> Self {
        Ctx {
            config,
            out_dir,
            command,
            written: Vec::new(),
        }
    }

    fn header(&self) -> Vec<String> {
        self.config.header(self.command)
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, mut value: Value) -> Result<(), CliError> {
        if let Value::Object(map) = &mut value {
            map.insert("command".into(), json!(self.command));
            map.insert("config".into(), self.config.to_json());
        }
        let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn load_records(config: &RunConfig) -> Result<Vec<SkuRecord>, CliError> {
    if let Some(path) = &config.input {
        return Ok(ingest_catalog(path)?.records);
    }
    let mix = CategoryMix::default();
    let seed = config.data_seed();
    let base = generate_base_catalog(config.base, &mix, seed)?;
    Ok(synthesize_catalog(
        &base,
        &SynthesisSpec {
            target_count: config.skus,
            category_mix: mix,
            seed,
        },
    )?)
}

fn scenario(config: &RunConfig) -> Result<Scenario, CliError> {
    Ok(build_scenario(&load_records(config)?, &config.scenario)?)
}

pub fn generate(ctx: &mut Ctx) -> Result<(), CliError> {
    let records = load_records(&ctx.config)?;
    let mut buf = Vec::new();
    write_catalog(&mut buf, &records, &ctx.header())?;
    ctx.write("catalog.csv", buf)
}

fn write_features_files(ctx: &mut Ctx, s: &Scenario) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_features(&mut buf, &s.features.features, &ctx.header())?;
    ctx.write("features.csv", buf)?;
    let embedding = s.embedding.to_csv(&ctx.header());
    ctx.write("embedding.csv", embedding)
}

pub fn features(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = scenario(&ctx.config)?;
    write_features_files(ctx, &s)
}

pub fn kernel(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = scenario(&ctx.config)?;
    let csv = s.similarity.to_csv(&ctx.header());
    ctx.write("similarity.csv", csv)
}

fn write_qubo(ctx: &mut Ctx, instance: &ProblemInstance) -> Result<(), CliError> {
    let model = build_qubo(instance)?;
    let text = model.to_text(&ctx.header(), ctx.config.fold_offset);
    ctx.write("qubo.txt", text)
}

pub fn build(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = scenario(&ctx.config)?;
    write_qubo(ctx, &s.instance)
}

fn solution_json(config: &RunConfig, out: &SolveOutcome, rounds: usize) -> Value {
    json!({
        "solver": out.solver.as_str(),
        "seed": config.seed,
        "best_energy_or_fitness": out.objective,
        "best_bits": rle_encode(&out.bits),
        "n_bits": out.bits.len(),
        "per_read_energies": out.per_read,
        "tuning_rounds": rounds,
    })
}

pub fn solve(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = scenario(&ctx.config)?;
    let out = solve_instance(&s.instance, ctx.config.solver, &ctx.config.anneal(), &ctx.config.meta())?;
    let value = solution_json(&ctx.config, &out, 1);
    ctx.write_json("solution.json", value)
}

fn audit_config(config: &RunConfig) -> AuditConfig {
    AuditConfig {
        redundancy_threshold: config.redundancy_threshold,
    }
}

fn write_audit(ctx: &mut Ctx, s: &Scenario, instance: &ProblemInstance, plan: &AllocationPlan) -> Result<(), CliError> {
    let report = compute_kpis(
        plan,
        &s.audit_inputs,
        &s.similarity,
        instance,
        &audit_config(&ctx.config),
    );
    let value = json!({ "report": report, "selections": plan.selections });
    ctx.write_json("kpi.json", value)?;
    let util = report.utilization_csv(&ctx.header());
    ctx.write("utilization.csv", util)?;
    let sub = selected_similarity_csv(plan, &s.similarity, &ctx.header());
    ctx.write("selected_similarity.csv", sub)
}

pub fn audit(ctx: &mut Ctx, solution: Option<PathBuf>) -> Result<(), CliError> {
    let path = solution.unwrap_or_else(|| ctx.out_dir.join("solution.json"));
    let bits = read_solution_bits(&path)?;
    let s = scenario(&ctx.config)?;
    let plan = plan_from_bits(&bits, &s.instance)?;
    write_audit(ctx, &s, &s.instance, &plan)
}

pub fn pipeline(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = scenario(&ctx.config)?;
    write_features_files(ctx, &s)?;
    let sim = s.similarity.to_csv(&ctx.header());
    ctx.write("similarity.csv", sim)?;

    let (anneal, meta, solver) = (ctx.config.anneal(), ctx.config.meta(), ctx.config.solver);
    let audit_cfg = audit_config(&ctx.config);
    let mut last = None;
    let outcome = tune_penalties(
        &s.instance,
        ctx.config.tune_rounds,
        |inst| {
            let out = solve_instance(inst, solver, &anneal, &meta)?;
            let plan = out.plan.clone();
            last = Some(out);
            Ok::<_, CliError>(plan)
        },
        |plan, inst| compute_kpis(plan, &s.audit_inputs, &s.similarity, inst, &audit_cfg),
    )?;
    let out = last.expect("tune_penalties solves at least once");

    write_qubo(ctx, &outcome.instance)?;
    let value = solution_json(&ctx.config, &out, outcome.rounds);
    ctx.write_json("solution.json", value)?;
    write_audit(ctx, &s, &outcome.instance, &out.plan)
}

pub fn ablate(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = scenario(&ctx.config)?;
    let c = &ctx.config;
    let cfg = AblationConfig {
        repeats: c.repeats,
        base_seed: c.seed,
        solver: c.solver,
        anneal: c.anneal(),
        meta: c.meta(),
        audit: audit_config(c),
    };
    let summary = run_ablation(&s, &c.variants, &cfg)?;
    let csv = summary.to_csv(&ctx.header());
    ctx.write("ablation.csv", csv)?;
    let value = json!({ "cells": summary.cells });
    ctx.write_json("ablation_cells.json", value)
}

fn plan_from_bits(bits: &[u8], instance: &ProblemInstance) -> Result<AllocationPlan, CliError> {
    if bits.len() == instance.n_vars() {
        Ok(decode(bits, instance))
    } else if bits.len() == instance.periods * instance.n_skus {
        Ok(AllocationPlan::from_decisions(bits, instance.n_skus))
    } else {
        Err(CliError::Arg(format!(
            "solution has {} bits; this configuration needs {} (QUBO) or {} (decisions)",
            bits.len(),
            instance.n_vars(),
            instance.periods * instance.n_skus
        )))
    }
}

fn read_solution_bits(path: &Path) -> Result<Vec<u8>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Arg(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Arg(format!("{}: {e}", path.display())))?;
    let rle = v
        .get("best_bits")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Arg(format!("{}: missing best_bits", path.display())))?;
    rle_decode(rle)
}

/// Run-length encoding: comma-separated `<bit>*<count>` runs.
pub fn rle_encode(bits: &[u8]) -> String {
    let mut runs: Vec<String> = Vec::new();
    let mut i = 0;
    while i < bits.len() {
        let b = bits[i];
        let j = bits[i..].iter().position(|&x| x != b).map_or(bits.len(), |k| i + k);
        runs.push(format!("{b}*{}", j - i));
        i = j;
    }
    runs.join(",")
}

pub fn rle_decode(s: &str) -> Result<Vec<u8>, CliError> {
    let mut bits = Vec::new();
    for run in s.split(',').filter(|r| !r.is_empty()) {
        let bad = || CliError::Arg(format!("bad run {run:?} in best_bits"));
        let (b, n) = run.split_once('*').ok_or_else(bad)?;
        let b: u8 = b.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        if b > 1 {
            return Err(bad());
        }
        bits.extend(std::iter::repeat_n(b, n));
    }
    Ok(bits)
}
