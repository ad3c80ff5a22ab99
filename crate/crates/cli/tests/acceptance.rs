//! One line per acceptance criterion; exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skualloc::ablation::{run_ablation, AblationConfig, AblationVariant};
use skualloc::audit::capacity_audit;
use skualloc::data::synth::CategoryMix;
use skualloc::data::{generate_base_catalog, synthesize_catalog, SynthesisSpec};
use skualloc::kernel::pair_fidelity;
use skualloc::qubo::{decode, InstanceParams, SkuTerms};
use skualloc::scenario::{build_scenario, desk_catalog, Scenario, ScenarioConfig};
use skualloc::solvers::{solve_aco, solve_ga, solve_pso, solve_sa, solve_sqa, AnnealConfig, MetaheuristicConfig};
use skualloc::{build_qubo, ProblemInstance, SimilarityMatrix, Weights};

type Outcome = (bool, String);

fn desk() -> Scenario {
    build_scenario(&desk_catalog(40, 7).unwrap(), &ScenarioConfig::desk()).unwrap()
}

fn desk_anneal(seed: u64) -> AnnealConfig {
    AnnealConfig {
        num_reads: 500,
        sweeps_per_read: Some(1000),
        seed,
        ..Default::default()
    }
}

fn kernel_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let closed: f64 = x.iter().zip(&y).map(|(a, b)| ((a - b) / 2.0).cos().powi(2)).product();
        worst = worst.max((pair_fidelity(&x, &y).unwrap() - closed).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-10 && secs < 5.0,
        format!("max |error| {worst:.1e} over 1000 pairs, {secs:.2} s"),
    )
}

fn brute_force_optimality() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..20 {
        let inst = tiny_instance(8, 2, 3, 1000 + seed, Weights::qubo_defaults());
        let model = build_qubo(&inst).unwrap();
        let (q0, _) = qubo_minima(&model, 0.0);
        let tol = 1e-12 * q0.abs().max(1.0);
        let (qmin, qset) = qubo_minima(&model, tol);
        let (hmin, hset) = hamiltonian_minima(&inst, tol);
        if model.n_vars() != 22 || !rel_close(qmin, hmin, 1e-6) || qset != hset {
            failures.push(seed);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        failures.is_empty() && secs < 600.0,
        format!("20 instances of 22 variables, mismatches {failures:?}, {secs:.1} s"),
    )
}

fn slack_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut bad = 0;
    for b in 1..=6usize {
        for _ in 0..5 {
            let n = 5;
            let demand: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(1..=40))).collect();
            let capacity = f64::from(rng.gen_range(0..=80));
            let sku = SkuTerms {
                unit_margin: (0..n).map(|_| rng.gen_range(1.0..5.0)).collect(),
                demand: demand.clone(),
                unified_risk: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
                inventory_risk: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
                defect_risk: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
            };
            let params = InstanceParams {
                periods: 1,
                slack_bits: b,
                capacity,
                sku_target: 3,
                weights: Weights::qubo_defaults(),
            };
            let with = ProblemInstance::new(params, sku, SimilarityMatrix::identity(n)).unwrap();
            let without = with.with_weights(Weights {
                capacity: 0.0,
                ..with.weights
            });
            let lambda_c = with.weights.capacity;
            let (full, base) = (build_qubo(&with).unwrap(), build_qubo(&without).unwrap());
            let top = ((1u64 << b) - 1) as f64;
            let tol = 1e-12 * (full.offset.abs() + full.terms().map(|t| t.2.abs()).sum::<f64>());
            for x in 0u64..1 << n {
                let residual = capacity - (0..n).filter(|&i| (x >> i) & 1 == 1).map(|i| demand[i]).sum::<f64>();
                let penalty = (0u64..1 << b)
                    .map(|s| {
                        let mut bits = to_bits(x, n);
                        bits.extend(to_bits(s, b));
                        full.energy(&bits).unwrap() - base.energy(&bits).unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                let gap = if residual < 0.0 {
                    -residual
                } else {
                    (residual - top).max(0.0)
                };
                let expected = gap * gap * lambda_c;
                checked += 1;
                if (penalty - expected).abs() > tol {
                    bad += 1;
                }
            }
        }
    }
    (
        bad == 0,
        format!("{checked} decision patterns over B = 1..6 with the default weights, {bad} mismatches"),
    )
}

fn solver_quality() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, sqa) in [("SA", false), ("SQA", true)] {
        let mut rates = Vec::new();
        let mut slowest = 0.0f64;
        for seed in 0..10 {
            let model = integer_qubo(15, 0.4, seed);
            let opt = qubo_brute_force(&model);
            let cfg = AnnealConfig {
                seed: 1,
                ..Default::default()
            };
            let start = Instant::now();
            let set = if sqa {
                solve_sqa(&model, &cfg)
            } else {
                solve_sa(&model, &cfg)
            }
            .unwrap();
            slowest = slowest.max(start.elapsed().as_secs_f64());
            let hits = set.samples.iter().filter(|s| (s.energy - opt).abs() < 1e-9).count();
            ok &= hits * 100 >= 95 * set.len() && set.len() == 500;
            rates.push(hits);
        }
        ok &= slowest < 120.0;
        parts.push(format!("{name} hits/500 {rates:?} (slowest {slowest:.2} s)"));
    }
    (ok, parts.join("; "))
}

fn desk_constraints() -> Outcome {
    let s = desk();
    let model = build_qubo(&s.instance).unwrap();
    let set = solve_sa(&model, &desk_anneal(0)).unwrap();
    let plan = decode(&set.best().bits, &s.instance);
    let (violations, excess) = capacity_audit(&plan, &s.instance);
    let top5 = top5_by_total_margin(&s.instance.sku);
    let present = plan
        .selections
        .iter()
        .filter(|sel| top5.iter().all(|i| sel.contains(i)))
        .count();
    (
        violations == 0 && present == 8,
        format!(
            "C = {}, violations {violations} (excess {excess}), top-5 complete in {present}/8 periods",
            s.instance.capacity
        ),
    )
}

fn ablation_directions() -> Outcome {
    let s = desk();
    let cfg = AblationConfig {
        repeats: 5,
        base_seed: 0,
        anneal: desk_anneal(0),
        ..Default::default()
    };
    let summary = run_ablation(&s, &AblationVariant::ALL, &cfg).unwrap();
    let row = |v| summary.row(v).unwrap();
    let (full, open, top5, nosim) = (
        row(AblationVariant::Full),
        row(AblationVariant::NoCapacity),
        row(AblationVariant::NoTop5),
        row(AblationVariant::NoSimilarity),
    );
    let offenders: Vec<&str> = summary
        .rows
        .iter()
        .filter(|r| r.variant != AblationVariant::NoCapacity)
        .filter(|r| r.capacity_violations.mean != 0.0 || r.failures > 0)
        .map(|r| r.variant.as_str())
        .collect();
    let others_feasible = offenders.is_empty();
    let checks = [
        open.total_profit.mean > full.total_profit.mean,
        open.capacity_violations.mean == 8.0,
        others_feasible,
        top5.total_profit.mean < full.total_profit.mean,
        nosim.redundant_pairs.mean >= full.redundant_pairs.mean,
    ];
    let detail = format!(
        "profit Full {:.0} NoCapacity {:.0} NoTop5 {:.0}; violations NoCapacity {}, other variants with violations {:?}; redundant pairs NoSimilarity {} Full {}",
        full.total_profit.mean,
        open.total_profit.mean,
        top5.total_profit.mean,
        open.capacity_violations.mean,
        offenders,
        nosim.redundant_pairs.mean,
        full.redundant_pairs.mean
    );
    (checks.iter().all(|&c| c), detail)
}

fn metaheuristic_contracts() -> Outcome {
    let inst = desk().instance;
    let top5 = top5_by_total_margin(&inst.sku);
    let n = inst.n_skus;
    let mut problems = Vec::new();
    for seed in 0..10 {
        let cfg = MetaheuristicConfig {
            seed,
            ..Default::default()
        };
        let runs = [
            ("PSO", solve_pso(&inst, &cfg).unwrap(), true),
            ("GA", solve_ga(&inst, &cfg).unwrap(), false),
            ("ACO", solve_aco(&inst, &cfg).unwrap(), false),
        ];
        for (name, sol, swarm) in runs {
            if !sol.bits.chunks(n).all(|x| top5.iter().all(|&i| x[i] == 1)) {
                problems.push(format!("{name}/{seed} top-5"));
            }
            if !swarm {
                let over = sol
                    .bits
                    .chunks(n)
                    .any(|x| (0..n).filter(|&i| x[i] == 1).map(|i| inst.sku.demand[i]).sum::<f64>() > inst.capacity);
                if over {
                    problems.push(format!("{name}/{seed} capacity"));
                }
            }
            if !rel_close(sol.fitness, fitness_oracle(&sol.bits, &inst, &cfg.weights, swarm), 1e-9) {
                problems.push(format!("{name}/{seed} fitness"));
            }
        }
    }
    (
        problems.is_empty(),
        format!("30 runs over 10 seeds, problems {problems:?}"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_skualloc");
    let desk_conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.conf");
    let dir = tempfile::tempdir().unwrap();
    let conf = desk_conf.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["generate"],
        vec!["generate", "--config", conf],
        vec!["features", "--config", conf],
        vec!["kernel", "--config", conf],
        vec!["kernel", "--config", conf, "--similarity", "cosine"],
        vec!["build", "--config", conf],
        vec!["solve", "--config", conf, "--reads", "50", "--solver", "sa"],
        vec!["solve", "--config", conf, "--reads", "20", "--solver", "sqa"],
        vec!["solve", "--config", conf, "--solver", "pso", "--set", "iterations=20"],
        vec!["solve", "--config", conf, "--solver", "ga", "--set", "iterations=20"],
        vec!["solve", "--config", conf, "--solver", "aco", "--set", "iterations=20"],
        vec!["pipeline", "--config", conf, "--reads", "50", "--seed", "4"],
        vec!["audit", "--config", conf, "--reads", "50", "--seed", "4"],
        vec!["ablate", "--config", conf, "--reads", "10", "--repeats", "2"],
    ];
    let mut compared = 0;
    let mut differing = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let outs: Vec<_> = ["a", "b"]
            .iter()
            .map(|side| dir.path().join(format!("{k}{side}")))
            .collect();
        for out in &outs {
            if k == 12 {
                std::fs::create_dir_all(out).unwrap();
                std::fs::copy(dir.path().join("11a/solution.json"), out.join("solution.json")).unwrap();
            }
            let status = Command::new(bin)
                .args(args)
                .arg("--out-dir")
                .arg(out)
                .output()
                .unwrap()
                .status;
            if !status.success() {
                differing.push(format!("{} failed", args[0]));
            }
        }
        for entry in std::fs::read_dir(&outs[0]).unwrap() {
            let name = entry.unwrap().file_name();
            compared += 1;
            if std::fs::read(outs[0].join(&name)).ok() != std::fs::read(outs[1].join(&name)).ok() {
                differing.push(format!("{} {}", args[0], name.to_string_lossy()));
            }
        }
    }
    (
        differing.is_empty() && compared > 0,
        format!(
            "{} command runs, {compared} artifacts compared byte for byte, differing {differing:?}",
            runs.len()
        ),
    )
}

fn scale_smoke() -> Outcome {
    let start = Instant::now();
    let mix = CategoryMix::default();
    let base = generate_base_catalog(100, &mix, 0).unwrap();
    let records = synthesize_catalog(
        &base,
        &SynthesisSpec {
            target_count: 500,
            category_mix: mix,
            seed: 0,
        },
    )
    .unwrap();
    let s = build_scenario(&records, &ScenarioConfig::default()).unwrap();
    let model = build_qubo(&s.instance).unwrap();
    let built = start.elapsed().as_secs_f64();
    let cfg = AnnealConfig {
        num_reads: 50,
        sweeps_per_read: Some(2000),
        ..Default::default()
    };
    let set = solve_sa(&model, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    (
        model.n_vars() == 4104 && model.len() > 1_000_000 && set.len() == 50 && secs < 1800.0,
        format!(
            "{} variables, {} entries, build {built:.1} s, build + 50 reads {secs:.1} s",
            model.n_vars(),
            model.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("kernel oracle equivalence", kernel_oracle),
        ("QUBO brute-force optimality", brute_force_optimality),
        ("slack correctness", slack_correctness),
        ("solver quality", solver_quality),
        ("desk-scale constraint behavior", desk_constraints),
        ("ablation directionality", ablation_directions),
        ("metaheuristic contracts", metaheuristic_contracts),
        ("determinism", determinism),
        ("scale smoke test", scale_smoke),
    ];
    let mut failed = 0;
    for (k, (title, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {}: {title}: {detail}",
            k + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
