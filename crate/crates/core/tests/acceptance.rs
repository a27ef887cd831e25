//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use admga::algorithms::{initial_population, Admga, AlgorithmKind, AlgorithmSpec, ThresholdMode};
use admga::dynenv::{flip_count, DynamicsSpec, Environment, MaskState};
use admga::gacore::{Individual, OperatorConfig, Population};
use admga::harness::{
    compare, run_cell_seed, run_cells, run_rows, run_with, write_results, Cell, ExperimentPlan, OutputSet,
    RunOptions, Scenario,
};
use admga::metrics::{mean_best_of_generation, GenerationRecord, RunTrace};
use admga::rng::{algorithm_stream, environment_stream, stream};
use admga::stats::{critical_value, two_tailed_p, TestKind, Verdict, DEFAULT_ALPHA};
use admga::traps::ConcatTrap;
use admga::Bitstring;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn quiet() -> RunOptions {
    RunOptions {
        record_diversity: false,
        ..RunOptions::default()
    }
}

const GRID_RHO: [f64; 4] = [0.05, 0.3, 0.6, 0.95];

fn static_optima() -> Outcome {
    for (order, bound) in [(3, 30.0), (4, 40.0), (5, 50.0)] {
        let problem = ConcatTrap::canonical(order, 10).unwrap();
        let mut rng = stream(order as u64, 0);
        for _ in 0..20_000 {
            let x = Bitstring::random(problem.len(), &mut rng).unwrap();
            let f = problem.fitness(&x).unwrap();
            if f > bound {
                return Err(format!("order {order}: fitness {f} > {bound}"));
            }
        }
        let top = problem.fitness(&Bitstring::ones(problem.len())).unwrap();
        if top != bound {
            return Err(format!("order {order}: all-ones scores {top}, expected {bound}"));
        }
    }

    let problem = ConcatTrap::canonical(3, 10).unwrap();
    let mut spec = AlgorithmSpec::new(AlgorithmKind::Admga, OperatorConfig::with_pm(1.0 / 30.0), 30);
    spec.threshold_mode = ThresholdMode::Static;
    let mut hits = 0;
    let mut above = 0;
    for seed in 1..=30 {
        let mut alg = spec.build().unwrap();
        let out = run_with(&problem, DynamicsSpec::stationary(48_000), 30, seed, alg.as_mut(), &quiet()).unwrap();
        above += out.trace.records.iter().filter(|r| r.best_fitness > 30.0).count();
        if out.trace.records.iter().any(|r| r.best_fitness == 30.0 && r.evaluations <= 48_000) {
            hits += 1;
        }
    }
    check(
        above == 0 && hits >= 1,
        format!("no fitness above the optimum; static ADMGA reached 30 in {hits}/30 runs (need >= 1)"),
    )
}

fn severity_conservation() -> Outcome {
    let mut transitions = 0;
    for len in [30usize, 40, 50] {
        for rho in GRID_RHO {
            let expect = flip_count(rho, len);
            let nearest = (rho * len as f64).round() as usize;
            if expect != nearest {
                return Err(format!("flip count {expect} != round({rho} * {len}) = {nearest}"));
            }
            for seed in 1..=30 {
                let mut state = MaskState::for_severity(len, rho).unwrap();
                let mut rng = environment_stream(seed);
                for _ in 1..10 {
                    let before = state.mask().clone();
                    state.advance(&mut rng);
                    let d = before.hamming(state.mask()).unwrap();
                    if d != expect {
                        return Err(format!("L={len} rho={rho} seed={seed}: distance {d} != {expect}"));
                    }
                    transitions += 1;
                }
            }
        }
    }
    Ok(format!("{transitions} transitions, all at the nearest-integer distance"))
}

fn budget_fairness() -> Outcome {
    let problem = ConcatTrap::canonical(3, 10).unwrap();
    let kinds = [
        AlgorithmKind::Gga,
        AlgorithmKind::Ssga,
        AlgorithmKind::Admga,
        AlgorithmKind::RigaWorst,
        AlgorithmKind::RigaRandom,
        AlgorithmKind::Namga,
        AlgorithmKind::Pamga,
    ];
    let dynamics = DynamicsSpec::new(0.3, 2400, 10).unwrap();
    for kind in kinds {
        let mut spec = AlgorithmSpec::new(kind, OperatorConfig::with_pm(1.0 / 30.0), 30);
        spec.pool_size = Some(4);
        for seed in 1..=3 {
            let mut alg = spec.build().unwrap();
            let mut env = Environment::new(problem.clone(), dynamics, environment_stream(seed)).unwrap();
            let mut rng = algorithm_stream(seed);
            let mut pop = initial_population(30, &mut env, &mut rng).unwrap();
            env.end_generation();
            if env.evaluations() != 30 {
                return Err(format!("{}: initialization charged {}", spec.label(), env.evaluations()));
            }
            while env.evaluations() < dynamics.budget() {
                let before = env.evaluations();
                alg.step(&mut pop, &mut env, &mut rng).unwrap();
                let charged = env.evaluations() - before;
                if charged != 30 {
                    return Err(format!("{}: a generation charged {charged}", spec.label()));
                }
                env.end_generation();
            }
            if env.evaluations() != dynamics.budget() {
                return Err(format!("{}: run charged {}", spec.label(), env.evaluations()));
            }
            let out = run_with(&problem, dynamics, 30, seed, spec.build().unwrap().as_mut(), &quiet()).unwrap();
            if out.evaluations != 24_000 || out.trace.generations() != 800 {
                return Err(format!("{}: harness run charged {}", spec.label(), out.evaluations));
            }
        }
    }
    Ok("7 variants x 3 seeds: N per generation, 24000 per run".into())
}

fn fbg_oracle() -> Outcome {
    let mut rng = stream(404, 0);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let runs = rng.random_range(1..40);
        let gens = rng.random_range(1..900);
        let traces: Vec<RunTrace> = (0..runs)
            .map(|r| RunTrace {
                seed: r as u64,
                records: (0..gens)
                    .map(|g| GenerationRecord {
                        generation: g,
                        evaluations: 0,
                        period: 0,
                        best_fitness: rng.random_range(0.0..50.0),
                        mean_fitness: 0.0,
                        threshold: None,
                        diversity: 0.0,
                    })
                    .collect(),
            })
            .collect();
        let got = mean_best_of_generation(&traces).unwrap().fbg;
        let mut flat = 0.0;
        let mut count = 0usize;
        for t in &traces {
            for r in &t.records {
                flat += r.best_fitness;
                count += 1;
            }
        }
        let flat = flat / count as f64;
        worst = worst.max((got - flat).abs() / flat.abs());
    }
    check(worst <= 1e-12, format!("worst relative error {worst:.2e} over 200 random trace sets"))
}

fn ttest_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for df in [29.0, 58.0] {
        let oracle = StudentsT::new(0.0, 1.0, df).unwrap();
        for t in [0.5, 1.0, 2.0, 3.0] {
            let expect = 2.0 * (1.0 - oracle.cdf(t));
            worst = worst.max((two_tailed_p(t, df) - expect).abs());
        }
    }
    let crit = critical_value(DEFAULT_ALPHA, 58.0);
    check(
        worst <= 1e-6 && (crit - 2.0017).abs() <= 0.001,
        format!("max |p - oracle| = {worst:.2e}; critical value at df 58 = {crit:.5}"),
    )
}

fn threshold_trace() -> Outcome {
    let len = 30;
    let genome = Bitstring::random(len, &mut stream(6, 0)).unwrap();
    let pop = Population::new((0..30).map(|_| Individual::new(genome.clone(), 10.0, 0)).collect());
    let mut admga = Admga::new(OperatorConfig::with_pm(0.0), ThresholdMode::Dop);
    let initial = ThresholdMode::Dop.initial_threshold(len);
    let out = admga.create_new(&pop, &mut algorithm_stream(6)).unwrap();
    let b = &out.batches;
    let thresholds: Vec<usize> = b.iter().map(|r| r.threshold).collect();
    let failing = b.iter().filter(|r| r.failures > r.successes).count();
    let zero = b.iter().filter(|r| r.batch_successes == 0).count();
    let last = b.last().unwrap();
    let ok = initial == 7
        && b.len() == 8
        && failing == 8
        && zero == 7
        && b[..7].iter().all(|r| r.batch_successes == 0)
        && thresholds == [7, 6, 5, 4, 3, 2, 1, 0]
        && last.threshold == 0
        && last.batch_successes == 15
        && out.offspring.len() == 30
        && out.offspring.iter().all(|c| *c == genome);
    check(
        ok,
        format!(
            "thresholds {thresholds:?}, {failing} failing batches ({zero} without a mating), final batch {} matings at T=0",
            last.batch_successes
        ),
    )
}

fn table_one_direction() -> Outcome {
    let text = r#"
        [problem]
        order = 3
        blocks = 10
        [dynamics]
        rho = [0.05, 0.3, 0.6, 0.95]
        epsilon = [24000, 48000]
        periods = 10
        [run]
        runs = 30
        population = [30]
        diversity = false
        [[algorithm]]
        algo = "admga"
        [[algorithm]]
        algo = "ssga"
    "#;
    let plan = ExperimentPlan::from_toml_str(text).unwrap();
    let results = run_cells(&plan, &plan.cells(), 0).unwrap();
    let table = compare(&run_rows(&results), "admga", &["ssga".into()], TestKind::TwoSample, DEFAULT_ALPHA).unwrap();
    print!("{}", table.render_grid());
    let cells = &table.pairs[0].cells;
    let plus = cells
        .iter()
        .filter(|c| c.two_sample.map(|v| v.verdict) == Some(Verdict::Plus))
        .count();
    let symbols: String = cells.iter().map(|c| c.symbol(TestKind::TwoSample)).collect();
    check(plus >= 6, format!("ADMGA vs SSGA verdicts {symbols}: {plus}/8 plus (need >= 6)"))
}

fn oscillation() -> Outcome {
    let problem = ConcatTrap::canonical(4, 10).unwrap();
    let cell = Cell {
        spec: AlgorithmSpec::new(AlgorithmKind::Gga, OperatorConfig::with_pm(0.025), 30),
        scenario: Scenario { rho: 0.95, epsilon: 48_000 },
    };
    let mut banded = 0;
    let mut gaps = Vec::new();
    for seed in 1..=30 {
        let out = run_cell_seed(&problem, &cell, 10, seed, &quiet()).unwrap();
        let m = out.trace.period_means();
        // Period 0 starts from a random population and is left out.
        let even: Vec<f64> = (2..m.len()).step_by(2).map(|k| m[k]).collect();
        let odd: Vec<f64> = (1..m.len()).step_by(2).map(|k| m[k]).collect();
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let gap = (avg(&even) - avg(&odd)).abs();
        gaps.push(gap);
        if gap >= 1.0 {
            banded += 1;
        }
    }
    gaps.sort_by(f64::total_cmp);
    check(
        banded >= 20,
        format!(
            "{banded}/30 runs with odd/even period bands >= 1.0 apart (need >= 20); median gap {:.2}",
            gaps[15]
        ),
    )
}

fn reductions() -> Outcome {
    let problem = ConcatTrap::canonical(3, 10).unwrap();
    let ops = OperatorConfig::with_pm(1.0 / 30.0);
    for rho in GRID_RHO {
        let scenario = Scenario { rho, epsilon: 2400 };
        let gga = Cell { spec: AlgorithmSpec::new(AlgorithmKind::Gga, ops, 30), scenario };
        for kind in [AlgorithmKind::RigaWorst, AlgorithmKind::RigaRandom] {
            let mut spec = AlgorithmSpec::new(kind, ops, 30);
            spec.immigrants = Some(0);
            let riga = Cell { spec, scenario };
            for seed in 1..=5 {
                let a = run_cell_seed(&problem, &gga, 10, seed, &RunOptions::default()).unwrap();
                let b = run_cell_seed(&problem, &riga, 10, seed, &RunOptions::default()).unwrap();
                if a.trace != b.trace {
                    return Err(format!("{} with rr=0 diverges from gga at rho={rho} seed={seed}", kind.name()));
                }
            }
        }
    }
    for kind in [AlgorithmKind::Gga, AlgorithmKind::Ssga, AlgorithmKind::Admga] {
        let spec = AlgorithmSpec::new(kind, ops, 30);
        for seed in 1..=5 {
            let dynamic = run_with(
                &problem,
                DynamicsSpec::new(0.0, 2400, 10).unwrap(),
                30,
                seed,
                spec.build().unwrap().as_mut(),
                &RunOptions::default(),
            )
            .unwrap();
            let stationary = run_with(
                &problem,
                DynamicsSpec::stationary(24_000),
                30,
                seed,
                spec.build().unwrap().as_mut(),
                &RunOptions::default(),
            )
            .unwrap();
            let strip = |t: &RunTrace| -> Vec<GenerationRecord> {
                t.records.iter().map(|r| GenerationRecord { period: 0, ..r.clone() }).collect()
            };
            if strip(&dynamic.trace) != strip(&stationary.trace) {
                return Err(format!("{}: rho=0 run differs from the stationary run, seed {seed}", kind.name()));
            }
        }
    }
    Ok("riga rr=0 == gga on 40 seeded runs; rho=0 == stationary for gga, ssga, admga".into())
}

fn determinism() -> Outcome {
    let text = r#"
        [problem]
        order = 4
        blocks = 10
        [dynamics]
        rho = [0.05, 0.95]
        epsilon = [1200]
        periods = 3
        [run]
        runs = 4
        population = [30, 60]
        pm = ["1/L", "2/L"]
        dump_masks = true
        [[algorithm]]
        algo = "admga"
        [[algorithm]]
        algo = "riga_random"
        [[algorithm]]
        algo = "namga"
        n = 3
    "#;
    let plan = ExperimentPlan::from_toml_str(text).unwrap();
    let set = OutputSet { traces: true, plots: true };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut written = Vec::new();
    for (dir, jobs) in dirs.iter().zip([1, 2]) {
        let results = run_cells(&plan, &plan.cells(), jobs).unwrap();
        written.push(write_results(dir.path(), &plan, &results, set).unwrap());
    }
    if written[0].len() != written[1].len() {
        return Err("different file sets".into());
    }
    for (a, b) in written[0].iter().zip(&written[1]) {
        let rel_a = a.strip_prefix(dirs[0].path()).unwrap();
        let rel_b = b.strip_prefix(dirs[1].path()).unwrap();
        if rel_a != rel_b || std::fs::read(a).unwrap() != std::fs::read(b).unwrap() {
            return Err(format!("{} differs between runs", rel_a.display()));
        }
    }
    Ok(format!("{} files byte-identical across two executions (1 and 2 worker threads)", written[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("static optima", static_optima),
        ("severity conservation", severity_conservation),
        ("evaluation-budget fairness", budget_fairness),
        ("mean best-of-generation oracle", fbg_oracle),
        ("t-test oracle", ttest_oracle),
        ("ADMGA threshold trace", threshold_trace),
        ("ADMGA vs SSGA direction", table_one_direction),
        ("oscillation bands", oscillation),
        ("reduction identities", reductions),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| *p == id || name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
