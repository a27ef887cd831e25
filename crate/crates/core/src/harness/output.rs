//! Deterministic on-disk artifacts: CSV tables, plot data and mask dumps.
//!
//! Every file opens with `#` comment lines echoing the settings the numbers
//! depend on. Nothing time- or host-dependent is written, so identical
//! plans produce byte-identical files.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::compare::{run_rows, RunRow, VerdictTable};
use crate::harness::plan::ExperimentPlan;
use crate::harness::runner::ScenarioResult;
use crate::metrics::{averaged_fbg, EXACT_DIVERSITY_LIMIT};

fn describe_seeds(seeds: &[u64]) -> String {
    let consecutive = seeds.windows(2).all(|w| w[1] == w[0] + 1);
    match (seeds.first(), seeds.last()) {
        (Some(a), Some(b)) if consecutive && seeds.len() > 2 => format!("{a}..={b}"),
        _ => seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    }
}

/// Comment lines shared by every output file of a plan.
pub fn metadata_lines(plan: &ExperimentPlan) -> Vec<String> {
    let spec = plan.problem.spec();
    let mut selections: Vec<&str> = plan.algorithms.iter().map(|a| a.template.ops.selection.name()).collect();
    selections.dedup();
    let ops = plan.algorithms[0].template.ops;
    vec![
        format!(
            "problem: order-{} trap x {} blocks, L = {}, a = {}, b = {}, z = {}",
            spec.order(),
            plan.problem.blocks(),
            plan.problem.len(),
            spec.local_optimum(),
            spec.global_optimum(),
            spec.slope_change()
        ),
        format!("periods: {}", plan.periods),
        format!("seeds: {}", describe_seeds(&plan.seeds)),
        format!(
            "selection: {} (binary tournament draws with replacement, ties by coin flip)",
            selections.join(",")
        ),
        format!("crossover: uniform, pc = {}", ops.pc),
        format!("elitism: {} best carried into the next population before it is evaluated", ops.elitism),
        "mask: M(0) = 0; each change flips round(rho * L) positions (halves up) drawn without replacement".into(),
        "rng: ChaCha8 per seed; stream 1 environment, 2 algorithm, 3 diversity sampling".into(),
        "budget: epsilon * periods evaluations; record 0 is the initial population; one record per N evaluations".into(),
        "admga: batch counters accumulate within a generation; offspring beyond free slots dropped in production order".into(),
        "riga: rr defaults to round(4N / 30); immigrants replace parents before mating".into(),
        format!(
            "diversity: exact mean pairwise Hamming distance for N <= {EXACT_DIVERSITY_LIMIT}, otherwise {} sampled pairs",
            plan.options.diversity_pairs
        ),
        format!("t-test: {}", plan.options.test_kind.name()),
    ]
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_comments(out: &mut impl Write, path: &Path, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Writes `#` comments, then a CSV header and records.
pub fn write_csv<I>(path: &Path, comments: &[String], header: &[&str], records: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = create(path)?;
    write_comments(&mut out, path, comments)?;
    let csv_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_summary(path: &Path, plan: &ExperimentPlan, results: &[ScenarioResult]) -> Result<()> {
    let records = results.iter().map(|r| {
        vec![
            r.cell.spec.label(),
            r.cell.spec.population.to_string(),
            r.cell.spec.ops.pm.to_string(),
            r.cell.scenario.rho.to_string(),
            r.cell.scenario.epsilon.to_string(),
            r.summary.fbg.to_string(),
            r.summary.std_across_runs().to_string(),
        ]
    });
    write_csv(
        path,
        &metadata_lines(plan),
        &["algorithm", "N", "pm", "rho", "epsilon", "fbg_mean", "fbg_std_across_runs"],
        records,
    )
}

pub fn write_runs(path: &Path, plan: &ExperimentPlan, results: &[ScenarioResult]) -> Result<()> {
    let records = run_rows(results).into_iter().map(|r| {
        vec![
            r.algorithm,
            r.population.to_string(),
            r.pm.to_string(),
            r.rho.to_string(),
            r.epsilon.to_string(),
            r.seed.to_string(),
            r.run_mean.to_string(),
        ]
    });
    write_csv(
        path,
        &metadata_lines(plan),
        &["algorithm", "N", "pm", "rho", "epsilon", "seed", "run_mean"],
        records,
    )
}

/// Mean best-of-generation averaged over severities, per algorithm
/// configuration and speed.
pub fn write_averaged(path: &Path, plan: &ExperimentPlan, results: &[ScenarioResult]) -> Result<()> {
    let mut records = Vec::new();
    let mut i = 0;
    while i < results.len() {
        let head = &results[i];
        let same = |r: &ScenarioResult| {
            r.cell.spec == head.cell.spec && r.cell.scenario.epsilon == head.cell.scenario.epsilon
        };
        let mut j = i;
        while j < results.len() && same(&results[j]) {
            j += 1;
        }
        let summaries: Vec<_> = results[i..j].iter().map(|r| r.summary.clone()).collect();
        records.push(vec![
            head.cell.spec.label(),
            head.cell.spec.population.to_string(),
            head.cell.spec.ops.pm.to_string(),
            head.cell.scenario.epsilon.to_string(),
            (j - i).to_string(),
            averaged_fbg(&summaries)?.to_string(),
        ]);
        i = j;
    }
    write_csv(
        path,
        &metadata_lines(plan),
        &["algorithm", "N", "pm", "epsilon", "scenarios", "averaged_fbg"],
        records,
    )
}

pub fn write_traces(dir: &Path, plan: &ExperimentPlan, results: &[ScenarioResult]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for r in results {
        for run in &r.runs {
            let path = dir.join(r.cell.id()).join(format!("seed_{}.csv", run.trace.seed));
            let records = run.trace.records.iter().map(|g| {
                vec![
                    g.generation.to_string(),
                    g.evaluations.to_string(),
                    g.period.to_string(),
                    g.best_fitness.to_string(),
                    g.mean_fitness.to_string(),
                    g.threshold.map(|t| t.to_string()).unwrap_or_default(),
                    if g.diversity.is_nan() { String::new() } else { g.diversity.to_string() },
                ]
            });
            write_csv(
                &path,
                &metadata_lines(plan),
                &["generation", "evaluations", "period", "best_fitness", "mean_fitness", "threshold", "diversity"],
                records,
            )?;
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Gnuplot-style data: per generation the mean, minimum and maximum of the
/// best fitness across runs.
pub fn write_plots(dir: &Path, plan: &ExperimentPlan, results: &[ScenarioResult]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for r in results {
        let path = dir.join(format!("{}.dat", r.cell.id()));
        let mut out = create(&path)?;
        let mut comments = metadata_lines(plan);
        comments.push("generation best_fitness_mean best_fitness_min best_fitness_max".into());
        write_comments(&mut out, &path, &comments)?;
        for g in 0..r.summary.generations {
            let values: Vec<f64> = r.runs.iter().map(|run| run.trace.records[g].best_fitness).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            writeln!(out, "{g} {mean} {min} {max}").map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// One file per (scenario, seed), one `0`/`1` line per period.
pub fn write_masks(dir: &Path, results: &[ScenarioResult]) -> Result<Vec<PathBuf>> {
    let mut seen = BTreeSet::new();
    let mut paths = Vec::new();
    for r in results {
        for run in &r.runs {
            let Some(masks) = &run.masks else { continue };
            let name = format!(
                "rho{}_eps{}_seed{}.txt",
                r.cell.scenario.rho, r.cell.scenario.epsilon, run.trace.seed
            );
            if !seen.insert(name.clone()) {
                continue;
            }
            let path = dir.join(name);
            let mut out = create(&path)?;
            for m in masks {
                writeln!(out, "{m}").map_err(|e| Error::io(&path, e))?;
            }
            out.flush().map_err(|e| Error::io(&path, e))?;
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Which optional artifacts to produce besides the summary tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutputSet {
    pub traces: bool,
    pub plots: bool,
}

/// Writes `summary.csv`, `runs.csv`, `averaged.csv` and the optional
/// artifacts under `dir`. Returns every path written.
pub fn write_results(dir: &Path, plan: &ExperimentPlan, results: &[ScenarioResult], set: OutputSet) -> Result<Vec<PathBuf>> {
    let mut paths = vec![dir.join("summary.csv"), dir.join("runs.csv"), dir.join("averaged.csv")];
    write_summary(&paths[0], plan, results)?;
    write_runs(&paths[1], plan, results)?;
    write_averaged(&paths[2], plan, results)?;
    if set.traces {
        paths.extend(write_traces(&dir.join("traces"), plan, results)?);
    }
    if set.plots {
        paths.extend(write_plots(&dir.join("plots"), plan, results)?);
    }
    if plan.options.dump_masks {
        paths.extend(write_masks(&dir.join("masks"), results)?);
    }
    Ok(paths)
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRow>> {
    let parse_err = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(parse_err)?;
    reader.deserialize().collect::<std::result::Result<Vec<RunRow>, _>>().map_err(parse_err)
}

/// Writes `verdicts.csv` and `verdicts.txt` (the text grid) under `dir`.
pub fn write_verdicts(dir: &Path, table: &VerdictTable) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join("verdicts.csv");
    let comments = vec![
        format!("t-test: {} (both reported), alpha = {}", table.kind.name(), table.alpha),
        "each algorithm uses its best (N, pm) per epsilon, ranked by fbg averaged over rho".into(),
    ];
    write_csv(&csv_path, &comments, &VerdictTable::CSV_HEADER, table.csv_records())?;
    let txt_path = dir.join("verdicts.txt");
    let mut out = create(&txt_path)?;
    out.write_all(table.render_grid().as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&txt_path, e))?;
    Ok(vec![csv_path, txt_path])
}
