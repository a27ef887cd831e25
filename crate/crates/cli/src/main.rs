use std::path::{Path, PathBuf};
use std::process::ExitCode;

use admga::harness::{
    compare, read_runs, run_cell_seed, run_plan, write_results, write_verdicts, ExperimentPlan, OutputSet,
    ScenarioResult,
};
use admga::stats::{TestKind, DEFAULT_ALPHA};
use admga::Error;
use clap::{Args, Parser, Subcommand};

/// Benchmark ADMGA and companion genetic algorithms on dynamic trap functions.
#[derive(Parser)]
#[command(name = "admga-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PlanArgs {
    /// Experiment plan (TOML).
    #[arg(long)]
    plan: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every CPU.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Use seeds seed_base, seed_base + 1, ... instead of the plan's seeds.
    #[arg(long)]
    seed_base: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a plan and write summaries, per-run traces and plot data.
    Run(PlanArgs),
    /// Run a plan and write summaries only.
    Sweep(PlanArgs),
    /// Compare algorithms from one or more runs.csv files.
    Compare {
        /// runs.csv files written by `run` or `sweep`.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Algorithm label in the first position of every comparison.
        #[arg(long)]
        first: String,
        /// Opponent labels; repeat for several.
        #[arg(long, required = true)]
        second: Vec<String>,
        /// Base verdicts on the paired test instead of the two-sample test.
        #[arg(long)]
        paired_ttest: bool,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Also write verdicts.csv and verdicts.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run one seed of one plan cell and print its trace.
    Replay {
        #[arg(long)]
        plan: PathBuf,
        /// Index into the plan's expanded cell list.
        #[arg(long, default_value_t = 0)]
        cell: usize,
        #[arg(long)]
        seed: u64,
        /// Also print the mask of every period.
        #[arg(long)]
        masks: bool,
    },
}

fn print_summary(results: &[ScenarioResult]) {
    println!("{:<24} {:>5} {:>10} {:>6} {:>8} {:>10} {:>8}", "algorithm", "N", "pm", "rho", "epsilon", "fbg", "std");
    for r in results {
        println!(
            "{:<24} {:>5} {:>10.6} {:>6} {:>8} {:>10.4} {:>8.4}",
            r.cell.spec.label(),
            r.cell.spec.population,
            r.cell.spec.ops.pm,
            r.cell.scenario.rho,
            r.cell.scenario.epsilon,
            r.summary.fbg,
            r.summary.std_across_runs()
        );
    }
}

fn run_and_write(args: &PlanArgs, set: OutputSet) -> admga::Result<()> {
    let plan = ExperimentPlan::load_with_seed_base(&args.plan, args.seed_base)?;
    let results = run_plan(&plan, args.jobs)?;
    let written = write_results(&args.out, &plan, &results, set)?;
    print_summary(&results);
    eprintln!("wrote {} files under {}", written.len(), args.out.display());
    Ok(())
}

fn replay(plan_path: &Path, cell: usize, seed: u64, masks: bool) -> admga::Result<()> {
    let mut plan = ExperimentPlan::load(plan_path)?;
    plan.options.dump_masks = masks;
    let cells = plan.cells();
    let chosen = cells.get(cell).ok_or_else(|| {
        Error::Config(format!("cell index {cell} out of range; the plan has {} cells", cells.len()))
    })?;
    let out = run_cell_seed(&plan.problem, chosen, plan.periods, seed, &plan.options)?;
    println!("# cell {cell}: {}", chosen.id());
    println!("# seed {seed}, {} evaluations", out.evaluations);
    println!("generation,evaluations,period,best_fitness,mean_fitness,threshold,diversity");
    for r in &out.trace.records {
        println!(
            "{},{},{},{},{},{},{}",
            r.generation,
            r.evaluations,
            r.period,
            r.best_fitness,
            r.mean_fitness,
            r.threshold.map(|t| t.to_string()).unwrap_or_default(),
            r.diversity
        );
    }
    for (k, m) in out.masks.iter().flatten().enumerate() {
        println!("# mask {k}: {m}");
    }
    Ok(())
}

fn execute(cli: Cli) -> admga::Result<()> {
    match cli.command {
        Command::Run(args) => run_and_write(&args, OutputSet { traces: true, plots: true }),
        Command::Sweep(args) => run_and_write(&args, OutputSet::default()),
        Command::Compare {
            runs,
            first,
            second,
            paired_ttest,
            alpha,
            out,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1)")));
            }
            let mut rows = Vec::new();
            for path in &runs {
                rows.extend(read_runs(path)?);
            }
            let kind = if paired_ttest { TestKind::Paired } else { TestKind::TwoSample };
            let table = compare(&rows, &first, &second, kind, alpha)?;
            print!("{}", table.render_grid());
            if let Some(dir) = out {
                write_verdicts(&dir, &table)?;
            }
            Ok(())
        }
        Command::Replay { plan, cell, seed, masks } => replay(&plan, cell, seed, masks),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
