//! Experiment harness: plan files, parallel execution, summaries, pairwise
//! comparison and on-disk output.

mod compare;
mod output;
mod plan;
mod runner;

pub use compare::{compare, run_rows, CellComparison, Config, PairComparison, RunRow, VerdictTable, HOLE};
pub use output::{
    metadata_lines, read_runs, write_averaged, write_csv, write_masks, write_plots, write_results, write_runs,
    write_summary, write_traces, write_verdicts, OutputSet,
};
pub use plan::{default_pm_grid, AlgorithmEntry, Cell, ExperimentPlan, PmValue, RunOptions, Scenario};
pub use runner::{run_cell_seed, run_cells, run_plan, run_with, RunOutcome, ScenarioResult, DIVERSITY_STREAM};
