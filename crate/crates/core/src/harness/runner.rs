//! Executes runs, scenarios and whole plans.

use rayon::prelude::*;

use crate::algorithms::{initial_population, GenerationStep};
use crate::dynenv::{DynamicsSpec, Environment};
use crate::error::{Error, Result};
use crate::gacore::Population;
use crate::genome::Bitstring;
use crate::harness::plan::{Cell, ExperimentPlan, RunOptions};
use crate::metrics::{diversity_estimate, mean_best_of_generation, GenerationRecord, RunTrace, ScenarioSummary};
use crate::rng::{algorithm_stream, environment_stream, stream, RandomStream};
use crate::traps::ConcatTrap;

/// Stream id of the generator used for sampled diversity estimates.
pub const DIVERSITY_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: RunTrace,
    /// `M(0), M(1), ...` when mask recording was requested.
    pub masks: Option<Vec<Bitstring>>,
    /// Evaluations charged over the whole run.
    pub evaluations: u64,
}

/// Runs `algorithm` for one seed until the budget `epsilon * periods` is
/// spent. Any [`GenerationStep`] works here, including ones defined outside
/// this crate.
///
/// The trace has one record per `N` evaluations: record 0 is the initial
/// population. Algorithms that do not spend exactly `N` evaluations per
/// generation are sampled at every multiple of `N` they cross.
pub fn run_with(
    problem: &ConcatTrap,
    dynamics: DynamicsSpec,
    population: usize,
    seed: u64,
    algorithm: &mut dyn GenerationStep,
    options: &RunOptions,
) -> Result<RunOutcome> {
    if population < 2 {
        return Err(Error::Config(format!("population size must be at least 2, got {population}")));
    }
    let mut env = Environment::new(problem.clone(), dynamics, environment_stream(seed))?;
    if options.dump_masks {
        env = env.record_masks();
    }
    let mut rng = algorithm_stream(seed);
    let mut div_rng = stream(seed, DIVERSITY_STREAM);
    let n = population as u64;
    let generations = (dynamics.budget() / n).max(1) as usize;

    let mut trace = RunTrace::new(seed);
    let mut pop = initial_population(population, &mut env, &mut rng)?;
    let mut next_checkpoint = n;
    let record = |trace: &mut RunTrace, pop: &Population, env: &Environment, thr: Option<usize>, div_rng: &mut RandomStream| -> Result<()> {
        trace.records.push(GenerationRecord {
            generation: trace.records.len(),
            evaluations: env.evaluations(),
            period: env.period(),
            best_fitness: pop.best_fitness(),
            mean_fitness: pop.mean_fitness(),
            threshold: thr,
            diversity: if options.record_diversity {
                diversity_estimate(pop, options.diversity_pairs, div_rng)?
            } else {
                f64::NAN
            },
        });
        Ok(())
    };
    while env.evaluations() >= next_checkpoint && trace.records.len() < generations {
        record(&mut trace, &pop, &env, algorithm.threshold(), &mut div_rng)?;
        next_checkpoint += n;
    }
    env.end_generation();
    while trace.records.len() < generations {
        let before = env.evaluations();
        algorithm.step(&mut pop, &mut env, &mut rng)?;
        if env.evaluations() == before {
            return Err(Error::Domain(format!(
                "{} completed a generation without evaluating anything",
                algorithm.name()
            )));
        }
        while env.evaluations() >= next_checkpoint && trace.records.len() < generations {
            record(&mut trace, &pop, &env, algorithm.threshold(), &mut div_rng)?;
            next_checkpoint += n;
        }
        env.end_generation();
    }
    Ok(RunOutcome {
        trace,
        masks: env.mask_history().map(<[Bitstring]>::to_vec),
        evaluations: env.evaluations(),
    })
}

/// One run of a plan cell.
pub fn run_cell_seed(problem: &ConcatTrap, cell: &Cell, periods: usize, seed: u64, options: &RunOptions) -> Result<RunOutcome> {
    let mut algorithm = cell.spec.build()?;
    run_with(
        problem,
        cell.scenario.dynamics(periods),
        cell.spec.population,
        seed,
        algorithm.as_mut(),
        options,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub cell: Cell,
    /// One per seed, in seed order.
    pub runs: Vec<RunOutcome>,
    pub summary: ScenarioSummary,
}

impl ScenarioResult {
    pub fn traces(&self) -> Vec<RunTrace> {
        self.runs.iter().map(|r| r.trace.clone()).collect()
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

/// Runs the given cells of `plan` over all its seeds on `jobs` threads
/// (0 picks the number of CPUs). Results come back in cell order and do not
/// depend on `jobs`.
pub fn run_cells(plan: &ExperimentPlan, cells: &[Cell], jobs: usize) -> Result<Vec<ScenarioResult>> {
    let units: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| plan.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let outcomes: Vec<RunOutcome> = pool(jobs)?.install(|| {
        units
            .par_iter()
            .map(|&(c, seed)| run_cell_seed(&plan.problem, &cells[c], plan.periods, seed, &plan.options))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut outcomes = outcomes.into_iter();
    cells
        .iter()
        .map(|cell| {
            let runs: Vec<RunOutcome> = outcomes.by_ref().take(plan.seeds.len()).collect();
            let traces: Vec<RunTrace> = runs.iter().map(|r| r.trace.clone()).collect();
            let summary = mean_best_of_generation(&traces)?;
            Ok(ScenarioResult { cell: *cell, runs, summary })
        })
        .collect()
}

/// Every cell of the plan.
pub fn run_plan(plan: &ExperimentPlan, jobs: usize) -> Result<Vec<ScenarioResult>> {
    run_cells(plan, &plan.cells(), jobs)
}
