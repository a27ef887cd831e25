//! Experiment plans: the TOML schema and its validated form.

use std::path::Path;

use serde::Deserialize;

use crate::algorithms::{AlgorithmKind, AlgorithmSpec, ThresholdMode};
use crate::dynenv::DynamicsSpec;
use crate::error::{Error, Result};
use crate::gacore::{OperatorConfig, SelectionScheme};
use crate::metrics::DEFAULT_DIVERSITY_PAIRS;
use crate::stats::TestKind;
use crate::traps::{ConcatTrap, TrapSpec};

/// A mutation rate as written in a plan: a number, or an expression in the
/// genome length such as `"2/L"` or `"1/(16L)"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PmValue {
    Number(f64),
    Expr(String),
}

impl PmValue {
    pub fn resolve(&self, len: usize) -> Result<f64> {
        let pm = match self {
            PmValue::Number(v) => *v,
            PmValue::Expr(s) => parse_pm_expr(s, len)?,
        };
        if !(0.0..=1.0).contains(&pm) {
            return Err(Error::Config(format!("mutation rate {pm} must lie in [0, 1]")));
        }
        Ok(pm)
    }
}

fn parse_pm_expr(expr: &str, len: usize) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse mutation rate {expr:?}"));
    let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let Some((num, den)) = compact.split_once('/') else {
        return compact.parse::<f64>().map_err(|_| bad());
    };
    let num: f64 = num.parse().map_err(|_| bad())?;
    let den: String = den.chars().filter(|c| !matches!(c, '(' | ')' | '*')).collect();
    let den = match den.strip_suffix('L') {
        Some("") => len as f64,
        Some(k) => k.parse::<f64>().map_err(|_| bad())? * len as f64,
        None => den.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(num / den)
}

/// The doubling ladder `1/(16L), 1/(8L), ..., 1/L, 2/L, 4/L`.
pub fn default_pm_grid(len: usize) -> Vec<f64> {
    let l = len as f64;
    [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|k| k / l)
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    order: usize,
    #[serde(default = "default_blocks")]
    blocks: usize,
    a: Option<f64>,
    b: Option<f64>,
    z: Option<usize>,
}

fn default_blocks() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsFile {
    #[serde(default)]
    rho: Vec<f64>,
    #[serde(default)]
    epsilon: Vec<u64>,
    /// Explicit `(rho, epsilon)` cells, appended after the grid.
    #[serde(default)]
    scenarios: Vec<(f64, u64)>,
    #[serde(default = "default_periods")]
    periods: usize,
}

fn default_periods() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunFile {
    runs: Option<usize>,
    seed_base: Option<u64>,
    seeds: Option<Vec<u64>>,
    selection: Option<SelectionScheme>,
    pc: Option<f64>,
    elitism: Option<usize>,
    population: Option<Vec<usize>>,
    pm: Option<Vec<PmValue>>,
    ttest: Option<TestKind>,
    diversity_pairs: Option<usize>,
    #[serde(default)]
    dump_masks: bool,
    diversity: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmFile {
    algo: AlgorithmKind,
    n: Option<usize>,
    rr: Option<usize>,
    initial_threshold_mode: Option<ThresholdMode>,
    initial_threshold: Option<usize>,
    pm: Option<Vec<PmValue>>,
    population: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    problem: ProblemFile,
    dynamics: DynamicsFile,
    #[serde(default)]
    run: RunFile,
    #[serde(rename = "algorithm")]
    algorithms: Vec<AlgorithmFile>,
}

/// One environment: severity and speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub rho: f64,
    pub epsilon: u64,
}

impl Scenario {
    pub fn dynamics(&self, periods: usize) -> DynamicsSpec {
        DynamicsSpec {
            rho: self.rho,
            epsilon: self.epsilon,
            periods,
        }
    }
}

/// An algorithm with its pm and population grids.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmEntry {
    /// Template; `ops.pm` and `population` are overwritten per cell.
    pub template: AlgorithmSpec,
    pub pm_grid: Vec<f64>,
    pub populations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Compute population diversity each generation (otherwise NaN).
    pub record_diversity: bool,
    pub diversity_pairs: usize,
    pub dump_masks: bool,
    pub test_kind: TestKind,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record_diversity: true,
            diversity_pairs: DEFAULT_DIVERSITY_PAIRS,
            dump_masks: false,
            test_kind: TestKind::TwoSample,
        }
    }
}

/// One unit of a sweep: an algorithm configuration on one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub spec: AlgorithmSpec,
    pub scenario: Scenario,
}

impl Cell {
    /// File-name friendly identifier.
    pub fn id(&self) -> String {
        let raw = format!(
            "{}_N{}_pm{}_rho{}_eps{}",
            self.spec.label(),
            self.spec.population,
            self.spec.ops.pm,
            self.scenario.rho,
            self.scenario.epsilon
        );
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' { c } else { '-' })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub problem: ConcatTrap,
    pub scenarios: Vec<Scenario>,
    pub periods: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmEntry>,
    pub options: RunOptions,
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file, None)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::load_str(&text, path, None)
    }

    /// Like [`load`](Self::load), with seeds regenerated from `seed_base`.
    pub fn load_with_seed_base(path: &Path, seed_base: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::load_str(&text, path, seed_base)
    }

    fn load_str(text: &str, path: &Path, seed_base: Option<u64>) -> Result<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_file(file, seed_base)
    }

    fn from_file(file: PlanFile, seed_base_override: Option<u64>) -> Result<Self> {
        let p = &file.problem;
        let spec = match (p.a, p.b, p.z) {
            (None, None, None) => TrapSpec::canonical(p.order)?,
            (Some(a), Some(b), Some(z)) => TrapSpec::new(p.order, a, b, z)?,
            _ => {
                return Err(Error::Config(
                    "problem: give all of a, b, z or none of them".into(),
                ))
            }
        };
        let problem = ConcatTrap::new(spec, p.blocks)?;
        let len = problem.len();

        let d = &file.dynamics;
        let mut scenarios = Vec::new();
        for &epsilon in &d.epsilon {
            for &rho in &d.rho {
                scenarios.push(Scenario { rho, epsilon });
            }
        }
        if d.rho.is_empty() != d.epsilon.is_empty() {
            return Err(Error::Config("dynamics: rho and epsilon grids must both be given".into()));
        }
        scenarios.extend(d.scenarios.iter().map(|&(rho, epsilon)| Scenario { rho, epsilon }));
        if scenarios.is_empty() {
            return Err(Error::Config("dynamics: no scenarios".into()));
        }
        for s in &scenarios {
            s.dynamics(d.periods).validate()?;
        }

        let r = &file.run;
        let runs = r.runs.unwrap_or(30);
        let seeds = match (&r.seeds, seed_base_override) {
            (Some(list), None) => list.clone(),
            (_, base) => {
                let base = base.or(r.seed_base).unwrap_or(1);
                (0..runs as u64).map(|i| base + i).collect()
            }
        };
        if seeds.is_empty() {
            return Err(Error::Config("run: at least one seed is required".into()));
        }
        if let (Some(list), Some(n)) = (&r.seeds, r.runs) {
            if list.len() != n && seed_base_override.is_none() {
                return Err(Error::Config(format!(
                    "run: {} seeds listed but runs = {n}",
                    list.len()
                )));
            }
        }

        let base_ops = OperatorConfig {
            pc: r.pc.unwrap_or(1.0),
            pm: 0.0,
            selection: r.selection.unwrap_or_default(),
            elitism: r.elitism.unwrap_or(2),
        };
        let resolve = |list: &[PmValue]| list.iter().map(|v| v.resolve(len)).collect::<Result<Vec<_>>>();
        let default_pm = match &r.pm {
            Some(list) => resolve(list)?,
            None => default_pm_grid(len),
        };
        let default_pop = r.population.clone().unwrap_or_else(|| vec![30]);

        if file.algorithms.is_empty() {
            return Err(Error::Config("plan lists no [[algorithm]] entries".into()));
        }
        let mut algorithms = Vec::new();
        for a in &file.algorithms {
            let mut template = AlgorithmSpec::new(a.algo, base_ops, 0);
            template.pool_size = a.n;
            template.immigrants = a.rr;
            template.threshold_mode = a.initial_threshold_mode.unwrap_or_default();
            template.initial_threshold = a.initial_threshold;
            let pm_grid = match &a.pm {
                Some(list) => resolve(list)?,
                None => default_pm.clone(),
            };
            let populations = a.population.clone().unwrap_or_else(|| default_pop.clone());
            if pm_grid.is_empty() || populations.is_empty() {
                return Err(Error::Config(format!("{}: empty pm or population grid", a.algo.name())));
            }
            algorithms.push(AlgorithmEntry {
                template,
                pm_grid,
                populations,
            });
        }

        let plan = ExperimentPlan {
            problem,
            scenarios,
            periods: d.periods,
            seeds,
            algorithms,
            options: RunOptions {
                record_diversity: r.diversity.unwrap_or(true),
                diversity_pairs: r.diversity_pairs.unwrap_or(DEFAULT_DIVERSITY_PAIRS),
                dump_masks: r.dump_masks,
                test_kind: r.ttest.unwrap_or_default(),
            },
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Checks every cell: algorithm parameters, divisibility of `epsilon`
    /// by `N`, and that static-mode ADMGA only meets stationary problems.
    pub fn validate(&self) -> Result<()> {
        for cell in self.cells() {
            cell.spec.validate()?;
            let (n, eps) = (cell.spec.population as u64, cell.scenario.epsilon);
            if cell.spec.charges_population_per_generation() && eps % n != 0 {
                return Err(Error::Config(format!(
                    "epsilon = {eps} is not divisible by population size N = {n}"
                )));
            }
            if !cell.spec.charges_population_per_generation() && cell.scenario.rho != 0.0 {
                return Err(Error::Config(format!(
                    "static-mode ADMGA requires a stationary scenario (rho = 0), got rho = {}",
                    cell.scenario.rho
                )));
            }
        }
        Ok(())
    }

    /// Cartesian product, ordered algorithm, N, pm, then scenario.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for entry in &self.algorithms {
            for &population in &entry.populations {
                for &pm in &entry.pm_grid {
                    let mut spec = entry.template;
                    spec.population = population;
                    spec.ops.pm = pm;
                    for &scenario in &self.scenarios {
                        out.push(Cell { spec, scenario });
                    }
                }
            }
        }
        out
    }

    /// Generations per run for charge-`N` algorithms.
    pub fn generations(&self, scenario: &Scenario, population: usize) -> u64 {
        scenario.epsilon * self.periods as u64 / population as u64
    }
}
