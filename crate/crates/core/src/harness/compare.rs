//! Pairwise algorithm comparison over a scenario grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::runner::ScenarioResult;
use crate::stats::{t_test_paired, t_test_two_sample, ComparisonVerdict, TestKind};

/// Marker for a grid cell that could not be compared.
pub const HOLE: &str = "?";

/// One run's mean best-of-generation, as stored in `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub algorithm: String,
    #[serde(rename = "N")]
    pub population: usize,
    pub pm: f64,
    pub rho: f64,
    pub epsilon: u64,
    pub seed: u64,
    pub run_mean: f64,
}

pub fn run_rows(results: &[ScenarioResult]) -> Vec<RunRow> {
    let mut rows = Vec::new();
    for r in results {
        for (run, mean) in r.runs.iter().zip(&r.summary.run_means) {
            rows.push(RunRow {
                algorithm: r.cell.spec.label(),
                population: r.cell.spec.population,
                pm: r.cell.spec.ops.pm,
                rho: r.cell.scenario.rho,
                epsilon: r.cell.scenario.epsilon,
                seed: run.trace.seed,
                run_mean: *mean,
            });
        }
    }
    rows
}

/// Population size and mutation rate of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub population: usize,
    pub pm: f64,
}

type ConfigKey = (usize, u64);
type CellKey = (u64, u64);

fn key(c: Config) -> ConfigKey {
    (c.population, c.pm.to_bits())
}

/// Runs of one algorithm, indexed by configuration then by (epsilon, rho).
struct Indexed {
    configs: Vec<Config>,
    cells: BTreeMap<(ConfigKey, CellKey), Vec<(u64, f64)>>,
}

fn rho_key(rho: f64) -> u64 {
    rho.to_bits()
}

fn index(rows: &[RunRow], algorithm: &str) -> Indexed {
    let mut configs: Vec<Config> = Vec::new();
    let mut cells: BTreeMap<(ConfigKey, CellKey), Vec<(u64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.algorithm == algorithm) {
        let c = Config { population: r.population, pm: r.pm };
        if !configs.iter().any(|o| key(*o) == key(c)) {
            configs.push(c);
        }
        cells
            .entry((key(c), (r.epsilon, rho_key(r.rho))))
            .or_default()
            .push((r.seed, r.run_mean));
    }
    configs.sort_by(|a, b| a.population.cmp(&b.population).then(a.pm.total_cmp(&b.pm)));
    for runs in cells.values_mut() {
        runs.sort_by_key(|&(seed, _)| seed);
    }
    Indexed { configs, cells }
}

fn mean(xs: &[(u64, f64)]) -> f64 {
    xs.iter().map(|(_, v)| v).sum::<f64>() / xs.len() as f64
}

impl Indexed {
    /// Configuration with the largest mean best-of-generation averaged over
    /// the `rhos` at `epsilon`. Configurations missing any of those cells
    /// are skipped; ties go to the smaller `N`, then the smaller `pm`.
    fn best_for(&self, epsilon: u64, rhos: &[u64]) -> Option<(Config, f64)> {
        let mut best: Option<(Config, f64)> = None;
        for &c in &self.configs {
            let mut total = 0.0;
            let mut complete = true;
            for &rho in rhos {
                match self.cells.get(&(key(c), (epsilon, rho))) {
                    Some(runs) if !runs.is_empty() => total += mean(runs),
                    _ => complete = false,
                }
            }
            if !complete {
                continue;
            }
            let avg = total / rhos.len() as f64;
            if best.is_none_or(|(_, b)| avg > b) {
                best = Some((c, avg));
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellComparison {
    pub epsilon: u64,
    pub rho: f64,
    pub first_config: Option<Config>,
    pub second_config: Option<Config>,
    pub first_mean: Option<f64>,
    pub second_mean: Option<f64>,
    pub two_sample: Option<ComparisonVerdict>,
    /// Only available when both sides ran on the same seeds.
    pub paired: Option<ComparisonVerdict>,
}

impl CellComparison {
    pub fn result(&self, kind: TestKind) -> Option<&ComparisonVerdict> {
        match kind {
            TestKind::TwoSample => self.two_sample.as_ref(),
            TestKind::Paired => self.paired.as_ref(),
        }
    }

    pub fn symbol(&self, kind: TestKind) -> String {
        self.result(kind)
            .map(|v| v.verdict.symbol().to_string())
            .unwrap_or_else(|| HOLE.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub first: String,
    pub second: String,
    pub cells: Vec<CellComparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictTable {
    pub kind: TestKind,
    pub alpha: f64,
    pub epsilons: Vec<u64>,
    pub rhos: Vec<f64>,
    pub pairs: Vec<PairComparison>,
}

/// Compares `first` against each of `seconds` on every (epsilon, rho) cell
/// found for `first`. For every epsilon each algorithm is represented by
/// its best configuration for that epsilon.
pub fn compare(rows: &[RunRow], first: &str, seconds: &[String], kind: TestKind, alpha: f64) -> Result<VerdictTable> {
    let a = index(rows, first);
    if a.configs.is_empty() {
        return Err(Error::Config(format!("no runs found for algorithm {first:?}")));
    }
    let mut epsilons: Vec<u64> = rows.iter().filter(|r| r.algorithm == first).map(|r| r.epsilon).collect();
    epsilons.sort_unstable();
    epsilons.dedup();
    let mut rhos: Vec<f64> = rows.iter().filter(|r| r.algorithm == first).map(|r| r.rho).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    let rho_keys: Vec<u64> = rhos.iter().map(|&r| rho_key(r)).collect();

    let mut pairs = Vec::new();
    for second in seconds {
        let b = index(rows, second);
        if b.configs.is_empty() {
            return Err(Error::Config(format!("no runs found for algorithm {second:?}")));
        }
        let mut cells = Vec::new();
        for &eps in &epsilons {
            let ca = a.best_for(eps, &rho_keys).map(|(c, _)| c);
            let cb = b.best_for(eps, &rho_keys).map(|(c, _)| c);
            for (&rho, &rk) in rhos.iter().zip(&rho_keys) {
                let ra = ca.and_then(|c| a.cells.get(&(key(c), (eps, rk))));
                let rb = cb.and_then(|c| b.cells.get(&(key(c), (eps, rk))));
                let mut cell = CellComparison {
                    epsilon: eps,
                    rho,
                    first_config: ca,
                    second_config: cb,
                    first_mean: ra.map(|r| mean(r)),
                    second_mean: rb.map(|r| mean(r)),
                    two_sample: None,
                    paired: None,
                };
                if let (Some(ra), Some(rb)) = (ra, rb) {
                    let va: Vec<f64> = ra.iter().map(|&(_, v)| v).collect();
                    let vb: Vec<f64> = rb.iter().map(|&(_, v)| v).collect();
                    cell.two_sample = t_test_two_sample(&va, &vb, alpha).ok();
                    let same_seeds = ra.len() == rb.len() && ra.iter().zip(rb).all(|(x, y)| x.0 == y.0);
                    if same_seeds {
                        cell.paired = t_test_paired(&va, &vb, alpha).ok();
                    }
                }
                cells.push(cell);
            }
        }
        pairs.push(PairComparison {
            first: first.to_string(),
            second: second.clone(),
            cells,
        });
    }
    Ok(VerdictTable {
        kind,
        alpha,
        epsilons,
        rhos,
        pairs,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl VerdictTable {
    pub const CSV_HEADER: [&'static str; 19] = [
        "first",
        "second",
        "epsilon",
        "rho",
        "first_N",
        "first_pm",
        "second_N",
        "second_pm",
        "first_mean",
        "second_mean",
        "t_two_sample",
        "df_two_sample",
        "p_two_sample",
        "verdict_two_sample",
        "t_paired",
        "df_paired",
        "p_paired",
        "verdict_paired",
        "verdict",
    ];

    /// One record per (pair, cell); both tests are always reported and
    /// `verdict` repeats the one selected by [`kind`](Self::kind).
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for pair in &self.pairs {
            for c in &pair.cells {
                let test = |v: Option<&ComparisonVerdict>| match v {
                    Some(v) => vec![
                        v.t_statistic.to_string(),
                        v.degrees_of_freedom.to_string(),
                        v.p_value.to_string(),
                        v.verdict.symbol().to_string(),
                    ],
                    None => vec![String::new(), String::new(), String::new(), HOLE.to_string()],
                };
                let mut rec = vec![
                    pair.first.clone(),
                    pair.second.clone(),
                    c.epsilon.to_string(),
                    c.rho.to_string(),
                    opt(c.first_config.map(|x| x.population)),
                    opt(c.first_config.map(|x| x.pm)),
                    opt(c.second_config.map(|x| x.population)),
                    opt(c.second_config.map(|x| x.pm)),
                    opt(c.first_mean),
                    opt(c.second_mean),
                ];
                rec.extend(test(c.two_sample.as_ref()));
                rec.extend(test(c.paired.as_ref()));
                rec.push(c.symbol(self.kind));
                out.push(rec);
            }
        }
        out
    }

    /// Aligned text grid: one row per opponent, columns grouped by epsilon.
    pub fn render_grid(&self) -> String {
        let width = self.rhos.iter().map(|r| r.to_string().len()).max().unwrap_or(1).max(4) + 1;
        let label = self
            .pairs
            .iter()
            .map(|p| format!("{} vs {}", p.first, p.second).len())
            .max()
            .unwrap_or(0)
            .max(7)
            + 2;
        let group = width * self.rhos.len() + 2;
        let mut s = String::new();
        let _ = writeln!(s, "{} t-test, alpha = {}", self.kind.name(), self.alpha);
        let _ = write!(s, "{:label$}", "epsilon");
        for eps in &self.epsilons {
            let _ = write!(s, "{:<group$}", eps);
        }
        s.push('\n');
        let _ = write!(s, "{:label$}", "rho");
        for _ in &self.epsilons {
            for rho in &self.rhos {
                let _ = write!(s, "{:<width$}", rho);
            }
            s.push_str("  ");
        }
        s.push('\n');
        for pair in &self.pairs {
            let _ = write!(s, "{:label$}", format!("{} vs {}", pair.first, pair.second));
            for chunk in pair.cells.chunks(self.rhos.len().max(1)) {
                for c in chunk {
                    let _ = write!(s, "{:<width$}", c.symbol(self.kind));
                }
                s.push_str("  ");
            }
            let count = |sym: &str| pair.cells.iter().filter(|c| c.symbol(self.kind) == sym).count();
            let _ = write!(s, "[+{} -{} ~{} {}{}]", count("+"), count("-"), count("~"), HOLE, count(HOLE));
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "+ first better, - first worse, ~ no significant difference, {HOLE} cell missing from input"
        );
        s.lines().map(|l| l.trim_end().to_string() + "\n").collect()
    }
}
