//! Best-of-generation traces and the mean best-of-generation summary.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gacore::Population;
use crate::rng::RandomStream;

/// Pairs sampled by [`diversity_estimate`] when the population is too large
/// for an exact all-pairs mean.
pub const DEFAULT_DIVERSITY_PAIRS: usize = 200;
/// Largest population for which diversity is computed over all pairs.
pub const EXACT_DIVERSITY_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Cumulative evaluations at the end of this generation.
    pub evaluations: u64,
    pub period: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub threshold: Option<usize>,
    pub diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub seed: u64,
    pub records: Vec<GenerationRecord>,
}

impl RunTrace {
    pub fn new(seed: u64) -> Self {
        RunTrace {
            seed,
            records: Vec::new(),
        }
    }

    pub fn generations(&self) -> usize {
        self.records.len()
    }

    pub fn best_fitness(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.best_fitness)
    }

    /// `(1/G) * sum_i F_BG_i` for this run.
    pub fn mean_best(&self) -> f64 {
        self.best_fitness().sum::<f64>() / self.records.len() as f64
    }

    /// Mean best-of-generation within each period, indexed by period.
    pub fn period_means(&self) -> Vec<f64> {
        let periods = self.records.iter().map(|r| r.period + 1).max().unwrap_or(0);
        let mut sums = vec![0.0; periods];
        let mut counts = vec![0usize; periods];
        for r in &self.records {
            sums[r.period] += r.best_fitness;
            counts[r.period] += 1;
        }
        sums.iter()
            .zip(&counts)
            .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    /// Mean best-of-generation over generations and runs.
    pub fbg: f64,
    /// Per-run means over generations, in run order.
    pub run_means: Vec<f64>,
    pub generations: usize,
}

impl ScenarioSummary {
    pub fn runs(&self) -> usize {
        self.run_means.len()
    }

    /// Sample standard deviation of the per-run means (0 for one run).
    pub fn std_across_runs(&self) -> f64 {
        let r = self.run_means.len();
        if r < 2 {
            return 0.0;
        }
        let mean = self.run_means.iter().sum::<f64>() / r as f64;
        let ss: f64 = self.run_means.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (r - 1) as f64).sqrt()
    }
}

/// Mean best-of-generation: average each generation's best fitness across
/// the `R` runs, then average those over the `G` generations.
pub fn mean_best_of_generation(traces: &[RunTrace]) -> Result<ScenarioSummary> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Domain("no run traces to summarize".into()))?;
    let g = first.generations();
    if g == 0 {
        return Err(Error::Domain("run traces have no generations".into()));
    }
    if let Some(bad) = traces.iter().find(|t| t.generations() != g) {
        return Err(Error::Domain(format!(
            "ragged traces: seed {} has {} generations, expected {g}",
            bad.seed,
            bad.generations()
        )));
    }
    let r = traces.len() as f64;
    let fbg = (0..g)
        .map(|i| traces.iter().map(|t| t.records[i].best_fitness).sum::<f64>() / r)
        .sum::<f64>()
        / g as f64;
    Ok(ScenarioSummary {
        fbg,
        run_means: traces.iter().map(RunTrace::mean_best).collect(),
        generations: g,
    })
}

/// Arithmetic mean of several scenarios' mean best-of-generation.
pub fn averaged_fbg(summaries: &[ScenarioSummary]) -> Result<f64> {
    if summaries.is_empty() {
        return Err(Error::Domain("cannot average zero scenarios".into()));
    }
    Ok(summaries.iter().map(|s| s.fbg).sum::<f64>() / summaries.len() as f64)
}

/// Mean pairwise Hamming distance: exact over all pairs up to
/// [`EXACT_DIVERSITY_LIMIT`] members, otherwise over `sample_pairs` random
/// pairs of distinct members.
pub fn diversity_estimate(pop: &Population, sample_pairs: usize, rng: &mut RandomStream) -> Result<f64> {
    let n = pop.len();
    if n < 2 {
        return Err(Error::Domain(format!("diversity needs at least 2 members, got {n}")));
    }
    let g = |i: usize| &pop.members[i].genome;
    if n <= EXACT_DIVERSITY_LIMIT || sample_pairs == 0 {
        let mut total = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                total += g(i).hamming_unchecked(g(j));
            }
        }
        return Ok(total as f64 / (n * (n - 1) / 2) as f64);
    }
    let mut total = 0usize;
    for _ in 0..sample_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        total += g(i).hamming_unchecked(g(j));
    }
    Ok(total as f64 / sample_pairs as f64)
}
