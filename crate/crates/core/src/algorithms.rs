//! The GA variants, each a generation-step state machine over a shared
//! population and environment.
//!
//! Every variant used on dynamic problems charges exactly `N` evaluations
//! per generation: whatever the population ends up holding is evaluated (or
//! re-evaluated) once under the current mask, because changes are not
//! announced to the algorithm. The elites of the previous generation are
//! carried into the next population before that evaluation, so 2-elitism
//! costs nothing extra.
//!
//! Static-mode ADMGA is the exception: it merges offspring into the parent
//! population and truncates, evaluating only the offspring.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dynenv::Environment;
use crate::error::{Error, Result};
use crate::gacore::{
    apply_elitism, bitflip_mutation, recombine, select_parent, Individual, OperatorConfig,
    Population,
};
use crate::genome::Bitstring;
use crate::rng::RandomStream;

/// One generation of some GA. Implement this to benchmark an algorithm the
/// crate does not ship (the harness accepts any boxed implementation).
pub trait GenerationStep: Send {
    fn name(&self) -> String;

    /// Replaces `pop` with the next generation, evaluated under the
    /// environment's current mask.
    fn step(&mut self, pop: &mut Population, env: &mut Environment, rng: &mut RandomStream)
        -> Result<()>;

    /// Mating threshold, for algorithms that keep one.
    fn threshold(&self) -> Option<usize> {
        None
    }
}

/// `n` random genomes, each evaluated once.
pub fn initial_population(n: usize, env: &mut Environment, rng: &mut RandomStream) -> Result<Population> {
    let len = env.genome_len();
    let genomes = (0..n)
        .map(|_| Bitstring::random(len, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(evaluate_all(genomes, env))
}

fn evaluate_all(genomes: Vec<Bitstring>, env: &mut Environment) -> Population {
    let period = env.period();
    Population::new(
        genomes
            .into_iter()
            .map(|g| {
                let f = env.evaluate_unchecked(&g);
                Individual::new(g, f, period)
            })
            .collect(),
    )
}

fn elite_individuals(pop: &Population, elites: &[usize]) -> Vec<Individual> {
    elites.iter().map(|&i| pop.members[i].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Dissortative: the pool member least similar to the first parent.
    Negative,
    /// Assortative: the pool member most similar to the first parent.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmgaConfig {
    pub pool_size: usize,
    pub polarity: Polarity,
}

/// Picks the second parent for `first` from a pool of `pool_size` distinct
/// members drawn uniformly from everyone except `first`. Returns the pool
/// member farthest from (negative) or closest to (positive) the first
/// parent in Hamming distance, ties going to the earliest pool entry.
pub fn amga_pick_partner(
    first: usize,
    pop: &Population,
    config: &AmgaConfig,
    rng: &mut RandomStream,
) -> Result<usize> {
    let others = pop.len().saturating_sub(1);
    if config.pool_size == 0 || config.pool_size > others {
        return Err(Error::Config(format!(
            "pool size {} must lie in [1, {others}]",
            config.pool_size
        )));
    }
    let anchor = &pop.members[first].genome;
    let mut best: Option<(usize, usize)> = None;
    for drawn in index::sample(rng, others, config.pool_size) {
        let candidate = if drawn >= first { drawn + 1 } else { drawn };
        let d = anchor.hamming_unchecked(&pop.members[candidate].genome);
        let better = match (best, config.polarity) {
            (None, _) => true,
            (Some((_, bd)), Polarity::Negative) => d > bd,
            (Some((_, bd)), Polarity::Positive) => d < bd,
        };
        if better {
            best = Some((candidate, d));
        }
    }
    Ok(best.map(|(i, _)| i).expect("pool is nonempty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mating {
    Random,
    Assortative(AmgaConfig),
}

/// Generational GA with pluggable second-parent choice. Also the engine
/// behind RIGA, which reserves slots for immigrants.
#[derive(Debug, Clone)]
pub struct Generational {
    ops: OperatorConfig,
    mating: Mating,
}

impl Generational {
    pub fn gga(ops: OperatorConfig) -> Self {
        Generational {
            ops,
            mating: Mating::Random,
        }
    }

    pub fn amga(ops: OperatorConfig, config: AmgaConfig) -> Self {
        Generational {
            ops,
            mating: Mating::Assortative(config),
        }
    }

    /// Fills `next` with offspring of `pop` until it holds `target` genomes.
    fn breed_into(
        &self,
        pop: &Population,
        next: &mut Vec<Bitstring>,
        target: usize,
        rng: &mut RandomStream,
    ) -> Result<()> {
        while next.len() < target {
            let first = select_parent(&pop.members, self.ops.selection, rng);
            let second = match &self.mating {
                Mating::Random => select_parent(&pop.members, self.ops.selection, rng),
                Mating::Assortative(cfg) => amga_pick_partner(first, pop, cfg, rng)?,
            };
            let (mut c1, mut c2) = recombine(
                &pop.members[first].genome,
                &pop.members[second].genome,
                self.ops.pc,
                rng,
            )?;
            bitflip_mutation(&mut c1, self.ops.pm, rng);
            next.push(c1);
            if next.len() < target {
                bitflip_mutation(&mut c2, self.ops.pm, rng);
                next.push(c2);
            }
        }
        Ok(())
    }

    /// One generation in which the last `reserved` members of the result
    /// are supplied by the caller already evaluated.
    fn step_with_reserved(
        &mut self,
        pop: &mut Population,
        elites: &[usize],
        reserved: Vec<Individual>,
        env: &mut Environment,
        rng: &mut RandomStream,
    ) -> Result<()> {
        let n = pop.len();
        let mut next: Vec<Bitstring> = elites.iter().map(|&i| pop.members[i].genome.clone()).collect();
        self.breed_into(pop, &mut next, n - reserved.len(), rng)?;
        let mut evaluated = evaluate_all(next, env);
        evaluated.members.extend(reserved);
        let carried = elite_individuals(&evaluated, &(0..elites.len()).collect::<Vec<_>>());
        apply_elitism(&carried, &mut evaluated);
        *pop = evaluated;
        Ok(())
    }
}

impl GenerationStep for Generational {
    fn name(&self) -> String {
        match self.mating {
            Mating::Random => "gga".into(),
            Mating::Assortative(c) => match c.polarity {
                Polarity::Negative => format!("namga(n={})", c.pool_size),
                Polarity::Positive => format!("pamga(n={})", c.pool_size),
            },
        }
    }

    fn step(&mut self, pop: &mut Population, env: &mut Environment, rng: &mut RandomStream) -> Result<()> {
        let elites = pop.best_indices(self.ops.elitism.min(pop.len()));
        self.step_with_reserved(pop, &elites, Vec::new(), env, rng)
    }
}

/// Steady-state GA: `N/2` offspring replace the worst half, then the whole
/// population is re-evaluated.
#[derive(Debug, Clone)]
pub struct SteadyState {
    ops: OperatorConfig,
}

impl SteadyState {
    pub fn new(ops: OperatorConfig) -> Self {
        SteadyState { ops }
    }
}

impl GenerationStep for SteadyState {
    fn name(&self) -> String {
        "ssga".into()
    }

    fn step(&mut self, pop: &mut Population, env: &mut Environment, rng: &mut RandomStream) -> Result<()> {
        let n = pop.len();
        if n % 2 != 0 {
            return Err(Error::Config(format!("steady-state GA needs an even population, got {n}")));
        }
        let half = n / 2;
        let elites = pop.best_indices(self.ops.elitism.min(n));
        let mut offspring = Vec::with_capacity(half);
        Generational::gga(self.ops).breed_into(pop, &mut offspring, half, rng)?;
        let victims = pop.worst_indices(half, &elites);
        let mut genomes: Vec<Bitstring> = pop.members.iter().map(|m| m.genome.clone()).collect();
        for (slot, child) in victims.into_iter().zip(offspring) {
            genomes[slot] = child;
        }
        let mut evaluated = evaluate_all(genomes, env);
        let carried = elite_individuals(&evaluated, &elites);
        apply_elitism(&carried, &mut evaluated);
        *pop = evaluated;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImmigrantReplacement {
    Worst,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigaConfig {
    pub immigrants: usize,
    pub replacement: ImmigrantReplacement,
}

impl RigaConfig {
    /// `round(4N / 30)`, i.e. 4 immigrants for a population of 30.
    pub fn default_immigrants(population: usize) -> usize {
        (population * 4 + 15) / 30
    }
}

/// Random immigrants GA.
///
/// At the start of each generation `rr` members (the worst, or random
/// non-elites) are overwritten by fresh random genomes, which are evaluated
/// at once and take part in mating. The generational engine then produces
/// `N - rr` members (elites plus offspring) and the immigrants fill the
/// remaining slots, so the generation still costs `N` evaluations.
#[derive(Debug, Clone)]
pub struct RandomImmigrants {
    engine: Generational,
    config: RigaConfig,
}

impl RandomImmigrants {
    pub fn new(ops: OperatorConfig, config: RigaConfig) -> Self {
        RandomImmigrants {
            engine: Generational::gga(ops),
            config,
        }
    }
}

impl GenerationStep for RandomImmigrants {
    fn name(&self) -> String {
        match self.config.replacement {
            ImmigrantReplacement::Worst => format!("riga_worst(rr={})", self.config.immigrants),
            ImmigrantReplacement::Random => format!("riga_random(rr={})", self.config.immigrants),
        }
    }

    fn step(&mut self, pop: &mut Population, env: &mut Environment, rng: &mut RandomStream) -> Result<()> {
        let n = pop.len();
        let rr = self.config.immigrants;
        let elites = pop.best_indices(self.engine.ops.elitism.min(n));
        if rr + elites.len() > n {
            return Err(Error::Config(format!(
                "{rr} immigrants plus {} elites exceed population {n}",
                elites.len()
            )));
        }
        let slots: Vec<usize> = match self.config.replacement {
            _ if rr == 0 => Vec::new(),
            ImmigrantReplacement::Worst => pop.worst_indices(rr, &elites),
            ImmigrantReplacement::Random => {
                let open: Vec<usize> = (0..n).filter(|i| !elites.contains(i)).collect();
                index::sample(rng, open.len(), rr).into_iter().map(|k| open[k]).collect()
            }
        };
        let len = env.genome_len();
        let mut immigrants = Vec::with_capacity(rr);
        for slot in slots {
            let g = Bitstring::random(len, rng)?;
            let f = env.evaluate_unchecked(&g);
            let ind = Individual::new(g, f, env.period());
            pop.members[slot] = ind.clone();
            immigrants.push(ind);
        }
        self.engine.step_with_reserved(pop, &elites, immigrants, env, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Initial threshold `L - 1`; offspring compete with parents.
    Static,
    /// Initial threshold `floor(L / 4)`; offspring replace the worst parents.
    #[default]
    Dop,
}

impl ThresholdMode {
    pub fn initial_threshold(&self, len: usize) -> usize {
        match self {
            ThresholdMode::Static => len.saturating_sub(1),
            ThresholdMode::Dop => len / 4,
        }
    }
}

/// Bookkeeping for one batch of `N/2` mating attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchRecord {
    pub threshold: usize,
    /// Cumulative over the call, as the counters are never reset.
    pub successes: usize,
    pub failures: usize,
    /// Successful matings within this batch alone.
    pub batch_successes: usize,
    pub threshold_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateNewOutcome {
    pub offspring: Vec<Bitstring>,
    pub batches: Vec<BatchRecord>,
}

/// Adaptive dissortative mating GA.
#[derive(Debug, Clone)]
pub struct Admga {
    ops: OperatorConfig,
    mode: ThresholdMode,
    threshold: Option<usize>,
    initial_threshold: Option<usize>,
    last_batches: Vec<BatchRecord>,
}

impl Admga {
    pub fn new(ops: OperatorConfig, mode: ThresholdMode) -> Self {
        Admga {
            ops,
            mode,
            threshold: None,
            initial_threshold: None,
            last_batches: Vec::new(),
        }
    }

    /// Starts from `t` instead of the mode's default.
    pub fn with_initial_threshold(mut self, t: usize) -> Self {
        self.initial_threshold = Some(t);
        self
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    pub fn last_batches(&self) -> &[BatchRecord] {
        &self.last_batches
    }

    fn current_threshold(&mut self, len: usize) -> usize {
        *self.threshold.get_or_insert_with(|| {
            self.initial_threshold
                .unwrap_or_else(|| self.mode.initial_threshold(len))
                .min(len)
        })
    }

    /// Runs batches of `N/2` pair selections until at least one pair at
    /// Hamming distance `>= T` has mated. Each mating yields two mutated
    /// children. After every batch `T` drops by one if failures outnumber
    /// successes (counted over the whole call) and rises by one otherwise,
    /// clamped to `[0, L]`.
    pub fn create_new(&mut self, pop: &Population, rng: &mut RandomStream) -> Result<CreateNewOutcome> {
        let n = pop.len();
        if n < 2 {
            return Err(Error::Config(format!("ADMGA needs at least 2 members, got {n}")));
        }
        let len = pop.members[0].genome.len();
        let mut t = self.current_threshold(len);
        let events = n / 2;
        let (mut successes, mut failures) = (0usize, 0usize);
        let mut offspring = Vec::new();
        let mut batches = Vec::new();
        while successes < 1 {
            let before = t;
            let mut batch_successes = 0;
            for _ in 0..events {
                let i = select_parent(&pop.members, self.ops.selection, rng);
                let j = select_parent(&pop.members, self.ops.selection, rng);
                let (a, b) = (&pop.members[i].genome, &pop.members[j].genome);
                if a.hamming_unchecked(b) >= t {
                    let (mut c1, mut c2) = recombine(a, b, self.ops.pc, rng)?;
                    bitflip_mutation(&mut c1, self.ops.pm, rng);
                    bitflip_mutation(&mut c2, self.ops.pm, rng);
                    offspring.push(c1);
                    offspring.push(c2);
                    successes += 1;
                    batch_successes += 1;
                } else {
                    failures += 1;
                }
            }
            t = if failures > successes {
                t.saturating_sub(1)
            } else {
                (t + 1).min(len)
            };
            batches.push(BatchRecord {
                threshold: before,
                successes,
                failures,
                batch_successes,
                threshold_after: t,
            });
        }
        self.threshold = Some(t);
        self.last_batches = batches.clone();
        Ok(CreateNewOutcome { offspring, batches })
    }

    fn step_dop(&mut self, pop: &mut Population, env: &mut Environment, rng: &mut RandomStream) -> Result<()> {
        let n = pop.len();
        let mut offspring = self.create_new(pop, rng)?.offspring;
        let elites = pop.best_indices(self.ops.elitism.min(n));
        // At most N - elites slots can open up; surplus children (only
        // possible when every mating of the batch succeeds) are dropped in
        // production order.
        offspring.truncate(n - elites.len());
        let victims = pop.worst_indices(offspring.len(), &elites);
        let mut genomes: Vec<Bitstring> = pop.members.iter().map(|m| m.genome.clone()).collect();
        for (slot, child) in victims.into_iter().zip(offspring) {
            genomes[slot] = child;
        }
        let mut evaluated = evaluate_all(genomes, env);
        let carried = elite_individuals(&evaluated, &elites);
        apply_elitism(&carried, &mut evaluated);
        *pop = evaluated;
        Ok(())
    }

    fn step_static(&mut self, pop: &mut Population, env: &mut Environment, rng: &mut RandomStream) -> Result<()> {
        let n = pop.len();
        let offspring = self.create_new(pop, rng)?.offspring;
        let mut merged = std::mem::take(pop);
        merged.members.extend(evaluate_all(offspring, env).members);
        let keep = merged.best_indices(n);
        let mut keep_sorted = keep;
        keep_sorted.sort_unstable();
        *pop = Population::new(
            keep_sorted
                .into_iter()
                .map(|i| merged.members[i].clone())
                .collect(),
        );
        Ok(())
    }
}

impl GenerationStep for Admga {
    fn name(&self) -> String {
        match self.mode {
            ThresholdMode::Dop => "admga".into(),
            ThresholdMode::Static => "admga_static".into(),
        }
    }

    fn step(&mut self, pop: &mut Population, env: &mut Environment, rng: &mut RandomStream) -> Result<()> {
        match self.mode {
            ThresholdMode::Dop => self.step_dop(pop, env, rng),
            ThresholdMode::Static => self.step_static(pop, env, rng),
        }
    }

    fn threshold(&self) -> Option<usize> {
        self.threshold
    }
}

/// Algorithm selector as it appears in plan files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Gga,
    Ssga,
    Admga,
    RigaWorst,
    RigaRandom,
    Namga,
    Pamga,
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Gga => "gga",
            AlgorithmKind::Ssga => "ssga",
            AlgorithmKind::Admga => "admga",
            AlgorithmKind::RigaWorst => "riga_worst",
            AlgorithmKind::RigaRandom => "riga_random",
            AlgorithmKind::Namga => "namga",
            AlgorithmKind::Pamga => "pamga",
        }
    }
}

/// A fully parameterized algorithm: variant, operators and population size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub ops: OperatorConfig,
    pub population: usize,
    /// AMGA pool size.
    pub pool_size: Option<usize>,
    /// RIGA immigrants per generation; defaults to `round(4N / 30)`.
    pub immigrants: Option<usize>,
    pub threshold_mode: ThresholdMode,
    pub initial_threshold: Option<usize>,
}

impl AlgorithmSpec {
    pub fn new(kind: AlgorithmKind, ops: OperatorConfig, population: usize) -> Self {
        AlgorithmSpec {
            kind,
            ops,
            population,
            pool_size: None,
            immigrants: None,
            threshold_mode: ThresholdMode::Dop,
            initial_threshold: None,
        }
    }

    pub fn immigrants(&self) -> usize {
        self.immigrants
            .unwrap_or_else(|| RigaConfig::default_immigrants(self.population))
    }

    /// Whether a generation always costs exactly `N` evaluations.
    pub fn charges_population_per_generation(&self) -> bool {
        !(self.kind == AlgorithmKind::Admga && self.threshold_mode == ThresholdMode::Static)
    }

    /// Short label naming the variant and its variant-specific parameters.
    pub fn label(&self) -> String {
        match self.kind {
            AlgorithmKind::Namga | AlgorithmKind::Pamga => {
                format!("{}(n={})", self.kind.name(), self.pool_size.unwrap_or(0))
            }
            AlgorithmKind::RigaWorst | AlgorithmKind::RigaRandom => {
                format!("{}(rr={})", self.kind.name(), self.immigrants())
            }
            AlgorithmKind::Admga if self.threshold_mode == ThresholdMode::Static => {
                "admga_static".into()
            }
            _ => self.kind.name().into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ops.validate()?;
        let n = self.population;
        if n < 2 {
            return Err(Error::Config(format!("population size must be at least 2, got {n}")));
        }
        if self.ops.elitism > n {
            return Err(Error::Config(format!("elitism {} exceeds population {n}", self.ops.elitism)));
        }
        match self.kind {
            AlgorithmKind::Ssga if n % 2 != 0 => Err(Error::Config(format!(
                "ssga needs an even population size, got {n}"
            ))),
            AlgorithmKind::Namga | AlgorithmKind::Pamga => match self.pool_size {
                Some(p) if (1..n).contains(&p) => Ok(()),
                Some(p) => Err(Error::Config(format!(
                    "{} pool size {p} must lie in [1, {}]",
                    self.kind.name(),
                    n - 1
                ))),
                None => Err(Error::Config(format!("{} requires a pool size `n`", self.kind.name()))),
            },
            AlgorithmKind::RigaWorst | AlgorithmKind::RigaRandom
                if self.immigrants() + self.ops.elitism > n =>
            {
                Err(Error::Config(format!(
                    "rr = {} plus {} elites exceeds population {n}",
                    self.immigrants(),
                    self.ops.elitism
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn GenerationStep>> {
        self.validate()?;
        let ops = self.ops;
        Ok(match self.kind {
            AlgorithmKind::Gga => Box::new(Generational::gga(ops)),
            AlgorithmKind::Ssga => Box::new(SteadyState::new(ops)),
            AlgorithmKind::Admga => {
                let mut a = Admga::new(ops, self.threshold_mode);
                if let Some(t) = self.initial_threshold {
                    a = a.with_initial_threshold(t);
                }
                Box::new(a)
            }
            AlgorithmKind::RigaWorst | AlgorithmKind::RigaRandom => Box::new(RandomImmigrants::new(
                ops,
                RigaConfig {
                    immigrants: self.immigrants(),
                    replacement: if self.kind == AlgorithmKind::RigaWorst {
                        ImmigrantReplacement::Worst
                    } else {
                        ImmigrantReplacement::Random
                    },
                },
            )),
            AlgorithmKind::Namga | AlgorithmKind::Pamga => Box::new(Generational::amga(
                ops,
                AmgaConfig {
                    pool_size: self.pool_size.unwrap_or(1),
                    polarity: if self.kind == AlgorithmKind::Namga {
                        Polarity::Negative
                    } else {
                        Polarity::Positive
                    },
                },
            )),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynenv::DynamicsSpec;
    use crate::rng::{algorithm_stream, environment_stream};
    use crate::traps::ConcatTrap;

    fn env(order: usize, rho: f64, epsilon: u64) -> Environment {
        Environment::new(
            ConcatTrap::canonical(order, 10).unwrap(),
            DynamicsSpec::new(rho, epsilon, 10).unwrap(),
            environment_stream(1),
        )
        .unwrap()
    }

    fn clones(n: usize, g: &Bitstring, env: &mut Environment) -> Population {
        evaluate_all(vec![g.clone(); n], env)
    }

    fn all_kinds() -> Vec<AlgorithmSpec> {
        let ops = OperatorConfig::with_pm(1.0 / 30.0);
        let mut specs: Vec<AlgorithmSpec> = [
            AlgorithmKind::Gga,
            AlgorithmKind::Ssga,
            AlgorithmKind::Admga,
            AlgorithmKind::RigaWorst,
            AlgorithmKind::RigaRandom,
            AlgorithmKind::Namga,
            AlgorithmKind::Pamga,
        ]
        .into_iter()
        .map(|k| AlgorithmSpec::new(k, ops, 30))
        .collect();
        for s in &mut specs {
            s.pool_size = Some(4);
        }
        specs
    }

    #[test]
    fn every_variant_charges_n_per_generation() {
        for spec in all_kinds() {
            let mut e = env(3, 0.3, 300);
            let mut rng = algorithm_stream(5);
            let mut pop = initial_population(30, &mut e, &mut rng).unwrap();
            let mut alg = spec.build().unwrap();
            for g in 1..=40u64 {
                let before = e.evaluations();
                alg.step(&mut pop, &mut e, &mut rng).unwrap();
                assert_eq!(e.evaluations() - before, 30, "{} gen {g}", spec.label());
                assert_eq!(pop.len(), 30);
                e.end_generation();
            }
        }
    }

    #[test]
    fn fitness_matches_current_mask_after_step() {
        for spec in all_kinds() {
            let mut e = env(4, 0.6, 120);
            let mut rng = algorithm_stream(9);
            let mut pop = initial_population(30, &mut e, &mut rng).unwrap();
            let mut alg = spec.build().unwrap();
            for _ in 0..20 {
                alg.step(&mut pop, &mut e, &mut rng).unwrap();
                for m in &pop.members {
                    assert_eq!(m.fitness, e.peek(&m.genome), "{}", spec.label());
                    assert_eq!(m.evaluated_at_period, e.period());
                }
                e.end_generation();
            }
        }
    }

    #[test]
    fn elitism_holds_within_a_period() {
        for spec in all_kinds() {
            let mut e = env(3, 0.0, 1_000_000);
            let mut rng = algorithm_stream(2);
            let mut pop = initial_population(30, &mut e, &mut rng).unwrap();
            let mut alg = spec.build().unwrap();
            let mut best = pop.best_fitness();
            for _ in 0..50 {
                alg.step(&mut pop, &mut e, &mut rng).unwrap();
                assert!(pop.best_fitness() >= best, "{}", spec.label());
                best = pop.best_fitness();
            }
        }
    }

    #[test]
    fn converged_population_is_a_fixed_point_without_mutation() {
        let g = Bitstring::random(30, &mut algorithm_stream(4)).unwrap();
        let ops = OperatorConfig::with_pm(0.0);
        for kind in [AlgorithmKind::Gga, AlgorithmKind::Ssga, AlgorithmKind::Namga, AlgorithmKind::Pamga] {
            let mut spec = AlgorithmSpec::new(kind, ops, 30);
            spec.pool_size = Some(4);
            let mut e = env(3, 0.0, 1_000_000);
            let mut pop = clones(30, &g, &mut e);
            let start = pop.clone();
            let mut alg = spec.build().unwrap();
            let mut rng = algorithm_stream(1);
            for _ in 0..5 {
                alg.step(&mut pop, &mut e, &mut rng).unwrap();
            }
            assert_eq!(pop, start, "{}", spec.label());
        }

        // ADMGA: the threshold decays to 0, after which clones mate freely
        // and still reproduce the same genome.
        let mut e = env(3, 0.0, 1_000_000);
        let mut pop = clones(30, &g, &mut e);
        let mut alg = Admga::new(ops, ThresholdMode::Dop);
        let mut rng = algorithm_stream(1);
        for _ in 0..3 {
            alg.step(&mut pop, &mut e, &mut rng).unwrap();
            assert!(pop.genomes().all(|x| x == &g));
        }
        // Once at 0 it bounces between 0 and 1: a T=0 batch of clones
        // succeeds outright (+1), a T=1 batch fails then succeeds at T=0
        // with tied counters (+1 after -1).
        assert!(alg.threshold().unwrap() <= 1);

        // RIGA keeps injecting new material.
        let mut spec = AlgorithmSpec::new(AlgorithmKind::RigaWorst, ops, 30);
        spec.immigrants = Some(4);
        let mut alg = spec.build().unwrap();
        let mut pop = clones(30, &g, &mut e);
        alg.step(&mut pop, &mut e, &mut rng).unwrap();
        assert!(pop.genomes().any(|x| x != &g));
    }

    #[test]
    fn clone_population_threshold_trace() {
        let mut e = env(3, 0.0, 1_000_000);
        let g = Bitstring::random(30, &mut algorithm_stream(8)).unwrap();
        let pop = clones(4, &g, &mut e);
        let mut alg = Admga::new(OperatorConfig::with_pm(0.0), ThresholdMode::Dop).with_initial_threshold(3);
        let out = alg.create_new(&pop, &mut algorithm_stream(3)).unwrap();
        // Hand trace, 2 events per batch: T=3,2,1 fail; T=0 succeeds twice.
        let expect = [
            (3, 0, 2, 0, 2),
            (2, 0, 4, 0, 1),
            (1, 0, 6, 0, 0),
            (0, 2, 6, 2, 0),
        ];
        let got: Vec<_> = out
            .batches
            .iter()
            .map(|b| (b.threshold, b.successes, b.failures, b.batch_successes, b.threshold_after))
            .collect();
        assert_eq!(got, expect);
        assert_eq!(out.offspring.len(), 4);
    }

    #[test]
    fn threshold_zero_on_spread_population_increments_once() {
        let mut e = env(3, 0.0, 1_000_000);
        let x = Bitstring::zeros(30);
        let pop = evaluate_all(vec![x.clone(), x.complement(), x.clone(), x.complement()], &mut e);
        let mut alg = Admga::new(OperatorConfig::with_pm(0.0), ThresholdMode::Dop).with_initial_threshold(0);
        let out = alg.create_new(&pop, &mut algorithm_stream(3)).unwrap();
        assert_eq!(out.batches.len(), 1);
        assert_eq!(out.batches[0].successes, 2);
        assert_eq!(alg.threshold(), Some(1));
    }

    #[test]
    fn mating_at_exact_threshold_succeeds() {
        let mut e = env(3, 0.0, 1_000_000);
        let a = Bitstring::zeros(30);
        let mut b = a.clone();
        for i in 0..5 {
            b.set(i, true);
        }
        // Only distances 0 and 5 occur; with T = 5 every cross pair mates.
        let pop = evaluate_all(vec![a, b], &mut e);
        let mut alg = Admga::new(OperatorConfig::with_pm(0.0), ThresholdMode::Dop).with_initial_threshold(5);
        let out = alg.create_new(&pop, &mut algorithm_stream(11)).unwrap();
        assert!(out.batches.iter().all(|r| r.threshold <= 5));
        assert!(out.batches.last().unwrap().batch_successes >= 1);
    }

    #[test]
    fn initial_thresholds() {
        assert_eq!(ThresholdMode::Dop.initial_threshold(30), 7);
        assert_eq!(ThresholdMode::Static.initial_threshold(30), 29);
        assert_eq!(ThresholdMode::Dop.initial_threshold(40), 10);
    }

    #[test]
    fn admga_dop_evicts_exactly_the_worst() {
        let mut e = env(3, 0.0, 1_000_000);
        let mut rng = algorithm_stream(21);
        let mut pop = initial_population(30, &mut e, &mut rng).unwrap();
        let mut alg = Admga::new(OperatorConfig::with_pm(0.0), ThresholdMode::Dop);
        // Force a tiny offspring set: a high threshold makes successes rare.
        alg.threshold = Some(30);
        let before = pop.clone();
        let mut probe = alg.clone();
        let produced = probe.create_new(&before, &mut rng.clone()).unwrap().offspring.len();
        alg.step(&mut pop, &mut e, &mut rng).unwrap();
        let worst = before.worst_indices(produced.min(28), &before.best_indices(2));
        for (i, m) in pop.members.iter().enumerate() {
            if !worst.contains(&i) {
                assert_eq!(m.genome, before.members[i].genome);
            }
        }
    }

    #[test]
    fn admga_static_merges_and_truncates() {
        let mut e = env(3, 0.0, 1_000_000);
        let mut rng = algorithm_stream(6);
        let mut pop = initial_population(30, &mut e, &mut rng).unwrap();
        let mut alg = Admga::new(OperatorConfig::with_pm(1.0 / 30.0), ThresholdMode::Static);
        assert_eq!(alg.clone().current_threshold(30), 29);
        for _ in 0..20 {
            let before = pop.clone();
            let evals = e.evaluations();
            alg.step(&mut pop, &mut e, &mut rng).unwrap();
            let children = (e.evaluations() - evals) as usize;
            assert_eq!(children, alg.last_batches().last().unwrap().successes * 2);
            assert_eq!(pop.len(), 30);
            // Truncation keeps the best 30 of parents and children.
            let mut old: Vec<f64> = before.members.iter().map(|m| m.fitness).collect();
            old.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut new: Vec<f64> = pop.members.iter().map(|m| m.fitness).collect();
            new.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(new.iter().zip(&old).all(|(n, o)| n >= o));
        }
    }

    #[test]
    fn ssga_survivors_come_from_previous_population() {
        let mut e = env(3, 0.0, 1_000_000);
        let mut rng = algorithm_stream(12);
        let mut pop = initial_population(30, &mut e, &mut rng).unwrap();
        let before = pop.clone();
        SteadyState::new(OperatorConfig::with_pm(1.0 / 30.0))
            .step(&mut pop, &mut e, &mut rng)
            .unwrap();
        let victims = before.worst_indices(15, &before.best_indices(2));
        for i in (0..30).filter(|i| !victims.contains(i)) {
            assert_eq!(pop.members[i].genome, before.members[i].genome);
        }
        let mut odd = initial_population(5, &mut e, &mut rng).unwrap();
        assert!(SteadyState::new(OperatorConfig::default()).step(&mut odd, &mut e, &mut rng).is_err());
    }

    #[test]
    fn riga_without_immigrants_is_gga() {
        let ops = OperatorConfig::with_pm(1.0 / 30.0);
        for replacement in [ImmigrantReplacement::Worst, ImmigrantReplacement::Random] {
            let (mut e1, mut e2) = (env(3, 0.6, 300), env(3, 0.6, 300));
            let (mut r1, mut r2) = (algorithm_stream(7), algorithm_stream(7));
            let mut p1 = initial_population(30, &mut e1, &mut r1).unwrap();
            let mut p2 = initial_population(30, &mut e2, &mut r2).unwrap();
            let mut gga = Generational::gga(ops);
            let mut riga = RandomImmigrants::new(ops, RigaConfig { immigrants: 0, replacement });
            for _ in 0..30 {
                gga.step(&mut p1, &mut e1, &mut r1).unwrap();
                riga.step(&mut p2, &mut e2, &mut r2).unwrap();
                assert_eq!(p1, p2);
                e1.end_generation();
                e2.end_generation();
            }
        }
    }

    #[test]
    fn riga_inserts_rr_immigrants() {
        let ops = OperatorConfig::with_pm(1.0 / 30.0);
        let mut e = env(3, 0.0, 1_000_000);
        let mut rng = algorithm_stream(13);
        let mut pop = initial_population(30, &mut e, &mut rng).unwrap();
        let mut riga = RandomImmigrants::new(ops, RigaConfig { immigrants: 4, replacement: ImmigrantReplacement::Worst });
        let before = pop.clone();
        let victims = before.worst_indices(4, &before.best_indices(2));
        riga.step(&mut pop, &mut e, &mut rng).unwrap();
        // The last four members are this generation's immigrants; the
        // other N - 4 come from the elites and offspring.
        let immigrants: Vec<&Bitstring> = pop.members[26..].iter().map(|m| &m.genome).collect();
        assert_eq!(immigrants.len(), 4);
        assert!(victims.iter().all(|&v| !immigrants.contains(&&before.members[v].genome)));
        assert_eq!(RigaConfig::default_immigrants(30), 4);
        assert_eq!(RigaConfig::default_immigrants(60), 8);
    }

    #[test]
    fn partner_pick_polarity() {
        let mut e = env(3, 0.0, 1_000_000);
        let first = Bitstring::zeros(30);
        let mut d3 = first.clone();
        let mut d5 = first.clone();
        for i in 0..3 {
            d3.set(i, true);
        }
        for i in 0..5 {
            d5.set(i, true);
        }
        let pop = evaluate_all(vec![first.clone(), first.clone(), d3, d5], &mut e);
        let neg = AmgaConfig { pool_size: 3, polarity: Polarity::Negative };
        let pos = AmgaConfig { pool_size: 3, polarity: Polarity::Positive };
        let mut rng = algorithm_stream(1);
        assert_eq!(amga_pick_partner(0, &pop, &neg, &mut rng).unwrap(), 3);
        assert_eq!(amga_pick_partner(0, &pop, &pos, &mut rng).unwrap(), 1);
        let one = AmgaConfig { pool_size: 1, polarity: Polarity::Negative };
        for _ in 0..20 {
            assert_ne!(amga_pick_partner(2, &pop, &one, &mut rng).unwrap(), 2);
        }
        let too_big = AmgaConfig { pool_size: 4, polarity: Polarity::Negative };
        assert!(amga_pick_partner(0, &pop, &too_big, &mut rng).is_err());
    }

    #[test]
    fn dissortative_pairs_cross_clusters() {
        // Two clusters of 10 around all-zeros and all-ones. Random mating
        // pairs across clusters about half the time; a pool of 4 almost
        // always contains someone from the other cluster.
        let mut e = env(3, 0.0, 1_000_000);
        let mut rng = algorithm_stream(99);
        let mut genomes = Vec::new();
        for base in [Bitstring::zeros(30), Bitstring::ones(30)] {
            for _ in 0..10 {
                let mut g = base.clone();
                bitflip_mutation(&mut g, 0.05, &mut rng);
                genomes.push(g);
            }
        }
        let pop = evaluate_all(genomes, &mut e);
        let cfg = AmgaConfig { pool_size: 4, polarity: Polarity::Negative };
        let trials = 2000;
        let (mut dis, mut rand_d) = (0usize, 0usize);
        for _ in 0..trials {
            let first = select_parent(&pop.members, crate::gacore::SelectionScheme::Tournament, &mut rng);
            let p = amga_pick_partner(first, &pop, &cfg, &mut rng).unwrap();
            let q = select_parent(&pop.members, crate::gacore::SelectionScheme::Tournament, &mut rng);
            dis += pop.members[first].genome.hamming(&pop.members[p].genome).unwrap();
            rand_d += pop.members[first].genome.hamming(&pop.members[q].genome).unwrap();
        }
        let (dis, rand_d) = (dis as f64 / trials as f64, rand_d as f64 / trials as f64);
        assert!(dis > rand_d + 5.0, "dissortative {dis} vs random {rand_d}");
    }

    #[test]
    fn spec_validation() {
        let ops = OperatorConfig::with_pm(0.01);
        assert!(AlgorithmSpec::new(AlgorithmKind::Ssga, ops, 31).validate().is_err());
        assert!(AlgorithmSpec::new(AlgorithmKind::Namga, ops, 30).validate().is_err());
        let mut s = AlgorithmSpec::new(AlgorithmKind::Pamga, ops, 30);
        s.pool_size = Some(30);
        assert!(s.validate().is_err());
        s.pool_size = Some(29);
        assert!(s.validate().is_ok());
        let mut r = AlgorithmSpec::new(AlgorithmKind::RigaWorst, ops, 30);
        r.immigrants = Some(29);
        assert!(r.validate().is_err());
        assert_eq!(AlgorithmSpec::new(AlgorithmKind::RigaRandom, ops, 30).label(), "riga_random(rr=4)");
    }
}
