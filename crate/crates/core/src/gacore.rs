//! Operators shared by every GA variant: parent selection, uniform
//! crossover, bit-flip mutation and 2-elitism, plus population bookkeeping.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::genome::{Bitstring, Words};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Bitstring,
    pub fitness: f64,
    /// Period index of the mask the fitness was computed under.
    pub evaluated_at_period: usize,
}

impl Individual {
    pub fn new(genome: Bitstring, fitness: f64, evaluated_at_period: usize) -> Self {
        Individual {
            genome,
            fitness,
            evaluated_at_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Population {
    pub members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Self {
        Population { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn genomes(&self) -> impl Iterator<Item = &Bitstring> {
        self.members.iter().map(|m| &m.genome)
    }

    pub fn best_fitness(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.fitness)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_fitness(&self) -> f64 {
        self.members.iter().map(|m| m.fitness).sum::<f64>() / self.members.len() as f64
    }

    /// Indices of the `k` fittest members: fitness descending, then index
    /// ascending.
    pub fn best_indices(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&i, &j| {
            cmp_fitness(self.members[j].fitness, self.members[i].fitness).then(i.cmp(&j))
        });
        idx.truncate(k);
        idx
    }

    /// Indices of the `k` worst members not in `protected`: fitness
    /// ascending, then index descending.
    pub fn worst_indices(&self, k: usize, protected: &[usize]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).filter(|i| !protected.contains(i)).collect();
        idx.sort_by(|&i, &j| {
            cmp_fitness(self.members[i].fitness, self.members[j].fitness).then(j.cmp(&i))
        });
        idx.truncate(k);
        idx
    }
}

fn cmp_fitness(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScheme {
    /// Binary tournament with replacement; ties settled by a fair coin.
    #[default]
    Tournament,
    /// Fitness-proportional (roulette wheel).
    Roulette,
}

impl SelectionScheme {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionScheme::Tournament => "tournament",
            SelectionScheme::Roulette => "roulette",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub pc: f64,
    pub pm: f64,
    pub selection: SelectionScheme,
    pub elitism: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            pc: 1.0,
            pm: 0.0,
            selection: SelectionScheme::Tournament,
            elitism: 2,
        }
    }
}

impl OperatorConfig {
    pub fn with_pm(pm: f64) -> Self {
        OperatorConfig {
            pm,
            ..OperatorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pm) {
            return Err(Error::Config(format!("pm = {} must lie in [0, 1]", self.pm)));
        }
        if !(0.0..=1.0).contains(&self.pc) {
            return Err(Error::Config(format!("pc = {} must lie in [0, 1]", self.pc)));
        }
        Ok(())
    }
}

/// Index of a parent drawn from `members` under `scheme`.
pub fn select_parent(members: &[Individual], scheme: SelectionScheme, rng: &mut RandomStream) -> usize {
    assert!(!members.is_empty(), "selection from an empty population");
    let n = members.len();
    match scheme {
        SelectionScheme::Tournament => {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            match cmp_fitness(members[i].fitness, members[j].fitness) {
                Ordering::Greater => i,
                Ordering::Less => j,
                Ordering::Equal => {
                    if rng.random_bool(0.5) {
                        i
                    } else {
                        j
                    }
                }
            }
        }
        SelectionScheme::Roulette => {
            let total: f64 = members.iter().map(|m| m.fitness.max(0.0)).sum();
            if total <= 0.0 {
                return rng.random_range(0..n);
            }
            let mut spin = rng.random::<f64>() * total;
            for (i, m) in members.iter().enumerate() {
                spin -= m.fitness.max(0.0);
                if spin < 0.0 {
                    return i;
                }
            }
            // Rounding can leave a sliver past the last slot.
            (0..n).rev().find(|&i| members[i].fitness > 0.0).unwrap_or(n - 1)
        }
    }
}

/// Per locus, the first child inherits from `p1` or `p2` with equal
/// probability and the second child takes the other allele.
pub fn uniform_crossover(
    p1: &Bitstring,
    p2: &Bitstring,
    rng: &mut RandomStream,
) -> Result<(Bitstring, Bitstring)> {
    check_len(p1.len(), p2.len())?;
    let mut c1 = Words::with_capacity(p1.words().len());
    let mut c2 = Words::with_capacity(p1.words().len());
    for (&a, &b) in p1.words().iter().zip(p2.words()) {
        let take_first: u64 = rng.random();
        c1.push((a & take_first) | (b & !take_first));
        c2.push((b & take_first) | (a & !take_first));
    }
    Ok((
        Bitstring::from_words(p1.len(), c1),
        Bitstring::from_words(p1.len(), c2),
    ))
}

/// Crossover with probability `pc`; otherwise the parents are cloned. No
/// random number is drawn for the coin when `pc` is 1.
pub fn recombine(
    p1: &Bitstring,
    p2: &Bitstring,
    pc: f64,
    rng: &mut RandomStream,
) -> Result<(Bitstring, Bitstring)> {
    if pc >= 1.0 || rng.random::<f64>() < pc {
        uniform_crossover(p1, p2, rng)
    } else {
        check_len(p1.len(), p2.len())?;
        Ok((p1.clone(), p2.clone()))
    }
}

/// Flips every bit independently with probability `pm`.
///
/// Positions are visited by geometric skipping, which draws one number per
/// flip instead of one per bit.
pub fn bitflip_mutation(x: &mut Bitstring, pm: f64, rng: &mut RandomStream) {
    if pm <= 0.0 {
        return;
    }
    if pm >= 1.0 {
        *x = x.complement();
        return;
    }
    let log_q = (-pm).ln_1p();
    let len = x.len();
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.random();
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !gap.is_finite() || gap >= (len - pos) as f64 {
            break;
        }
        pos += gap as usize;
        x.flip(pos);
        pos += 1;
        if pos >= len {
            break;
        }
    }
}

/// Guarantees the previous elites survive: each elite whose genome is
/// missing from `pop` and whose fitness (under the current mask) beats the
/// worst unprotected member replaces that member. Elites already present
/// or worse than everyone leave `pop` unchanged.
pub fn apply_elitism(elites: &[Individual], pop: &mut Population) {
    let mut protected: Vec<usize> = Vec::with_capacity(elites.len());
    for elite in elites {
        if let Some(i) = pop.members.iter().position(|m| m.genome == elite.genome) {
            protected.push(i);
            continue;
        }
        let Some(&worst) = pop.worst_indices(1, &protected).first() else {
            continue;
        };
        if elite.fitness > pop.members[worst].fitness {
            pop.members[worst] = elite.clone();
            protected.push(worst);
        }
    }
}
