//! XOR-mask dynamic environments.
//!
//! A static problem `f` becomes dynamic through `f(x XOR M(k))`, where the
//! mask for period `k` is `M(k) = M(k-1) XOR T(k)` and each transition mask
//! `T(k)` has exactly `round(rho * L)` ones at distinct random positions.
//! `M(0)` is all zeros, so period 0 is the static problem itself.
//!
//! Speed is measured in fitness evaluations: the mask advances once the
//! evaluation counter has crossed the next multiple of `epsilon`. The check
//! runs once per generation, after that generation's evaluations.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::genome::Bitstring;
use crate::rng::RandomStream;
use crate::traps::ConcatTrap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    pub rho: f64,
    pub epsilon: u64,
    pub periods: usize,
}

impl DynamicsSpec {
    pub fn new(rho: f64, epsilon: u64, periods: usize) -> Result<Self> {
        let spec = DynamicsSpec { rho, epsilon, periods };
        spec.validate()?;
        Ok(spec)
    }

    /// A problem that never changes within `budget` evaluations.
    pub fn stationary(budget: u64) -> Self {
        DynamicsSpec {
            rho: 0.0,
            epsilon: budget.max(1),
            periods: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho = {} must lie in [0, 1]", self.rho)));
        }
        if self.epsilon == 0 {
            return Err(Error::Config("epsilon must be at least 1".into()));
        }
        if self.periods == 0 {
            return Err(Error::Config("periods must be at least 1".into()));
        }
        Ok(())
    }

    /// Run length in evaluations.
    pub fn budget(&self) -> u64 {
        self.epsilon * self.periods as u64
    }
}

/// Ones per transition mask: `rho * len` rounded to the nearest integer,
/// halves rounding up.
pub fn flip_count(rho: f64, len: usize) -> usize {
    // The epsilon absorbs representation error in products such as
    // 0.05 * 50 that are meant to be exact halves.
    ((rho * len as f64) + 0.5 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskState {
    mask: Bitstring,
    period: usize,
    flip_count: usize,
}

impl MaskState {
    pub fn initial(len: usize, flip_count: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Domain("mask length must be at least 1".into()));
        }
        if flip_count > len {
            return Err(Error::Domain(format!(
                "flip count {flip_count} exceeds mask length {len}"
            )));
        }
        Ok(MaskState {
            mask: Bitstring::zeros(len),
            period: 0,
            flip_count,
        })
    }

    pub fn for_severity(len: usize, rho: f64) -> Result<Self> {
        MaskState::initial(len, flip_count(rho, len))
    }

    pub fn mask(&self) -> &Bitstring {
        &self.mask
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn flip_count(&self) -> usize {
        self.flip_count
    }

    /// Draws `T(k)` and moves to the next period. Returns `T(k)`.
    pub fn advance(&mut self, rng: &mut RandomStream) -> Bitstring {
        let len = self.mask.len();
        let mut transition = Bitstring::zeros(len);
        for pos in index::sample(rng, len, self.flip_count) {
            transition.set(pos, true);
        }
        self.mask = self.mask.xor_unchecked(&transition);
        self.period += 1;
        transition
    }

    /// Advances until the period index matches `eval_counter / epsilon`,
    /// never beyond the last period. Returns the number of advances.
    pub fn maybe_change(
        &mut self,
        eval_counter: u64,
        spec: &DynamicsSpec,
        rng: &mut RandomStream,
    ) -> usize {
        let target = ((eval_counter / spec.epsilon) as usize).min(spec.periods - 1);
        let mut advanced = 0;
        while self.period < target {
            self.advance(rng);
            advanced += 1;
        }
        advanced
    }
}

/// A static trap problem under an evolving mask, with the evaluation
/// counter every algorithm is charged against.
#[derive(Debug, Clone)]
pub struct Environment {
    problem: ConcatTrap,
    dynamics: DynamicsSpec,
    state: MaskState,
    evaluations: u64,
    rng: RandomStream,
    history: Option<Vec<Bitstring>>,
}

impl Environment {
    pub fn new(problem: ConcatTrap, dynamics: DynamicsSpec, rng: RandomStream) -> Result<Self> {
        dynamics.validate()?;
        let state = MaskState::for_severity(problem.len(), dynamics.rho)?;
        Ok(Environment {
            problem,
            dynamics,
            state,
            evaluations: 0,
            rng,
            history: None,
        })
    }

    /// Keep every mask `M(0), M(1), ...` for later inspection.
    pub fn record_masks(mut self) -> Self {
        self.history = Some(vec![self.state.mask.clone()]);
        self
    }

    pub fn problem(&self) -> &ConcatTrap {
        &self.problem
    }

    pub fn dynamics(&self) -> &DynamicsSpec {
        &self.dynamics
    }

    pub fn genome_len(&self) -> usize {
        self.problem.len()
    }

    pub fn state(&self) -> &MaskState {
        &self.state
    }

    pub fn period(&self) -> usize {
        self.state.period
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn mask_history(&self) -> Option<&[Bitstring]> {
        self.history.as_deref()
    }

    /// `f(x XOR M(k))`; charges one evaluation.
    pub fn evaluate(&mut self, x: &Bitstring) -> Result<f64> {
        check_len(self.problem.len(), x.len())?;
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&mut self, x: &Bitstring) -> f64 {
        self.evaluations += 1;
        self.peek(x)
    }

    /// Fitness under the current mask without charging an evaluation. For
    /// audits and tests only; algorithms must go through [`evaluate`].
    ///
    /// [`evaluate`]: Environment::evaluate
    pub fn peek(&self, x: &Bitstring) -> f64 {
        let l = self.problem.spec().order();
        let mask = &self.state.mask;
        let mut total = 0.0;
        if l > 64 {
            for i in 0..self.problem.blocks() {
                let u = (i * l..(i + 1) * l).filter(|&j| x.get(j) != mask.get(j)).count();
                total += self.problem.block_value(u);
            }
            return total;
        }
        let (xw, mw) = (x.words(), mask.words());
        let low = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
        let patterns = self.problem.pattern_table();
        for i in 0..self.problem.blocks() {
            let start = i * l;
            let (w, off) = (start / 64, start % 64);
            let mut v = (xw[w] ^ mw[w]) >> off;
            if off + l > 64 {
                v |= (xw[w + 1] ^ mw[w + 1]) << (64 - off);
            }
            let v = v & low;
            total += match patterns {
                Some(t) => t[v as usize],
                None => self.problem.block_value(v.count_ones() as usize),
            };
        }
        total
    }

    /// End-of-generation hook: applies any pending environmental change.
    pub fn end_generation(&mut self) -> usize {
        let advanced = self
            .state
            .maybe_change(self.evaluations, &self.dynamics, &mut self.rng);
        if advanced > 0 {
            if let Some(h) = self.history.as_mut() {
                h.push(self.state.mask.clone());
            }
        }
        advanced
    }
}
