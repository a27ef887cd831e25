//! Order-`l` trap functions and their concatenation into `m`-block problems.
//!
//! A trap is a piecewise-linear function of unitation with a deceptive local
//! optimum of height `a` at unitation 0 and a global optimum of height `b`
//! at unitation `l`, the slope changing at `z`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::genome::Bitstring;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    order: usize,
    a: f64,
    b: f64,
    z: usize,
}

impl TrapSpec {
    pub fn new(order: usize, a: f64, b: f64, z: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Domain(format!("trap order must be at least 2, got {order}")));
        }
        if z == 0 || z >= order {
            return Err(Error::Domain(format!(
                "slope change z = {z} must lie in [1, {}]",
                order - 1
            )));
        }
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!(
                "optimum heights must be positive, got a = {a}, b = {b}"
            )));
        }
        Ok(TrapSpec { order, a, b, z })
    }

    /// The family `a = l - 1`, `b = l`, `z = l - 1`.
    pub fn canonical(order: usize) -> Result<Self> {
        let z = order.saturating_sub(1);
        TrapSpec::new(order, z as f64, order as f64, z)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn local_optimum(&self) -> f64 {
        self.a
    }

    pub fn global_optimum(&self) -> f64 {
        self.b
    }

    pub fn slope_change(&self) -> usize {
        self.z
    }

    pub fn is_canonical(&self) -> bool {
        let l = self.order as f64;
        self.a == l - 1.0 && self.b == l && self.z == self.order - 1
    }

    /// Trap value of a block with `u` ones.
    pub fn value(&self, u: usize) -> Result<f64> {
        if u > self.order {
            return Err(Error::Domain(format!(
                "unitation {u} exceeds trap order {}",
                self.order
            )));
        }
        Ok(self.value_unchecked(u))
    }

    fn value_unchecked(&self, u: usize) -> f64 {
        let (u, z, l) = (u as f64, self.z as f64, self.order as f64);
        if u <= z {
            self.a / z * (z - u)
        } else {
            self.b / (l - z) * (u - z)
        }
    }

    /// Ratio `a / b` between local and global optimum.
    pub fn ratio(&self) -> f64 {
        self.a / self.b
    }

    /// Lower bound on `a / b` above which the trap is deceptive:
    /// `(2 - 1/(l - z)) / (2 - 1/z)`, with `l` the block order.
    pub fn deceptiveness_threshold(&self) -> f64 {
        let (z, l) = (self.z as f64, self.order as f64);
        (2.0 - 1.0 / (l - z)) / (2.0 - 1.0 / z)
    }

    /// `ratio() >= deceptiveness_threshold()`, equality within rounding
    /// counted as deceptive (the canonical order-3 trap sits exactly on the
    /// boundary).
    pub fn is_deceptive(&self) -> bool {
        let (r, t) = (self.ratio(), self.deceptiveness_threshold());
        r >= t || (t - r).abs() <= 1e-12 * t.abs()
    }
}

/// `blocks` traps juxtaposed over consecutive bit ranges; block `i` covers
/// bits `[i * l, (i + 1) * l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatTrap {
    spec: TrapSpec,
    blocks: usize,
    table: Vec<f64>,
    /// Block value indexed by the block's raw bit pattern, for short blocks.
    patterns: Option<Vec<f64>>,
}

/// Longest block order that gets a bit-pattern lookup table.
const PATTERN_TABLE_MAX_ORDER: usize = 12;

impl ConcatTrap {
    pub fn new(spec: TrapSpec, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::Domain("a trap problem needs at least one block".into()));
        }
        let table: Vec<f64> = (0..=spec.order).map(|u| spec.value_unchecked(u)).collect();
        let patterns = (spec.order <= PATTERN_TABLE_MAX_ORDER).then(|| {
            (0u32..1 << spec.order)
                .map(|p| table[p.count_ones() as usize])
                .collect()
        });
        Ok(ConcatTrap {
            spec,
            blocks,
            table,
            patterns,
        })
    }

    pub fn canonical(order: usize, blocks: usize) -> Result<Self> {
        ConcatTrap::new(TrapSpec::canonical(order)?, blocks)
    }

    pub fn spec(&self) -> &TrapSpec {
        &self.spec
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Total genome length `m * l`.
    pub fn len(&self) -> usize {
        self.blocks * self.spec.order
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `m * max(a, b)`; equals `m * b` for every deceptive configuration.
    pub fn max_fitness(&self) -> f64 {
        self.blocks as f64 * self.spec.a.max(self.spec.b)
    }

    pub fn fitness(&self, x: &Bitstring) -> Result<f64> {
        check_len(self.len(), x.len())?;
        Ok(self.fitness_unchecked(x))
    }

    #[inline]
    pub(crate) fn block_value(&self, u: usize) -> f64 {
        self.table[u]
    }

    /// Per-pattern block values when the order is small enough.
    #[inline]
    pub(crate) fn pattern_table(&self) -> Option<&[f64]> {
        self.patterns.as_deref()
    }

    pub(crate) fn fitness_unchecked(&self, x: &Bitstring) -> f64 {
        let l = self.spec.order;
        (0..self.blocks)
            .map(|i| self.table[x.unitation_in(i * l, l)])
            .sum()
    }

    /// Unitation of every block, in block order.
    pub fn block_unitations(&self, x: &Bitstring) -> Result<Vec<usize>> {
        check_len(self.len(), x.len())?;
        let l = self.spec.order;
        Ok((0..self.blocks).map(|i| x.unitation_in(i * l, l)).collect())
    }
}
