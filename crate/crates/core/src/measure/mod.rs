//! Lebesgue measure on `[0, alpha)`, interval blocks, partitions and step
//! functions.
//!
//! Everything downstream works on piecewise-constant functions over finitely
//! many half-open intervals, so every integral in the crate is an exact finite
//! sum.

mod egorov;
mod partition;
mod step;

pub use egorov::{egorov_uniform_set, EgorovWitness};
pub use partition::{common_refinement, is_refinement, refinement_chain, Partition};
pub use step::{canonicalize, StepFunction, ValueNorm};

use crate::error::{Error, Result};

/// Breakpoints closer than this are identified; blocks thinner than this are
/// treated as null sets.
pub const BREAKPOINT_TOL: f64 = 1e-12;

/// Half-open interval `[start, end)` with positive length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    start: f64,
    end: f64,
}

impl Block {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::MalformedInput(format!(
                "block endpoints must be finite, got [{start}, {end})"
            )));
        }
        if start >= end {
            return Err(Error::MalformedInput(format!(
                "block [{start}, {end}) is empty or reversed"
            )));
        }
        Ok(Self { start, end })
    }

    pub(crate) fn new_unchecked(start: f64, end: f64) -> Self {
        debug_assert!(start < end);
        Self { start, end }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn measure(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// Intersection, or `None` when it is null.
    pub fn intersect(&self, other: &Block) -> Option<Block> {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        (hi - lo > BREAKPOINT_TOL).then(|| Block::new_unchecked(lo, hi))
    }

    pub fn contains_block(&self, other: &Block) -> bool {
        other.start >= self.start - BREAKPOINT_TOL && other.end <= self.end + BREAKPOINT_TOL
    }
}

/// `[0, alpha)` with Lebesgue measure, plus the exhaustion `T_n = [0, t_n)`
/// used for domain truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    alpha: f64,
    exhaustion: Vec<f64>,
}

impl MeasureSpace {
    /// `alpha` may be `f64::INFINITY`. Cutoffs must be strictly increasing,
    /// positive, and no larger than `alpha`.
    pub fn new(alpha: f64, exhaustion: Vec<f64>) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if exhaustion.is_empty() {
            return Err(Error::InvalidParameter("exhaustion must be nonempty".into()));
        }
        for w in exhaustion.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "exhaustion cutoffs must be strictly increasing".into(),
                ));
            }
        }
        for &t in &exhaustion {
            if !t.is_finite() || t <= 0.0 || t > alpha {
                return Err(Error::InvalidParameter(format!(
                    "cutoff {t} must be finite and lie in (0, alpha]"
                )));
            }
        }
        Ok(Self { alpha, exhaustion })
    }

    /// The unit interval with the single cutoff `t_1 = 1`.
    pub fn unit() -> Self {
        Self { alpha: 1.0, exhaustion: vec![1.0] }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn exhaustion(&self) -> &[f64] {
        &self.exhaustion
    }

    pub fn levels(&self) -> usize {
        self.exhaustion.len()
    }

    /// Cutoff `t_n` for the 1-based index `n`.
    pub fn cutoff(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.exhaustion.len() {
            return Err(Error::InvalidParameter(format!(
                "exhaustion index {n} outside 1..={}",
                self.exhaustion.len()
            )));
        }
        Ok(self.exhaustion[n - 1])
    }
}

/// Finite disjoint union of blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurableSet {
    blocks: Vec<Block>,
}

impl MeasurableSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Union of arbitrary (possibly overlapping) blocks.
    pub fn from_blocks(blocks: impl IntoIterator<Item = Block>) -> Self {
        let mut blocks: Vec<Block> = blocks.into_iter().collect();
        blocks.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut merged: Vec<Block> = Vec::with_capacity(blocks.len());
        for b in blocks {
            match merged.last_mut() {
                Some(last) if b.start <= last.end + BREAKPOINT_TOL => {
                    last.end = last.end.max(b.end);
                }
                _ => merged.push(b),
            }
        }
        Self { blocks: merged }
    }

    pub fn union(&self, other: &MeasurableSet) -> MeasurableSet {
        MeasurableSet::from_blocks(self.blocks.iter().chain(other.blocks.iter()).copied())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.blocks.iter().map(Block::measure).sum()
    }

    /// Measure of `block \ self`.
    pub fn measure_outside(&self, block: &Block) -> f64 {
        let covered: f64 = self
            .blocks
            .iter()
            .filter_map(|b| b.intersect(block))
            .map(|b| b.measure())
            .sum();
        (block.measure() - covered).max(0.0)
    }
}

/// Sorted, deduplicated breakpoints; values within [`BREAKPOINT_TOL`] of the
/// previous kept value are dropped.
pub(crate) fn merge_breakpoints(mut points: Vec<f64>) -> Vec<f64> {
    points.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(points.len());
    for p in points {
        match out.last() {
            Some(&last) if p - last <= BREAKPOINT_TOL => {}
            _ => out.push(p),
        }
    }
    out
}

/// Index of the block (sorted, disjoint) containing `t`.
pub(crate) fn locate(blocks: &[Block], t: f64) -> Option<usize> {
    let idx = blocks.partition_point(|b| b.start <= t);
    if idx == 0 {
        return None;
    }
    let i = idx - 1;
    (t < blocks[i].end).then_some(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_rejects_empty_and_reversed() {
        assert!(Block::new(1.0, 1.0).is_err());
        assert!(Block::new(2.0, 1.0).is_err());
        assert!(Block::new(0.0, f64::INFINITY).is_err());
        assert_eq!(Block::new(0.5, 2.0).unwrap().measure(), 1.5);
    }

    #[test]
    fn measure_space_validation() {
        assert!(MeasureSpace::new(0.0, vec![1.0]).is_err());
        assert!(MeasureSpace::new(1.0, vec![]).is_err());
        assert!(MeasureSpace::new(1.0, vec![0.5, 0.5]).is_err());
        assert!(MeasureSpace::new(1.0, vec![2.0]).is_err());
        assert!(MeasureSpace::new(f64::INFINITY, vec![f64::INFINITY]).is_err());
        let s = MeasureSpace::new(f64::INFINITY, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.cutoff(2).unwrap(), 2.0);
        assert!(s.cutoff(0).is_err());
        assert!(s.cutoff(4).is_err());
    }

    #[test]
    fn measurable_set_merges_overlaps() {
        let s = MeasurableSet::from_blocks([
            Block::new(1.0, 2.0).unwrap(),
            Block::new(0.0, 1.0).unwrap(),
            Block::new(1.5, 3.0).unwrap(),
            Block::new(5.0, 6.0).unwrap(),
        ]);
        assert_eq!(s.blocks().len(), 2);
        assert_eq!(s.measure(), 4.0);
        assert_eq!(s.measure_outside(&Block::new(2.5, 5.5).unwrap()), 2.0);
    }

    #[test]
    fn locate_finds_half_open_blocks() {
        let blocks = [Block::new(0.0, 1.0).unwrap(), Block::new(2.0, 3.0).unwrap()];
        assert_eq!(locate(&blocks, 0.0), Some(0));
        assert_eq!(locate(&blocks, 1.0), None);
        assert_eq!(locate(&blocks, 2.5), Some(1));
        assert_eq!(locate(&blocks, -1.0), None);
        assert_eq!(locate(&blocks, 3.0), None);
    }
}
