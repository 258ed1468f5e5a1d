use serde::{Deserialize, Serialize};

use super::{locate, merge_breakpoints, Block, Partition, BREAKPOINT_TOL};
use crate::error::{Error, Result};

/// Norm on the value space `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ValueNorm {
    #[default]
    Euclidean,
    Max,
    Sum,
}

impl ValueNorm {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            ValueNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            ValueNorm::Max => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            ValueNorm::Sum => v.iter().map(|x| x.abs()).sum(),
        }
    }

    /// Norm of a vector whose every coordinate has absolute value one.
    pub fn unit_cube_corner(&self, dim: usize) -> f64 {
        match self {
            ValueNorm::Euclidean => (dim as f64).sqrt(),
            ValueNorm::Max => 1.0,
            ValueNorm::Sum => dim as f64,
        }
    }
}

/// Piecewise-constant `R^d`-valued function on finitely many disjoint blocks;
/// zero off the blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    dim: usize,
    value_norm: ValueNorm,
    partition: Partition,
    // row-major, `dim` entries per block
    values: Vec<f64>,
}

impl StepFunction {
    pub fn zero(dim: usize, value_norm: ValueNorm) -> Self {
        Self { dim, value_norm, partition: Partition::default(), values: Vec::new() }
    }

    /// Builds a step function from unsorted pieces. Overlaps are rejected;
    /// null blocks are dropped. Equal neighbours are not merged (see
    /// [`StepFunction::canonical`]).
    pub fn from_pieces(
        dim: usize,
        value_norm: ValueNorm,
        pieces: impl IntoIterator<Item = (Block, Vec<f64>)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedInput("value dimension must be positive".into()));
        }
        let mut pieces: Vec<(Block, Vec<f64>)> = pieces
            .into_iter()
            .filter(|(b, _)| b.measure() > BREAKPOINT_TOL)
            .collect();
        for (_, v) in &pieces {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedInput("step function values must be finite".into()));
            }
        }
        pieces.sort_by(|a, b| a.0.start().total_cmp(&b.0.start()));
        let order: Vec<Block> = pieces.iter().map(|(b, _)| *b).collect();
        let partition = Partition::new(order)?;
        let values = pieces.into_iter().flat_map(|(_, v)| v).collect();
        Ok(Self { dim, value_norm, partition, values })
    }

    /// Scalar function from `(start, end, value)` triples.
    pub fn scalar(pieces: &[(f64, f64, f64)]) -> Result<Self> {
        let pieces = pieces
            .iter()
            .map(|&(a, b, v)| Ok((Block::new(a, b)?, vec![v])))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pieces(1, ValueNorm::Euclidean, pieces)
    }

    /// `value · χ_[start, end)`.
    pub fn indicator(start: f64, end: f64, value: Vec<f64>, value_norm: ValueNorm) -> Result<Self> {
        let dim = value.len();
        Self::from_pieces(dim, value_norm, [(Block::new(start, end)?, value)])
    }

    /// One value row per block of `partition`.
    pub fn on_partition(
        partition: Partition,
        dim: usize,
        value_norm: ValueNorm,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || values.len() != dim * partition.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * partition.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::MalformedInput("step function values must be finite".into()));
        }
        Ok(Self { dim, value_norm, partition, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_norm(&self) -> ValueNorm {
        self.value_norm
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn blocks(&self) -> &[Block] {
        self.partition.blocks()
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Block, &[f64])> + '_ {
        self.partition.blocks().iter().zip(self.values.chunks_exact(self.dim))
    }

    /// Value at `t` (zero off the blocks).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        match locate(self.blocks(), t) {
            Some(i) => self.value(i).to_vec(),
            None => vec![0.0; self.dim],
        }
    }

    /// Merges touching neighbours carrying identical vectors. Zero blocks are
    /// kept, so the canonical form still records where the function was
    /// declared.
    pub fn canonical(&self) -> StepFunction {
        let mut blocks: Vec<Block> = Vec::with_capacity(self.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.values.len());
        for (b, v) in self.pieces() {
            if let Some(last) = blocks.last_mut() {
                let last_v = &values[values.len() - self.dim..];
                if (b.start() - last.end()).abs() <= BREAKPOINT_TOL && last_v == v {
                    *last = Block::new_unchecked(last.start(), b.end());
                    continue;
                }
            }
            blocks.push(*b);
            values.extend_from_slice(v);
        }
        StepFunction {
            dim: self.dim,
            value_norm: self.value_norm,
            partition: Partition::from_sorted_unchecked(blocks),
            values,
        }
    }

    pub fn norm_at(&self, i: usize) -> f64 {
        self.value_norm.norm(self.value(i))
    }

    /// `‖f(t)‖` as a scalar step function on the same blocks.
    pub fn pointwise_norm(&self) -> StepFunction {
        let values = (0..self.len()).map(|i| self.norm_at(i)).collect();
        StepFunction {
            dim: 1,
            value_norm: ValueNorm::Euclidean,
            partition: self.partition.clone(),
            values,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|i| self.norm_at(i)).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    /// Measure of `{t : f(t) != 0}`.
    pub fn support_measure(&self) -> f64 {
        self.pieces()
            .filter(|(_, v)| v.iter().any(|&x| x != 0.0))
            .map(|(b, _)| b.measure())
            .sum()
    }

    /// Blockwise integral: `Σ w_i μ(block_i)`.
    pub fn integral(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for (b, v) in self.pieces() {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x * b.measure();
            }
        }
        acc
    }

    pub fn map_values(&self, mut op: impl FnMut(&[f64]) -> Vec<f64>) -> StepFunction {
        let mut values = Vec::with_capacity(self.values.len());
        for v in self.values.chunks_exact(self.dim) {
            let out = op(v);
            debug_assert_eq!(out.len(), self.dim);
            values.extend(out);
        }
        StepFunction { values, ..self.clone() }
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        self.map_values(|v| v.iter().map(|x| c * x).collect())
    }

    pub fn neg(&self) -> StepFunction {
        self.map_values(|v| v.iter().map(|x| -x).collect())
    }

    fn check_compatible(&self, other: &StepFunction) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.value_norm != other.value_norm {
            return Err(Error::NormMismatch);
        }
        Ok(())
    }

    /// Pieces of the common refinement of both supports, with the block
    /// index in each operand.
    pub(crate) fn overlay(&self, other: &StepFunction) -> Vec<(Block, Option<usize>, Option<usize>)> {
        let points = merge_breakpoints(
            self.partition
                .breakpoints()
                .into_iter()
                .chain(other.partition.breakpoints())
                .collect(),
        );
        let mut out = Vec::with_capacity(points.len());
        for w in points.windows(2) {
            if w[1] - w[0] <= BREAKPOINT_TOL {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let (i, j) = (self.partition.locate(mid), other.partition.locate(mid));
            if i.is_some() || j.is_some() {
                out.push((Block::new_unchecked(w[0], w[1]), i, j));
            }
        }
        out
    }

    /// Pointwise combination on the common refinement; missing values are
    /// zero vectors.
    pub fn combine(
        &self,
        other: &StepFunction,
        mut op: impl FnMut(&[f64], &[f64]) -> Vec<f64>,
    ) -> Result<StepFunction> {
        self.check_compatible(other)?;
        let zero = vec![0.0; self.dim];
        let pieces = self.overlay(other);
        let mut blocks = Vec::with_capacity(pieces.len());
        let mut values = Vec::with_capacity(pieces.len() * self.dim);
        for (b, i, j) in pieces {
            let a = i.map_or(zero.as_slice(), |i| self.value(i));
            let c = j.map_or(zero.as_slice(), |j| other.value(j));
            blocks.push(b);
            values.extend(op(a, c));
        }
        Ok(StepFunction {
            dim: self.dim,
            value_norm: self.value_norm,
            partition: Partition::from_sorted_unchecked(blocks),
            values,
        })
    }

    pub fn add(&self, other: &StepFunction) -> Result<StepFunction> {
        self.combine(other, |a, b| a.iter().zip(b).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, other: &StepFunction) -> Result<StepFunction> {
        self.combine(other, |a, b| a.iter().zip(b).map(|(x, y)| x - y).collect())
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &StepFunction, b: f64) -> Result<StepFunction> {
        self.combine(other, |x, y| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect())
    }

    /// Equality almost everywhere, compared exactly on the common refinement.
    pub fn ae_eq(&self, other: &StepFunction) -> bool {
        if self.check_compatible(other).is_err() {
            return false;
        }
        let zero = vec![0.0; self.dim];
        self.overlay(other).into_iter().all(|(_, i, j)| {
            let a = i.map_or(zero.as_slice(), |i| self.value(i));
            let c = j.map_or(zero.as_slice(), |j| other.value(j));
            a == c
        })
    }

    /// `f · χ_[lo, hi)`.
    pub fn restrict(&self, lo: f64, hi: f64) -> StepFunction {
        let window = Block::new_unchecked(lo, hi.max(lo + f64::MIN_POSITIVE));
        let mut blocks = Vec::new();
        let mut values = Vec::new();
        for (b, v) in self.pieces() {
            if let Some(piece) = b.intersect(&window) {
                blocks.push(piece);
                values.extend_from_slice(v);
            }
        }
        StepFunction {
            dim: self.dim,
            value_norm: self.value_norm,
            partition: Partition::from_sorted_unchecked(blocks),
            values,
        }
    }

    /// Rewrites `self` on a partition refining its blocks; pieces of the
    /// partition outside the support get zero values.
    pub fn on_refinement(&self, partition: &Partition) -> StepFunction {
        let mut values = Vec::with_capacity(partition.len() * self.dim);
        for b in partition.blocks() {
            values.extend(self.eval(b.midpoint()));
        }
        StepFunction {
            dim: self.dim,
            value_norm: self.value_norm,
            partition: partition.clone(),
            values,
        }
    }
}

/// Sort, reject overlaps, merge equal neighbours.
pub fn canonicalize(
    dim: usize,
    value_norm: ValueNorm,
    pieces: impl IntoIterator<Item = (Block, Vec<f64>)>,
) -> Result<StepFunction> {
    Ok(StepFunction::from_pieces(dim, value_norm, pieces)?.canonical())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(a: f64, c: f64) -> Block {
        Block::new(a, c).unwrap()
    }

    #[test]
    fn canonicalize_merges_equal_neighbours() {
        let f = canonicalize(1, ValueNorm::Euclidean, [(b(1.0, 2.0), vec![2.0]), (b(0.0, 1.0), vec![2.0])])
            .unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.blocks()[0], b(0.0, 2.0));
        assert_eq!(f.value(0), &[2.0]);
    }

    #[test]
    fn canonicalize_empty_and_already_canonical() {
        let z = canonicalize(1, ValueNorm::Euclidean, Vec::new()).unwrap();
        assert!(z.is_empty());
        assert!(z.is_zero());
        let f = StepFunction::scalar(&[(0.0, 1.0, 1.0), (1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(f.canonical(), f);
    }

    #[test]
    fn canonicalize_rejects_overlap() {
        let err = canonicalize(1, ValueNorm::Euclidean, [(b(0.0, 1.0), vec![1.0]), (b(0.5, 2.0), vec![1.0])]);
        assert!(matches!(err, Err(Error::MalformedInput(_))));
    }

    #[test]
    fn canonical_keeps_gaps_unmerged() {
        let f = StepFunction::scalar(&[(0.0, 1.0, 1.0), (2.0, 3.0, 1.0)]).unwrap();
        assert_eq!(f.canonical().len(), 2);
    }

    #[test]
    fn dimension_checked() {
        let err = StepFunction::from_pieces(2, ValueNorm::Max, [(b(0.0, 1.0), vec![1.0])]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let f = StepFunction::scalar(&[(0.0, 1.0, 1.0)]).unwrap();
        let g = StepFunction::indicator(0.0, 1.0, vec![1.0, 2.0], ValueNorm::Euclidean).unwrap();
        assert!(f.add(&g).is_err());
    }

    #[test]
    fn arithmetic_on_common_refinement() {
        let f = StepFunction::scalar(&[(0.0, 2.0, 1.0)]).unwrap();
        let g = StepFunction::scalar(&[(1.0, 3.0, 2.0)]).unwrap();
        let s = f.add(&g).unwrap();
        assert_eq!(s.eval(0.5), vec![1.0]);
        assert_eq!(s.eval(1.5), vec![3.0]);
        assert_eq!(s.eval(2.5), vec![2.0]);
        assert_eq!(s.eval(3.5), vec![0.0]);
        assert_eq!(s.integral(), vec![6.0]);
        assert!(f.sub(&f).unwrap().is_zero());
        assert!(s.ae_eq(&f.add(&g).unwrap().canonical()));
    }

    #[test]
    fn value_norms() {
        let v = [3.0, -4.0];
        assert_eq!(ValueNorm::Euclidean.norm(&v), 5.0);
        assert_eq!(ValueNorm::Max.norm(&v), 4.0);
        assert_eq!(ValueNorm::Sum.norm(&v), 7.0);
    }

    #[test]
    fn restrict_and_support() {
        let f = StepFunction::scalar(&[(0.0, 5.0, 1.0)]).unwrap();
        let r = f.restrict(0.0, 2.0);
        assert_eq!(r, StepFunction::scalar(&[(0.0, 2.0, 1.0)]).unwrap());
        assert_eq!(r.support_measure(), 2.0);
        let z = StepFunction::scalar(&[(0.0, 1.0, 0.0), (1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(z.support_measure(), 1.0);
    }
}
