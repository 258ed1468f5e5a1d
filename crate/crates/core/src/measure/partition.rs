use super::{locate, merge_breakpoints, Block, MeasurableSet, BREAKPOINT_TOL};
use crate::error::{Error, Result};

/// Finite family of pairwise disjoint blocks of positive measure, sorted by
/// start.
///
/// The union need not be an interval; interval partitions of `[0, t)` are the
/// common case (see [`Partition::is_interval`]), while averaging operators
/// accept arbitrary finite disjoint collections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Partition {
    blocks: Vec<Block>,
}

impl Partition {
    /// Sorts the blocks and checks disjointness. Blocks no thicker than
    /// [`BREAKPOINT_TOL`] are dropped as null sets.
    pub fn new(blocks: impl IntoIterator<Item = Block>) -> Result<Self> {
        let mut blocks: Vec<Block> = blocks
            .into_iter()
            .filter(|b| b.measure() > BREAKPOINT_TOL)
            .collect();
        blocks.sort_by(|a, b| a.start().total_cmp(&b.start()));
        for i in 1..blocks.len() {
            let prev_end = blocks[i - 1].end();
            let cur = blocks[i];
            if cur.start() < prev_end - BREAKPOINT_TOL {
                return Err(Error::MalformedInput(format!(
                    "blocks [{}, {}) and [{}, {}) overlap",
                    blocks[i - 1].start(),
                    prev_end,
                    cur.start(),
                    cur.end()
                )));
            }
            if cur.start() < prev_end {
                blocks[i] = Block::new_unchecked(prev_end, cur.end());
            }
        }
        Ok(Self { blocks })
    }

    /// Contiguous partition with the given (unsorted allowed) breakpoints.
    pub fn from_breakpoints(points: &[f64]) -> Result<Self> {
        let points = merge_breakpoints(points.to_vec());
        if points.len() < 2 {
            return Err(Error::MalformedInput("need at least two distinct breakpoints".into()));
        }
        let blocks = points
            .windows(2)
            .map(|w| Block::new(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks })
    }

    /// `n` equal blocks covering `[lo, hi)`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "uniform partition needs n > 0 and lo < hi, got n={n}, [{lo}, {hi})"
            )));
        }
        let h = (hi - lo) / n as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        points.push(hi);
        Self::from_breakpoints(&points)
    }

    pub fn trivial(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self { blocks: vec![Block::new(lo, hi)?] })
    }

    pub(crate) fn from_sorted_unchecked(blocks: Vec<Block>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.blocks.iter().map(Block::measure).sum()
    }

    pub fn union(&self) -> MeasurableSet {
        MeasurableSet::from_blocks(self.blocks.iter().copied())
    }

    /// True when the union is a single interval `[start, end)` with no gaps.
    pub fn is_interval(&self) -> bool {
        self.union().blocks().len() <= 1
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        merge_breakpoints(self.blocks.iter().flat_map(|b| [b.start(), b.end()]).collect())
    }

    /// Index of the block containing `t`.
    pub fn locate(&self, t: f64) -> Option<usize> {
        locate(&self.blocks, t)
    }

    /// Equality of unions up to [`BREAKPOINT_TOL`] at every endpoint.
    pub fn same_union(&self, other: &Partition) -> bool {
        let (a, b) = (self.union(), other.union());
        a.blocks().len() == b.blocks().len()
            && a.blocks().iter().zip(b.blocks()).all(|(x, y)| {
                (x.start() - y.start()).abs() <= BREAKPOINT_TOL
                    && (x.end() - y.end()).abs() <= BREAKPOINT_TOL
            })
    }
}

/// `coarse <= fine`: every block of `coarse` is a finite union of blocks of
/// `fine`.
pub fn is_refinement(coarse: &Partition, fine: &Partition) -> Result<bool> {
    if !coarse.same_union(fine) {
        return Err(Error::IncomparableDomains);
    }
    // With equal unions, every coarse block is a union of fine blocks exactly
    // when no fine block straddles a coarse boundary.
    Ok(fine.blocks().iter().all(|fb| {
        coarse
            .locate(fb.midpoint())
            .is_some_and(|i| coarse.blocks()[i].contains_block(fb))
    }))
}

/// All nonnull pairwise intersections `S ∩ K`, in order.
pub fn common_refinement(p1: &Partition, p2: &Partition) -> Result<Partition> {
    if !p1.same_union(p2) {
        return Err(Error::IncomparableDomains);
    }
    let (a, b) = (p1.blocks(), p2.blocks());
    let (mut i, mut j) = (0, 0);
    let mut out: Vec<Block> = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        if let Some(piece) = a[i].intersect(&b[j]) {
            let piece = match out.last() {
                Some(last) if (piece.start() - last.end()).abs() <= BREAKPOINT_TOL => {
                    Block::new_unchecked(last.end(), piece.end())
                }
                _ => piece,
            };
            if piece.measure() > BREAKPOINT_TOL {
                out.push(piece);
            }
        }
        if a[i].end() < b[j].end() {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(Partition::from_sorted_unchecked(out))
}

/// `S^1 = K^1`, `S^{n+1} = { S ∩ K : S ∈ S^n, K ∈ K^{n+1} }`.
pub fn refinement_chain(seq: &[Partition]) -> Result<Vec<Partition>> {
    let mut chain: Vec<Partition> = Vec::with_capacity(seq.len());
    for k in seq {
        let next = match chain.last() {
            None => k.clone(),
            Some(prev) => common_refinement(prev, k)?,
        };
        chain.push(next);
    }
    Ok(chain)
}
