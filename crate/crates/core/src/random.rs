//! Seeded generators for step functions, partitions and modulars.
//!
//! Every generator takes the RNG explicitly; [`rng`] builds the ChaCha8
//! stream used throughout so that a seed fully determines a run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::measure::{Block, Partition, StepFunction, ValueNorm};
use crate::modular::{Convexity, PhiFunction, Semimodular};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub dim: usize,
    pub value_norm: ValueNorm,
    pub max_blocks: usize,
    /// Functions live on `[0, domain)`.
    pub domain: f64,
    /// Values are drawn from `[-scale, scale]`.
    pub scale: f64,
    /// Probability that a block is left out, creating gaps in the support.
    pub gap_rate: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        Self { dim: 1, value_norm: ValueNorm::Euclidean, max_blocks: 6, domain: 1.0, scale: 3.0, gap_rate: 0.15 }
    }
}

/// `n` sorted interior cut points of `(lo, hi)`, at least `1e-6` apart.
fn cuts(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    pts.sort_by(f64::total_cmp);
    let min_gap = 1e-6 * (hi - lo);
    let mut out: Vec<f64> = Vec::with_capacity(n);
    for p in pts {
        let prev = out.last().copied().unwrap_or(lo);
        if p - prev > min_gap && hi - p > min_gap {
            out.push(p);
        }
    }
    out
}

/// Contiguous partition of `[lo, hi)` into at most `n` blocks.
pub fn partition(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> Partition {
    let mut points = vec![lo];
    points.extend(cuts(rng, lo, hi, n.saturating_sub(1)));
    points.push(hi);
    Partition::from_breakpoints(&points).expect("sorted distinct breakpoints")
}

/// Splits every block of `k` into up to `1 + extra` pieces.
pub fn refinement(rng: &mut ChaCha8Rng, k: &Partition, extra: usize) -> Partition {
    let mut blocks = Vec::new();
    for b in k.blocks() {
        let m = rng.gen_range(0..=extra);
        let mut left = b.start();
        for c in cuts(rng, b.start(), b.end(), m) {
            blocks.push(Block::new(left, c).expect("cut inside block"));
            left = c;
        }
        blocks.push(Block::new(left, b.end()).expect("cut inside block"));
    }
    Partition::new(blocks).expect("refinement blocks are disjoint")
}

fn values(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect()
}

pub fn step_function(rng: &mut ChaCha8Rng, p: &StepParams) -> StepFunction {
    let n = rng.gen_range(1..=p.max_blocks.max(1));
    let k = partition(rng, 0.0, p.domain, n);
    step_on(rng, &k, p)
}

/// Random values on the blocks of `k`, with some blocks dropped as gaps.
pub fn step_on(rng: &mut ChaCha8Rng, k: &Partition, p: &StepParams) -> StepFunction {
    let pieces: Vec<(Block, Vec<f64>)> = k
        .blocks()
        .iter()
        .filter_map(|b| {
            let v = values(rng, p.dim, p.scale);
            (!rng.gen_bool(p.gap_rate)).then_some((*b, v))
        })
        .collect();
    StepFunction::from_pieces(p.dim, p.value_norm, pieces).expect("blocks of a partition are disjoint")
}

/// Random nonzero scalar function on `[0, domain)`.
pub fn nonzero_scalar(rng: &mut ChaCha8Rng, max_blocks: usize, domain: f64) -> StepFunction {
    let p = StepParams { max_blocks, domain, gap_rate: 0.0, ..Default::default() };
    loop {
        let f = step_function(rng, &p);
        if !f.is_zero() {
            return f;
        }
    }
}

/// Convex Young function: a power `u^p` with `p ∈ [1, 3]`, `e^u − 1`, or a
/// piecewise-linear function with increasing slopes.
pub fn convex_phi(rng: &mut ChaCha8Rng) -> PhiFunction {
    match rng.gen_range(0..3) {
        0 => PhiFunction::Power { p: rng.gen_range(1.0..=3.0) },
        1 => PhiFunction::ExpShift,
        _ => {
            let n = rng.gen_range(1..=3);
            let mut knots = Vec::with_capacity(n);
            let mut t = 0.0;
            for _ in 0..n {
                t += rng.gen_range(0.2..2.0);
                knots.push(t);
            }
            let mut slopes = Vec::with_capacity(n + 1);
            let mut s = rng.gen_range(0.1..1.0);
            for _ in 0..=n {
                slopes.push(s);
                s += rng.gen_range(0.1..2.0);
            }
            PhiFunction::PiecewiseLinear { knots, slopes, barrier: None }
        }
    }
}

/// Orlicz modular with a random convex `φ`.
pub fn orlicz(rng: &mut ChaCha8Rng) -> Semimodular {
    Semimodular::orlicz(convex_phi(rng), Convexity::Convex).expect("generated phi is valid")
}
