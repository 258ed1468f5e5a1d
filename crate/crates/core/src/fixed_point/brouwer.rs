//! Fixed points of continuous self-maps of a small box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;
const DAMPING: f64 = 0.5;
const STALL_WINDOW: usize = 20;
const STALL_RATIO: f64 = 1e-3;

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::InvalidParameter("box needs finite lo <= hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    /// `[-a, a]^dim`.
    pub fn cube(dim: usize, a: f64) -> Result<Self> {
        Self::new(vec![-a; dim], vec![a; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    fn contains(&self, p: &[f64], slack: f64) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *x >= a - slack && *x <= b + slack)
    }

    fn scale(&self) -> f64 {
        self.lo.iter().chain(&self.hi).fold(1.0_f64, |m, x| m.max(x.abs()))
    }

    fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] }).collect())
            .collect()
    }

    fn children(&self) -> Vec<BoxDomain> {
        let c = self.center();
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let (mut lo, mut hi) = (self.lo.clone(), self.hi.clone());
                for i in 0..d {
                    if mask >> i & 1 == 1 {
                        lo[i] = c[i];
                    } else {
                        hi[i] = c[i];
                    }
                }
                BoxDomain { lo, hi }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Picard,
    Grid,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrouwerOptions {
    /// Target for `‖g(p) − p‖_∞`.
    pub tol: f64,
    /// Cap on map evaluations, shared by both phases.
    pub max_iter: usize,
    /// Subdivision depth limit of the grid phase.
    pub max_depth: usize,
}

impl Default for BrouwerOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100_000, max_depth: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrouwerSolution {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Approximate fixed point of a continuous `g` mapping `domain` into itself.
///
/// Runs damped Picard iteration `p ← (1−β)p + β g(p)` with `β = 0.5` from
/// the centre. If the residual improves by less than `0.1%` over 20 steps the
/// box is searched by recursive subdivision instead: a sub-box is explored
/// only when every component of the displacement `g(p) − p` changes sign (or
/// vanishes) over its corners, children are visited in order of their centre
/// residual, and the search stops at the first centre within `tol`.
pub fn brouwer_solve(
    g: impl Fn(&[f64]) -> Result<Vec<f64>>,
    domain: &BoxDomain,
    opts: &BrouwerOptions,
) -> Result<BrouwerSolution> {
    let d = domain.dim();
    if d > MAX_DIM {
        return Err(Error::DimensionLimit { dim: d, limit: MAX_DIM });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", opts.tol)));
    }
    let eval = |p: &[f64]| -> Result<Vec<f64>> {
        let q = g(p)?;
        if q.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: q.len() });
        }
        Ok(q)
    };
    check_self_map(&eval, domain)?;

    let mut p = domain.center();
    let mut history: Vec<f64> = Vec::new();
    let mut evaluations = 0;
    while evaluations < opts.max_iter {
        let q = eval(&p)?;
        evaluations += 1;
        let r = sup_dist(&p, &q);
        if r <= opts.tol {
            return Ok(BrouwerSolution { point: p, residual: r, iterations: evaluations, method: Method::Picard });
        }
        if let Some(&old) = history.len().checked_sub(STALL_WINDOW).map(|i| &history[i]) {
            if old - r < STALL_RATIO * old {
                break;
            }
        }
        history.push(r);
        p = p.iter().zip(&q).map(|(x, y)| (1.0 - DAMPING) * x + DAMPING * y).collect();
    }

    let mut search = GridSearch { eval: &eval, opts, evaluations };
    match search.descend(domain, 0)? {
        Some((point, residual)) => {
            Ok(BrouwerSolution { point, residual, iterations: search.evaluations, method: Method::Grid })
        }
        None => Err(Error::Unreachable(format!(
            "no point with residual <= {} within {} evaluations and depth {}",
            opts.tol, opts.max_iter, opts.max_depth
        ))),
    }
}

fn check_self_map(eval: &impl Fn(&[f64]) -> Result<Vec<f64>>, domain: &BoxDomain) -> Result<()> {
    let d = domain.dim();
    let mut probes = domain.corners();
    probes.push(domain.center());
    for i in 0..d {
        for side in [&domain.lo, &domain.hi] {
            let mut p = domain.center();
            p[i] = side[i];
            probes.push(p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..8 {
        if d == 0 {
            break;
        }
        let mut p: Vec<f64> = (0..d).map(|i| rng.gen_range(domain.lo[i]..=domain.hi[i])).collect();
        let axis = rng.gen_range(0..d);
        p[axis] = if rng.gen_bool(0.5) { domain.lo[axis] } else { domain.hi[axis] };
        probes.push(p);
    }
    let slack = 1e-12 * domain.scale();
    for p in probes {
        let q = eval(&p)?;
        if !domain.contains(&q, slack) {
            return Err(Error::NotSelfMap(format!("{p:?} is mapped to {q:?}, outside the box")));
        }
    }
    Ok(())
}

struct GridSearch<'a, F> {
    eval: &'a F,
    opts: &'a BrouwerOptions,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> GridSearch<'_, F> {
    fn displacement(&mut self, p: &[f64]) -> Result<Vec<f64>> {
        self.evaluations += 1;
        Ok((self.eval)(p)?.iter().zip(p).map(|(q, x)| q - x).collect())
    }

    fn straddles(&mut self, cell: &BoxDomain) -> Result<bool> {
        let d = cell.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for c in cell.corners() {
            for (i, v) in self.displacement(&c)?.into_iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        let slack = self.opts.tol;
        Ok(lo.iter().zip(&hi).all(|(a, b)| *a <= slack && *b >= -slack))
    }

    fn descend(&mut self, cell: &BoxDomain, depth: usize) -> Result<Option<(Vec<f64>, f64)>> {
        let c = cell.center();
        let r = self.displacement(&c)?.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if r <= self.opts.tol {
            return Ok(Some((c, r)));
        }
        if depth >= self.opts.max_depth || self.evaluations >= self.opts.max_iter {
            return Ok(None);
        }
        let mut ranked = Vec::new();
        for child in cell.children() {
            if self.evaluations >= self.opts.max_iter {
                return Ok(None);
            }
            if self.straddles(&child)? {
                let cc = child.center();
                let score = self.displacement(&cc)?.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                ranked.push((score, child));
            }
        }
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, child) in ranked {
            if let Some(hit) = self.descend(&child, depth + 1)? {
                return Ok(Some(hit));
            }
        }
        Ok(None)
    }
}
