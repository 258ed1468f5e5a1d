//! One-dimensional searches over the scale parameter `k > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden-section constant `2 − φ`.
const RESP: f64 = 0.381_966_011_250_105_1;
const GRID_POINTS: usize = 64;
/// Expansion from `k = 1` stops after this many decades.
const MAX_DECADES: i32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub k_lo: f64,
    pub k_hi: f64,
    /// Relative tolerance on the objective.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { k_lo: 1e-9, k_hi: 1e9, tol: 1e-9, max_iter: 200 }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_lo > 0.0 && self.k_hi > self.k_lo && self.k_hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "search bracket must satisfy 0 < k_lo < k_hi < inf, got [{}, {}]",
                self.k_lo, self.k_hi
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter("tol must be > 0 and max_iter > 0".into()));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Minimum {
    pub k: f64,
    pub value: f64,
}

impl Minimum {
    /// Lower value wins; ties go to the smaller `k`.
    fn better(self, other: Minimum) -> Minimum {
        if other.value < self.value || (other.value == self.value && other.k < self.k) {
            other
        } else {
            self
        }
    }
}

fn best_index(points: &[Minimum]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        let b = points[best];
        if p.value < b.value || (p.value == b.value && p.k < b.k) {
            best = i;
        }
    }
    best
}

/// Infimum of `objective` over `k > 0`.
///
/// Seeds from a 64-point log grid over `[k_lo, k_hi]` and from decade
/// expansion around `k = 1`, then refines the best basin of each by
/// golden-section search in `ln k`. Returns `None` when every probe is
/// infinite.
pub(crate) fn minimize_over_scale(
    objective: impl Fn(f64) -> f64,
    params: &SearchParams,
) -> Option<Minimum> {
    let eval = |k: f64| Minimum { k, value: objective(k) };

    let (lo, hi) = (params.k_lo.ln(), params.k_hi.ln());
    let grid: Vec<Minimum> = (0..GRID_POINTS)
        .map(|i| eval((lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64).exp()))
        .collect();

    let mut expansion = vec![eval(1.0)];
    for dir in [10.0_f64, 0.1] {
        let mut prev = expansion[0];
        for _ in 0..MAX_DECADES {
            let next = eval(prev.k * dir);
            let improved = next.value < prev.value;
            expansion.push(next);
            if !improved {
                break;
            }
            prev = next;
        }
    }
    expansion.sort_by(|a, b| a.k.total_cmp(&b.k));

    let mut result: Option<Minimum> = None;
    for seeds in [&grid, &expansion] {
        let i = best_index(seeds);
        if !seeds[i].value.is_finite() {
            continue;
        }
        let a = seeds[i.saturating_sub(1)].k;
        let b = seeds[(i + 1).min(seeds.len() - 1)].k;
        let refined = golden_section_log(&objective, a, b, params).better(seeds[i]);
        result = Some(match result {
            None => refined,
            Some(r) => r.better(refined),
        });
    }
    result
}

/// Golden-section search for a minimum of `f` on `[a, b]`, in `ln k`.
fn golden_section_log(f: &impl Fn(f64) -> f64, a: f64, b: f64, params: &SearchParams) -> Minimum {
    let (mut a, mut b) = (a.ln(), b.ln());
    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = f(x1.exp());
    let mut f2 = f(x2.exp());
    let mut best = Minimum { k: x1.exp(), value: f1 }.better(Minimum { k: x2.exp(), value: f2 });

    let width = params.tol * 1e-4;
    for _ in 0..params.max_iter {
        if b - a <= width + 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = f(x1.exp());
            best = best.better(Minimum { k: x1.exp(), value: f1 });
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = f(x2.exp());
            best = best.better(Minimum { k: x2.exp(), value: f2 });
        }
    }
    best
}

/// Smallest `u > 0` with `holds(u)`, for a predicate that is false below some
/// threshold and true above it.
///
/// Brackets by decades from `u = 1`, then bisects to relative width
/// `tol · 1e-3`. `Ok(None)` means the predicate holds on every probed scale
/// down to `1e-30`.
pub(crate) fn threshold_bisection(
    holds: impl Fn(f64) -> bool,
    tol: f64,
    max_iter: usize,
) -> Result<Option<f64>> {
    let (mut lo, mut hi);
    if holds(1.0) {
        hi = 1.0;
        lo = 0.1;
        let mut decades = 0;
        while holds(lo) {
            hi = lo;
            lo *= 0.1;
            decades += 1;
            if decades > MAX_DECADES {
                return Ok(None);
            }
        }
    } else {
        lo = 1.0;
        hi = 10.0;
        let mut decades = 0;
        while !holds(hi) {
            lo = hi;
            hi *= 10.0;
            decades += 1;
            if decades > MAX_DECADES {
                return Err(Error::NotInSpace);
            }
        }
    }
    for _ in 0..max_iter {
        if hi - lo <= tol * 1e-3 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_smooth_minimum() {
        // k + 9/k has its minimum 6 at k = 3
        let m = minimize_over_scale(|k| k + 9.0 / k, &SearchParams::default()).unwrap();
        assert!((m.value - 6.0).abs() < 1e-12);
        assert!((m.k - 3.0).abs() < 1e-5);
    }

    #[test]
    fn finds_kink_minimum() {
        // max(k, 4/k) has its minimum 2 at k = 2
        let m = minimize_over_scale(|k| k.max(4.0 / k), &SearchParams::default()).unwrap();
        assert!((m.value - 2.0).abs() < 1e-12, "{m:?}");
    }

    #[test]
    fn reaches_beyond_the_grid() {
        let m = minimize_over_scale(|k| k.max(1e-26 / k), &SearchParams::default()).unwrap();
        assert!((m.value - 1e-13).abs() < 1e-20, "{m:?}");
    }

    #[test]
    fn all_infinite_is_none() {
        assert!(minimize_over_scale(|_| f64::INFINITY, &SearchParams::default()).is_none());
    }

    #[test]
    fn bisection_finds_sqrt() {
        let u = threshold_bisection(|u| 4.0 / u <= u, 1e-9, 200).unwrap().unwrap();
        assert!((u - 2.0).abs() < 1e-11);
        let u = threshold_bisection(|u| 1e-6 / u <= u, 1e-9, 200).unwrap().unwrap();
        assert!((u - 1e-3).abs() < 1e-14);
        assert_eq!(threshold_bisection(|_| false, 1e-9, 200), Err(Error::NotInSpace));
        assert_eq!(threshold_bisection(|_| true, 1e-9, 200), Ok(None));
    }

    #[test]
    fn params_validation() {
        assert!(SearchParams::default().validate().is_ok());
        assert!(SearchParams { k_lo: 2.0, k_hi: 1.0, ..Default::default() }.validate().is_err());
        assert!(SearchParams { tol: 0.0, ..Default::default() }.validate().is_err());
    }
}
