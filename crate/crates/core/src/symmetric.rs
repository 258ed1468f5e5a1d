//! Rearrangements, majorization and averaging operators on symmetric
//! function spaces over `[0, α)`.
//!
//! Vector-valued functions are reduced to `|x(t)| = ‖x(t)‖` through their
//! value norm before any rearrangement.

use serde::{Deserialize, Serialize};

use crate::approximation::block_averages;
use crate::error::{Error, Result};
use crate::fnorm::luxemburg_norm;
use crate::measure::{is_refinement, Block, Partition, StepFunction};
use crate::modular::{Convexity, PhiFunction, Semimodular};

/// Decreasing rearrangement `x*` of `|x|` together with the running integral
/// `∫_0^t x*`, which is all that `d_x`, `x*` and `x**` need.
///
/// `x*` vanishes beyond `μ(supp x)`; for bounded-support step functions this
/// is also the value `x*(∞)` on an infinite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    /// Strictly decreasing positive levels.
    levels: Vec<f64>,
    /// `ends[i]` is the right end of the interval where `x* = levels[i]`.
    ends: Vec<f64>,
    /// `cumulative[i] = ∫_0^{ends[i]} x*`.
    cumulative: Vec<f64>,
}

impl RearrangementProfile {
    pub fn of(x: &StepFunction) -> Self {
        let mut mass: Vec<(f64, f64)> = (0..x.len())
            .map(|i| (x.norm_at(i), x.blocks()[i].measure()))
            .filter(|&(v, _)| v > 0.0)
            .collect();
        mass.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut levels: Vec<f64> = Vec::new();
        let mut widths: Vec<f64> = Vec::new();
        for (v, m) in mass {
            if levels.last() == Some(&v) {
                *widths.last_mut().unwrap() += m;
            } else {
                levels.push(v);
                widths.push(m);
            }
        }
        let mut ends = Vec::with_capacity(levels.len());
        let mut cumulative = Vec::with_capacity(levels.len());
        let (mut t, mut acc) = (0.0, 0.0);
        for (v, w) in levels.iter().zip(&widths) {
            t += w;
            acc += v * w;
            ends.push(t);
            cumulative.push(acc);
        }
        Self { levels, ends, cumulative }
    }

    /// `μ(supp x)`.
    pub fn support(&self) -> f64 {
        self.ends.last().copied().unwrap_or(0.0)
    }

    pub fn knots(&self) -> &[f64] {
        &self.ends
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `d_x(λ) = μ{|x| > λ}`.
    pub fn distribution(&self, lam: f64) -> f64 {
        let k = self.levels.partition_point(|&v| v > lam);
        if k == 0 {
            0.0
        } else {
            self.ends[k - 1]
        }
    }

    /// `x*(t)` with the right-continuous convention `x*(t) = inf{λ : d_x(λ) <= t}`.
    pub fn xstar(&self, t: f64) -> f64 {
        let k = self.ends.partition_point(|&e| e <= t);
        self.levels.get(k).copied().unwrap_or(0.0)
    }

    /// `∫_0^t x*`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let k = self.ends.partition_point(|&e| e <= t);
        let (left, acc) = if k == 0 { (0.0, 0.0) } else { (self.ends[k - 1], self.cumulative[k - 1]) };
        match self.levels.get(k) {
            Some(v) => acc + v * (t - left),
            None => acc,
        }
    }

    /// `x**(t) = (1/t) ∫_0^t x*`.
    pub fn xstarstar(&self, t: f64) -> f64 {
        if t < self.ends.first().copied().unwrap_or(f64::INFINITY) {
            return self.levels.first().copied().unwrap_or(0.0);
        }
        self.integral_to(t) / t
    }

    pub fn to_step_function(&self) -> StepFunction {
        let mut start = 0.0;
        let pieces: Vec<(Block, Vec<f64>)> = self
            .levels
            .iter()
            .zip(&self.ends)
            .map(|(&v, &e)| {
                let b = Block::new_unchecked(start, e);
                start = e;
                (b, vec![v])
            })
            .collect();
        StepFunction::from_pieces(1, crate::measure::ValueNorm::Euclidean, pieces)
            .expect("rearrangement blocks are disjoint")
    }
}

/// `d_x(λ) = μ{t : |x(t)| > λ}`.
///
/// Block measures are accumulated level by level from the top, the same
/// order in which the blocks of `x*` are laid out, so `x` and `x*` give
/// identical values.
pub fn distribution_function(x: &StepFunction, lam: f64) -> Result<f64> {
    if !(lam >= 0.0) {
        return Err(Error::InvalidParameter(format!("level must be >= 0, got {lam}")));
    }
    Ok(RearrangementProfile::of(x).distribution(lam))
}

/// `x*` on `[0, μ(supp x))`.
pub fn decreasing_rearrangement(x: &StepFunction) -> StepFunction {
    RearrangementProfile::of(x).to_step_function()
}

/// `x**(t) = (1/t) ∫_0^t x*`.
pub fn maximal_function(x: &StepFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    Ok(RearrangementProfile::of(x).xstarstar(t))
}

/// Hardy–Littlewood–Pólya relation `x ≺ y`, i.e. `x**(t) <= y**(t)` for all
/// `t > 0`.
///
/// Deciding at the knots suffices: `X(t) = t·x**(t) = ∫_0^t x*` is continuous
/// and affine between consecutive breakpoints of `x*`, and likewise `Y`, so
/// `Y − X` is affine between consecutive points of the merged knot set and
/// constant past the last one. An affine function that is nonnegative at both
/// ends of an interval is nonnegative on it, and `X(0) = Y(0) = 0`.
///
/// Comparisons allow a relative slack of `1e-12` for the rounding in the
/// running sums.
pub fn hlp_majorizes(x: &StepFunction, y: &StepFunction) -> bool {
    let (px, py) = (RearrangementProfile::of(x), RearrangementProfile::of(y));
    let slack = 1e-12 * px.integral_to(f64::INFINITY).max(py.integral_to(f64::INFINITY)).max(1.0);
    px.knots()
        .iter()
        .chain(py.knots())
        .all(|&t| px.integral_to(t) <= py.integral_to(t) + slack)
}

/// `T_A x = Σ_j (1/μ(A_j) ∫_{A_j} x) χ_{A_j}`, zero off `∪A`.
pub fn averaging_operator(x: &StepFunction, a: &Partition) -> StepFunction {
    block_averages(x, a)
}

/// `S_B x = x χ_Ω + T_B x` with `Ω` the complement of `∪B`.
pub fn conditional_contraction(x: &StepFunction, b: &Partition) -> StepFunction {
    if b.is_empty() {
        return x.clone();
    }
    let averaged = block_averages(x, b);
    let mut points = x.partition().breakpoints();
    points.extend(b.breakpoints());
    let Ok(cells) = Partition::from_breakpoints(&points) else {
        return averaged;
    };
    let pieces = cells.blocks().iter().filter_map(|cell| {
        let m = cell.midpoint();
        if let Some(i) = b.locate(m) {
            Some((*cell, averaged.value(i).to_vec()))
        } else {
            x.partition().locate(m).map(|i| (*cell, x.value(i).to_vec()))
        }
    });
    StepFunction::from_pieces(x.dim(), x.value_norm(), pieces.collect::<Vec<_>>())
        .expect("cells of a partition are disjoint")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymmetricKind {
    /// `1 <= p <= ∞`; `p = ∞` is written as `null` in JSON.
    Lp {
        #[serde(with = "extended_exponent")]
        p: f64,
    },
    OrliczLuxemburg { phi: PhiFunction },
    /// `‖x‖ = ∫ x* d(t^{1/q})`, `q >= 1`.
    Lorentz { q: f64 },
}

mod extended_exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Rearrangement-invariant norm with a declared order-continuity flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricNorm {
    #[serde(flatten)]
    pub kind: SymmetricKind,
    pub order_continuous: bool,
}

/// Bisection tolerance for Orlicz–Luxemburg norms.
const LUXEMBURG_TOL: f64 = 1e-12;

impl SymmetricNorm {
    pub fn new(kind: SymmetricKind, order_continuous: bool) -> Result<Self> {
        let e = Self { kind, order_continuous };
        e.validate()?;
        Ok(e)
    }

    /// `L^p`, order continuous exactly when `p < ∞`.
    pub fn lp(p: f64) -> Result<Self> {
        Self::new(SymmetricKind::Lp { p }, p.is_finite())
    }

    pub fn lorentz(q: f64) -> Result<Self> {
        Self::new(SymmetricKind::Lorentz { q }, true)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SymmetricKind::Lp { p } if *p >= 1.0 => {
                if p.is_infinite() && self.order_continuous {
                    return Err(Error::InvalidParameter("L^inf is not order continuous".into()));
                }
                Ok(())
            }
            SymmetricKind::Lp { p } => Err(Error::InvalidParameter(format!("need p >= 1, got {p}"))),
            SymmetricKind::Lorentz { q } if q.is_finite() && *q >= 1.0 => Ok(()),
            SymmetricKind::Lorentz { q } => Err(Error::InvalidParameter(format!("need finite q >= 1, got {q}"))),
            SymmetricKind::OrliczLuxemburg { phi } => {
                phi.validate()?;
                let convex = match phi {
                    PhiFunction::Power { p } => *p >= 1.0,
                    PhiFunction::ExpShift => true,
                    PhiFunction::PiecewiseLinear { slopes, .. } => slopes.windows(2).all(|w| w[0] <= w[1]),
                };
                if convex {
                    Ok(())
                } else {
                    Err(Error::WrongConvexity("Orlicz–Luxemburg norm needs a convex phi".into()))
                }
            }
        }
    }

    pub fn norm(&self, x: &StepFunction) -> Result<f64> {
        match &self.kind {
            SymmetricKind::Lp { p } if p.is_infinite() => Ok(x.sup_norm()),
            SymmetricKind::Lp { p } => {
                let m = x.sup_norm();
                if m == 0.0 {
                    return Ok(0.0);
                }
                let s: f64 = (0..x.len())
                    .map(|i| (x.norm_at(i) / m).powf(*p) * x.blocks()[i].measure())
                    .sum();
                Ok(m * s.powf(1.0 / p))
            }
            SymmetricKind::Lorentz { q } => {
                let prof = RearrangementProfile::of(x);
                let mut left: f64 = 0.0;
                let mut total = 0.0;
                for (v, &e) in prof.levels().iter().zip(prof.knots()) {
                    total += v * (e.powf(1.0 / q) - left.powf(1.0 / q));
                    left = e;
                }
                Ok(total)
            }
            SymmetricKind::OrliczLuxemburg { phi } => {
                let rho = Semimodular::orlicz(phi.clone(), Convexity::Convex)?;
                luxemburg_norm(&rho, &x.pointwise_norm(), LUXEMBURG_TOL)
            }
        }
    }
}

/// `φ_E(t) = ‖χ_[0,t)‖_E` for `0 < t < α`.
pub fn fundamental_function(e: &SymmetricNorm, t: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0 && t < alpha) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must lie in (0, {alpha}), got {t}")));
    }
    e.norm(&StepFunction::scalar(&[(0.0, t, 1.0)])?)
}

/// `(level, ‖T_{A_k} x − x‖_E)` along a refinement chain, levels counted from
/// zero.
pub fn map_convergence_experiment(
    e: &SymmetricNorm,
    x: &StepFunction,
    chain: &[Partition],
) -> Result<Vec<(usize, f64)>> {
    if !e.order_continuous {
        return Err(Error::NotOrderContinuous);
    }
    for (k, w) in chain.windows(2).enumerate() {
        match is_refinement(&w[0], &w[1]) {
            Ok(true) => {}
            _ => return Err(Error::InvalidChain(format!("level {} does not refine level {k}", k + 1))),
        }
    }
    chain
        .iter()
        .enumerate()
        .map(|(k, a)| Ok((k, e.norm(&averaging_operator(x, a).sub(x)?)?)))
        .collect()
}
