//! Semimodulars on step functions: Orlicz, Musielak–Orlicz with piecewise
//! zones in `t`, and pointwise maxima of those.
//!
//! Every modular here is an integral modular `ρ(f) = ∫ φ_t(‖f(t)‖) dt`, which
//! reduces to a finite sum over the blocks of a step function.

use std::ops::Add;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Block, StepFunction};

/// Value in `[0, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal(0.0);
    pub const INFINITY: ExtendedReal = ExtendedReal(f64::INFINITY);

    /// `None` for negative or NaN input.
    pub fn new(v: f64) -> Option<Self> {
        (v >= 0.0).then_some(Self(v))
    }

    pub(crate) fn from_raw(v: f64) -> Self {
        if v.is_nan() {
            Self::INFINITY
        } else {
            Self(v.max(0.0))
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    /// `f64::INFINITY` for `+∞`.
    pub fn to_f64(self) -> f64 {
        self.0
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: Self) -> Self {
        ExtendedReal(self.0 + rhs.0)
    }
}

/// Young-type function `φ: [0, ∞) → [0, ∞]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiFunction {
    /// `u^p`.
    Power { p: f64 },
    /// `e^u − 1`.
    ExpShift,
    /// Continuous piecewise-linear with `slopes[0]` on `[0, knots[0])`,
    /// `slopes[i]` on `[knots[i-1], knots[i])` and the last slope to infinity;
    /// `+∞` beyond `barrier` when present.
    PiecewiseLinear {
        knots: Vec<f64>,
        slopes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        barrier: Option<f64>,
    },
}

impl PhiFunction {
    pub fn power(p: f64) -> Result<Self> {
        let phi = PhiFunction::Power { p };
        phi.validate()?;
        Ok(phi)
    }

    pub fn piecewise_linear(knots: Vec<f64>, slopes: Vec<f64>, barrier: Option<f64>) -> Result<Self> {
        let phi = PhiFunction::PiecewiseLinear { knots, slopes, barrier };
        phi.validate()?;
        Ok(phi)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhiFunction::Power { p } => {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(Error::InvalidParameter(format!("power exponent must be > 0, got {p}")));
                }
            }
            PhiFunction::ExpShift => {}
            PhiFunction::PiecewiseLinear { knots, slopes, barrier } => {
                if slopes.len() != knots.len() + 1 {
                    return Err(Error::InvalidParameter(
                        "piecewise-linear phi needs one more slope than knots".into(),
                    ));
                }
                if knots.iter().any(|k| !(k.is_finite() && *k > 0.0))
                    || knots.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(Error::InvalidParameter(
                        "knots must be positive and strictly increasing".into(),
                    ));
                }
                if slopes.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                    return Err(Error::InvalidParameter("slopes must be finite and >= 0".into()));
                }
                if let Some(b) = barrier {
                    if !(b.is_finite() && *b > 0.0) {
                        return Err(Error::InvalidParameter(format!("barrier must be > 0, got {b}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, u: f64) -> ExtendedReal {
        debug_assert!(u >= 0.0);
        match self {
            PhiFunction::Power { p } => ExtendedReal::from_raw(u.powf(*p)),
            PhiFunction::ExpShift => ExtendedReal::from_raw(u.exp_m1()),
            PhiFunction::PiecewiseLinear { knots, slopes, barrier } => {
                if barrier.is_some_and(|b| u > b) {
                    return ExtendedReal::INFINITY;
                }
                let mut acc = 0.0;
                let mut left = 0.0;
                for (k, s) in knots.iter().zip(slopes) {
                    if u <= *k {
                        return ExtendedReal::from_raw(acc + s * (u - left));
                    }
                    acc += s * (k - left);
                    left = *k;
                }
                ExtendedReal::from_raw(acc + slopes[knots.len()] * (u - left))
            }
        }
    }
}

/// Declared convexity of a semimodular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convexity {
    Plain,
    /// `ρ(ax + by) <= a^{1/s} ρ(x) + b^{1/s} ρ(y)` when `a^{1/s} + b^{1/s} = 1`.
    SConvex(f64),
    Convex,
}

impl Convexity {
    /// The `s` exponent, with convex meaning `s = 1`.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Convexity::Plain => None,
            Convexity::SConvex(s) => Some(*s),
            Convexity::Convex => Some(1.0),
        }
    }

    pub fn is_convex(&self) -> bool {
        self.exponent() == Some(1.0)
    }
}

/// Zone `[previous t_end, t_end)` of a Musielak–Orlicz field; `None` means
/// the zone extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub t_end: Option<f64>,
    pub phi: PhiFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModularKind {
    Orlicz(PhiFunction),
    Musielak(Vec<Zone>),
    Max(Vec<Semimodular>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Semimodular {
    kind: ModularKind,
    convexity: Convexity,
}

/// Anything that evaluates like a semimodular; lets the axiom checker run on
/// deliberately broken instances.
pub trait Modular {
    fn evaluate(&self, f: &StepFunction) -> ExtendedReal;
    fn convexity(&self) -> Convexity;
}

impl Semimodular {
    pub fn orlicz(phi: PhiFunction, convexity: Convexity) -> Result<Self> {
        phi.validate()?;
        check_convexity(convexity)?;
        Ok(Self { kind: ModularKind::Orlicz(phi), convexity })
    }

    /// `∫ |f|^p` as a modular, declared convex when `p >= 1`.
    pub fn lp(p: f64) -> Result<Self> {
        let convexity = if p >= 1.0 { Convexity::Convex } else { Convexity::SConvex(p) };
        Self::orlicz(PhiFunction::power(p)?, convexity)
    }

    pub fn musielak(zones: Vec<Zone>, convexity: Convexity) -> Result<Self> {
        if zones.is_empty() {
            return Err(Error::InvalidParameter("musielak field needs at least one zone".into()));
        }
        let mut prev = 0.0;
        for (i, z) in zones.iter().enumerate() {
            z.phi.validate()?;
            match z.t_end {
                Some(t) if i + 1 < zones.len() => {
                    if !(t.is_finite() && t > prev) {
                        return Err(Error::InvalidParameter("zone ends must increase".into()));
                    }
                    prev = t;
                }
                None if i + 1 == zones.len() => {}
                _ => {
                    return Err(Error::InvalidParameter(
                        "only the last zone is unbounded, and it must be".into(),
                    ))
                }
            }
        }
        check_convexity(convexity)?;
        Ok(Self { kind: ModularKind::Musielak(zones), convexity })
    }

    pub fn kind(&self) -> &ModularKind {
        &self.kind
    }

    pub fn evaluate(&self, f: &StepFunction) -> ExtendedReal {
        match &self.kind {
            ModularKind::Orlicz(phi) => f
                .pieces()
                .map(|(b, v)| block_term(phi, f.value_norm().norm(v), b.measure()))
                .fold(ExtendedReal::ZERO, Add::add),
            ModularKind::Musielak(zones) => f
                .pieces()
                .map(|(b, v)| musielak_block(zones, b, f.value_norm().norm(v)))
                .fold(ExtendedReal::ZERO, Add::add),
            ModularKind::Max(members) => members
                .iter()
                .map(|m| m.evaluate(f))
                .fold(ExtendedReal::ZERO, |a, b| if b > a { b } else { a }),
        }
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }
}

impl Modular for Semimodular {
    fn evaluate(&self, f: &StepFunction) -> ExtendedReal {
        Semimodular::evaluate(self, f)
    }

    fn convexity(&self) -> Convexity {
        self.convexity
    }
}

fn check_convexity(c: Convexity) -> Result<()> {
    if let Convexity::SConvex(s) = c {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
        }
    }
    Ok(())
}

fn block_term(phi: &PhiFunction, norm: f64, measure: f64) -> ExtendedReal {
    let v = phi.eval(norm);
    if v.is_infinite() {
        v
    } else {
        ExtendedReal::from_raw(v.to_f64() * measure)
    }
}

fn musielak_block(zones: &[Zone], block: &Block, norm: f64) -> ExtendedReal {
    let mut acc = ExtendedReal::ZERO;
    let mut lo = 0.0_f64;
    for z in zones {
        let hi = z.t_end.unwrap_or(f64::INFINITY);
        let a = block.start().max(lo);
        let b = block.end().min(hi);
        if b > a {
            acc = acc + block_term(&z.phi, norm, b - a);
        }
        lo = hi;
    }
    acc
}

/// Pointwise maximum `ρ = max_i ρ_i`. The result is as convex as its members
/// when they all share one class, and plain otherwise.
pub fn max_combine(rhos: &[Semimodular]) -> Result<Semimodular> {
    match rhos {
        [] => Err(Error::InvalidParameter("max_combine needs at least one modular".into())),
        [single] => Ok(single.clone()),
        [first, rest @ ..] => {
            let convexity = if rest.iter().all(|r| r.convexity == first.convexity) {
                first.convexity
            } else {
                Convexity::Plain
            };
            Ok(Semimodular { kind: ModularKind::Max(rhos.to_vec()), convexity })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModularViolation {
    pub axiom: String,
    pub detail: String,
    pub x: usize,
    pub y: Option<usize>,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SemimodularReport {
    pub checks: usize,
    pub violations: Vec<ModularViolation>,
}

impl SemimodularReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const SIMPLEX_GRID: usize = 17;

fn leq_with_slack(lhs: ExtendedReal, rhs: ExtendedReal) -> bool {
    if rhs.is_infinite() {
        return true;
    }
    let (l, r) = (lhs.to_f64(), rhs.to_f64());
    l <= r * (1.0 + 1e-12) + 1e-15
}

/// Sampled check of the semimodular axioms (a), (b), (c), and (c1) when the
/// declared class carries an exponent.
///
/// (c) and (c1) are checked on `trials` random sample pairs, each at the 17
/// grid points of the simplex plus one random point.
pub fn verify_semimodular(
    rho: &dyn Modular,
    samples: &[StepFunction],
    trials: usize,
    seed: u64,
) -> SemimodularReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SemimodularReport::default();
    let violate = |report: &mut SemimodularReport, axiom: &str, detail: String, x, y, a, b| {
        report.violations.push(ModularViolation { axiom: axiom.into(), detail, x, y, a, b });
    };

    for (i, x) in samples.iter().enumerate() {
        report.checks += 1;
        let at_zero = rho.evaluate(&x.scale(0.0));
        if at_zero != ExtendedReal::ZERO {
            violate(&mut report, "a", format!("rho(0) = {}", at_zero.to_f64()), i, None, 0.0, 0.0);
        }
        if !x.is_zero() {
            report.checks += 1;
            let vanishes = [1.0, 1e3, 1e6]
                .iter()
                .all(|&d| rho.evaluate(&x.scale(d)) == ExtendedReal::ZERO);
            if vanishes {
                violate(&mut report, "a", "rho(d x) = 0 for all probed d but x != 0".into(), i, None, 0.0, 0.0);
            }
        }
        report.checks += 1;
        let (p, n) = (rho.evaluate(x), rho.evaluate(&x.neg()));
        let symmetric = match (p.is_infinite(), n.is_infinite()) {
            (true, true) => true,
            (false, false) => (p.to_f64() - n.to_f64()).abs() <= 1e-12 * p.to_f64().max(1.0),
            _ => false,
        };
        if !symmetric {
            violate(
                &mut report,
                "b",
                format!("rho(x) = {} but rho(-x) = {}", p.to_f64(), n.to_f64()),
                i,
                None,
                -1.0,
                0.0,
            );
        }
    }

    if samples.is_empty() {
        return report;
    }
    let exponent = rho.convexity().exponent();
    for _ in 0..trials {
        let i = rng.gen_range(0..samples.len());
        let j = rng.gen_range(0..samples.len());
        let (x, y) = (&samples[i], &samples[j]);
        let (rx, ry) = (rho.evaluate(x), rho.evaluate(y));
        let mut alphas: Vec<f64> = (0..SIMPLEX_GRID).map(|g| g as f64 / (SIMPLEX_GRID - 1) as f64).collect();
        alphas.push(rng.gen::<f64>());
        for &alpha in &alphas {
            let Ok(mix) = x.linear_combination(alpha, y, 1.0 - alpha) else {
                continue;
            };
            report.checks += 1;
            let lhs = rho.evaluate(&mix);
            if !leq_with_slack(lhs, rx + ry) {
                violate(
                    &mut report,
                    "c",
                    format!("rho(ax+by) = {} > rho(x)+rho(y) = {}", lhs.to_f64(), (rx + ry).to_f64()),
                    i,
                    Some(j),
                    alpha,
                    1.0 - alpha,
                );
            }
            if let Some(s) = exponent {
                // a^{1/s} = alpha, b^{1/s} = 1 - alpha
                let (a, b) = (alpha.powf(s), (1.0 - alpha).powf(s));
                let Ok(mix) = x.linear_combination(a, y, b) else { continue };
                report.checks += 1;
                let lhs = rho.evaluate(&mix);
                let rhs = weighted(alpha, rx) + weighted(1.0 - alpha, ry);
                if !leq_with_slack(lhs, rhs) {
                    violate(
                        &mut report,
                        "c1",
                        format!("rho(ax+by) = {} > {} with s = {s}", lhs.to_f64(), rhs.to_f64()),
                        i,
                        Some(j),
                        a,
                        b,
                    );
                }
            }
        }
    }
    report
}

fn weighted(w: f64, v: ExtendedReal) -> ExtendedReal {
    if w == 0.0 {
        ExtendedReal::ZERO
    } else if v.is_infinite() {
        v
    } else {
        ExtendedReal::from_raw(w * v.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ValueNorm;

    fn ind(c: f64, a: f64, b: f64) -> StepFunction {
        StepFunction::indicator(a, b, vec![c], ValueNorm::Euclidean).unwrap()
    }

    #[test]
    fn orlicz_examples() {
        let l2 = Semimodular::lp(2.0).unwrap();
        assert_eq!(l2.evaluate(&ind(3.0, 0.0, 2.0)).to_f64(), 18.0);
        let l1 = Semimodular::lp(1.0).unwrap();
        assert_eq!(l1.evaluate(&ind(4.0, 0.0, 1.0)).to_f64(), 4.0);
        assert_eq!(l1.evaluate(&StepFunction::zero(1, ValueNorm::Euclidean)), ExtendedReal::ZERO);
    }

    #[test]
    fn max_combine_examples() {
        let l1 = Semimodular::lp(1.0).unwrap();
        let l2 = Semimodular::lp(2.0).unwrap();
        let m = max_combine(&[l1.clone(), l2]).unwrap();
        assert_eq!(m.evaluate(&ind(0.5, 0.0, 1.0)).to_f64(), 0.5);
        assert_eq!(m.convexity(), Convexity::Convex);
        assert_eq!(max_combine(std::slice::from_ref(&l1)).unwrap(), l1);
        assert_eq!(m.evaluate(&StepFunction::zero(1, ValueNorm::Euclidean)), ExtendedReal::ZERO);
        assert!(max_combine(&[]).is_err());
        let half = Semimodular::lp(0.5).unwrap();
        assert_eq!(max_combine(&[l1, half]).unwrap().convexity(), Convexity::Plain);
    }

    #[test]
    fn piecewise_linear_with_barrier() {
        let phi = PhiFunction::piecewise_linear(vec![1.0, 2.0], vec![0.0, 1.0, 3.0], Some(4.0)).unwrap();
        assert_eq!(phi.eval(0.5).to_f64(), 0.0);
        assert_eq!(phi.eval(1.5).to_f64(), 0.5);
        assert_eq!(phi.eval(3.0).to_f64(), 4.0);
        assert_eq!(phi.eval(4.0).to_f64(), 7.0);
        assert!(phi.eval(4.5).is_infinite());
        let rho = Semimodular::orlicz(phi, Convexity::Convex).unwrap();
        assert!(rho.evaluate(&ind(5.0, 0.0, 1.0)).is_infinite());
        assert!(PhiFunction::piecewise_linear(vec![1.0], vec![1.0], None).is_err());
        assert!(PhiFunction::piecewise_linear(vec![2.0, 1.0], vec![1.0, 1.0, 1.0], None).is_err());
    }

    #[test]
    fn musielak_splits_blocks_across_zones() {
        let rho = Semimodular::musielak(
            vec![
                Zone { t_end: Some(1.0), phi: PhiFunction::Power { p: 1.0 } },
                Zone { t_end: None, phi: PhiFunction::Power { p: 2.0 } },
            ],
            Convexity::Convex,
        )
        .unwrap();
        // 3 on [0.5, 1) under u, 9 on [1, 2) under u^2
        assert_eq!(rho.evaluate(&ind(3.0, 0.5, 2.0)).to_f64(), 1.5 + 9.0);
        assert!(Semimodular::musielak(
            vec![Zone { t_end: Some(1.0), phi: PhiFunction::ExpShift }],
            Convexity::Convex
        )
        .is_err());
    }

    #[test]
    fn verify_passes_for_square() {
        let rho = Semimodular::lp(2.0).unwrap();
        let samples: Vec<StepFunction> = (0..6)
            .map(|i| StepFunction::scalar(&[(0.0, 1.0, i as f64 - 2.5), (1.0, 1.5, 0.3 * i as f64)]).unwrap())
            .collect();
        let report = verify_semimodular(&rho, &samples, 100, 3);
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.checks > 100 * SIMPLEX_GRID);
    }

    struct Broken;

    impl Modular for Broken {
        fn evaluate(&self, f: &StepFunction) -> ExtendedReal {
            // φ(u) = 1 + u
            ExtendedReal::from_raw(f.pieces().map(|(b, v)| (1.0 + v[0].abs()) * b.measure()).sum())
        }
        fn convexity(&self) -> Convexity {
            Convexity::Plain
        }
    }

    #[test]
    fn verify_reports_broken_zero_axiom() {
        let report = verify_semimodular(&Broken, &[ind(1.0, 0.0, 1.0)], 4, 1);
        assert!(report.violations.iter().any(|v| v.axiom == "a"));
    }

    #[test]
    fn verify_reports_false_convexity_claim() {
        // u^(1/2) is not convex; claiming so must surface a (c1) violation.
        let rho = Semimodular::orlicz(PhiFunction::Power { p: 0.5 }, Convexity::Convex).unwrap();
        let samples = vec![ind(1.0, 0.0, 1.0), ind(0.0, 0.0, 1.0)];
        let report = verify_semimodular(&rho, &samples, 40, 11);
        assert!(report.violations.iter().any(|v| v.axiom == "c1"));
        assert!(!report.violations.iter().any(|v| v.axiom == "c"));
    }

    #[test]
    fn scaling_decays_to_zero() {
        let rho = Semimodular::lp(2.0).unwrap();
        let f = StepFunction::scalar(&[(0.0, 1.0, 3.0), (1.0, 4.0, -1.0)]).unwrap();
        let vals: Vec<f64> = (0..30).map(|k| rho.evaluate(&f.scale(1.0 / 2f64.powi(k))).to_f64()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(*vals.last().unwrap() < 1e-15);
    }
}
