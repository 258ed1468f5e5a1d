//! F-norms and s-norms generated by semimodulars.
//!
//! For semimodulars `ρ_1, …, ρ_{n−1}` and a monotone F-norm `f` on `R^n`
//! ("binder"), the F-norm of `x` is
//!
//! ```text
//! |x|_f = inf_{k>0} f(k, ρ_1(x/k), …, ρ_{n−1}(x/k))
//! ```
//!
//! and, for `s`-convex modulars and a convex binder, the `s`-norm is
//!
//! ```text
//! ‖x‖_f = inf_{k>0} k · f(1, ρ_1(x/k^{1/s}), …, ρ_{n−1}(x/k^{1/s})).
//! ```
//!
//! With the max binder these reduce to the Luxemburg F-norm
//! `inf{u > 0 : ρ(x/u) <= u}` and the Luxemburg norm
//! `inf{u > 0 : ρ(x/u) <= 1}`; with the `l^p` binder and `s = 1` to the
//! (p-)Orlicz–Amemiya norm. Those closed crossings are computed separately by
//! bisection and serve as independent routes in the tests.

mod search;
mod verify;

pub use search::SearchParams;
pub use verify::{verify_binder_monotone, verify_fnorm_axioms, AxiomReport, AxiomViolation, BinderReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::StepFunction;
use crate::modular::{ExtendedReal, Semimodular};
use search::{minimize_over_scale, threshold_bisection};

/// Monotone F-norm on `R^n` combining `(k, ρ_1, …)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Binder {
    Max,
    Lp { p: f64 },
    #[serde(rename = "wsum")]
    WeightedSum { weights: Vec<f64> },
}

impl Binder {
    /// `p = ∞` gives [`Binder::Max`].
    pub fn lp(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            return Ok(Binder::Max);
        }
        let b = Binder::Lp { p };
        b.validate()?;
        Ok(b)
    }

    pub fn weighted_sum(weights: Vec<f64>) -> Result<Self> {
        let b = Binder::WeightedSum { weights };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Binder::Max => Ok(()),
            Binder::Lp { p } if p.is_finite() && *p >= 1.0 => Ok(()),
            Binder::Lp { p } => Err(Error::InvalidParameter(format!("lp binder needs p >= 1, got {p}"))),
            Binder::WeightedSum { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    Err(Error::InvalidParameter("weighted-sum binder needs positive finite weights".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn accepts_arity(&self, n: usize) -> bool {
        match self {
            Binder::WeightedSum { weights } => weights.len() == n,
            _ => n >= 1,
        }
    }

    /// `+∞` as soon as one coordinate is infinite.
    pub fn eval(&self, coords: &[f64]) -> f64 {
        if coords.iter().any(|c| c.is_infinite()) {
            return f64::INFINITY;
        }
        match self {
            Binder::Max => coords.iter().fold(0.0_f64, |m, c| m.max(c.abs())),
            Binder::Lp { p } if *p == 1.0 => coords.iter().map(|c| c.abs()).sum(),
            Binder::Lp { p } => {
                // scale by the largest coordinate to keep c^p finite
                let m = coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * coords.iter().map(|c| (c.abs() / m).powf(*p)).sum::<f64>().powf(1.0 / p)
            }
            Binder::WeightedSum { weights } => weights.iter().zip(coords).map(|(w, c)| w * c.abs()).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormMode {
    FNorm,
    SNorm { s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FNormSpec {
    modulars: Vec<Semimodular>,
    binder: Binder,
    mode: NormMode,
    search: SearchParams,
}

/// Infimum value together with the scale that attains it (`k = 0` for the
/// zero function, where the infimum is not attained).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub k: f64,
}

impl FNormSpec {
    pub fn new(modulars: Vec<Semimodular>, binder: Binder, mode: NormMode, search: SearchParams) -> Result<Self> {
        if modulars.is_empty() {
            return Err(Error::InvalidParameter("need at least one modular".into()));
        }
        binder.validate()?;
        search.validate()?;
        if !binder.accepts_arity(modulars.len() + 1) {
            return Err(Error::InvalidParameter(format!(
                "binder arity does not match {} modulars",
                modulars.len()
            )));
        }
        if let NormMode::SNorm { s } = mode {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
            }
            for m in &modulars {
                if m.convexity().exponent() != Some(s) {
                    return Err(Error::WrongConvexity(format!(
                        "s-norm with s = {s} needs every modular {s}-convex, found {:?}",
                        m.convexity()
                    )));
                }
            }
        }
        Ok(Self { modulars, binder, mode, search })
    }

    /// Max binder over a single modular: the Luxemburg F-norm.
    pub fn luxemburg(rho: Semimodular) -> Self {
        Self {
            modulars: vec![rho],
            binder: Binder::Max,
            mode: NormMode::FNorm,
            search: SearchParams::default(),
        }
    }

    pub fn with_search(mut self, search: SearchParams) -> Result<Self> {
        search.validate()?;
        self.search = search;
        Ok(self)
    }

    pub fn modulars(&self) -> &[Semimodular] {
        &self.modulars
    }

    pub fn binder(&self) -> &Binder {
        &self.binder
    }

    pub fn mode(&self) -> NormMode {
        self.mode
    }

    pub fn search(&self) -> &SearchParams {
        &self.search
    }

    fn modular_coords(&self, lead: f64, x: &StepFunction, scale: f64) -> Vec<f64> {
        let scaled = x.scale(1.0 / scale);
        std::iter::once(lead)
            .chain(self.modulars.iter().map(|m| m.evaluate(&scaled).to_f64()))
            .collect()
    }

    fn objective_at(&self, x: &StepFunction, k: f64) -> f64 {
        match self.mode {
            NormMode::FNorm => self.binder.eval(&self.modular_coords(k, x, k)),
            NormMode::SNorm { s } => k * self.binder.eval(&self.modular_coords(1.0, x, k.powf(1.0 / s))),
        }
    }

    /// `|x|_f` or `‖x‖_f` according to the mode.
    pub fn norm(&self, x: &StepFunction) -> Result<f64> {
        Ok(self.infimum(x)?.value)
    }

    fn infimum(&self, x: &StepFunction) -> Result<NormValue> {
        if x.is_zero() {
            return Ok(NormValue { value: 0.0, k: 0.0 });
        }
        let probe = x.scale(1e30);
        if self.modulars.iter().all(|m| m.evaluate(&probe) == ExtendedReal::ZERO) {
            return Err(Error::AxiomViolation(
                "modular vanishes on every scaling of a nonzero function".into(),
            ));
        }
        minimize_over_scale(|k| self.objective_at(x, k), &self.search)
            .map(|m| NormValue { value: m.value, k: m.k })
            .ok_or(Error::NotInSpace)
    }
}

/// `f(k e_1 + Σ ρ_{i−1}(x/k) e_i)`.
pub fn fnorm_objective(spec: &FNormSpec, x: &StepFunction, k: f64) -> Result<ExtendedReal> {
    check_scale(k)?;
    Ok(ExtendedReal::from_raw(spec.binder.eval(&spec.modular_coords(k, x, k))))
}

/// `k · f(e_1 + Σ ρ_{i−1}(x/k^{1/s}) e_i)`; needs s-norm mode.
pub fn snorm_objective(spec: &FNormSpec, x: &StepFunction, k: f64) -> Result<ExtendedReal> {
    check_scale(k)?;
    let NormMode::SNorm { s } = spec.mode else {
        return Err(Error::WrongMode("s-norm objective on an F-norm spec".into()));
    };
    Ok(ExtendedReal::from_raw(k * spec.binder.eval(&spec.modular_coords(1.0, x, k.powf(1.0 / s)))))
}

fn check_scale(k: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("scale k must be > 0, got {k}")));
    }
    Ok(())
}

pub fn fnorm(spec: &FNormSpec, x: &StepFunction) -> Result<NormValue> {
    if spec.mode != NormMode::FNorm {
        return Err(Error::WrongMode("fnorm on an s-norm spec".into()));
    }
    spec.infimum(x)
}

pub fn snorm(spec: &FNormSpec, x: &StepFunction) -> Result<NormValue> {
    if !matches!(spec.mode, NormMode::SNorm { .. }) {
        return Err(Error::WrongMode("snorm on an F-norm spec".into()));
    }
    spec.infimum(x)
}

fn crossing(rho: &Semimodular, x: &StepFunction, tol: f64, level: impl Fn(f64) -> f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    if x.is_zero() {
        return Ok(0.0);
    }
    let u = threshold_bisection(|u| rho.evaluate(&x.scale(1.0 / u)).to_f64() <= level(u), tol, 200)?;
    u.ok_or_else(|| Error::AxiomViolation("modular vanishes on every scaling of a nonzero function".into()))
}

/// `inf{u > 0 : ρ(x/u) <= u}` by bisection; `u ↦ ρ(x/u)` is nonincreasing.
pub fn luxemburg_fnorm(rho: &Semimodular, x: &StepFunction, tol: f64) -> Result<f64> {
    crossing(rho, x, tol, |u| u)
}

/// `inf{u > 0 : ρ(x/u) <= 1}` for convex `ρ`.
pub fn luxemburg_norm(rho: &Semimodular, x: &StepFunction, tol: f64) -> Result<f64> {
    if !rho.convexity().is_convex() {
        return Err(Error::WrongConvexity(format!(
            "Luxemburg norm needs a convex modular, found {:?}",
            rho.convexity()
        )));
    }
    crossing(rho, x, tol, |_| 1.0)
}

/// `inf_k k · ‖(1, ρ(x/k))‖_p`; `p = ∞` is the Luxemburg norm by another
/// route.
pub fn amemiya_norm(rho: &Semimodular, x: &StepFunction, p: f64, tol: f64) -> Result<f64> {
    if !rho.convexity().is_convex() {
        return Err(Error::WrongConvexity(format!(
            "Amemiya norm needs a convex modular, found {:?}",
            rho.convexity()
        )));
    }
    let spec = FNormSpec::new(
        vec![rho.clone()],
        Binder::lp(p)?,
        NormMode::SNorm { s: 1.0 },
        SearchParams::default().with_tol(tol),
    )?;
    Ok(snorm(&spec, x)?.value)
}
