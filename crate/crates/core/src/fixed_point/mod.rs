//! Approximate fixed points of compact continuous self-maps.
//!
//! A map `T` with bounded range is replaced by `H ∘ T`, where `H` is the
//! finite-rank map of [`crate::approximation`] built for a sample of the
//! range. On the `|K|·d` block coefficients `H ∘ T` is a continuous self-map
//! of a cube, solved by [`brouwer_solve`]; the lifted point is accepted once
//! its residual `|T f − f|` is certified below `eps`.

mod brouwer;
mod external;

pub use brouwer::{brouwer_solve, BoxDomain, BrouwerOptions, BrouwerSolution, Method, MAX_DIM};
pub use external::ExternalOperator;

use serde::{Deserialize, Serialize};

use crate::approximation::{block_averages, build_admissible_map, radial_project, PipelineOptions};
use crate::error::{Error, Result};
use crate::fnorm::FNormSpec;
use crate::measure::{MeasureSpace, Partition, StepFunction, ValueNorm};

pub trait Operator {
    fn apply(&self, f: &StepFunction) -> Result<StepFunction>;

    /// Declared bound on the sup-norm of the range, if any.
    fn range_bound(&self) -> Option<f64>;

    /// Value dimension and norm of the functions the operator acts on.
    fn shape(&self) -> Option<(usize, ValueNorm)> {
        None
    }

    /// `(c, λ, K)` when the operator is `f ↦ c + λ P_K f`.
    fn affine_parts(&self) -> Option<(&StepFunction, f64, &Partition)> {
        None
    }

    fn is_identity(&self) -> bool {
        false
    }
}

/// Built-in operators; JSON tag `kind` in kebab case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorSpec {
    /// `f ↦ c + λ P_K f` with `|λ| < 1`.
    AffineAverage { c: StepFunction, lambda: f64, partition: Partition },
    /// `f ↦ c + λ sin(P_K f)`, sine taken componentwise.
    SinDamped { c: StepFunction, lambda: f64, partition: Partition },
    Constant { c: StepFunction },
    /// `f ↦ R_a f`.
    RadialProjection { a: f64 },
    Identity,
    /// Child process speaking the line protocol of [`ExternalOperator`].
    External {
        command: Vec<String>,
        range_bound: f64,
        #[serde(default)]
        dim: Option<usize>,
        #[serde(default)]
        value_norm: Option<ValueNorm>,
    },
}

impl OperatorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::AffineAverage { lambda, .. } if !(lambda.abs() < 1.0) => {
                Err(Error::InvalidParameter(format!("affine operator needs |lambda| < 1, got {lambda}")))
            }
            OperatorSpec::SinDamped { lambda, .. } if !lambda.is_finite() => {
                Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")))
            }
            OperatorSpec::RadialProjection { a } if !(*a > 0.0 && a.is_finite()) => {
                Err(Error::InvalidParameter(format!("radius must be positive, got {a}")))
            }
            _ => Ok(()),
        }
    }

    /// Validated operator; external specs spawn their process here.
    pub fn instantiate(self) -> Result<Box<dyn Operator>> {
        self.validate()?;
        match self {
            OperatorSpec::External { command, range_bound, dim, value_norm } => {
                let shape = dim.map(|d| (d, value_norm.unwrap_or(ValueNorm::Euclidean)));
                Ok(Box::new(ExternalOperator::spawn(&command, range_bound, shape)?))
            }
            builtin => Ok(Box::new(builtin)),
        }
    }
}

impl Operator for OperatorSpec {
    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        match self {
            OperatorSpec::AffineAverage { c, lambda, partition } => {
                c.linear_combination(1.0, &block_averages(f, partition), *lambda)
            }
            OperatorSpec::SinDamped { c, lambda, partition } => {
                let s = block_averages(f, partition).map_values(|v| v.iter().map(|x| x.sin()).collect());
                c.linear_combination(1.0, &s, *lambda)
            }
            OperatorSpec::Constant { c } => Ok(c.clone()),
            OperatorSpec::RadialProjection { a } => radial_project(f, *a),
            OperatorSpec::Identity => Ok(f.clone()),
            OperatorSpec::External { .. } => {
                Err(Error::External("external operators must be instantiated first".into()))
            }
        }
    }

    fn range_bound(&self) -> Option<f64> {
        match self {
            OperatorSpec::AffineAverage { .. } | OperatorSpec::Identity => None,
            OperatorSpec::SinDamped { c, lambda, .. } => {
                Some(c.sup_norm() + lambda.abs() * c.value_norm().unit_cube_corner(c.dim()))
            }
            OperatorSpec::Constant { c } => Some(c.sup_norm()),
            OperatorSpec::RadialProjection { a } => Some(*a),
            OperatorSpec::External { range_bound, .. } => Some(*range_bound),
        }
    }

    fn shape(&self) -> Option<(usize, ValueNorm)> {
        match self {
            OperatorSpec::AffineAverage { c, .. }
            | OperatorSpec::SinDamped { c, .. }
            | OperatorSpec::Constant { c } => Some((c.dim(), c.value_norm())),
            OperatorSpec::External { dim: Some(d), value_norm, .. } => {
                Some((*d, value_norm.unwrap_or(ValueNorm::Euclidean)))
            }
            _ => None,
        }
    }

    fn affine_parts(&self) -> Option<(&StepFunction, f64, &Partition)> {
        match self {
            OperatorSpec::AffineAverage { c, lambda, partition } => Some((c, *lambda, partition)),
            _ => None,
        }
    }

    fn is_identity(&self) -> bool {
        matches!(self, OperatorSpec::Identity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub point: StepFunction,
    /// `|T(point) − point|` in the chosen F-norm.
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Evaluation cap handed to the finite-dimensional solver.
    pub max_iter: usize,
    /// Number of sample-enlarging, tolerance-tightening rounds.
    pub max_rounds: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { max_iter: 100_000, max_rounds: 8 }
    }
}

/// `|T f − f|`.
pub fn residual(op: &dyn Operator, f: &StepFunction, spec: &FNormSpec) -> Result<f64> {
    spec.norm(&op.apply(f)?.sub(f)?)
}

/// Range samples seeding the finite-rank reduction: `T(0), T²(0), …`.
const SEED_ITERATES: usize = 4;
/// Tolerance on block coefficients shrinks by this factor per round.
const TIGHTEN: f64 = 1e-3;

/// Point `f` with `|T f − f| < eps`.
///
/// Operators of the form `c + λ P_K` are solved exactly:
/// `f = c + λ/(1−λ) · P_K c`. Otherwise the range must carry a declared bound
/// `a`; the reduction lives on the cube `[−a, a]^{|K|·d}`, which `H ∘ T` maps
/// into itself because `H` ends with an averaging step after projecting onto
/// the ball of radius `a`. The lifted solution `f` competes with `T f`, and
/// the one with the smaller residual is kept. Rounds that miss the target add
/// `T f` to the range sample and tighten the coefficient tolerance.
pub fn approximate_fixed_point(
    op: &dyn Operator,
    eps: f64,
    spec: &FNormSpec,
    space: &MeasureSpace,
    options: &FixedPointOptions,
) -> Result<FixedPointResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    if let Some((c, lambda, k)) = op.affine_parts() {
        let point = c.linear_combination(1.0, &block_averages(c, k), lambda / (1.0 - lambda))?;
        let r = residual(op, &point, spec)?;
        return Ok(FixedPointResult { point, residual: r, iterations: 0, method: Method::Exact });
    }
    let bound = op
        .range_bound()
        .filter(|b| b.is_finite())
        .ok_or_else(|| Error::InvalidParameter("operator declares no finite range bound".into()))?;
    let (dim, norm) = op.shape().unwrap_or((1, ValueNorm::Euclidean));

    let mut sample = Vec::with_capacity(SEED_ITERATES + options.max_rounds);
    let mut f = StepFunction::zero(dim, norm);
    for _ in 0..SEED_ITERATES {
        f = op.apply(&f)?;
        sample.push(f.clone());
    }

    let radius = bound.max(f64::MIN_POSITIVE);
    let mut tol = eps / 2.0;
    let mut iterations = 0;
    let mut best: Option<FixedPointResult> = None;
    for _ in 0..options.max_rounds {
        let pipeline_opts = PipelineOptions { radius: Some(radius), ..Default::default() };
        let h = build_admissible_map(&sample, eps / 2.0, spec, space, &pipeline_opts)?;
        let k = h.partition.clone();
        let n = k.len() * dim;
        if n > MAX_DIM {
            return Err(Error::DimensionLimit { dim: n, limit: MAX_DIM });
        }
        let lift = |p: &[f64]| StepFunction::on_partition(k.clone(), dim, norm, p.to_vec());
        let g = |p: &[f64]| -> Result<Vec<f64>> {
            let image = h.apply(&op.apply(&lift(p)?)?)?;
            Ok(image.raw_values().to_vec())
        };
        let cube = BoxDomain::cube(n, h.a)?;
        let solver = BrouwerOptions { tol, max_iter: options.max_iter, ..Default::default() };
        let solution = brouwer_solve(g, &cube, &solver)?;
        iterations += solution.iterations;
        let lifted = lift(&solution.point)?;
        let r_lifted = residual(op, &lifted, spec)?;
        // one step of T in function space often lands closer
        let stepped = op.apply(&lifted)?;
        let r_stepped = residual(op, &stepped, spec)?;
        let (point, r) = if r_stepped < r_lifted { (stepped, r_stepped) } else { (lifted, r_lifted) };
        let candidate = FixedPointResult { point, residual: r, iterations, method: solution.method };
        if r < eps {
            return Ok(candidate);
        }
        sample.push(op.apply(&candidate.point)?);
        if best.as_ref().is_none_or(|b| r < b.residual) {
            best = Some(candidate);
        }
        tol = (tol * TIGHTEN).max(f64::EPSILON * radius);
    }
    Err(Error::Unreachable(format!(
        "best residual {} after {} rounds, target {eps}",
        best.map_or(f64::INFINITY, |b| b.residual),
        options.max_rounds
    )))
}

struct Composed<'a> {
    outer: &'a dyn Operator,
    inner: &'a dyn Operator,
}

impl Operator for Composed<'_> {
    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.outer.apply(&self.inner.apply(f)?)
    }

    fn range_bound(&self) -> Option<f64> {
        self.outer.range_bound()
    }

    fn shape(&self) -> Option<(usize, ValueNorm)> {
        self.outer.shape().or_else(|| self.inner.shape())
    }
}

/// Checks `P ∘ P = P` on a few points, solves for `T ∘ P`, and returns the
/// solution passed through `P` once more, with its residual for `T ∘ P`.
pub fn retract_fixed_point(
    op: &dyn Operator,
    retract: &dyn Operator,
    eps: f64,
    spec: &FNormSpec,
    space: &MeasureSpace,
    options: &FixedPointOptions,
) -> Result<FixedPointResult> {
    if retract.is_identity() {
        return approximate_fixed_point(op, eps, spec, space, options);
    }
    let (dim, norm) = op.shape().or_else(|| retract.shape()).unwrap_or((1, ValueNorm::Euclidean));
    let mut probes = vec![StepFunction::zero(dim, norm)];
    for _ in 0..3 {
        let next = op.apply(probes.last().unwrap())?;
        probes.push(next.scale(2.0));
        probes.push(next);
    }
    for x in &probes {
        let once = retract.apply(x)?;
        let twice = retract.apply(&once)?;
        let gap = spec.norm(&twice.sub(&once)?)?;
        if gap > 1e-12 {
            return Err(Error::NotIdempotent(format!("|P(P x) − P x| = {gap}")));
        }
    }
    let composed = Composed { outer: op, inner: retract };
    let solved = approximate_fixed_point(&composed, eps, spec, space, options)?;
    let point = retract.apply(&solved.point)?;
    let r = residual(&composed, &point, spec)?;
    Ok(FixedPointResult { point, residual: r, ..solved })
}
