//! Finite-rank approximation of the identity on finite families of step
//! functions.
//!
//! The assembled map is `H = P_K ∘ T_a ∘ F_n`: truncation to the exhaustion
//! set `T_n = [0, t_n)`, radial projection onto the ball of radius `a` in the
//! value space, and averaging over the blocks of a partition `K` of `T_n`.
//! Its range is spanned by `χ_B e_j` for `B ∈ K`, so it has rank at most
//! `|K| · d`. Each stage is allotted `eps / 3`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fnorm::FNormSpec;
use crate::measure::{Block, MeasureSpace, Partition, StepFunction, BREAKPOINT_TOL};

/// `F_n f = f χ_{T_n}` for the 1-based exhaustion index `n`.
pub fn domain_truncate(f: &StepFunction, space: &MeasureSpace, n: usize) -> Result<StepFunction> {
    Ok(f.restrict(0.0, space.cutoff(n)?))
}

/// `R_a` applied pointwise: values outside the closed ball of radius `a` are
/// pulled back radially onto its boundary.
pub fn radial_project(f: &StepFunction, a: f64) -> Result<StepFunction> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive and finite, got {a}")));
    }
    let norm = f.value_norm();
    Ok(f.map_values(|w| {
        let r = norm.norm(w);
        if r <= a {
            return w.to_vec();
        }
        let mut out: Vec<f64> = w.iter().map(|x| x * (a / r)).collect();
        // rounding may leave the result a few ulps outside the ball
        while norm.norm(&out) > a {
            out.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
        }
        out
    }))
}

/// Block averages of `f` over `partition`, zero off the partition.
///
/// On `T_i` the value is `Σ_j w_j μ(S_j ∩ T_i) / μ(T_i)`; when a piece of `f`
/// covers `T_i` the weight is exactly one, so functions already constant on
/// the blocks are reproduced bit for bit.
pub(crate) fn block_averages(f: &StepFunction, partition: &Partition) -> StepFunction {
    let dim = f.dim();
    let pieces: Vec<(&Block, &[f64])> = f.pieces().collect();
    let mut values = vec![0.0; dim * partition.len()];
    let mut start = 0;
    for (i, t) in partition.blocks().iter().enumerate() {
        while start < pieces.len() && pieces[start].0.end() <= t.start() {
            start += 1;
        }
        let row = &mut values[i * dim..(i + 1) * dim];
        for (s, w) in pieces[start..].iter().take_while(|(s, _)| s.start() < t.end()) {
            let overlap = if s.contains_block(t) {
                1.0
            } else {
                match s.intersect(t) {
                    Some(b) => b.measure() / t.measure(),
                    None => continue,
                }
            };
            row.iter_mut().zip(w.iter()).for_each(|(r, x)| *r += x * overlap);
        }
    }
    StepFunction::on_partition(partition.clone(), dim, f.value_norm(), values)
        .expect("block averages of finite values are finite")
}

/// `P_K f`: the conditional expectation onto functions constant on the
/// blocks of `K`. The support of `f` must lie in the union of `K`.
pub fn partition_average(f: &StepFunction, partition: &Partition) -> Result<StepFunction> {
    let union = partition.union();
    for (b, w) in f.pieces() {
        if w.iter().any(|&x| x != 0.0) && union.measure_outside(b) > BREAKPOINT_TOL {
            return Err(Error::DomainMismatch);
        }
    }
    Ok(block_averages(f, partition))
}

/// Values of norm above `4M` are replaced by `2M w / ‖w‖`; smaller values are
/// kept.
pub fn bounded_simple_approx(f: &StepFunction, m: f64) -> Result<StepFunction> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("bound M must be positive and finite, got {m}")));
    }
    let norm = f.value_norm();
    Ok(f.map_values(|w| {
        let r = norm.norm(w);
        if r <= 4.0 * m {
            w.to_vec()
        } else {
            w.iter().map(|x| x * (2.0 * m / r)).collect()
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineOptions {
    /// Largest admissible block count for `K`; `None` allows the exact
    /// common refinement of the family.
    pub max_blocks: Option<usize>,
    /// Radius to use instead of the sup-norm of the truncated family.
    pub radius: Option<f64>,
    /// Deepest dyadic level tried when `max_blocks` is set (default 20).
    pub max_depth: Option<u32>,
}

const DEFAULT_DEPTH: u32 = 20;

/// Sup-errors over the family, one per stage, and of the assembled map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineReport {
    pub truncation: f64,
    pub radial: f64,
    pub averaging: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineH {
    pub n: usize,
    pub cutoff: f64,
    pub a: f64,
    pub partition: Partition,
    pub report: PipelineReport,
}

impl PipelineH {
    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        let g = radial_project(&f.restrict(0.0, self.cutoff), self.a)?;
        partition_average(&g, &self.partition)
    }

    /// Upper bound on the dimension of the range for values in `R^d`.
    pub fn rank_bound(&self, d: usize) -> usize {
        self.partition.len() * d
    }

    /// CSV rows `stage,parameter,sup_error` followed by the total.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,parameter,sup_error\n");
        out += &format!("truncation,{},{:.16e}\n", self.n, self.report.truncation);
        out += &format!("radial,{:.16e},{:.16e}\n", self.a, self.report.radial);
        out += &format!("averaging,{},{:.16e}\n", self.partition.len(), self.report.averaging);
        out += &format!("total_error,,{:.16e}\n", self.report.total);
        out
    }
}

fn sup_distance(
    spec: &FNormSpec,
    pairs: impl IntoIterator<Item = (StepFunction, StepFunction)>,
) -> Result<f64> {
    let mut sup = 0.0_f64;
    for (f, g) in pairs {
        sup = sup.max(spec.norm(&f.sub(&g)?)?);
    }
    Ok(sup)
}

/// `sup_{f ∈ Z} |f − H f|` recomputed from scratch.
pub fn pipeline_sup_error(h: &PipelineH, z: &[StepFunction], spec: &FNormSpec) -> Result<f64> {
    let images = z.iter().map(|f| h.apply(f)).collect::<Result<Vec<_>>>()?;
    sup_distance(spec, z.iter().cloned().zip(images))
}

/// Chooses `(n, a, K)` so that `sup_{f ∈ Z} |f − H f| < eps`, with every
/// stage contributing less than `eps / 3`.
///
/// * `n` is the least index whose truncation error is below budget.
/// * `a` is the sup-norm of the truncated family unless overridden.
/// * `K` is the single block `[0, t_n)` if that is already good enough;
///   otherwise the common refinement of all members' breakpoints on
///   `[0, t_n)`, where averaging is exact. With `max_blocks` set, uniform
///   dyadic partitions of `[0, t_n)` are tried from coarse to fine instead.
pub fn build_admissible_map(
    z: &[StepFunction],
    eps: f64,
    spec: &FNormSpec,
    space: &MeasureSpace,
    options: &PipelineOptions,
) -> Result<PipelineH> {
    if z.is_empty() {
        return Err(Error::InvalidParameter("family must be nonempty".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    let budget = eps / 3.0;

    let mut chosen = None;
    for n in 1..=space.levels() {
        let truncated = z.iter().map(|f| domain_truncate(f, space, n)).collect::<Result<Vec<_>>>()?;
        let err = sup_distance(spec, z.iter().cloned().zip(truncated.iter().cloned()))?;
        if err < budget {
            chosen = Some((n, truncated, err));
            break;
        }
    }
    let Some((n, truncated, truncation)) = chosen else {
        return Err(Error::BudgetExhausted(format!(
            "no exhaustion level brings the truncation error below {budget}"
        )));
    };
    let cutoff = space.cutoff(n)?;

    let sup = truncated.iter().map(StepFunction::sup_norm).fold(0.0, f64::max);
    let a = match options.radius {
        Some(r) => r,
        None if sup > 0.0 => sup,
        None => 1.0,
    };
    let projected = truncated.iter().map(|f| radial_project(f, a)).collect::<Result<Vec<_>>>()?;
    let radial = sup_distance(spec, truncated.iter().cloned().zip(projected.iter().cloned()))?;
    if radial >= budget {
        return Err(Error::BudgetExhausted(format!(
            "radial projection at a = {a} costs {radial}, budget {budget}"
        )));
    }

    let averaging_error = |k: &Partition| -> Result<f64> {
        let avg = projected.iter().map(|g| partition_average(g, k)).collect::<Result<Vec<_>>>()?;
        sup_distance(spec, projected.iter().cloned().zip(avg))
    };

    let mut candidates: Vec<Partition> = Vec::new();
    match options.max_blocks {
        None => {
            candidates.push(Partition::trivial(0.0, cutoff)?);
            let mut points = vec![0.0, cutoff];
            for g in &projected {
                points.extend(g.partition().breakpoints());
            }
            points.retain(|&t| (0.0..=cutoff).contains(&t));
            candidates.push(Partition::from_breakpoints(&points)?);
        }
        Some(max) => {
            let depth = options.max_depth.unwrap_or(DEFAULT_DEPTH);
            for j in 0..=depth {
                let blocks = 1usize << j;
                if blocks > max {
                    break;
                }
                candidates.push(Partition::uniform(0.0, cutoff, blocks)?);
            }
        }
    }

    for k in candidates {
        let averaging = averaging_error(&k)?;
        if averaging >= budget {
            continue;
        }
        let mut h = PipelineH {
            n,
            cutoff,
            a,
            partition: k,
            report: PipelineReport { truncation, radial, averaging, total: 0.0 },
        };
        let total = pipeline_sup_error(&h, z, spec)?;
        h.report.total = total;
        if total < eps {
            return Ok(h);
        }
    }
    Err(Error::BudgetExhausted(format!(
        "no admissible partition certifies eps = {eps} within the configured limits"
    )))
}
