use super::{MeasurableSet, StepFunction};
use crate::error::{Error, Result};

/// Exceptional set `A` and 1-based start index `n0`: for every `n >= n0`,
/// `sup_{t ∉ A} ‖f_n(t) − f(t)‖ <= eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct EgorovWitness {
    pub set: MeasurableSet,
    pub n0: usize,
}

/// Finite-prefix Egorov set.
///
/// Let `B(n0) = ∪_{n >= n0} {‖f_n − f‖ > eps}`. The sets shrink as `n0`
/// grows, so the least `n0` with `μ(B(n0)) < m` is found by accumulating the
/// unions from the end of the sequence.
pub fn egorov_uniform_set(
    fs: &[StepFunction],
    limit: &StepFunction,
    m: f64,
    eps: f64,
) -> Result<EgorovWitness> {
    if !(m > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("need m > 0 and eps > 0, got m={m}, eps={eps}")));
    }
    if fs.is_empty() {
        return Err(Error::NoWitness("empty sequence".into()));
    }

    let bad_sets = fs
        .iter()
        .map(|f| {
            let dev = f.sub(limit)?;
            let blocks = dev
                .pieces()
                .filter(|(_, v)| dev.value_norm().norm(v) > eps)
                .map(|(b, _)| *b);
            Ok(MeasurableSet::from_blocks(blocks))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tail = MeasurableSet::empty();
    let mut best: Option<EgorovWitness> = None;
    for (idx, bad) in bad_sets.iter().enumerate().rev() {
        tail = tail.union(bad);
        if tail.measure() < m {
            best = Some(EgorovWitness { set: tail.clone(), n0: idx + 1 });
        } else {
            break;
        }
    }
    best.ok_or_else(|| {
        Error::NoWitness(format!(
            "even the last term deviates by more than {eps} on a set of measure >= {m}"
        ))
    })
}
