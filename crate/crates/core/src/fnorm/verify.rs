//! Sampled checks of binder monotonicity and of the F-norm axioms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Binder, FNormSpec};
use crate::measure::StepFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct BinderReport {
    pub checks: usize,
    pub violations: Vec<String>,
}

impl BinderReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Draws coordinatewise-ordered pairs `0 <= x <= y` in `R^arity` and checks
/// `f(x) <= f(y)`, plus `f(0) = 0` and `f(x) > 0` for `x != 0`.
pub fn verify_binder_monotone(binder: &Binder, arity: usize, trials: usize, seed: u64) -> BinderReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BinderReport::default();
    if !binder.accepts_arity(arity) {
        report.violations.push(format!("binder does not accept arity {arity}"));
        return report;
    }
    report.checks += 1;
    let zero = binder.eval(&vec![0.0; arity]);
    if zero != 0.0 {
        report.violations.push(format!("f(0) = {zero}"));
    }
    for t in 0..trials {
        let x: Vec<f64> = (0..arity)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { 10f64.powf(rng.gen_range(-6.0..6.0)) })
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&c| if rng.gen_bool(0.3) { c } else { c + 10f64.powf(rng.gen_range(-6.0..6.0)) })
            .collect();
        let (fx, fy) = (binder.eval(&x), binder.eval(&y));
        report.checks += 1;
        if fx > fy * (1.0 + 1e-12) {
            report.violations.push(format!("trial {t}: f(x) = {fx} > f(y) = {fy} with x <= y"));
        }
        if x.iter().any(|&c| c != 0.0) {
            report.checks += 1;
            if !(fx > 0.0) {
                report.violations.push(format!("trial {t}: f(x) = 0 for nonzero x"));
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct AxiomReport {
    pub checks: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, axiom: &str, detail: String) {
        self.violations.push(AxiomViolation { axiom: axiom.into(), detail });
    }
}

/// Number of terms in the sequences `δ_n = 2^{-n}` used for continuity.
const CONTINUITY_TERMS: i32 = 60;

/// Checks, on the given samples:
///
/// * (i) `|x| = 0` iff `x = 0`;
/// * (ii) `|a x| = |x|` for `a = ±1` and any scalar of modulus one;
/// * (iii) `|x + y| <= |x| + |y| + 3·tol` on every pair of samples;
/// * (iv) for each scalar `λ` and sample `x`, the distances
///   `|λ_n x − λ x|` along `λ_n = λ + 2^{-n}` never grow and end below `1e-6`.
///
/// Tolerances are relative to `max(1, |x| + |y|)`.
pub fn verify_fnorm_axioms(spec: &FNormSpec, samples: &[StepFunction], scalars: &[f64], tol: f64) -> AxiomReport {
    let mut report = AxiomReport::default();
    let norm = |x: &StepFunction| spec.norm(x);

    let mut norms = Vec::with_capacity(samples.len());
    for (i, x) in samples.iter().enumerate() {
        report.checks += 1;
        match norm(x) {
            Ok(v) => {
                if x.is_zero() != (v == 0.0) {
                    report.fail("i", format!("sample {i}: zero = {}, norm = {v}", x.is_zero()));
                }
                norms.push(Some(v));
            }
            Err(e) => {
                report.fail("i", format!("sample {i}: {e}"));
                norms.push(None);
            }
        }
    }

    let unimodular: Vec<f64> = [1.0, -1.0]
        .into_iter()
        .chain(scalars.iter().copied().filter(|a| a.abs() == 1.0))
        .collect();
    for (i, x) in samples.iter().enumerate() {
        let Some(nx) = norms[i] else { continue };
        for &a in &unimodular {
            report.checks += 1;
            match norm(&x.scale(a)) {
                Ok(v) if (v - nx).abs() <= tol * nx.max(1.0) => {}
                Ok(v) => report.fail("ii", format!("sample {i}: |{a} x| = {v} but |x| = {nx}")),
                Err(e) => report.fail("ii", format!("sample {i}: {e}")),
            }
        }
    }

    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (Some(nx), Some(ny)) = (norms[i], norms[j]) else { continue };
            let Ok(sum) = samples[i].add(&samples[j]) else { continue };
            report.checks += 1;
            match norm(&sum) {
                Ok(v) if v <= nx + ny + 3.0 * tol * (nx + ny).max(1.0) => {}
                Ok(v) => report.fail("iii", format!("samples {i},{j}: |x+y| = {v} > {nx} + {ny}")),
                Err(e) => report.fail("iii", format!("samples {i},{j}: {e}")),
            }
        }
    }

    for &lambda in scalars {
        for (i, x) in samples.iter().enumerate() {
            report.checks += 1;
            match continuity_trend(spec, x, lambda) {
                Ok(dists) => {
                    let slack = tol * dists[0].max(1.0);
                    if let Some(n) = dists.windows(2).position(|w| w[1] > w[0] + slack) {
                        report.fail(
                            "iv",
                            format!("lambda {lambda}, sample {i}: distance grows at n = {}", n + 2),
                        );
                    }
                    let last = *dists.last().unwrap();
                    if last >= 1e-6 {
                        report.fail("iv", format!("lambda {lambda}, sample {i}: final distance {last}"));
                    }
                }
                Err(e) => report.fail("iv", format!("lambda {lambda}, sample {i}: {e}")),
            }
        }
    }
    report
}

fn continuity_trend(spec: &FNormSpec, x: &StepFunction, lambda: f64) -> crate::Result<Vec<f64>> {
    (1..=CONTINUITY_TERMS)
        .map(|n| {
            // λ_n x − λ x = (λ_n − λ) x, with the scalar gap as rounded in λ_n
            let gap = (lambda + 2f64.powi(-n)) - lambda;
            spec.norm(&x.scale(gap))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnorm::{NormMode, SearchParams};
    use crate::measure::ValueNorm;
    use crate::modular::Semimodular;

    #[test]
    fn shipped_binders_are_monotone() {
        for b in [Binder::Max, Binder::lp(1.0).unwrap(), Binder::lp(3.5).unwrap()] {
            assert!(verify_binder_monotone(&b, 3, 500, 7).passed());
        }
        let w = Binder::weighted_sum(vec![1.0, 2.0, 0.25]).unwrap();
        assert!(verify_binder_monotone(&w, 3, 500, 7).passed());
        assert!(!verify_binder_monotone(&w, 2, 10, 7).passed());
    }

    #[test]
    fn luxemburg_fnorm_passes_axioms() {
        let spec = FNormSpec::luxemburg(Semimodular::lp(1.0).unwrap());
        let samples = vec![
            StepFunction::scalar(&[(0.0, 0.5, 3.0), (0.5, 1.0, -1.0)]).unwrap(),
            StepFunction::scalar(&[(0.25, 0.75, 2.0)]).unwrap(),
            StepFunction::zero(1, ValueNorm::Euclidean),
        ];
        let report = verify_fnorm_axioms(&spec, &samples, &[0.0, 1.5, -1.0], 1e-8);
        assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn snorm_passes_axioms() {
        let spec = FNormSpec::new(
            vec![Semimodular::lp(2.0).unwrap()],
            Binder::lp(1.0).unwrap(),
            NormMode::SNorm { s: 1.0 },
            SearchParams::default(),
        )
        .unwrap();
        let samples = vec![
            StepFunction::indicator(0.0, 1.0, vec![1.0, -2.0], ValueNorm::Max).unwrap(),
            StepFunction::indicator(0.5, 2.0, vec![0.3, 4.0], ValueNorm::Max).unwrap(),
        ];
        let report = verify_fnorm_axioms(&spec, &samples, &[2.0], 1e-8);
        assert!(report.passed(), "{:?}", report.violations);
    }
}
