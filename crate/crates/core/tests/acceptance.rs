//! Acceptance criteria, one summary line per criterion on stderr.
//!
//! Run with `cargo test --test acceptance`; the lines are written straight to
//! the process stderr so they show without `--nocapture`.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use modularis::approximation::{
    build_admissible_map, domain_truncate, partition_average, radial_project, PipelineOptions,
};
use modularis::fixed_point::{approximate_fixed_point, residual, FixedPointOptions, Operator, OperatorSpec};
use modularis::fnorm::{luxemburg_fnorm, Binder, FNormSpec, NormMode, SearchParams};
use modularis::measure::{MeasureSpace, Partition, StepFunction, ValueNorm};
use modularis::modular::{PhiFunction, Semimodular};
use modularis::random::{self, StepParams};
use modularis::symmetric::{
    averaging_operator, conditional_contraction, decreasing_rearrangement, distribution_function,
    hlp_majorizes, map_convergence_experiment, RearrangementProfile, SymmetricKind, SymmetricNorm,
};
use rand::seq::SliceRandom;
use rand::Rng;

const TOL: f64 = 1e-9;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn line(id: u32, name: &str, o: &Outcome) -> String {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    format!("[{tag}] criterion {id} ({name}): {}\n", o.detail)
}

fn scalar_params(domain: f64) -> StepParams {
    StepParams { domain, ..Default::default() }
}

fn random_params(rng: &mut impl Rng, domain: f64) -> StepParams {
    let dim = rng.gen_range(1..=2);
    let value_norm = *[ValueNorm::Euclidean, ValueNorm::Max, ValueNorm::Sum].choose(rng).unwrap();
    StepParams { dim, value_norm, domain, ..Default::default() }
}

fn sup_gap(a: &StepFunction, b: &StepFunction) -> f64 {
    a.sub(b).expect("same shape").sup_norm()
}

fn fnorm_axioms() -> Outcome {
    let mut checks = 0;
    let mut failures = Vec::new();
    let (mut worst_sign, mut worst_triangle) = (0f64, f64::NEG_INFINITY);
    for i in 0..200u64 {
        let mut rng = random::rng(1_000 + i);
        let rho = random::orlicz(&mut rng);
        let binder = [Binder::Max, Binder::lp(1.0).unwrap(), Binder::lp(2.0).unwrap()][i as usize % 3].clone();
        let spec = FNormSpec::new(vec![rho], binder, NormMode::FNorm, SearchParams::default()).unwrap();
        let params = random_params(&mut rng, 1.0);
        let mut samples: Vec<StepFunction> = (0..3).map(|_| random::step_function(&mut rng, &params)).collect();
        samples.push(StepFunction::zero(params.dim, params.value_norm));
        let scalars: Vec<f64> = if i < 20 { vec![rng.gen_range(-3.0..3.0)] } else { Vec::new() };

        let report = modularis::fnorm::verify_fnorm_axioms(&spec, &samples, &scalars, TOL);
        checks += report.checks;
        failures.extend(report.violations.iter().map(|v| format!("instance {i} ({}): {}", v.axiom, v.detail)));

        let norms: Vec<f64> = samples.iter().map(|x| spec.norm(x).unwrap()).collect();
        for (x, nx) in samples.iter().zip(&norms) {
            worst_sign = worst_sign.max((spec.norm(&x.neg()).unwrap() - nx).abs());
        }
        for a in 0..samples.len() {
            for b in a + 1..samples.len() {
                let sum = spec.norm(&samples[a].add(&samples[b]).unwrap()).unwrap();
                worst_triangle = worst_triangle.max(sum - norms[a] - norms[b]);
            }
        }
    }
    let slack = 3.0 * TOL;
    if worst_sign > slack {
        failures.push(format!("| -x | differs from | x | by {worst_sign:e}"));
    }
    if worst_triangle > slack {
        failures.push(format!("triangle excess {worst_triangle:e}"));
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "200 instances, {checks} checks, 20 continuity sequences, max sign gap {worst_sign:.2e}, \
             max triangle excess {worst_triangle:.2e}{}",
            failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    )
}

fn luxemburg_equivalence() -> Outcome {
    let mut worst = 0f64;
    for i in 0..50u64 {
        let mut rng = random::rng(2_000 + i);
        let rho = random::orlicz(&mut rng);
        let params = random_params(&mut rng, 1.0);
        let x = random::step_function(&mut rng, &params);
        let spec = FNormSpec::new(vec![rho.clone()], Binder::Max, NormMode::FNorm, SearchParams::default()).unwrap();
        let searched = spec.norm(&x).unwrap();
        let crossed = luxemburg_fnorm(&rho, &x, 1e-12).unwrap();
        worst = worst.max((searched - crossed).abs());
    }
    // ∫|cχ/u| = c/u <= u  iff  u >= √c
    let l1 = Semimodular::lp(1.0).unwrap();
    let spec = FNormSpec::new(vec![l1], Binder::Max, NormMode::FNorm, SearchParams::default()).unwrap();
    let mut worst_closed = 0f64;
    for c in [1.0f64, 4.0, 9.0] {
        let x = StepFunction::scalar(&[(0.0, 1.0, c)]).unwrap();
        worst_closed = worst_closed.max((spec.norm(&x).unwrap() - c.sqrt()).abs());
    }
    Outcome::new(
        worst <= 2e-9 && worst_closed <= 1e-9,
        format!("50 instances, max gap {worst:.2e} (<= 2e-9); sqrt(c) cases max gap {worst_closed:.2e} (<= 1e-9)"),
    )
}

fn operator_inequalities() -> Outcome {
    let space = MeasureSpace::new(4.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let (mut worst_f, mut worst_t) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..100u64 {
        let mut rng = random::rng(3_000 + i);
        let spec = FNormSpec::luxemburg(random::orlicz(&mut rng));
        let params = random_params(&mut rng, 4.0);
        let f = random::step_function(&mut rng, &params);
        let g = random::step_function(&mut rng, &params);
        let d = spec.norm(&f.sub(&g).unwrap()).unwrap();
        let n = rng.gen_range(1..=4);
        let fn_gap = spec
            .norm(&domain_truncate(&f, &space, n).unwrap().sub(&domain_truncate(&g, &space, n).unwrap()).unwrap())
            .unwrap();
        let a = rng.gen_range(0.2..3.0);
        let ta_gap =
            spec.norm(&radial_project(&f, a).unwrap().sub(&radial_project(&g, a).unwrap()).unwrap()).unwrap();
        worst_f = worst_f.max(fn_gap - d);
        worst_t = worst_t.max(ta_gap - 2.0 * d);
    }
    Outcome::new(
        worst_f <= 1e-9 && worst_t <= 1e-9,
        format!("100 pairs, max excess F_n {worst_f:.2e}, T_a {worst_t:.2e} (<= 1e-9)"),
    )
}

fn averaging_exactness() -> Outcome {
    let mut mismatches = 0;
    for i in 0..50u64 {
        let mut rng = random::rng(4_000 + i);
        let params = random_params(&mut rng, 2.0);
        let s = random::step_function(&mut rng, &params);
        let g = random::refinement(&mut rng, s.partition(), 4);
        let averaged = partition_average(&s, &g).unwrap();
        let (lhs, rhs) = (averaged.canonical(), s.canonical());
        if lhs.blocks() != rhs.blocks() || lhs.raw_values() != rhs.raw_values() {
            mismatches += 1;
        }
    }
    Outcome::new(mismatches == 0, format!("50 instances, {mismatches} with any bit difference"))
}

fn admissibility_pipeline() -> Outcome {
    let space = MeasureSpace::new(2.0, vec![0.5, 1.0, 1.5, 2.0]).unwrap();
    let mut failures = Vec::new();
    let mut worst_recheck = 0f64;
    let mut worst_ratio = 0f64;
    for i in 0..20u64 {
        let mut rng = random::rng(5_000 + i);
        let spec = if i % 2 == 0 {
            FNormSpec::luxemburg(Semimodular::lp(1.0).unwrap())
        } else {
            FNormSpec::luxemburg(random::orlicz(&mut rng))
        };
        let params = random_params(&mut rng, 2.0);
        let size = rng.gen_range(1..=8);
        let family: Vec<StepFunction> = (0..size).map(|_| random::step_function(&mut rng, &params)).collect();
        for eps in [0.1, 0.01] {
            match build_admissible_map(&family, eps, &spec, &space, &PipelineOptions::default()) {
                Ok(h) => {
                    let recheck = family
                        .iter()
                        .map(|f| spec.norm(&h.apply(f).unwrap().sub(f).unwrap()).unwrap())
                        .fold(0.0, f64::max);
                    worst_recheck = worst_recheck.max((recheck - h.report.total).abs());
                    worst_ratio = worst_ratio.max(h.report.total / eps);
                    if h.report.total >= eps || (recheck - h.report.total).abs() > 1e-12 {
                        failures.push(format!("family {i}, eps {eps}"));
                    }
                }
                Err(e) => failures.push(format!("family {i}, eps {eps}: {e}")),
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "40 certifications, max error/eps {worst_ratio:.3}, max recheck gap {worst_recheck:.2e}{}",
            failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    )
}

/// Every level of `x` and of `x*`, zero, midpoints between consecutive levels
/// and one point above the top.
fn value_grid(a: &StepFunction, b: &StepFunction) -> Vec<f64> {
    let mut levels: Vec<f64> = (0..a.len()).map(|i| a.norm_at(i)).chain((0..b.len()).map(|i| b.norm_at(i))).collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut grid = levels.clone();
    grid.extend(levels.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    grid.push(levels.last().unwrap() + 1.0);
    grid
}

fn symmetric_norms() -> Vec<(&'static str, SymmetricNorm)> {
    vec![
        ("L1", SymmetricNorm::lp(1.0).unwrap()),
        ("L2", SymmetricNorm::lp(2.0).unwrap()),
        ("Linf", SymmetricNorm::lp(f64::INFINITY).unwrap()),
        (
            "Orlicz(u^2)",
            SymmetricNorm::new(SymmetricKind::OrliczLuxemburg { phi: PhiFunction::Power { p: 2.0 } }, true).unwrap(),
        ),
        ("Lorentz(2)", SymmetricNorm::lorentz(2.0).unwrap()),
    ]
}

fn symmetric_suite() -> Outcome {
    let mut failures: Vec<String> = Vec::new();

    let mut grid_points = 0;
    for i in 0..100u64 {
        let mut rng = random::rng(6_000 + i);
        let domain = rng.gen_range(0.5..3.0);
        let params = random_params(&mut rng, domain);
        let x = random::step_function(&mut rng, &params);
        let xs = decreasing_rearrangement(&x);
        for lam in value_grid(&x, &xs) {
            grid_points += 1;
            if distribution_function(&x, lam).unwrap() != distribution_function(&xs, lam).unwrap() {
                failures.push(format!("equimeasurability, instance {i}, level {lam}"));
            }
        }
        let profile = RearrangementProfile::of(&x);
        for (k, &t) in profile.knots().iter().enumerate() {
            let star_star = profile.xstarstar(t);
            let left = profile.levels()[k];
            if profile.xstar(t) > star_star || left > star_star * (1.0 + 1e-12) {
                failures.push(format!("x* <= x**, instance {i}, knot {t}"));
            }
        }
    }

    for i in 0..100u64 {
        let mut rng = random::rng(6_500 + i);
        let n = rng.gen_range(1..=6);
        let b = random::partition(&mut rng, 0.0, 1.0, n);
        let mut picked: Vec<_> = b.blocks().iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        if picked.is_empty() {
            picked.push(b.blocks()[0]);
        }
        let a = Partition::new(picked).unwrap();
        let params = random_params(&mut rng, 1.0);
        let x = random::step_function(&mut rng, &params);
        if !hlp_majorizes(&averaging_operator(&x, &a), &conditional_contraction(&x, &b)) {
            failures.push(format!("majorization, instance {i}"));
        }
    }

    let norms = symmetric_norms();
    for i in 0..50u64 {
        let mut rng = random::rng(7_000 + i);
        let x = random::step_function(&mut rng, &scalar_params(1.0));
        let (lo, hi, n) = (rng.gen_range(0.0..0.3), rng.gen_range(0.6..1.2), rng.gen_range(1..=5));
        let a = random::partition(&mut rng, lo, hi, n);
        let tx = averaging_operator(&x, &a);
        for (name, e) in &norms {
            let (lhs, rhs) = (e.norm(&tx).unwrap(), e.norm(&x).unwrap());
            if lhs > rhs * (1.0 + 1e-12) {
                failures.push(format!("contraction in {name}, instance {i}: {lhs} > {rhs}"));
            }
        }
    }

    let (ramp_ok, ramp_detail) = ramp_experiment();
    if !ramp_ok {
        failures.push(ramp_detail.clone());
    }

    Outcome::new(
        failures.is_empty(),
        format!(
            "{grid_points} grid levels equimeasurable, knots checked, 100 majorizations, \
             contraction in L1/L2/Linf/Orlicz(u^2)/Lorentz(2); {ramp_detail}{}",
            failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    )
}

/// Ramp `x = (i + 1/2)/64` on the 64 uniform blocks of `[0, 1)`, averaged over
/// the dyadic partitions with `2^k` blocks.
///
/// Each level-`k` block holds `m = 64/2^k` cells whose values step by
/// `δ = 1/64`, so the squared deviation from the block mean averages to
/// `δ²(m² − 1)/12` and `‖T x − x‖₂ = δ·sqrt((m² − 1)/12)`. For large `m` this
/// is the continuous law `2^{-k}/√12`.
fn ramp_experiment() -> (bool, String) {
    let delta = 1.0 / 64.0;
    let pieces: Vec<(f64, f64, f64)> =
        (0..64).map(|i| (i as f64 * delta, (i + 1) as f64 * delta, (i as f64 + 0.5) * delta)).collect();
    let x = StepFunction::scalar(&pieces).unwrap();
    let chain: Vec<Partition> = (0..=8).map(|k| Partition::uniform(0.0, 1.0, 1 << k).unwrap()).collect();
    let errors = map_convergence_experiment(&SymmetricNorm::lp(2.0).unwrap(), &x, &chain).unwrap();

    let mut ok = true;
    let mut worst_discrete = 0f64;
    let mut law_ratios = Vec::new();
    for &(k, err) in &errors {
        if k >= 6 {
            ok &= err == 0.0;
            continue;
        }
        let m = (64 >> k) as f64;
        let discrete = delta * ((m * m - 1.0) / 12.0).sqrt();
        let law = 2f64.powi(-(k as i32)) / 12f64.sqrt();
        worst_discrete = worst_discrete.max((err / discrete - 1.0).abs());
        law_ratios.push((k, err / law));
    }
    ok &= worst_discrete <= 0.05;
    let within_law: Vec<usize> = law_ratios.iter().filter(|(_, r)| (r - 1.0).abs() <= 0.05).map(|p| p.0).collect();
    let outside: Vec<String> =
        law_ratios.iter().filter(|(_, r)| (r - 1.0).abs() > 0.05).map(|(k, r)| format!("k={k} ratio {r:.3}")).collect();
    let detail = format!(
        "ramp: discrete closed form matched to {worst_discrete:.1e}, exact 0 for k >= 6, \
         2^-k law within 5% for k in {within_law:?}{}",
        if outside.is_empty() { String::new() } else { format!(", outside for {}", outside.join(", ")) }
    );
    (ok, detail)
}

/// Per-block root of `v = c + λ sin v` by plain iteration.
fn sin_damped_oracle(c: f64, lambda: f64) -> f64 {
    let mut v = c;
    for _ in 0..10_000 {
        let next = c + lambda * v.sin();
        if next == v {
            break;
        }
        v = next;
    }
    v
}

fn fixed_points() -> Outcome {
    let mut failures = Vec::new();
    let space = MeasureSpace::unit();
    let opts = FixedPointOptions::default();
    let spec = FNormSpec::luxemburg(Semimodular::lp(1.0).unwrap());

    let c = StepFunction::scalar(&[(0.0, 1.0, 1.0)]).unwrap();
    let affine =
        OperatorSpec::AffineAverage { c, lambda: 0.5, partition: Partition::trivial(0.0, 1.0).unwrap() };
    let target = StepFunction::scalar(&[(0.0, 1.0, 2.0)]).unwrap();
    let mut worst_recheck = 0f64;
    match approximate_fixed_point(&affine, 1e-9, &spec, &space, &opts) {
        Ok(r) => {
            let recheck = residual(&affine, &r.point, &spec).unwrap();
            worst_recheck = worst_recheck.max((recheck - r.residual).abs());
            if r.residual >= 1e-9 || sup_gap(&r.point, &target) > 1e-12 {
                failures.push(format!("affine: residual {}", r.residual));
            }
        }
        Err(e) => failures.push(format!("affine: {e}")),
    }

    let mut worst_residual = 0f64;
    for i in 0..10u64 {
        let mut rng = random::rng(8_000 + i);
        let blocks = rng.gen_range(1..=3);
        let k = Partition::uniform(0.0, 1.0, blocks).unwrap();
        let values: Vec<f64> = (0..blocks).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c = StepFunction::on_partition(k.clone(), 1, ValueNorm::Euclidean, values.clone()).unwrap();
        let lambda = rng.gen_range(0.1..=0.9);
        let spec = if i % 2 == 0 {
            FNormSpec::luxemburg(Semimodular::lp(1.0).unwrap())
        } else {
            FNormSpec::luxemburg(Semimodular::lp(2.0).unwrap())
        };
        let op = OperatorSpec::SinDamped { c, lambda, partition: k.clone() };
        let oracle = StepFunction::on_partition(
            k,
            1,
            ValueNorm::Euclidean,
            values.iter().map(|&v| sin_damped_oracle(v, lambda)).collect(),
        )
        .unwrap();
        match approximate_fixed_point(&op, 1e-6, &spec, &space, &opts) {
            Ok(r) => {
                let recheck = spec.norm(&op.apply(&r.point).unwrap().sub(&r.point).unwrap()).unwrap();
                worst_recheck = worst_recheck.max((recheck - r.residual).abs());
                worst_residual = worst_residual.max(r.residual);
                if r.residual >= 1e-6 || (recheck - r.residual).abs() > 1e-12 {
                    failures.push(format!("operator {i}: residual {}", r.residual));
                }
                if sup_gap(&r.point, &oracle) > 1e-6 {
                    failures.push(format!("operator {i}: far from the per-block root"));
                }
            }
            Err(e) => failures.push(format!("operator {i}: {e}")),
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "affine case reproduces 2 on [0,1); 10 contractions, max residual {worst_residual:.2e} (< 1e-6), \
             max recheck gap {worst_recheck:.2e}{}",
            failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    )
}

const INPUTS: &[(&str, &str)] = &[
    ("fn.json", r#"{"blocks":[{"start":0,"end":0.5,"value":3},{"start":0.5,"end":1,"value":-1}]}"#),
    (
        "vec.json",
        r#"{"dim":2,"value_norm":"max","blocks":[{"start":0,"end":0.25,"value":[1,-2]},{"start":0.5,"end":1,"value":[0.5,0.5]}]}"#,
    ),
    ("orlicz.json", r#"{"kind":"orlicz","phi":{"kind":"power","p":2},"convexity":"convex"}"#),
    ("l1.json", r#"{"kind":"lp","p":1}"#),
    (
        "family.json",
        r#"[{"blocks":[{"start":0,"end":1,"value":1}]},{"blocks":[{"start":0.3,"end":1.7,"value":-2}]},{"blocks":[{"start":1.2,"end":2,"value":0.5}]}]"#,
    ),
    ("space.json", r#"{"alpha":2,"exhaustion":[1,2]}"#),
    ("l2.json", r#"{"kind":"lp","p":2,"order_continuous":true}"#),
    (
        "operator.json",
        r#"{"kind":"sin-damped","c":{"blocks":[{"start":0,"end":0.5,"value":1},{"start":0.5,"end":1,"value":-0.5}]},"lambda":0.6,"partition":[{"start":0,"end":0.5},{"start":0.5,"end":1}]}"#,
    ),
];

fn cli_suite() -> Vec<Vec<&'static str>> {
    let mut runs = vec![
        vec!["norm", "--modular", "orlicz.json", "--fn", "fn.json", "--luxemburg"],
        vec!["norm", "--modular", "l1.json", "--binder", "lp:2", "--fn", "vec.json"],
        vec!["norm", "--modular", "l1.json", "--modular", "orlicz.json", "--binder", "wsum:1,2", "--fn", "fn.json"],
        vec!["approx", "--modular", "l1.json", "--family", "family.json", "--space", "space.json", "--eps", "0.01"],
        vec!["approx", "--modular", "orlicz.json", "--family", "family.json", "--space", "space.json", "--eps", "0.1", "--max-blocks", "64"],
        vec!["rearrange", "--fn", "vec.json"],
        vec!["map", "--fn", "fn.json", "--norm", "l2.json", "--dyadic", "4"],
        vec!["fixpoint", "--modular", "l1.json", "--operator", "operator.json", "--eps", "1e-6"],
        vec!["norm", "--modular", "missing.json", "--fn", "fn.json"],
        vec!["rearrange", "--fn", "fn.json", "-o", "written.csv"],
    ];
    for suite in ["fnorm-axioms", "semimodular", "binder", "luxemburg", "pipeline", "symmetric"] {
        runs.push(vec!["verify", "--suite", suite, "--seed", "11", "--trials", "10"]);
    }
    runs
}

/// Exit code, stdout and stderr of every run, then the file written by `-o`.
fn run_cli_suite(dir: &Path) -> Vec<u8> {
    for (name, body) in INPUTS {
        std::fs::write(dir.join(name), body).unwrap();
    }
    let mut transcript = Vec::new();
    for args in cli_suite() {
        let out = Command::new(env!("CARGO_BIN_EXE_modularis"))
            .args(&args)
            .current_dir(dir)
            .env_remove("MODULARIS_MAX_ITERS")
            .output()
            .unwrap();
        writeln!(transcript, "$ {} => {:?}", args.join(" "), out.status.code()).unwrap();
        transcript.extend(out.stdout);
        transcript.extend(out.stderr);
    }
    transcript.extend(std::fs::read(dir.join("written.csv")).unwrap());
    transcript
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_cli_suite(a.path());
    let second = run_cli_suite(b.path());
    let runs = cli_suite().len();
    Outcome::new(
        first == second,
        format!("{runs} invocations twice in fresh directories, {} bytes, identical: {}", first.len(), first == second),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        (1, "F-norm axioms", fnorm_axioms),
        (2, "Luxemburg equivalence", luxemburg_equivalence),
        (3, "operator inequalities", operator_inequalities),
        (4, "averaging exactness", averaging_exactness),
        (5, "admissibility pipeline", admissibility_pipeline),
        (6, "symmetric spaces", symmetric_suite),
        (7, "fixed points", fixed_points),
        (8, "determinism", determinism),
    ];
    let mut failed = Vec::new();
    let mut stderr = std::io::stderr();
    for (id, name, check) in criteria {
        let outcome = check();
        stderr.write_all(line(id, name, &outcome).as_bytes()).unwrap();
        if !outcome.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
