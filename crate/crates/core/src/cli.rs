//! Command-line front end.
//!
//! Exit status 0 on success, 2 on usage errors (bad flags, missing files),
//! 1 on domain errors, which are reported on stderr as one JSON line
//! `{"error": kind, "message": ...}`. `MODULARIS_MAX_ITERS` overrides the
//! iteration caps of the scale search and the fixed-point solver.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::approximation::{build_admissible_map, pipeline_sup_error, PipelineOptions};
use crate::error::{Error, Result};
use crate::fixed_point::{
    approximate_fixed_point, retract_fixed_point, FixedPointOptions, FixedPointResult, OperatorSpec,
};
use crate::fnorm::{
    fnorm, luxemburg_fnorm, snorm, verify_binder_monotone, verify_fnorm_axioms, Binder, FNormSpec, NormMode,
    SearchParams,
};
use crate::io::{fmt_float, from_json_str, read_json, to_json};
use crate::measure::{MeasureSpace, Partition, StepFunction};
use crate::modular::{verify_semimodular, Semimodular};
use crate::random::{self, StepParams};
use crate::symmetric::{
    averaging_operator, conditional_contraction, distribution_function, hlp_majorizes, map_convergence_experiment,
    RearrangementProfile, SymmetricNorm,
};

pub const MAX_ITERS_ENV: &str = "MODULARIS_MAX_ITERS";

#[derive(Parser, Debug)]
#[command(name = "modularis", version, about = "F-norms, finite-rank approximation and fixed points on step-function spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an F-norm or s-norm of a step function.
    Norm(NormArgs),
    /// Build and certify the finite-rank map H for a family of functions.
    Approx(ApproxArgs),
    /// Sample x* and x** as CSV.
    Rearrange(RearrangeArgs),
    /// Averaging-operator convergence along a refinement chain.
    Map(MapArgs),
    /// Approximate fixed point of an operator.
    Fixpoint(FixpointArgs),
    /// Run a seeded verification suite and write its JSON report.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct NormFlags {
    /// Semimodular JSON; repeat for several modulars.
    #[arg(long = "modular", required = true)]
    modulars: Vec<PathBuf>,
    /// `max`, `lp:<p>`, `wsum:<w1>,<w2>,...` or a binder JSON literal.
    #[arg(long, default_value = "max")]
    binder: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Fnorm)]
    mode: ModeArg,
    /// Exponent for s-norm mode.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Relative tolerance of the scale search.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Fnorm,
    Snorm,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[command(flatten)]
    norm: NormFlags,
    /// Step function JSON.
    #[arg(long = "fn")]
    function: PathBuf,
    /// Also report the Luxemburg crossing computed by bisection.
    #[arg(long)]
    luxemburg: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[command(flatten)]
    norm: NormFlags,
    /// JSON array of step functions.
    #[arg(long)]
    family: PathBuf,
    /// Measure space JSON; defaults to [0, 1) with cutoff 1.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    max_blocks: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RearrangeArgs {
    #[arg(long = "fn")]
    function: PathBuf,
    /// Uniform samples on (0, μ(supp x)] in addition to the knots.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long = "fn")]
    function: PathBuf,
    /// Symmetric norm JSON.
    #[arg(long = "norm")]
    norm: PathBuf,
    /// JSON array of partitions; exclusive with --dyadic.
    #[arg(long, conflicts_with = "dyadic")]
    chain: Option<PathBuf>,
    /// Dyadic chain of the given depth on [0, L) with L the right end of supp x.
    #[arg(long)]
    dyadic: Option<u32>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FixpointArgs {
    #[command(flatten)]
    norm: NormFlags,
    /// Operator JSON.
    #[arg(long)]
    operator: PathBuf,
    /// Retract operator JSON.
    #[arg(long)]
    retract: Option<PathBuf>,
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    eps: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    FnormAxioms,
    Semimodular,
    Binder,
    Luxemburg,
    Pipeline,
    Symmetric,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

struct Failure {
    code: i32,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { code: 1, error }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 2, error: Error::InvalidParameter(message) }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Output goes to `stdout` unless `--output` names a file.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(Failure { code, error }) => {
            let line = json!({"error": error.kind(), "message": error.to_string()});
            let _ = writeln!(stderr, "{line}");
            code
        }
    }
}

pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

fn max_iters_override() -> CliResult<Option<usize>> {
    match std::env::var(MAX_ITERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| usage(format!("{MAX_ITERS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    if !path.is_file() {
        return Err(usage(format!("no such file: {}", path.display())));
    }
    Ok(read_json(path)?)
}

fn emit(text: &str, output: &Option<PathBuf>, stdout: &mut dyn Write) -> CliResult<()> {
    let written = match output {
        Some(p) => std::fs::write(p, text),
        None => stdout.write_all(text.as_bytes()),
    };
    written.map_err(|e| usage(format!("cannot write output: {e}")))
}

fn parse_binder(text: &str) -> CliResult<Binder> {
    let text = text.trim();
    let parsed = if text == "max" {
        Ok(Binder::Max)
    } else if text.starts_with('{') {
        from_json_str::<Binder>(text).and_then(|b| b.validate().map(|_| b))
    } else if let Some(p) = text.strip_prefix("lp:") {
        let p: f64 = p.parse().map_err(|_| usage(format!("bad lp exponent {p:?}")))?;
        Binder::lp(p)
    } else if let Some(ws) = text.strip_prefix("wsum:") {
        let weights = ws
            .split(',')
            .map(|w| w.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| usage(format!("bad weights {ws:?}")))?;
        Binder::weighted_sum(weights)
    } else {
        return Err(usage(format!("unknown binder {text:?}; use max, lp:<p>, wsum:<w,..> or JSON")));
    };
    parsed.map_err(|e| usage(e.to_string()))
}

fn build_spec(flags: &NormFlags) -> CliResult<FNormSpec> {
    let modulars = flags.modulars.iter().map(|p| load::<Semimodular>(p)).collect::<CliResult<Vec<_>>>()?;
    let binder = parse_binder(&flags.binder)?;
    let mode = match flags.mode {
        ModeArg::Fnorm => NormMode::FNorm,
        ModeArg::Snorm => NormMode::SNorm { s: flags.s },
    };
    let mut search = SearchParams::default().with_tol(flags.tol);
    if let Some(n) = max_iters_override()? {
        search.max_iter = n;
    }
    Ok(FNormSpec::new(modulars, binder, mode, search)?)
}

fn load_space(path: &Option<PathBuf>) -> CliResult<MeasureSpace> {
    match path {
        Some(p) => load(p),
        None => Ok(MeasureSpace::unit()),
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Norm(a) => cmd_norm(a, stdout),
        Command::Approx(a) => cmd_approx(a, stdout),
        Command::Rearrange(a) => cmd_rearrange(a, stdout),
        Command::Map(a) => cmd_map(a, stdout),
        Command::Fixpoint(a) => cmd_fixpoint(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
    }
}

fn cmd_norm(a: NormArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let spec = build_spec(&a.norm)?;
    let x: StepFunction = load(&a.function)?;
    let v = match spec.mode() {
        NormMode::FNorm => fnorm(&spec, &x)?,
        NormMode::SNorm { .. } => snorm(&spec, &x)?,
    };
    let mut out = String::from("value,k");
    if a.luxemburg {
        out += ",luxemburg";
    }
    out += &format!("\n{},{}", fmt_float(v.value), fmt_float(v.k));
    if a.luxemburg {
        let [rho] = spec.modulars() else {
            return Err(usage("--luxemburg needs exactly one modular".into()));
        };
        out += &format!(",{}", fmt_float(luxemburg_fnorm(rho, &x, spec.search().tol)?));
    }
    out.push('\n');
    emit(&out, &a.output, stdout)
}

fn cmd_approx(a: ApproxArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let spec = build_spec(&a.norm)?;
    let family: Vec<StepFunction> = load(&a.family)?;
    let space = load_space(&a.space)?;
    let options = PipelineOptions { max_blocks: a.max_blocks, radius: a.radius, max_depth: None };
    let h = build_admissible_map(&family, a.eps, &spec, &space, &options)?;
    emit(&h.to_csv(), &a.output, stdout)
}

fn cmd_rearrange(a: RearrangeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let x: StepFunction = load(&a.function)?;
    let prof = RearrangementProfile::of(&x);
    let support = prof.support();
    let mut ts: Vec<f64> = prof.knots().to_vec();
    if support > 0.0 {
        ts.extend((1..=a.samples).map(|i| support * i as f64 / a.samples as f64));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut out = String::from("t,xstar,xstarstar\n");
    for t in ts {
        out += &format!("{},{},{}\n", fmt_float(t), fmt_float(prof.xstar(t)), fmt_float(prof.xstarstar(t)));
    }
    emit(&out, &a.output, stdout)
}

fn cmd_map(a: MapArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let x: StepFunction = load(&a.function)?;
    let e: SymmetricNorm = load(&a.norm)?;
    e.validate()?;
    let chain: Vec<Partition> = match (&a.chain, a.dyadic) {
        (Some(p), _) => load(p)?,
        (None, Some(depth)) => {
            let end = x.blocks().last().map_or(1.0, |b| b.end());
            (0..=depth)
                .map(|k| Partition::uniform(0.0, end, 1usize << k))
                .collect::<Result<Vec<_>>>()?
        }
        (None, None) => return Err(usage("map needs --chain or --dyadic".into())),
    };
    let rows = map_convergence_experiment(&e, &x, &chain)?;
    let mut out = String::from("level,error\n");
    for (k, err) in rows {
        out += &format!("{k},{}\n", fmt_float(err));
    }
    emit(&out, &a.output, stdout)
}

fn cmd_fixpoint(a: FixpointArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let spec = build_spec(&a.norm)?;
    let space = load_space(&a.space)?;
    let op = load::<OperatorSpec>(&a.operator)?.instantiate()?;
    let mut options = FixedPointOptions::default();
    if let Some(n) = max_iters_override()? {
        options.max_iter = n;
    }
    let result: FixedPointResult = match &a.retract {
        Some(p) => {
            let retract = load::<OperatorSpec>(p)?.instantiate()?;
            retract_fixed_point(op.as_ref(), retract.as_ref(), a.eps, &spec, &space, &options)?
        }
        None => approximate_fixed_point(op.as_ref(), a.eps, &spec, &space, &options)?,
    };
    emit(&(to_json(&result) + "\n"), &a.output, stdout)
}

#[derive(Serialize)]
struct SuiteReport {
    suite: Suite,
    seed: u64,
    trials: usize,
    checks: usize,
    violations: Vec<String>,
    passed: bool,
}

fn cmd_verify(a: VerifyArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (checks, violations) = run_suite(a.suite, a.seed, a.trials)?;
    let report = SuiteReport {
        suite: a.suite,
        seed: a.seed,
        trials: a.trials,
        checks,
        passed: violations.is_empty(),
        violations,
    };
    emit(&(to_json(&report) + "\n"), &a.output, stdout)?;
    if report.passed {
        Ok(())
    } else {
        Err(Error::AxiomViolation(format!("{} violation(s) in suite", report.violations.len())).into())
    }
}

fn run_suite(suite: Suite, seed: u64, trials: usize) -> CliResult<(usize, Vec<String>)> {
    let mut rng = random::rng(seed);
    let mut checks = 0;
    let mut violations = Vec::new();
    match suite {
        Suite::FnormAxioms => {
            for t in 0..trials {
                let spec = FNormSpec::luxemburg(random::orlicz(&mut rng));
                let samples: Vec<StepFunction> =
                    (0..3).map(|_| random::step_function(&mut rng, &StepParams::default())).collect();
                let r = verify_fnorm_axioms(&spec, &samples, &[0.0, 1.0, -2.5], 1e-9);
                checks += r.checks;
                violations.extend(r.violations.into_iter().map(|v| format!("trial {t} ({}): {}", v.axiom, v.detail)));
            }
        }
        Suite::Semimodular => {
            for t in 0..trials {
                let rho = random::orlicz(&mut rng);
                let samples: Vec<StepFunction> =
                    (0..4).map(|_| random::step_function(&mut rng, &StepParams::default())).collect();
                let r = verify_semimodular(&rho, &samples, 20, seed.wrapping_add(t as u64));
                checks += r.checks;
                violations.extend(r.violations.into_iter().map(|v| format!("trial {t} ({}): {}", v.axiom, v.detail)));
            }
        }
        Suite::Binder => {
            let binders = [Binder::Max, Binder::lp(1.0)?, Binder::lp(2.0)?, Binder::weighted_sum(vec![1.0, 0.5, 2.0])?];
            for (i, b) in binders.iter().enumerate() {
                let r = verify_binder_monotone(b, 3, trials * 10, seed.wrapping_add(i as u64));
                checks += r.checks;
                violations.extend(r.violations.into_iter().map(|v| format!("binder {i}: {v}")));
            }
        }
        Suite::Luxemburg => {
            for t in 0..trials {
                let rho = random::orlicz(&mut rng);
                let x = random::nonzero_scalar(&mut rng, 5, 1.0);
                let via_search = fnorm(&FNormSpec::luxemburg(rho.clone()), &x)?.value;
                let via_bisection = luxemburg_fnorm(&rho, &x, 1e-9)?;
                checks += 1;
                if (via_search - via_bisection).abs() > 2e-9 * via_bisection.max(1.0) {
                    violations.push(format!("trial {t}: search {via_search} vs bisection {via_bisection}"));
                }
            }
        }
        Suite::Pipeline => {
            let spec = FNormSpec::luxemburg(Semimodular::lp(1.0)?);
            let space = MeasureSpace::new(2.0, vec![1.0, 2.0])?;
            let params = StepParams { domain: 2.0, ..Default::default() };
            for t in 0..trials {
                let n = 1 + t % 8;
                let z: Vec<StepFunction> = (0..n).map(|_| random::step_function(&mut rng, &params)).collect();
                for eps in [0.1, 0.01] {
                    let h = build_admissible_map(&z, eps, &spec, &space, &Default::default())?;
                    let again = pipeline_sup_error(&h, &z, &spec)?;
                    checks += 1;
                    if !(h.report.total < eps && (again - h.report.total).abs() <= 1e-12) {
                        violations.push(format!("trial {t}, eps {eps}: total {} recheck {again}", h.report.total));
                    }
                }
            }
        }
        Suite::Symmetric => {
            for t in 0..trials {
                let x = random::step_function(&mut rng, &StepParams::default());
                let star = crate::symmetric::decreasing_rearrangement(&x);
                let mut levels: Vec<f64> = (0..x.len()).map(|i| x.norm_at(i)).collect();
                levels.push(0.0);
                for lam in levels {
                    checks += 1;
                    if distribution_function(&x, lam)? != distribution_function(&star, lam)? {
                        violations.push(format!("trial {t}: distribution differs at {lam}"));
                    }
                }
                let b = random::partition(&mut rng, 0.0, 1.0, 5);
                let a = Partition::new(b.blocks().iter().copied().step_by(2))?;
                checks += 1;
                if !hlp_majorizes(&averaging_operator(&x, &a), &conditional_contraction(&x, &b)) {
                    violations.push(format!("trial {t}: T_A x does not majorize-compare with S_B x"));
                }
            }
        }
    }
    Ok((checks, violations))
}
