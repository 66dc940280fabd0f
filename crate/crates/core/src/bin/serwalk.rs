//! `serwalk`: generate walks, run rearrangements, verify limit sets, plot.
//!
//! Exit codes: 0 pass, 1 property or algorithm failure, 2 usage or input
//! error.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Map, Value};

use serwalk::analysis::{
    cauchy_diagnostic, estimate_with, singleton_convergence_check, verify_dichotomy, EstimateParams,
    DEFAULT_MIN_HITS, DEFAULT_WINDOW_FRACTION,
};
use serwalk::generators::{build_chainable_walk, build_unbounded_components_walk, cantor_abscissae, gen_halflines, gen_two_lines};
use serwalk::io::{
    estimate_report, read_sample_csv, read_trace_csv, read_trace_jsonl, read_vectors_json, to_json_pretty,
    write_trace_csv, write_trace_jsonl, write_vectors_json, Manifest, TraceVector,
};
use serwalk::plot::{walk_svg, PlotOptions};
use serwalk::rearrange::{find_balanced_permutation, rearrange_to_limit_set, BalanceStrategy, RearrangeParams};
use serwalk::seqspace::{
    check_family_exhaustive, gen_c0_singleton_divergent, gen_c0_two_point, gen_no_rp_series, gen_vector_family,
    no_rp_block,
};
use serwalk::series::full_sum_range_family;
use serwalk::{Error, NormKind, Point, PointSample, SparseVec, Walk};

#[derive(Parser, Debug)]
#[command(name = "serwalk", version, about = "Walks of rearranged series and their limit sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a walk (or a vector block) and write its trace.
    Generate(GenerateArgs),
    /// Rearrange the full-sum-range family so its walk accumulates on a target sample.
    Rearrange(RearrangeArgs),
    /// Run a verifier; exits 1 when the property fails.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Render a planar trace as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    TwoLines,
    Halflines,
    Chainable,
    Unbounded,
    C0TwoPoint,
    C0Singleton,
    NoRp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug)]
struct Common {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(value_enum)]
    generator: Generator,
    #[arg(long, default_value_t = 3)]
    phases: usize,
    /// Comma-separated abscissae for `halflines` (default 0, 1, 2, ...).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    abscissae: Option<Vec<f64>>,
    /// Use Cantor-set abscissae for `halflines`.
    #[arg(long)]
    cantor: bool,
    /// Dense sample (CSV) for `chainable`; the unit circle when omitted.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Sample pitch for the built-in circle and half-line components.
    #[arg(long, default_value_t = 0.02)]
    pitch: f64,
    /// For `no-rp`: write the positive copies of this block instead of a walk.
    #[arg(long)]
    block: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct RearrangeArgs {
    /// Target sample (CSV, one point per row).
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 3)]
    stages: usize,
    /// Number of series terms to generate.
    #[arg(long, default_value_t = 1_000_000)]
    terms: usize,
    /// Term decay exponent `p` of the full-sum-range family, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    exponent: f64,
    /// Stress instances per ε when certifying RP constants (0 skips).
    #[arg(long, default_value_t = 100)]
    rp_budget: usize,
    /// Chain gap through the target; just above its bottleneck gap by default.
    #[arg(long)]
    gap: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Trace file (CSV or JSON lines).
    #[arg(long)]
    input: PathBuf,
    /// Norm override: euclidean or sup.
    #[arg(long)]
    norm: Option<NormKind>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_FRACTION)]
    window: f64,
    #[arg(long, default_value_t = 0.1)]
    resolution: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_HITS)]
    min_hits: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Limit-set estimate; fails when it is empty.
    Estimate(InputArgs),
    /// Compact-connected or all-components-escape; fails on violation.
    Dichotomy {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.5)]
        gap: f64,
        /// Escape radius; the estimate's largest norm when omitted.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Passes when the walk converges to its one-point estimate.
    Singleton {
        #[command(flatten)]
        input: InputArgs,
        /// Convergence tolerance; defaults to the resolution.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Passes when the tail's diameter is below epsilon.
    Cauchy {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.25)]
        tail: f64,
    },
    /// Exhaustive check of the sign-pattern family.
    VectorFamily {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Searches for an ordering of a vector batch with all prefixes below epsilon.
    RpInstance {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value = "sup")]
        norm: NormKind,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    /// Panel count; one per phase for walks of at most three phases.
    #[arg(long)]
    panels: Option<usize>,
    #[command(flatten)]
    common: Common,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotChainable { .. }
            | Error::ExtensionFailed { .. }
            | Error::RpBoundViolated { .. }
            | Error::RpCertificationFailed(_)
            | Error::PrefixTooShort
            | Error::SampleTooSparse { .. }
            | Error::ComponentTooShort { .. }
            | Error::Stage { .. } => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SERWALK_LOG", "error"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let command_line: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, &command_line),
        Command::Rearrange(a) => cmd_rearrange(a, &command_line),
        Command::Verify { check } => cmd_verify(check, &command_line),
        Command::Plot(a) => cmd_plot(a, &command_line),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// `walk.csv` becomes `walk.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes `bytes` to `out` (or stdout) and, for files, a manifest beside it.
fn emit(out: Option<&Path>, bytes: &[u8], extra: &[PathBuf], command: &[String], seed: u64) -> Result<(), Failure> {
    match out {
        None => {
            std::io::stdout().write_all(bytes)?;
        }
        Some(path) => {
            fs::write(path, bytes)?;
            let mut outputs = vec![path.display().to_string()];
            outputs.extend(extra.iter().map(|p| p.display().to_string()));
            let manifest = Manifest::new(command.to_vec(), seed, outputs);
            fs::write(sibling(path, "manifest.json"), to_json_pretty(&manifest)?)?;
            info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn point_trace(w: &Walk<Point>, format: Format) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_trace_csv(w, &mut buf)?,
        Format::Json => write_trace_jsonl(w, &mut buf)?,
        Format::Svg => buf = walk_svg(w, PlotOptions::for_walk(w))?.into_bytes(),
    }
    Ok(buf)
}

fn sparse_trace(w: &Walk<SparseVec>, format: Format) -> Result<Vec<u8>, Failure> {
    if format != Format::Json {
        return Err(Failure::usage("sequence-space walks are written as JSON lines (--format json)"));
    }
    let mut buf = Vec::new();
    write_trace_jsonl(w, &mut buf)?;
    Ok(buf)
}

fn unit_circle(pitch: f64) -> Result<Vec<Point>, Failure> {
    if !(pitch > 0.0 && pitch < 1.0) {
        return Err(Failure::usage("pitch must lie in (0, 1)"));
    }
    Ok(PointSample::circle_with_pitch([0.0, 0.0], 1.0, pitch).points)
}

fn vertical(x: f64, height: f64, pitch: f64) -> Vec<Point> {
    let n = (height / pitch).ceil() as usize;
    (0..=n).map(|i| Point::float(&[x, i as f64 * pitch])).collect()
}

fn cmd_generate(a: GenerateArgs, command: &[String]) -> CmdResult {
    let phases = a.phases;
    let sparse = matches!(a.generator, Generator::C0TwoPoint | Generator::C0Singleton | Generator::NoRp);
    let format = a.common.format.unwrap_or(if sparse { Format::Json } else { Format::Csv });
    info!("generate {:?}, {phases} phases", a.generator);
    let bytes = match a.generator {
        Generator::TwoLines => point_trace(&gen_two_lines(phases)?, format)?,
        Generator::Halflines => {
            if phases == 0 {
                return Err(Error::invalid("phases must be ≥ 1").into());
            }
            let xs = match (&a.abscissae, a.cantor) {
                (Some(_), true) => return Err(Failure::usage("--abscissae and --cantor are exclusive")),
                (Some(xs), false) => xs.clone(),
                (None, true) => cantor_abscissae(phases + 1),
                (None, false) => (0..=phases).map(|i| i as f64).collect(),
            };
            point_trace(&gen_halflines(&xs, phases)?, format)?
        }
        Generator::Chainable => {
            let dense = match &a.target {
                Some(p) => read_sample_csv(open(p)?)?,
                None => unit_circle(a.pitch)?,
            };
            point_trace(&build_chainable_walk(&dense, phases, NormKind::Euclidean)?, format)?
        }
        Generator::Unbounded => {
            if phases == 0 {
                return Err(Error::invalid("phases must be ≥ 1").into());
            }
            // Two vertical half-lines, truncated above the last sphere.
            let radii: Vec<f64> = (1..=phases).map(|k| (k + 1) as f64).collect();
            let height = radii[phases - 1] + 2.0;
            let comps = vec![vertical(0.0, height, a.pitch), vertical(1.0, height, a.pitch)];
            point_trace(&build_unbounded_components_walk(&comps, &radii, phases)?, format)?
        }
        Generator::C0TwoPoint => sparse_trace(&gen_c0_two_point(phases)?, format)?,
        Generator::C0Singleton => sparse_trace(&gen_c0_singleton_divergent(phases)?, format)?,
        Generator::NoRp => match a.block {
            Some(k) => {
                if format != Format::Json {
                    return Err(Failure::usage("blocks are written as JSON (--format json)"));
                }
                let mut buf = Vec::new();
                write_vectors_json(&no_rp_block(k)?, &mut buf)?;
                buf
            }
            None => {
                let (series, _) = gen_no_rp_series(phases)?;
                let mut groups = vec![1];
                for k in 1..=phases {
                    groups.push(2 * no_rp_block(k)?.len());
                }
                groups[1] += groups.remove(0);
                let sums = series.partial_sums(&SparseVec::zero());
                sparse_trace(&Walk::from_groups(sums, &groups, NormKind::Sup)?, format)?
            }
        },
    };
    emit(a.common.out.as_deref(), &bytes, &[], command, a.common.seed)?;
    Ok(true)
}

fn open(path: &Path) -> Result<BufReader<fs::File>, Failure> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_rearrange(a: RearrangeArgs, command: &[String]) -> CmdResult {
    if a.stages == 0 {
        return Err(Failure::usage("stages must be ≥ 1"));
    }
    let target = read_sample_csv(open(&a.target)?)?;
    let dim = target[0].dim();
    let series = full_sum_range_family(dim, a.terms, a.exponent)?;
    let params = RearrangeParams { rp_budget: a.rp_budget, seed: a.common.seed, link_gap: a.gap };
    info!("rearranging {} terms toward {} target points, {} stages", a.terms, target.len(), a.stages);
    let singleton = target.len() == 1;
    let run = rearrange_to_limit_set(&series, &PointSample::new(target, "target"), a.stages, &params)?;

    let mut report = serde_json::to_value(&run.report).map_err(Error::from)?;
    if singleton {
        let tol = 0.5f64.powi(a.stages as i32);
        let verdict = singleton_convergence_check(&run.walk, tol)?;
        report["convergence"] = json!({ "tolerance": tol, "verdict": verdict.as_str() });
    }
    let format = a.common.format.unwrap_or(Format::Csv);
    let bytes = point_trace(&run.walk, format)?;
    let mut extra = Vec::new();
    if let Some(out) = a.common.out.as_deref() {
        let report_path = sibling(out, "report.json");
        let perm_path = sibling(out, "perm.json");
        fs::write(&report_path, to_json_pretty(&report)?)?;
        fs::write(&perm_path, to_json_pretty(&json!({ "tau": run.tau.images() }))?)?;
        extra = vec![report_path, perm_path];
    } else {
        eprintln!("{}", to_json_pretty(&report)?.trim_end());
    }
    emit(a.common.out.as_deref(), &bytes, &extra, command, a.common.seed)?;
    Ok(true)
}

/// Reads a trace, choosing the format and vector kind from its contents.
enum Trace {
    Points(Walk<Point>),
    Sparse(Walk<SparseVec>),
}

fn read_trace(path: &Path, norm: Option<NormKind>) -> Result<Trace, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with('{') {
        if first.contains("\"entries\"") {
            let n = norm.unwrap_or(SparseVec::default_norm());
            Ok(Trace::Sparse(read_trace_jsonl(text.as_bytes(), n)?))
        } else {
            let n = norm.unwrap_or(Point::default_norm());
            Ok(Trace::Points(read_trace_jsonl(text.as_bytes(), n)?))
        }
    } else if first.is_empty() {
        Err(Error::EmptySample.into())
    } else {
        Ok(Trace::Points(read_trace_csv(text.as_bytes(), norm.unwrap_or(NormKind::Euclidean))?))
    }
}

fn estimate_params(i: &InputArgs) -> Result<EstimateParams, Failure> {
    if !(i.window > 0.0 && i.window <= 1.0) {
        return Err(Failure::usage("window must lie in (0, 1]"));
    }
    if !(i.resolution > 0.0) {
        return Err(Failure::usage("resolution must be positive"));
    }
    let mut p = EstimateParams::new(i.window, i.resolution).min_hits(i.min_hits);
    p.norm = i.norm;
    Ok(p)
}

/// Runs a trace verifier on either vector kind; returns pass/fail, the
/// report and a one-line summary.
fn verify_trace<V: TraceVector>(w: &Walk<V>, check: &VerifyCommand) -> Result<(bool, Value, String), Failure> {
    match check {
        VerifyCommand::Estimate(i) => {
            let est = estimate_with(w, &estimate_params(i)?)?;
            let mut v = Map::new();
            v.insert("points".into(), json!(est.len()));
            let ok = !est.is_empty();
            Ok((ok, estimate_report(&est, v), format!("estimate: {} points", est.len())))
        }
        VerifyCommand::Dichotomy { input, gap, bound } => {
            let est = estimate_with(w, &estimate_params(input)?)?;
            let bound = bound.unwrap_or(est.max_norm());
            let r = verify_dichotomy(&est, *gap, bound)?;
            let mut v = Map::new();
            v.insert("dichotomy".into(), json!(r.verdict.as_str()));
            v.insert("components".into(), json!(r.components.len()));
            v.insert("gap".into(), json!(gap));
            v.insert("bound".into(), json!(bound));
            let ok = r.verdict != serwalk::analysis::DichotomyVerdict::Violation;
            Ok((ok, estimate_report(&est, v), format!("verdict: {}", r.verdict.as_str())))
        }
        VerifyCommand::Singleton { input, epsilon } => {
            let tol = epsilon.unwrap_or(input.resolution);
            let verdict = singleton_convergence_check(w, tol)?;
            let ok = matches!(verdict, serwalk::analysis::SingletonVerdict::ConvergesTo(_));
            let v = json!({ "verdict": verdict.as_str(), "tolerance": tol });
            Ok((ok, v, format!("verdict: {}", verdict.as_str())))
        }
        VerifyCommand::Cauchy { epsilon, tail, .. } => {
            let r = cauchy_diagnostic(w, *tail)?;
            let ok = r.max_gap < *epsilon;
            let v = json!({ "max_gap": r.max_gap, "tail_start": r.tail_start, "gap_pairs": r.gap_pairs, "epsilon": epsilon });
            Ok((ok, v, format!("max_gap: {}", r.max_gap)))
        }
        VerifyCommand::VectorFamily { .. } | VerifyCommand::RpInstance { .. } => unreachable!("not a trace check"),
    }
}

fn cmd_verify(check: VerifyCommand, command: &[String]) -> CmdResult {
    let (ok, report, summary, common) = match &check {
        VerifyCommand::VectorFamily { k, common } => {
            let r = check_family_exhaustive(&gen_vector_family(*k)?)?;
            let summary = format!(
                "{}: {} permutations, min half-sum norm {}",
                if r.passed() { "pass" } else { "fail" },
                r.permutations_checked,
                r.min_half_sum_norm
            );
            (r.passed(), serde_json::to_value(&r).map_err(Error::from)?, summary, common)
        }
        VerifyCommand::RpInstance { input, epsilon, norm, common } => {
            let text = fs::read_to_string(input).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
            let rows = read_vectors_json(&text)?;
            let pts: Vec<Point> = rows.iter().map(|r| Point::float(r)).collect();
            let found = find_balanced_permutation(&pts, *epsilon, BalanceStrategy::Auto, *norm)?;
            let (ok, summary) = match &found {
                Some(p) => (true, format!("pass: balanced permutation {p:?}")),
                None => (false, "fail: no balanced permutation".to_string()),
            };
            let v = json!({ "terms": rows.len(), "epsilon": epsilon, "permutation": found });
            (ok, v, summary, common)
        }
        VerifyCommand::Estimate(i)
        | VerifyCommand::Dichotomy { input: i, .. }
        | VerifyCommand::Singleton { input: i, .. }
        | VerifyCommand::Cauchy { input: i, .. } => {
            let (ok, v, s) = match read_trace(&i.input, i.norm)? {
                Trace::Points(w) => verify_trace(&w, &check)?,
                Trace::Sparse(w) => verify_trace(&w, &check)?,
            };
            (ok, v, s, &i.common)
        }
    };
    println!("{summary}");
    if let Some(out) = common.out.as_deref() {
        emit(Some(out), to_json_pretty(&report)?.as_bytes(), &[], command, common.seed)?;
    }
    Ok(ok)
}

fn cmd_plot(a: PlotArgs, command: &[String]) -> CmdResult {
    if matches!(a.common.format, Some(f) if f != Format::Svg) {
        return Err(Failure::usage("plot writes SVG only"));
    }
    let w = match read_trace(&a.input, None)? {
        Trace::Points(w) => w,
        Trace::Sparse(_) => return Err(Failure::usage("plot needs a planar trace")),
    };
    let mut opts = PlotOptions::for_walk(&w);
    if let Some(p) = a.panels {
        opts.panels = p;
    }
    let svg = walk_svg(&w, opts)?;
    emit(a.common.out.as_deref(), svg.as_bytes(), &[], command, a.common.seed)?;
    Ok(true)
}
