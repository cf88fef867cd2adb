//! The `pcr-clear` command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 verification failure,
//! 3 solver stopped short of proven optimality (artifacts are still written).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::core_model::{ClearingSolution, Instance, MarketRules, ObjectiveKind};
use crate::engine::{clear, staged, ClearingRequest};
use crate::instance_io::{self, GeneratorConfig};
use crate::oracle;
use crate::solver_backend::{SolveOptions, SolveStatus, BACKEND_ENV, GAP_ENV, TIME_LIMIT_ENV};
use crate::verifier::{verify_equilibrium, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_NOT_OPTIMAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pcr-clear", version, about = "Clear non-convex day-ahead electricity auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic instance.
    Generate(GenerateArgs),
    /// Clear an instance, verify the result and write solution artifacts.
    Clear(ClearArgs),
    /// Check a solution file against an instance.
    Verify(VerifyArgs),
    /// Enumerate all block and MIC selections of a small instance.
    Oracle(OracleArgs),
    /// Clear one instance under all three objectives and tabulate the results.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Welfare,
    Volume,
    MinOc,
}

impl From<ObjectiveArg> for ObjectiveKind {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Welfare => ObjectiveKind::Welfare,
            ObjectiveArg::Volume => ObjectiveKind::Volume,
            ObjectiveArg::MinOc => ObjectiveKind::MinOpportunityCost,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RulesArg {
    Pcr,
    Umfs,
}

impl From<RulesArg> for MarketRules {
    fn from(r: RulesArg) -> Self {
        match r {
            RulesArg::Pcr => MarketRules::Pcr,
            RulesArg::Umfs => MarketRules::Umfs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum HeuristicArg {
    Off,
    Staged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    Default,
    SmallRandom,
    Scale,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Wall-clock limit in seconds.
    #[arg(long, env = TIME_LIMIT_ENV)]
    time_limit: Option<f64>,
    /// Relative MIP gap target.
    #[arg(long, env = GAP_ENV)]
    gap: Option<f64>,
    #[arg(long)]
    threads: Option<u32>,
    #[arg(long, env = BACKEND_ENV, default_value = "highs")]
    backend: String,
}

impl SolverArgs {
    fn options(&self) -> Result<SolveOptions, String> {
        let mut o = SolveOptions::default();
        if let Some(s) = self.time_limit {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(format!("--time-limit must be a nonnegative number, got {s}"));
            }
            o.time_limit = Some(Duration::from_secs_f64(s));
        }
        if let Some(g) = self.gap {
            o.relative_gap_target = g;
        }
        o.thread_count = self.threads;
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "default")]
    preset: Preset,
    /// TOML generator config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hourly: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    mics: Option<usize>,
    #[arg(long)]
    locations: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    /// Output instance file.
    #[arg(long, default_value = "instance.toml")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClearArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "welfare")]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "pcr")]
    rules: RulesArg,
    #[arg(long, value_enum, default_value = "off")]
    heuristic: HeuristicArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Accepted for symmetry with `generate`; clearing is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// Report file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "welfare")]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "pcr")]
    rules: RulesArg,
    #[arg(long)]
    threads: Option<usize>,
    /// Writes the optimum's witness solution here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "pcr")]
    rules: RulesArg,
    #[arg(long, value_enum, default_value = "off")]
    heuristic: HeuristicArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Writes `compare.csv` into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Rounds to six decimals and drops negative zero, so `450.0000000001`
/// prints as `450`.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let r = (v * 1e6).round() / 1e6;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs the CLI on `argv` (including the program name), writing the summary
/// to `out` and diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Clear(a) => cmd_clear(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Compare(a) => cmd_compare(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Entry point of the `pcr-clear` binary.
pub fn run() -> i32 {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_with(std::env::args_os(), &mut out, &mut err)
}

fn load(path: &Path) -> Result<Instance, Failure> {
    instance_io::parse(path).map_err(Failure::usage)
}

fn emit(out: &mut dyn Write, line: &str) -> Result<(), Failure> {
    writeln!(out, "{line}").map_err(Failure::usage)
}

fn cmd_generate(a: GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let mut cfg = match (&a.config, a.preset) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        (None, Preset::Default) => GeneratorConfig::default(),
        (None, Preset::SmallRandom) => GeneratorConfig::small_random(a.seed),
        (None, Preset::Scale) => GeneratorConfig::scale(a.seed),
    };
    cfg.seed = a.seed;
    let overrides = [
        (a.hourly, &mut cfg.hourly_bids),
        (a.blocks, &mut cfg.block_bids),
        (a.mics, &mut cfg.mic_bids),
        (a.locations, &mut cfg.locations),
        (a.periods, &mut cfg.periods),
    ];
    for (v, field) in overrides {
        if let Some(v) = v {
            *field = v;
        }
    }
    cfg.validate().map_err(Failure::usage)?;
    let inst = instance_io::generate(&cfg);
    instance_io::write_instance(&inst, &a.out).map_err(Failure::usage)?;
    emit(
        out,
        &format!(
            "hourly={} blocks={} mics={} binaries={} out={}",
            inst.hourly_bids.len(),
            inst.block_bids.len(),
            inst.mic_bids.len(),
            inst.num_binaries(),
            a.out.display()
        ),
    )?;
    Ok(EXIT_OK)
}

fn request(
    objective: ObjectiveKind,
    rules: MarketRules,
    solver: &SolverArgs,
) -> Result<ClearingRequest, Failure> {
    let options = solver.options().map_err(Failure::usage)?;
    let mut req = ClearingRequest::new(objective, rules).with_options(options);
    req.backend = solver.backend.clone();
    Ok(req)
}

fn run_engine(
    inst: &Instance,
    req: &ClearingRequest,
    heuristic: HeuristicArg,
) -> Result<ClearingSolution, Failure> {
    let r = match heuristic {
        HeuristicArg::Off => clear(inst, req),
        HeuristicArg::Staged => staged(inst, req),
    };
    r.map_err(|e| Failure {
        code: if e.is_time_limit() { EXIT_NOT_OPTIMAL } else { EXIT_USAGE },
        message: e.to_string(),
    })
}

fn summary_line(sol: &ClearingSolution, elapsed: f64) -> String {
    let values = [
        (ObjectiveKind::Welfare, sol.welfare),
        (ObjectiveKind::Volume, sol.traded_volume),
        (ObjectiveKind::MinOpportunityCost, sol.total_opportunity_cost),
    ];
    let mut parts: Vec<String> = Vec::new();
    let (first, rest): (Vec<_>, Vec<_>) = values.iter().partition(|(k, _)| *k == sol.objective);
    for &(k, v) in first.into_iter().chain(rest) {
        parts.push(format!("{}={}", k.label(), fmt_num(v)));
    }
    parts.push(format!("gap={}", fmt_num(sol.solver_gap)));
    parts.push(format!("time={elapsed:.3}s"));
    parts.join(" ")
}

fn cmd_clear(a: ClearArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let inst = load(&a.input)?;
    let req = request(a.objective.into(), a.rules.into(), &a.solver)?;
    let sol = run_engine(&inst, &req, a.heuristic)?;
    let report = verify_equilibrium(&inst, &sol, &Tolerances::default());
    let solution_path = a.out.join("solution.toml");
    instance_io::write_solution(&inst, &sol, Some(&report), &solution_path).map_err(Failure::usage)?;
    instance_io::write_report(&report, a.out.join("report.toml")).map_err(Failure::usage)?;

    let mut line = summary_line(&sol, started.elapsed().as_secs_f64());
    line.push_str(&format!(
        " status={} verification={}",
        sol.diagnostics.status,
        if report.passed { "passed" } else { "failed" }
    ));
    emit(out, &line)?;
    if !report.passed {
        let _ = writeln!(err, "{report}");
        return Ok(EXIT_VERIFICATION);
    }
    if sol.diagnostics.status != SolveStatus::Optimal.to_string() {
        return Ok(EXIT_NOT_OPTIMAL);
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.instance)?;
    let file = instance_io::read_solution(&a.solution).map_err(Failure::usage)?;
    let report = verify_equilibrium(&inst, &file.solution, &Tolerances::default());
    if let Some(p) = &a.out {
        instance_io::write_report(&report, p).map_err(Failure::usage)?;
    }
    let worst = report
        .families
        .iter()
        .map(|f| f.max_residual)
        .fold(0.0, f64::max);
    let mut line = format!(
        "verification={} max_residual={worst:e}",
        if report.passed { "passed" } else { "failed" }
    );
    for f in report.failed_families() {
        line.push_str(&format!(" failed={}", f.id()));
    }
    emit(out, &line)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_oracle(a: OracleArgs, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.input)?;
    let rules: MarketRules = a.rules.into();
    let run = || oracle::enumerate(&inst, rules);
    let result = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(Failure::usage)?
            .install(run),
        None => run(),
    }
    .map_err(Failure::usage)?;
    let kind: ObjectiveKind = a.objective.into();
    let opt = result.optimum(kind);
    if let Some(p) = &a.out {
        instance_io::write_solution(&inst, &opt.witness, None, p).map_err(Failure::usage)?;
    }
    let ids = oracle::Selection::from_index(opt.selection_index, inst.block_bids.len(), inst.mic_bids.len())
        .accepted_ids(&inst);
    emit(
        out,
        &format!(
            "{}={} selections={} evaluated={} accepted=[{}]",
            kind.label(),
            fmt_num(opt.value),
            result.admissible.len(),
            result.evaluated,
            ids.join(",")
        ),
    )?;
    Ok(EXIT_OK)
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write) -> CmdResult {
    let inst = load(&a.input)?;
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    for kind in ObjectiveKind::ALL {
        let started = Instant::now();
        let req = request(kind, a.rules.into(), &a.solver)?;
        let sol = run_engine(&inst, &req, a.heuristic)?;
        let report = verify_equilibrium(&inst, &sol, &Tolerances::default());
        if !report.passed {
            code = EXIT_VERIFICATION;
        } else if code == EXIT_OK && sol.diagnostics.status != SolveStatus::Optimal.to_string() {
            code = EXIT_NOT_OPTIMAL;
        }
        emit(
            out,
            &format!("objective={kind} {}", summary_line(&sol, started.elapsed().as_secs_f64())),
        )?;
        rows.push((kind, sol));
    }
    if let Some(dir) = &a.out {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Failure::usage(e);
        w.write_record(["objective", "welfare", "volume", "opportunity_cost", "gap"])
            .map_err(csv_err)?;
        for (kind, s) in &rows {
            w.write_record([
                kind.to_string(),
                fmt_num(s.welfare),
                fmt_num(s.traded_volume),
                fmt_num(s.total_opportunity_cost),
                fmt_num(s.solver_gap),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(Failure::usage)?;
        std::fs::create_dir_all(dir).map_err(Failure::usage)?;
        std::fs::write(dir.join("compare.csv"), bytes).map_err(Failure::usage)?;
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("pcr-clear").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(450.0000000001), "450");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(0.5), "0.5");
    }

    #[test]
    fn missing_input_is_usage_error() {
        let (code, _, err) = run(&["clear"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"), "{err}");
    }

    #[test]
    fn nonexistent_file_is_io_error() {
        let (code, _, err) = run(&["clear", "/nonexistent/x.toml", "--out", "/tmp"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("/nonexistent/x.toml"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("oracle"));
    }
}
