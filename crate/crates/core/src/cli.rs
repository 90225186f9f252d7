//! Command-line front end.
//!
//! Exit status is 0 on success, 1 on usage or input errors and 2 when the
//! requested instance is infeasible. Printed numbers use six significant
//! digits; the sweep CSV keeps full precision.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::model::{Allocation, Platform, PlanResult, Policy, Sla};
use crate::planner::{plan_with, MachineCount};
use crate::reliability::{self, feasible, Method};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "replica-energy", version, about = "Plan service replicas on failure-prone machines at minimum energy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the closed-form replica and energy bounds.
    Bounds(BoundsArgs),
    /// Compute an allocation with one of the planning policies.
    Plan(PlanArgs),
    /// Evaluate the reliability of an allocation file.
    Evaluate(EvaluateArgs),
    /// Write total energies of every policy for a range of machine counts.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    dem: u64,
    #[arg(long)]
    fail: f64,
    #[arg(long)]
    rel: f64,
    #[arg(long)]
    machines: usize,
    #[arg(long)]
    alpha: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    LowerBound,
    TheoHomo,
    BestHomo,
    BestStep,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::LowerBound => Policy::LowerBound,
            PolicyArg::TheoHomo => Policy::TheoHomo,
            PolicyArg::BestHomo => Policy::BestHomo,
            PolicyArg::BestStep => Policy::BestStep,
        }
    }
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long, value_enum)]
    policy: PolicyArg,
    #[arg(long)]
    dem: u64,
    #[arg(long)]
    fail: f64,
    #[arg(long)]
    rel: f64,
    #[arg(long)]
    machines: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    estat: f64,
    #[arg(long, default_value_t = 1.0)]
    ecoeff: f64,
    /// Allow switching machines off.
    #[arg(long)]
    shutdown: bool,
    /// With --shutdown, try every machine count instead of the mean rule.
    #[arg(long, requires = "shutdown")]
    exhaustive: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Dp,
    Bruteforce,
    Montecarlo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dp => Method::Dp,
            MethodArg::Bruteforce => Method::BruteForce,
            MethodArg::Montecarlo => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Text file with one nonnegative load per line; `#` lines are comments.
    #[arg(long)]
    alloc: PathBuf,
    #[arg(long)]
    fail: f64,
    #[arg(long)]
    dem: u64,
    #[arg(long, value_enum, default_value = "dp")]
    method: MethodArg,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    m_min: usize,
    #[arg(long)]
    m_max: usize,
    #[arg(long)]
    dem: u64,
    #[arg(long)]
    fail: f64,
    #[arg(long)]
    rel: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    estat: f64,
    #[arg(long, default_value_t = 1.0)]
    ecoeff: f64,
    /// Let each policy choose how many machines to switch on.
    #[arg(long)]
    shutdown: bool,
    #[arg(long)]
    out: PathBuf,
}

/// A failed command: exit status and one-line reason.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_infeasible() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Bounds(a) => cmd_bounds(&a, out),
        Command::Plan(a) => cmd_plan(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let report = bounds::report(a.dem, a.fail, a.rel, a.machines, a.alpha)?;
    if a.alpha < 2.0 {
        return Err(usage(format!("alpha must be at least 2, got {}", a.alpha)));
    }
    writeln!(out, "MinRep={}", fmt_sig(report.min_rep))?;
    writeln!(out, "MinEnergy={}", fmt_sig(report.min_energy))?;
    let upper = report.upper?;
    writeln!(out, "MaxRep={}", fmt_sig(upper.max_rep))?;
    writeln!(out, "MaxEnergy={}", fmt_sig(upper.max_energy))?;
    writeln!(out, "DispersionBound={}", fmt_sig(upper.dispersion))?;
    writeln!(out, "RepRatio={}", fmt_sig(upper.rep_ratio))?;
    writeln!(out, "EnergyRatio={}", fmt_sig(upper.energy_ratio))?;
    Ok(())
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let platform = Platform::new(a.machines, a.fail, a.estat, a.ecoeff, a.alpha)?;
    let sla = Sla::new(a.dem, a.rel)?;
    let count = match (a.shutdown, a.exhaustive) {
        (false, _) => MachineCount::All,
        (true, false) => MachineCount::Heuristic,
        (true, true) => MachineCount::Exhaustive,
    };
    let result = plan_with(a.policy.into(), &platform, &sla, count)?;
    write_plan(&result, &platform, &sla, out)
}

fn write_plan(r: &PlanResult, platform: &Platform, sla: &Sla, out: &mut dyn Write) -> Result<(), Failure> {
    writeln!(out, "policy={}", r.policy)?;
    writeln!(out, "k={}", r.k)?;
    if let Some(alloc) = &r.allocation {
        // independent re-check before anything is reported
        let failure = reliability::failure_dp(alloc.loads(), platform.fail(), sla.dem());
        if failure > sla.rel() {
            return Err(usage(format!("internal error: plan fails reliability check ({failure:e})")));
        }
        writeln!(out, "loads={alloc}")?;
        writeln!(out, "total_instances={}", alloc.total())?;
        writeln!(out, "success_prob={}", fmt_sig(1.0 - failure))?;
        writeln!(out, "failure_prob={}", fmt_sig(failure))?;
    }
    writeln!(out, "energy_static={}", fmt_sig(r.energy_static))?;
    writeln!(out, "energy_dynamic={}", fmt_sig(r.energy_dynamic))?;
    writeln!(out, "energy_total={}", fmt_sig(r.energy_total))?;
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.alloc)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.alloc.display())))?;
    let alloc = parse_allocation(&text).map_err(|e| usage(format!("{}: {e}", a.alloc.display())))?;
    let est = reliability::evaluate(a.method.into(), alloc.loads(), a.fail, a.dem, a.trials, a.seed)?;
    writeln!(out, "method={}", est.method.name())?;
    writeln!(out, "value={}", fmt_sig(est.value))?;
    if let (Some(trials), Some(seed), Some(stderr)) = (est.trials, est.seed, est.stderr) {
        writeln!(out, "trials={trials}")?;
        writeln!(out, "seed={seed}")?;
        writeln!(out, "stderr={}", fmt_sig(stderr))?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = SweepConfig {
        m_min: a.m_min,
        m_max: a.m_max,
        dem: a.dem,
        fail: a.fail,
        rel: a.rel,
        alpha: a.alpha,
        estat: a.estat,
        ecoeff: a.ecoeff,
        shutdown: a.shutdown,
    };
    let points = sweep(&config)?;
    write_sweep_file(&points, &a.out)?;
    writeln!(out, "wrote {} rows to {}", points.len(), a.out.display())?;
    Ok(())
}

/// Parses the allocation text format: one nonnegative integer per line,
/// lines starting with `#` and blank lines ignored.
pub fn parse_allocation(text: &str) -> std::result::Result<Allocation, String> {
    let mut loads = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let load = line
            .parse::<u64>()
            .map_err(|_| format!("line {}: expected a nonnegative integer, found {line:?}", i + 1))?;
        loads.push(load);
    }
    Ok(Allocation::new(loads))
}

/// Formats like C's `%g`: six significant digits, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (5 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub m_min: usize,
    pub m_max: usize,
    pub dem: u64,
    pub fail: f64,
    pub rel: f64,
    pub alpha: f64,
    pub estat: f64,
    pub ecoeff: f64,
    /// When false every machine stays on (and pays static energy).
    pub shutdown: bool,
}

/// All plans computed at one machine count. `None` where the policy is
/// infeasible at this `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub m: usize,
    pub lower_bound: Option<PlanResult>,
    pub theo_homo: Option<PlanResult>,
    pub best_homo: Option<PlanResult>,
    pub best_step: Option<PlanResult>,
}

/// One CSV row: total energies, empty when infeasible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub lower_bound: Option<f64>,
    pub theo_homo: Option<f64>,
    pub best_homo: Option<f64>,
    pub best_step: Option<f64>,
}

impl From<&SweepPoint> for SweepRow {
    fn from(p: &SweepPoint) -> Self {
        let total = |r: &Option<PlanResult>| r.as_ref().map(|r| r.energy_total);
        SweepRow {
            m: p.m,
            lower_bound: total(&p.lower_bound),
            theo_homo: total(&p.theo_homo),
            best_homo: total(&p.best_homo),
            best_step: total(&p.best_step),
        }
    }
}

/// Plans every policy for each `m` in `m_min..=m_max`. Rows are computed in
/// parallel and returned in ascending `m`.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepPoint>> {
    if config.m_min == 0 || config.m_min > config.m_max {
        return Err(Error::invalid(
            "machine range",
            format!("need 1 <= m-min <= m-max, got {}..={}", config.m_min, config.m_max),
        ));
    }
    // validate once so per-row errors can only mean infeasibility
    Platform::new(config.m_min, config.fail, config.estat, config.ecoeff, config.alpha)?;
    let sla = Sla::new(config.dem, config.rel)?;
    let count = if config.shutdown {
        MachineCount::Heuristic
    } else {
        MachineCount::All
    };
    (config.m_min..=config.m_max)
        .into_par_iter()
        .map(|m| {
            let platform = Platform::new(m, config.fail, config.estat, config.ecoeff, config.alpha)?;
            let run = |policy| -> Result<Option<PlanResult>> {
                if !feasible(m as u64, config.fail, config.rel) {
                    return Ok(None);
                }
                match plan_with(policy, &platform, &sla, count) {
                    Ok(r) => Ok(Some(r)),
                    Err(e) if e.is_infeasible() => Ok(None),
                    Err(e) => Err(e),
                }
            };
            Ok(SweepPoint {
                m,
                lower_bound: run(Policy::LowerBound)?,
                theo_homo: run(Policy::TheoHomo)?,
                best_homo: run(Policy::BestHomo)?,
                best_step: run(Policy::BestStep)?,
            })
        })
        .collect()
}

/// Writes the sweep CSV (`m,lower_bound,theo_homo,best_homo,best_step`).
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], writer: W) -> std::io::Result<()> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for point in points {
        csv.serialize(SweepRow::from(point))?;
    }
    csv.flush()
}

fn write_sweep_file(points: &[SweepPoint], path: &Path) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_sweep_csv(points, std::io::BufWriter::new(file))
}
