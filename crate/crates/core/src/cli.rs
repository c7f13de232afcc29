//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification fails or a computation
//! does not finish, 2 on usage errors (bad flags, malformed channel specs,
//! out-of-range parameters).

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::TecChannel;
use crate::eigen::{power_iterate, verify_lemma_eigen, ChildEntropyMap};
use crate::error::{Error, Result};
use crate::output::sig6;
use crate::process::{
    enumerate_descendants, psi_expectation_series, write_scatter_csv, write_series_csv, KernelKind,
    DEFAULT_PSI_EXPONENT,
};
use crate::spline::{LinearSpline, DEFAULT_NODES};
use crate::trap::{iterate_bound, AnalyticCurve, BoundMode, EdgeCurve, TrapBounds};
use crate::verify::{run_check, CheckId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Root channel of the figure runs: a pair of BEC(0.55).
const FIGURE_ROOT: &str = "becpair:0.55,0.55";

/// Points per axis of the figure curve table.
const FIGURE_GRID: usize = 101;

#[derive(Debug, Parser)]
#[command(
    name = "tec-polar",
    version,
    about = "Polarization of tetrahedral erasure channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

/// Flags shared by all subcommands; each subcommand reads the ones it needs.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Tree depth (default 10 for scatter and fig2, 20 for series and fig3)
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = KernelArg::Twist)]
    pub kernel: KernelArg,
    /// Grid nodes for function iterations, or grid size for verify-lemma
    #[arg(long, global = true, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: usize,
    /// Output file (a directory for fig2 and fig3); stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Twist,
    Untwisted,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Twist => KernelKind::QuaternaryTwist,
            KernelArg::Untwisted => KernelKind::UntwistedBaseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Inner,
    Outer,
}

impl From<ModeArg> for BoundMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Inner => BoundMode::Inner,
            ModeArg::Outer => BoundMode::Outer,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a channel and its functionals
    Show { channel: String },
    /// Print both children of a channel under the chosen kernel
    Children { channel: String },
    /// CSV of all descendants at generation --depth
    Scatter { channel: String },
    /// CSV of exact expectations for generations 1..=--depth
    Series {
        channel: String,
        #[arg(long, default_value_t = DEFAULT_PSI_EXPONENT)]
        psi_exponent: f64,
    },
    /// Iterate the inner or outer trapping bound and write the spline CSV
    Trap {
        #[arg(value_enum)]
        mode: ModeArg,
    },
    /// Eigenvalue tools
    Eigen {
        #[command(subcommand)]
        action: EigenAction,
    },
    /// Run one check by id, or all of them
    Verify { check: String },
    /// Descendant scatter and trapping curves of the (H, E) figure
    Fig2,
    /// Expectation series of both kernels
    Fig3,
}

#[derive(Debug, Subcommand)]
pub enum EigenAction {
    /// Maximize the closed-form one-step ratio on a grid of --nodes points
    VerifyLemma,
    /// Power iteration for a child-entropy map
    Power {
        /// bec, a curve name (alpha_parabola, poly_inner, ...), inner,
        /// outer, or spline:<path to spline CSV>
        #[arg(long, default_value = "bec")]
        map: String,
        #[arg(long, default_value_t = 0.7)]
        psi0: f64,
        /// Also write the normalized eigenfunction as a spline CSV
        #[arg(long)]
        eigenfunction: Option<PathBuf>,
    },
}

/// Parses `tec:p,q,r,s,t`, `becpair:δ,ε` or `qec:ε`.
pub fn parse_channel_spec(spec: &str) -> Result<TecChannel> {
    let bad = |reason: &str| Error::ParseChannel {
        input: spec.to_string(),
        reason: reason.to_string(),
    };
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| bad("expected tec:..., becpair:... or qec:..."))?;
    let numbers: Vec<f64> = args
        .split(',')
        .map(|a| a.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(&e.to_string()))?;
    match (kind, numbers.as_slice()) {
        ("tec", &[p, q, r, s, t]) => TecChannel::new(p, q, r, s, t),
        ("becpair", &[delta, eps]) => TecChannel::from_bec_pair(delta, eps),
        ("qec", &[eps]) => TecChannel::from_qary_erasure(eps),
        ("tec", _) => Err(bad("tec needs five numbers")),
        ("becpair", _) => Err(bad("becpair needs two numbers")),
        ("qec", _) => Err(bad("qec needs one number")),
        _ => Err(bad(&format!("unknown channel kind {kind:?}"))),
    }
}

fn is_usage_error(err: &Error) -> bool {
    matches!(
        err,
        Error::ParseChannel { .. }
            | Error::UnknownCheck(_)
            | Error::UnknownCurve(_)
            | Error::InvalidParameter { .. }
            | Error::DepthTooLarge { .. }
            | Error::OutOfRange { .. }
            | Error::NonFinite { .. }
            | Error::NegativeComponent { .. }
            | Error::ComponentAboveOne { .. }
            | Error::SumNotOne { .. }
    )
}

fn format_functionals(w: &TecChannel) -> String {
    let f = w.functionals();
    let q = f.quetelet.map_or_else(|| "undefined".to_string(), sig6);
    format!(
        "H={} E={} A={} Q={}",
        sig6(f.entropy),
        sig6(f.edge_mass),
        sig6(f.inertia),
        q
    )
}

fn format_channel(w: &TecChannel) -> String {
    w.to_array().map(sig6).join(",")
}

/// Opens `--out` or falls back to `stdout`.
fn sink<'a>(out: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

fn create_in(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn load_spline(path: &Path) -> Result<LinearSpline> {
    LinearSpline::read_csv(BufReader::new(File::open(path)?))
}

fn power_map(name: &str, cfg: &RunConfig) -> Result<ChildEntropyMap> {
    Ok(match name {
        "bec" => ChildEntropyMap::BinaryBec,
        "inner" | "outer" => {
            let mode = if name == "inner" {
                BoundMode::Inner
            } else {
                BoundMode::Outer
            };
            let curve = iterate_bound(mode, cfg.nodes, cfg.tol, cfg.max_iters)?.into_converged()?;
            ChildEntropyMap::TwistOnCurve(EdgeCurve::Spline(curve))
        }
        _ => match name.strip_prefix("spline:") {
            Some(path) => {
                ChildEntropyMap::TwistOnCurve(EdgeCurve::Spline(load_spline(Path::new(path))?))
            }
            None => ChildEntropyMap::TwistOnCurve(name.parse::<AnalyticCurve>()?.into()),
        },
    })
}

/// Writes `scatter.csv` and `curves.csv` into `dir`.
pub fn write_fig2(dir: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    let root = parse_channel_spec(FIGURE_ROOT)?;
    let records = enumerate_descendants(&root, cfg.depth.unwrap_or(10), cfg.kernel.into())?;
    let mut scatter = create_in(dir, "scatter.csv")?;
    write_scatter_csv(&records, &mut scatter)?;
    scatter.flush()?;

    let bounds = TrapBounds::compute(cfg.nodes, cfg.tol, cfg.max_iters)?;
    let mut curves = create_in(dir, "curves.csv")?;
    writeln!(
        curves,
        "x,alpha_parabola,outer_parabola,poly_inner,poly_outer,inner,outer"
    )?;
    for x in LinearSpline::uniform_grid(FIGURE_GRID) {
        let mut row = vec![sig6(x)];
        row.extend(AnalyticCurve::ALL.map(|c| sig6(c.eval(x))));
        row.push(sig6(bounds.inner.eval(x)));
        row.push(sig6(bounds.outer.eval(x)));
        writeln!(curves, "{}", row.join(","))?;
    }
    curves.flush()?;
    Ok(())
}

/// Writes `series_twist.csv` and `series_untwisted.csv` into `dir`.
pub fn write_fig3(dir: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    let root = parse_channel_spec(FIGURE_ROOT)?;
    for (kernel, name) in [
        (KernelKind::QuaternaryTwist, "series_twist.csv"),
        (KernelKind::UntwistedBaseline, "series_untwisted.csv"),
    ] {
        let series =
            psi_expectation_series(&root, cfg.depth.unwrap_or(20), kernel, DEFAULT_PSI_EXPONENT)?;
        let mut file = create_in(dir, name)?;
        write_series_csv(&series, &mut file)?;
        file.flush()?;
    }
    Ok(())
}

/// Runs one parsed command; `Ok(false)` means a verification failed.
fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool> {
    let cfg = cli.config;
    match cli.command {
        Command::Show { channel } => {
            let w = parse_channel_spec(&channel)?;
            let mut out = sink(&cfg.out, stdout)?;
            writeln!(out, "tec={}", format_channel(&w))?;
            writeln!(out, "{}", format_functionals(&w))?;
            out.flush()?;
        }
        Command::Children { channel } => {
            let w = parse_channel_spec(&channel)?;
            let kids = KernelKind::from(cfg.kernel).children(&w);
            let mut out = sink(&cfg.out, stdout)?;
            for (name, child) in [("serial", kids.serial), ("parallel", kids.parallel)] {
                writeln!(
                    out,
                    "{name} tec={} {}",
                    format_channel(&child),
                    format_functionals(&child)
                )?;
            }
            out.flush()?;
        }
        Command::Scatter { channel } => {
            let w = parse_channel_spec(&channel)?;
            let records = enumerate_descendants(&w, cfg.depth.unwrap_or(10), cfg.kernel.into())?;
            let mut out = sink(&cfg.out, stdout)?;
            write_scatter_csv(&records, &mut out)?;
            out.flush()?;
        }
        Command::Series {
            channel,
            psi_exponent,
        } => {
            let w = parse_channel_spec(&channel)?;
            let series = psi_expectation_series(
                &w,
                cfg.depth.unwrap_or(20),
                cfg.kernel.into(),
                psi_exponent,
            )?;
            let mut out = sink(&cfg.out, stdout)?;
            write_series_csv(&series, &mut out)?;
            out.flush()?;
        }
        Command::Trap { mode } => {
            let run = iterate_bound(mode.into(), cfg.nodes, cfg.tol, cfg.max_iters)?;
            let mut out = sink(&cfg.out, stdout)?;
            run.curve.write_csv(&mut out)?;
            out.flush()?;
            writeln!(
                stderr,
                "iterations={} last_delta={:e} converged={}",
                run.iterations, run.last_delta, run.converged
            )?;
            if !run.converged {
                return Err(Error::NoConvergence {
                    iterations: run.iterations,
                    last_delta: run.last_delta,
                });
            }
        }
        Command::Eigen { action } => match action {
            EigenAction::VerifyLemma => {
                let report = verify_lemma_eigen(cfg.nodes)?;
                let mut out = sink(&cfg.out, stdout)?;
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&report).map_err(|e| Error::Io(e.to_string()))?
                )?;
                out.flush()?;
                return Ok(report.pass);
            }
            EigenAction::Power {
                map,
                psi0,
                eigenfunction,
            } => {
                let map = power_map(&map, &cfg)?;
                let result = power_iterate(&map, psi0, cfg.nodes, cfg.tol, cfg.max_iters)?;
                let mut out = sink(&cfg.out, stdout)?;
                result.write_json(&mut out)?;
                out.flush()?;
                if let Some(path) = eigenfunction {
                    let mut file = BufWriter::new(File::create(path)?);
                    result.eigenfunction.write_csv(&mut file)?;
                    file.flush()?;
                }
                if !result.is_concave() {
                    writeln!(
                        stderr,
                        "eigenfunction is not concave (defect {:e}); mu is not certified",
                        result.concavity_defect
                    )?;
                    return Ok(false);
                }
            }
        },
        Command::Verify { check } => {
            let ids = if check == "all" {
                CheckId::ALL.to_vec()
            } else {
                vec![check.parse::<CheckId>()?]
            };
            let mut out = sink(&cfg.out, stdout)?;
            let mut all_pass = true;
            for id in ids {
                let report = run_check(id, cfg.samples, cfg.seed)?;
                writeln!(out, "{}", report.to_json())?;
                all_pass &= report.pass;
            }
            out.flush()?;
            return Ok(all_pass);
        }
        Command::Fig2 => write_fig2(
            &cfg.out.clone().unwrap_or_else(|| PathBuf::from("fig2")),
            &cfg,
        )?,
        Command::Fig3 => write_fig3(
            &cfg.out.clone().unwrap_or_else(|| PathBuf::from("fig3")),
            &cfg,
        )?,
    }
    Ok(true)
}

/// Parses `argv` (program name first) and runs it, writing to the given
/// streams. Returns the process exit code.
pub fn run_with(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            };
            let rendered = err.render().to_string();
            let target: &mut dyn Write = if err.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{rendered}");
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            if is_usage_error(&err) {
                EXIT_USAGE
            } else {
                EXIT_FAILED
            }
        }
    }
}

pub fn run(argv: &[String]) -> i32 {
    run_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}
