//! Command-line front end: argument parsing, versioned file formats and the
//! `synthesize`, `simulate`, `analyze` and `compare` commands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{ToolkitConfig, CONFIG_ENV};
use crate::drive_cycle::DriveCycle;
use crate::error::{Error, Result};
use crate::pipeline::{self, Comparison};
use crate::sim::{self, DamageReport, SimulationLog};
use crate::synthesis::{ControlMode, ControllerRealization, Verification};

pub const CONTROLLER_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const COMPARISON_SCHEMA_VERSION: u32 = 1;

const CONTROLLER_FORMAT: &str = "relcon-controller";
const REPORT_FORMAT: &str = "relcon-damage-report";
const COMPARISON_FORMAT: &str = "relcon-comparison";
const COMPARISON_CSV_TAG: &str = "# relcon-comparison v";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "relcon",
    version,
    about = "Reliability-aware H-infinity drive control toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize an H-infinity speed controller for one control mode.
    Synthesize(SynthesizeArgs),
    /// Simulate a drive cycle in closed loop and write the time-series log.
    Simulate(SimulateArgs),
    /// Rainflow-count a log's junction temperature and report damage.
    Analyze(AnalyzeArgs),
    /// Run the full pipeline for both modes and compare them.
    Compare(CompareArgs),
    /// Write the default configuration, with provenance tags.
    Defaults(OutArg),
    /// Write the bundled WLTC class 3b speed profile as CSV.
    Wltc(OutArg),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Configuration file; defaults are used when absent.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// `performance_oriented` or `reliability_aware`.
    #[arg(long)]
    pub mode: ControlMode,
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub controller: PathBuf,
    /// Speed profile CSV; falls back to `paths.cycle`, then the bundled WLTC.
    #[arg(long)]
    pub cycle: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Simulation log, CSV or binary.
    #[arg(long)]
    pub log: PathBuf,
    #[command(flatten)]
    pub config: ConfigArg,
    /// Damage report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Histogram CSV; defaults to the report path with `.histogram.csv`.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub cycle: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error: 1 I/O, 2 usage or validation, 3 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::Json(e) if e.is_io() => EXIT_IO,
        Error::InvalidInput(_)
        | Error::Dimension(_)
        | Error::Contract(_)
        | Error::Parse { .. }
        | Error::OutOfRange(_)
        | Error::Json(_)
        | Error::Csv(_) => EXIT_USAGE,
        Error::Singular(_)
        | Error::NoStabilizingSolution(_)
        | Error::Unstable(_)
        | Error::Infeasible { .. }
        | Error::RankCondition(_)
        | Error::IllPosed
        | Error::Diverged { .. }
        | Error::NonFinite(_) => EXIT_NUMERICAL,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return e.exit_code();
        }
    };
    match run(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Synthesize(a) => cmd_synthesize(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Defaults(a) => emit(a, &ToolkitConfig::default().to_json_pretty(), out),
        Command::Wltc(a) => emit(a, &DriveCycle::wltc_class3b().to_csv(), out),
    }
}

fn emit(a: &OutArg, text: &str, out: &mut dyn Write) -> Result<()> {
    match &a.out {
        Some(p) => write_file(p, text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

/// Controller file: the realization plus its closed-loop verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerFile {
    pub schema_version: u32,
    pub format: String,
    pub verification: Verification,
    pub controller: ControllerRealization,
}

impl ControllerFile {
    pub fn new(controller: ControllerRealization, verification: Verification) -> Self {
        ControllerFile {
            schema_version: CONTROLLER_SCHEMA_VERSION,
            format: CONTROLLER_FORMAT.into(),
            verification,
            controller,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_header(
            &self.format,
            self.schema_version,
            CONTROLLER_FORMAT,
            CONTROLLER_SCHEMA_VERSION,
        )?;
        let (c, d) = (&self.controller.continuous, &self.controller.discrete);
        if !c.is_continuous() || d.dt().is_none() {
            return Err(Error::invalid(
                "controller needs continuous and discrete realizations",
            ));
        }
        if (c.n_inputs(), c.n_outputs()) != (d.n_inputs(), d.n_outputs()) {
            return Err(Error::Dimension(
                "continuous and discrete realizations differ in shape".into(),
            ));
        }
        if !(self.controller.gamma_achieved >= 0.0) {
            return Err(Error::invalid("gamma_achieved must be ≥ 0"));
        }
        Ok(())
    }
}

/// Damage report for one analyzed log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub schema_version: u32,
    pub format: String,
    /// Miner damage accrued over the log (one drive cycle).
    pub damage: f64,
    pub cycle_count: f64,
    pub cycles_per_day: f64,
    pub projected_cycles: Option<f64>,
    pub projected_years: Option<f64>,
    pub peak_tj: f64,
    pub energy_loss_j: Option<f64>,
}

impl ReportFile {
    pub fn new(report: &DamageReport, log: &SimulationLog) -> Self {
        let e = log.energy_loss();
        ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            format: REPORT_FORMAT.into(),
            damage: report.damage,
            cycle_count: report.cycle_count,
            cycles_per_day: report.cycles_per_day,
            projected_cycles: report.projection.cycles,
            projected_years: report.projection.years,
            peak_tj: log.peak_tj(),
            energy_loss_j: e.is_finite().then_some(e),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_header(
            &self.format,
            self.schema_version,
            REPORT_FORMAT,
            REPORT_SCHEMA_VERSION,
        )?;
        if !(self.damage >= 0.0) {
            return Err(Error::invalid("damage must be ≥ 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonFile {
    pub schema_version: u32,
    pub format: String,
    pub comparison: Comparison,
}

impl ComparisonFile {
    pub fn new(comparison: Comparison) -> Self {
        ComparisonFile {
            schema_version: COMPARISON_SCHEMA_VERSION,
            format: COMPARISON_FORMAT.into(),
            comparison,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_header(
            &self.format,
            self.schema_version,
            COMPARISON_FORMAT,
            COMPARISON_SCHEMA_VERSION,
        )
    }
}

fn check_header(format: &str, version: u32, want_format: &str, want_version: u32) -> Result<()> {
    if format != want_format {
        return Err(Error::invalid(format!(
            "expected a `{want_format}` file, got `{format}`"
        )));
    }
    if version != want_version {
        return Err(Error::invalid(format!(
            "{want_format} schema_version {version} is not supported (expected {want_version})"
        )));
    }
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_controller(path: &Path) -> Result<ControllerFile> {
    let f: ControllerFile = read_json(path)?;
    f.validate()?;
    Ok(f)
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    let f: ReportFile = read_json(path)?;
    f.validate()?;
    Ok(f)
}

pub fn read_comparison(path: &Path) -> Result<ComparisonFile> {
    let f: ComparisonFile = read_json(path)?;
    f.validate()?;
    Ok(f)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes") + "\n"
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// Loads the configuration and remembers its directory for relative paths.
fn load_config(a: &ConfigArg) -> Result<(ToolkitConfig, Option<PathBuf>)> {
    let cfg = ToolkitConfig::load(a.config.as_deref())?;
    let dir = a
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf);
    Ok((cfg, dir))
}

/// The explicit cycle, else `paths.cycle` resolved against the config
/// directory, else the bundled WLTC trace.
fn load_cycle(
    explicit: Option<&Path>,
    cfg: &ToolkitConfig,
    cfg_dir: Option<&Path>,
) -> Result<DriveCycle> {
    if let Some(p) = explicit {
        return DriveCycle::from_path(p);
    }
    match &cfg.paths.cycle.value {
        Some(p) => {
            let p = Path::new(p);
            match cfg_dir {
                Some(d) if p.is_relative() => DriveCycle::from_path(&d.join(p)),
                _ => DriveCycle::from_path(p),
            }
        }
        None => Ok(DriveCycle::wltc_class3b()),
    }
}

pub fn cmd_synthesize(a: &SynthesizeArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(&a.config)?;
    let s = pipeline::synthesize_mode(&cfg, a.mode)?;
    let file = ControllerFile::new(s.controller, s.verification);
    write_file(&a.out, &to_json(&file))?;
    let c = &file.controller;
    say(out, format_args!("mode: {}", c.mode_tag))?;
    say(out, format_args!("gamma_achieved: {:.6}", c.gamma_achieved))?;
    say(
        out,
        format_args!(
            "closed-loop norm: {:.6} (limit {:.6})",
            s.verification.closed_loop_norm,
            c.gamma_achieved * (1.0 + pipeline::VERIFY_TOL)
        ),
    )?;
    say(
        out,
        format_args!(
            "spectral abscissa: {:.6e}",
            s.verification.spectral_abscissa
        ),
    )?;
    say(out, format_args!("wrote {}", a.out.display()))
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, dir) = load_config(&a.config)?;
    let ctrl = read_controller(&a.controller)?;
    let cycle = load_cycle(a.cycle.as_deref(), &cfg, dir.as_deref())?;
    let log = pipeline::simulate(&cfg, &cycle, &ctrl.controller)?;
    write_file(&a.out, &log.to_csv())?;
    say(
        out,
        format_args!("cycle: {} ({} s)", cycle.name, cycle.duration()),
    )?;
    say(
        out,
        format_args!(
            "rmse_kmh: {:.6}",
            sim::tracking_rmse(&log, &cfg.vehicle_params())?
        ),
    )?;
    say(out, format_args!("energy_loss_j: {:.6}", log.energy_loss()))?;
    say(out, format_args!("peak_tj_c: {:.6}", log.peak_tj()))?;
    say(
        out,
        format_args!("wrote {} ({} rows)", a.out.display(), log.len()),
    )
}

pub fn histogram_path(report: &Path) -> PathBuf {
    report.with_extension("histogram.csv")
}

pub fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(&a.config)?;
    let log = SimulationLog::from_path(&a.log)?;
    let report = pipeline::analyze(&cfg, &log)?;
    let file = ReportFile::new(&report, &log);
    let hist = a
        .histogram
        .clone()
        .unwrap_or_else(|| histogram_path(&a.out));
    write_file(&a.out, &to_json(&file))?;
    write_file(&hist, &report.histogram.to_csv())?;
    say(out, format_args!("damage_per_cycle: {:.6e}", file.damage))?;
    say(out, format_args!("counted_cycles: {}", file.cycle_count))?;
    match (file.projected_cycles, file.projected_years) {
        (Some(c), Some(y)) => say(
            out,
            format_args!(
                "projected lifetime: {c:.1} drive cycles, {y:.2} years at {} cycles/day",
                file.cycles_per_day
            ),
        )?,
        _ => say(
            out,
            format_args!("projected lifetime: unbounded (no damage)"),
        )?,
    }
    say(
        out,
        format_args!("wrote {} and {}", a.out.display(), hist.display()),
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Comparison table as CSV, one row per mode.
pub fn comparison_csv(c: &Comparison) -> String {
    let mut s = format!(
        "{COMPARISON_CSV_TAG}{COMPARISON_SCHEMA_VERSION}\n\
         mode,gamma_achieved,rmse_kmh,energy_loss_j,peak_tj,damage,projected_cycles,projected_years\n"
    );
    for m in &c.modes {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.mode,
            m.gamma_achieved,
            m.rmse_kmh,
            m.energy_loss_j,
            m.peak_tj,
            m.damage,
            fmt_opt(m.projected_cycles),
            fmt_opt(m.projected_years)
        ));
    }
    s
}

pub fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, dir) = load_config(&a.config)?;
    let cycle = load_cycle(a.cycle.as_deref(), &cfg, dir.as_deref())?;
    let (cmp, perf, rel) = pipeline::compare(&cfg, &cycle)?;
    let d = &a.out_dir;
    write_file(&d.join("config.json"), &cfg.to_json_pretty())?;
    for run in [&perf, &rel] {
        let tag = run.summary.mode.to_string();
        let ctrl =
            ControllerFile::new(run.synthesis.controller.clone(), run.synthesis.verification);
        write_file(&d.join(format!("controller_{tag}.json")), &to_json(&ctrl))?;
        write_file(&d.join(format!("log_{tag}.csv")), &run.log.to_csv())?;
        write_file(
            &d.join(format!("report_{tag}.json")),
            &to_json(&ReportFile::new(&run.report, &run.log)),
        )?;
        write_file(
            &d.join(format!("histogram_{tag}.csv")),
            &run.report.histogram.to_csv(),
        )?;
    }
    write_file(&d.join("comparison.csv"), &comparison_csv(&cmp))?;
    write_file(
        &d.join("comparison.json"),
        &to_json(&ComparisonFile::new(cmp.clone())),
    )?;

    say(out, format_args!("cycle: {}", cmp.cycle))?;
    say(
        out,
        format_args!(
            "{:<22} {:>10} {:>12} {:>14} {:>10} {:>12} {:>10}",
            "mode", "gamma", "rmse_kmh", "energy_loss_j", "peak_tj", "damage", "years"
        ),
    )?;
    for m in &cmp.modes {
        say(
            out,
            format_args!(
                "{:<22} {:>10.4} {:>12.4} {:>14.1} {:>10.2} {:>12.4e} {:>10}",
                m.mode.to_string(),
                m.gamma_achieved,
                m.rmse_kmh,
                m.energy_loss_j,
                m.peak_tj,
                m.damage,
                m.projected_years
                    .map_or_else(|| "inf".into(), |y| format!("{y:.1}"))
            ),
        )?;
    }
    say(
        out,
        format_args!("damage reduction: {:.1} %", cmp.damage_reduction_percent),
    )?;
    say(out, format_args!("wrote {}", d.display()))
}
