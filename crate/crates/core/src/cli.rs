//! The `flapkit` command line: spring design, time-domain simulation,
//! frequency sweeps and the design report, all driven by one JSON config.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::actuator::calibrate_torque_constant;
use crate::budget::{build_report, SimulationSummary, REPORT_SCHEMA_VERSION};
use crate::config::{ConfigError, Project};
use crate::dynamics::{frequency_sweep, simulate, Sample, SimState};
use crate::error::{DesignError, DynamicsError};
use crate::spring::{design_spring, required_stiffness, SpringDesign};
use crate::units::{parse_quantity, Dimension, STANDARD_GRAVITY};

/// Environment variable capping sweep worker threads.
pub const THREADS_ENV: &str = "FLAPKIT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "flapkit",
    version,
    about = "Flapping-wing actuator design and simulation"
)]
pub struct Cli {
    /// Project config (JSON). Defaults to the built-in device config.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory. Defaults to the config's `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Size the torsion spring's beam bank.
    DesignSpring(DesignSpringArgs),
    /// Integrate the coupled stroke/pitch dynamics from rest.
    Simulate(SimulateArgs),
    /// Steady response over a range of drive frequencies.
    Sweep(SweepArgs),
    /// Published figures against computed ones.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Target {
    /// Stroke resonance to hit with the bare magnet, e.g. "130Hz".
    #[arg(long, value_parser = quantity(Dimension::Frequency))]
    pub target_freq: Option<f64>,
    /// Spring stiffness, e.g. "0.8uNm".
    #[arg(long, value_parser = quantity(Dimension::TorsionalStiffness))]
    pub target_stiffness: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DesignSpringArgs {
    #[command(flatten)]
    pub target: Target,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Drive periods to integrate. Defaults to the config value.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub cycles: Option<u64>,
    /// Keep every n-th sample in the time-series CSV.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub every: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Lowest drive frequency, e.g. "100Hz".
    #[arg(long, value_parser = quantity(Dimension::Frequency))]
    pub from: f64,
    /// Highest drive frequency.
    #[arg(long, value_parser = quantity(Dimension::Frequency))]
    pub to: f64,
    /// Evenly spaced grid points, ends included.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub points: u64,
    /// Worker threads; bare flag uses every core. Serial when absent.
    #[arg(long, num_args = 0..=1, default_missing_value = "0", value_name = "N")]
    pub parallel: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Both,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Simulation summary written by `simulate`.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

fn quantity(
    dim: Dimension,
) -> impl Fn(&str) -> Result<f64, String> + Clone + Send + Sync + 'static {
    move |s| {
        parse_quantity(s, dim)
            .map(|q| q.value)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read simulation summary {path}: {message}")]
    Summary { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Invalid(d)) | CliError::Design(d) => design_code(d),
            CliError::Config(_) | CliError::Io { .. } | CliError::Summary { .. } => EXIT_CONFIG,
            CliError::Dynamics(d) => dynamics_code(d),
        }
    }
}

fn design_code(e: &DesignError) -> i32 {
    match e {
        DesignError::Infeasible(_) => EXIT_INFEASIBLE,
        DesignError::Calibration(_) => EXIT_NUMERICAL,
        DesignError::Dynamics(d) => dynamics_code(d),
        _ => EXIT_CONFIG,
    }
}

fn dynamics_code(e: &DynamicsError) -> i32 {
    match e {
        DynamicsError::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    project: Project,
    out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.path(name);
        fs::create_dir_all(&self.out).map_err(|source| CliError::Io {
            path: self.out.clone(),
            source,
        })?;
        let f = File::create(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok((path, BufWriter::new(f)))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).expect("output serializes") + "\n";
        self.write_text(name, &text)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(path)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let project = match &cli.config {
        Some(p) => Project::load(p)?,
        None => Project::device(),
    };
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| project.output_dir.clone());
    let ctx = Ctx { project, out };
    match &cli.command {
        Command::DesignSpring(a) => cmd_design_spring(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::Report(a) => cmd_report(&ctx, a),
    }
}

#[derive(Serialize)]
struct SpringOutput<'a> {
    schema_version: u32,
    config_sha256: &'a str,
    target_frequency: Option<f64>,
    design: &'a SpringDesign,
}

fn cmd_design_spring(ctx: &Ctx, a: &DesignSpringArgs) -> Result<(), CliError> {
    let p = &ctx.project;
    let t = &p.spring_targets;
    let target = match (a.target.target_freq, a.target.target_stiffness) {
        (Some(f), _) => {
            let k = required_stiffness(p.magnet_mass, t.arc_radius, f).value;
            println!(
                "target stiffness {:.4} uNm ({:.3} mg at {:.3} mm, {} Hz)",
                k * 1e6,
                p.magnet_mass * 1e6,
                t.arc_radius * 1e3,
                f
            );
            k
        }
        (None, Some(k)) => {
            println!("target stiffness {:.4} uNm", k * 1e6);
            k
        }
        (None, None) => unreachable!("clap requires one target"),
    };
    let design = design_spring(target, &p.spring.material, &t.constraints)?;
    let s = &design.spec;
    println!(
        "{} beams, {:.1} um long, {:.1} um wide, {:.2} um thick: {:.4} uNm ({:+.2}%)",
        s.n_beams,
        s.beam_length * 1e6,
        s.beam_width * 1e6,
        s.beam_thickness * 1e6,
        design.achieved_stiffness * 1e6,
        design.relative_error * 100.0
    );
    let path = ctx.write_json(
        "spring.json",
        &SpringOutput {
            schema_version: REPORT_SCHEMA_VERSION,
            config_sha256: &p.sha256,
            target_frequency: a.target.target_freq,
            design: &design,
        },
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct Dump<'a> {
    config_sha256: &'a str,
    error: String,
    last_valid: SimState,
}

/// Configured torque constant, or one calibrated to the target stroke.
fn torque_constant(p: &Project) -> Result<(f64, bool), CliError> {
    if let Some(k) = p.torque_constant {
        return Ok((k, false));
    }
    let cal = calibrate_torque_constant(
        p.target_stroke,
        &p.sim_config(Some(0.0)),
        &p.simulation.settle,
    )?;
    eprintln!(
        "calibrated torque constant {:.4} uNm/A in {} runs ({:.3} deg stroke)",
        cal.torque_constant.0 * 1e6,
        cal.iterations,
        cal.achieved_amplitude.to_degrees()
    );
    Ok((cal.torque_constant.0, true))
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<(), CliError> {
    let p = &ctx.project;
    let (k_t, calibrated) = torque_constant(p)?;
    let cfg = p.sim_config(Some(k_t));
    let cycles = a.cycles.map_or(p.simulation.cycles, |c| c as usize);
    let run = match simulate(&cfg, cycles) {
        Ok(r) => r,
        Err(e) => {
            if let DynamicsError::Divergence { last_valid, .. } = &e {
                let path = ctx.write_json(
                    "last_state.json",
                    &Dump {
                        config_sha256: &p.sha256,
                        error: e.to_string(),
                        last_valid: *last_valid,
                    },
                )?;
                eprintln!("last valid state written to {}", path.display());
            }
            return Err(e.into());
        }
    };

    let (csv_path, mut w) = ctx.create("simulation.csv")?;
    writeln!(w, "# config_sha256={}", p.sha256).map_err(io_err(&csv_path))?;
    {
        let mut cw = csv::Writer::from_writer(&mut w);
        cw.write_record(Sample::CSV_HEADER)
            .map_err(csv_err(&csv_path))?;
        for s in run.samples.iter().step_by(a.every as usize) {
            cw.write_record(s.values().iter().map(|v| format!("{v:e}")))
                .map_err(csv_err(&csv_path))?;
        }
        cw.flush().map_err(io_err(&csv_path))?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    let st = &run.summary;
    let summary = SimulationSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        config_sha256: p.sha256.clone(),
        torque_constant: k_t,
        calibrated,
        target_stroke: p.target_stroke,
        steady: st.clone(),
    };
    let json_path = ctx.write_json("summary.json", &summary)?;

    let f_n = p.oscillator.natural_frequency();
    println!(
        "stroke amplitude {:.3} deg after {} cycles{}",
        st.stroke_amplitude.to_degrees(),
        st.cycles,
        if st.settled { "" } else { " (not settled)" }
    );
    println!(
        "pitch {:+.2} / {:+.2} deg, {:.2} deg at stroke extremes, {} reversals per cycle",
        st.pitch_max.to_degrees(),
        st.pitch_min.to_degrees(),
        st.pitch_at_stroke_extremes.to_degrees(),
        st.pitch_reversals
    );
    println!(
        "drive {:.2} Hz against {:.2} Hz resonance ({:+.3}% detuning)",
        st.frequency,
        f_n,
        (st.frequency / f_n - 1.0) * 100.0
    );
    println!(
        "electrical {:.4} mW (Joule {:.4} mW), drive {:.3} uW, aero {:.3} uW; mean lift {:.4} mg",
        st.mean_electrical_power * 1e3,
        st.mean_joule_power * 1e3,
        st.mean_drive_power * 1e6,
        st.mean_aero_power * 1e6,
        st.mean_lift / STANDARD_GRAVITY * 1e6
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

/// Worker count: serial by default, `--parallel` capped by the environment.
fn sweep_threads(parallel: Option<usize>) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let wanted = match parallel {
        None => 1,
        Some(0) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        Some(n) => n,
    };
    cap.map_or(wanted, |c| wanted.min(c))
}

fn cmd_sweep(ctx: &Ctx, a: &SweepArgs) -> Result<(), CliError> {
    let p = &ctx.project;
    let (k_t, _) = torque_constant(p)?;
    let cfg = p.sim_config(Some(k_t));
    let threads = sweep_threads(a.parallel);
    let points = frequency_sweep(
        &cfg,
        a.from,
        a.to,
        a.points as usize,
        &p.simulation.settle,
        Some(threads),
    )?;

    let (csv_path, mut w) = ctx.create("sweep.csv")?;
    writeln!(w, "# config_sha256={}", p.sha256).map_err(io_err(&csv_path))?;
    {
        let mut cw = csv::Writer::from_writer(&mut w);
        cw.write_record([
            "frequency_hz",
            "stroke_amplitude_deg",
            "mean_lift_mg",
            "mean_electrical_mw",
            "mean_aero_uw",
            "settled",
            "error",
        ])
        .map_err(csv_err(&csv_path))?;
        for pt in &points {
            cw.write_record([
                pt.frequency.to_string(),
                pt.stroke_amplitude.to_degrees().to_string(),
                (pt.mean_lift / STANDARD_GRAVITY * 1e6).to_string(),
                (pt.mean_electrical_power * 1e3).to_string(),
                (pt.mean_aero_power * 1e6).to_string(),
                pt.settled.to_string(),
                pt.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err(&csv_path))?;
        }
        cw.flush().map_err(io_err(&csv_path))?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    let mut dat = format!(
        "# config_sha256={}\n# frequency_hz stroke_amplitude_deg\n",
        p.sha256
    );
    for pt in points.iter().filter(|pt| pt.error.is_none()) {
        dat.push_str(&format!(
            "{} {}\n",
            pt.frequency,
            pt.stroke_amplitude.to_degrees()
        ));
    }
    let dat_path = ctx.write_text("sweep.dat", &dat)?;

    let failed = points.iter().filter(|pt| pt.error.is_some()).count();
    if let Some(peak) = points
        .iter()
        .filter(|pt| pt.error.is_none())
        .max_by(|x, y| x.stroke_amplitude.total_cmp(&y.stroke_amplitude))
    {
        println!(
            "peak stroke {:.3} deg at {:.3} Hz over {} points",
            peak.stroke_amplitude.to_degrees(),
            peak.frequency,
            points.len()
        );
    }
    if failed > 0 {
        eprintln!("warning: {failed} sweep points failed; see the error column");
    }
    println!("wrote {} and {}", csv_path.display(), dat_path.display());
    Ok(())
}

fn cmd_report(ctx: &Ctx, a: &ReportArgs) -> Result<(), CliError> {
    let p = &ctx.project;
    let summary = match &a.summary {
        None => None,
        Some(path) if !path.exists() => {
            eprintln!(
                "warning: simulation summary {} not found; writing the static report only",
                path.display()
            );
            None
        }
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Summary {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let s: SimulationSummary =
                serde_json::from_str(&text).map_err(|e| CliError::Summary {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            if s.schema_version != REPORT_SCHEMA_VERSION {
                return Err(CliError::Summary {
                    path: path.clone(),
                    message: format!("unsupported schema_version {}", s.schema_version),
                });
            }
            Some(s)
        }
    };
    let report = build_report(p, summary.as_ref())?;
    if matches!(a.format, Format::Json | Format::Both) {
        let path = ctx.write_text("report.json", &(report.to_json() + "\n"))?;
        eprintln!("wrote {}", path.display());
    }
    if matches!(a.format, Format::Text | Format::Both) {
        let text = report.to_text();
        print!("{text}");
        let path = ctx.write_text("report.txt", &text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_map_to_config_code() {
        assert_eq!(run(["flapkit", "simulate", "--cycles", "0"]), EXIT_CONFIG);
        assert_eq!(run(["flapkit", "design-spring"]), EXIT_CONFIG);
        assert_eq!(
            run(["flapkit", "design-spring", "--target-freq", "130 Hzz"]),
            EXIT_CONFIG
        );
        assert_eq!(run(["flapkit", "--help"]), EXIT_OK);
    }

    #[test]
    fn error_codes() {
        let inf = CliError::Design(DesignError::Infeasible("x".into()));
        assert_eq!(inf.exit_code(), EXIT_INFEASIBLE);
        let div = CliError::Dynamics(DynamicsError::Divergence {
            time: 0.0,
            stroke: 2.0,
            pitch: 0.0,
            last_valid: SimState::default(),
        });
        assert_eq!(div.exit_code(), EXIT_NUMERICAL);
        let bad = CliError::Config(ConfigError::Version(9));
        assert_eq!(bad.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn thread_cap() {
        assert_eq!(sweep_threads(None), 1);
        assert!(sweep_threads(Some(0)) >= 1);
    }
}
