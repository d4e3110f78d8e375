//! Command-line front end. Frequencies are typed in MHz and converted to
//! rad/µs here, once; times are µs and angles radians.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical or
//! consistency failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::berry::{simulate_ramp, BerryError, CurvatureTrace, RampProtocol};
use crate::config::KeyValueConfig;
use crate::hamiltonians::{
    circuit_outer_product, mhz_to_rad_per_us, CircuitParams, CoupledParams, FieldVector, Model,
    SignConvention, SingleSpinParams,
};
use crate::numerics::linspace;
use crate::output::{fmt_g12, to_json_string};
use crate::phases::{
    closed_form_points, default_scan_range, phase_diagram, scan_weyl_points, Method, Param,
    PhaseError, WeylPoint,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Largest allowed |scanned − closed form| in `weyl`, rad/µs.
pub const WEYL_AGREEMENT: f64 = 1e-4;
/// Largest allowed entrywise deviation in `circuit-check`.
pub const CIRCUIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "qutrit-topo", version, about = "Berry curvature and Chern numbers of coupled qutrits")]
struct Cli {
    /// Worker threads for phase diagrams (default: all processors).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ramp a single spin-1 and integrate the dynamical curvature.
    SingleRamp(SingleRampArgs),
    /// Ramp both qutrits of the coupled model.
    CoupledRamp(CoupledRampArgs),
    /// Chern number over a two-parameter grid.
    PhaseDiagram(PhaseDiagramArgs),
    /// List on-axis Weyl points, scanned and closed form.
    Weyl(WeylArgs),
    /// Compare the outer-product circuit Hamiltonian with its spin form.
    CircuitCheck(CircuitCheckArgs),
    /// Replay a run saved with --save-config.
    RunConfig(RunConfigArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Convention {
    Ramp,
    Circuit,
}

impl From<Convention> for SignConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Ramp => SignConvention::RampStyle,
            Convention::Circuit => SignConvention::CircuitStyle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Single,
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Analytic,
    Dynamical,
}

/// Where to write results and how to record the run.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct OutputArgs {
    /// Output file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the run as a JSON config replayable with `run-config`.
    #[arg(long)]
    #[serde(skip)]
    save_config: Option<PathBuf>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        match (self.format, &self.output) {
            (Some(f), _) => f,
            (None, Some(p)) if p.extension().is_some_and(|e| e == "json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct RampArgs {
    /// Ramp duration in µs.
    #[arg(long)]
    t_ramp: f64,
    /// Recorded samples along the ramp.
    #[arg(long, default_value_t = RampProtocol::DEFAULT_SAMPLES)]
    samples: usize,
    /// Azimuth of the ramp plane in radians.
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, value_enum, default_value_t = Convention::Ramp)]
    convention: Convention,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct SingleRampArgs {
    /// Offset field H0 in MHz.
    #[arg(long, allow_hyphen_values = true)]
    h0: f64,
    /// Field magnitude Hr in MHz.
    #[arg(long, allow_hyphen_values = true)]
    hr: f64,
    #[command(flatten)]
    ramp: RampArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct Couplings {
    /// Exchange coupling g in MHz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    g: f64,
    /// Ising coupling J_Z in MHz.
    #[arg(long = "j-z", default_value_t = 0.0, allow_hyphen_values = true)]
    j_z: f64,
    /// Double spin-flip coupling J_02 in MHz.
    #[arg(long = "j-02", default_value_t = 0.0, allow_hyphen_values = true)]
    j_02: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct CoupledRampArgs {
    /// Offset field H0 on site 1 in MHz.
    #[arg(long, allow_hyphen_values = true)]
    h0: f64,
    /// Field magnitude Hr in MHz.
    #[arg(long, allow_hyphen_values = true)]
    hr: f64,
    #[command(flatten)]
    couplings: Couplings,
    #[command(flatten)]
    ramp: RampArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct PhaseDiagramArgs {
    /// Horizontal parameter: h0, g, j_z or j_02.
    #[arg(long)]
    x: String,
    /// Vertical parameter: h0, g, j_z or j_02.
    #[arg(long)]
    y: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x_min: f64,
    /// Upper end of the x range in MHz.
    #[arg(long)]
    x_max: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    y_min: f64,
    /// Upper end of the y range in MHz.
    #[arg(long)]
    y_max: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 41)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
    method: MethodArg,
    /// Ramp duration in µs (dynamical method).
    #[arg(long)]
    t_ramp: Option<f64>,
    #[arg(long, default_value_t = RampProtocol::DEFAULT_SAMPLES)]
    samples: usize,
    /// Field magnitude Hr in MHz.
    #[arg(long, default_value_t = 10.0)]
    hr: f64,
    /// Fixed H0 in MHz when not swept.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    h0: f64,
    #[command(flatten)]
    couplings: Couplings,
    /// Also write an SVG heatmap here.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct WeylArgs {
    /// Offset field H0 in MHz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    h0: f64,
    /// Field magnitude Hr in MHz.
    #[arg(long, allow_hyphen_values = true)]
    hr: f64,
    #[command(flatten)]
    couplings: Couplings,
    #[arg(long, value_enum, default_value_t = Family::Coupled)]
    family: Family,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct CircuitCheckArgs {
    /// Circuit parameter file (`key = value` lines, MHz).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct RunConfigArgs {
    /// JSON file written by --save-config.
    #[arg(long)]
    config: PathBuf,
}

/// A recorded invocation: the subcommand and its flags as typed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    /// Flag values as given on the command line (MHz, µs, radians).
    pub parameters: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

impl RunConfig {
    fn record<T: Serialize>(subcommand: &str, args: &T, out: &OutputArgs) -> Self {
        let mut parameters = BTreeMap::new();
        flatten_into(&serde_json::to_value(args).expect("args serialize"), &mut parameters);
        parameters.remove("output");
        parameters.remove("format");
        Self {
            subcommand: subcommand.to_string(),
            parameters,
            output_path: out.output.clone(),
            format: out.format.map(|f| match f {
                Format::Csv => "csv".to_string(),
                Format::Json => "json".to_string(),
            }),
        }
    }

    /// Command-line arguments reproducing the run.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec!["qutrit-topo".to_string(), self.subcommand.clone()];
        for (key, value) in &self.parameters {
            let flag = format!("--{}", key.replace('_', "-"));
            match value {
                Value::Null => {}
                Value::String(s) => args.extend([flag, s.clone()]),
                other => args.extend([flag, other.to_string()]),
            }
        }
        if let Some(p) = &self.output_path {
            args.extend(["--output".to_string(), p.display().to_string()]);
        }
        if let Some(f) = &self.format {
            args.extend(["--format".to_string(), f.clone()]);
        }
        args
    }
}

fn flatten_into(value: &Value, out: &mut BTreeMap<String, Value>) {
    if let Value::Object(map) = value {
        for (k, v) in map {
            match v {
                Value::Object(_) => flatten_into(v, out),
                other => {
                    out.insert(k.clone(), other.clone());
                }
            }
        }
    }
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<BerryError> for Failure {
    fn from(e: BerryError) -> Self {
        match e {
            BerryError::InvalidProtocol(_) | BerryError::InvalidGrid(_) => Failure::usage(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

impl From<PhaseError> for Failure {
    fn from(e: PhaseError) -> Self {
        match e {
            PhaseError::UnknownParameter(_)
            | PhaseError::UnknownMethod(_)
            | PhaseError::MissingProtocol
            | PhaseError::InvalidGrid(_)
            | PhaseError::RangeTooNarrow { .. } => Failure::usage(e.to_string()),
            PhaseError::Berry(b) => b.into(),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::SingleRamp(a) => cmd_single_ramp(&a, out),
        Command::CoupledRamp(a) => cmd_coupled_ramp(&a, out),
        Command::PhaseDiagram(a) => cmd_phase_diagram(&a, cli.jobs, out),
        Command::Weyl(a) => cmd_weyl(&a, out),
        Command::CircuitCheck(a) => cmd_circuit_check(&a, out),
        Command::RunConfig(a) => cmd_run_config(&a, cli.jobs, out),
    }
}

fn save_config<T: Serialize>(subcommand: &str, args: &T, o: &OutputArgs) -> CmdResult {
    if let Some(path) = &o.save_config {
        let cfg = RunConfig::record(subcommand, args, o);
        write_file(path, &to_json_string(&cfg).expect("config serializes"))?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    std::fs::write(path, contents)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, line: &str) -> CmdResult {
    writeln!(out, "{line}").map_err(|e| Failure::numerical(format!("cannot write output: {e}")))
}

fn field(hr_mhz: f64, phi: f64) -> Result<FieldVector, Failure> {
    if !(hr_mhz > 0.0 && hr_mhz.is_finite()) {
        return Err(Failure::usage(format!("--hr must be positive and finite, got {hr_mhz}")));
    }
    FieldVector::new(mhz_to_rad_per_us(hr_mhz), 0.0, phi).map_err(|e| Failure::usage(e.to_string()))
}

fn finite(name: &str, v: f64) -> CmdResult {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must be finite")))
    }
}

fn finish_ramp(trace: &CurvatureTrace, o: &OutputArgs, out: &mut dyn Write) -> CmdResult {
    if let Some(path) = &o.output {
        let text = match o.format() {
            Format::Csv => trace.to_csv(),
            Format::Json => trace.to_json(),
        };
        write_file(path, &text)?;
    }
    emit(out, &trace.summary_line())
}

fn cmd_single_ramp(a: &SingleRampArgs, out: &mut dyn Write) -> CmdResult {
    finite("h0", a.h0)?;
    save_config("single-ramp", a, &a.out)?;
    let model = Model::Single(SingleSpinParams {
        h0: mhz_to_rad_per_us(a.h0),
        field: field(a.hr, a.ramp.phi)?,
        convention: a.ramp.convention.into(),
    });
    let protocol = RampProtocol::new(a.ramp.t_ramp, a.ramp.samples)?;
    let trace = simulate_ramp(&model, &protocol)?;
    finish_ramp(&trace, &a.out, out)
}

fn coupled_params(h0: f64, hr: f64, phi: f64, c: &Couplings, convention: SignConvention) -> Result<CoupledParams, Failure> {
    let params = CoupledParams {
        h0: mhz_to_rad_per_us(h0),
        field: field(hr, phi)?,
        g: mhz_to_rad_per_us(c.g),
        j_z: mhz_to_rad_per_us(c.j_z),
        j_02: mhz_to_rad_per_us(c.j_02),
        convention,
    };
    params.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(params)
}

fn cmd_coupled_ramp(a: &CoupledRampArgs, out: &mut dyn Write) -> CmdResult {
    save_config("coupled-ramp", a, &a.out)?;
    let params = coupled_params(a.h0, a.hr, a.ramp.phi, &a.couplings, a.ramp.convention.into())?;
    let protocol = RampProtocol::new(a.ramp.t_ramp, a.ramp.samples)?;
    let trace = simulate_ramp(&Model::Coupled(params), &protocol)?;
    finish_ramp(&trace, &a.out, out)
}

fn cmd_phase_diagram(a: &PhaseDiagramArgs, jobs: Option<usize>, out: &mut dyn Write) -> CmdResult {
    let x: Param = a.x.parse().map_err(|e: PhaseError| Failure::usage(e.to_string()))?;
    let y: Param = a.y.parse().map_err(|e: PhaseError| Failure::usage(e.to_string()))?;
    if a.steps < 2 {
        return Err(Failure::usage("--steps must be at least 2"));
    }
    for (name, lo, hi) in [("x", a.x_min, a.x_max), ("y", a.y_min, a.y_max)] {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Failure::usage(format!("--{name}-max must exceed --{name}-min")));
        }
    }
    let method = match a.method {
        MethodArg::Analytic => Method::Analytic,
        MethodArg::Dynamical => Method::Dynamical,
    };
    let protocol = match (method, a.t_ramp) {
        (Method::Dynamical, None) => return Err(Failure::usage("--method dynamical needs --t-ramp")),
        (_, Some(t)) => Some(RampProtocol::new(t, a.samples)?),
        (_, None) => None,
    };
    save_config("phase-diagram", a, &a.out)?;
    let fixed = coupled_params(a.h0, a.hr, 0.0, &a.couplings, SignConvention::RampStyle)?;
    let to_grid = |lo: f64, hi: f64| linspace(mhz_to_rad_per_us(lo), mhz_to_rad_per_us(hi), a.steps);
    let (xs, ys) = (to_grid(a.x_min, a.x_max), to_grid(a.y_min, a.y_max));

    let threads = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Failure::numerical(format!("cannot start worker pool: {e}")))?;
    let diagram = pool.install(|| phase_diagram(x, y, &xs, &ys, &fixed, method, protocol.as_ref()))?;

    if let Some(path) = &a.out.output {
        let text = match a.out.format() {
            Format::Csv => diagram.to_csv(),
            Format::Json => diagram.to_json(),
        };
        write_file(path, &text)?;
    }
    if let Some(path) = &a.svg {
        write_file(path, &diagram.to_svg())?;
    }
    let values: Vec<String> = diagram.distinct_values().iter().map(|v| v.to_string()).collect();
    let flagged = diagram.flagged.iter().flatten().filter(|f| **f).count();
    emit(
        out,
        &format!(
            "distinct={} count={} regions={} flagged={}",
            values.join(","),
            values.len(),
            diagram.region_count(),
            flagged
        ),
    )
}

/// Closed-form partner of a scanned point: same sector pair if present,
/// otherwise the nearest location.
fn partner<'a>(p: &WeylPoint, analytic: &'a [WeylPoint]) -> Option<&'a WeylPoint> {
    analytic
        .iter()
        .find(|a| a.gap_sector == p.gap_sector)
        .or_else(|| analytic.iter().min_by(|a, b| (a.h_z - p.h_z).abs().total_cmp(&(b.h_z - p.h_z).abs())))
}

fn cmd_weyl(a: &WeylArgs, out: &mut dyn Write) -> CmdResult {
    save_config("weyl", a, &a.out)?;
    let model = match a.family {
        Family::Single => Model::single(mhz_to_rad_per_us(a.h0), field(a.hr, 0.0)?),
        Family::Coupled => Model::Coupled(coupled_params(a.h0, a.hr, 0.0, &a.couplings, SignConvention::RampStyle)?),
    };
    let range = default_scan_range(&model)?;
    let scanned = scan_weyl_points(&model, range)?;
    let analytic = closed_form_points(&model).unwrap_or_default();
    let mut worst: f64 = 0.0;
    for p in &scanned {
        let mut line = p.to_string();
        if let Some(flux) = p.flux {
            line.push_str(&format!(" flux={}", fmt_g12(flux)));
        }
        match partner(p, &analytic) {
            Some(c) => {
                let delta = (p.h_z - c.h_z).abs();
                worst = worst.max(delta);
                line.push_str(&format!(" analytic={} delta={}", fmt_g12(c.h_z), fmt_g12(delta)));
            }
            None => line.push_str(" analytic=none"),
        }
        emit(out, &line)?;
    }
    if let Some(path) = &a.out.output {
        let text = match a.out.format() {
            Format::Json => to_json_string(&scanned).expect("points serialize"),
            Format::Csv => {
                let mut s = String::from("h_z,charge,sector_above,sector_below\n");
                for p in &scanned {
                    s.push_str(&format!("{},{},{},{}\n", fmt_g12(p.h_z), p.charge, p.gap_sector.0, p.gap_sector.1));
                }
                s
            }
        };
        write_file(path, &text)?;
    }
    if worst > WEYL_AGREEMENT {
        return Err(Failure::numerical(format!(
            "scanned and closed-form Weyl points differ by {}",
            fmt_g12(worst)
        )));
    }
    Ok(())
}

fn cmd_circuit_check(a: &CircuitCheckArgs, out: &mut dyn Write) -> CmdResult {
    save_config("circuit-check", a, &a.out)?;
    let cfg = KeyValueConfig::load(&a.config).map_err(|e| Failure::usage(e.to_string()))?;
    let params = CircuitParams::from_config(&cfg).map_err(|e| Failure::usage(e.to_string()))?;
    let full = circuit_outer_product(&params);
    let reduced = params.spin_form().hamiltonian();
    let deviation = full.max_abs_diff(&reduced);
    emit(out, &format!("deviation={}", fmt_g12(deviation)))?;
    if deviation > CIRCUIT_TOLERANCE {
        return Err(Failure::numerical(format!(
            "outer-product and spin-form Hamiltonians differ by {}",
            fmt_g12(deviation)
        )));
    }
    Ok(())
}

fn cmd_run_config(a: &RunConfigArgs, jobs: Option<usize>, out: &mut dyn Write) -> CmdResult {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", a.config.display())))?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("bad run config: {e}")))?;
    if cfg.subcommand == "run-config" {
        return Err(Failure::usage("run-config cannot replay itself"));
    }
    let mut args = cfg.to_args();
    if let Some(j) = jobs {
        args.extend(["--jobs".to_string(), j.to_string()]);
    }
    let cli = Cli::try_parse_from(&args).map_err(|e| Failure::usage(e.to_string()))?;
    dispatch(cli, out)
}
