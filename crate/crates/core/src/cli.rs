//! Command-line front end. Every handler writes to a caller-supplied sink so
//! the binary and the tests drive the same code.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;

use crate::atlas::Atlas;
use crate::config_io::formats::{capability_table, hee_mask_table, parse_bands, parse_capability};
use crate::config_io::report::{hee_mask_name, Artifact};
use crate::config_io::table::{fmt6, Table};
use crate::config_io::{emit_report, load_preregistration, verify_prereg_binding, Analyses, Dataset, MeasurementStamp, RunManifest};
use crate::envelope::{hee_coverage, margin_report, MarginMethod};
use crate::error::{Error, Result};
use crate::human_ref::{build_band_grid, OperatingBand};
use crate::scoring::{gated_hlas, hlas, FeatureWeights, PairInput, PairKey, ScoreBreakdown, WeightScheme, FEATURE_NAMES};
use crate::signals::frf::frf_table;
use crate::signals::{
    compute_frf, detect_plateau, find_crossover, fit_friction, loaded_bandwidth_check, log_efficiency, power_balance_check, sweep_freqs,
    TimeSeriesLog, DEFAULT_PLATEAU_WINDOW_S, DEFAULT_SLOPE_LIMIT_C_PER_S,
};
use crate::synthetic::{
    generate_backdrive_log, generate_capability_map, generate_sweep_log, generate_thermal_duty_log, log_spaced, BackdriveOptions,
    DutyProfile, NoiseSpec, SweepOptions, SyntheticActuator, ThermalOptions,
};

/// Feature weights of the efficiency-emphasis variant in the worked example.
pub const ALPHA_ALT: [f64; 6] = [0.10, 0.10, 0.40, 0.10, 0.20, 0.10];

/// Headroom used for the worked example's headroom sensitivity run.
pub const EXAMPLE_DELTA: f64 = 0.10;

#[derive(Debug, Parser)]
#[command(name = "hlas", version, about = "Score robot joints against human actuation demands")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a dataset against its preregistration.
    Score(ScoreArgs),
    /// HEE coverage and margins for one band and capability map.
    Hee(HeeArgs),
    /// Run one signal analysis on a log.
    Analyze {
        #[command(subcommand)]
        kind: AnalyzeKind,
    },
    /// Check a preregistration and, optionally, the files bound to it.
    ValidatePrereg(ValidateArgs),
    /// Generate synthetic maps and logs.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Recompute the bundled worked example and compare with its golden files.
    Example(ExampleArgs),
    /// Query the joint inventory and ROM norms.
    Atlas {
        #[command(subcommand)]
        cmd: AtlasCmd,
    },
}

/// Overrides for preregistered scheme parameters.
#[derive(Debug, Clone, Default, Args)]
pub struct SchemeFlags {
    /// Headroom factor δ applied inside the HEE test.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Breadth floor on HEE coverage.
    #[arg(long = "h-min")]
    pub h_min: Option<f64>,
    /// Minimum task score.
    #[arg(long = "s-min")]
    pub s_min: Option<f64>,
    /// Feature weights as six comma-separated values (rom,dof,hee,bandwidth,efficiency,thermal).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Report the gated score with these critical tasks.
    #[arg(long = "gate", value_name = "TASK")]
    pub gate: Vec<String>,
    /// Turn guardrail flags into failures.
    #[arg(long)]
    pub strict_gates: bool,
    /// Also report diagnostic torque and power margins (`min` or `quantile10`).
    #[arg(long = "margin-method")]
    pub margin_method: Option<String>,
}

fn parse_margin_method(s: &str) -> Result<MarginMethod> {
    MarginMethod::parse(s).ok_or_else(|| Error::InvalidParameter {
        name: "margin-method".into(),
        value: f64::NAN,
        rule: format!("`{s}` is not one of min, quantile10"),
    })
}

/// Torque and power margins of every measured pair.
pub fn margins_table(inputs: &IndexMap<PairKey, PairInput>, method: MarginMethod) -> Result<Table> {
    let mut t = Table::new(&["task", "joint", "torque_margin", "power_margin", "excluded"]);
    t.push_meta("method", method.as_str());
    for (key, input) in inputs {
        if let PairInput::Measured(m) = input {
            let r = margin_report(&m.band, &m.capability, method, None)?;
            t.push_row(vec![
                key.task.clone(),
                key.joint.clone(),
                fmt6(r.torque_margin),
                fmt6(r.power_margin),
                r.excluded.len().to_string(),
            ]);
        }
    }
    Ok(t)
}

impl SchemeFlags {
    pub fn apply(&self, scheme: &mut WeightScheme) -> Result<()> {
        if let Some(d) = self.delta {
            scheme.headroom_delta = d;
        }
        if let Some(h) = self.h_min {
            scheme.breadth_floor = Some(h);
        }
        if let Some(s) = self.s_min {
            scheme.task_gate = Some(s);
        }
        if let Some(a) = &self.alpha {
            let arr: [f64; 6] = a.as_slice().try_into().map_err(|_| value_count("--alpha", a.len(), 6))?;
            scheme.feature_weights = FeatureWeights::new(arr)?;
        }
        scheme.validate()
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Preregistration document.
    pub prereg: PathBuf,
    /// Directory holding the files named by the documents; defaults to the
    /// preregistration's directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Measurement document, relative to the data directory.
    #[arg(long, default_value = "measurements.toml")]
    pub measurements: String,
    /// Write the report bundle here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: SchemeFlags,
}

#[derive(Debug, Args)]
pub struct HeeArgs {
    /// Band file (`task,joint,q_deg,omega_rad_s,torque_hum_nm,power_hum_w`).
    #[arg(long)]
    pub band: PathBuf,
    /// Capability map file.
    #[arg(long)]
    pub capability: PathBuf,
    /// Pair to evaluate as `task/joint`; may be omitted when the band file holds one pair.
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long = "margin-method", default_value = "min")]
    pub margin_method: String,
    /// Write the HEE mask into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LogArgs {
    pub log: PathBuf,
    /// Artifact path; defaults to `<log>.<analysis>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeKind {
    /// Stepped-sine FRF and −3 dB crossover.
    Frf(LogArgs),
    /// Inertia, viscous and Coulomb friction from a backdrive log.
    Friction(LogArgs),
    /// Duty-cycle plateau torque and derating.
    Thermal {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long, default_value_t = DEFAULT_SLOPE_LIMIT_C_PER_S)]
        slope_limit: f64,
        #[arg(long, default_value_t = DEFAULT_PLATEAU_WINDOW_S)]
        window: f64,
    },
    /// Mechanical over electrical energy.
    Efficiency {
        #[command(flatten)]
        log: LogArgs,
        /// Restrict to `t0,t1` seconds.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
    },
    /// Power balance, and loaded-vs-unloaded bandwidth when both are given.
    Qc {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long)]
        loaded_crossover: Option<f64>,
        #[arg(long)]
        noload_crossover: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub prereg: PathBuf,
    /// Measurement files whose stamps must bind to this preregistration.
    pub files: Vec<PathBuf>,
    /// Print the canonical form.
    #[arg(long)]
    pub canonical: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ActuatorArgs {
    #[arg(long)]
    pub stall_torque: Option<f64>,
    #[arg(long)]
    pub torque_speed_slope: Option<f64>,
    #[arg(long)]
    pub j_ref: Option<f64>,
    #[arg(long)]
    pub b_visc: Option<f64>,
    #[arg(long)]
    pub f_coulomb: Option<f64>,
    /// Closed-loop torque crossover, Hz.
    #[arg(long)]
    pub crossover: Option<f64>,
    #[arg(long)]
    pub thermal_resistance: Option<f64>,
    #[arg(long)]
    pub thermal_time_constant: Option<f64>,
    #[arg(long)]
    pub copper_loss_coeff: Option<f64>,
    /// Gaussian noise standard deviation on measured torque.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ActuatorArgs {
    pub fn actuator(&self) -> SyntheticActuator {
        let mut a = SyntheticActuator::default();
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut a.stall_torque, self.stall_torque);
        set(&mut a.torque_speed_slope, self.torque_speed_slope);
        set(&mut a.j_ref, self.j_ref);
        set(&mut a.b_visc, self.b_visc);
        set(&mut a.f_coulomb, self.f_coulomb);
        set(&mut a.crossover_true, self.crossover);
        set(&mut a.thermal_resistance, self.thermal_resistance);
        set(&mut a.thermal_time_constant, self.thermal_time_constant);
        set(&mut a.copper_loss_coeff, self.copper_loss_coeff);
        a
    }

    fn noise(&self) -> Option<NoiseSpec> {
        (self.noise > 0.0).then_some(NoiseSpec { std: self.noise, seed: self.seed })
    }
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Linear torque-speed capability map on a regular grid.
    Capability {
        #[command(flatten)]
        act: ActuatorArgs,
        #[arg(long, default_value = "ankle")]
        joint: String,
        #[arg(long, default_value = "dorsi_plantar")]
        axis: String,
        #[arg(long, value_delimiter = ',', default_values_t = [-20.0, 20.0])]
        q_range: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 12.0])]
        omega_range: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        n_q: usize,
        #[arg(long, default_value_t = 5)]
        n_omega: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stepped-sine sweep through a single-pole torque loop.
    Sweep {
        #[command(flatten)]
        act: ActuatorArgs,
        #[arg(long, default_value_t = 1.0)]
        f_lo: f64,
        #[arg(long, default_value_t = 40.0)]
        f_hi: f64,
        #[arg(long, default_value_t = 25)]
        n_freqs: usize,
        #[arg(long, default_value_t = 5.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 2000.0)]
        sample_rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero-command backdrive record.
    Backdrive {
        #[command(flatten)]
        act: ActuatorArgs,
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value_t = 10.0)]
        perturbation: f64,
        #[arg(long, default_value_t = 1000.0)]
        sample_rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Thermal duty cycle with optional derating.
    Thermal {
        #[command(flatten)]
        act: ActuatorArgs,
        #[arg(long)]
        torque: f64,
        #[arg(long, default_value_t = 120.0)]
        duration: f64,
        /// Burst duty as `on_s,off_s`; continuous when omitted.
        #[arg(long, value_delimiter = ',')]
        bursts: Option<Vec<f64>>,
        #[arg(long)]
        temp_limit: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        #[arg(long, default_value_t = 1000.0)]
        sample_rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExampleArgs {
    /// Also score with the efficiency-emphasis feature weights.
    #[arg(long)]
    pub alpha_alt: bool,
    /// Report the gated score with these critical tasks.
    #[arg(long = "gate", value_name = "TASK")]
    pub gate: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AtlasCmd {
    /// Axes, directions and ROM norms of one joint.
    Show {
        joint: String,
        /// Override file (`joint,axis,category,lo_deg,hi_deg`).
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
}

/// Parses `args`, runs the command, reports errors on stderr and returns the
/// process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command_line = args.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>().join(" ");
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &command_line, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, command_line: &str, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Score(a) => cmd_score(a, command_line, out).map(|_| ()),
        Command::Hee(a) => cmd_hee(a, out),
        Command::Analyze { kind } => cmd_analyze(kind, out),
        Command::ValidatePrereg(a) => cmd_validate_prereg(a, out),
        Command::Synth { kind } => cmd_synth(kind, out),
        Command::Example(a) => cmd_example(a, command_line, out).map(|_| ()),
        Command::Atlas { cmd } => cmd_atlas(cmd, out),
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(Error::from)?
    };
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    }
    std::fs::write(path, text).map_err(|e| Error::from(e).in_file(path))
}

fn parse_log(path: &Path) -> Result<TimeSeriesLog> {
    TimeSeriesLog::parse(&read(path)?).map_err(|e| e.in_file(path))
}

fn parse_pair(s: &str) -> Result<PairKey> {
    s.split_once('/').map(|(t, j)| PairKey::new(t, j)).ok_or_else(|| Error::Malformed(format!("pair `{s}` is not `task/joint`")))
}

fn print_scores(out: &mut dyn Write, b: &ScoreBreakdown) -> Result<()> {
    for (task, s) in &b.task_scores {
        say!(out, "{task} {s:.3}");
    }
    say!(out, "HLAS {:.3}", b.hlas);
    for f in &b.guardrail_flags {
        say!(out, "guardrail: {f}");
    }
    Ok(())
}

/// Result of a scoring run.
#[derive(Debug, Clone)]
pub struct ScoreRun {
    pub breakdown: ScoreBreakdown,
    pub gated: Option<f64>,
    pub written: Vec<String>,
}

fn score_dataset(
    ds: &Dataset,
    flags: &SchemeFlags,
    analyses: Analyses,
    out_dir: Option<&Path>,
    command_line: &str,
    out: &mut dyn Write,
) -> Result<ScoreRun> {
    let binding = verify_prereg_binding(&ds.prereg, &ds.stamps);
    say!(out, "{binding}");
    if !binding.pass() {
        return Err(Error::BindingFailed(binding.findings));
    }
    let mut scheme = ds.prereg.scheme.clone();
    flags.apply(&mut scheme)?;
    let b = hlas(&ds.inputs, &scheme)?;
    print_scores(out, &b)?;
    let gated = if flags.gate.is_empty() {
        None
    } else {
        let g = gated_hlas(&b, &flags.gate)?;
        say!(out, "gated HLAS [{}] {g:.3}", flags.gate.join(", "));
        Some(g)
    };
    let margins = match &flags.margin_method {
        Some(name) => {
            let t = margins_table(&ds.inputs, parse_margin_method(name)?)?;
            for r in &t.rows {
                say!(out, "margin {}/{} torque {} power {}", r.str(0), r.str(1), r.str(2), r.str(3));
            }
            Some(t)
        }
        None => None,
    };
    if flags.strict_gates {
        b.enforce_guardrails()?;
    }
    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        let mut analyses = analyses;
        analyses.rom_overlay = ds.rom_overlay.clone();
        analyses.summary_extra.push(("prereg_digest".into(), ds.prereg.digest.clone()));
        if let Some(g) = gated {
            analyses.summary_extra.push((format!("gated_hlas[{}]", flags.gate.join(";")), fmt6(g)));
        }
        let mut bundle = emit_report(&b, &analyses)?;
        if let Some(t) = margins {
            bundle.artifacts.push(Artifact { name: "margins.csv".into(), table: t });
        }
        let mut run = RunManifest::new(command_line);
        run.inputs = ds.input_digests.clone();
        written = bundle.write_to(dir, &run)?;
        for f in &bundle.flags {
            say!(out, "flag: {f}");
        }
        say!(out, "wrote {} file(s) to {}", written.len(), dir.display());
    }
    Ok(ScoreRun { breakdown: b, gated, written })
}

pub fn cmd_score(a: &ScoreArgs, command_line: &str, out: &mut dyn Write) -> Result<ScoreRun> {
    let dir = a.data.clone().or_else(|| a.prereg.parent().map(Path::to_path_buf)).unwrap_or_default();
    let prereg_label = a.prereg.display().to_string();
    let ds = Dataset::load(&prereg_label, &a.measurements, |name| {
        if name == prereg_label {
            read(&a.prereg)
        } else {
            Ok(std::fs::read_to_string(dir.join(name))?)
        }
    })?;
    score_dataset(&ds, &a.flags, Analyses::default(), a.out.as_deref(), command_line, out)
}

pub fn cmd_hee(a: &HeeArgs, out: &mut dyn Write) -> Result<()> {
    let method = parse_margin_method(&a.margin_method)?;
    let mut bands = parse_bands(&read(&a.band)?).map_err(|e| e.in_file(&a.band))?;
    let key = match &a.pair {
        Some(p) => parse_pair(p)?,
        None if bands.len() == 1 => bands.keys().next().cloned().expect("one band"),
        None => return Err(Error::Malformed(format!("{} holds {} pairs; choose one with --pair", a.band.display(), bands.len()))),
    };
    let samples = bands.shift_remove(&key).ok_or_else(|| Error::Malformed(format!("no band for {key}")).in_file(&a.band))?;
    let band = OperatingBand::new(&key.task, &key.joint, samples, Default::default())?;
    let caps = parse_capability(&read(&a.capability)?).map_err(|e| e.in_file(&a.capability))?;
    let map = caps
        .get(&key.joint)
        .ok_or_else(|| Error::Malformed(format!("no capability map for joint `{}`", key.joint)).in_file(&a.capability))?;
    let hee = hee_coverage(&band, map, a.delta)?;
    say!(out, "HEE {key} = {:.3} (delta {:.2})", hee.coverage, a.delta);
    let rates = hee.passing_rates().iter().map(|w| format!("{w}")).collect::<Vec<_>>().join(", ");
    say!(out, "passing rates {{{rates}}} rad/s");
    let m = margin_report(&band, map, method, None)?;
    say!(out, "torque margin ({}) {:.3}", method.as_str(), m.torque_margin);
    say!(out, "power margin ({}) {:.3}", method.as_str(), m.power_margin);
    if !m.excluded.is_empty() {
        say!(out, "excluded {} sample(s) with nonpositive demand", m.excluded.len());
    }
    if let Some(dir) = &a.out {
        let path = dir.join(hee_mask_name(&key));
        write_file(&path, &hee_mask_table(&key, &hee, a.delta).to_text())?;
        say!(out, "wrote {}", path.display());
    }
    Ok(())
}

fn artifact_path(a: &LogArgs, kind: &str) -> PathBuf {
    a.out.clone().unwrap_or_else(|| {
        let mut name = a.log.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".{kind}.csv"));
        a.log.with_file_name(name)
    })
}

fn key_values(rows: &[(&str, String)]) -> Table {
    let mut t = Table::new(&["key", "value"]);
    for (k, v) in rows {
        t.push_row(vec![k.to_string(), v.clone()]);
    }
    t
}

pub fn cmd_analyze(kind: &AnalyzeKind, out: &mut dyn Write) -> Result<()> {
    match kind {
        AnalyzeKind::Frf(a) => {
            let log = parse_log(&a.log)?;
            let frf = compute_frf(&log, &sweep_freqs(&log).map_err(|e| e.in_file(&a.log))?).map_err(|e| e.in_file(&a.log))?;
            let c = find_crossover(&frf)?;
            say!(out, "{c}");
            if c.non_monotone() {
                say!(out, "note: magnitude crosses -3 dB more than once; the first crossing is reported");
            }
            let path = artifact_path(a, "frf");
            write_file(&path, &frf_table(&frf, Some(&c)).to_text())?;
            say!(out, "wrote {}", path.display());
        }
        AnalyzeKind::Friction(a) => {
            let log = parse_log(&a.log)?;
            let f = fit_friction(&log).map_err(|e| e.in_file(&a.log))?;
            say!(out, "J_ref = {:.6} kg m^2, b = {:.6} Nm s/rad, f_c = {:.6} Nm", f.j_ref, f.b_visc, f.f_coulomb);
            say!(out, "backdrive p95 = {:.4} Nm, residual rms = {:.3e} Nm", f.backdrive_p95, f.residual_rms);
            let path = artifact_path(a, "friction");
            let t = key_values(&[
                ("j_ref_kg_m2", format!("{}", f.j_ref)),
                ("b_visc_nm_s_rad", format!("{}", f.b_visc)),
                ("f_coulomb_nm", format!("{}", f.f_coulomb)),
                ("backdrive_p95_nm", format!("{}", f.backdrive_p95)),
                ("residual_rms_nm", format!("{}", f.residual_rms)),
                ("iterations", f.iterations.to_string()),
            ]);
            write_file(&path, &t.to_text())?;
            say!(out, "wrote {}", path.display());
        }
        AnalyzeKind::Thermal { log: a, slope_limit, window } => {
            let log = parse_log(&a.log)?;
            let r = detect_plateau(&log, *slope_limit, *window).map_err(|e| e.in_file(&a.log))?;
            say!(out, "plateau torque {:.3} Nm ({window} s windows, slope < {slope_limit} C/s)", r.torque_cont);
            match r.time_to_derate {
                Some(t) => say!(out, "derating at {t:.3} s"),
                None => say!(out, "no derating"),
            }
            let steady = if r.is_steady(crate::signals::thermal::DEFAULT_STEADY_SLOPE_C_PER_MIN) { "steady" } else { "not steady" };
            say!(out, "final motor {:.2} C, gear {:.2} C, {steady}", r.final_temp_motor, r.final_temp_gear);
            let path = artifact_path(a, "thermal");
            let t = key_values(&[
                ("torque_cont_nm", format!("{}", r.torque_cont)),
                ("time_to_derate_s", r.time_to_derate.map_or(String::new(), |t| format!("{t}"))),
                ("final_temp_motor_c", format!("{}", r.final_temp_motor)),
                ("final_temp_gear_c", format!("{}", r.final_temp_gear)),
                ("final_slope_c_per_s", format!("{}", r.final_slope_c_per_s)),
            ]);
            write_file(&path, &t.to_text())?;
            say!(out, "wrote {}", path.display());
        }
        AnalyzeKind::Efficiency { log: a, window } => {
            let log = parse_log(&a.log)?;
            let w = window.as_deref().map(|w| two("--window", w)).transpose()?;
            let e = log_efficiency(&log, w).map_err(|e| e.in_file(&a.log))?;
            match e.efficiency.value() {
                Some(eta) => say!(out, "efficiency {eta:.4} (P_mech {:.3} W, P_elec {:.3} W)", e.p_mech, e.p_elec),
                None => say!(out, "efficiency excluded: no net positive mechanical power"),
            }
            if e.regeneration_present {
                say!(out, "flag: negative mechanical power present; regeneration is not credited");
            }
            let path = artifact_path(a, "efficiency");
            let t = key_values(&[
                ("p_mech_w", format!("{}", e.p_mech)),
                ("p_elec_w", format!("{}", e.p_elec)),
                ("efficiency", e.efficiency.value().map_or(String::new(), |v| format!("{v}"))),
                ("regeneration_present", u8::from(e.regeneration_present).to_string()),
            ]);
            write_file(&path, &t.to_text())?;
            say!(out, "wrote {}", path.display());
        }
        AnalyzeKind::Qc { log: a, loaded_crossover, noload_crossover } => {
            let log = parse_log(&a.log)?;
            log.validate().map_err(|e| e.in_file(&a.log))?;
            let pb = power_balance_check(&log);
            say!(
                out,
                "power balance {}: mechanical {:.3} J, electrical {:.3} J",
                if pb.pass { "PASS" } else { "FAIL" },
                pb.mechanical_j,
                pb.electrical_j
            );
            let mut rows = vec![
                ("mechanical_j", format!("{}", pb.mechanical_j)),
                ("electrical_j", format!("{}", pb.electrical_j)),
                ("power_balance_pass", u8::from(pb.pass).to_string()),
            ];
            let mut failures = Vec::new();
            if !pb.pass {
                failures.push(format!("mechanical energy {:.3} J exceeds electrical {:.3} J", pb.mechanical_j, pb.electrical_j));
            }
            if let (Some(l), Some(n)) = (loaded_crossover, noload_crossover) {
                let ok = loaded_bandwidth_check(*l, *n);
                say!(out, "loaded bandwidth {}: {l} Hz loaded vs {n} Hz unloaded", if ok { "PASS" } else { "FAIL" });
                rows.push(("loaded_bandwidth_pass", u8::from(ok).to_string()));
                if !ok {
                    failures.push(format!("loaded crossover {l} Hz exceeds unloaded {n} Hz"));
                }
            }
            let path = artifact_path(a, "qc");
            write_file(&path, &key_values(&rows).to_text())?;
            say!(out, "wrote {}", path.display());
            if !failures.is_empty() {
                return Err(Error::QcFailed(failures.join("; ")).in_file(&a.log));
            }
        }
    }
    Ok(())
}

pub fn cmd_validate_prereg(a: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let p = load_preregistration(&read(&a.prereg)?).map_err(|e| e.in_file(&a.prereg))?;
    say!(
        out,
        "preregistration OK: {} task(s), {} pair(s), {} band file(s)",
        p.scheme.task_weights.len(),
        p.scheme.pairs().count(),
        p.bands.len()
    );
    say!(out, "created {}", p.created.to_rfc3339());
    say!(out, "digest {}", p.digest);
    if a.canonical {
        say!(out, "{}", p.canonical());
    }
    if a.files.is_empty() {
        return Ok(());
    }
    let mut stamps = Vec::new();
    for f in &a.files {
        let name = f.display().to_string();
        stamps.push(MeasurementStamp::read(&name, &read(f)?).map_err(|e| e.in_file(f))?);
    }
    let report = verify_prereg_binding(&p, &stamps);
    say!(out, "{report}");
    if report.pass() {
        Ok(())
    } else {
        Err(Error::BindingFailed(report.findings))
    }
}

fn value_count(flag: &str, got: usize, want: usize) -> Error {
    Error::InvalidParameter { name: flag.into(), value: got as f64, rule: format!("needs {want} comma-separated values") }
}

fn two(flag: &str, v: &[f64]) -> Result<(f64, f64)> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(value_count(flag, v.len(), 2)),
    }
}

pub fn cmd_synth(kind: &SynthKind, out: &mut dyn Write) -> Result<()> {
    let (path, text) = match kind {
        SynthKind::Capability { act, joint, axis, q_range, omega_range, n_q, n_omega, out } => {
            let grid = build_band_grid(two("--q-range", q_range)?, two("--omega-range", omega_range)?, *n_q, *n_omega)?;
            let map = generate_capability_map(&act.actuator(), joint, axis, &grid)?;
            (out, capability_table(&[&map]).to_text())
        }
        SynthKind::Sweep { act, f_lo, f_hi, n_freqs, amplitude, sample_rate, out } => {
            let opts = SweepOptions { sample_rate: *sample_rate, noise: act.noise(), ..Default::default() };
            (out, generate_sweep_log(&act.actuator(), &log_spaced(*f_lo, *f_hi, *n_freqs), *amplitude, opts)?.to_text())
        }
        SynthKind::Backdrive { act, duration, perturbation, sample_rate, out } => {
            let opts = BackdriveOptions { sample_rate: *sample_rate, duration: *duration, perturbation: *perturbation, noise: act.noise() };
            (out, generate_backdrive_log(&act.actuator(), opts)?.to_text())
        }
        SynthKind::Thermal { act, torque, duration, bursts, temp_limit, omega, sample_rate, out } => {
            let profile = match bursts {
                Some(b) => {
                    let (on_s, off_s) = two("--bursts", b)?;
                    DutyProfile::Bursts { on_s, off_s }
                }
                None => DutyProfile::Continuous,
            };
            let opts = ThermalOptions {
                sample_rate: *sample_rate,
                duration: *duration,
                omega: *omega,
                temp_limit_c: *temp_limit,
                noise: act.noise(),
            };
            (out, generate_thermal_duty_log(&act.actuator(), profile, *torque, opts)?.to_text())
        }
    };
    write_file(path, &text)?;
    say!(out, "wrote {}", path.display());
    Ok(())
}

pub fn cmd_atlas(cmd: &AtlasCmd, out: &mut dyn Write) -> Result<()> {
    match cmd {
        AtlasCmd::Show { joint, overrides } => {
            let mut atlas = Atlas::builtin();
            if let Some(p) = overrides {
                atlas.apply_overrides(&read(p)?).map_err(|e| e.in_file(p))?;
            }
            let text = atlas.show(joint).ok_or_else(|| Error::UnknownJoint(joint.clone()))?;
            write!(out, "{text}").map_err(Error::from)?;
        }
    }
    Ok(())
}

const EXAMPLE_FILES: [(&str, &str); 5] = [
    ("prereg.toml", include_str!("../data/worked_example/prereg.toml")),
    ("measurements.toml", include_str!("../data/worked_example/measurements.toml")),
    ("bands.csv", include_str!("../data/worked_example/bands.csv")),
    ("capability.csv", include_str!("../data/worked_example/capability.csv")),
    ("efficiency.csv", include_str!("../data/worked_example/efficiency.csv")),
];

pub const GOLDEN_PAIR_FACTORS: &str = include_str!("../data/worked_example/golden/pair_factors.csv");
pub const GOLDEN_SCORES: &str = include_str!("../data/worked_example/golden/scores.csv");
pub const GOLDEN_SENSITIVITY: &str = include_str!("../data/worked_example/golden/sensitivity.csv");

/// The bundled worked example: three tasks, nine joint-task pairs.
pub fn worked_example() -> Result<Dataset> {
    Dataset::load("prereg.toml", "measurements.toml", |name| {
        EXAMPLE_FILES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| Error::Io(format!("no bundled file `{name}`")))
    })
}

/// Compares `values` with a `key,value,tolerance` golden table. Golden keys
/// absent from `values` are skipped; returns (cells checked, mismatches).
pub fn compare_golden(golden: &str, values: &IndexMap<String, f64>) -> Result<(usize, Vec<String>)> {
    let t = Table::parse(golden)?;
    t.expect_columns(&["key", "value", "tolerance"])?;
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for r in &t.rows {
        let key = r.str(0);
        let Some(&got) = values.get(key) else { continue };
        let want = r.f64(1, "value")?;
        let tol = r.f64(2, "tolerance")?;
        checked += 1;
        if !((got - want).abs() <= tol) {
            mismatches.push(format!("{key}: got {got:.6}, expected {want} +/- {tol}"));
        }
    }
    Ok((checked, mismatches))
}

/// Every worked-example quantity, keyed as in the golden files.
#[derive(Debug, Clone)]
pub struct ExampleRun {
    pub baseline: ScoreBreakdown,
    pub headroom: ScoreBreakdown,
    pub alpha_alt: Option<ScoreBreakdown>,
    pub gated: Option<f64>,
    pub values: IndexMap<String, f64>,
    pub checked: usize,
    pub mismatches: Vec<String>,
}

pub fn run_example(args: &ExampleArgs) -> Result<(Dataset, ExampleRun)> {
    let ds = worked_example()?;
    let scheme = ds.prereg.scheme.clone();
    let baseline = hlas(&ds.inputs, &scheme)?;
    let mut v = IndexMap::new();
    for p in &baseline.pairs {
        for (name, x) in FEATURE_NAMES.iter().zip(p.features.as_array()) {
            v.insert(format!("{}/{}/{name}", p.key.task, p.key.joint), x);
        }
        v.insert(format!("{}/{}/score", p.key.task, p.key.joint), p.score);
        v.insert(format!("contribution/{}/{}", p.key.task, p.key.joint), p.contribution);
    }
    for (t, s) in &baseline.task_scores {
        v.insert(format!("task/{t}"), *s);
    }
    v.insert("hlas".into(), baseline.hlas);

    let mut s = scheme.clone();
    s.headroom_delta = EXAMPLE_DELTA;
    let headroom = hlas(&ds.inputs, &s)?;
    for (t, x) in &headroom.task_scores {
        v.insert(format!("delta_0.10/task/{t}"), *x);
    }
    v.insert("delta_0.10/hlas".into(), headroom.hlas);

    let alpha_alt = if args.alpha_alt {
        let mut s = scheme.clone();
        s.feature_weights = FeatureWeights::new(ALPHA_ALT)?;
        let b = hlas(&ds.inputs, &s)?;
        v.insert("alpha_alt/hlas".into(), b.hlas);
        Some(b)
    } else {
        None
    };
    let gated = if args.gate.is_empty() {
        None
    } else {
        let g = gated_hlas(&baseline, &args.gate)?;
        v.insert(format!("gated/{}", args.gate.join("+")), g);
        Some(g)
    };

    let mut checked = 0;
    let mut mismatches = Vec::new();
    for golden in [GOLDEN_PAIR_FACTORS, GOLDEN_SCORES, GOLDEN_SENSITIVITY] {
        let (n, m) = compare_golden(golden, &v)?;
        checked += n;
        mismatches.extend(m);
    }
    Ok((ds, ExampleRun { baseline, headroom, alpha_alt, gated, values: v, checked, mismatches }))
}

fn sensitivity_table(run: &ExampleRun) -> Table {
    let mut t = Table::new(&["variant", "parameter", "hlas"]);
    t.push_row(vec!["baseline".into(), "delta=0".into(), fmt6(run.baseline.hlas)]);
    t.push_row(vec!["headroom".into(), format!("delta={EXAMPLE_DELTA}"), fmt6(run.headroom.hlas)]);
    if let Some(b) = &run.alpha_alt {
        let a = ALPHA_ALT.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";");
        t.push_row(vec!["alpha_alt".into(), format!("alpha={a}"), fmt6(b.hlas)]);
    }
    t
}

pub fn cmd_example(args: &ExampleArgs, command_line: &str, out: &mut dyn Write) -> Result<ExampleRun> {
    let (ds, run) = run_example(args)?;
    say!(out, "{}", verify_prereg_binding(&ds.prereg, &ds.stamps));
    say!(out, "task,joint,{},score,contribution", FEATURE_NAMES.join(","));
    for p in &run.baseline.pairs {
        let x = p.features.as_array().map(|x| format!("{x:.3}")).join(",");
        say!(out, "{},{},{x},{:.3},{:.3}", p.key.task, p.key.joint, p.score, p.contribution);
    }
    print_scores(out, &run.baseline)?;
    let tasks = run.headroom.task_scores.iter().map(|(t, s)| format!("{t} {s:.3}")).collect::<Vec<_>>().join(", ");
    say!(out, "delta {EXAMPLE_DELTA:.2}: HLAS {:.3} ({tasks})", run.headroom.hlas);
    if let Some(h) = run.headroom.hee.get(&PairKey::new("Walk", "ankle")) {
        say!(out, "delta {EXAMPLE_DELTA:.2}: HEE Walk/ankle {:.3}", h.coverage);
    }
    if let Some(b) = &run.alpha_alt {
        say!(out, "alpha_alt: HLAS {:.3}", b.hlas);
    }
    if let Some(g) = run.gated {
        say!(out, "gated HLAS [{}] {g:.3}", args.gate.join(", "));
    }
    if let Some(dir) = &args.out {
        let mut analyses = Analyses { rom_overlay: ds.rom_overlay.clone(), ..Default::default() };
        analyses.summary_extra.push(("hlas_delta_0.10".into(), fmt6(run.headroom.hlas)));
        if let Some(b) = &run.alpha_alt {
            analyses.summary_extra.push(("hlas_alpha_alt".into(), fmt6(b.hlas)));
        }
        if let Some(g) = run.gated {
            analyses.summary_extra.push((format!("gated_hlas[{}]", args.gate.join(";")), fmt6(g)));
        }
        let mut bundle = emit_report(&run.baseline, &analyses)?;
        bundle.artifacts.push(Artifact { name: "sensitivity.csv".into(), table: sensitivity_table(&run) });
        let mut manifest = RunManifest::new(command_line);
        manifest.inputs = ds.input_digests.clone();
        let written = bundle.write_to(dir, &manifest)?;
        say!(out, "wrote {} file(s) to {}", written.len(), dir.display());
    }
    if run.mismatches.is_empty() {
        say!(out, "golden: {} cell(s) within tolerance", run.checked);
        Ok(run)
    } else {
        say!(out, "golden: {} of {} cell(s) outside tolerance", run.mismatches.len(), run.checked);
        Err(Error::GoldenMismatch(run.mismatches))
    }
}
