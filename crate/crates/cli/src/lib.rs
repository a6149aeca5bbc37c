//! Config-driven front end: spectral/fidelity reports, band sweeps, Proctor
//! scans and simulated RB runs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use rbcompare::analytic::{
    build_m, fig1_sweep, infidelity_bound, lgr_geometry, nonunital_spectrum, perturb_series, spectral_report,
    InfidelityBound, MOperator, NonunitalSpectrum, SpectralReport,
};
use rbcompare::channels::{
    effective_right_unitary_angle, noisy_gateset, pauli_channel, NoiseModel, PauliParams,
};
use rbcompare::clifford::CliffordGroup;
use rbcompare::metrics::{gateset_report, infidelity, rb_number, FidelityReport};
use rbcompare::montecarlo::{
    fit_exponential_fixed_offset, run_rb, validate_against_spectrum, RbConfig, RbRun, SpectrumValidation,
};
use rbcompare::superop::Superop;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODEL: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

const EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Spectral,
    Montecarlo,
    Perturbative,
    Bounds,
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Spectral]
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub noise: NoiseModel<f64>,
    #[serde(default)]
    pub rb: Option<RbConfig>,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default = "default_analyses")]
    pub analyses: Vec<Analysis>,
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed configuration.
    Parse(String),
    /// Well-formed but physically or structurally invalid model.
    Model(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Model(_) => EXIT_MODEL,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "config error: {m}"),
            CliError::Model(m) => write!(f, "invalid model: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<rbcompare::Error> for CliError {
    fn from(e: rbcompare::Error) -> Self {
        use rbcompare::Error as E;
        match e {
            E::NotTracePreserving(_)
            | E::DimensionMismatch { .. }
            | E::UnsupportedDimension(_)
            | E::InvalidProbability(_)
            | E::ZeroAxis
            | E::OutOfRange { .. }
            | E::ModelTableIncomplete(_)
            | E::NotCptp(_)
            | E::LengthMismatch { .. }
            | E::InvalidConfig(_) => CliError::Model(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rbcompare", version, about = "RB decay rate versus average gate-set fidelity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral and fidelity report for a noise model (report.json).
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Admissible q/alpha band against beta (fig1.csv).
    SweepFig1 {
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Infidelity and RB number of the primitive-compiled gate set (proctor_scan.csv).
    ProctorScan {
        /// Comma-separated angles.
        #[arg(long, value_delimiter = ',', default_values_t = default_thetas())]
        theta: Vec<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on the sequence lengths of the simulated runs.
        #[arg(long, default_value_t = SCAN_MAX_LENGTH)]
        max_length: usize,
    },
    /// Simulated RB run (rb_run.json, rb_run.csv).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn default_thetas() -> Vec<f64> {
    vec![0.02, 0.03, 0.05, 0.07, 0.1]
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    if cfg.analyses.is_empty() {
        return Err(CliError::Model("analyses must not be empty".into()));
    }
    if let Some(rb) = &cfg.rb {
        rb.validate()?;
    }
    Ok(cfg)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Numeric(format!("{}: {e}", path.display())))
}

fn out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Numeric(format!("{}: {e}", dir.display())))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Numeric(format!("{}: {e}", path.display())))
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Gate-independent `(L, R)` when the model has that form.
fn lr_pair(model: &NoiseModel<f64>) -> CliResult<Option<(Superop<f64>, Superop<f64>)>> {
    Ok(match model {
        NoiseModel::GateIndependentLr { left, right } => Some((left.build()?, right.build()?)),
        NoiseModel::PauliLr { l, s } => Some((
            pauli_channel(&PauliParams::new(*l)?),
            pauli_channel(&PauliParams::new(*s)?),
        )),
        _ => None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Perturbative {
    pub theta: f64,
    pub valid_to: usize,
    /// `p^(n)` for `n = 1..=valid_to`.
    pub coefficients: Vec<f64>,
    pub p_series: f64,
    pub brackets: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub spectral: SpectralReport<f64>,
    pub fidelity: FidelityReport<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<SpectralReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonunital: Option<NonunitalSpectrum<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<InfidelityBound<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbative: Option<Perturbative>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<SpectrumValidation>,
    pub notes: Vec<String>,
}

fn comparison_notes(p: f64, q: f64, r: f64, eps: f64) -> Vec<String> {
    let mut notes = Vec::new();
    if (p - q).abs() < EQ_TOL {
        notes.push("p == q".to_string());
    } else if q < p {
        notes.push(format!("q < p (p - q = {:.3e})", p - q));
    } else {
        notes.push(format!("q > p (q - p = {:.3e})", q - p));
    }
    if r.abs() < EQ_TOL && eps > EQ_TOL {
        notes.push("r = 0, ε > 0".to_string());
    }
    notes
}

pub fn analyze(cfg: &ExperimentConfig, seed: Option<u64>) -> CliResult<AnalyzeReport> {
    let group = CliffordGroup::<f64>::generate()?;
    let noisy = noisy_gateset(&group, &cfg.noise)?;
    let m = build_m(group.gates(), &noisy)?;
    let spectral = spectral_report(&m)?;
    let fidelity = gateset_report(group.gates(), &noisy)?;
    let mut notes = comparison_notes(spectral.p, spectral.q, spectral.r, spectral.epsilon);

    let geometry = match lr_pair(&cfg.noise)? {
        Some((l, r)) if l.is_unital() && r.is_unital() => Some(lgr_geometry(&l, &r)?),
        _ => None,
    };
    let nonunital = if noisy.iter().all(|g| g.is_unital()) {
        None
    } else {
        notes.push("nonunital gate set".to_string());
        Some(nonunital_spectrum(&m)?)
    };

    let bounds = if cfg.analyses.contains(&Analysis::Bounds) {
        match geometry.as_ref().and_then(|g| g.alpha) {
            Some(alpha) => Some(infidelity_bound(alpha, spectral.r, m.d)),
            None => {
                return Err(CliError::Model(
                    "bounds analysis needs gate-independent unital L and R".into(),
                ))
            }
        }
    } else {
        None
    };

    let perturbative = if cfg.analyses.contains(&Analysis::Perturbative) {
        Some(perturbative(&group, &cfg.noise)?)
    } else {
        None
    };

    let montecarlo = if cfg.analyses.contains(&Analysis::Montecarlo) {
        let run = run_rb(&group, &noisy, &rb_config(cfg, seed))?;
        Some(validate_against_spectrum(&run, &m)?)
    } else {
        None
    };

    Ok(AnalyzeReport {
        spectral,
        fidelity,
        geometry,
        nonunital,
        bounds,
        perturbative,
        montecarlo,
        notes,
    })
}

fn perturbative(group: &CliffordGroup<f64>, model: &NoiseModel<f64>) -> CliResult<Perturbative> {
    let theta = model
        .theta()
        .ok_or_else(|| CliError::Model("perturbative analysis needs a model with an angle theta".into()))?;
    let series = perturb_series(group, model, rbcompare::analytic::MAX_ORDER)?;
    let coefficients = (1..=series.valid_to)
        .map(|n| series.coefficient(n))
        .collect::<rbcompare::Result<Vec<_>>>()?;
    Ok(Perturbative {
        theta,
        valid_to: series.valid_to,
        coefficients,
        p_series: series.evaluate(theta),
        brackets: series.brackets.clone(),
    })
}

fn rb_config(cfg: &ExperimentConfig, seed: Option<u64>) -> RbConfig {
    let mut rb = cfg.rb.clone().unwrap_or_default();
    if let Some(s) = seed {
        rb.seed = s;
    }
    rb
}

pub fn cmd_analyze(config: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<AnalyzeReport> {
    let cfg = load_config(config)?;
    let report = analyze(&cfg, seed)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.outputs.clone());
    out_dir(&dir)?;
    write_json(&dir.join("report.json"), &report)?;
    for n in &report.notes {
        if n.starts_with("r = 0") {
            eprintln!("WARNING: {n}: the RB decay is flat although the gates are noisy");
        }
    }
    println!(
        "p = {:.12}  q = {:.12}  r = {:.3e}  epsilon = {:.3e}",
        report.spectral.p, report.spectral.q, report.spectral.r, report.spectral.epsilon
    );
    for n in &report.notes {
        println!("note: {n}");
    }
    Ok(report)
}

pub fn cmd_sweep_fig1(grid: usize, out: &Path) -> CliResult<()> {
    let rows = fig1_sweep(grid).map_err(|e| CliError::Model(e.to_string()))?;
    out_dir(out)?;
    let mut w = csv_writer(&out.join("fig1.csv"))?;
    w.write_record(["beta", "p_over_alpha", "q_over_alpha_min", "q_over_alpha_max"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([r.beta, r.p_over_alpha, r.q_over_alpha_min, r.q_over_alpha_max].map(|x| x.to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub theta: f64,
    pub epsilon: f64,
    pub r_spectral: f64,
    pub r_fitted: f64,
}

/// Mean-square per-gate angle over `(3/2) theta^2`.
pub fn compilation_gate_ratio(group: &CliffordGroup<f64>, theta: f64) -> CliResult<f64> {
    let noisy = noisy_gateset(group, &NoiseModel::proctor(theta))?;
    let mut ms = 0.0;
    for (g, n) in group.gates().iter().zip(&noisy) {
        ms += effective_right_unitary_angle(g, n)?.powi(2);
    }
    Ok(ms / group.len() as f64 / (1.5 * theta * theta))
}

/// Angle at which the compilation table is checked against `<theta_k^2>`.
const GATE_THETA: f64 = 0.01;

/// Longest sequence used by the scan's simulated runs.
pub const SCAN_MAX_LENGTH: usize = 20_000;

/// Geometric grid from 1 to about `1/(1-p)`, kept within `[100, cap]` so the
/// decay is resolved when it can be.
pub fn scan_lengths(p: f64, cap: usize) -> Vec<usize> {
    let top = if p < 1.0 { (1.0 / (1.0 - p)).round() } else { f64::INFINITY };
    let top = top.clamp(100.0, cap.max(100) as f64);
    let mut out: Vec<usize> = (0..12)
        .map(|i| top.powf(i as f64 / 11.0).round() as usize)
        .collect();
    out.dedup();
    out
}

pub fn proctor_scan(thetas: &[f64], seed: u64, max_length: usize) -> CliResult<Vec<ScanRow>> {
    if let Some(t) = thetas.iter().find(|t| !(0.0..=0.3).contains(*t)) {
        return Err(CliError::Model(format!("theta = {t} is outside [0, 0.3]")));
    }
    let group = CliffordGroup::<f64>::generate()?;
    let ratio = compilation_gate_ratio(&group, GATE_THETA)?;
    if (ratio - 1.0).abs() > 0.01 {
        return Err(CliError::Model(format!(
            "DecompositionGateFailed: <theta_k^2> / (3/2 theta^2) = {ratio:.6} at theta = {GATE_THETA}"
        )));
    }
    thetas
        .iter()
        .map(|&theta| {
            let noisy = noisy_gateset(&group, &NoiseModel::proctor(theta))?;
            let m: MOperator<f64> = build_m(group.gates(), &noisy)?;
            let rep = spectral_report(&m)?;
            let run: RbRun = run_rb(
                &group,
                &noisy,
                &RbConfig {
                    lengths: Some(scan_lengths(rep.p, max_length)),
                    seed,
                    ..Default::default()
                },
            )?;
            // unital noise: the survival tends to 1/d
            let ms: Vec<f64> = run.per_length.iter().map(|s| s.m as f64).collect();
            let ys: Vec<f64> = run.per_length.iter().map(|s| s.mean).collect();
            let fit = fit_exponential_fixed_offset(&ms, &ys, None, 1.0 / m.d as f64);
            Ok(ScanRow {
                theta,
                epsilon: infidelity(rep.q, m.d),
                r_spectral: rb_number(rep.p, m.d),
                r_fitted: rb_number(fit.p, m.d),
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x` over positive entries.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn cmd_proctor_scan(thetas: &[f64], out: &Path, seed: u64, max_length: usize) -> CliResult<Vec<ScanRow>> {
    let rows = proctor_scan(thetas, seed, max_length)?;
    out_dir(out)?;
    let mut w = csv_writer(&out.join("proctor_scan.csv"))?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    let th: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let rs: Vec<f64> = rows.iter().map(|r| r.r_spectral).collect();
    if let (Some(se), Some(sr)) = (loglog_slope(&th, &eps), loglog_slope(&th, &rs)) {
        println!("log-log slopes: epsilon {se:.4}, r {sr:.4}");
    }
    Ok(rows)
}

pub fn cmd_simulate(config: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<RbRun> {
    let cfg = load_config(config)?;
    let group = CliffordGroup::<f64>::generate()?;
    let noisy = noisy_gateset(&group, &cfg.noise)?;
    let run = run_rb(&group, &noisy, &rb_config(&cfg, seed))?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.outputs.clone());
    out_dir(&dir)?;
    write_json(&dir.join("rb_run.json"), &run)?;
    let mut w = csv_writer(&dir.join("rb_run.csv"))?;
    w.write_record(["m", "mean", "stderr", "sequences", "enumerated", "fit"])
        .map_err(csv_err)?;
    for s in &run.per_length {
        w.write_record([
            s.m.to_string(),
            s.mean.to_string(),
            s.stderr.to_string(),
            s.sequences.to_string(),
            s.enumerated.to_string(),
            run.fit.eval(s.m as f64).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    if run.fit_diverged {
        eprintln!("warning: exponential fit diverged");
    }
    println!("fitted p = {:.9} +- {:.2e}", run.fit.p, run.fit.sigma_p());
    Ok(run)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Analyze { config, out, seed } => cmd_analyze(&config, out.as_deref(), seed).map(|_| ()),
        Command::SweepFig1 { grid, out } => cmd_sweep_fig1(grid, &out),
        Command::ProctorScan {
            theta,
            out,
            seed,
            max_length,
        } => cmd_proctor_scan(&theta, &out, seed.unwrap_or(0), max_length).map(|_| ()),
        Command::Simulate { config, out, seed } => cmd_simulate(&config, out.as_deref(), seed).map(|_| ()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
