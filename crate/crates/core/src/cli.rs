//! Command-line front end: argument parsing, grid expansion, table output.

use crate::constants::{C, HBAR, K_B};
use crate::diagnostics::{
    default_drude_grid, default_nernst_grid, default_plasma_grid, discrepancy_table, entropy_sign_map, log_grid,
    nernst_scan, sign_flip, DiscrepancyRow,
};
use crate::error::{Error, Result};
use crate::lifshitz_numeric::{entropy_fd, free_energy, pressure_fd, NumericOptions, Representation};
use crate::materials::{load_material_file, MaterialModel, Model, MuMode, PlateConfiguration};
use crate::mu_dispersion::pressure_correction;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDITY: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

/// Largest Λ for which the perturbative expressions are evaluated.
pub const LAMBDA_GATE: f64 = 0.25;

#[derive(Debug, Parser)]
#[command(name = "casimir-mag", version, about = "Casimir free energy, entropy and pressure between magnetic metal plates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free energy per unit area over a separation or temperature grid.
    FreeEnergy(PointArgs),
    /// Entropy per unit area by finite differences in T.
    Entropy(PointArgs),
    /// Pressure by finite differences in a.
    Pressure(PointArgs),
    /// Entropy on a descending T grid, extrapolated to T = 0.
    NernstScan(NernstArgs),
    /// Sign of the zero-temperature Drude entropy across separations.
    SignMap(SignMapArgs),
    /// Perturbative expressions against the numeric Lifshitz evaluation.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Plasma,
    Drude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MuModeArg {
    Static,
    Debye,
    StaticZeroTermOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepresentationArg {
    Auto,
    Matsubara,
    AbelPlana,
    DrudeSplit,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Material file with [name] sections.
    #[arg(long, value_name = "FILE")]
    pub material: PathBuf,
    /// Section for plate 1; a second --plate selects plate 2 (default: plate 2 = plate 1).
    #[arg(long, value_name = "NAME")]
    pub plate: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Evaluate outside validity gates; affected rows stay flagged.
    #[arg(long)]
    pub force: bool,
    /// Relative tolerance of the numeric frequency sums.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PhysicsArgs {
    #[arg(long, value_enum, default_value = "plasma")]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "static")]
    pub mu_mode: MuModeArg,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Separation, m.
    #[arg(long, value_name = "M")]
    pub a: Option<f64>,
    /// Separation grid lo:hi:linear|log:count, m.
    #[arg(long, value_name = "GRID", conflicts_with_all = ["a", "t_range"])]
    pub a_range: Option<GridSpec>,
    /// Temperature, K.
    #[arg(long = "t", visible_alias = "temperature", value_name = "K")]
    pub t: Option<f64>,
    /// Temperature grid lo:hi:linear|log:count, K.
    #[arg(long = "t-range", value_name = "GRID", conflicts_with = "t")]
    pub t_range: Option<GridSpec>,
    /// Free-energy representation.
    #[arg(long, value_enum, default_value = "auto")]
    pub representation: RepresentationArg,
}

#[derive(Debug, Clone, Args)]
pub struct NernstArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Separation, m.
    #[arg(long, value_name = "M")]
    pub a: f64,
    /// Temperature grid lo:hi:linear|log:count, K (evaluated descending).
    /// Default: 12 points log-spaced over [1e-3, 2e-2]·T_eff.
    #[arg(long = "t-range", value_name = "GRID")]
    pub t_range: Option<GridSpec>,
}

#[derive(Debug, Clone, Args)]
pub struct SignMapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Separation grid lo:hi:linear|log:count, m.
    #[arg(long, value_name = "GRID", default_value = "2e-6:4e-5:linear:39")]
    pub a_range: GridSpec,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "plasma")]
    pub model: ModelArg,
    /// Validation grid; only `default` is defined.
    #[arg(long, default_value = "default")]
    pub grid: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// `lo:hi:linear|log:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
    pub count: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(format!("expected lo:hi:linear|log:count, got '{s}'"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("cannot parse '{p}' as a number"));
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let scale = match parts[2].trim() {
            "linear" | "lin" => Scale::Linear,
            "log" => Scale::Log,
            other => return Err(format!("grid scale must be linear or log, got '{other}'")),
        };
        let count: usize = parts[3].trim().parse().map_err(|_| format!("cannot parse '{}' as a count", parts[3]))?;
        if count < 1 {
            return Err("grid count must be at least 1".into());
        }
        if !(lo > 0.0 && hi > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err("grid bounds must be positive".into());
        }
        Ok(GridSpec { lo, hi, scale, count })
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let scale = match self.scale {
            Scale::Linear => "linear",
            Scale::Log => "log",
        };
        write!(f, "{:e}:{:e}:{scale}:{}", self.lo, self.hi, self.count)
    }
}

impl GridSpec {
    /// Grid points from lo to hi inclusive.
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        match self.scale {
            Scale::Log => log_grid(self.lo, self.hi, self.count),
            Scale::Linear => {
                let n = (self.count - 1) as f64;
                (0..self.count).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    FreeEnergy,
    Entropy,
    Pressure,
    NernstScan,
    SignMap,
    Validate,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::FreeEnergy => "free-energy",
            CommandKind::Entropy => "entropy",
            CommandKind::Pressure => "pressure",
            CommandKind::NernstScan => "nernst-scan",
            CommandKind::SignMap => "sign-map",
            CommandKind::Validate => "validate",
        }
    }
}

/// Which axis a grid runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Separation,
    Temperature,
}

/// A fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: CommandKind,
    pub config: PathBuf,
    pub plates: Vec<String>,
    pub model: Model,
    pub mu_mode: MuMode,
    pub a: Option<f64>,
    pub temperature: Option<f64>,
    pub grid: Option<(Axis, GridSpec)>,
    pub representation: RepresentationArg,
    pub validation_grid: String,
    pub format: FormatArg,
    pub output: Option<PathBuf>,
    pub force: bool,
    pub tol: f64,
}

fn model_of(m: ModelArg) -> Model {
    match m {
        ModelArg::Plasma => Model::Plasma,
        ModelArg::Drude => Model::Drude,
    }
}

fn mu_mode_of(m: MuModeArg) -> MuMode {
    match m {
        MuModeArg::Static => MuMode::Static,
        MuModeArg::Debye => MuMode::Debye,
        MuModeArg::StaticZeroTermOnly => MuMode::static_zero_term_only(),
    }
}

impl RunSpec {
    fn base(command: CommandKind, common: &CommonArgs) -> Self {
        RunSpec {
            command,
            config: common.material.clone(),
            plates: common.plate.clone(),
            model: Model::Plasma,
            mu_mode: MuMode::Static,
            a: None,
            temperature: None,
            grid: None,
            representation: RepresentationArg::Auto,
            validation_grid: "default".into(),
            format: common.format,
            output: common.output.clone(),
            force: common.force,
            tol: common.tol,
        }
    }

    pub fn from_command(cmd: &Command) -> Self {
        match cmd {
            Command::FreeEnergy(p) | Command::Entropy(p) | Command::Pressure(p) => {
                let kind = match cmd {
                    Command::FreeEnergy(_) => CommandKind::FreeEnergy,
                    Command::Entropy(_) => CommandKind::Entropy,
                    _ => CommandKind::Pressure,
                };
                // clap rejects giving both ranges
                let grid = match (p.a_range, p.t_range) {
                    (Some(g), _) => Some((Axis::Separation, g)),
                    (None, Some(g)) => Some((Axis::Temperature, g)),
                    (None, None) => None,
                };
                RunSpec {
                    model: model_of(p.physics.model),
                    mu_mode: mu_mode_of(p.physics.mu_mode),
                    a: p.a,
                    temperature: p.t,
                    grid,
                    representation: p.representation,
                    ..RunSpec::base(kind, &p.common)
                }
            }
            Command::NernstScan(n) => RunSpec {
                model: model_of(n.physics.model),
                mu_mode: mu_mode_of(n.physics.mu_mode),
                a: Some(n.a),
                grid: n.t_range.map(|g| (Axis::Temperature, g)),
                ..RunSpec::base(CommandKind::NernstScan, &n.common)
            },
            Command::SignMap(s) => RunSpec {
                model: Model::Drude,
                grid: Some((Axis::Separation, s.a_range)),
                ..RunSpec::base(CommandKind::SignMap, &s.common)
            },
            Command::Validate(v) => RunSpec {
                model: model_of(v.model),
                validation_grid: v.grid.clone(),
                ..RunSpec::base(CommandKind::Validate, &v.common)
            },
        }
    }

    fn options(&self) -> NumericOptions {
        NumericOptions::default().with_tol(self.tol).with_mu_mode(self.mu_mode)
    }
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

/// Output of one run: metadata, column headers (with units) and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Set when the run completed but a check failed (nonzero exit).
    pub failure: Option<String>,
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12e}")
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => {
                        if s.contains([',', '"', '\n']) {
                            format!("\"{}\"", s.replace('"', "\"\""))
                        } else {
                            s.clone()
                        }
                    }
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        use serde_json::{Map, Value};
        let mut meta = Map::new();
        for (k, v) in &self.metadata {
            meta.insert(k.clone(), Value::String(v.clone()));
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, cell) in self.columns.iter().zip(row) {
                    let v = match cell {
                        // same digits as the CSV
                        Cell::Num(x) if x.is_finite() => {
                            Value::Number(serde_json::Number::from_f64(fmt_num(*x).parse().unwrap()).unwrap())
                        }
                        Cell::Num(_) => Value::Null,
                        Cell::Int(i) => Value::from(*i),
                        Cell::Text(s) => Value::String(s.clone()),
                    };
                    m.insert(c.clone(), v);
                }
                Value::Object(m)
            })
            .collect();
        let doc = serde_json::json!({
            "metadata": Value::Object(meta),
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: FormatArg) -> String {
        match format {
            FormatArg::Csv => self.to_csv(),
            FormatArg::Json => self.to_json(),
        }
    }
}

/// Maps a library error to the process exit status.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Validity(_) => EXIT_VALIDITY,
        Error::NonConvergence(_) | Error::Quadrature(_) => EXIT_NONCONVERGENCE,
        Error::InvalidArgument(_) => EXIT_FAILURE,
    }
}

fn resolve_plates(spec: &RunSpec) -> Result<(MaterialModel, MaterialModel)> {
    let all = load_material_file(&spec.config)?;
    let find = |name: &str| {
        all.iter()
            .find(|m| m.name == name)
            .cloned()
            .ok_or_else(|| Error::Config(format!("no section [{name}] in {}", spec.config.display())))
    };
    match spec.plates.len() {
        0 => Ok((all[0].clone(), all[0].clone())),
        1 => {
            let m = find(&spec.plates[0])?;
            Ok((m.clone(), m))
        }
        2 => Ok((find(&spec.plates[0])?, find(&spec.plates[1])?)),
        n => Err(Error::Config(format!("at most two --plate values, got {n}"))),
    }
}

fn metadata(spec: &RunSpec, m1: &MaterialModel, m2: &MaterialModel) -> Vec<(String, String)> {
    let mut md = vec![
        ("program".to_string(), format!("casimir-mag v{}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), spec.command.name().to_string()),
        ("config".to_string(), spec.config.display().to_string()),
        ("plate_1".to_string(), serde_json::to_string(m1).unwrap_or_default()),
        ("plate_2".to_string(), serde_json::to_string(m2).unwrap_or_default()),
        ("model".to_string(), spec.model.to_string()),
        ("mu_mode".to_string(), match spec.mu_mode {
            MuMode::StaticZeroTermOnly { min_temperature } => format!("{} (min T {min_temperature:e} K)", spec.mu_mode.label()),
            m => m.label().to_string(),
        }),
        ("tol".to_string(), format!("{:e}", spec.tol)),
        ("l_max".to_string(), NumericOptions::default().l_max.to_string()),
        ("hbar_J_s".to_string(), format!("{HBAR:e}")),
        ("c_m_per_s".to_string(), format!("{C:e}")),
        ("k_B_J_per_K".to_string(), format!("{K_B:e}")),
        ("force".to_string(), spec.force.to_string()),
    ];
    if let Some(a) = spec.a {
        md.push(("a_m".into(), format!("{a:e}")));
    }
    if let Some(t) = spec.temperature {
        md.push(("T_K".into(), format!("{t:e}")));
    }
    if let Some((axis, g)) = spec.grid {
        let name = match axis {
            Axis::Separation => "a_grid_m",
            Axis::Temperature => "T_grid_K",
        };
        md.push((name.into(), g.to_string()));
    }
    md
}

/// Validity flags for a configuration; empty when every gate passes.
fn gate_flags(spec: &RunSpec, cfg: &PlateConfiguration) -> Result<Vec<String>> {
    let s = cfg.state()?;
    let mut flags = Vec::new();
    if s.lambda >= LAMBDA_GATE {
        flags.push(format!("lambda={:.4}>={LAMBDA_GATE}", s.lambda));
    }
    if let MuMode::StaticZeroTermOnly { min_temperature } = spec.mu_mode {
        if cfg.temperature < min_temperature {
            flags.push(format!("T<{min_temperature:e}K"));
        }
    }
    Ok(flags)
}

/// Applies the gates: without --force a failing gate aborts the run.
fn check_gates(spec: &RunSpec, cfgs: &[PlateConfiguration]) -> Result<Vec<Vec<String>>> {
    let mut all = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let flags = gate_flags(spec, cfg)?;
        if !flags.is_empty() && !spec.force {
            return Err(Error::validity(format!(
                "a = {:e} m, T = {:e} K: {} (use --force to evaluate anyway)",
                cfg.a,
                cfg.temperature,
                flags.join("; ")
            )));
        }
        all.push(flags);
    }
    Ok(all)
}

fn point_configs(spec: &RunSpec, m1: &MaterialModel, m2: &MaterialModel) -> Result<Vec<PlateConfiguration>> {
    let (a_vals, t_vals) = match spec.grid {
        Some((Axis::Separation, g)) => {
            let t = spec.temperature.ok_or_else(|| Error::Config("--t is required with --a-range".into()))?;
            (g.points(), vec![t])
        }
        Some((Axis::Temperature, g)) => {
            let a = spec.a.ok_or_else(|| Error::Config("--a is required with --t-range".into()))?;
            (vec![a], g.points())
        }
        None => (
            vec![spec.a.ok_or_else(|| Error::Config("--a or --a-range is required".into()))?],
            vec![spec.temperature.ok_or_else(|| Error::Config("--t or --t-range is required".into()))?],
        ),
    };
    let mut out = Vec::new();
    for &a in &a_vals {
        for &t in &t_vals {
            out.push(PlateConfiguration::new(m1.clone(), m2.clone(), a, t)?);
        }
    }
    Ok(out)
}

fn flag_text(flags: &[String], err: Option<&Error>) -> String {
    let mut parts: Vec<String> = flags.to_vec();
    if let Some(e) = err {
        parts.push(e.to_string());
    }
    parts.join("; ")
}

/// Evaluates one row. Without --force any error aborts; with --force
/// validity errors become a flagged row of NaNs.
fn row_or_flag<F>(spec: &RunSpec, width: usize, eval: F) -> Result<(Vec<f64>, Option<Error>)>
where
    F: FnOnce() -> Result<Vec<f64>>,
{
    match eval() {
        Ok(v) => Ok((v, None)),
        Err(e @ Error::Validity(_)) if spec.force => Ok((vec![f64::NAN; width], Some(e))),
        Err(e) => Err(e),
    }
}

fn representation_for(spec: &RunSpec) -> Representation {
    match spec.representation {
        RepresentationArg::Matsubara => Representation::Matsubara,
        RepresentationArg::AbelPlana => Representation::AbelPlana,
        RepresentationArg::DrudeSplit => Representation::DrudeSplit,
        RepresentationArg::Auto => match spec.model {
            Model::Plasma => Representation::AbelPlana,
            Model::Drude => Representation::DrudeSplit,
        },
    }
}

fn run_points(spec: &RunSpec, m1: &MaterialModel, m2: &MaterialModel) -> Result<Table> {
    let cfgs = point_configs(spec, m1, m2)?;
    let flags = check_gates(spec, &cfgs)?;
    let opts = spec.options();
    let (columns, width): (Vec<&str>, usize) = match spec.command {
        CommandKind::FreeEnergy => (
            vec!["F_J_per_m2", "E_J_per_m2", "thermal_J_per_m2", "error_J_per_m2"],
            4,
        ),
        CommandKind::Entropy => (vec!["S_J_per_K_m2", "error_J_per_K_m2", "step_K"], 3),
        _ => (
            vec!["P_Pa", "P_thermal_Pa", "error_Pa", "thermal_error_Pa", "P_thermal_zero_term_only_series_Pa"],
            5,
        ),
    };
    let rep = representation_for(spec);
    let rows: Vec<(Vec<f64>, Option<Error>)> = cfgs
        .par_iter()
        .map(|cfg| {
            row_or_flag(spec, width, || match spec.command {
                CommandKind::FreeEnergy => {
                    let r = free_energy(cfg, spec.model, rep, &opts)?;
                    Ok(vec![r.total, r.zero_t_part, r.thermal_correction, r.truncation_error_estimate])
                }
                CommandKind::Entropy => {
                    let r = entropy_fd(cfg, spec.model, None, &opts)?;
                    Ok(vec![r.s, r.error_estimate, r.step])
                }
                _ => {
                    let r = pressure_fd(cfg, spec.model, None, &opts)?;
                    let s = cfg.state()?;
                    // closed form applies with μ = μ₀ only at l = 0, t > 1, Λ < 0.25
                    let series = if matches!(spec.mu_mode, MuMode::StaticZeroTermOnly { .. })
                        && s.t > 1.0
                        && s.lambda < LAMBDA_GATE
                    {
                        pressure_correction(cfg, s.lambda, s.lambda1)?
                    } else {
                        f64::NAN
                    };
                    Ok(vec![r.total, r.thermal, r.error_estimate, r.thermal_error_estimate, series])
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["a_m".to_string(), "T_K".into(), "t".into(), "lambda".into()];
    header.extend(columns.iter().map(|c| c.to_string()));
    if spec.command == CommandKind::FreeEnergy {
        header.push("representation".into());
    }
    header.push("flags".into());
    let mut out = Vec::new();
    for ((cfg, (vals, err)), fl) in cfgs.iter().zip(rows).zip(&flags) {
        let s = cfg.state()?;
        let mut row = vec![Cell::Num(cfg.a), Cell::Num(cfg.temperature), Cell::Num(s.t), Cell::Num(s.lambda)];
        row.extend(vals.into_iter().map(Cell::Num));
        if spec.command == CommandKind::FreeEnergy {
            row.push(Cell::Text(rep.to_string()));
        }
        row.push(Cell::Text(flag_text(fl, err.as_ref())));
        out.push(row);
    }
    Ok(Table { metadata: metadata(spec, m1, m2), columns: header, rows: out, failure: None })
}

fn run_nernst(spec: &RunSpec, m1: &MaterialModel, m2: &MaterialModel) -> Result<Table> {
    let a = spec.a.ok_or_else(|| Error::Config("--a is required".into()))?;
    let base = PlateConfiguration::new(m1.clone(), m2.clone(), a, 1.0)?;
    let grid = match spec.grid {
        Some((_, g)) => {
            let mut p = g.points();
            p.sort_by(|x, y| y.partial_cmp(x).expect("finite grid"));
            p.dedup();
            p
        }
        None => default_nernst_grid(&base),
    };
    let cfgs: Vec<PlateConfiguration> = grid.iter().map(|&t| base.with_temperature(t)).collect::<Result<_>>()?;
    check_gates(spec, &cfgs)?;
    let r = nernst_scan(&base, spec.model, &grid, &spec.options())?;
    let mut md = metadata(spec, m1, m2);
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_else(|| "none".into());
    md.push(("extrapolation".into(), "quadratic in tau".into()));
    md.push(("extrapolated_S0_J_per_K_m2".into(), format!("{:.12e}", r.extrapolated_s0)));
    md.push(("extrapolation_error_J_per_K_m2".into(), format!("{:.12e}", r.extrapolation_error)));
    md.push(("atol_J_per_K_m2".into(), format!("{:.12e}", r.atol)));
    md.push(("classification".into(), r.classification.to_string()));
    md.push(("predicted_S0_J_per_K_m2".into(), opt(r.predicted_s0)));
    md.push(("predicted_S0_exact_J_per_K_m2".into(), opt(r.predicted_s0_exact)));
    md.push(("relative_discrepancy".into(), opt(r.relative_discrepancy)));
    md.push(("non_monotone".into(), r.non_monotone.to_string()));
    let columns = ["T_K", "tau", "S_J_per_K_m2", "error_J_per_K_m2", "fit_residual_J_per_K_m2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = (0..r.t_grid.len())
        .map(|i| {
            vec![
                Cell::Num(r.t_grid[i]),
                Cell::Num(r.tau_grid[i]),
                Cell::Num(r.s_values[i]),
                Cell::Num(r.s_errors[i]),
                Cell::Num(r.residuals[i]),
            ]
        })
        .collect();
    Ok(Table { metadata: md, columns, rows, failure: None })
}

fn run_sign_map(spec: &RunSpec, m1: &MaterialModel, m2: &MaterialModel) -> Result<Table> {
    if m1 != m2 {
        return Err(Error::Config("sign-map needs two similar plates".into()));
    }
    let g = spec.grid.map(|(_, g)| g).ok_or_else(|| Error::Config("--a-range is required".into()))?;
    let grid = g.points();
    let rows = entropy_sign_map(m1, &grid)?;
    if !spec.force {
        if let Some(r) = rows.iter().find(|r| !r.within_validity) {
            return Err(Error::validity(format!(
                "a = {:e} m: lambda = {:.4} >= {LAMBDA_GATE} (use --force to tabulate anyway)",
                r.a, r.lambda
            )));
        }
    }
    let mut md = metadata(spec, m1, m2);
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_else(|| "none".into());
    md.push(("sign_flip_a_m".into(), opt(sign_flip(&rows, false))));
    md.push(("sign_flip_exact_a_m".into(), opt(sign_flip(&rows, true))));
    let columns = ["a_m", "lambda", "S0_J_per_K_m2", "sign", "S0_exact_J_per_K_m2", "sign_exact", "flags"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.a),
                Cell::Num(r.lambda),
                Cell::Num(r.s0),
                Cell::Int(r.sign as i64),
                Cell::Num(r.s0_exact),
                Cell::Int(r.sign_exact as i64),
                Cell::Text(if r.within_validity { String::new() } else { format!("lambda>={LAMBDA_GATE}") }),
            ]
        })
        .collect();
    Ok(Table { metadata: md, columns, rows, failure: None })
}

fn run_validate(spec: &RunSpec, m1: &MaterialModel, m2: &MaterialModel) -> Result<Table> {
    if spec.validation_grid != "default" {
        return Err(Error::Config(format!("unknown validation grid '{}'", spec.validation_grid)));
    }
    if m1 != m2 {
        return Err(Error::Config("the default validation grid uses two similar plates".into()));
    }
    let cfgs = match spec.model {
        Model::Plasma => default_plasma_grid(m1)?,
        Model::Drude => default_drude_grid(m1)?,
    };
    check_gates(spec, &cfgs)?;
    let rows: Vec<DiscrepancyRow> = discrepancy_table(&cfgs, spec.model, &spec.options())?;
    let bad = rows.iter().filter(|r| !r.within_bound).count();
    let columns = ["a_m", "T_K", "lambda", "analytic_J_per_m2", "numeric_J_per_m2", "rel_diff", "bound", "within_bound"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let table_rows = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.a),
                Cell::Num(r.temperature),
                Cell::Num(r.lambda),
                Cell::Num(r.analytic),
                Cell::Num(r.numeric),
                Cell::Num(r.rel_diff),
                Cell::Num(r.bound),
                Cell::Text(r.within_bound.to_string()),
            ]
        })
        .collect();
    let mut md = metadata(spec, m1, m2);
    md.push(("validation_grid".into(), spec.validation_grid.clone()));
    Ok(Table {
        metadata: md,
        columns,
        rows: table_rows,
        failure: (bad > 0).then(|| format!("{bad} row(s) exceed their bound")),
    })
}

/// Executes a run and returns the table.
pub fn run(spec: &RunSpec) -> Result<Table> {
    if !(spec.tol > 0.0 && spec.tol < 1.0) {
        return Err(Error::arg(format!("--tol must lie in (0, 1), got {}", spec.tol)));
    }
    let (m1, m2) = resolve_plates(spec)?;
    if spec.mu_mode == MuMode::Debye {
        for m in [&m1, &m2] {
            if m.mu0 != 1.0 && m.dispersion == crate::materials::Dispersion::Constant {
                return Err(Error::Config(format!("mu-mode debye needs omega_m for [{}]", m.name)));
            }
        }
    }
    match spec.command {
        CommandKind::FreeEnergy | CommandKind::Entropy | CommandKind::Pressure => run_points(spec, &m1, &m2),
        CommandKind::NernstScan => run_nernst(spec, &m1, &m2),
        CommandKind::SignMap => run_sign_map(spec, &m1, &m2),
        CommandKind::Validate => run_validate(spec, &m1, &m2),
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Caps rayon's global pool from CASIMIR_MAG_THREADS (0 or unset = automatic).
pub fn configure_threads() -> std::result::Result<(), String> {
    match std::env::var("CASIMIR_MAG_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| format!("CASIMIR_MAG_THREADS: cannot parse '{v}'"))?;
            if n > 0 {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
            }
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Parses arguments, runs, writes output. Returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("casimir-mag: {msg}");
        return EXIT_CONFIG;
    }
    let spec = RunSpec::from_command(&cli.command);
    let table = match run(&spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("casimir-mag {}: {e}", spec.command.name());
            return exit_code(&e);
        }
    };
    let text = table.render(spec.format);
    match &spec.output {
        Some(p) => {
            if let Err(e) = write_atomic(p, &text) {
                eprintln!("casimir-mag: cannot write {}: {e}", p.display());
                return EXIT_FAILURE;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return EXIT_FAILURE;
            }
        }
    }
    match table.failure {
        Some(msg) => {
            eprintln!("casimir-mag {}: {msg}", spec.command.name());
            EXIT_FAILURE
        }
        None => EXIT_OK,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parsing() {
        let g: GridSpec = "1e-3:10:log:5".parse().unwrap();
        assert_eq!((g.lo, g.hi, g.scale, g.count), (1e-3, 10.0, Scale::Log, 5));
        let p = g.points();
        assert!((p[2] - 0.1).abs() < 1e-15 && (p[4] - 10.0).abs() < 1e-12);
        let l: GridSpec = "2e-6:4e-5:linear:39".parse().unwrap();
        let p = l.points();
        assert_eq!(p.len(), 39);
        assert!((p[1] - 3e-6).abs() < 1e-18);
        for bad in ["1:2:log", "1:2:cubic:3", "0:2:log:3", "1:2:log:0", "a:2:log:3"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
        assert_eq!("5:5:linear:1".parse::<GridSpec>().unwrap().points(), vec![5.0]);
    }

    #[test]
    fn csv_rendering() {
        let t = Table {
            metadata: vec![("k".into(), "v".into())],
            columns: vec!["x_m".into(), "note".into()],
            rows: vec![vec![Cell::Num(1.5e-6), Cell::Text("a,b".into())], vec![Cell::Num(f64::NAN), Cell::Int(-1)]],
            failure: None,
        };
        assert_eq!(t.to_csv(), "# k: v\nx_m,note\n1.500000000000e-6,\"a,b\"\nnan,-1\n");
        let j: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(j["rows"][0]["x_m"], serde_json::json!(1.5e-6));
        assert!(j["rows"][1]["x_m"].is_null());
        assert_eq!(j["metadata"]["k"], "v");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Validity("x".into())), 3);
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 4);
        assert_eq!(exit_code(&Error::Quadrature("x".into())), 4);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("casimir-mag-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.csv");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        let leftovers = std::fs::read_dir(&dir).unwrap().count();
        assert_eq!(leftovers, 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn both_ranges_rejected() {
        let r = Cli::try_parse_from([
            "casimir-mag", "free-energy", "--material", "x.cfg", "--a-range", "1e-6:2e-6:linear:2", "--t-range", "1:2:linear:2",
        ]);
        assert!(r.is_err());
        let cli = Cli::try_parse_from(["casimir-mag", "entropy", "--material", "x.cfg", "--a", "5e-6", "--t-range", "1:2:log:3"]).unwrap();
        let spec = RunSpec::from_command(&cli.command);
        assert_eq!(spec.command, CommandKind::Entropy);
        assert_eq!(spec.grid.map(|g| g.0), Some(Axis::Temperature));
    }
}
