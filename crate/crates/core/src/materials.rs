//! Material response at imaginary frequencies, plate configurations, and the
//! material configuration file format.

use crate::constants::{C, HBAR, K_B, PI};
use crate::error::{Error, Result};
use serde::Serialize;
use std::path::Path;

/// Dielectric model of the conduction electrons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Plasma,
    Drude,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Plasma => "plasma",
            Model::Drude => "drude",
        })
    }
}

/// How the magnetic permeability enters the Matsubara sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMode {
    /// μ = μ₀ at every frequency.
    Static,
    /// μ(iζ) from each material's dispersion law.
    Debye,
    /// μ = μ₀ at zero frequency only, μ = 1 for l ≥ 1. Intended for
    /// temperatures above `min_temperature` (K).
    StaticZeroTermOnly { min_temperature: f64 },
}

impl MuMode {
    pub const DEFAULT_ZERO_TERM_MIN_T: f64 = 1e-3;

    pub fn static_zero_term_only() -> Self {
        MuMode::StaticZeroTermOnly { min_temperature: Self::DEFAULT_ZERO_TERM_MIN_T }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MuMode::Static => "static",
            MuMode::Debye => "debye",
            MuMode::StaticZeroTermOnly { .. } => "static-zero-term-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Relaxation {
    /// Plasma model: no dissipation.
    None,
    /// γ(T) = γ₀ T², γ₀ in rad/(s·K²).
    PerfectLattice { gamma0: f64 },
    /// Temperature-independent γ in rad/s.
    Constant { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Dispersion {
    Constant,
    /// μ(iξ) = 1 + (μ₀ − 1)/(1 + ξ/ω_m), ω_m in rad/s.
    Debye { omega_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialModel {
    pub name: String,
    /// Plasma frequency ω_p, rad/s.
    pub omega_p: f64,
    pub relaxation: Relaxation,
    /// Static permeability μ₀.
    pub mu0: f64,
    pub dispersion: Dispersion,
}

impl MaterialModel {
    pub fn new(
        name: impl Into<String>,
        omega_p: f64,
        mu0: f64,
        relaxation: Relaxation,
        dispersion: Dispersion,
    ) -> Result<Self> {
        let m = MaterialModel { name: name.into(), omega_p, relaxation, mu0, dispersion };
        m.validate()?;
        Ok(m)
    }

    /// Builds a material from its plasma wavelength λ_p = 2πc/ω_p in metres.
    pub fn from_plasma_wavelength(
        name: impl Into<String>,
        lambda_p: f64,
        mu0: f64,
        relaxation: Relaxation,
        dispersion: Dispersion,
    ) -> Result<Self> {
        if !(lambda_p > 0.0) || !lambda_p.is_finite() {
            return Err(Error::arg(format!("plasma wavelength must be positive, got {lambda_p}")));
        }
        Self::new(name, 2.0 * PI * C / lambda_p, mu0, relaxation, dispersion)
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega_p > 0.0) || !self.omega_p.is_finite() {
            return Err(Error::arg(format!("{}: plasma frequency must be positive", self.name)));
        }
        if !(self.mu0 >= 1.0) || !self.mu0.is_finite() {
            return Err(Error::arg(format!("{}: mu0 must be >= 1, got {}", self.name, self.mu0)));
        }
        match self.relaxation {
            Relaxation::PerfectLattice { gamma0 } if !(gamma0 >= 0.0) => {
                return Err(Error::arg(format!("{}: gamma0 must be >= 0", self.name)))
            }
            Relaxation::Constant { gamma } if !(gamma >= 0.0) => {
                return Err(Error::arg(format!("{}: gamma must be >= 0", self.name)))
            }
            _ => {}
        }
        if let Dispersion::Debye { omega_m } = self.dispersion {
            if !(omega_m > 0.0) || !omega_m.is_finite() {
                return Err(Error::arg(format!("{}: omega_m must be positive", self.name)));
            }
        }
        Ok(())
    }

    /// λ_p = 2πc/ω_p, m.
    pub fn plasma_wavelength(&self) -> f64 {
        2.0 * PI * C / self.omega_p
    }

    pub fn with_relaxation(mut self, relaxation: Relaxation) -> Result<Self> {
        self.relaxation = relaxation;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dispersion(mut self, dispersion: Dispersion) -> Result<Self> {
        self.dispersion = dispersion;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mu0(mut self, mu0: f64) -> Result<Self> {
        self.mu0 = mu0;
        self.validate()?;
        Ok(self)
    }
}

/// Permittivity of the plasma model at dimensionless frequency ζ = ξ/ω_c.
pub fn epsilon_plasma(m: &MaterialModel, zeta: f64, omega_c: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::arg(format!("epsilon_plasma: zeta must be > 0, got {zeta}")));
    }
    let w = m.omega_p / omega_c / zeta;
    Ok(1.0 + w * w)
}

/// Permittivity of the Drude model at dimensionless frequency ζ and temperature T.
pub fn epsilon_drude(m: &MaterialModel, zeta: f64, omega_c: f64, temperature: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::arg(format!("epsilon_drude: zeta must be > 0, got {zeta}")));
    }
    if m.relaxation == Relaxation::None {
        return Err(Error::arg(format!("epsilon_drude: {} has no relaxation law", m.name)));
    }
    let wp = m.omega_p / omega_c;
    let g = relaxation_frequency(m, temperature) / omega_c;
    Ok(1.0 + wp * wp / (zeta * (zeta + g)))
}

/// Relaxation frequency γ(T), rad/s.
pub fn relaxation_frequency(m: &MaterialModel, temperature: f64) -> f64 {
    match m.relaxation {
        Relaxation::None => 0.0,
        Relaxation::PerfectLattice { gamma0 } => gamma0 * temperature * temperature,
        Relaxation::Constant { gamma } => gamma,
    }
}

/// Permeability at dimensionless frequency ζ (ζ = 0 is the static value).
pub fn mu_at_frequency(m: &MaterialModel, zeta: f64, omega_c: f64) -> f64 {
    match m.dispersion {
        Dispersion::Constant => m.mu0,
        Dispersion::Debye { omega_m } => {
            if zeta.is_infinite() {
                1.0
            } else {
                1.0 + (m.mu0 - 1.0) / (1.0 + omega_c / omega_m * zeta)
            }
        }
    }
}

/// Two plates at separation `a` (m) and temperature (K).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateConfiguration {
    pub material_1: MaterialModel,
    pub material_2: MaterialModel,
    pub a: f64,
    pub temperature: f64,
}

impl PlateConfiguration {
    pub fn new(material_1: MaterialModel, material_2: MaterialModel, a: f64, temperature: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::arg(format!("separation must be positive, got {a}")));
        }
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::arg(format!("temperature must be >= 0, got {temperature}")));
        }
        Ok(PlateConfiguration { material_1, material_2, a, temperature })
    }

    /// Two plates of the same material.
    pub fn similar(material: MaterialModel, a: f64, temperature: f64) -> Result<Self> {
        Self::new(material.clone(), material, a, temperature)
    }

    pub fn materials(&self) -> [&MaterialModel; 2] {
        [&self.material_1, &self.material_2]
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.material_1.clone(), self.material_2.clone(), self.a, temperature)
    }

    pub fn with_separation(&self, a: f64) -> Result<Self> {
        Self::new(self.material_1.clone(), self.material_2.clone(), a, self.temperature)
    }

    pub fn is_similar(&self) -> bool {
        self.material_1 == self.material_2
    }

    /// Effective temperature ħc/(2a k_B), K.
    pub fn effective_temperature(&self) -> f64 {
        HBAR * C / (2.0 * self.a * K_B)
    }

    pub fn state(&self) -> Result<DimensionlessState> {
        dimensionless_state(self)
    }
}

/// Dimensionless quantities derived from a [`PlateConfiguration`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionlessState {
    /// ω_c = c/(2a), rad/s.
    pub omega_c: f64,
    /// t = ħc/(2a k_B T); infinite at T = 0.
    pub t: f64,
    /// τ = 2π/t; zero at T = 0.
    pub tau: f64,
    /// ω_p/ω_c per plate.
    pub omega_p_tilde: [f64; 2],
    /// λ_p/(4πa) per plate.
    pub beta: [f64; 2],
    /// γ(T)/ω_c per plate.
    pub gamma_tilde: [f64; 2],
    /// ω_c/ω_m per plate; zero for frequency-independent μ.
    pub ae_m: [f64; 2],
    pub mu0: [f64; 2],
    /// (λ_p¹√μ₀¹ + λ_p²√μ₀²)/(4πa).
    pub lambda: f64,
    /// (λ_p¹ + λ_p²)/(4πa).
    pub lambda1: f64,
}

impl DimensionlessState {
    /// ζ_l = l τ.
    pub fn zeta(&self, l: usize) -> f64 {
        l as f64 * self.tau
    }
}

pub fn dimensionless_state(cfg: &PlateConfiguration) -> Result<DimensionlessState> {
    if !(cfg.a > 0.0) {
        return Err(Error::arg("separation must be positive"));
    }
    let omega_c = C / (2.0 * cfg.a);
    let (t, tau) = if cfg.temperature > 0.0 {
        let t = HBAR * C / (2.0 * cfg.a * K_B * cfg.temperature);
        (t, 2.0 * PI / t)
    } else {
        (f64::INFINITY, 0.0)
    };
    let ms = cfg.materials();
    let per = |f: &dyn Fn(&MaterialModel) -> f64| [f(ms[0]), f(ms[1])];
    let omega_p_tilde = per(&|m| m.omega_p / omega_c);
    let beta = per(&|m| m.plasma_wavelength() / (4.0 * PI * cfg.a));
    let gamma_tilde = per(&|m| relaxation_frequency(m, cfg.temperature) / omega_c);
    let ae_m = per(&|m| match m.dispersion {
        Dispersion::Constant => 0.0,
        Dispersion::Debye { omega_m } => omega_c / omega_m,
    });
    let mu0 = per(&|m| m.mu0);
    let lambda = beta[0] * mu0[0].sqrt() + beta[1] * mu0[1].sqrt();
    let lambda1 = beta[0] + beta[1];
    Ok(DimensionlessState { omega_c, t, tau, omega_p_tilde, beta, gamma_tilde, ae_m, mu0, lambda, lambda1 })
}

// ---------------------------------------------------------------------------
// Configuration file
// ---------------------------------------------------------------------------

/// Parses a material file: `[name]` sections with `key = value` lines.
///
/// Keys: `plasma_wavelength_nm` or `plasma_frequency_rad_s` (exactly one),
/// `mu0`, `relaxation` (`none` | `gamma0=<v>` | `gamma=<v>`), and
/// `dispersion` (`constant` | `debye omega_m=<v>`). `#` starts a comment.
pub fn parse_material_file(text: &str) -> Result<Vec<MaterialModel>> {
    let mut out = Vec::new();
    let mut current: Option<SectionBuilder> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| at("unterminated section header".into()))?
                .trim();
            if name.is_empty() {
                return Err(at("empty section name".into()));
            }
            if let Some(b) = current.take() {
                out.push(b.finish()?);
            }
            if out.iter().any(|m: &MaterialModel| m.name == name) {
                return Err(at(format!("duplicate section [{name}]")));
            }
            current = Some(SectionBuilder::new(name));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key = value, got '{line}'")))?;
        let b = current.as_mut().ok_or_else(|| at("key outside of a [section]".into()))?;
        b.set(key.trim(), value.trim()).map_err(|e| at(e))?;
    }
    if let Some(b) = current.take() {
        out.push(b.finish()?);
    }
    if out.is_empty() {
        return Err(Error::Config("no material sections found".into()));
    }
    Ok(out)
}

/// Reads a material file from disk.
pub fn load_material_file(path: &Path) -> Result<Vec<MaterialModel>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_material_file(&text)
}

struct SectionBuilder {
    name: String,
    wavelength_nm: Option<f64>,
    frequency: Option<f64>,
    mu0: Option<f64>,
    relaxation: Option<Relaxation>,
    dispersion: Option<Dispersion>,
}

fn parse_number(key: &str, s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("{key}: cannot parse '{s}' as a number"))
}

impl SectionBuilder {
    fn new(name: &str) -> Self {
        SectionBuilder {
            name: name.to_string(),
            wavelength_nm: None,
            frequency: None,
            mu0: None,
            relaxation: None,
            dispersion: None,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let dup = |k: &str| format!("[{}]: key '{k}' given twice", self.name);
        match key {
            "plasma_wavelength_nm" => {
                if self.wavelength_nm.is_some() {
                    return Err(dup(key));
                }
                self.wavelength_nm = Some(parse_number(key, value)?);
            }
            "plasma_frequency_rad_s" => {
                if self.frequency.is_some() {
                    return Err(dup(key));
                }
                self.frequency = Some(parse_number(key, value)?);
            }
            "mu0" => {
                if self.mu0.is_some() {
                    return Err(dup(key));
                }
                self.mu0 = Some(parse_number(key, value)?);
            }
            "relaxation" => {
                if self.relaxation.is_some() {
                    return Err(dup(key));
                }
                self.relaxation = Some(parse_relaxation(value)?);
            }
            "dispersion" => {
                if self.dispersion.is_some() {
                    return Err(dup(key));
                }
                self.dispersion = Some(parse_dispersion(value)?);
            }
            other => return Err(format!("[{}]: unknown key '{other}'", self.name)),
        }
        Ok(())
    }

    fn finish(self) -> Result<MaterialModel> {
        let name = self.name;
        let cfg = |msg: String| Error::Config(format!("[{name}]: {msg}"));
        let omega_p = match (self.wavelength_nm, self.frequency) {
            (Some(_), Some(_)) => {
                return Err(cfg("plasma_wavelength_nm and plasma_frequency_rad_s are mutually exclusive".into()))
            }
            (None, None) => return Err(cfg("one of plasma_wavelength_nm or plasma_frequency_rad_s is required".into())),
            (Some(nm), None) => {
                if !(nm > 0.0) {
                    return Err(cfg("plasma_wavelength_nm must be positive".into()));
                }
                2.0 * PI * C / (nm * 1e-9)
            }
            (None, Some(w)) => w,
        };
        let mu0 = self.mu0.ok_or_else(|| cfg("mu0 is required".into()))?;
        MaterialModel::new(
            name.clone(),
            omega_p,
            mu0,
            self.relaxation.unwrap_or(Relaxation::None),
            self.dispersion.unwrap_or(Dispersion::Constant),
        )
        .map_err(|e| cfg(e.to_string()))
    }
}

fn parse_relaxation(value: &str) -> std::result::Result<Relaxation, String> {
    let v = value.trim();
    if v == "none" {
        return Ok(Relaxation::None);
    }
    match v.split_once('=') {
        Some((k, x)) if k.trim() == "gamma0" => Ok(Relaxation::PerfectLattice { gamma0: parse_number("gamma0", x)? }),
        Some((k, x)) if k.trim() == "gamma" => Ok(Relaxation::Constant { gamma: parse_number("gamma", x)? }),
        _ => Err(format!("relaxation: expected none | gamma0=<v> | gamma=<v>, got '{v}'")),
    }
}

fn parse_dispersion(value: &str) -> std::result::Result<Dispersion, String> {
    let v = value.trim();
    if v == "constant" {
        return Ok(Dispersion::Constant);
    }
    let mut parts = v.split_whitespace();
    if parts.next() == Some("debye") {
        if let Some(arg) = parts.next() {
            if let Some((k, x)) = arg.split_once('=') {
                if k == "omega_m" && parts.next().is_none() {
                    return Ok(Dispersion::Debye { omega_m: parse_number("omega_m", x)? });
                }
            }
        }
    }
    Err(format!("dispersion: expected constant | debye omega_m=<v>, got '{v}'"))
}
