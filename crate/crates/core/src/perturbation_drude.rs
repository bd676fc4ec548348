//! Drude-model free energy as plasma-model result plus a zero-frequency term
//! F₀ and a relaxation term F_γ, and the resulting entropy at T = 0.

use crate::constants::{K_B, PI};
use crate::error::{Error, Result};
use crate::lifshitz_numeric::{zero_temperature_energy, NumericOptions, ReflectionPair};
use crate::materials::{dimensionless_state, DimensionlessState, MaterialModel, Model, PlateConfiguration, Relaxation};
use crate::perturbation_plasma::{thermal_correction_series, DEFAULT_L_MAX};
use crate::quadrature::{integrate_exp_tail, QuadOptions};
use crate::special_functions::{polylog, zeta, zeta_derivative, zeta_derivative_minus_one};
use serde::Serialize;

/// F_D = F_p + F₀ + F_γ, all in J/m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrudeDecomposition {
    pub f_p: f64,
    pub f_0: f64,
    pub f_gamma: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Tm,
    Te,
}

/// Zero-frequency Drude TE coefficient (μ₀ − 1)/(μ₀ + 1).
pub fn r_mu(mu0: f64) -> f64 {
    (mu0 - 1.0) / (mu0 + 1.0)
}

/// Plasma-model products r¹r² at ζ > 0 with constant μ.
fn plasma_products(state: &DimensionlessState, zeta: f64, y: f64) -> ReflectionPair {
    let mut tm = 1.0;
    let mut te = 1.0;
    let z2 = zeta * zeta;
    for n in 0..2 {
        let e2 = z2 + state.omega_p_tilde[n].powi(2);
        let mu = state.mu0[n];
        let q = ((y - zeta) * (y + zeta) + mu * e2).sqrt();
        tm *= (e2 * y - z2 * q) / (e2 * y + z2 * q);
        te *= (mu * y - q) / (mu * y + q);
    }
    ReflectionPair { r_tm: tm, r_te: te }
}

/// First-order coefficient R^(n)_α in
/// r^D¹r^D² = r^p¹r^p² − Σ_n (γ̃_n/ζ) R^(n)_α + O(γ̃²).
///
/// TM: R = βζ²y{μ + β²[ζ²μ + 2(y² − ζ²)]} r^p¹r^p² / (√S · {β²ζ²[2y² − ζ²(β²ζ²(μ−1) + μ)] + y²}),
/// with the β²ζ² factor multiplying the whole inner brace (the grouping that
/// passes `first_order_consistency`).
/// TE: R = −βμ²y r^p¹r^p² / (√S · {β²[(μ² − 1)y² − (μ − 1)ζ²] − μ}),
/// where S = β²y² + β²ζ²(μ − 1) + μ.
pub fn expansion_coefficient_r(
    pol: Polarization,
    n: usize,
    zeta: f64,
    y: f64,
    state: &DimensionlessState,
) -> Result<f64> {
    if n > 1 {
        return Err(Error::arg(format!("plate index must be 0 or 1, got {n}")));
    }
    if !(zeta > 0.0) {
        return Err(Error::arg("expansion_coefficient_r: ζ must be positive"));
    }
    if y < zeta {
        return Err(Error::arg(format!("expansion_coefficient_r: y = {y} < ζ = {zeta}")));
    }
    let b = state.beta[n];
    let mu = state.mu0[n];
    let b2 = b * b;
    let z2 = zeta * zeta;
    let y2 = y * y;
    let s = b2 * y2 + b2 * z2 * (mu - 1.0) + mu;
    let p = plasma_products(state, zeta, y);
    Ok(match pol {
        Polarization::Tm => {
            let num = b * z2 * y * (mu + b2 * (z2 * mu + 2.0 * (y2 - z2)));
            let den = b2 * z2 * (2.0 * y2 - z2 * (b2 * z2 * (mu - 1.0) + mu)) + y2;
            num / (s.sqrt() * den) * p.r_tm
        }
        Polarization::Te => {
            let den = b2 * ((mu * mu - 1.0) * y2 - (mu - 1.0) * z2) - mu;
            -b * mu * mu * y / (s.sqrt() * den) * p.r_te
        }
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 0.25) {
        return Err(Error::arg(format!("Λ must lie in (0, 0.25), got {lambda}")));
    }
    Ok(())
}

fn r_mu_product(cfg: &PlateConfiguration) -> f64 {
    r_mu(cfg.material_1.mu0) * r_mu(cfg.material_2.mu0)
}

/// Small-Λ bracket 1 − Li₃(r_μ¹r_μ²)/ζ(3) − 4Λ + 12Λ².
pub fn zero_frequency_bracket(cfg: &PlateConfiguration, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let z3 = zeta(3)?;
    Ok(1.0 - polylog(3, r_mu_product(cfg))? / z3 - 4.0 * lambda + 12.0 * lambda * lambda)
}

/// Exact bracket [−Li₃(r_μ¹r_μ²) − ∫₀^∞ y ln(1 − r^p¹r^p² e^{−y}) dy]/ζ(3),
/// with the plasma zero-frequency TE coefficients.
pub fn zero_frequency_bracket_exact(cfg: &PlateConfiguration) -> Result<f64> {
    let s = dimensionless_state(cfg)?;
    let wp2 = [s.omega_p_tilde[0].powi(2), s.omega_p_tilde[1].powi(2)];
    let mu = s.mu0;
    let ip = integrate_exp_tail(
        |y| {
            let mut prod = 1.0;
            for n in 0..2 {
                let root = (mu[n] * wp2[n] + y * y).sqrt();
                prod *= (mu[n] * y - root) / (mu[n] * y + root);
            }
            y * (-prod * (-y).exp()).ln_1p()
        },
        0.0,
        QuadOptions::relative(1e-13).with_abs(1e-300),
    )?;
    Ok((-polylog(3, r_mu_product(cfg))? - ip.value) / zeta(3)?)
}

/// F₀ = (k_B T ζ(3)/16πa²)[1 − Li₃(r_μ¹r_μ²)/ζ(3) − 4Λ + 12Λ²], J/m².
pub fn zero_frequency_term_f0(cfg: &PlateConfiguration, lambda: f64) -> Result<f64> {
    let pref = K_B * cfg.temperature * zeta(3)? / (16.0 * PI * cfg.a * cfg.a);
    Ok(pref * zero_frequency_bracket(cfg, lambda)?)
}

/// F₀ from the exact zero-frequency integrals, J/m².
pub fn zero_frequency_term_f0_exact(cfg: &PlateConfiguration) -> Result<f64> {
    let pref = K_B * cfg.temperature * zeta(3)? / (16.0 * PI * cfg.a * cfg.a);
    Ok(pref * zero_frequency_bracket_exact(cfg)?)
}

/// Largest τ accepted by the small-τ relaxation-term formula.
pub const F_GAMMA_MAX_TAU: f64 = 0.5;

fn relaxation_constants() -> Result<(f64, f64, f64)> {
    let z3 = zeta(3)?;
    let a = 2.0 * z3;
    let c = 2.0 + zeta_derivative(3)? / z3;
    let d = 1.0 / 24.0 + zeta_derivative_minus_one();
    Ok((a, c, d))
}

/// Σ_{l≥1} ∫_{lτ}^∞ [lτ/(e^y − 1) + y²/(lτ(e^y − 1))] dy for small τ:
/// (2ζ(3)/τ)[−ln τ + 2 + ζ'(3)/ζ(3)] + τ[ln τ/12 + 1/24 + ζ'(−1)] + O(τ³).
pub fn relaxation_sum(tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::arg("relaxation_sum: τ must be positive"));
    }
    let (a, c, d) = relaxation_constants()?;
    let ln = tau.ln();
    Ok(a / tau * (-ln + c) + tau * (ln / 12.0 + d))
}

/// τ·dΣ/dτ of [`relaxation_sum`].
fn relaxation_sum_log_derivative(tau: f64) -> Result<f64> {
    let (a, c, d) = relaxation_constants()?;
    let ln = tau.ln();
    Ok(-a / tau * (-ln + c) - a / tau + tau * (ln / 12.0 + d + 1.0 / 12.0))
}

/// The same sum evaluated term by term:
/// Σ_l [−2ζ_l ln(1 − e^{−ζ_l}) + 2Li₂(e^{−ζ_l}) + 2Li₃(e^{−ζ_l})/ζ_l].
pub fn relaxation_sum_direct(tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::arg("relaxation_sum_direct: τ must be positive"));
    }
    let mut terms = Vec::new();
    let mut l = 1usize;
    loop {
        let z = l as f64 * tau;
        let e = (-z).exp();
        let term = -2.0 * z * (-e).ln_1p() + 2.0 * polylog(2, e)? + 2.0 * polylog(3, e)? / z;
        terms.push(term);
        if term < 1e-18 * terms[0] || e == 0.0 {
            break;
        }
        l += 1;
    }
    Ok(terms.iter().rev().sum())
}

/// Σ_n √μ₀ⁿ γⁿ(T)/ω_pⁿ.
fn relaxation_weight(cfg: &PlateConfiguration, temperature: f64) -> f64 {
    cfg.materials()
        .iter()
        .map(|m| m.mu0.sqrt() * crate::materials::relaxation_frequency(m, temperature) / m.omega_p)
        .sum()
}

fn tau_of(cfg: &PlateConfiguration) -> Result<f64> {
    let s = dimensionless_state(cfg)?;
    if !(s.tau > 0.0) {
        return Err(Error::arg("temperature must be positive"));
    }
    if s.tau >= F_GAMMA_MAX_TAU {
        return Err(Error::validity(format!(
            "relaxation term requires τ < {F_GAMMA_MAX_TAU}, got τ = {}",
            s.tau
        )));
    }
    Ok(s.tau)
}

fn require_relaxation(cfg: &PlateConfiguration) -> Result<()> {
    for m in cfg.materials() {
        if m.relaxation == Relaxation::None {
            return Err(Error::arg(format!("{} carries no relaxation law", m.name)));
        }
    }
    Ok(())
}

/// F_γ = (k_B T/8πa²) Σ_n √μ₀ⁿ γⁿ(T)/ω_pⁿ · Σ(τ), J/m².
pub fn relaxation_term_f_gamma(cfg: &PlateConfiguration) -> Result<f64> {
    require_relaxation(cfg)?;
    let tau = tau_of(cfg)?;
    let w = relaxation_weight(cfg, cfg.temperature);
    Ok(K_B * cfg.temperature / (8.0 * PI * cfg.a * cfg.a) * w * relaxation_sum(tau)?)
}

/// ∂F_γ/∂T, J/(K·m²). For γ = γ₀T² this is
/// (k_B/8πa²)·Σ√μ₀γ(T)/ω_p·[3Σ + τΣ'], which vanishes as T → 0.
pub fn f_gamma_derivative(cfg: &PlateConfiguration) -> Result<f64> {
    require_relaxation(cfg)?;
    let tau = tau_of(cfg)?;
    let sum = relaxation_sum(tau)?;
    let dsum = relaxation_sum_log_derivative(tau)?;
    let mut total = 0.0;
    for m in cfg.materials() {
        let w = m.mu0.sqrt() * crate::materials::relaxation_frequency(m, cfg.temperature) / m.omega_p;
        // T·dγ/dT / γ
        let k = match m.relaxation {
            Relaxation::PerfectLattice { .. } => 2.0,
            _ => 0.0,
        };
        total += w * ((1.0 + k) * sum + dsum);
    }
    Ok(K_B / (8.0 * PI * cfg.a * cfg.a) * total)
}

/// F_D = F_p + F₀ + F_γ with F_p = E(a) (numeric) + the B-series thermal
/// correction, using Λ of the configuration.
pub fn drude_free_energy(cfg: &PlateConfiguration, opts: &NumericOptions) -> Result<DrudeDecomposition> {
    require_relaxation(cfg)?;
    let s = dimensionless_state(cfg)?;
    let e = zero_temperature_energy(cfg, Model::Plasma, &NumericOptions { mu_mode: crate::materials::MuMode::Static, ..*opts })?;
    let series = thermal_correction_series(cfg, s.lambda, DEFAULT_L_MAX)?;
    let f_p = e + series.value;
    let f_0 = zero_frequency_term_f0(cfg, s.lambda)?;
    let f_gamma = relaxation_term_f_gamma(cfg)?;
    Ok(DrudeDecomposition { f_p, f_0, f_gamma, total: f_p + f_0 + f_gamma })
}

/// S_D(a, 0) = −(k_B ζ(3)/16πa²)[1 − Li₃(r_μ¹r_μ²)/ζ(3) − 4Λ + 12Λ²], J/(K·m²).
pub fn entropy_at_zero_t(cfg: &PlateConfiguration, lambda: f64) -> Result<f64> {
    Ok(-K_B * zeta(3)? / (16.0 * PI * cfg.a * cfg.a) * zero_frequency_bracket(cfg, lambda)?)
}

/// S_D(a, 0) from the exact zero-frequency integrals, J/(K·m²).
pub fn entropy_at_zero_t_exact(cfg: &PlateConfiguration) -> Result<f64> {
    Ok(-K_B * zeta(3)? / (16.0 * PI * cfg.a * cfg.a) * zero_frequency_bracket_exact(cfg)?)
}

/// a* = 3λ_p μ₀^{3/2} ζ(3)/π³, m: below a* the zero-temperature Drude entropy
/// of two similar plates is positive (to the accuracy of the large-μ₀ form of Li₃).
pub fn positivity_threshold(m: &MaterialModel) -> Result<f64> {
    if !(m.mu0 > 1.0) {
        return Err(Error::arg(format!("{}: no positive-entropy window for μ₀ = {}", m.name, m.mu0)));
    }
    Ok(3.0 * m.plasma_wavelength() * m.mu0.powf(1.5) * zeta(3)? / PI.powi(3))
}

/// Large-μ₀ approximation Li₃(r_μ²) ≈ ζ(3) − 2π²/(3μ₀) for similar plates.
pub fn li3_similar_plates_approx(mu0: f64) -> Result<f64> {
    Ok(zeta(3)? - 2.0 * PI * PI / (3.0 * mu0))
}
