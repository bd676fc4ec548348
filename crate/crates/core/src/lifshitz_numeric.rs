//! Direct numerical evaluation of the Lifshitz free energy.
//!
//! Internally F is in units of ħc/a³ and frequencies in units of ω_c:
//! F = τ/(32π²) Σ'_l Φ(lτ) with Φ(ζ) = ∫_ζ^∞ y F(ζ, y) dy.

use crate::constants::{C, HBAR, PI};
use crate::error::{Error, Result};
use crate::materials::{dimensionless_state, DimensionlessState, MaterialModel, PlateConfiguration, Relaxation};
pub use crate::materials::{Model, MuMode};
use crate::quadrature::{integrate, integrate_exp_tail, neumaier_sum, QuadOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionPair {
    pub r_tm: f64,
    pub r_te: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Direct Matsubara sum.
    Matsubara,
    /// E(a) plus the Abel–Plana thermal correction.
    AbelPlana,
    /// Drude model as plasma (Abel–Plana) plus exact zero-frequency
    /// difference plus summed Drude−plasma differences at l ≥ 1.
    DrudeSplit,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Representation::Matsubara => "matsubara",
            Representation::AbelPlana => "abel_plana",
            Representation::DrudeSplit => "drude_split",
        })
    }
}

/// Free energy per unit area, J/m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergyResult {
    pub total: f64,
    pub zero_t_part: f64,
    pub thermal_correction: f64,
    pub terms_used: usize,
    pub truncation_error_estimate: f64,
    pub representation: Representation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    Analytic,
    CentralDifference,
}

/// Entropy per unit area, J/(K·m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyResult {
    pub s: f64,
    pub method: EntropyMethod,
    pub step: f64,
    pub error_estimate: f64,
}

/// Pressure, Pa. `thermal` is −∂Δ_T F/∂a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressureResult {
    pub total: f64,
    pub thermal: f64,
    pub step: f64,
    pub error_estimate: f64,
    pub thermal_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericOptions {
    /// Relative tolerance of the frequency sum; each integral uses tol/10.
    pub tol: f64,
    /// Cap on the number of Matsubara terms.
    pub l_max: usize,
    pub mu_mode: MuMode,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions { tol: 1e-10, l_max: 200_000, mu_mode: MuMode::Static }
    }
}

impl NumericOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_mu_mode(mut self, mu_mode: MuMode) -> Self {
        self.mu_mode = mu_mode;
        self
    }

    fn quad(&self) -> QuadOptions {
        QuadOptions::relative((self.tol / 10.0).max(1e-15)).with_abs(1e-300)
    }

    /// Inner integral of a nested quadrature, tight enough that its noise
    /// stays below the outer tolerance.
    fn inner_quad(&self) -> QuadOptions {
        QuadOptions::relative((self.tol / 100.0).max(1e-13)).with_abs(1e-300)
    }
}

/// Energy unit ħc/a³ in J/m².
pub(crate) fn energy_unit(a: f64) -> f64 {
    HBAR * C / (a * a * a)
}

// ---------------------------------------------------------------------------
// Reflection coefficients
// ---------------------------------------------------------------------------

/// Fresnel coefficients at imaginary frequency ζ and y = 2a q_⊥-type variable.
pub fn reflection_coefficients(eps: f64, mu: f64, zeta: f64, y: f64) -> Result<ReflectionPair> {
    if !(eps >= 1.0) || !(mu >= 1.0) {
        return Err(Error::arg(format!("reflection_coefficients: need eps >= 1 and mu >= 1, got {eps}, {mu}")));
    }
    if !(zeta >= 0.0) || !(y > 0.0) {
        return Err(Error::arg("reflection_coefficients: need zeta >= 0 and y > 0"));
    }
    if y < zeta {
        return Err(Error::arg(format!("reflection_coefficients: y = {y} < zeta = {zeta}")));
    }
    if eps.is_infinite() {
        return Ok(ReflectionPair { r_tm: 1.0, r_te: -1.0 });
    }
    let q = ((y - zeta) * (y + zeta) + eps * mu * zeta * zeta).sqrt();
    Ok(ReflectionPair { r_tm: (eps * y - q) / (eps * y + q), r_te: (mu * y - q) / (mu * y + q) })
}

/// Zero-frequency coefficients. TM is 1 for both models; TE depends on the model.
pub fn zero_frequency_coefficients(m: &MaterialModel, model: Model, omega_p_tilde: f64, y: f64) -> ReflectionPair {
    let mu = m.mu0;
    let r_te = match model {
        Model::Drude => (mu - 1.0) / (mu + 1.0),
        Model::Plasma => {
            let s = (mu * omega_p_tilde * omega_p_tilde + y * y).sqrt();
            (mu * y - s) / (mu * y + s)
        }
    };
    ReflectionPair { r_tm: 1.0, r_te }
}

// ---------------------------------------------------------------------------
// Plate response
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum MuRule {
    Fixed([f64; 2]),
    Debye,
}

/// Both plates' response at imaginary frequencies, dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Response {
    pub model: Model,
    pub wp2: [f64; 2],
    pub gamma: [f64; 2],
    pub mu0: [f64; 2],
    pub ae: [f64; 2],
    rule: MuRule,
}

impl Response {
    /// Response at temperature `temperature` of the state; for Drude the
    /// relaxation is evaluated at that temperature.
    pub fn new(cfg: &PlateConfiguration, state: &DimensionlessState, model: Model, mu_mode: MuMode) -> Result<Self> {
        let rule = match mu_mode {
            MuMode::Static => MuRule::Fixed(state.mu0),
            MuMode::StaticZeroTermOnly { .. } => MuRule::Fixed([1.0, 1.0]),
            MuMode::Debye => MuRule::Debye,
        };
        if model == Model::Drude {
            for m in cfg.materials() {
                if m.relaxation == Relaxation::None {
                    return Err(Error::arg(format!("drude model needs a relaxation law for {}", m.name)));
                }
            }
        }
        let gamma = match model {
            Model::Plasma => [0.0, 0.0],
            Model::Drude => state.gamma_tilde,
        };
        Ok(Response {
            model,
            wp2: [state.omega_p_tilde[0].powi(2), state.omega_p_tilde[1].powi(2)],
            gamma,
            mu0: state.mu0,
            ae: state.ae_m,
            rule,
        })
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        if model == Model::Plasma {
            self.gamma = [0.0, 0.0];
        }
        self
    }

    /// Permeability used at ζ > 0 (the static value enters only at ζ = 0).
    fn mu(&self, n: usize, zeta: f64) -> f64 {
        match self.rule {
            MuRule::Fixed(m) => m[n],
            MuRule::Debye => 1.0 + (self.mu0[n] - 1.0) / (1.0 + self.ae[n] * zeta),
        }
    }

    fn mu_c(&self, n: usize, z: Complex64) -> Complex64 {
        match self.rule {
            MuRule::Fixed(m) => Complex64::new(m[n], 0.0),
            MuRule::Debye => 1.0 + (self.mu0[n] - 1.0) / (1.0 + self.ae[n] * z),
        }
    }

    /// ε(iζ)·ζ².
    fn eps_z2(&self, n: usize, zeta: f64) -> f64 {
        match self.model {
            Model::Plasma => zeta * zeta + self.wp2[n],
            Model::Drude => zeta * zeta + self.wp2[n] * zeta / (zeta + self.gamma[n]),
        }
    }

    /// Products r¹r² for (TM, TE) at ζ > 0.
    fn products(&self, zeta: f64, y: f64) -> (f64, f64) {
        let z2 = zeta * zeta;
        let base = (y - zeta) * (y + zeta);
        let mut tm = 1.0;
        let mut te = 1.0;
        for n in 0..2 {
            let e2 = self.eps_z2(n, zeta);
            let mu = self.mu(n, zeta);
            let q = (base + mu * e2).sqrt();
            tm *= (e2 * y - z2 * q) / (e2 * y + z2 * q);
            te *= (mu * y - q) / (mu * y + q);
        }
        (tm, te)
    }

    /// Products of `other` and the differences self − other for (TM, TE) at
    /// ζ > 0, formed without subtracting nearly equal coefficients. Both
    /// responses must share plasma frequencies and permeabilities.
    fn products_shift(&self, other: &Response, zeta: f64, y: f64) -> ((f64, f64), (f64, f64)) {
        let z2 = zeta * zeta;
        let base = (y - zeta) * (y + zeta);
        let (mut p_tm, mut p_te) = (1.0, 1.0);
        let (mut d_tm, mut d_te) = (0.0, 0.0);
        for n in 0..2 {
            let mu = self.mu(n, zeta);
            let (gs, go) = (self.gamma[n], other.gamma[n]);
            let de2 = self.wp2[n] * zeta * (go - gs) / ((zeta + gs) * (zeta + go));
            let e2o = other.eps_z2(n, zeta);
            let e2s = e2o + de2;
            let qo = (base + mu * e2o).sqrt();
            let qs = (base + mu * e2s).sqrt();
            let dq = mu * de2 / (qs + qo);
            let (ao, bo) = (e2o * y, z2 * qo);
            let (as_, bs) = (e2s * y, z2 * qs);
            let tm_o = (ao - bo) / (ao + bo);
            let tm_s = (as_ - bs) / (as_ + bs);
            let dtm = 2.0 * y * z2 * (de2 * qo - e2o * dq) / ((as_ + bs) * (ao + bo));
            let te_o = (mu * y - qo) / (mu * y + qo);
            let te_s = (mu * y - qs) / (mu * y + qs);
            let dte = -2.0 * mu * y * dq / ((mu * y + qs) * (mu * y + qo));
            // (r¹r²)_s − (r¹r²)_o accumulated plate by plate
            d_tm = d_tm * tm_s + p_tm * dtm;
            d_te = d_te * te_s + p_te * dte;
            p_tm *= tm_o;
            p_te *= te_o;
        }
        ((p_tm, p_te), (d_tm, d_te))
    }

    /// Zero-frequency products (TM, TE).
    fn products_zero(&self, y: f64) -> (f64, f64) {
        let mut te = 1.0;
        for n in 0..2 {
            let mu = self.mu(n, 0.0);
            te *= match self.model {
                Model::Drude => (mu - 1.0) / (mu + 1.0),
                Model::Plasma => {
                    let s = (mu * self.wp2[n] + y * y).sqrt();
                    (mu * y - s) / (mu * y + s)
                }
            };
        }
        (1.0, te)
    }

    /// F(ζ, y) = Σ_α ln(1 − r¹r² e^{−y}).
    pub fn integrand(&self, zeta: f64, y: f64) -> f64 {
        let (tm, te) = if zeta == 0.0 { self.products_zero(y) } else { self.products(zeta, y) };
        let e = (-y).exp();
        (-tm * e).ln_1p() + (-te * e).ln_1p()
    }

    /// Φ(ζ) = ∫_ζ^∞ y F(ζ, y) dy; ζ = 0 uses the zero-frequency coefficients.
    pub fn phi(&self, zeta: f64, q: QuadOptions) -> Result<(f64, f64)> {
        let r = integrate_exp_tail(|y| y * self.integrand(zeta, y), zeta, q)?;
        Ok((r.value, r.error))
    }

    /// Φ of `self` minus Φ of `other` at the same ζ, integrated as one difference.
    pub fn phi_difference(&self, other: &Response, zeta: f64, q: QuadOptions) -> Result<(f64, f64)> {
        let r = integrate_exp_tail(
            |y| {
                let e = (-y).exp();
                if zeta == 0.0 {
                    let (a_tm, a_te) = self.products_zero(y);
                    let (b_tm, b_te) = other.products_zero(y);
                    let d = |a: f64, b: f64| ((b - a) * e / (1.0 - b * e)).ln_1p();
                    y * (d(a_tm, b_tm) + d(a_te, b_te))
                } else {
                    let ((b_tm, b_te), (d_tm, d_te)) = self.products_shift(other, zeta, y);
                    let d = |delta: f64, b: f64| (-delta * e / (1.0 - b * e)).ln_1p();
                    y * (d(d_tm, b_tm) + d(d_te, b_te))
                }
            },
            zeta,
            q,
        )?;
        Ok((r.value, r.error))
    }

    /// F(z, y) continued to complex z, y (plasma permittivity).
    fn integrand_c(&self, z: Complex64, y: Complex64) -> Complex64 {
        let z2 = z * z;
        let base = (y - z) * (y + z);
        let mut tm = Complex64::new(1.0, 0.0);
        let mut te = Complex64::new(1.0, 0.0);
        for n in 0..2 {
            let e2 = z2 + self.wp2[n];
            let mu = self.mu_c(n, z);
            let q = (base + mu * e2).sqrt();
            tm *= (e2 * y - z2 * q) / (e2 * y + z2 * q);
            te *= (mu * y - q) / (mu * y + q);
        }
        let e = (-y).exp();
        (1.0 - tm * e).ln() + (1.0 - te * e).ln()
    }

    /// Im Φ(ix), integrating along y = ix + v, v ≥ 0.
    fn im_phi_imaginary_axis(&self, x: f64, q: QuadOptions) -> Result<(f64, f64)> {
        let z = Complex64::new(0.0, x);
        let r = integrate_exp_tail(
            |v| {
                let y = Complex64::new(v, x);
                (y * self.integrand_c(z, y)).im
            },
            0.0,
            q,
        )
        .map_err(|e| Error::Quadrature(format!("Im Φ(i·{x}): {e}")))?;
        Ok((r.value, r.error))
    }
}

// ---------------------------------------------------------------------------
// Sums and integrals in units of ħc/a³
// ---------------------------------------------------------------------------

/// Result of a dimensionless evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Partial {
    pub value: f64,
    pub error: f64,
    pub terms: usize,
}

/// Σ_{l ≥ l0} w_l term(l) with the three-small-terms stopping rule. Terms are
/// computed in parallel blocks and accumulated in ascending l.
pub(crate) fn frequency_sum<F>(l0: usize, opts: &NumericOptions, reference: f64, term: F) -> Result<Partial>
where
    F: Fn(usize) -> Result<(f64, f64)> + Sync,
{
    let mut values: Vec<f64> = Vec::new();
    let mut err_total = 0.0;
    let mut small_run = 0;
    let mut l = l0;
    let mut block = 16usize;
    loop {
        if l > opts.l_max {
            return Err(Error::NonConvergence(format!(
                "Matsubara sum not converged within l_max = {}",
                opts.l_max
            )));
        }
        let end = (l + block).min(opts.l_max + 1);
        let chunk: Vec<(f64, f64)> = (l..end).into_par_iter().map(&term).collect::<Result<Vec<_>>>()?;
        for (i, (v, e)) in chunk.into_iter().enumerate() {
            values.push(v);
            err_total += e;
            let partial = neumaier_sum(values.iter().copied());
            let scale = partial.abs().max(reference.abs());
            if v.abs() < opts.tol * scale {
                small_run += 1;
            } else {
                small_run = 0;
            }
            if small_run >= 3 {
                let n = values.len();
                let (last, prev) = (values[n - 1], if n > 1 { values[n - 2] } else { 0.0 });
                let ratio = if prev != 0.0 { (last / prev).abs() } else { 0.0 };
                let tail = if ratio < 1.0 { last.abs() * ratio / (1.0 - ratio) } else { last.abs() };
                return Ok(Partial {
                    value: partial,
                    error: tail.max(last.abs()) + err_total,
                    terms: l - l0 + i + 1,
                });
            }
        }
        l = end;
        block = (block * 2).min(1024);
    }
}

/// 1/(32π²) ∫₀^∞ g(ζ) dζ for an inner integral g.
fn frequency_integral<G>(g: G, opts: &NumericOptions) -> Result<Partial>
where
    G: Fn(f64) -> Result<(f64, f64)>,
{
    let mut failure = None;
    let r = integrate_exp_tail(
        |zeta| {
            if zeta == 0.0 {
                return 0.0;
            }
            match g(zeta) {
                Ok((v, _)) => v,
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            }
        },
        0.0,
        opts.quad(),
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let r = r?;
    let scale = 1.0 / (32.0 * PI * PI);
    Ok(Partial { value: r.value * scale, error: r.error * scale, terms: 0 })
}

/// E(a)/(ħc/a³) = 1/(32π²) ∫₀^∞ Φ(ζ) dζ.
pub(crate) fn zero_temperature_dimless(resp: &Response, opts: &NumericOptions) -> Result<Partial> {
    let qi = opts.inner_quad();
    frequency_integral(|zeta| resp.phi(zeta, qi), opts)
}

/// Difference of the zero-temperature energies of two responses.
pub(crate) fn zero_temperature_difference_dimless(a: &Response, b: &Response, opts: &NumericOptions) -> Result<Partial> {
    let qi = opts.inner_quad().against_magnitude();
    frequency_integral(|zeta| a.phi_difference(b, zeta, qi), opts)
}

/// Σ' over Matsubara frequencies, τ/(32π²) Σ'_l Φ(lτ).
pub(crate) fn matsubara_dimless(resp: &Response, zero: &Response, tau: f64, opts: &NumericOptions) -> Result<Partial> {
    let q = opts.quad();
    let (phi0, e0) = zero.phi(0.0, q)?;
    let head = 0.5 * phi0;
    let rest = frequency_sum(1, opts, head, |l| resp.phi(l as f64 * tau, q))?;
    let pref = tau / (32.0 * PI * PI);
    Ok(Partial {
        value: pref * neumaier_sum([head, rest.value]),
        error: pref * (0.5 * e0 + rest.error),
        terms: rest.terms + 1,
    })
}

/// Abel–Plana thermal correction τ/(32π²) ∫₀^∞ ds (−2 Im Φ(iτs))/(e^{2πs} − 1).
pub(crate) fn abel_plana_thermal_dimless(resp: &Response, tau: f64, opts: &NumericOptions) -> Result<Partial> {
    if tau == 0.0 {
        return Ok(Partial { value: 0.0, error: 0.0, terms: 0 });
    }
    let (q, qi) = (opts.quad(), opts.inner_quad());
    let mut failure = None;
    // s = −ln(u)/(2π) absorbs the Bose factor's decay.
    let r = integrate(
        |u| {
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            let s = -u.ln() / (2.0 * PI);
            match resp.im_phi_imaginary_axis(tau * s, qi.against_magnitude()) {
                Ok((im, _)) => {
                    let bose = u / (1.0 - u); // 1/(e^{2πs} − 1)
                    -2.0 * im * bose / (2.0 * PI * u)
                }
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            }
        },
        0.0,
        1.0,
        q,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let r = r?;
    let pref = tau / (32.0 * PI * PI);
    Ok(Partial { value: pref * r.value, error: pref * r.error, terms: 0 })
}

// ---------------------------------------------------------------------------
// Public free-energy operations
// ---------------------------------------------------------------------------

fn require_positive_temperature(cfg: &PlateConfiguration) -> Result<()> {
    if cfg.temperature > 0.0 {
        Ok(())
    } else {
        Err(Error::arg("temperature must be positive for a Matsubara evaluation"))
    }
}

fn check_zero_term_guard(cfg: &PlateConfiguration, opts: &NumericOptions) -> Result<()> {
    if let MuMode::StaticZeroTermOnly { min_temperature } = opts.mu_mode {
        if cfg.temperature < min_temperature {
            return Err(Error::validity(format!(
                "static-zero-term-only requires T >= {min_temperature} K, got {} K",
                cfg.temperature
            )));
        }
    }
    Ok(())
}

fn check_debye(cfg: &PlateConfiguration, opts: &NumericOptions) -> Result<()> {
    if opts.mu_mode == MuMode::Debye {
        for m in cfg.materials() {
            if m.dispersion == crate::materials::Dispersion::Constant && m.mu0 != 1.0 {
                return Err(Error::Config(format!("debye mode requires omega_m for material {}", m.name)));
            }
        }
    }
    Ok(())
}

/// Responses for the Matsubara terms: (l ≥ 1, l = 0, E(a)).
fn responses(cfg: &PlateConfiguration, model: Model, opts: &NumericOptions) -> Result<(Response, Response, Response)> {
    let state = dimensionless_state(cfg)?;
    let resp = Response::new(cfg, &state, model, opts.mu_mode)?;
    let zero = Response::new(cfg, &state, model, MuMode::Static)?;
    // Zero-temperature part: relaxation at T = 0.
    let state0 = dimensionless_state(&cfg.with_temperature(0.0)?)?;
    let e_resp = Response::new(cfg, &state0, model, opts.mu_mode)?;
    Ok((resp, zero, e_resp))
}

/// E(a), J/m².
pub fn zero_temperature_energy(cfg: &PlateConfiguration, model: Model, opts: &NumericOptions) -> Result<f64> {
    check_debye(cfg, opts)?;
    let (_, _, e_resp) = responses(cfg, model, opts)?;
    Ok(zero_temperature_dimless(&e_resp, opts)?.value * energy_unit(cfg.a))
}

/// Free energy by direct Matsubara summation.
pub fn free_energy_matsubara(cfg: &PlateConfiguration, model: Model, opts: &NumericOptions) -> Result<FreeEnergyResult> {
    require_positive_temperature(cfg)?;
    check_zero_term_guard(cfg, opts)?;
    check_debye(cfg, opts)?;
    let state = dimensionless_state(cfg)?;
    let (resp, zero, e_resp) = responses(cfg, model, opts)?;
    let sum = matsubara_dimless(&resp, &zero, state.tau, opts)?;
    let e = zero_temperature_dimless(&e_resp, opts)?;
    let unit = energy_unit(cfg.a);
    Ok(FreeEnergyResult {
        total: sum.value * unit,
        zero_t_part: e.value * unit,
        thermal_correction: (sum.value - e.value) * unit,
        terms_used: sum.terms,
        truncation_error_estimate: (sum.error + e.error) * unit,
        representation: Representation::Matsubara,
    })
}

/// Plasma-model thermal correction, dimensionless, for any μ mode.
pub(crate) fn plasma_thermal_dimless(cfg: &PlateConfiguration, opts: &NumericOptions) -> Result<Partial> {
    let state = dimensionless_state(cfg)?;
    let (resp, zero, _) = responses(cfg, Model::Plasma, opts)?;
    let mut ap = abel_plana_thermal_dimless(&resp, state.tau, opts)?;
    if let MuMode::StaticZeroTermOnly { .. } = opts.mu_mode {
        // The l = 0 term carries μ₀ while the rest of the sum uses μ = 1.
        let (d, e) = zero.phi_difference(&resp, 0.0, opts.quad())?;
        let pref = state.tau / (64.0 * PI * PI);
        ap.value += pref * d;
        ap.error += pref * e;
    }
    Ok(ap)
}

/// Free energy as E(a) plus the Abel–Plana thermal correction (plasma model).
pub fn free_energy_abel_plana(cfg: &PlateConfiguration, model: Model, opts: &NumericOptions) -> Result<FreeEnergyResult> {
    if model != Model::Plasma {
        return Err(Error::arg("the Abel-Plana representation is implemented for the plasma model only"));
    }
    require_positive_temperature(cfg)?;
    check_zero_term_guard(cfg, opts)?;
    check_debye(cfg, opts)?;
    let (_, _, e_resp) = responses(cfg, model, opts)?;
    let e = zero_temperature_dimless(&e_resp, opts)?;
    let d = plasma_thermal_dimless(cfg, opts)?;
    let unit = energy_unit(cfg.a);
    Ok(FreeEnergyResult {
        total: (e.value + d.value) * unit,
        zero_t_part: e.value * unit,
        thermal_correction: d.value * unit,
        terms_used: 0,
        truncation_error_estimate: (e.error + d.error) * unit,
        representation: Representation::AbelPlana,
    })
}

/// Drude thermal correction F_D − E_D, dimensionless, as plasma (Abel–Plana)
/// + zero-frequency difference + Σ_{l≥1}(Drude − plasma) + (E_p − E_D).
pub(crate) fn drude_thermal_dimless(cfg: &PlateConfiguration, opts: &NumericOptions) -> Result<Partial> {
    let state = dimensionless_state(cfg)?;
    let (drude, drude_zero, e_drude) = responses(cfg, Model::Drude, opts)?;
    let plasma = drude.with_model(Model::Plasma);
    let plasma_zero = drude_zero.with_model(Model::Plasma);
    let q = opts.quad();
    let base = plasma_thermal_dimless(cfg, opts)?;
    let (d0, e0) = drude_zero.phi_difference(&plasma_zero, 0.0, q)?;
    let pref = state.tau / (32.0 * PI * PI);
    let diff = if drude.gamma == [0.0, 0.0] {
        Partial { value: 0.0, error: 0.0, terms: 0 }
    } else {
        let tau = state.tau;
        frequency_sum(1, opts, 0.5 * d0, |l| drude.phi_difference(&plasma, l as f64 * tau, q))?
    };
    // With γ(0) ≠ 0 the Drude and plasma zero-temperature energies differ.
    let e_shift = if e_drude.gamma == [0.0, 0.0] {
        Partial { value: 0.0, error: 0.0, terms: 0 }
    } else {
        zero_temperature_difference_dimless(&e_drude.with_model(Model::Plasma), &e_drude, opts)?
    };
    Ok(Partial {
        value: neumaier_sum([base.value, pref * 0.5 * d0, pref * diff.value, e_shift.value]),
        error: base.error + pref * (0.5 * e0 + diff.error) + e_shift.error,
        terms: diff.terms + 1,
    })
}

/// Drude free energy in the split representation.
pub fn free_energy_drude_split(cfg: &PlateConfiguration, opts: &NumericOptions) -> Result<FreeEnergyResult> {
    require_positive_temperature(cfg)?;
    check_zero_term_guard(cfg, opts)?;
    check_debye(cfg, opts)?;
    let (_, _, e_resp) = responses(cfg, Model::Drude, opts)?;
    let e = zero_temperature_dimless(&e_resp, opts)?;
    let d = drude_thermal_dimless(cfg, opts)?;
    let unit = energy_unit(cfg.a);
    Ok(FreeEnergyResult {
        total: (e.value + d.value) * unit,
        zero_t_part: e.value * unit,
        thermal_correction: d.value * unit,
        terms_used: d.terms,
        truncation_error_estimate: (e.error + d.error) * unit,
        representation: Representation::DrudeSplit,
    })
}

/// Free energy in a chosen representation.
pub fn free_energy(
    cfg: &PlateConfiguration,
    model: Model,
    representation: Representation,
    opts: &NumericOptions,
) -> Result<FreeEnergyResult> {
    match representation {
        Representation::Matsubara => free_energy_matsubara(cfg, model, opts),
        Representation::AbelPlana => free_energy_abel_plana(cfg, model, opts),
        Representation::DrudeSplit => {
            if model != Model::Drude {
                return Err(Error::arg("the split representation applies to the Drude model"));
            }
            free_energy_drude_split(cfg, opts)
        }
    }
}

/// Thermal correction Δ_T F, J/m², in the representation best suited to
/// differentiation: Abel–Plana for plasma, the split form for Drude.
pub fn thermal_correction(cfg: &PlateConfiguration, model: Model, opts: &NumericOptions) -> Result<(f64, f64)> {
    require_positive_temperature(cfg)?;
    check_zero_term_guard(cfg, opts)?;
    check_debye(cfg, opts)?;
    let d = match model {
        Model::Plasma => plasma_thermal_dimless(cfg, opts)?,
        Model::Drude => drude_thermal_dimless(cfg, opts)?,
    };
    let unit = energy_unit(cfg.a);
    Ok((d.value * unit, d.error * unit))
}

/// Richardson-extrapolated central difference with steps h and h/2.
/// Returns (derivative, |D(h/2) − D(h)|/3).
pub(crate) fn richardson_derivative<F>(f: F, x: f64, h: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let points = [x + h, x - h, x + 0.5 * h, x - 0.5 * h];
    let vals: Vec<f64> = points.par_iter().map(|&p| f(p)).collect::<Result<Vec<_>>>()?;
    let d1 = (vals[0] - vals[1]) / (2.0 * h);
    let d2 = (vals[2] - vals[3]) / h;
    Ok(((4.0 * d2 - d1) / 3.0, (d2 - d1).abs() / 3.0))
}

/// S = −∂F/∂T by central differences with one Richardson step. `dt = None`
/// uses T/50.
pub fn entropy_fd(cfg: &PlateConfiguration, model: Model, dt: Option<f64>, opts: &NumericOptions) -> Result<EntropyResult> {
    let h = dt.unwrap_or(cfg.temperature / 50.0);
    if !(cfg.temperature - h > 0.0) {
        return Err(Error::arg(format!("entropy_fd: T − ΔT must be positive (T = {}, ΔT = {h})", cfg.temperature)));
    }
    let (d, err) = richardson_derivative(|t| Ok(thermal_correction(&cfg.with_temperature(t)?, model, opts)?.0), cfg.temperature, h)?;
    Ok(EntropyResult { s: -d, method: EntropyMethod::CentralDifference, step: h, error_estimate: err })
}

/// P = −∂F/∂a by central differences with one Richardson step. `da = None`
/// uses a/200.
pub fn pressure_fd(cfg: &PlateConfiguration, model: Model, da: Option<f64>, opts: &NumericOptions) -> Result<PressureResult> {
    let h = da.unwrap_or(cfg.a / 200.0);
    if !(cfg.a - h > 0.0) {
        return Err(Error::arg("pressure_fd: a − Δa must be positive"));
    }
    let parts = |a: f64| -> Result<(f64, f64)> {
        let c = cfg.with_separation(a)?;
        let (_, _, e_resp) = responses(&c, model, opts)?;
        let e = zero_temperature_dimless(&e_resp, opts)?.value * energy_unit(a);
        let th = if c.temperature > 0.0 { thermal_correction(&c, model, opts)?.0 } else { 0.0 };
        Ok((e, th))
    };
    let points = [cfg.a + h, cfg.a - h, cfg.a + 0.5 * h, cfg.a - 0.5 * h];
    let vals: Vec<(f64, f64)> = points.par_iter().map(|&a| parts(a)).collect::<Result<Vec<_>>>()?;
    let rich = |g: &dyn Fn(&(f64, f64)) -> f64| {
        let d1 = (g(&vals[0]) - g(&vals[1])) / (2.0 * h);
        let d2 = (g(&vals[2]) - g(&vals[3])) / h;
        ((4.0 * d2 - d1) / 3.0, (d2 - d1).abs() / 3.0)
    };
    let (dt, et) = rich(&|v| v.0 + v.1);
    let (dth, eth) = rich(&|v| v.1);
    Ok(PressureResult { total: -dt, thermal: -dth, step: h, error_estimate: et, thermal_error_estimate: eth })
}
