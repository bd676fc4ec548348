//! Thermodynamic-consistency reports: Nernst-theorem scans, zero-temperature
//! entropy sign maps and analytic-versus-numeric discrepancy tables.

use crate::error::{Error, Result};
use crate::lifshitz_numeric::{entropy_fd, free_energy_matsubara, NumericOptions};
use crate::materials::{MaterialModel, Model, PlateConfiguration, Relaxation};
use crate::perturbation_drude::{drude_free_energy, entropy_at_zero_t, entropy_at_zero_t_exact};
use crate::perturbation_plasma::{thermal_correction_series, DEFAULT_L_MAX};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NernstClassification {
    Satisfied,
    Violated,
}

impl std::fmt::Display for NernstClassification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NernstClassification::Satisfied => "satisfied",
            NernstClassification::Violated => "violated",
        })
    }
}

/// Entropies on a descending temperature grid and their extrapolation to T = 0.
/// Entropies in J/(K·m²), temperatures in K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NernstReport {
    pub model: Model,
    pub t_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub s_values: Vec<f64>,
    pub s_errors: Vec<f64>,
    pub extrapolated_s0: f64,
    pub extrapolation_error: f64,
    pub atol: f64,
    pub classification: NernstClassification,
    /// Small-Λ closed form of the Drude-model S(a, 0); `None` for the plasma model.
    pub predicted_s0: Option<f64>,
    /// The same limit from the exact zero-frequency integrals.
    pub predicted_s0_exact: Option<f64>,
    /// |extrapolated − predicted|/|predicted| when violated.
    pub relative_discrepancy: Option<f64>,
    /// Fit residuals, entropy minus quadratic, in grid order.
    pub residuals: Vec<f64>,
    /// Set when the entropies are not monotone in T on the grid.
    pub non_monotone: bool,
}

/// `n` temperatures log-spaced over [lo, hi]·T_eff, descending.
pub fn log_temperature_grid(cfg: &PlateConfiguration, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let teff = cfg.effective_temperature();
    log_grid(hi * teff, lo * teff, n)
}

/// `n` points from `from` to `to` with uniform logarithmic spacing.
pub fn log_grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    let (l0, l1) = (from.ln(), to.ln());
    (0..n).map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// The 12-point grid over [1e-3, 2e-2]·T_eff used for Nernst extrapolation.
pub fn default_nernst_grid(cfg: &PlateConfiguration) -> Vec<f64> {
    log_temperature_grid(cfg, 1e-3, 2e-2, 12)
}

/// Least-squares quadratic in x. Returns (coefficients, weights of the
/// intercept in terms of the data, residuals).
fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<([f64; 3], Vec<f64>, Vec<f64>)> {
    let n = x.len();
    if n < 3 {
        return Err(Error::arg("quadratic extrapolation needs at least three points"));
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let u: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let mut m = [[0.0; 3]; 3];
    for &ui in &u {
        let p = [1.0, ui, ui * ui];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += p[r] * p[c];
            }
        }
    }
    let inv = invert3(&m).ok_or_else(|| Error::arg("degenerate grid for quadratic extrapolation"))?;
    // intercept = Σ_i w_i y_i with w_i = (M⁻¹ p_i)_0
    let w: Vec<f64> = u.iter().map(|&ui| inv[0][0] + inv[0][1] * ui + inv[0][2] * ui * ui).collect();
    let mut coef = [0.0; 3];
    for (i, &ui) in u.iter().enumerate() {
        let p = [1.0, ui, ui * ui];
        for r in 0..3 {
            coef[r] += (inv[r][0] * p[0] + inv[r][1] * p[1] + inv[r][2] * p[2]) * y[i];
        }
    }
    let resid: Vec<f64> = u.iter().zip(y).map(|(&ui, &yi)| yi - (coef[0] + coef[1] * ui + coef[2] * ui * ui)).collect();
    Ok(([coef[0], coef[1] / scale, coef[2] / (scale * scale)], w, resid))
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
        }
    }
    Some(inv)
}

/// Computes S on `t_grid` (strictly descending, positive) by finite
/// differences and extrapolates to T = 0 with a quadratic in τ.
pub fn nernst_scan(cfg: &PlateConfiguration, model: Model, t_grid: &[f64], opts: &NumericOptions) -> Result<NernstReport> {
    if t_grid.len() < 3 {
        return Err(Error::arg("Nernst scan needs at least three temperatures"));
    }
    if t_grid.windows(2).any(|w| !(w[1] < w[0])) || !(t_grid[t_grid.len() - 1] > 0.0) {
        return Err(Error::arg("temperature grid must be strictly descending and positive"));
    }
    if model == Model::Drude {
        for m in cfg.materials() {
            if !matches!(m.relaxation, Relaxation::PerfectLattice { .. }) {
                return Err(Error::Config(format!("{}: Drude Nernst scan requires the perfect-lattice relaxation law", m.name)));
            }
        }
    }
    let results: Vec<(f64, f64, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let c = cfg.with_temperature(t)?;
            let e = entropy_fd(&c, model, None, opts)?;
            Ok((c.state()?.tau, e.s, e.error_estimate))
        })
        .collect::<Result<Vec<_>>>()?;
    let tau_grid: Vec<f64> = results.iter().map(|r| r.0).collect();
    let s_values: Vec<f64> = results.iter().map(|r| r.1).collect();
    let s_errors: Vec<f64> = results.iter().map(|r| r.2).collect();
    let (coef, w, residuals) = quadratic_fit(&tau_grid, &s_values)?;
    let n = tau_grid.len() as f64;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = if n > 3.0 { rss / (n - 3.0) } else { 0.0 };
    let w2: f64 = w.iter().map(|v| v * v).sum();
    let propagated: f64 = w.iter().zip(&s_errors).map(|(a, b)| (a * b).abs()).sum();
    let extrapolation_error = (sigma2 * w2).sqrt() + propagated;
    let extrapolated_s0 = coef[0];

    let lambda = cfg.state()?.lambda;
    let drude_s0_exact = entropy_at_zero_t_exact(cfg)?;
    // the closed form needs Λ < 0.25; the exact limit scales atol otherwise
    let drude_s0 = if lambda < 0.25 { Some(entropy_at_zero_t(cfg, lambda)?) } else { None };
    let atol = 1e-4 * drude_s0.unwrap_or(drude_s0_exact).abs();
    let classification = if extrapolated_s0.abs() <= atol.max(3.0 * extrapolation_error) {
        NernstClassification::Satisfied
    } else {
        NernstClassification::Violated
    };
    let (predicted_s0, predicted_s0_exact) = match model {
        Model::Drude => (drude_s0, Some(drude_s0_exact)),
        Model::Plasma => (None, None),
    };
    let relative_discrepancy = match (classification, predicted_s0) {
        (NernstClassification::Violated, Some(p)) => Some(((extrapolated_s0 - p) / p).abs()),
        _ => None,
    };
    let rising = s_values.windows(2).all(|w| w[1] >= w[0]);
    let falling = s_values.windows(2).all(|w| w[1] <= w[0]);
    Ok(NernstReport {
        model,
        t_grid: t_grid.to_vec(),
        tau_grid,
        s_values,
        s_errors,
        extrapolated_s0,
        extrapolation_error,
        atol,
        classification,
        predicted_s0,
        predicted_s0_exact,
        relative_discrepancy,
        residuals,
        non_monotone: !(rising || falling),
    })
}

/// One separation of an entropy sign map. Entropies in J/(K·m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignMapRow {
    pub a: f64,
    pub lambda: f64,
    /// Small-Λ closed form; NaN outside Λ < 0.25.
    pub s0: f64,
    pub sign: i8,
    pub s0_exact: f64,
    pub sign_exact: i8,
    pub within_validity: bool,
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// S_D(a, 0) for two plates of `m` across `a_grid` (m).
pub fn entropy_sign_map(m: &MaterialModel, a_grid: &[f64]) -> Result<Vec<SignMapRow>> {
    a_grid
        .par_iter()
        .map(|&a| {
            // temperature does not enter S_D(a, 0)
            let cfg = PlateConfiguration::similar(m.clone(), a, 1.0)?;
            let lambda = cfg.state()?.lambda;
            let within_validity = lambda < 0.25;
            let s0 = if within_validity { entropy_at_zero_t(&cfg, lambda)? } else { f64::NAN };
            let s0_exact = entropy_at_zero_t_exact(&cfg)?;
            Ok(SignMapRow { a, lambda, s0, sign: sign_of(s0), s0_exact, sign_exact: sign_of(s0_exact), within_validity })
        })
        .collect()
}

/// Linearly interpolated separation where consecutive valid rows change sign,
/// using the closed-form column (or the exact column with `exact`).
pub fn sign_flip(rows: &[SignMapRow], exact: bool) -> Option<f64> {
    let pick = |r: &SignMapRow| if exact { r.s0_exact } else { r.s0 };
    rows.windows(2)
        .filter(|w| exact || (w[0].within_validity && w[1].within_validity))
        .find(|w| pick(&w[0]) * pick(&w[1]) < 0.0)
        .map(|w| {
            let (s0, s1) = (pick(&w[0]), pick(&w[1]));
            w[0].a + (w[1].a - w[0].a) * s0 / (s0 - s1)
        })
}

/// One comparison of the perturbative path against the numeric path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscrepancyRow {
    pub a: f64,
    pub temperature: f64,
    pub lambda: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_diff: f64,
    pub bound: f64,
    pub within_bound: bool,
}

impl DiscrepancyRow {
    pub fn new(cfg: &PlateConfiguration, lambda: f64, analytic: f64, numeric: f64, bound: f64) -> Self {
        let rel_diff = if analytic == numeric { 0.0 } else { ((analytic - numeric) / numeric).abs() };
        DiscrepancyRow {
            a: cfg.a,
            temperature: cfg.temperature,
            lambda,
            analytic,
            numeric,
            rel_diff,
            bound,
            within_bound: rel_diff <= bound,
        }
    }
}

/// Relative budget of the plasma series against the numeric thermal correction.
pub fn plasma_bound(lambda: f64, tol: f64) -> f64 {
    (5.0 * lambda.powi(3)).max(10.0 * tol)
}

/// Relative budget of the Drude decomposition against the numeric free energy.
pub fn drude_bound(cfg: &PlateConfiguration) -> Result<f64> {
    let s = cfg.state()?;
    let g = s.gamma_tilde[0].max(s.gamma_tilde[1]) / s.tau;
    Ok((5.0 * s.lambda.powi(3)).max(3.0 * g * g).max(0.01))
}

/// Plasma: series thermal correction vs the Matsubara thermal part.
/// Drude: F_p + F₀ + F_γ vs the Matsubara free energy.
pub fn discrepancy_table(cfgs: &[PlateConfiguration], model: Model, opts: &NumericOptions) -> Result<Vec<DiscrepancyRow>> {
    cfgs.par_iter()
        .map(|cfg| {
            let lambda = cfg.state()?.lambda;
            let num = free_energy_matsubara(cfg, model, opts)?;
            Ok(match model {
                Model::Plasma => {
                    let series = thermal_correction_series(cfg, lambda, DEFAULT_L_MAX)?;
                    DiscrepancyRow::new(cfg, lambda, series.value, num.thermal_correction, plasma_bound(lambda, opts.tol))
                }
                Model::Drude => {
                    let d = drude_free_energy(cfg, opts)?;
                    DiscrepancyRow::new(cfg, lambda, d.total, num.total, drude_bound(cfg)?)
                }
            })
        })
        .collect()
}

/// Slope of ln(rel_diff) against ln(Λ) over the rows.
pub fn log_log_slope(rows: &[DiscrepancyRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.rel_diff > 0.0).map(|r| (r.lambda.ln(), r.rel_diff.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Separation giving Λ for two similar plates of `m`.
pub fn separation_for_lambda(m: &MaterialModel, lambda: f64) -> f64 {
    m.plasma_wavelength() * m.mu0.sqrt() / (2.0 * std::f64::consts::PI * lambda)
}

/// Plasma validation grid: Λ ∈ {0.05, 0.1, 0.15} at t ∈ {6, 10}.
pub fn default_plasma_grid(m: &MaterialModel) -> Result<Vec<PlateConfiguration>> {
    let mut out = Vec::new();
    for &lambda in &[0.05, 0.1, 0.15] {
        let a = separation_for_lambda(m, lambda);
        for &t in &[6.0, 10.0] {
            let c = PlateConfiguration::similar(m.clone(), a, 1.0)?;
            out.push(c.with_temperature(c.effective_temperature() / t)?);
        }
    }
    Ok(out)
}

/// Drude validation grid: a ∈ {2.5, 5, 7.5} µm at T = 10 K.
pub fn default_drude_grid(m: &MaterialModel) -> Result<Vec<PlateConfiguration>> {
    [2.5e-6, 5e-6, 7.5e-6].iter().map(|&a| PlateConfiguration::similar(m.clone(), a, 10.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PI;
    use crate::materials::Dispersion;

    fn ni() -> MaterialModel {
        MaterialModel::from_plasma_wavelength("Ni", 2.0 * PI * 40e-9, 110.0, Relaxation::PerfectLattice { gamma0: 1e8 }, Dispersion::Constant).unwrap()
    }

    #[test]
    fn quadratic_fit_recovers_polynomial() {
        let x = [0.5, 0.4, 0.3, 0.2, 0.1];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v + 7.0 * v * v).collect();
        let (c, w, r) = quadratic_fit(&x, &y).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-11 && (c[2] - 7.0).abs() < 1e-10);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn grids() {
        let g = log_grid(10.0, 1e-3, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 10.0).abs() < 1e-12 && (g[4] - 1e-3).abs() < 1e-15);
        assert!((g[2] - 0.1).abs() < 1e-14);
        let cfg = PlateConfiguration::similar(ni(), 5e-6, 1.0).unwrap();
        let d = default_nernst_grid(&cfg);
        assert_eq!(d.len(), 12);
        assert!(d.windows(2).all(|w| w[1] < w[0]));
        assert!((d[0] / cfg.effective_temperature() - 2e-2).abs() < 1e-15);
        let a = separation_for_lambda(&ni(), 0.1);
        assert!((PlateConfiguration::similar(ni(), a, 1.0).unwrap().state().unwrap().lambda - 0.1).abs() < 1e-15);
    }

    #[test]
    fn nernst_scan_rejects_bad_grids() {
        let cfg = PlateConfiguration::similar(ni(), 5e-6, 1.0).unwrap();
        let opts = NumericOptions::default();
        assert!(nernst_scan(&cfg, Model::Plasma, &[1.0, 2.0, 0.5], &opts).is_err());
        assert!(nernst_scan(&cfg, Model::Plasma, &[1.0, 0.5], &opts).is_err());
        let c = PlateConfiguration::similar(ni().with_relaxation(Relaxation::Constant { gamma: 1e10 }).unwrap(), 5e-6, 1.0).unwrap();
        assert!(matches!(nernst_scan(&c, Model::Drude, &[3.0, 2.0, 1.0], &opts), Err(Error::Config(_))));
    }

    #[test]
    fn sign_map_flips_near_threshold() {
        let grid: Vec<f64> = (0..39).map(|i| 2e-6 + i as f64 * 1e-6).collect();
        let rows = entropy_sign_map(&ni(), &grid).unwrap();
        let flip = sign_flip(&rows, false).unwrap();
        assert!((33e-6..35e-6).contains(&flip), "{flip}");
        let flip_exact = sign_flip(&rows, true).unwrap();
        assert!((33e-6..36e-6).contains(&flip_exact), "{flip_exact}");
        // at most one change of sign
        let changes = rows.windows(2).filter(|w| w[0].sign != w[1].sign).count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn sign_map_limits() {
        let grid = [3e-6, 10e-6, 30e-6];
        let rows = entropy_sign_map(&ni().with_mu0(1.0).unwrap(), &grid).unwrap();
        assert!(rows.iter().all(|r| r.sign == -1 && r.sign_exact == -1));
        let rows = entropy_sign_map(&ni().with_mu0(1e6).unwrap(), &[1e-3, 2e-3]).unwrap();
        assert!(rows.iter().all(|r| r.within_validity && r.sign == 1));
        let rows = entropy_sign_map(&ni(), &[0.5e-6]).unwrap();
        assert!(!rows[0].within_validity && rows[0].s0.is_nan());
    }

    #[test]
    fn identity_row_has_zero_discrepancy() {
        let cfg = PlateConfiguration::similar(ni(), 5e-6, 10.0).unwrap();
        let r = DiscrepancyRow::new(&cfg, 0.08, -1.25e-7, -1.25e-7, 1e-12);
        assert_eq!(r.rel_diff, 0.0);
        assert!(r.within_bound);
    }

    #[test]
    fn plasma_table_scales_as_lambda_cubed() {
        let rows = discrepancy_table(&default_plasma_grid(&ni()).unwrap(), Model::Plasma, &NumericOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.within_bound), "{rows:?}");
        let t6: Vec<DiscrepancyRow> = rows.iter().step_by(2).copied().collect();
        let slope = log_log_slope(&t6).unwrap();
        assert!((slope - 3.0).abs() <= 0.5, "slope {slope}");
    }

    #[test]
    fn drude_table_within_budget() {
        let rows = discrepancy_table(&default_drude_grid(&ni()).unwrap(), Model::Drude, &NumericOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.within_bound), "{rows:?}");
    }
}
