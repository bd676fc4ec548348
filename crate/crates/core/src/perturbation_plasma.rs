//! Small-Λ expansion of the plasma-model free energy for constant μ.
//!
//! Λ = (λ_p¹√μ₀¹ + λ_p²√μ₀²)/(4πa). The thermal correction is
//! Δ_T F = ħc/(16π²a³) Σ_{l≥1} [B0(lt) + B1(lt)Λ + B2(lt)Λ²].

use crate::constants::{C, HBAR, K_B, PI};
use crate::error::{Error, Result};
use crate::lifshitz_numeric::energy_unit;
use crate::materials::PlateConfiguration;
use crate::special_functions::{polylog, zeta};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BCoefficients {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Σ_{l≥1} B_j(lt) for j = 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BSums {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    /// Number of exponentially small remainders added.
    pub terms_used: usize,
    pub tail_estimate: f64,
}

impl BSums {
    pub fn combine(&self, lambda: f64) -> f64 {
        self.s0 + lambda * (self.s1 + lambda * self.s2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    /// J/m².
    pub value: f64,
    pub terms_used: usize,
    /// J/m².
    pub tail_estimate: f64,
}

/// Default cap on the number of l-terms.
pub const DEFAULT_L_MAX: usize = 100_000;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..0.25).contains(&lambda) {
        return Err(Error::arg(format!("Λ must lie in [0, 0.25), got {lambda}")));
    }
    Ok(())
}

/// F(ζ, y) to second order in Λ (ideal metal at Λ = 0).
pub fn integrand_expansion(zeta: f64, y: f64, lambda: f64) -> Result<f64> {
    if !(zeta >= 0.0) || !(y > 0.0) {
        return Err(Error::arg("integrand_expansion: need ζ >= 0 and y > 0"));
    }
    if zeta > y {
        return Err(Error::arg(format!("integrand_expansion: ζ = {zeta} > y = {y}")));
    }
    check_lambda(lambda)?;
    let em = -(-y).exp_m1(); // 1 − e^{−y}
    let z2 = zeta * zeta;
    let y2 = y * y;
    Ok(2.0 * (-(-y).exp()).ln_1p() + 2.0 * lambda * (z2 + y2) / (y * y.exp_m1())
        - 2.0 * lambda * lambda * (-y).exp() / (em * em) * (z2 * z2 + y2 * y2) / y2)
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Σ_k c_k s^{2k+1}, with c_k from `coeff`, for |s| small.
fn odd_series(s: f64, coeff: impl Fn(i32) -> f64) -> f64 {
    let s2 = s * s;
    let mut pow = s;
    let mut sum = 0.0;
    for k in 0..24 {
        sum += coeff(k) * pow;
        pow *= s2;
    }
    sum
}

fn alt(k: i32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// 1/n! for n ≥ 0, zero otherwise.
fn inv_fact(n: i32) -> f64 {
    if n < 0 {
        0.0
    } else {
        1.0 / factorial(n)
    }
}

/// sin s − s cos s − s² sin s.
fn bracket1(s: f64) -> f64 {
    if s.abs() < 1.0 {
        odd_series(s, |k| alt(k) * (inv_fact(2 * k + 1) - inv_fact(2 * k) + inv_fact(2 * k - 1)))
    } else {
        let (sn, cs) = s.sin_cos();
        sn - s * cs - s * s * sn
    }
}

/// 12 sin s − 12 s cos s − 6 s² sin s + 2 s³ cos s + s⁴ sin s.
fn bracket2(s: f64) -> f64 {
    if s.abs() < 1.0 {
        odd_series(s, |k| {
            alt(k)
                * (12.0 * inv_fact(2 * k + 1) - 12.0 * inv_fact(2 * k) + 6.0 * inv_fact(2 * k - 1)
                    - 2.0 * inv_fact(2 * k - 2)
                    + inv_fact(2 * k - 3))
        })
    } else {
        let (sn, cs) = s.sin_cos();
        let s2 = s * s;
        12.0 * sn - 12.0 * s * cs - 6.0 * s2 * sn + 2.0 * s2 * s * cs + s2 * s2 * sn
    }
}

/// (A0, A1, A2): ∫₀^y cos(ltζ) F(ζ, y) dζ order by order in Λ.
pub fn a_functions(l: usize, t: f64, y: f64) -> Result<(f64, f64, f64)> {
    if l == 0 || !(t > 0.0) || !(y > 0.0) {
        return Err(Error::arg("a_functions: need l >= 1, t > 0, y > 0"));
    }
    let x = l as f64 * t;
    let s = x * y;
    let em = -(-y).exp_m1();
    let a0 = 2.0 / x * (-(-y).exp()).ln_1p() * s.sin();
    let a1 = -4.0 / (y * y.exp_m1()) * bracket1(s) / (x * x * x);
    let a2 = -4.0 * (-y).exp() / (y * y * em * em) * bracket2(s) / x.powi(5);
    Ok((a0, a1, a2))
}

/// Hyperbolic pieces at πx with e = e^{−2πx}: (coth − 1, 1/sinh², cosh/sinh³).
fn hyperbolic(x: f64) -> (f64, f64, f64, f64) {
    let e = (-2.0 * PI * x).exp();
    if PI * x > 20.0 {
        (e, 2.0 * e, 4.0 * e, 4.0 * e)
    } else {
        let d = 1.0 - e;
        (e, 2.0 * e / d, 4.0 * e / (d * d), 4.0 * e * (1.0 + e) / (d * d * d))
    }
}

/// Power-law parts of (B0, B1, B2) at x = lt.
fn b_power(x: f64) -> [f64; 3] {
    let x3 = x * x * x;
    let x4 = x3 * x;
    [2.0 / x4 - PI / x3, -2.0 * (PI / x3 - 4.0 / x4), 2.0 * PI / (x4 * x)]
}

/// Exponentially small parts of (B0, B1, B2) at x = lt.
fn b_remainder(x: f64) -> [f64; 3] {
    let (e, cm1, csch2, cosh_sinh3) = hyperbolic(x);
    let coth = 1.0 + cm1;
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    let pi2 = PI * PI;
    let r0 = -PI * cm1 / x3 - pi2 * csch2 / x2;
    let r1 = -2.0 * (PI * cm1 / x3 + pi2 * csch2 / x2 + 2.0 * PI * pi2 * cosh_sinh3 / x);
    let li2 = polylog(2, e).unwrap_or(0.0);
    let r2 = 2.0
        * (6.0 * PI * cm1 / x3
            + 2.0 * pi2 * pi2 * csch2 * (-2.0 * coth * coth - csch2 + coth / (PI * x) - 1.0 / (pi2 * x2))
            + 12.0 * (-e).ln_1p() / x4
            - 24.0 * PI * e / ((1.0 - e) * x3)
            - 6.0 * li2 / (PI * x4 * x));
    [r0, r1, r2]
}

/// Closed-form B coefficients at l·t. B1 is the exact y-integral of A1:
/// −2[π coth(πx)/x³ − 4/x⁴ + π²/(x² sinh²πx) + 2π³ cosh(πx)/(x sinh³πx)].
pub fn b_coefficients(l: usize, t: f64) -> Result<BCoefficients> {
    if l == 0 || !(t > 0.0) {
        return Err(Error::arg("b_coefficients: need l >= 1 and t > 0"));
    }
    let x = l as f64 * t;
    let p = b_power(x);
    let r = b_remainder(x);
    Ok(BCoefficients { b0: p[0] + r[0], b1: p[1] + r[1], b2: p[2] + r[2] })
}

fn sum_remainders(t: f64, l_max: usize, f: impl Fn(f64) -> [f64; 3]) -> Result<([f64; 3], usize, f64)> {
    let mut acc = [0.0; 3];
    for l in 1..=l_max {
        let r = f(l as f64 * t);
        for j in 0..3 {
            acc[j] += r[j];
        }
        let negligible = (0..3).all(|j| r[j].abs() <= 1e-18 * acc[j].abs().max(f64::MIN_POSITIVE))
            || (-2.0 * PI * l as f64 * t).exp() < 1e-300;
        if negligible {
            let q = (-2.0 * PI * t).exp();
            let tail = r.iter().fold(0.0f64, |m, v| m.max(v.abs())) * q / (1.0 - q);
            return Ok((acc, l, tail));
        }
    }
    Err(Error::NonConvergence(format!("B-series remainder not converged within l_max = {l_max}")))
}

/// Σ_{l≥1} B_j(lt): power parts summed in closed form through ζ values, plus
/// the exponentially convergent remainder.
pub fn b_sums(t: f64, l_max: usize) -> Result<BSums> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::arg(format!("b_sums: t must be positive and finite, got {t}")));
    }
    let (z3, z4, z5) = (zeta(3)?, zeta(4)?, zeta(5)?);
    let t3 = t * t * t;
    let t4 = t3 * t;
    let (r, n, tail) = sum_remainders(t, l_max, b_remainder)?;
    Ok(BSums {
        s0: 2.0 * z4 / t4 - PI * z3 / t3 + r[0],
        s1: -2.0 * (PI * z3 / t3 - 4.0 * z4 / t4) + r[1],
        s2: 2.0 * PI * z5 / (t4 * t) + r[2],
        terms_used: n,
        tail_estimate: tail,
    })
}

/// x·dR/dx of the remainders by a five-point stencil.
fn b_remainder_log_derivative(x: f64) -> [f64; 3] {
    let h = 2e-4 * x;
    let f = |k: f64| b_remainder(x + k * h);
    let (m2, m1, p1, p2) = (f(-2.0), f(-1.0), f(1.0), f(2.0));
    let mut out = [0.0; 3];
    for j in 0..3 {
        out[j] = x * (m2[j] - 8.0 * m1[j] + 8.0 * p1[j] - p2[j]) / (12.0 * h);
    }
    out
}

/// t·∂/∂t of Σ_l B_j(lt).
pub fn b_sums_log_derivative(t: f64, l_max: usize) -> Result<[f64; 3]> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::arg(format!("b_sums_log_derivative: t must be positive, got {t}")));
    }
    let (z3, z4, z5) = (zeta(3)?, zeta(4)?, zeta(5)?);
    let t3 = t * t * t;
    let t4 = t3 * t;
    let (r, _, _) = sum_remainders(t, l_max, b_remainder_log_derivative)?;
    Ok([
        -8.0 * z4 / t4 + 3.0 * PI * z3 / t3 + r[0],
        -2.0 * (-3.0 * PI * z3 / t3 + 16.0 * z4 / t4) + r[1],
        -10.0 * PI * z5 / (t4 * t) + r[2],
    ])
}

fn t_of(cfg: &PlateConfiguration) -> Result<f64> {
    if !(cfg.temperature > 0.0) {
        return Err(Error::arg("temperature must be positive"));
    }
    Ok(HBAR * C / (2.0 * cfg.a * K_B * cfg.temperature))
}

/// Δ_T F from the B-series, J/m².
pub fn thermal_correction_series(cfg: &PlateConfiguration, lambda: f64, l_max: usize) -> Result<SeriesResult> {
    check_lambda(lambda)?;
    let t = t_of(cfg)?;
    if !(t > 1.0) {
        return Err(Error::validity(format!("B-series requires t > 1, got t = {t}")));
    }
    let s = b_sums(t, l_max)?;
    let unit = energy_unit(cfg.a) / (16.0 * PI * PI);
    let tail = s.tail_estimate * (1.0 + lambda + lambda * lambda);
    Ok(SeriesResult { value: unit * s.combine(lambda), terms_used: s.terms_used, tail_estimate: unit * tail })
}

/// Minimum t for the low-temperature closed forms.
pub const LOW_T_MIN_T: f64 = 10.0;

fn low_t_gate(cfg: &PlateConfiguration) -> Result<f64> {
    let t = t_of(cfg)?;
    if !(t > LOW_T_MIN_T) {
        return Err(Error::validity(format!("low-temperature asymptotics require t > {LOW_T_MIN_T}, got t = {t}")));
    }
    Ok(t)
}

/// Power-law and exponential groups of the low-temperature thermal
/// correction, in units of ħc/a³.
pub(crate) fn low_t_parts(t: f64, lambda: f64) -> Result<(f64, f64)> {
    let (z3, z5) = (zeta(3)?, zeta(5)?);
    let pi3 = PI * PI * PI;
    let t3 = t * t * t;
    let t4 = t3 * t;
    let e = (-2.0 * PI * t).exp();
    let power = z3 / (2.0 * t3) - pi3 / (90.0 * t4) + lambda * (z3 / t3 - 2.0 * pi3 / (45.0 * t4))
        - lambda * lambda * z5 / (t4 * t);
    let expo = 2.0 * PI / (t * t) * e + lambda * 8.0 * PI * PI / t * e + lambda * lambda * 16.0 * pi3 * e;
    let pref = -1.0 / (8.0 * PI);
    Ok((pref * power, pref * expo))
}

/// Low-temperature thermal correction including the leading e^{−2πt} terms, J/m².
pub fn low_t_free_energy(cfg: &PlateConfiguration, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let t = low_t_gate(cfg)?;
    let (p, e) = low_t_parts(t, lambda)?;
    Ok((p + e) * energy_unit(cfg.a))
}

/// Low-temperature entropy without exponentially small terms, J/(K·m²):
/// −∂/∂T of the power-law group of [`low_t_free_energy`].
pub fn entropy_asymptotic(cfg: &PlateConfiguration, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let t = low_t_gate(cfg)?;
    let tau = 2.0 * PI / t;
    let (z3, z5) = (zeta(3)?, zeta(5)?);
    let pi2 = PI * PI;
    let bracket = 1.5 * z3 - pi2 * tau / 45.0 + lambda * (3.0 * z3 - 4.0 * pi2 * tau / 45.0)
        - lambda * lambda * 5.0 * z5 * tau * tau / (4.0 * pi2);
    Ok(K_B * tau * tau / (16.0 * cfg.a * cfg.a * PI * pi2) * bracket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifshitz_numeric::reflection_coefficients;
    use crate::materials::{Dispersion, MaterialModel, Relaxation};
    use crate::quadrature::{integrate, integrate_exp_tail, QuadOptions};

    fn ni() -> MaterialModel {
        MaterialModel::from_plasma_wavelength("Ni", 2.0 * PI * 40e-9, 110.0, Relaxation::None, Dispersion::Constant).unwrap()
    }

    #[test]
    fn ideal_metal_integrand() {
        let y = 0.7;
        assert_eq!(integrand_expansion(0.3, y, 0.0).unwrap(), 2.0 * (1.0 - (-y).exp()).ln());
        assert!(integrand_expansion(2.0, 1.0, 0.1).is_err());
        assert!(integrand_expansion(0.5, 1.0, 0.3).is_err());
    }

    #[test]
    fn integrand_hand_value() {
        // ζ = y = 1, Λ = 0.1
        let e1 = (-1.0f64).exp();
        let expected = 2.0 * (1.0 - e1).ln() + 0.2 * 2.0 / (1f64.exp() - 1.0) - 0.02 * e1 * 2.0 / (1.0 - e1).powi(2);
        assert!((integrand_expansion(1.0, 1.0, 0.1).unwrap() - expected).abs() < 1e-15);
    }

    /// Exact F(ζ, y) for similar plasma plates with constant μ at given Λ.
    fn exact_integrand(zeta: f64, y: f64, lambda: f64, mu: f64) -> f64 {
        let beta = lambda / (2.0 * mu.sqrt());
        let eps = 1.0 + 1.0 / (beta * beta * zeta * zeta);
        let r = reflection_coefficients(eps, mu, zeta, y).unwrap();
        let e = (-y).exp();
        (-r.r_tm * r.r_tm * e).ln_1p() + (-r.r_te * r.r_te * e).ln_1p()
    }

    // Largest |exact − expansion|/Λ³ over the grid below is 5.51 (at Λ = 0.005,
    // μ₀ = 110); frozen with a small margin.
    const INTEGRAND_LAMBDA3_C: f64 = 6.0;

    #[test]
    fn expansion_error_is_third_order() {
        for &lambda in &[0.005, 0.01, 0.02, 0.04, 0.08, 0.15] {
            let mut worst = 0.0f64;
            for i in 1..=20 {
                let y = 0.25 * i as f64;
                for j in 1..=10 {
                    let zeta = y * j as f64 / 10.0;
                    let d = (exact_integrand(zeta, y, lambda, 110.0) - integrand_expansion(zeta, y, lambda).unwrap()).abs();
                    worst = worst.max(d);
                }
            }
            assert!(worst <= INTEGRAND_LAMBDA3_C * lambda.powi(3), "Λ = {lambda}: {worst:e}");
        }
    }

    #[test]
    fn a_functions_match_cosine_quadrature() {
        let q = QuadOptions::relative(1e-13).with_abs(1e-300);
        for &(l, t, y) in &[(1usize, 1.0, 0.5), (2, 0.7, 2.0), (3, 1.3, 4.5), (1, 0.05, 0.3)] {
            let x = l as f64 * t;
            let (a0, a1, a2) = a_functions(l, t, y).unwrap();
            let part = |j: usize| {
                integrate(
                    |z| {
                        let f0 = integrand_expansion(z, y, 0.0).unwrap();
                        let f1 = 2.0 * (z * z + y * y) / (y * y.exp_m1());
                        let em = -(-y).exp_m1();
                        let f2 = -2.0 * (-y).exp() / (em * em) * (z.powi(4) + y.powi(4)) / (y * y);
                        (x * z).cos() * [f0, f1, f2][j]
                    },
                    0.0,
                    y,
                    q,
                )
                .unwrap()
                .value
            };
            for (j, a) in [a0, a1, a2].into_iter().enumerate() {
                let exact = part(j);
                assert!((a - exact).abs() <= 1e-10 * exact.abs().max(1e-3), "l={l} t={t} y={y} j={j}: {a} vs {exact}");
            }
        }
    }

    #[test]
    fn a0_small_angle_limit() {
        let y = 0.4;
        let (a0, _, _) = a_functions(1, 1e-6, y).unwrap();
        assert!((a0 / (2.0 * y * (1.0 - (-y).exp()).ln()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn small_angle_brackets_join_continuously() {
        for &s in &[0.999_999f64, 1.000_001] {
            let (sn, cs) = s.sin_cos();
            let direct1 = sn - s * cs - s * s * sn;
            let direct2 = 12.0 * sn - 12.0 * s * cs - 6.0 * s * s * sn + 2.0 * s.powi(3) * cs + s.powi(4) * sn;
            assert!((bracket1(s) / direct1 - 1.0).abs() < 1e-12);
            assert!((bracket2(s) / direct2 - 1.0).abs() < 1e-9);
        }
        assert!((bracket1(1e-3) / (-2.0 / 3.0 * 1e-9) - 1.0).abs() < 1e-5);
        assert!((bracket2(1e-2) / (0.6 * 1e-10) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn b_coefficients_are_y_integrals_of_a_functions() {
        let q = QuadOptions::relative(1e-12).with_abs(1e-300);
        for &(l, t) in &[(1usize, 1.0), (2, 0.25), (1, 2.0)] {
            let b = b_coefficients(l, t).unwrap();
            let by = |j: usize| {
                integrate_exp_tail(
                    |y| {
                        let a = a_functions(l, t, y).unwrap();
                        y * [a.0, a.1, a.2][j]
                    },
                    0.0,
                    q,
                )
                .unwrap()
                .value
            };
            for (j, v) in [b.b0, b.b1, b.b2].into_iter().enumerate() {
                let exact = by(j);
                assert!((v - exact).abs() <= 1e-8 * exact.abs(), "lt={} j={j}: {v} vs {exact}", l as f64 * t);
            }
        }
    }

    #[test]
    fn b0_negative_and_large_argument_limit() {
        for i in 1..200 {
            let x = 0.05 * i as f64;
            assert!(b_coefficients(1, x).unwrap().b0 < 0.0, "x = {x}");
        }
        let x = 30.0;
        let b = b_coefficients(1, x).unwrap();
        assert!((b.b0 / (2.0 / x.powi(4) - PI / x.powi(3)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn li2_of_small_argument() {
        for &x in &[2.0, 4.0, 6.0] {
            let e = (-2.0 * PI * x).exp();
            assert!((polylog(2, e).unwrap() / e - 1.0).abs() <= e);
        }
    }

    #[test]
    fn stable_and_naive_hyperbolics_agree() {
        for &x in &[0.3, 1.0, 3.0, 6.0] {
            let (_, cm1, csch2, cs3) = hyperbolic(x);
            let px = PI * x;
            assert!(((1.0 + cm1) / (px.cosh() / px.sinh()) - 1.0).abs() < 1e-14);
            assert!((csch2 * px.sinh().powi(2) - 1.0).abs() < 1e-13);
            assert!((cs3 * px.sinh().powi(3) / px.cosh() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn zeta_sums_match_direct_summation() {
        let t = 1.3;
        let s = b_sums(t, DEFAULT_L_MAX).unwrap();
        let n = 200_000usize;
        let mut direct = [0.0f64; 3];
        for l in (1..=n).rev() {
            let b = b_coefficients(l, t).unwrap();
            direct[0] += b.b0;
            direct[1] += b.b1;
            direct[2] += b.b2;
        }
        // Tails of the power parts beyond n: Σ_{l>n} c/(lt)^k ≈ c/((k−1) t^k n^{k−1}).
        let nf = n as f64;
        direct[0] += -PI / (2.0 * t.powi(3) * nf * nf);
        direct[1] += -2.0 * PI / (2.0 * t.powi(3) * nf * nf);
        for (j, v) in [s.s0, s.s1, s.s2].into_iter().enumerate() {
            assert!((v - direct[j]).abs() <= 1e-10 * v.abs(), "j={j}: {v} vs {}", direct[j]);
        }
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        for &t in &[1.2, 3.0, 11.0] {
            let d = b_sums_log_derivative(t, DEFAULT_L_MAX).unwrap();
            let central = |h: f64| {
                let p = b_sums(t + h, DEFAULT_L_MAX).unwrap();
                let m = b_sums(t - h, DEFAULT_L_MAX).unwrap();
                [(p.s0 - m.s0), (p.s1 - m.s1), (p.s2 - m.s2)].map(|v| t * v / (2.0 * h))
            };
            let (d1, d2) = (central(1e-3 * t), central(5e-4 * t));
            let fd = [0, 1, 2].map(|j| (4.0 * d2[j] - d1[j]) / 3.0);
            for j in 0..3 {
                assert!((d[j] - fd[j]).abs() <= 1e-7 * d[j].abs(), "t={t} j={j}: {} vs {}", d[j], fd[j]);
            }
        }
    }

    #[test]
    fn series_vanishes_as_temperature_drops() {
        let cfg = PlateConfiguration::similar(ni(), 5e-6, 1e-3).unwrap();
        let v = thermal_correction_series(&cfg, 0.08, DEFAULT_L_MAX).unwrap().value;
        let hot = thermal_correction_series(&cfg.with_temperature(1.0).unwrap(), 0.08, DEFAULT_L_MAX).unwrap().value;
        assert!(v.abs() < 1e-8 * hot.abs());
    }

    #[test]
    fn series_gates() {
        let cfg = PlateConfiguration::similar(ni(), 5e-6, 1000.0).unwrap();
        assert!(matches!(thermal_correction_series(&cfg, 0.08, DEFAULT_L_MAX), Err(Error::Validity(_))));
        let cfg = PlateConfiguration::similar(ni(), 5e-6, 100.0).unwrap();
        assert!(matches!(low_t_free_energy(&cfg, 0.08), Err(Error::Validity(_))));
        assert!(matches!(entropy_asymptotic(&cfg, 0.08), Err(Error::Validity(_))));
        assert!(thermal_correction_series(&cfg, 0.3, DEFAULT_L_MAX).is_err());
    }

    #[test]
    fn low_t_form_matches_series_at_t_50() {
        let a = 5e-6;
        let teff = HBAR * C / (2.0 * a * K_B);
        let cfg = PlateConfiguration::similar(ni(), a, teff / 50.0).unwrap();
        let lambda = cfg.state().unwrap().lambda;
        let s = thermal_correction_series(&cfg, lambda, DEFAULT_L_MAX).unwrap().value;
        let f = low_t_free_energy(&cfg, lambda).unwrap();
        assert!(((f - s) / s).abs() < 1e-3);
        // the exponential terms are those of the exact series
        assert!(((f - s) / s).abs() < 1e-12, "{f} vs {s}");
    }

    #[test]
    fn ideal_metal_low_t_form() {
        let a = 2e-6;
        let teff = HBAR * C / (2.0 * a * K_B);
        let t = 40.0;
        let cfg = PlateConfiguration::similar(ni(), a, teff / t).unwrap();
        let z3 = zeta(3).unwrap();
        let expected = -(HBAR * C / (8.0 * PI * a.powi(3))) * (z3 / (2.0 * t.powi(3)) - PI.powi(3) / (90.0 * t.powi(4)));
        let got = low_t_free_energy(&cfg, 0.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-12);
        let s = thermal_correction_series(&cfg, 0.0, DEFAULT_L_MAX).unwrap().value;
        assert!(((s - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn exponential_group_is_negligible_above_t_10() {
        for &t in &[10.5, 20.0, 80.0] {
            let (p, e) = low_t_parts(t, 0.1).unwrap();
            assert!(e.abs() < 1e-10 * p.abs(), "t={t}");
        }
    }

    #[test]
    fn entropy_is_the_temperature_derivative() {
        let a = 5e-6;
        let teff = HBAR * C / (2.0 * a * K_B);
        let lambda = 0.08;
        let (z3, z5) = (zeta(3).unwrap(), zeta(5).unwrap());
        for &t in &[12.0, 30.0, 300.0] {
            let temp = teff / t;
            let cfg = PlateConfiguration::similar(ni(), a, temp).unwrap();
            let pi3 = PI.powi(3);
            // (t/T)·∂F/∂t of the power-law group, written out term by term.
            let s = HBAR * C / (8.0 * PI * a.powi(3) * temp)
                * (1.5 * z3 / t.powi(3) - 4.0 * pi3 / (90.0 * t.powi(4))
                    + lambda * (3.0 * z3 / t.powi(3) - 8.0 * pi3 / (45.0 * t.powi(4)))
                    - 5.0 * lambda * lambda * z5 / t.powi(5));
            let got = entropy_asymptotic(&cfg, lambda).unwrap();
            assert!(((got - s) / s).abs() < 1e-10, "t={t}: {got} vs {s}");
            assert!(got > 0.0);
        }
    }

    #[test]
    fn entropy_leading_order() {
        let a = 5e-6;
        let lambda = 0.05;
        let teff = HBAR * C / (2.0 * a * K_B);
        let cfg = PlateConfiguration::similar(ni(), a, teff * 1e-5).unwrap();
        let tau = 2.0 * PI * 1e-5;
        let lead = K_B / (16.0 * a * a * PI.powi(3)) * (1.5 + 3.0 * lambda) * zeta(3).unwrap();
        let ratio = entropy_asymptotic(&cfg, lambda).unwrap() / (tau * tau);
        assert!((ratio / lead - 1.0).abs() < 1e-4);
    }

    #[test]
    fn series_scales_with_separation_at_fixed_t() {
        let c1 = PlateConfiguration::similar(ni(), 4e-6, 10.0).unwrap();
        let c2 = PlateConfiguration::similar(ni(), 8e-6, 5.0).unwrap();
        let f1 = thermal_correction_series(&c1, 0.05, DEFAULT_L_MAX).unwrap().value;
        let f2 = thermal_correction_series(&c2, 0.05, DEFAULT_L_MAX).unwrap().value;
        assert!((f2 / f1 - 0.125).abs() < 1e-14);
    }
}
