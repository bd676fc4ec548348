//! Polylogarithm and Riemann zeta values on the real line.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// B_2, B_4, ..., B_30.
const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

const EM_CUTOFF: usize = 16;
const EM_TERMS: usize = 8;

/// ζ(s) for real s > 1 by Euler–Maclaurin summation.
pub(crate) fn zeta_real(s: f64) -> f64 {
    let n = EM_CUTOFF as f64;
    let mut head = 0.0;
    for k in (1..EM_CUTOFF).rev() {
        head += (k as f64).powf(-s);
    }
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut fact = 1.0; // (2j)!
    let mut rising = s; // (s)_{2j-1}
    for j in 1..=EM_TERMS {
        let two_j = 2.0 * j as f64;
        fact *= (two_j - 1.0) * two_j;
        tail += BERNOULLI_EVEN[j - 1] / fact * rising * n.powf(-s - two_j + 1.0);
        rising *= (s + two_j - 1.0) * (s + two_j);
    }
    head + tail
}

/// dζ/ds for real s > 1, differentiating the Euler–Maclaurin form term by term.
pub(crate) fn zeta_derivative_real(s: f64) -> f64 {
    let n = EM_CUTOFF as f64;
    let ln_n = n.ln();
    let mut head = 0.0;
    for k in (2..EM_CUTOFF).rev() {
        let kf = k as f64;
        head -= kf.ln() * kf.powf(-s);
    }
    let a = n.powf(1.0 - s);
    let mut tail = -ln_n * a / (s - 1.0) - a / ((s - 1.0) * (s - 1.0)) - 0.5 * ln_n * n.powf(-s);
    let mut fact = 1.0;
    for j in 1..=EM_TERMS {
        let two_j = 2.0 * j as f64;
        fact *= (two_j - 1.0) * two_j;
        let m = 2 * j - 1;
        let mut rising = 1.0;
        let mut log_deriv = 0.0;
        for i in 0..m {
            rising *= s + i as f64;
            log_deriv += 1.0 / (s + i as f64);
        }
        tail += BERNOULLI_EVEN[j - 1] / fact * rising * n.powf(-s - m as f64) * (log_deriv - ln_n);
    }
    head + tail
}

/// Riemann zeta function at an integer argument n ≥ 2.
pub fn zeta(n: i32) -> Result<f64> {
    if n < 2 {
        return Err(Error::arg(format!("zeta: order must be >= 2, got {n}")));
    }
    Ok(match n {
        2 => PI * PI / 6.0,
        4 => PI.powi(4) / 90.0,
        _ => zeta_real(n as f64),
    })
}

/// ζ'(n) for integer n ≥ 2.
pub fn zeta_derivative(n: i32) -> Result<f64> {
    if n < 2 {
        return Err(Error::arg(format!("zeta_derivative: order must be >= 2, got {n}")));
    }
    Ok(zeta_derivative_real(n as f64))
}

/// ζ'(−1), from the functional equation in terms of ζ'(2).
pub fn zeta_derivative_minus_one() -> f64 {
    (1.0 - EULER_GAMMA - (2.0 * PI).ln()) / 12.0 + zeta_derivative_real(2.0) / (2.0 * PI * PI)
}

/// ζ at a (possibly non-positive) integer, excluding the pole at 1.
fn zeta_integer_any(m: i64) -> f64 {
    if m >= 2 {
        zeta_real(m as f64)
    } else if m == 0 {
        -0.5
    } else {
        let k = -m;
        if k % 2 == 0 {
            0.0
        } else {
            // ζ(1 − 2j) = −B_2j / (2j)
            let j = ((k + 1) / 2) as usize;
            -BERNOULLI_EVEN[j - 1] / (2 * j) as f64
        }
    }
}

/// Polylogarithm Li_n(z) for integer n ≥ 2 and real z ∈ [−1, 1].
pub fn polylog(n: i32, z: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::arg(format!("polylog: order must be >= 2, got {n}")));
    }
    if !(-1.0..=1.0).contains(&z) {
        return Err(Error::arg(format!("polylog: argument must lie in [-1, 1], got {z}")));
    }
    Ok(polylog_unchecked(n, z))
}

fn polylog_unchecked(n: i32, z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else if z == 1.0 {
        zeta_real(n as f64)
    } else if z.abs() <= 0.5 {
        polylog_series(n, z)
    } else if z > 0.0 {
        polylog_near_one(n, z)
    } else {
        // Li_n(z) + Li_n(−z) = 2^{1−n} Li_n(z²)
        2f64.powi(1 - n) * polylog_unchecked(n, z * z) - polylog_unchecked(n, -z)
    }
}

fn polylog_series(n: i32, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zk = 1.0;
    let mut terms = Vec::with_capacity(64);
    for k in 1..200 {
        zk *= z;
        let term = zk / (k as f64).powi(n);
        terms.push(term);
        if term.abs() < 1e-18 {
            break;
        }
    }
    for t in terms.iter().rev() {
        sum += t;
    }
    sum
}

/// Expansion in μ = ln z about z = 1, convergent for |μ| < 2π.
fn polylog_near_one(n: i32, z: f64) -> f64 {
    let mu = z.ln();
    let nm1 = (n - 1) as i64;
    let harmonic: f64 = (1..=nm1).map(|k| 1.0 / k as f64).sum();
    let mut sum = 0.0;
    let mut pow = 1.0; // μ^k / k!
    for k in 0..60_i64 {
        if k > 0 {
            pow *= mu / k as f64;
        }
        let term = if k == nm1 {
            pow * (harmonic - (-mu).ln())
        } else {
            zeta_integer_any(n as i64 - k) * pow
        };
        sum += term;
        // ζ(n − k) vanishes at even negative arguments, so bound the term by (|μ|/2π)^k.
        if k > nm1 + 2 && (mu.abs() / (2.0 * PI)).powi(k as i32) < 1e-18 {
            break;
        }
    }
    sum
}
