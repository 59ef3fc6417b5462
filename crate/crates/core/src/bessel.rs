//! Bessel functions of the first kind `J_n(z)` for integer order and complex
//! argument.
//!
//! Three independent evaluation paths are provided:
//!
//! * the ascending power series, used for `|z| <= 12`;
//! * Hankel's large-argument expansion, used for `|z| > 12` when the
//!   asymptotic series reaches full precision (roughly `n² ≲ |z|`);
//! * Miller's backward recurrence ([`bessel_j_sequence`]), which produces a
//!   whole run of orders at once and is what the rate pipeline uses. It is
//!   normalised with the generating-function identity
//!   `e^{∓iz} = J_0(z) + 2 Σ_{n≥1} (∓i)^n J_n(z)`, choosing the sign that keeps
//!   every term bounded by the left-hand side.
//!
//! [`bessel_j`] dispatches between series and asymptotics and falls back to the
//! recurrence where neither is accurate.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const SERIES_RADIUS: f64 = 12.0;

#[inline]
fn parity(n: i32) -> f64 {
    if n & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Ascending series `J_n(z) = (z/2)^n Σ_k (−z²/4)^k / (k! (n+k)!)`.
pub fn bessel_j_series(n: i32, z: C64) -> C64 {
    let order = n.unsigned_abs();
    let sign = if n < 0 { parity(n) } else { 1.0 };
    if z == C64::new(0.0, 0.0) {
        return if order == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let half = z * 0.5;
    // (z/2)^n / n!
    let mut lead = C64::new(1.0, 0.0);
    for k in 1..=order {
        lead = lead * half / k as f64;
    }
    let q = -half * half;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut k = 1u32;
    loop {
        term = term * q / (k as f64 * (order + k) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() || k > 500 {
            break;
        }
        k += 1;
    }
    lead * sum * sign
}

/// Hankel asymptotic expansion for large `|z|`. Returns `None` when the
/// smallest term of the divergent series is not below `1e-15` relative.
pub fn bessel_j_hankel(n: i32, z: C64) -> Option<C64> {
    if z.re < 0.0 {
        return bessel_j_hankel(n, -z).map(|v| v * parity(n));
    }
    let mu = 4.0 * (n as f64) * (n as f64);
    let eight_z = z * 8.0;
    // P ~ Σ (-1)^k a_{2k}, Q ~ Σ (-1)^k a_{2k+1}, a_k = Π (μ - (2j-1)²) / (k! (8z)^k)
    let mut p = C64::new(1.0, 0.0);
    let mut q = C64::new(0.0, 0.0);
    let mut a = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    let mut converged = false;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (eight_z * k as f64);
        let size = next.norm();
        if size > last {
            break;
        }
        a = next;
        last = size;
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if size < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged && last > 1e-15 {
        return None;
    }
    let chi = z - (n as f64) * PI / 2.0 - PI / 4.0;
    let pre = (C64::new(2.0 / PI, 0.0) / z).sqrt();
    Some(pre * (p * chi.cos() - q * chi.sin()))
}

/// `J_n(z)` for a single order.
pub fn bessel_j(n: i32, z: C64) -> Result<C64> {
    // negative orders through J_{-n} = (-1)^n J_n
    let order = n.unsigned_abs();
    let sign = if n < 0 { parity(n) } else { 1.0 };
    let value = if z.norm() <= SERIES_RADIUS {
        bessel_j_series(order as i32, z)
    } else if let Some(v) = bessel_j_hankel(order as i32, z) {
        v
    } else {
        let mut buf = vec![C64::new(0.0, 0.0); order as usize + 1];
        bessel_j_sequence(z, &mut buf);
        buf[order as usize]
    } * sign;
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::BesselOverflow {
            order: n,
            re: z.re,
            im: z.im,
        })
    }
}

/// Fills `out[k] = J_k(z)` for `k = 0..out.len()` by Miller's backward
/// recurrence.
pub fn bessel_j_sequence(z: C64, out: &mut [C64]) {
    let nmax = out.len().saturating_sub(1);
    let modulus = z.norm();
    if modulus < 1.0 {
        for (k, v) in out.iter_mut().enumerate() {
            *v = bessel_j_series(k as i32, z);
        }
        return;
    }
    let mut start = (nmax as f64).max(modulus).ceil() as usize + 24 + (modulus.sqrt() * 4.0) as usize;
    start += start & 1;

    // e^{-iz} for Im z >= 0, e^{+iz} otherwise; unit = -i or +i.
    let unit = if z.im >= 0.0 {
        C64::new(0.0, -1.0)
    } else {
        C64::new(0.0, 1.0)
    };
    let target = (unit * z).exp();

    let two_over_z = C64::new(2.0, 0.0) / z;
    let mut upper = C64::new(0.0, 0.0); // J_{k+1}
    let mut current = C64::new(1.0, 0.0); // J_k (unnormalised), k = start
    // phase = unit^k
    let mut phase = unit_power(unit, start);
    let inv_unit = unit.conj();
    let mut norm = C64::new(0.0, 0.0);
    for v in out.iter_mut() {
        *v = C64::new(0.0, 0.0);
    }
    let mut k = start;
    loop {
        if k <= nmax {
            out[k] = current;
        }
        if k == 0 {
            norm += current;
            break;
        }
        norm += current * phase * 2.0;
        let lower = two_over_z * (k as f64) * current - upper;
        upper = current;
        current = lower;
        phase *= inv_unit;
        k -= 1;
        let size = current.norm();
        if size > 1e100 {
            let s = 1e-100;
            current *= s;
            upper *= s;
            norm *= s;
            for v in out.iter_mut().skip(k + 1).take(nmax.saturating_sub(k)) {
                *v *= s;
            }
        }
    }
    let scale = target / norm;
    for v in out.iter_mut() {
        *v *= scale;
    }
}

fn unit_power(unit: C64, k: usize) -> C64 {
    // unit is ±i: cycle of length 4
    let mut p = C64::new(1.0, 0.0);
    for _ in 0..(k % 4) {
        p *= unit;
    }
    p
}

/// Values `J_k(z)` for `k = -order..=order`, indexed by `k + order`.
pub fn bessel_j_symmetric(z: C64, order: usize, out: &mut Vec<C64>) {
    out.clear();
    out.resize(2 * order + 1, C64::new(0.0, 0.0));
    let mut positive = vec![C64::new(0.0, 0.0); order + 1];
    bessel_j_sequence(z, &mut positive);
    for k in 0..=order {
        out[order + k] = positive[k];
        out[order - k] = positive[k] * parity(k as i32);
    }
}

/// `(−i)^n` as an exact quarter turn.
#[inline]
pub fn minus_i_pow(n: i32) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}
