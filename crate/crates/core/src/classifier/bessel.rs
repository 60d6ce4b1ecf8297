//! Modified Bessel function of the second kind, K_v(x), for real order.
//!
//! Used by the general Matern kernel form. Two regimes, following Temme,
//! J. Comput. Phys. 21 (1976) and Thompson & Barnett, J. Comput. Phys. 64
//! (1986): a series for x <= 2 and Steed's continued fraction for x > 2,
//! both producing (K_u, K_{u+1}) for |u| <= 1/2, lifted to the requested
//! order by the stable upward recurrence K_{w+1} = (2w/x) K_w + K_{w-1}.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const MAX_ITER: usize = 512;

/// gamma(1 + v) - 1 without cancellation for small v; |v| <= 1/2.
fn gamma_1p_m1(v: f64) -> f64 {
    ln_gamma(1.0 + v).exp_m1()
}

/// (K_u(x), K_{u+1}(x)) for |u| <= 1/2 and 0 < x <= 2.
fn temme_series(u: f64, x: f64) -> Result<(f64, f64)> {
    debug_assert!(u.abs() <= 0.5 && x > 0.0 && x <= 2.0);
    const EULER: f64 = 0.577_215_664_901_532_9;

    let gp = gamma_1p_m1(u);
    let gm = gamma_1p_m1(-u);

    let a = (x / 2.0).ln();
    let b = (u * a).exp();
    let sigma = -a * u;
    let c = if u.abs() < 2.0 * f64::EPSILON {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    };
    let d = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let gamma1 = if u.abs() < f64::EPSILON {
        -EULER
    } else {
        (0.5 / u) * (gp - gm) * c
    };
    let gamma2 = (2.0 + gp + gm) * c / 2.0;

    let mut p = (gp + 1.0) / (2.0 * b);
    let mut q = (gm + 1.0) * b / 2.0;
    let mut f = (sigma.cosh() * gamma1 + d * (-a) * gamma2) / c;
    let mut h = p;
    let mut coef = 1.0;
    let mut sum = coef * f;
    let mut sum1 = coef * h;

    for k in 1..MAX_ITER {
        let kf = k as f64;
        f = (kf * f + p + q) / (kf * kf - u * u);
        p /= kf - u;
        q /= kf + u;
        h = p - kf * f;
        coef *= x * x / (4.0 * kf);
        sum += coef * f;
        sum1 += coef * h;
        if (coef * f).abs() < sum.abs() * f64::EPSILON {
            return Ok((sum, 2.0 * sum1 / x));
        }
    }
    Err(Error::Convergence(format!(
        "series for K_v stalled at order {u} and argument {x}"
    )))
}

/// (K_u(x), K_{u+1}(x)) for |u| <= 1/2 and x > 2, by Steed's algorithm.
fn steed_cf2(u: f64, x: f64) -> Result<(f64, f64)> {
    debug_assert!(u.abs() <= 0.5 && x > 2.0);

    let mut a = u * u - 0.25;
    let mut b = 2.0 * (x + 1.0);
    let mut d = 1.0 / b;
    let mut delta = d;
    let mut f = d;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut q = -a;
    let mut c = -a;
    let mut s = 1.0 + q * delta;

    for k in 2..MAX_ITER {
        let kf = k as f64;
        a -= 2.0 * (kf - 1.0);
        b += 2.0;
        d = 1.0 / (a * d + b);
        delta *= b * d - 1.0;
        f += delta;

        let t = (prev - (b - 2.0) * cur) / a;
        prev = cur;
        cur = t;
        c *= -a / kf;
        q += c * t;
        s += q * delta;

        if (q * delta).abs() < s.abs() * f64::EPSILON / 2.0 {
            let ku = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
            let ku1 = ku * (0.5 + u + x + (u * u - 0.25) * f) / x;
            return Ok((ku, ku1));
        }
    }
    Err(Error::Convergence(format!(
        "continued fraction for K_v stalled at order {u} and argument {x}"
    )))
}

/// K_v(x) for finite real order and x > 0. Even in v. May overflow to +inf
/// for large orders at small arguments; callers guard the small-argument
/// regime where that matters.
pub fn bessel_k(v: f64, x: f64) -> Result<f64> {
    if !v.is_finite() || !x.is_finite() || x <= 0.0 {
        return Err(Error::Input(format!(
            "K_v requires finite order and positive argument, got v = {v}, x = {x}"
        )));
    }
    let v = v.abs();
    let n = v.round();
    let u = v - n;
    let n = n as u64;

    let (ku, ku1) = if x <= 2.0 {
        temme_series(u, x)?
    } else {
        steed_cf2(u, x)?
    };

    let mut prev = ku;
    let mut cur = ku1;
    for k in 1..n {
        let next = 2.0 * (u + k as f64) * cur / x + prev;
        prev = cur;
        cur = next;
    }
    Ok(if n == 0 { ku } else { cur })
}
