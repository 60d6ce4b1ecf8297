//! Stationary correlation kernels over one-dimensional score space.
//!
//! Three families: squared exponential, Matern, and rational quadratic.
//! Matern orders 1/2, 3/2, 5/2 use their closed forms; any other order goes
//! through the general Bessel-function form
//!     k(d) = 2^{1-v} / Gamma(v) * t^v * K_v(t),   t = sqrt(2v) d / l.
//! The two routes agree to better than 1e-10, which the test suite checks;
//! the Bessel route stays available for that cross-verification.

use nalgebra::DMatrix;
use statrs::function::gamma::gamma;

use crate::classifier::bessel::bessel_k;
use crate::error::{Error, Result};

/// Diagonal boost applied before factorizing kernel matrices.
pub const DEFAULT_JITTER: f64 = 1e-8;

/// Kernel family and its family-specific hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Rbf,
    Matern { nu: f64 },
    RationalQuadratic { alpha: f64 },
}

/// Kernel choice plus shared hyperparameters. All three families are
/// correlation kernels: k(x, x) = 1 exactly, before any jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub length_scale: f64,
    /// Added to the kernel matrix diagonal when factorizing, never to
    /// [`kernel_eval`] values.
    pub jitter: f64,
}

impl KernelSpec {
    pub fn rbf(length_scale: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            length_scale,
            jitter: DEFAULT_JITTER,
        }
    }

    pub fn matern(length_scale: f64, nu: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Matern { nu },
            length_scale,
            jitter: DEFAULT_JITTER,
        }
    }

    pub fn rational_quadratic(length_scale: f64, alpha: f64) -> Self {
        KernelSpec {
            kind: KernelKind::RationalQuadratic { alpha },
            length_scale,
            jitter: DEFAULT_JITTER,
        }
    }

    /// Squared exponential with the default length scale for raw scores.
    pub fn rbf_default() -> Self {
        KernelSpec::rbf(10.0)
    }

    /// Matern with the default length scale and smoothness 3/2.
    pub fn matern_default() -> Self {
        KernelSpec::matern(0.1, 1.5)
    }

    /// Rational quadratic with the default length scale and mixture 1.
    pub fn rational_quadratic_default() -> Self {
        KernelSpec::rational_quadratic(0.1, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let check_positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Input(format!(
                    "kernel {name} must be positive and finite, got {v}"
                )))
            }
        };
        check_positive("length_scale", self.length_scale)?;
        match self.kind {
            KernelKind::Rbf => {}
            KernelKind::Matern { nu } => check_positive("nu", nu)?,
            KernelKind::RationalQuadratic { alpha } => check_positive("alpha", alpha)?,
        }
        if !self.jitter.is_finite() || self.jitter < 0.0 {
            return Err(Error::Input(format!(
                "kernel jitter must be non-negative and finite, got {}",
                self.jitter
            )));
        }
        Ok(())
    }
}

/// Kernel value for a pair of scores. Hyperparameters are assumed validated.
pub fn kernel_eval(spec: &KernelSpec, a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    let l = spec.length_scale;
    match spec.kind {
        KernelKind::Rbf => {
            let r = d / l;
            (-0.5 * r * r).exp()
        }
        KernelKind::Matern { nu } => matern(nu, d, l),
        KernelKind::RationalQuadratic { alpha } => {
            let r = d / l;
            (1.0 + r * r / (2.0 * alpha)).powf(-alpha)
        }
    }
}

fn matern(nu: f64, d: f64, length_scale: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    if nu == 0.5 {
        let s = d / length_scale;
        (-s).exp()
    } else if nu == 1.5 {
        let s = 3.0f64.sqrt() * d / length_scale;
        (1.0 + s) * (-s).exp()
    } else if nu == 2.5 {
        let s = 5.0f64.sqrt() * d / length_scale;
        (1.0 + s + s * s / 3.0) * (-s).exp()
    } else {
        matern_via_bessel(nu, d, length_scale)
            .expect("validated hyperparameters and positive distance")
    }
}

/// General Matern form through K_v. Exposed so the closed forms can be
/// cross-checked against an independent evaluation route.
pub fn matern_via_bessel(nu: f64, d: f64, length_scale: f64) -> Result<f64> {
    if d == 0.0 {
        return Ok(1.0);
    }
    let t = (2.0 * nu).sqrt() * d / length_scale;
    // As t -> 0 the kernel tends to 1 while K_v(t) overflows; below this
    // cutoff the deviation from 1 is under any tolerance used here.
    if t < 1e-12 {
        return Ok(1.0);
    }
    let prefactor = (1.0 - nu).exp2() / gamma(nu);
    Ok(prefactor * t.powf(nu) * bessel_k(nu, t)?)
}

/// Dense kernel matrix over a set of scores, with an exact unit diagonal
/// (jitter is the factorization's business, not the matrix builder's).
pub fn kernel_matrix(spec: &KernelSpec, xs: &[f64]) -> DMatrix<f64> {
    let n = xs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = kernel_eval(spec, xs[i], xs[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}
