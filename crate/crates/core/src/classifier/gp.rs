//! Gaussian process binary classifier with a Laplace approximation.
//!
//! Exact inference on the kernel matrix, so training is capped at
//! [`GP_TRAIN_CAP`] points. The posterior mode is found by Newton steps in
//! the dual variable a (f = K a), each step safeguarded by a halving line
//! search on the objective Psi(a) = log p(y | Ka) - a' Ka / 2, never
//! accepting a step that measurably lowers it. The factorized matrix is
//! B = I + W^1/2 K W^1/2; if its Cholesky fails, the diagonal jitter on K
//! escalates tenfold from 1e-8 up to 1e-2 and the fit restarts.
//!
//! The predictive class probability applies the standard probit-style
//! correction sigmoid(mu / sqrt(1 + pi sigma^2 / 8)) to the latent mean and
//! variance, a close approximation of the logistic-Gaussian integral.

use nalgebra::{DMatrix, DVector};

use crate::classifier::kernel::{kernel_eval, kernel_matrix, KernelSpec};
use crate::classifier::logistic::log1pexp;
use crate::error::{Error, Result};
use crate::model::sigmoid;

/// Exact-inference training cap; beyond this the cubic factorizations are
/// no longer reasonable.
pub const GP_TRAIN_CAP: usize = 2000;

const GRAD_TOL: f64 = 1e-8;
// The loop polishes past the acceptance bound while steps keep landing:
// an ill-conditioned kernel amplifies a 1e-8 residual into latent-mode
// error near 1e-6, and one extra quadratic Newton step removes it.
const POLISH_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;
// Escalation floor for a spec that asks for zero jitter, and the hard cap.
const JITTER_FLOOR: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

/// Fitted Laplace posterior. Holds everything prediction needs: training
/// inputs, W^1/2, the Cholesky factor of B, and the mode gradient t - pi.
#[derive(Debug, Clone, PartialEq)]
pub struct GpPosterior {
    kernel: KernelSpec,
    train_x: Vec<f64>,
    mode: DVector<f64>,
    sqrt_w: DVector<f64>,
    l_factor: DMatrix<f64>,
    coeffs: DVector<f64>,
    jitter: f64,
}

/// Per-iteration record of a fit, for convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Objective after the initial point and after every accepted step.
    pub psi: Vec<f64>,
    /// Latent values at the accepted mode.
    pub mode: Vec<f64>,
    /// Diagonal jitter the successful attempt ran with.
    pub jitter: f64,
}

impl GpPosterior {
    /// Latent predictive mean and variance at a query score.
    pub fn latent(&self, score: f64) -> (f64, f64) {
        let n = self.train_x.len();
        let k_star = DVector::from_fn(n, |i, _| kernel_eval(&self.kernel, score, self.train_x[i]));
        let mu = k_star.dot(&self.coeffs);
        let rhs = k_star.component_mul(&self.sqrt_w);
        let v = self
            .l_factor
            .solve_lower_triangular(&rhs)
            .expect("Cholesky factor has a positive diagonal");
        let var = (1.0 - v.norm_squared()).max(0.0);
        (mu, var)
    }

    /// Predictive probability of the positive class.
    pub fn predict(&self, score: f64) -> f64 {
        let (mu, var) = self.latent(score);
        sigmoid(mu / (1.0 + std::f64::consts::PI * var / 8.0).sqrt())
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Latent values at the Laplace mode, in training order.
    pub fn mode(&self) -> &[f64] {
        self.mode.as_slice()
    }

    /// Likelihood curvatures pi (1 - pi) at the mode, in training order.
    pub fn site_precisions(&self) -> Vec<f64> {
        self.sqrt_w.iter().map(|w| w * w).collect()
    }

    pub fn train_len(&self) -> usize {
        self.train_x.len()
    }
}

fn validate(points: &[(f64, bool)], kernel: &KernelSpec) -> Result<()> {
    kernel.validate()?;
    if points.is_empty() {
        return Err(Error::Input(
            "cannot fit a classifier on zero points".into(),
        ));
    }
    if points.len() > GP_TRAIN_CAP {
        return Err(Error::TooManyPoints {
            got: points.len(),
            cap: GP_TRAIN_CAP,
        });
    }
    if points.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::Input(
            "classifier training scores must be finite".into(),
        ));
    }
    let pos = points.iter().filter(|(_, l)| *l).count();
    if pos == 0 || pos == points.len() {
        return Err(Error::DegenerateLabels(format!(
            "all {} training labels are {}",
            points.len(),
            pos != 0
        )));
    }
    Ok(())
}

/// log p(y | f) - a' f / 2 with Bernoulli-logistic likelihood.
fn psi(y: &[f64], f: &DVector<f64>, a: &DVector<f64>) -> f64 {
    let loglik: f64 = y
        .iter()
        .zip(f.iter())
        .map(|(&yi, &fi)| -log1pexp(-yi * fi))
        .sum();
    loglik - 0.5 * a.dot(f)
}

/// One fit attempt at a fixed jitter. `Ok(None)` means the factorization
/// failed and the caller should escalate.
#[allow(clippy::type_complexity)]
fn fit_attempt(
    points: &[(f64, bool)],
    kernel: &KernelSpec,
    jitter: f64,
) -> Result<Option<(GpPosterior, FitTrace)>> {
    let n = points.len();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let t = DVector::from_fn(n, |i, _| f64::from(points[i].1));
    let y: Vec<f64> = points
        .iter()
        .map(|p| if p.1 { 1.0 } else { -1.0 })
        .collect();

    let mut k = kernel_matrix(kernel, &xs);
    for i in 0..n {
        k[(i, i)] += jitter;
    }

    let mut a = DVector::zeros(n);
    let mut f = DVector::zeros(n);
    let mut psi_cur = psi(&y, &f, &a);
    let mut trace = vec![psi_cur];
    let mut converged = false;

    for _ in 0..MAX_NEWTON {
        let pi = f.map(sigmoid);
        let w = pi.map(|p| p * (1.0 - p));
        let sqrt_w = w.map(f64::sqrt);
        let mut b_mat = DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * k[(i, j)] * sqrt_w[j]);
        for i in 0..n {
            b_mat[(i, i)] += 1.0;
        }
        let Some(chol) = nalgebra::Cholesky::new(b_mat) else {
            return Ok(None);
        };

        let bvec = w.component_mul(&f) + (&t - &pi);
        let inner = sqrt_w.component_mul(&(&k * &bvec));
        let solved = chol.solve(&inner);
        let a_full = &bvec - sqrt_w.component_mul(&solved);

        let delta = &a_full - &a;
        let r_cur = {
            let pi_now = f.map(sigmoid);
            (&t - &pi_now - &a).amax()
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let a_try = &a + step * &delta;
            let f_try = &k * &a_try;
            let psi_try = psi(&y, &f_try, &a_try);
            // Strict ascent while Psi can still resolve a change; near the
            // mode it flatlines at machine precision before the residual
            // tolerance is met, so accept steps that contract the residual
            // without measurably lowering Psi.
            let improved = psi_try > psi_cur
                || (psi_try >= psi_cur - 1e-12 * (1.0 + psi_cur.abs()) && {
                    let pi_try = f_try.map(sigmoid);
                    (&t - &pi_try - &a_try).amax() < r_cur
                });
            if improved {
                a = a_try;
                f = f_try;
                psi_cur = psi_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(psi_cur);

        let pi_now = f.map(sigmoid);
        let grad_inf = (&t - &pi_now - &a).amax();
        if grad_inf <= POLISH_TOL {
            converged = true;
            break;
        }
    }

    if !converged {
        let pi_now = f.map(sigmoid);
        converged = (&t - &pi_now - &a).amax() <= GRAD_TOL;
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "posterior mode search stalled on {n} points at jitter {jitter:.0e}"
        )));
    }

    // Refactorize at the mode for the quantities prediction needs.
    let pi = f.map(sigmoid);
    let sqrt_w = pi.map(|p| (p * (1.0 - p)).sqrt());
    let mut b_mat = DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * k[(i, j)] * sqrt_w[j]);
    for i in 0..n {
        b_mat[(i, i)] += 1.0;
    }
    let Some(chol) = nalgebra::Cholesky::new(b_mat) else {
        return Ok(None);
    };
    let posterior = GpPosterior {
        kernel: *kernel,
        train_x: xs,
        mode: f.clone(),
        sqrt_w,
        l_factor: chol.l(),
        coeffs: &t - &pi,
        jitter,
    };
    let trace = FitTrace {
        psi: trace,
        mode: f.iter().copied().collect(),
        jitter,
    };
    Ok(Some((posterior, trace)))
}

/// Fit and keep the per-iteration objective trace. The diagonal jitter
/// starts at the spec's value and escalates tenfold on factorization
/// failure, up to the hard cap.
pub fn fit_gp_traced(
    points: &[(f64, bool)],
    kernel: &KernelSpec,
) -> Result<(GpPosterior, FitTrace)> {
    validate(points, kernel)?;
    let mut jitter = kernel.jitter;
    loop {
        if let Some(out) = fit_attempt(points, kernel, jitter)? {
            return Ok(out);
        }
        jitter = if jitter == 0.0 {
            JITTER_FLOOR
        } else {
            jitter * 10.0
        };
        if jitter > JITTER_MAX * 1.000001 {
            return Err(Error::Numerical(format!(
                "factorization failed for {} points even at jitter {JITTER_MAX:.0e}",
                points.len()
            )));
        }
    }
}

/// Fit a GP classifier on (score, label) pairs.
pub fn fit_gp(points: &[(f64, bool)], kernel: &KernelSpec) -> Result<GpPosterior> {
    fit_gp_traced(points, kernel).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_points(rng: &mut ChaCha12Rng, n: usize) -> Vec<(f64, bool)> {
        loop {
            let pts: Vec<(f64, bool)> = (0..n)
                .map(|_| {
                    let s: f64 = rng.random_range(-4.0..4.0);
                    let p = sigmoid(1.3 * s);
                    (s, rng.random_range(0.0..1.0) < p)
                })
                .collect();
            let pos = pts.iter().filter(|(_, l)| *l).count();
            if pos > 0 && pos < n {
                return pts;
            }
        }
    }

    /// Independent mode finder: damped fixed-point Newton directly in f-space
    /// via dense LU solves of (I + K W) z = K (W f + t - pi).
    fn dense_reference_mode(
        points: &[(f64, bool)],
        kernel: &KernelSpec,
        jitter: f64,
    ) -> DVector<f64> {
        let n = points.len();
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let t = DVector::from_fn(n, |i, _| f64::from(points[i].1));
        let mut k = kernel_matrix(kernel, &xs);
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        let mut f: DVector<f64> = DVector::zeros(n);
        for _ in 0..500 {
            let pi = f.map(sigmoid);
            let w = pi.map(|p| p * (1.0 - p));
            let rhs = &k * (w.component_mul(&f) + (&t - &pi));
            let mut iw = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * w[j]);
            for i in 0..n {
                iw[(i, i)] += 1.0;
            }
            let f_new = iw.lu().solve(&rhs).expect("reference system is regular");
            let delta = (&f_new - &f).amax();
            f = f_new;
            if delta < 1e-12 {
                break;
            }
        }
        f
    }

    #[test]
    fn mode_matches_dense_reference() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let kernels = [
            KernelSpec::rbf_default(),
            KernelSpec::matern_default(),
            KernelSpec::rational_quadratic_default(),
        ];
        for kernel in &kernels {
            for _ in 0..4 {
                let count = rng.random_range(5..30);
                let pts = random_points(&mut rng, count);
                let (_, trace) = fit_gp_traced(&pts, kernel).unwrap();
                let reference = dense_reference_mode(&pts, kernel, trace.jitter);
                for (a, b) in trace.mode.iter().zip(reference.iter()) {
                    assert!((a - b).abs() <= 1e-6, "{a} vs {b} under {kernel:?}");
                }
            }
        }
    }

    #[test]
    fn objective_never_decreases_across_accepted_steps() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10 {
            let count = rng.random_range(4..50);
            let pts = random_points(&mut rng, count);
            let (_, trace) = fit_gp_traced(&pts, &KernelSpec::rbf_default()).unwrap();
            assert!(trace.psi.len() >= 2);
            for w in trace.psi.windows(2) {
                // Accepted steps may trade measurement-level Psi noise for
                // residual contraction, so allow machine-precision slack.
                assert!(
                    w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()),
                    "objective dropped: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn symmetric_training_gives_half_probability_at_center() {
        // With one point per class the posterior is antisymmetric, so the
        // midpoint sits exactly at 0.5; off-center queries lean toward the
        // nearer class, though only mildly after the variance correction.
        let pts = vec![(-1.0, false), (1.0, true)];
        let gp = fit_gp(&pts, &KernelSpec::rbf(1.0)).unwrap();
        assert!((gp.predict(0.0) - 0.5).abs() < 1e-9);
        assert!(gp.predict(1.5) > 0.55);
        assert!(gp.predict(-1.5) < 0.45);
        let (up, down) = (gp.predict(1.0), gp.predict(-1.0));
        assert!((up + down - 1.0).abs() < 1e-9, "{up} + {down}");
    }

    #[test]
    fn predictions_separate_the_signed_regions() {
        // Monotone labels over [-4, 3.6]. The posterior mean is not
        // globally monotone (it decays to the prior past the data), but
        // deep inside each class it must commit to that class.
        let pts: Vec<(f64, bool)> = (0..20).map(|i| (i as f64 * 0.4 - 4.0, i >= 10)).collect();
        let gp = fit_gp(&pts, &KernelSpec::rbf(2.0)).unwrap();
        for q in [-3.0, -2.0] {
            assert!(gp.predict(q) < 0.4, "p({q}) = {}", gp.predict(q));
        }
        for q in [2.0, 3.0] {
            assert!(gp.predict(q) > 0.6, "p({q}) = {}", gp.predict(q));
        }
        for i in -16..=16 {
            let p = gp.predict(f64::from(i) * 0.5);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn probit_correction_tracks_quadrature() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let pts = random_points(&mut rng, 25);
        let gp = fit_gp(&pts, &KernelSpec::rbf_default()).unwrap();
        for q in [-3.5, -1.0, 0.0, 0.4, 2.8] {
            let (mu, var) = gp.latent(q);
            let sd = var.sqrt();
            // Midpoint rule over 12 standard deviations.
            let nodes = 40_001;
            let lo = mu - 12.0 * sd.max(1e-12);
            let hi = mu + 12.0 * sd.max(1e-12);
            let h = (hi - lo) / nodes as f64;
            let norm = 1.0 / (sd.max(1e-300) * (2.0 * std::f64::consts::PI).sqrt());
            let mut integral = 0.0;
            for i in 0..nodes {
                let u = lo + (i as f64 + 0.5) * h;
                let z = (u - mu) / sd.max(1e-300);
                integral += sigmoid(u) * (-0.5 * z * z).exp();
            }
            integral *= h * norm;
            let expected = if sd > 1e-12 { integral } else { sigmoid(mu) };
            assert!(
                (gp.predict(q) - expected).abs() <= 5e-3,
                "query {q}: {} vs {expected}",
                gp.predict(q)
            );
        }
    }

    #[test]
    fn far_queries_revert_to_the_prior() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let pts = random_points(&mut rng, 20);
        for kernel in [KernelSpec::matern_default(), KernelSpec::rbf(1.0)] {
            let gp = fit_gp(&pts, &kernel).unwrap();
            for q in [1e4, -1e4] {
                let p = gp.predict(q);
                assert!((p - 0.5).abs() <= 1e-3, "{p} at query {q} under {kernel:?}");
            }
        }
    }

    #[test]
    fn duplicate_inputs_still_fit() {
        let pts = vec![
            (0.5, true),
            (0.5, true),
            (0.5, false),
            (-0.5, false),
            (-0.5, false),
        ];
        let gp = fit_gp(&pts, &KernelSpec::rbf(1.0)).unwrap();
        let p_hi = gp.predict(0.5);
        let p_lo = gp.predict(-0.5);
        assert!(p_hi > 0.5 && p_lo < 0.5, "{p_hi} vs {p_lo}");
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let pts = random_points(&mut rng, 30);
        let a = fit_gp(&pts, &KernelSpec::matern_default()).unwrap();
        let b = fit_gp(&pts, &KernelSpec::matern_default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict(0.3), b.predict(0.3));
    }

    #[test]
    fn rejects_degenerate_and_oversized_input() {
        let kernel = KernelSpec::rbf_default();
        assert!(matches!(
            fit_gp(&[(0.0, true), (1.0, true)], &kernel),
            Err(Error::DegenerateLabels(_))
        ));
        assert!(fit_gp(&[], &kernel).is_err());
        let big: Vec<(f64, bool)> = (0..=GP_TRAIN_CAP).map(|i| (i as f64, i % 2 == 0)).collect();
        assert!(matches!(
            fit_gp(&big, &kernel),
            Err(Error::TooManyPoints { .. })
        ));
    }
}
