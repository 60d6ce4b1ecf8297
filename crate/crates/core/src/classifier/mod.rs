//! Probabilistic score classifiers used for auto-labeling: logistic
//! regression and a Laplace-approximated Gaussian process, behind one
//! config-driven interface.

pub mod bessel;
pub mod gp;
pub mod kernel;
pub mod logistic;

pub use gp::{fit_gp, fit_gp_traced, FitTrace, GpPosterior, GP_TRAIN_CAP};
pub use kernel::{
    kernel_eval, kernel_matrix, matern_via_bessel, KernelKind, KernelSpec, DEFAULT_JITTER,
};
pub use logistic::{fit_logistic, logistic_gradient, logistic_objective, LogisticModel};

use crate::error::Result;
use crate::model::LabeledPoint;

/// Which classifier to fit and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierConfig {
    Logistic { inv_reg_c: f64 },
    GaussianProcess { kernel: KernelSpec },
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Logistic { inv_reg_c: 100.0 }
    }
}

/// A fitted classifier mapping a score to a positive-class probability.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbClassifier {
    Logistic(LogisticModel),
    Gp(Box<GpPosterior>),
}

impl ProbClassifier {
    pub fn predict(&self, score: f64) -> f64 {
        match self {
            ProbClassifier::Logistic(m) => m.predict(score),
            ProbClassifier::Gp(g) => g.predict(score),
        }
    }

    pub fn predict_batch(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.predict(s)).collect()
    }
}

/// Fit the configured classifier on (score, is_positive) pairs. Requires
/// both classes; single-class input yields `Error::DegenerateLabels` so
/// callers can engage their fallback ladder.
pub fn fit(config: &ClassifierConfig, points: &[(f64, bool)]) -> Result<ProbClassifier> {
    match config {
        ClassifierConfig::Logistic { inv_reg_c } => {
            Ok(ProbClassifier::Logistic(fit_logistic(points, *inv_reg_c)?))
        }
        ClassifierConfig::GaussianProcess { kernel } => {
            Ok(ProbClassifier::Gp(Box::new(fit_gp(points, kernel)?)))
        }
    }
}

/// Whether auto-labels keep the raw probability or round it to 0/1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    Hard,
    Soft,
}

/// Label a batch of scores with the classifier. Hard mode rounds the
/// probability at 1/2; soft mode keeps it as the label weight.
pub fn auto_label(
    classifier: &ProbClassifier,
    scores: &[f64],
    mode: LabelMode,
) -> Vec<LabeledPoint> {
    scores
        .iter()
        .map(|&score| {
            let p = classifier.predict(score);
            match mode {
                LabelMode::Hard => LabeledPoint::hard(score, p >= 0.5),
                LabelMode::Soft => LabeledPoint { score, weight: p },
            }
        })
        .collect()
}
