//! Threshold calibration for plausibility-scored triples.
//!
//! Knowledge-graph scoring models emit a real number per (head, relation,
//! tail) candidate; turning those into include/exclude decisions takes a
//! threshold, and the right cut varies by relation. This crate estimates
//! per-relation (or shared) thresholds from a small annotation budget:
//!
//! 1. [`selection`] picks which samples to send to the annotator.
//! 2. [`classifier`] fits a one-dimensional probabilistic model (logistic
//!    regression or a Laplace-approximated Gaussian process) on the
//!    annotated scores and labels the rest.
//! 3. [`calibration`] assembles per-relation decision sets, searches them
//!    for the metric-maximizing threshold, and evaluates threshold maps.
//! 4. [`experiments`] sweeps methods across budgets with per-cell seeds
//!    and aggregates means with standard errors.
//!
//! [`data`] handles TSV ingestion, synthetic corpus generation with known
//! Bayes-optimal thresholds, and report serialization. Everything is
//! deterministic given the configured seeds.

pub mod calibration;
pub mod classifier;
pub mod data;
pub mod error;
pub mod experiments;
pub mod model;
pub mod seeding;
pub mod selection;

pub use calibration::{
    calibrate_actc, calibrate_global_opt, calibrate_local_opt, estimate_threshold,
    evaluate_thresholds, ActcConfig, AnnotationOracle, AutoExtent, CalibrationOutcome,
    CalibrationWarnings, GoldSample, MetricKind, Scope, ThresholdEstimate, DEFAULT_GRID_STEPS,
    DEFAULT_THRESHOLD,
};
pub use classifier::{ClassifierConfig, KernelKind, KernelSpec, LabelMode, ProbClassifier};
pub use data::{
    generate_synthetic, load_scored_triples, load_thresholds, save_scored_triples, save_thresholds,
    sigmoid_view, write_report_csv, RelationSpec, SyntheticSpec,
};
pub use error::{Error, Result};
pub use experiments::{
    run_n_ablation, run_sweep, run_trial, MethodKind, MethodSpec, SweepCell, SweepConfig,
    SweepReport,
};
pub use model::{
    classify, compute_metrics, Dataset, DecisionSet, LabeledPoint, Metrics, RelationId,
    ScoredTriple, ThresholdMap,
};
pub use selection::{DensityOrder, SelectionStrategy, StrategyKind};
