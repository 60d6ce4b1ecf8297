//! Budget sweeps and repeat aggregation.
//!
//! A sweep crosses methods, annotation budgets, decision-set sizes, and
//! repeat indices; each trial calibrates on one split, evaluates on the
//! other, and every cell's seed derives from a stable hash of its own
//! coordinates, so adding a method or reordering execution never perturbs
//! existing cells. Cells run in parallel and are merged back in their
//! deterministic coordinate order.

use rayon::prelude::*;

use crate::calibration::{
    calibrate_actc, calibrate_global_opt, calibrate_local_opt, evaluate_thresholds, ActcConfig,
    AnnotationOracle, AutoExtent, CalibrationWarnings, GoldSample, MetricKind, Scope,
    DEFAULT_GRID_STEPS,
};
use crate::classifier::{ClassifierConfig, KernelSpec, LabelMode};
use crate::error::{Error, Result};
use crate::model::{Dataset, Metrics};
use crate::seeding::derive_seed;
use crate::selection::{DensityOrder, SelectionStrategy, StrategyKind};

/// Annotation budgets swept by default.
pub const DEFAULT_BUDGETS: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];

/// Repeats per cell by default.
pub const DEFAULT_REPEATS: usize = 100;

/// Master seed all trial seeds derive from by default.
pub const DEFAULT_MASTER_SEED: u64 = 12345;

/// Decision-set size used when a sweep does not vary it.
pub const DEFAULT_MIN_SET_SIZE: usize = 500;

/// One calibration method a sweep can run.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodKind {
    /// Budgeted selection, auto-labeled decision sets, per-set search.
    Actc {
        classifier: ClassifierConfig,
        strategy: StrategyKind,
        metric: MetricKind,
        scope: Scope,
    },
    /// Gold-only per-relation (or pooled) search.
    LocalOpt { metric: MetricKind, scope: Scope },
    /// Gold-only global F1 grid search in sigmoid space.
    GlobalOpt { grid_steps: usize },
}

/// A method plus the label naming it in configs and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub kind: MethodKind,
}

impl MethodSpec {
    /// Parse a method label.
    ///
    /// Grammar: `actc-<lr|gp>-<rndm|dens|unc|dwu>[-f1][-uni]`,
    /// `local-<acc|f1>[-uni]`, or `global-f1`. Metric defaults to accuracy
    /// and scope to per-relation; `-f1` and `-uni` flip them, in that
    /// order. The global search already couples all relations, so it
    /// takes no `-uni` suffix.
    pub fn parse(label: &str) -> Result<MethodSpec> {
        let bad = |why: &str| {
            Err(Error::Input(format!(
                "bad method label {label:?}: {why}; expected \
                 actc-<lr|gp>-<rndm|dens|unc|dwu>[-f1][-uni], local-<acc|f1>[-uni], or global-f1"
            )))
        };
        let mut parts = label.split('-');
        let kind = match parts.next() {
            Some("actc") => {
                let classifier = match parts.next() {
                    Some("lr") => ClassifierConfig::default(),
                    Some("gp") => ClassifierConfig::GaussianProcess {
                        kernel: KernelSpec::rbf_default(),
                    },
                    _ => return bad("unknown classifier"),
                };
                let strategy = match parts.next() {
                    Some("rndm") => StrategyKind::Random,
                    Some("dens") => StrategyKind::Density,
                    Some("unc") => StrategyKind::Uncertainty,
                    Some("dwu") => StrategyKind::DensityWeightedUncertainty,
                    _ => return bad("unknown selection strategy"),
                };
                let mut rest = parts.peekable();
                let metric = if rest.peek() == Some(&"f1") {
                    rest.next();
                    MetricKind::F1
                } else {
                    MetricKind::Accuracy
                };
                let scope = if rest.peek() == Some(&"uni") {
                    rest.next();
                    Scope::Uniform
                } else {
                    Scope::PerRelation
                };
                if rest.next().is_some() {
                    return bad("trailing segments");
                }
                MethodKind::Actc {
                    classifier,
                    strategy,
                    metric,
                    scope,
                }
            }
            Some("local") => {
                let metric = match parts.next() {
                    Some("acc") => MetricKind::Accuracy,
                    Some("f1") => MetricKind::F1,
                    _ => return bad("unknown metric"),
                };
                let scope = match parts.next() {
                    None => Scope::PerRelation,
                    Some("uni") => Scope::Uniform,
                    Some(_) => return bad("trailing segments"),
                };
                if parts.next().is_some() {
                    return bad("trailing segments");
                }
                MethodKind::LocalOpt { metric, scope }
            }
            Some("global") => {
                if parts.next() != Some("f1") {
                    return bad("the global search maximizes f1");
                }
                if parts.next().is_some() {
                    return bad("the global search has no scope suffix");
                }
                MethodKind::GlobalOpt {
                    grid_steps: DEFAULT_GRID_STEPS,
                }
            }
            _ => return bad("unknown method family"),
        };
        Ok(MethodSpec {
            label: label.to_owned(),
            kind,
        })
    }
}

/// What a sweep runs: the full cross of methods, budgets, set sizes, and
/// repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub budgets: Vec<usize>,
    pub repeats: usize,
    pub methods: Vec<MethodSpec>,
    /// Decision-set sizes; a single entry for plain sweeps, several for
    /// the n-ablation.
    pub n_values: Vec<usize>,
    pub master_seed: u64,
}

impl SweepConfig {
    pub fn new(methods: Vec<MethodSpec>) -> Self {
        SweepConfig {
            budgets: DEFAULT_BUDGETS.to_vec(),
            repeats: DEFAULT_REPEATS,
            methods,
            n_values: vec![DEFAULT_MIN_SET_SIZE],
            master_seed: DEFAULT_MASTER_SEED,
        }
    }

    /// Parse a flat `key = value` config. Keys: `budgets`, `repeats`,
    /// `methods`, `n_values`, `master_seed`; list values are
    /// comma-separated; blank lines and lines starting with `#` are
    /// skipped. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::new(Vec::new());
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |why: String| Error::Input(format!("config line {}: {why}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(at(format!("duplicate key {key:?}")));
            }
            match key {
                "budgets" => cfg.budgets = parse_list(value).map_err(&at)?,
                "repeats" => {
                    cfg.repeats = value
                        .parse()
                        .map_err(|_| at(format!("bad count {value:?}")))?;
                }
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .map(|m| MethodSpec::parse(m.trim()))
                        .collect::<Result<_>>()?;
                }
                "n_values" => cfg.n_values = parse_list(value).map_err(&at)?,
                "master_seed" => {
                    cfg.master_seed = value
                        .parse()
                        .map_err(|_| at(format!("bad seed {value:?}")))?;
                }
                _ => return Err(at(format!("unknown key {key:?}"))),
            }
            seen.push(key);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() {
            return Err(Error::Input("a sweep needs at least one budget".into()));
        }
        if !self.budgets.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Input(format!(
                "budgets must be strictly increasing, got {:?}",
                self.budgets
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Input("a sweep needs at least one repeat".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Input("a sweep needs at least one method".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::Input(format!(
                "decision-set sizes must be positive, got {:?}",
                self.n_values
            )));
        }
        Ok(())
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<usize>, String> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad count {:?}", v.trim()))
        })
        .collect()
}

/// One trial's test-split metrics and calibration warnings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub metrics: Metrics,
    pub warnings: CalibrationWarnings,
}

/// The seed every trial's selection draw derives from.
fn selection_seed(trial_seed: u64) -> u64 {
    derive_seed(trial_seed, &[b"select"])
}

/// Per-cell trial seed: a stable hash of the cell's own coordinates.
pub fn trial_seed(master_seed: u64, label: &str, budget: usize, n: usize, repeat: usize) -> u64 {
    derive_seed(
        master_seed,
        &[
            label.as_bytes(),
            &(budget as u64).to_le_bytes(),
            &(n as u64).to_le_bytes(),
            &(repeat as u64).to_le_bytes(),
        ],
    )
}

/// Random-selection gold draw shared by the gold-only baselines, charged
/// through the same oracle ACTC uses so every method sees the same budget.
fn draw_gold(calib: &Dataset, budget: usize, seed: u64) -> Result<Vec<GoldSample>> {
    let strategy = SelectionStrategy::random(seed);
    let mut oracle = AnnotationOracle::from_dataset(calib, budget);
    let mut gold = Vec::new();
    for i in strategy.select(calib, budget) {
        let t = calib.get(i);
        if let Some(positive) = oracle.reveal(&t.head, t.relation.as_str(), &t.tail)? {
            gold.push(GoldSample {
                relation: t.relation.clone(),
                score: t.score,
                positive,
            });
        }
    }
    Ok(gold)
}

/// Calibrate one method on the calibration split and score it on the test
/// split. The test split never feeds selection, fitting, or the threshold
/// search; it is only classified at the end.
pub fn run_trial(
    calib: &Dataset,
    test: &Dataset,
    method: &MethodSpec,
    budget: usize,
    n: usize,
    trial_seed: u64,
) -> Result<TrialOutcome> {
    let select_seed = selection_seed(trial_seed);
    match &method.kind {
        MethodKind::Actc {
            classifier,
            strategy,
            metric,
            scope,
        } => {
            let cfg = ActcConfig {
                strategy: SelectionStrategy {
                    kind: *strategy,
                    seed: select_seed,
                    density_order: DensityOrder::MostDense,
                },
                budget,
                min_set_size: n,
                classifier: *classifier,
                label_mode: LabelMode::Hard,
                metric: *metric,
                scope: *scope,
                auto_extent: AutoExtent::TopUp,
                seed: trial_seed,
                strict_gold_scan: false,
            };
            let mut oracle = AnnotationOracle::from_dataset(calib, budget);
            let outcome = calibrate_actc(calib, &mut oracle, &cfg)?;
            Ok(TrialOutcome {
                metrics: evaluate_thresholds(&outcome.thresholds, test)?,
                warnings: outcome.warnings,
            })
        }
        MethodKind::LocalOpt { metric, scope } => {
            let gold = draw_gold(calib, budget, select_seed)?;
            let map = calibrate_local_opt(&gold, *metric, *scope);
            Ok(TrialOutcome {
                metrics: evaluate_thresholds(&map, test)?,
                warnings: CalibrationWarnings::default(),
            })
        }
        MethodKind::GlobalOpt { grid_steps } => {
            let gold = draw_gold(calib, budget, select_seed)?;
            let map = calibrate_global_opt(&gold, *grid_steps)?;
            Ok(TrialOutcome {
                metrics: evaluate_thresholds(&map, test)?,
                warnings: CalibrationWarnings::default(),
            })
        }
    }
}

/// One aggregated (method, budget, n) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub method: String,
    pub budget: usize,
    pub n: usize,
    pub repeats: usize,
    pub acc_mean: f64,
    /// Absent for fewer than 2 repeats; a single sample has no spread.
    pub acc_sem: Option<f64>,
    pub f1_mean: f64,
    pub f1_sem: Option<f64>,
    /// Total degraded-mode warnings across the cell's repeats.
    pub warnings: u64,
}

/// A method's grand mean across budgets (equal weight per budget).
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub n: usize,
    pub acc_mean: f64,
    pub f1_mean: f64,
}

/// Aggregated sweep results: per-cell means with spread, plus per-method
/// budget-averaged summaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub summaries: Vec<MethodSummary>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean: sample standard deviation over √count.
fn sem(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((var / xs.len() as f64).sqrt())
}

/// Run the full sweep: every (method, budget, n) cell over `repeats`
/// trials, in parallel, merged in coordinate order.
pub fn run_sweep(cfg: &SweepConfig, calib: &Dataset, test: &Dataset) -> Result<SweepReport> {
    cfg.validate()?;
    let (_, _, unlabeled) = test.label_counts();
    if unlabeled == test.len() {
        return Err(Error::Input(
            "the test split has no labels to evaluate against".into(),
        ));
    }

    let mut jobs = Vec::new();
    for method in &cfg.methods {
        for &budget in &cfg.budgets {
            for &n in &cfg.n_values {
                for repeat in 0..cfg.repeats {
                    jobs.push((method, budget, n, repeat));
                }
            }
        }
    }
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(method, budget, n, repeat)| {
            let seed = trial_seed(cfg.master_seed, &method.label, budget, n, repeat);
            run_trial(calib, test, method, budget, n, seed)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (cell_index, chunk) in outcomes.chunks(cfg.repeats).enumerate() {
        let (method, budget, n, _) = jobs[cell_index * cfg.repeats];
        let accs: Vec<f64> = chunk.iter().map(|o| o.metrics.accuracy).collect();
        let f1s: Vec<f64> = chunk.iter().map(|o| o.metrics.f1).collect();
        cells.push(SweepCell {
            method: method.label.clone(),
            budget,
            n,
            repeats: cfg.repeats,
            acc_mean: mean(&accs),
            acc_sem: sem(&accs),
            f1_mean: mean(&f1s),
            f1_sem: sem(&f1s),
            warnings: chunk.iter().map(|o| o.warnings.total() as u64).sum(),
        });
    }

    let mut summaries = Vec::new();
    for method in &cfg.methods {
        for &n in &cfg.n_values {
            let mine: Vec<&SweepCell> = cells
                .iter()
                .filter(|c| c.method == method.label && c.n == n)
                .collect();
            summaries.push(MethodSummary {
                method: method.label.clone(),
                n,
                acc_mean: mean(&mine.iter().map(|c| c.acc_mean).collect::<Vec<_>>()),
                f1_mean: mean(&mine.iter().map(|c| c.f1_mean).collect::<Vec<_>>()),
            });
        }
    }
    Ok(SweepReport { cells, summaries })
}

/// Sweep a single auto-labeling method across several decision-set sizes.
/// Only methods that actually build decision sets are allowed; the
/// baselines have no n to vary.
pub fn run_n_ablation(cfg: &SweepConfig, calib: &Dataset, test: &Dataset) -> Result<SweepReport> {
    for method in &cfg.methods {
        if !matches!(method.kind, MethodKind::Actc { .. }) {
            return Err(Error::Input(format!(
                "the n-ablation varies decision-set size, which {:?} does not use",
                method.label
            )));
        }
    }
    if cfg.n_values.len() < 2 {
        return Err(Error::Input(
            "an n-ablation needs at least two decision-set sizes".into(),
        ));
    }
    run_sweep(cfg, calib, test)
}

/// Render budget-averaged summaries as a Markdown table: one row per
/// method, accuracy and F1 in percent rounded to integers.
pub fn render_markdown(report: &SweepReport) -> String {
    let mut distinct_n: Vec<usize> = report.summaries.iter().map(|s| s.n).collect();
    distinct_n.sort_unstable();
    distinct_n.dedup();
    let show_n = distinct_n.len() > 1;

    let mut out = String::from("| Method | Acc (%) | F1 (%) |\n|---|---:|---:|\n");
    for s in &report.summaries {
        let name = if show_n {
            format!("{} (n={})", s.method, s.n)
        } else {
            s.method.clone()
        };
        out.push_str(&format!(
            "| {name} | {:.0} | {:.0} |\n",
            100.0 * s.acc_mean,
            100.0 * s.f1_mean
        ));
    }
    out
}
