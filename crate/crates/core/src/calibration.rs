//! Decision-set assembly and threshold search.
//!
//! One relation's calibration runs in three steps: gold labels arrive from
//! a budget-charged oracle, a classifier tops the set up to `n` points with
//! auto-labels, and every distinct score in the set is tried as a threshold
//! candidate, keeping the one with the best weighted metric. Relations that
//! end up with nothing get [`DEFAULT_THRESHOLD`]. Two gold-only baselines
//! (per-relation local search, global grid search in sigmoid space) share
//! the same machinery.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::classifier::{self, auto_label, ClassifierConfig, LabelMode, ProbClassifier};
use crate::error::{Error, Result};
use crate::model::{
    classify, compute_metrics, logit, sigmoid, weighted_accuracy, weighted_f1, Dataset,
    DecisionSet, LabeledPoint, Metrics, RelationId, ThresholdMap,
};
use crate::seeding::rng_from;
use crate::selection::SelectionStrategy;

/// Threshold for relations nothing could be estimated for: 0 in raw-score
/// space, which is 0.5 in the sigmoid view.
pub const DEFAULT_THRESHOLD: f64 = 0.0;

/// Grid resolution the global baseline uses unless told otherwise.
pub const DEFAULT_GRID_STEPS: usize = 101;

/// Which weighted metric ranks threshold candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Accuracy,
    F1,
}

impl MetricKind {
    fn evaluate(self, points: &[LabeledPoint], threshold: f64) -> f64 {
        match self {
            MetricKind::Accuracy => weighted_accuracy(points, threshold),
            MetricKind::F1 => weighted_f1(points, threshold),
        }
    }
}

/// One threshold per relation, or a single shared one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    PerRelation,
    Uniform,
}

/// How far auto-labeling reaches: top the set up to `n`, or label the
/// entire unannotated pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutoExtent {
    TopUp,
    All,
}

/// A chosen threshold and the metric value it achieved on its decision set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdEstimate {
    pub threshold: f64,
    pub metric_value: f64,
}

/// A gold annotation: which relation it belongs to, its score, its label.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldSample {
    pub relation: RelationId,
    pub score: f64,
    pub positive: bool,
}

/// Degraded-mode counters accumulated over one calibration run. Nothing
/// here is fatal; the counts surface in sweep reports for diagnosis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CalibrationWarnings {
    /// Decision sets auto-labeled by the pooled-gold fallback classifier.
    pub global_fallback: usize,
    /// Decision sets left at gold alone because no classifier was usable
    /// or the pool was empty.
    pub skipped_auto: usize,
    /// Pools too small to reach the requested set size.
    pub short_pool: usize,
    /// Relations that received the default threshold.
    pub defaulted: usize,
}

impl CalibrationWarnings {
    pub fn total(&self) -> usize {
        self.global_fallback + self.skipped_auto + self.short_pool + self.defaulted
    }
}

/// Thresholds plus the degradation counters their estimation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub thresholds: ThresholdMap,
    pub warnings: CalibrationWarnings,
}

/// A label source charged per distinct triple, up to a budget.
#[derive(Debug, Clone)]
pub struct AnnotationOracle {
    labels: HashMap<(String, String, String), bool>,
    revealed: HashMap<(String, String, String), bool>,
    budget: usize,
    spent: usize,
}

impl AnnotationOracle {
    /// Oracle backed by a dataset's own labels. Unlabeled triples are
    /// simply unknown to it.
    pub fn from_dataset(dataset: &Dataset, budget: usize) -> Self {
        let labels = dataset
            .triples()
            .iter()
            .filter_map(|t| {
                t.label.map(|lab| {
                    (
                        (t.head.clone(), t.relation.to_string(), t.tail.clone()),
                        lab,
                    )
                })
            })
            .collect();
        AnnotationOracle {
            labels,
            revealed: HashMap::new(),
            budget,
            spent: 0,
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn spent(&self) -> usize {
        self.spent
    }

    /// Ask for a triple's label. The first successful reveal of a triple
    /// costs one budget unit; repeats are free; unknown triples cost
    /// nothing and yield `None`.
    pub fn reveal(&mut self, head: &str, relation: &str, tail: &str) -> Result<Option<bool>> {
        let key = (head.to_owned(), relation.to_owned(), tail.to_owned());
        if let Some(&label) = self.revealed.get(&key) {
            return Ok(Some(label));
        }
        let Some(&label) = self.labels.get(&key) else {
            return Ok(None);
        };
        if self.spent >= self.budget {
            return Err(Error::Budget(format!(
                "annotation budget of {} exhausted before revealing ({head}, {relation}, {tail})",
                self.budget
            )));
        }
        self.spent += 1;
        self.revealed.insert(key, label);
        Ok(Some(label))
    }
}

/// Pick the threshold maximizing the weighted metric over a decision set.
///
/// Candidates are the set's distinct scores plus a +inf sentinel meaning
/// "classify everything negative"; the smallest maximizing candidate wins
/// ties. Under accuracy an all-negative hard set therefore returns +inf
/// and an all-positive one returns its minimum score. Under F1 an
/// all-negative set scores 0 at every candidate (no true positive is
/// possible) and the minimum score wins as smallest of the tie.
///
/// Hard-label sets evaluate exactly: the prefix sums below add only 0s and
/// 1s, so each candidate's metric is bit-identical to a direct recount.
pub fn estimate_threshold(set: &DecisionSet, metric: MetricKind) -> Result<ThresholdEstimate> {
    if set.points.is_empty() {
        return Err(Error::Input(
            "cannot estimate a threshold from an empty decision set".into(),
        ));
    }
    let mut points = set.points.clone();
    points.sort_by(|a, b| a.score.total_cmp(&b.score));
    let n = points.len();
    let n_f = n as f64;

    // prefix_w[k] = total weight of the k lowest-scoring points.
    let mut prefix_w = Vec::with_capacity(n + 1);
    prefix_w.push(0.0);
    for p in &points {
        prefix_w.push(prefix_w.last().unwrap() + p.weight);
    }
    let total_w = prefix_w[n];

    // Candidate at sorted index k classifies exactly points[k..] positive;
    // k = n is the sentinel classifying everything negative.
    let value_at = |k: usize| -> f64 {
        let tp = total_w - prefix_w[k];
        let fals_neg = prefix_w[k];
        match metric {
            MetricKind::Accuracy => {
                let tn = k as f64 - prefix_w[k];
                (tp + tn) / n_f
            }
            MetricKind::F1 => {
                let fp = (n - k) as f64 - tp;
                let denom = 2.0 * tp + fp + fals_neg;
                if denom == 0.0 {
                    0.0
                } else {
                    2.0 * tp / denom
                }
            }
        }
    };

    let mut best = ThresholdEstimate {
        threshold: points[0].score,
        metric_value: value_at(0),
    };
    for k in 1..n {
        if points[k].score == points[k - 1].score {
            continue;
        }
        let value = value_at(k);
        if value > best.metric_value {
            best = ThresholdEstimate {
                threshold: points[k].score,
                metric_value: value,
            };
        }
    }
    let sentinel = value_at(n);
    if sentinel > best.metric_value {
        best = ThresholdEstimate {
            threshold: f64::INFINITY,
            metric_value: sentinel,
        };
    }
    Ok(best)
}

/// Classifier choice and labeling policy for topping up decision sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoLabelPolicy {
    pub classifier: ClassifierConfig,
    pub label_mode: LabelMode,
    pub extent: AutoExtent,
}

/// Assemble one decision set: gold as-is when it already reaches `n`,
/// otherwise gold plus classifier-labeled pool samples.
///
/// The classifier ladder: fit on the relation's own gold when it carries
/// both classes; otherwise fall back to `global` (a classifier fitted on
/// gold pooled across relations) when provided; otherwise skip auto-labeling
/// and return gold alone, flagging the degradation. An empty gold set with
/// a usable global classifier still yields a full auto-labeled set; with no
/// classifier at all it yields an empty set and the caller assigns the
/// default threshold.
#[allow(clippy::too_many_arguments)]
pub fn build_decision_set(
    relation: Option<&RelationId>,
    gold: &[LabeledPoint],
    pool: &[f64],
    n: usize,
    policy: &AutoLabelPolicy,
    global: Option<&ProbClassifier>,
    rng: &mut impl Rng,
    warnings: &mut CalibrationWarnings,
) -> Result<DecisionSet> {
    if n == 0 {
        return Err(Error::Input(
            "decision sets need a minimum size of at least 1".into(),
        ));
    }
    let make = |points: Vec<LabeledPoint>, gold_count: usize| DecisionSet {
        relation: relation.cloned(),
        points,
        gold_count,
    };
    if gold.len() >= n {
        return Ok(make(gold.to_vec(), gold.len()));
    }

    let has_pos = gold.iter().any(LabeledPoint::is_positive);
    let has_neg = gold.iter().any(|p| !p.is_positive());
    let local = if has_pos && has_neg {
        let pairs: Vec<(f64, bool)> = gold.iter().map(|p| (p.score, p.is_positive())).collect();
        Some(classifier::fit(&policy.classifier, &pairs)?)
    } else {
        None
    };
    let (labeler, is_global) = match (&local, global) {
        (Some(c), _) => (Some(c), false),
        (None, Some(c)) => (Some(c), true),
        (None, None) => (None, false),
    };

    let Some(labeler) = labeler else {
        warnings.skipped_auto += 1;
        return Ok(make(gold.to_vec(), gold.len()));
    };
    if pool.is_empty() {
        warnings.skipped_auto += 1;
        return Ok(make(gold.to_vec(), gold.len()));
    }

    let missing = n - gold.len();
    let draw = match policy.extent {
        AutoExtent::TopUp => {
            if pool.len() < missing {
                warnings.short_pool += 1;
            }
            missing.min(pool.len())
        }
        AutoExtent::All => pool.len(),
    };
    let chosen_scores: Vec<f64> = if draw == pool.len() {
        pool.to_vec()
    } else {
        let mut idx = rand::seq::index::sample(rng, pool.len(), draw).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pool[i]).collect()
    };
    if is_global {
        warnings.global_fallback += 1;
    }

    let mut points = gold.to_vec();
    points.extend(auto_label(labeler, &chosen_scores, policy.label_mode));
    Ok(make(points, gold.len()))
}

/// Full configuration of one calibration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActcConfig {
    pub strategy: SelectionStrategy,
    /// Annotation budget l; spending is capped at the dataset size.
    pub budget: usize,
    /// Minimum decision-set size n; auto-labeling tops sets up to it.
    pub min_set_size: usize,
    pub classifier: ClassifierConfig,
    pub label_mode: LabelMode,
    pub metric: MetricKind,
    pub scope: Scope,
    pub auto_extent: AutoExtent,
    /// Seeds the pool draws (selection carries its own seed).
    pub seed: u64,
    /// Replace the prose reading with the literal published loop: gold
    /// scores as the only candidates, threshold initialized to 0, strictly
    /// greater updates, no auto-labeling. Kept as a comparison switch.
    pub strict_gold_scan: bool,
}

impl ActcConfig {
    pub fn new(strategy: SelectionStrategy, budget: usize) -> Self {
        ActcConfig {
            strategy,
            budget,
            min_set_size: 500,
            classifier: ClassifierConfig::default(),
            label_mode: LabelMode::Hard,
            metric: MetricKind::Accuracy,
            scope: Scope::PerRelation,
            auto_extent: AutoExtent::TopUp,
            seed: 0,
            strict_gold_scan: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.min_set_size == 0 {
            return Err(Error::Input("minimum set size must be at least 1".into()));
        }
        match self.classifier {
            ClassifierConfig::Logistic { inv_reg_c } => {
                if !(inv_reg_c.is_finite() && inv_reg_c > 0.0) {
                    return Err(Error::Input(format!(
                        "inverse regularization strength must be positive and finite, got {inv_reg_c}"
                    )));
                }
                Ok(())
            }
            ClassifierConfig::GaussianProcess { kernel } => kernel.validate(),
        }
    }
}

/// Budget-charged gold annotations grouped by relation, in charge order.
struct ChargedGold {
    by_relation: BTreeMap<RelationId, Vec<LabeledPoint>>,
    /// Dataset indices that became gold, ascending.
    gold_indices: Vec<usize>,
}

fn charge_oracle(
    dataset: &Dataset,
    oracle: &mut AnnotationOracle,
    selected: &[usize],
) -> Result<ChargedGold> {
    let mut by_relation: BTreeMap<RelationId, Vec<LabeledPoint>> = BTreeMap::new();
    let mut gold_indices = Vec::new();
    for &i in selected {
        let t = dataset.get(i);
        if let Some(label) = oracle.reveal(&t.head, t.relation.as_str(), &t.tail)? {
            by_relation
                .entry(t.relation.clone())
                .or_default()
                .push(LabeledPoint::hard(t.score, label));
            gold_indices.push(i);
        }
    }
    Ok(ChargedGold {
        by_relation,
        gold_indices,
    })
}

/// The literal published search: try each gold score in charge order,
/// keep it only on a strict metric improvement, start from threshold 0.
fn strict_scan(gold: &[LabeledPoint], metric: MetricKind) -> f64 {
    let mut threshold = DEFAULT_THRESHOLD;
    let mut best = 0.0;
    for point in gold {
        let value = metric.evaluate(gold, point.score);
        if value > best {
            best = value;
            threshold = point.score;
        }
    }
    threshold
}

/// Calibrate thresholds with budgeted annotation and auto-label top-up.
///
/// Step 1 selects `budget` samples by the configured strategy and charges
/// the oracle (spend is exactly min(budget, dataset size) when the oracle
/// knows every triple). Step 2 builds a decision set per relation, or one
/// pooled set under uniform scope. Step 3 estimates thresholds; relations
/// whose set came out empty get [`DEFAULT_THRESHOLD`]. Zero budget with no
/// usable classifier degrades to an all-default map rather than failing.
pub fn calibrate_actc(
    dataset: &Dataset,
    oracle: &mut AnnotationOracle,
    cfg: &ActcConfig,
) -> Result<CalibrationOutcome> {
    cfg.validate()?;
    let selected = cfg.strategy.select(dataset, cfg.budget);
    let gold = charge_oracle(dataset, oracle, &selected)?;
    let mut warnings = CalibrationWarnings::default();

    if cfg.strict_gold_scan {
        let thresholds = match cfg.scope {
            Scope::PerRelation => {
                let mut per_relation = BTreeMap::new();
                for relation in dataset.relations() {
                    match gold.by_relation.get(relation) {
                        Some(points) => {
                            per_relation.insert(relation.clone(), strict_scan(points, cfg.metric));
                        }
                        None => warnings.defaulted += 1,
                    }
                }
                ThresholdMap {
                    default: DEFAULT_THRESHOLD,
                    per_relation,
                }
            }
            Scope::Uniform => {
                let pooled = pooled_gold(&gold);
                if pooled.is_empty() {
                    warnings.defaulted += 1;
                    ThresholdMap::uniform(DEFAULT_THRESHOLD)
                } else {
                    ThresholdMap::uniform(strict_scan(&pooled, cfg.metric))
                }
            }
        };
        return Ok(CalibrationOutcome {
            thresholds,
            warnings,
        });
    }

    let policy = AutoLabelPolicy {
        classifier: cfg.classifier,
        label_mode: cfg.label_mode,
        extent: cfg.auto_extent,
    };
    let is_gold = |i: &usize| gold.gold_indices.binary_search(i).is_ok();

    let thresholds = match cfg.scope {
        Scope::PerRelation => {
            let global = fit_global_if_needed(dataset, &gold, cfg)?;
            let mut per_relation = BTreeMap::new();
            for relation in dataset.relations() {
                let gold_r = gold
                    .by_relation
                    .get(relation)
                    .map(Vec::as_slice)
                    .unwrap_or(&[]);
                let pool: Vec<f64> = dataset
                    .indices_for(relation)
                    .iter()
                    .filter(|i| !is_gold(i))
                    .map(|&i| dataset.get(i).score)
                    .collect();
                let mut rng = rng_from(cfg.seed, &[b"pool", relation.as_str().as_bytes()]);
                let set = build_decision_set(
                    Some(relation),
                    gold_r,
                    &pool,
                    cfg.min_set_size,
                    &policy,
                    global.as_ref(),
                    &mut rng,
                    &mut warnings,
                )?;
                if set.points.is_empty() {
                    warnings.defaulted += 1;
                    continue;
                }
                let estimate = estimate_threshold(&set, cfg.metric)?;
                per_relation.insert(relation.clone(), estimate.threshold);
            }
            ThresholdMap {
                default: DEFAULT_THRESHOLD,
                per_relation,
            }
        }
        Scope::Uniform => {
            let pooled = pooled_gold(&gold);
            let pool: Vec<f64> = (0..dataset.len())
                .filter(|i| !is_gold(i))
                .map(|i| dataset.get(i).score)
                .collect();
            let mut rng = rng_from(cfg.seed, &[b"pool", b"uniform"]);
            let set = build_decision_set(
                None,
                &pooled,
                &pool,
                cfg.min_set_size,
                &policy,
                None,
                &mut rng,
                &mut warnings,
            )?;
            if set.points.is_empty() {
                warnings.defaulted += 1;
                ThresholdMap::uniform(DEFAULT_THRESHOLD)
            } else {
                let estimate = estimate_threshold(&set, cfg.metric)?;
                ThresholdMap::uniform(estimate.threshold)
            }
        }
    };
    Ok(CalibrationOutcome {
        thresholds,
        warnings,
    })
}

fn pooled_gold(gold: &ChargedGold) -> Vec<LabeledPoint> {
    gold.by_relation.values().flatten().copied().collect()
}

/// Fit the pooled-gold fallback classifier, but only when some relation
/// will actually reach for it: short of `n`, without two-class local gold,
/// and with a non-empty pool. Cross-relation gold lacking two classes
/// yields no fallback; the affected relations then skip auto-labeling.
fn fit_global_if_needed(
    dataset: &Dataset,
    gold: &ChargedGold,
    cfg: &ActcConfig,
) -> Result<Option<ProbClassifier>> {
    let is_gold = |i: &usize| gold.gold_indices.binary_search(i).is_ok();
    let mut needed = false;
    for relation in dataset.relations() {
        let gold_r = gold
            .by_relation
            .get(relation)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        if gold_r.len() >= cfg.min_set_size {
            continue;
        }
        let has_pos = gold_r.iter().any(LabeledPoint::is_positive);
        let has_neg = gold_r.iter().any(|p| !p.is_positive());
        if has_pos && has_neg {
            continue;
        }
        if dataset.indices_for(relation).iter().any(|i| !is_gold(i)) {
            needed = true;
            break;
        }
    }
    if !needed {
        return Ok(None);
    }
    let pairs: Vec<(f64, bool)> = gold
        .by_relation
        .values()
        .flatten()
        .map(|p| (p.score, p.is_positive()))
        .collect();
    let has_pos = pairs.iter().any(|&(_, l)| l);
    let has_neg = pairs.iter().any(|&(_, l)| !l);
    if !(has_pos && has_neg) {
        return Ok(None);
    }
    classifier::fit(&cfg.classifier, &pairs).map(Some)
}

/// Gold-only per-relation threshold search (the local baseline). Uniform
/// scope pools all gold into a single searched set. Relations absent from
/// the gold fall back to [`DEFAULT_THRESHOLD`].
pub fn calibrate_local_opt(gold: &[GoldSample], metric: MetricKind, scope: Scope) -> ThresholdMap {
    let as_point = |g: &GoldSample| LabeledPoint::hard(g.score, g.positive);
    match scope {
        Scope::PerRelation => {
            let mut grouped: BTreeMap<RelationId, Vec<LabeledPoint>> = BTreeMap::new();
            for g in gold {
                grouped
                    .entry(g.relation.clone())
                    .or_default()
                    .push(as_point(g));
            }
            let per_relation = grouped
                .into_iter()
                .map(|(relation, points)| {
                    let set = DecisionSet {
                        relation: Some(relation.clone()),
                        gold_count: points.len(),
                        points,
                    };
                    let estimate = estimate_threshold(&set, metric)
                        .expect("groups are non-empty by construction");
                    (relation, estimate.threshold)
                })
                .collect();
            ThresholdMap {
                default: DEFAULT_THRESHOLD,
                per_relation,
            }
        }
        Scope::Uniform => {
            if gold.is_empty() {
                return ThresholdMap::uniform(DEFAULT_THRESHOLD);
            }
            let points: Vec<LabeledPoint> = gold.iter().map(as_point).collect();
            let set = DecisionSet {
                relation: None,
                gold_count: points.len(),
                points,
            };
            let estimate =
                estimate_threshold(&set, metric).expect("set is non-empty by construction");
            ThresholdMap::uniform(estimate.threshold)
        }
    }
}

/// Grid-search baseline maximizing F1 over the whole gold set at once.
///
/// Works in the sigmoid view on a uniform grid over [0, 1]. Relations are
/// processed once in sorted order; while a relation is being searched, the
/// already-processed ones keep their chosen grid values and the rest sit
/// at 0.5. Chosen grid values map back to raw scores through the logit, so
/// grid endpoints 0 and 1 become -inf and +inf (always / never include).
pub fn calibrate_global_opt(gold: &[GoldSample], grid_steps: usize) -> Result<ThresholdMap> {
    if grid_steps < 2 {
        return Err(Error::Input(format!(
            "grid search needs at least 2 steps, got {grid_steps}"
        )));
    }
    let mut relations: Vec<RelationId> = Vec::new();
    for g in gold {
        if !relations.contains(&g.relation) {
            relations.push(g.relation.clone());
        }
    }
    relations.sort();

    let probs: Vec<f64> = gold.iter().map(|g| sigmoid(g.score)).collect();
    let mut chosen: BTreeMap<RelationId, f64> = BTreeMap::new();
    let global_f1 = |chosen: &BTreeMap<RelationId, f64>, active: &RelationId, cand: f64| -> f64 {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fals_neg = 0usize;
        for (g, &p) in gold.iter().zip(&probs) {
            let theta = if g.relation == *active {
                cand
            } else {
                chosen.get(&g.relation).copied().unwrap_or(0.5)
            };
            let pred = p >= theta;
            match (pred, g.positive) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fals_neg += 1,
                (false, false) => {}
            }
        }
        let denom = (2 * tp + fp + fals_neg) as f64;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp as f64 / denom
        }
    };

    for relation in &relations {
        let mut best_theta = 0.0;
        let mut best_value = f64::NEG_INFINITY;
        for k in 0..grid_steps {
            let cand = k as f64 / (grid_steps - 1) as f64;
            let value = global_f1(&chosen, relation, cand);
            if value > best_value {
                best_value = value;
                best_theta = cand;
            }
        }
        chosen.insert(relation.clone(), best_theta);
    }

    let per_relation = chosen
        .into_iter()
        .map(|(relation, theta)| (relation, logit(theta)))
        .collect();
    Ok(ThresholdMap {
        default: DEFAULT_THRESHOLD,
        per_relation,
    })
}

/// Accuracy and F1 of a threshold map over a dataset's labeled triples.
/// Unlabeled triples are skipped; an entirely unlabeled dataset is an error.
pub fn evaluate_thresholds(map: &ThresholdMap, dataset: &Dataset) -> Result<Metrics> {
    let mut predictions = Vec::new();
    let mut gold = Vec::new();
    for t in dataset.triples() {
        if let Some(label) = t.label {
            predictions.push(classify(t.score, map.threshold_for(&t.relation)));
            gold.push(label);
        }
    }
    compute_metrics(&predictions, &gold)
}
