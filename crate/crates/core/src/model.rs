//! Core data model: scored triples, decision sets, threshold maps, and the
//! elementary classification and metric primitives everything else builds on.
//!
//! The decision rule is fixed across the crate: a triple is accepted when its
//! score is greater than or equal to the relation's threshold. `+inf` is the
//! all-negative threshold, `-inf` the all-positive one.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Relation identifier. Ordering is plain byte order of the name, which is
/// also the serialization order of threshold files and reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationId(pub String);

impl RelationId {
    pub fn new(name: impl Into<String>) -> Self {
        RelationId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RelationId {
    fn from(s: &str) -> Self {
        RelationId(s.to_owned())
    }
}

/// One scored candidate fact. The label is `None` for triples whose truth
/// value has not been (or will never be) revealed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTriple {
    pub head: String,
    pub relation: RelationId,
    pub tail: String,
    pub score: f64,
    pub label: Option<bool>,
}

/// An immutable collection of scored triples with a per-relation index.
///
/// Construction validates that every score is finite and that no
/// (head, relation, tail) key occurs twice.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    triples: Vec<ScoredTriple>,
    scores: Vec<f64>,
    by_relation: BTreeMap<RelationId, Vec<usize>>,
}

impl Dataset {
    pub fn new(triples: Vec<ScoredTriple>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(triples.len());
        let mut by_relation: BTreeMap<RelationId, Vec<usize>> = BTreeMap::new();
        for (i, t) in triples.iter().enumerate() {
            if !t.score.is_finite() {
                return Err(Error::input(format!(
                    "non-finite score {} for triple ({}, {}, {})",
                    t.score, t.head, t.relation, t.tail
                )));
            }
            if !seen.insert((t.head.as_str(), t.relation.as_str(), t.tail.as_str())) {
                return Err(Error::input(format!(
                    "duplicate triple ({}, {}, {})",
                    t.head, t.relation, t.tail
                )));
            }
            by_relation.entry(t.relation.clone()).or_default().push(i);
        }
        let scores = triples.iter().map(|t| t.score).collect();
        Ok(Dataset {
            triples,
            scores,
            by_relation,
        })
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[ScoredTriple] {
        &self.triples
    }

    pub fn get(&self, index: usize) -> &ScoredTriple {
        &self.triples[index]
    }

    /// All scores in triple order.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Distinct relations in sorted order.
    pub fn relations(&self) -> impl Iterator<Item = &RelationId> {
        self.by_relation.keys()
    }

    pub fn relation_count(&self) -> usize {
        self.by_relation.len()
    }

    /// Indices of the triples belonging to `relation`, in dataset order.
    pub fn indices_for(&self, relation: &RelationId) -> &[usize] {
        self.by_relation
            .get(relation)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// (positive, negative, unlabeled) counts.
    pub fn label_counts(&self) -> (usize, usize, usize) {
        let mut pos = 0;
        let mut neg = 0;
        let mut unl = 0;
        for t in &self.triples {
            match t.label {
                Some(true) => pos += 1,
                Some(false) => neg += 1,
                None => unl += 1,
            }
        }
        (pos, neg, unl)
    }

    pub fn fully_labeled(&self) -> bool {
        self.triples.iter().all(|t| t.label.is_some())
    }
}

/// A score with a soft truth weight in [0, 1]. Gold annotations carry hard
/// weights 0 or 1; auto-labeled points may carry classifier probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub score: f64,
    pub weight: f64,
}

impl LabeledPoint {
    /// Hard-labeled point with weight 1 (positive) or 0 (negative).
    pub fn hard(score: f64, positive: bool) -> Self {
        LabeledPoint {
            score,
            weight: if positive { 1.0 } else { 0.0 },
        }
    }

    pub fn soft(score: f64, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::input(format!(
                "label weight {weight} outside [0, 1]"
            )));
        }
        Ok(LabeledPoint { score, weight })
    }

    /// Hard view of the weight: true iff weight >= 1/2.
    pub fn is_positive(&self) -> bool {
        self.weight >= 0.5
    }
}

/// The set a threshold is estimated on: gold annotations plus any
/// auto-labeled points, for one relation (or for all of them at once).
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    pub relation: Option<RelationId>,
    pub points: Vec<LabeledPoint>,
    /// The first `gold_count` points are gold; the rest are auto-labeled.
    pub gold_count: usize,
}

impl DecisionSet {
    pub fn auto_count(&self) -> usize {
        self.points.len() - self.gold_count
    }
}

/// Per-relation thresholds plus a default for relations never seen during
/// calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMap {
    pub default: f64,
    pub per_relation: BTreeMap<RelationId, f64>,
}

impl ThresholdMap {
    pub fn uniform(threshold: f64) -> Self {
        ThresholdMap {
            default: threshold,
            per_relation: BTreeMap::new(),
        }
    }

    pub fn threshold_for(&self, relation: &RelationId) -> f64 {
        self.per_relation
            .get(relation)
            .copied()
            .unwrap_or(self.default)
    }
}

/// Confusion counts with derived accuracy and F1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

/// Inclusive decision rule: accept iff `score >= threshold`.
#[inline]
pub fn classify(score: f64, threshold: f64) -> bool {
    score >= threshold
}

/// Accuracy and F1 of hard predictions against hard gold labels.
/// F1 = 2tp / (2tp + fp + fn), defined as 0 when that denominator is 0.
pub fn compute_metrics(predictions: &[bool], gold: &[bool]) -> Result<Metrics> {
    if predictions.len() != gold.len() {
        return Err(Error::input(format!(
            "prediction/gold length mismatch: {} vs {}",
            predictions.len(),
            gold.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::input("cannot compute metrics on an empty set"));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fnc = 0usize;
    for (&p, &g) in predictions.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fnc += 1,
        }
    }
    let n = predictions.len() as f64;
    let denom = (2 * tp + fp + fnc) as f64;
    Ok(Metrics {
        accuracy: (tp + tn) as f64 / n,
        f1: if denom == 0.0 {
            0.0
        } else {
            2.0 * tp as f64 / denom
        },
        true_pos: tp,
        false_pos: fp,
        true_neg: tn,
        false_neg: fnc,
    })
}

/// Weighted accuracy of thresholding `points` at `threshold`: a predicted
/// positive earns its weight, a predicted negative earns one minus it.
/// Empty input yields 0.
pub fn weighted_accuracy(points: &[LabeledPoint], threshold: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let credit: f64 = points
        .iter()
        .map(|p| {
            if classify(p.score, threshold) {
                p.weight
            } else {
                1.0 - p.weight
            }
        })
        .sum();
    credit / points.len() as f64
}

/// Weighted F1 of thresholding `points` at `threshold`. Predicted positives
/// contribute weight to tp and the complement to fp; predicted negatives
/// contribute weight to fn. Zero denominator yields 0. Empty input yields 0.
pub fn weighted_f1(points: &[LabeledPoint], threshold: f64) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fnc = 0.0;
    for p in points {
        if classify(p.score, threshold) {
            tp += p.weight;
            fp += 1.0 - p.weight;
        } else {
            fnc += p.weight;
        }
    }
    let denom = 2.0 * tp + fp + fnc;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * tp / denom
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`sigmoid`]: ln(p / (1 - p)). Maps 0 to -inf and 1 to +inf.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
