//! Annotation budget selection: which samples to send to the human
//! annotator. Four strategies: uniform random, score density, sigmoid
//! uncertainty, and density-weighted uncertainty.
//!
//! All selectors return sorted, distinct dataset indices and clamp the
//! requested budget to the dataset size. Only the random strategy consumes
//! the seed.

use rand::seq::index::sample;

use crate::model::{sigmoid, Dataset};
use crate::seeding::rng_from;

/// Whether density selection takes the most or least dense samples.
/// The published rule is most dense; least dense is kept as a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityOrder {
    MostDense,
    LeastDense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Random,
    Density,
    Uncertainty,
    DensityWeightedUncertainty,
}

/// A selection strategy plus the knobs it needs. Carrying the seed here keeps
/// call sites uniform; non-random strategies ignore it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionStrategy {
    pub kind: StrategyKind,
    pub seed: u64,
    pub density_order: DensityOrder,
}

impl SelectionStrategy {
    pub fn random(seed: u64) -> Self {
        SelectionStrategy {
            kind: StrategyKind::Random,
            seed,
            density_order: DensityOrder::MostDense,
        }
    }

    pub fn density(order: DensityOrder) -> Self {
        SelectionStrategy {
            kind: StrategyKind::Density,
            seed: 0,
            density_order: order,
        }
    }

    pub fn uncertainty() -> Self {
        SelectionStrategy {
            kind: StrategyKind::Uncertainty,
            seed: 0,
            density_order: DensityOrder::MostDense,
        }
    }

    pub fn density_weighted_uncertainty() -> Self {
        SelectionStrategy {
            kind: StrategyKind::DensityWeightedUncertainty,
            seed: 0,
            density_order: DensityOrder::MostDense,
        }
    }

    pub fn select(&self, dataset: &Dataset, budget: usize) -> Vec<usize> {
        match self.kind {
            StrategyKind::Random => select_random(dataset, budget, self.seed),
            StrategyKind::Density => select_density(dataset, budget, self.density_order),
            StrategyKind::Uncertainty => select_uncertainty(dataset, budget),
            StrategyKind::DensityWeightedUncertainty => {
                select_density_weighted_uncertainty(dataset, budget)
            }
        }
    }
}

/// Sum of squared score distances to every other sample:
/// d_i = sum_j (s_j - s_i)^2, expanded to N s_i^2 - 2 s_i S + Q with
/// S = sum s_j and Q = sum s_j^2, which is O(N). Scores are centered on
/// their mean first; the quantity is shift-invariant and centering keeps
/// the expansion from cancelling catastrophically.
pub fn density_scores(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = scores.iter().map(|&s| s - mean).collect();
    let s1: f64 = centered.iter().sum();
    let s2: f64 = centered.iter().map(|&u| u * u).sum();
    centered
        .iter()
        .map(|&u| n as f64 * u * u - 2.0 * u * s1 + s2)
        .collect()
}

fn clamp_budget(dataset: &Dataset, budget: usize) -> usize {
    budget.min(dataset.len())
}

/// Ranks indices by `key` and returns the first `l`, sorted ascending.
/// Ties fall back to the smaller index.
fn take_ranked(keys: &[f64], l: usize, descending: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        let cmp = if descending {
            keys[b].total_cmp(&keys[a])
        } else {
            keys[a].total_cmp(&keys[b])
        };
        cmp.then(a.cmp(&b))
    });
    order.truncate(l);
    order.sort_unstable();
    order
}

/// Uniform sample of `budget` indices without replacement.
pub fn select_random(dataset: &Dataset, budget: usize, seed: u64) -> Vec<usize> {
    let l = clamp_budget(dataset, budget);
    let mut rng = rng_from(seed, &[b"random-selection"]);
    let mut picked = sample(&mut rng, dataset.len(), l).into_vec();
    picked.sort_unstable();
    picked
}

/// The `budget` samples of highest (or lowest) score density.
pub fn select_density(dataset: &Dataset, budget: usize, order: DensityOrder) -> Vec<usize> {
    let l = clamp_budget(dataset, budget);
    let d = density_scores(dataset.scores());
    take_ranked(&d, l, order == DensityOrder::MostDense)
}

/// The `budget` samples whose sigmoid-mapped score is closest to 1/2.
pub fn select_uncertainty(dataset: &Dataset, budget: usize) -> Vec<usize> {
    let l = clamp_budget(dataset, budget);
    let keys: Vec<f64> = dataset
        .scores()
        .iter()
        .map(|&s| (sigmoid(s) - 0.5).abs())
        .collect();
    take_ranked(&keys, l, false)
}

/// The `budget` samples of highest density-weighted uncertainty:
/// (density / max density) * (1 - 2 |sigmoid(s) - 1/2|).
pub fn select_density_weighted_uncertainty(dataset: &Dataset, budget: usize) -> Vec<usize> {
    let l = clamp_budget(dataset, budget);
    let d = density_scores(dataset.scores());
    let max_d = d.iter().copied().fold(0.0f64, f64::max);
    let keys: Vec<f64> = dataset
        .scores()
        .iter()
        .zip(&d)
        .map(|(&s, &di)| {
            let dn = if max_d > 0.0 { di / max_d } else { 1.0 };
            dn * (1.0 - 2.0 * (sigmoid(s) - 0.5).abs())
        })
        .collect();
    take_ranked(&keys, l, true)
}
