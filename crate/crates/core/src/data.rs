//! File formats and synthetic data generation.
//!
//! Triples travel as five-column TSV (`head  relation  tail  score  label`,
//! label in {0, 1, ?}, `#` comments). Threshold files are two-column TSV with
//! a leading `#default` line. Both formats round-trip scores exactly because
//! the shortest-representation float formatter is used on write.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, Normal as GaussCdf};

use crate::error::{Error, Result};
use crate::experiments::SweepReport;
use crate::model::{sigmoid, Dataset, RelationId, ScoredTriple, ThresholdMap};

/// Paths of a calibration/test split of the same scored collection.
#[derive(Debug, Clone)]
pub struct SplitFiles {
    pub calibration: PathBuf,
    pub test: PathBuf,
}

impl SplitFiles {
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        Ok((
            load_scored_triples(&self.calibration)?,
            load_scored_triples(&self.test)?,
        ))
    }
}

/// Score model for one synthetic relation: equal-variance Gaussian class
/// conditionals. `mu_pos` may equal or undershoot `mu_neg`; the ideal
/// accuracy formula uses the absolute mean gap either way.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationSpec {
    pub n_pos: usize,
    pub n_neg: usize,
    pub mu_pos: f64,
    pub mu_neg: f64,
    pub sigma: f64,
}

impl RelationSpec {
    pub fn count(&self) -> usize {
        self.n_pos + self.n_neg
    }
}

/// Full specification of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub relations: Vec<RelationSpec>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Every relation identical: `n_pos` positives and `n_neg` negatives.
    pub fn homogeneous(
        n_relations: usize,
        n_pos: usize,
        n_neg: usize,
        mu_pos: f64,
        mu_neg: f64,
        sigma: f64,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            relations: vec![
                RelationSpec {
                    n_pos,
                    n_neg,
                    mu_pos,
                    mu_neg,
                    sigma,
                };
                n_relations
            ],
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.relations.is_empty() {
            return Err(Error::input("synthetic spec needs at least one relation"));
        }
        if self.relations.iter().all(|r| r.count() == 0) {
            return Err(Error::input("synthetic spec generates no samples"));
        }
        for (i, r) in self.relations.iter().enumerate() {
            if !r.mu_pos.is_finite() || !r.mu_neg.is_finite() || !r.sigma.is_finite() {
                return Err(Error::input(format!("relation {i}: non-finite parameter")));
            }
            if r.sigma <= 0.0 {
                return Err(Error::input(format!(
                    "relation {i}: sigma must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Ideal per-relation threshold and accuracy under the generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationBayes {
    pub relation: RelationId,
    pub count: usize,
    /// Midpoint of the class means, optimal for equal variances and priors.
    pub threshold: f64,
    /// Accuracy of the midpoint threshold: Phi(|mu_pos - mu_neg| / (2 sigma)).
    pub accuracy: f64,
}

/// Ideal thresholds for a whole synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesInfo {
    pub per_relation: Vec<RelationBayes>,
}

impl BayesInfo {
    /// Sample-weighted accuracy of the ideal thresholds.
    pub fn expected_accuracy(&self) -> f64 {
        let total: usize = self.per_relation.iter().map(|r| r.count).sum();
        let credit: f64 = self
            .per_relation
            .iter()
            .map(|r| r.accuracy * r.count as f64)
            .sum();
        credit / total as f64
    }

    /// Ideal thresholds as a map, with the given default for unseen relations.
    pub fn thresholds(&self, default: f64) -> ThresholdMap {
        let per_relation: BTreeMap<RelationId, f64> = self
            .per_relation
            .iter()
            .map(|r| (r.relation.clone(), r.threshold))
            .collect();
        ThresholdMap {
            default,
            per_relation,
        }
    }
}

/// Relation names are zero-padded so byte order equals numeric order.
fn relation_name(index: usize, total: usize) -> String {
    let width = if total <= 1 {
        1
    } else {
        (total - 1).to_string().len()
    };
    format!("r{index:0width$}")
}

/// Draw a labeled dataset from the spec. Positives are drawn before
/// negatives within each relation; a fixed seed yields a fixed dataset.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, BayesInfo)> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let gauss = GaussCdf::standard();
    let mut triples = Vec::new();
    let mut bayes = Vec::with_capacity(spec.relations.len());
    for (idx, r) in spec.relations.iter().enumerate() {
        let relation = RelationId::new(relation_name(idx, spec.relations.len()));
        let pos_dist = Normal::new(r.mu_pos, r.sigma).expect("validated sigma");
        let neg_dist = Normal::new(r.mu_neg, r.sigma).expect("validated sigma");
        for k in 0..r.count() {
            let positive = k < r.n_pos;
            let score = if positive {
                pos_dist.sample(&mut rng)
            } else {
                neg_dist.sample(&mut rng)
            };
            triples.push(ScoredTriple {
                head: format!("h{idx}_{k}"),
                relation: relation.clone(),
                tail: format!("t{idx}_{k}"),
                score,
                label: Some(positive),
            });
        }
        bayes.push(RelationBayes {
            relation,
            count: r.count(),
            threshold: 0.5 * (r.mu_pos + r.mu_neg),
            accuracy: gauss.cdf((r.mu_pos - r.mu_neg).abs() / (2.0 * r.sigma)),
        });
    }
    Ok((
        Dataset::new(triples)?,
        BayesInfo {
            per_relation: bayes,
        },
    ))
}

fn parse_label(raw: &str) -> Option<Option<bool>> {
    match raw {
        "1" => Some(Some(true)),
        "0" => Some(Some(false)),
        "?" => Some(None),
        _ => None,
    }
}

fn parse_finite(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Read a five-column triple TSV. `#` lines and blank lines are skipped;
/// a repeated (head, relation, tail) key is a parse error naming the line.
pub fn load_scored_triples(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut triples = Vec::new();
    let mut seen: HashMap<(String, String, String), usize> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[..3].iter().any(|c| c.is_empty()) {
            return Err(Error::parse(path, lineno, "empty head, relation, or tail"));
        }
        let score = parse_finite(cols[3]).ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!("score {:?} is not a finite number", cols[3]),
            )
        })?;
        let label = parse_label(cols[4]).ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!("label {:?} is not one of 1, 0, ?", cols[4]),
            )
        })?;
        let key = (cols[0].to_owned(), cols[1].to_owned(), cols[2].to_owned());
        if let Some(first) = seen.insert(key, lineno) {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "triple ({}, {}, {}) already appeared on line {first}",
                    cols[0], cols[1], cols[2]
                ),
            ));
        }
        triples.push(ScoredTriple {
            head: cols[0].to_owned(),
            relation: RelationId::new(cols[1]),
            tail: cols[2].to_owned(),
            score,
            label,
        });
    }
    Dataset::new(triples)
}

fn check_field(path: &Path, field: &str) -> Result<()> {
    if field.contains('\t') || field.contains('\n') {
        return Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("field {field:?} contains a tab or newline"),
            ),
        ));
    }
    Ok(())
}

/// Write a dataset in the five-column TSV format.
pub fn save_scored_triples(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("#head\trelation\ttail\tscore\tlabel\n");
    for t in dataset.triples() {
        for field in [t.head.as_str(), t.relation.as_str(), t.tail.as_str()] {
            check_field(path, field)?;
        }
        if t.head.starts_with('#') {
            return Err(Error::io(
                path,
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("head {:?} would read back as a comment", t.head),
                ),
            ));
        }
        let label = match t.label {
            Some(true) => "1",
            Some(false) => "0",
            None => "?",
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            t.head, t.relation, t.tail, t.score, label
        )
        .expect("write to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Every score passed through the logistic function, in dataset order.
/// Strictly monotone, so score rankings survive the mapping.
pub fn sigmoid_view(dataset: &Dataset) -> Vec<f64> {
    dataset.scores().iter().map(|&s| sigmoid(s)).collect()
}

/// Write a threshold map: a `#default` line, then one sorted line per
/// relation. Infinite thresholds appear as `inf` / `-inf`.
pub fn save_thresholds(map: &ThresholdMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    writeln!(out, "#default\t{}", map.default).expect("write to string");
    for (relation, value) in &map.per_relation {
        check_field(path, relation.as_str())?;
        writeln!(out, "{relation}\t{value}").expect("write to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a threshold map written by [`save_thresholds`].
pub fn load_thresholds(path: impl AsRef<Path>) -> Result<ThresholdMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut default = None;
    let mut per_relation = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#default\t") {
            if default.is_some() {
                return Err(Error::parse(path, lineno, "second #default line"));
            }
            let value: f64 = rest.parse().map_err(|_| {
                Error::parse(path, lineno, format!("default {rest:?} is not a number"))
            })?;
            if value.is_nan() {
                return Err(Error::parse(path, lineno, "default threshold is NaN"));
            }
            default = Some(value);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (relation, raw) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected relation TAB threshold"))?;
        if relation.is_empty() {
            return Err(Error::parse(path, lineno, "empty relation name"));
        }
        let value: f64 = raw.parse().map_err(|_| {
            Error::parse(path, lineno, format!("threshold {raw:?} is not a number"))
        })?;
        if value.is_nan() {
            return Err(Error::parse(path, lineno, "threshold is NaN"));
        }
        if per_relation
            .insert(RelationId::new(relation), value)
            .is_some()
        {
            return Err(Error::parse(
                path,
                lineno,
                format!("relation {relation:?} listed twice"),
            ));
        }
    }
    let default = default.ok_or_else(|| Error::parse(path, 0, "missing #default line"))?;
    Ok(ThresholdMap {
        default,
        per_relation,
    })
}

/// Write a sweep report as CSV, one row per cell, sorted by
/// (strategy, budget, n). Reals carry 6 decimals; sem cells print empty
/// when fewer than 2 repeats make spread undefined. The trailing columns
/// record the decision-set size and the cell's degraded-mode warning
/// count.
pub fn write_report_csv(report: &SweepReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if report.cells.is_empty() {
        return Err(Error::Input("refusing to write an empty report".into()));
    }
    let mut cells: Vec<_> = report.cells.iter().collect();
    cells.sort_by(|a, b| {
        (a.method.as_str(), a.budget, a.n).cmp(&(b.method.as_str(), b.budget, b.n))
    });
    let sem_field = |sem: Option<f64>| sem.map(|v| format!("{v:.6}")).unwrap_or_default();
    let mut out =
        String::from("strategy,budget,repeats,acc_mean,acc_sem,f1_mean,f1_sem,n,warnings\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{},{:.6},{},{:.6},{},{},{}",
            c.method,
            c.budget,
            c.repeats,
            c.acc_mean,
            sem_field(c.acc_sem),
            c.f1_mean,
            sem_field(c.f1_sem),
            c.n,
            c.warnings
        )
        .expect("write to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::SweepCell;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().expect("tempdir")
    }

    #[test]
    fn triple_tsv_round_trips_bit_exactly() {
        let triples = vec![
            ScoredTriple {
                head: "alpha".into(),
                relation: "r0".into(),
                tail: "beta".into(),
                score: 0.1 + 0.2,
                label: Some(true),
            },
            ScoredTriple {
                head: "g".into(),
                relation: "r1".into(),
                tail: "d".into(),
                score: -1.0e-17,
                label: Some(false),
            },
            ScoredTriple {
                head: "e".into(),
                relation: "r1".into(),
                tail: "z".into(),
                score: 12345.678901234567,
                label: None,
            },
        ];
        let ds = Dataset::new(triples).unwrap();
        let dir = tmp();
        let path = dir.path().join("triples.tsv");
        save_scored_triples(&ds, &path).unwrap();
        let back = load_scored_triples(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn parse_errors_carry_path_and_line() {
        let dir = tmp();
        let path = dir.path().join("bad.tsv");
        fs::write(&path, "# comment\na\tr\tb\tnot_a_number\t1\n").unwrap();
        let err = load_scored_triples(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.tsv"), "{msg}");
        assert!(msg.contains(":2:"), "{msg}");

        fs::write(&path, "a\tr\tb\t1.0\t2\n").unwrap();
        let msg = load_scored_triples(&path).unwrap_err().to_string();
        assert!(msg.contains("label"), "{msg}");

        fs::write(&path, "a\tr\tb\t1.0\n").unwrap();
        let msg = load_scored_triples(&path).unwrap_err().to_string();
        assert!(msg.contains("5 tab-separated columns"), "{msg}");

        fs::write(&path, "a\tr\tb\tinf\t1\n").unwrap();
        let msg = load_scored_triples(&path).unwrap_err().to_string();
        assert!(msg.contains("finite"), "{msg}");

        fs::write(&path, "a\tr\tb\t1.0\t1\nc\tr\td\t2.0\t0\na\tr\tb\t3.0\t?\n").unwrap();
        let msg = load_scored_triples(&path).unwrap_err().to_string();
        assert!(msg.contains(":3:"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let dir = tmp();
        let path = dir.path().join("c.tsv");
        fs::write(&path, "# header\n\na\tr\tb\t0.5\t?\n# trailing\n").unwrap();
        let ds = load_scored_triples(&path).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.get(0).label, None);
    }

    #[test]
    fn threshold_file_round_trips_and_sorts() {
        let mut map = ThresholdMap::uniform(0.0);
        map.per_relation.insert("rb".into(), f64::INFINITY);
        map.per_relation.insert("ra".into(), -2.5);
        map.per_relation.insert("rc".into(), f64::NEG_INFINITY);
        let dir = tmp();
        let path = dir.path().join("thr.tsv");
        save_thresholds(&map, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "#default\t0\nra\t-2.5\nrb\tinf\nrc\t-inf\n");
        let back = load_thresholds(&path).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn threshold_file_requires_default_and_rejects_duplicates() {
        let dir = tmp();
        let path = dir.path().join("thr.tsv");
        fs::write(&path, "ra\t1.0\n").unwrap();
        assert!(load_thresholds(&path)
            .unwrap_err()
            .to_string()
            .contains("#default"));
        fs::write(&path, "#default\t0\nra\t1.0\nra\t2.0\n").unwrap();
        assert!(load_thresholds(&path)
            .unwrap_err()
            .to_string()
            .contains("twice"));
        fs::write(&path, "#default\t0\nra\tNaN\n").unwrap();
        assert!(load_thresholds(&path).is_err());
    }

    #[test]
    fn sigmoid_view_preserves_order_and_maps_zero_to_half() {
        let ds = Dataset::new(vec![
            ScoredTriple {
                head: "a".into(),
                relation: "r".into(),
                tail: "b".into(),
                score: 0.0,
                label: Some(true),
            },
            ScoredTriple {
                head: "c".into(),
                relation: "r".into(),
                tail: "d".into(),
                score: -3.0,
                label: None,
            },
        ])
        .unwrap();
        let view = sigmoid_view(&ds);
        assert_eq!(view.len(), 2);
        assert_eq!(view[0], 0.5);
        assert!(view[1] < 0.5);
        assert_relative_eq!(view[1], 1.0 / (1.0 + 3.0f64.exp()), max_relative = 1e-15);
    }

    #[test]
    fn synthetic_generation_is_deterministic_and_labeled() {
        let spec = SyntheticSpec::homogeneous(3, 20, 20, 2.0, -2.0, 1.0, 99);
        let (a, bayes) = generate_synthetic(&spec).unwrap();
        let (b, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 120);
        assert_eq!(a.relation_count(), 3);
        assert!(a.fully_labeled());
        let (pos, neg, unl) = a.label_counts();
        assert_eq!((pos, neg, unl), (60, 60, 0));
        let names: Vec<String> = a.relations().map(|r| r.to_string()).collect();
        assert_eq!(names, ["r0", "r1", "r2"]);
        assert_eq!(bayes.per_relation[0].threshold, 0.0);
        // Standard normal CDF at 2.0; the CDF routine itself carries a few
        // ulp-scale 1e-13 of error, so the comparison leaves headroom.
        assert_relative_eq!(
            bayes.per_relation[0].accuracy,
            0.9772498680518208,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            bayes.expected_accuracy(),
            0.9772498680518208,
            max_relative = 1e-10
        );

        let other = SyntheticSpec::homogeneous(3, 20, 20, 2.0, -2.0, 1.0, 100);
        let (c, _) = generate_synthetic(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_relation_names_pad_to_sorted_order() {
        let spec = SyntheticSpec::homogeneous(12, 1, 1, 1.0, -1.0, 1.0, 1);
        let (ds, _) = generate_synthetic(&spec).unwrap();
        let names: Vec<String> = ds.relations().map(|r| r.to_string()).collect();
        assert_eq!(names[0], "r00");
        assert_eq!(names[11], "r11");
        assert!(names.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn synthetic_class_means_converge() {
        let spec = SyntheticSpec::homogeneous(1, 4000, 4000, 3.0, 1.0, 0.5, 7);
        let (ds, _) = generate_synthetic(&spec).unwrap();
        let mut sums = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for t in ds.triples() {
            let k = usize::from(t.label.unwrap());
            sums[k] += t.score;
            counts[k] += 1;
        }
        let bound = 3.0 * 0.5 / (4000f64).sqrt();
        assert!((sums[1] / counts[1] as f64 - 3.0).abs() < bound);
        assert!((sums[0] / counts[0] as f64 - 1.0).abs() < bound);
    }

    #[test]
    fn synthetic_spec_validation() {
        let mut spec = SyntheticSpec::homogeneous(1, 5, 5, 1.0, -1.0, 1.0, 0);
        spec.relations[0].sigma = 0.0;
        assert!(generate_synthetic(&spec).is_err());

        let empty = SyntheticSpec::homogeneous(2, 0, 0, 1.0, -1.0, 1.0, 0);
        assert!(generate_synthetic(&empty).is_err());

        assert!(generate_synthetic(&SyntheticSpec {
            relations: vec![],
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn overlapping_class_means_are_allowed() {
        // Equal means: no signal, ideal accuracy is exactly chance.
        let spec = SyntheticSpec::homogeneous(1, 10, 10, 1.0, 1.0, 2.0, 3);
        let (_, bayes) = generate_synthetic(&spec).unwrap();
        assert_eq!(bayes.per_relation[0].accuracy, 0.5);
        assert_eq!(bayes.per_relation[0].threshold, 1.0);

        // Swapped means: the gap is read as a magnitude.
        let spec = SyntheticSpec::homogeneous(1, 10, 10, -2.0, 2.0, 1.0, 3);
        let (_, bayes) = generate_synthetic(&spec).unwrap();
        assert_relative_eq!(
            bayes.per_relation[0].accuracy,
            0.9772498680518208,
            max_relative = 1e-10
        );
    }

    #[test]
    fn skewed_relation_mix_is_counted_per_sample() {
        let spec = SyntheticSpec {
            relations: vec![
                RelationSpec {
                    n_pos: 30,
                    n_neg: 10,
                    mu_pos: 1.0,
                    mu_neg: -1.0,
                    sigma: 1.0,
                },
                RelationSpec {
                    n_pos: 0,
                    n_neg: 20,
                    mu_pos: 1.0,
                    mu_neg: -1.0,
                    sigma: 1.0,
                },
            ],
            seed: 5,
        };
        let (ds, bayes) = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.len(), 60);
        let (pos, neg, _) = ds.label_counts();
        assert_eq!((pos, neg), (30, 30));
        // Both relations share the same gap, so the weighted mean equals it.
        assert_relative_eq!(
            bayes.expected_accuracy(),
            bayes.per_relation[0].accuracy,
            max_relative = 1e-12
        );
    }

    fn token() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_]{0,7}".prop_map(|s| s)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn arbitrary_datasets_round_trip(
            rows in prop::collection::vec(
                (token(), token(), token(), -1.0e6f64..1.0e6, prop::option::of(any::<bool>())),
                1..40,
            )
        ) {
            let triples: Vec<ScoredTriple> = rows
                .into_iter()
                .enumerate()
                .map(|(i, (h, r, t, score, label))| ScoredTriple {
                    // Index suffix guarantees key uniqueness.
                    head: format!("{h}{i}"),
                    relation: RelationId::new(r),
                    tail: t,
                    score,
                    label,
                })
                .collect();
            let ds = Dataset::new(triples).unwrap();
            let dir = tmp();
            let path = dir.path().join("prop.tsv");
            save_scored_triples(&ds, &path).unwrap();
            let back = load_scored_triples(&path).unwrap();
            prop_assert_eq!(ds, back);
        }

        #[test]
        fn arbitrary_threshold_maps_round_trip(
            default in -1.0e9f64..1.0e9,
            rows in prop::collection::vec((token(), -1.0e9f64..1.0e9), 0..20),
            specials in prop::collection::vec(prop::sample::select(vec![f64::INFINITY, f64::NEG_INFINITY]), 0..3),
        ) {
            let mut map = ThresholdMap::uniform(default);
            for (i, (name, v)) in rows.into_iter().enumerate() {
                map.per_relation.insert(RelationId::new(format!("{name}{i}")), v);
            }
            for (i, v) in specials.into_iter().enumerate() {
                map.per_relation.insert(RelationId::new(format!("zinf{i}")), v);
            }
            let dir = tmp();
            let path = dir.path().join("thr.tsv");
            save_thresholds(&map, &path).unwrap();
            let back = load_thresholds(&path).unwrap();
            prop_assert_eq!(map, back);
        }
    }

    fn cell(method: &str, budget: usize, n: usize) -> SweepCell {
        SweepCell {
            method: method.into(),
            budget,
            n,
            repeats: 3,
            acc_mean: 0.7,
            acc_sem: Some(0.0),
            f1_mean: 0.5,
            f1_sem: Some(0.0),
            warnings: 0,
        }
    }

    #[test]
    fn report_csv_prints_constant_cells_with_zero_sem() {
        let report = SweepReport {
            cells: vec![cell("local-acc", 10, 500)],
            summaries: Vec::new(),
        };
        let dir = tmp();
        let path = dir.path().join("report.csv");
        write_report_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "strategy,budget,repeats,acc_mean,acc_sem,f1_mean,f1_sem,n,warnings\n\
             local-acc,10,3,0.700000,0.000000,0.500000,0.000000,500,0\n"
        );
    }

    #[test]
    fn report_csv_prints_hand_computed_sem() {
        // Two repeats at 0.6 and 0.8: sd = sqrt(0.02), sem = sd / sqrt(2).
        let (a, b) = (0.6, 0.8);
        let m = (a + b) / 2.0;
        let sd = (((a - m) * (a - m) + (b - m) * (b - m)) / 1.0_f64).sqrt();
        let mut c = cell("actc-lr-rndm", 5, 100);
        c.repeats = 2;
        c.acc_mean = m;
        c.acc_sem = Some(sd / 2.0_f64.sqrt());
        let report = SweepReport {
            cells: vec![c],
            summaries: Vec::new(),
        };
        let dir = tmp();
        let path = dir.path().join("report.csv");
        write_report_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(",0.700000,0.100000,"), "csv was {text:?}");
    }

    #[test]
    fn report_csv_sorts_rows_and_blanks_missing_sem() {
        let mut single = cell("b-method", 1, 9);
        single.repeats = 1;
        single.acc_sem = None;
        single.f1_sem = None;
        let report = SweepReport {
            cells: vec![cell("b-method", 2, 9), single, cell("a-method", 2, 9)],
            summaries: Vec::new(),
        };
        let dir = tmp();
        let path = dir.path().join("report.csv");
        write_report_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("a-method,2,"));
        assert_eq!(lines[2], "b-method,1,1,0.700000,,0.500000,,9,0");
        assert!(lines[3].starts_with("b-method,2,"));
    }

    #[test]
    fn empty_reports_are_refused() {
        let dir = tmp();
        let path = dir.path().join("report.csv");
        let err = write_report_csv(&SweepReport::default(), &path).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        assert!(!path.exists());
    }
}
