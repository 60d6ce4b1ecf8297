//! threshcal: turn scored candidate triples into include/exclude decisions
//! by calibrating per-relation (or uniform) score thresholds.
//!
//! Exit codes: 0 success, 1 runtime failure (bad files, degenerate data),
//! 2 usage errors (unknown flags or values, reported by the parser).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use threshcal_core::experiments::render_markdown;
use threshcal_core::seeding::derive_seed;
use threshcal_core::{
    calibrate_actc, calibrate_global_opt, calibrate_local_opt, evaluate_thresholds,
    generate_synthetic, load_scored_triples, load_thresholds, run_sweep, save_scored_triples,
    save_thresholds, ActcConfig, AnnotationOracle, AutoExtent, ClassifierConfig, Dataset,
    DensityOrder, GoldSample, KernelSpec, LabelMode, MetricKind, Scope, SelectionStrategy,
    StrategyKind, SweepConfig, SyntheticSpec, ThresholdMap, DEFAULT_GRID_STEPS,
};

#[derive(Parser)]
#[command(
    name = "threshcal",
    version,
    about = "Calibrate decision thresholds for scored knowledge-graph triples",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate thresholds from a labeled calibration file.
    Calibrate(CalibrateArgs),
    /// Score a labeled test file against a threshold file.
    Evaluate(EvaluateArgs),
    /// Run a full method-by-budget experiment sweep.
    Sweep(SweepArgs),
    /// Generate a synthetic calibration/test TSV pair.
    Synth(SynthArgs),
    /// Print dataset statistics for a triple file.
    Inspect(InspectArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Budgeted annotation plus classifier auto-labeling.
    Actc,
    /// Gold-only per-relation search maximizing accuracy.
    LocalAcc,
    /// Gold-only per-relation search maximizing F1.
    LocalF1,
    /// Grid search of one pooled F1 objective in sigmoid space.
    GlobalF1,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    /// One threshold per relation.
    Relation,
    /// A single shared threshold.
    Uniform,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Acc,
    F1,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AutoArg {
    /// Auto-label only up to the minimum set size.
    Topup,
    /// Auto-label the whole pool.
    All,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SelectArg {
    Random,
    Density,
    Uncertainty,
    Dwu,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DensityOrderArg {
    /// Largest sum of squared score gaps first (the published rule).
    Max,
    /// Smallest first.
    Min,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    Lr,
    Gp,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Rbf,
    Matern,
    Rq,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LabelsArg {
    Hard,
    Soft,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// Print a Markdown summary table to stdout as well.
    Md,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Labeled calibration TSV: head, relation, tail, score, label (1/0/?).
    input: PathBuf,
    /// Threshold file destination.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Actc)]
    method: MethodArg,
    /// Annotation budget; defaults to every label in the file.
    #[arg(long)]
    budget: Option<usize>,
    /// Minimum decision-set size per threshold (actc only).
    #[arg(long, default_value_t = threshcal_core::experiments::DEFAULT_MIN_SET_SIZE)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ScopeArg::Relation)]
    scope: ScopeArg,
    /// Metric the threshold search maximizes (actc only; local methods
    /// carry theirs in the name).
    #[arg(long, value_enum, default_value_t = MetricArg::Acc)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = AutoArg::Topup)]
    auto: AutoArg,
    /// Grid resolution for global-f1.
    #[arg(long, default_value_t = DEFAULT_GRID_STEPS)]
    grid_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SelectArg::Random)]
    select: SelectArg,
    #[arg(long, value_enum, default_value_t = DensityOrderArg::Max)]
    density_order: DensityOrderArg,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Lr)]
    classifier: ClassifierArg,
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    kernel: KernelArg,
    /// Kernel length scale; defaults to 10 for rbf and 0.1 otherwise.
    #[arg(long)]
    length_scale: Option<f64>,
    /// Matern smoothness; 0.5, 1.5, and 2.5 use closed forms.
    #[arg(long, default_value_t = 1.5)]
    nu: f64,
    #[arg(long, value_enum, default_value_t = LabelsArg::Hard)]
    labels: LabelsArg,
    /// Inverse regularization strength of the logistic classifier.
    #[arg(long, default_value_t = 100.0)]
    inv_reg_c: f64,
    /// Replay the literal line-by-line gold scan instead of the
    /// decision-set search. Kept for comparison runs.
    #[arg(long)]
    strict_pseudocode: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Threshold file produced by `calibrate`.
    thresholds: PathBuf,
    /// Labeled test TSV.
    test: PathBuf,
    /// Also write the metrics as a one-row CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat `key = value` config: budgets, repeats, methods, n_values,
    /// master_seed.
    #[arg(long)]
    config: PathBuf,
    /// Labeled calibration TSV.
    #[arg(long)]
    calib: PathBuf,
    /// Labeled test TSV.
    #[arg(long)]
    test: PathBuf,
    /// Report CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Extra stdout rendering of the per-method summary.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    relations: usize,
    /// Positives per relation.
    #[arg(long, default_value_t = 50)]
    pos: usize,
    /// Negatives per relation.
    #[arg(long, default_value_t = 50)]
    neg: usize,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    mu_pos: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    mu_neg: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Calibration-split destination.
    #[arg(long)]
    calib_out: PathBuf,
    /// Test-split destination.
    #[arg(long)]
    test_out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    /// Triple TSV to summarize.
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Inspect(args) => cmd_inspect(args),
    }
}

fn load_dataset(path: &PathBuf) -> Result<Dataset> {
    load_scored_triples(path).with_context(|| format!("reading {}", path.display()))
}

/// Gold annotations for the gold-only methods: the budgeted random draw
/// the experiment harness uses, or every label when no budget is given.
fn gold_sample(dataset: &Dataset, budget: Option<usize>, seed: u64) -> Result<Vec<GoldSample>> {
    let budget = budget.unwrap_or(dataset.len());
    let mut oracle = AnnotationOracle::from_dataset(dataset, budget);
    let mut gold = Vec::new();
    for i in SelectionStrategy::random(seed).select(dataset, budget) {
        let t = dataset.get(i);
        if let Some(positive) = oracle.reveal(&t.head, t.relation.as_str(), &t.tail)? {
            gold.push(GoldSample {
                relation: t.relation.clone(),
                score: t.score,
                positive,
            });
        }
    }
    if gold.is_empty() {
        bail!("no labeled triples fell inside the annotation budget");
    }
    Ok(gold)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let dataset = load_dataset(&args.input)?;
    let scope = match args.scope {
        ScopeArg::Relation => Scope::PerRelation,
        ScopeArg::Uniform => Scope::Uniform,
    };
    let metric = match args.metric {
        MetricArg::Acc => MetricKind::Accuracy,
        MetricArg::F1 => MetricKind::F1,
    };

    let thresholds: ThresholdMap = match args.method {
        MethodArg::Actc => {
            let budget = args.budget.unwrap_or(dataset.len());
            let strategy = SelectionStrategy {
                kind: match args.select {
                    SelectArg::Random => StrategyKind::Random,
                    SelectArg::Density => StrategyKind::Density,
                    SelectArg::Uncertainty => StrategyKind::Uncertainty,
                    SelectArg::Dwu => StrategyKind::DensityWeightedUncertainty,
                },
                seed: args.seed,
                density_order: match args.density_order {
                    DensityOrderArg::Max => DensityOrder::MostDense,
                    DensityOrderArg::Min => DensityOrder::LeastDense,
                },
            };
            let mut cfg = ActcConfig::new(strategy, budget);
            cfg.min_set_size = args.n;
            cfg.classifier = classifier_config(&args)?;
            cfg.label_mode = match args.labels {
                LabelsArg::Hard => LabelMode::Hard,
                LabelsArg::Soft => LabelMode::Soft,
            };
            cfg.metric = metric;
            cfg.scope = scope;
            cfg.auto_extent = match args.auto {
                AutoArg::Topup => AutoExtent::TopUp,
                AutoArg::All => AutoExtent::All,
            };
            cfg.seed = args.seed;
            cfg.strict_gold_scan = args.strict_pseudocode;

            let mut oracle = AnnotationOracle::from_dataset(&dataset, budget);
            let outcome = calibrate_actc(&dataset, &mut oracle, &cfg)?;
            let w = outcome.warnings;
            if w.total() > 0 {
                eprintln!(
                    "warning: {} degraded decision sets (global fallback {}, no auto-labeling {}, short pool {}, defaulted {})",
                    w.total(), w.global_fallback, w.skipped_auto, w.short_pool, w.defaulted
                );
            }
            outcome.thresholds
        }
        MethodArg::LocalAcc | MethodArg::LocalF1 => {
            let gold = gold_sample(&dataset, args.budget, args.seed)?;
            let metric = if args.method == MethodArg::LocalAcc {
                MetricKind::Accuracy
            } else {
                MetricKind::F1
            };
            calibrate_local_opt(&gold, metric, scope)
        }
        MethodArg::GlobalF1 => {
            let gold = gold_sample(&dataset, args.budget, args.seed)?;
            calibrate_global_opt(&gold, args.grid_steps)?
        }
    };

    save_thresholds(&thresholds, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} relation thresholds (default {}) to {}",
        thresholds.per_relation.len(),
        thresholds.default,
        args.out.display()
    );
    Ok(())
}

fn classifier_config(args: &CalibrateArgs) -> Result<ClassifierConfig> {
    match args.classifier {
        ClassifierArg::Lr => Ok(ClassifierConfig::Logistic {
            inv_reg_c: args.inv_reg_c,
        }),
        ClassifierArg::Gp => {
            let kernel = match args.kernel {
                KernelArg::Rbf => KernelSpec::rbf(args.length_scale.unwrap_or(10.0)),
                KernelArg::Matern => KernelSpec::matern(args.length_scale.unwrap_or(0.1), args.nu),
                KernelArg::Rq => {
                    KernelSpec::rational_quadratic(args.length_scale.unwrap_or(0.1), 1.0)
                }
            };
            kernel.validate()?;
            Ok(ClassifierConfig::GaussianProcess { kernel })
        }
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let map = load_thresholds(&args.thresholds)
        .with_context(|| format!("reading {}", args.thresholds.display()))?;
    let test = load_dataset(&args.test)?;
    let metrics = evaluate_thresholds(&map, &test)?;
    println!(
        "Acc {:.1} F1 {:.1}",
        100.0 * metrics.accuracy,
        100.0 * metrics.f1
    );
    if let Some(csv) = &args.csv {
        let body = format!("acc,f1\n{:.6},{:.6}\n", metrics.accuracy, metrics.f1);
        std::fs::write(csv, body).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    if let Ok(raw) = std::env::var("THRESHCAL_THREADS") {
        let threads: usize = raw
            .parse()
            .ok()
            .filter(|&t| t >= 1)
            .with_context(|| format!("THRESHCAL_THREADS {raw:?} is not a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = SweepConfig::parse(&text)?;
    let calib = load_dataset(&args.calib)?;
    let test = load_dataset(&args.test)?;
    let report = run_sweep(&cfg, &calib, &test)?;
    threshcal_core::write_report_csv(&report, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} cells to {}",
        report.cells.len(),
        args.out.display()
    );
    if args.format == Some(FormatArg::Md) {
        print!("{}", render_markdown(&report));
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    for (tag, path) in [
        (&b"calib"[..], &args.calib_out),
        (&b"test"[..], &args.test_out),
    ] {
        let spec = SyntheticSpec::homogeneous(
            args.relations,
            args.pos,
            args.neg,
            args.mu_pos,
            args.mu_neg,
            args.sigma,
            derive_seed(args.seed, &[tag]),
        );
        let (dataset, bayes) = generate_synthetic(&spec)?;
        save_scored_triples(&dataset, path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!(
            "wrote {} triples to {} (ideal accuracy {:.3})",
            dataset.len(),
            path.display(),
            bayes.expected_accuracy()
        );
    }
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let dataset = load_dataset(&args.input)?;
    let (pos, neg, unlabeled) = dataset.label_counts();
    let mut out = String::new();
    writeln!(out, "triples: {}", dataset.len()).expect("write to string");
    writeln!(out, "relations: {}", dataset.relation_count()).expect("write to string");
    writeln!(
        out,
        "labeled: {} ({} positive, {} negative)",
        pos + neg,
        pos,
        neg
    )
    .expect("write to string");
    writeln!(out, "unlabeled: {unlabeled}").expect("write to string");
    writeln!(out, "positive:negative ratio: {}", ratio(pos, neg)).expect("write to string");
    print!("{out}");
    Ok(())
}

fn ratio(pos: usize, neg: usize) -> String {
    if pos == 0 && neg == 0 {
        return "0:0".into();
    }
    let g = gcd(pos, neg);
    format!("{}:{}", pos / g, neg / g)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
