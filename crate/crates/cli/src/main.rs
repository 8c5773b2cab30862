//! Command-line surface of the anomaly-detection toolkit: simulate data,
//! preprocess CSVs, train classifiers, run the hypothesis tests, estimate
//! the signal strength, interpret the classifier, and run power studies.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 data error,
//! 4 numerical failure.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use sigsleuth::calibrate::{
    asymptotic_null, resample_null, resample_null_supervised, slow_permutation, NullMethod,
    NullSpec, SlowPermOptions, TestReport,
};
use sigsleuth::data::{
    load_csv, split, split_background, write_csv, JetFilter, PreprocessRecipe, SplitSpec,
};
use sigsleuth::forest::{fit, FeaturesPerSplit, Forest, ForestConfig};
use sigsleuth::rng::derive_seed;
use sigsleuth::simlab::{
    default_background_mixture, default_signal_mixture, distort_signal, make_experimental,
    power_rows_to_csv, power_study, ridge_toy_pair, sample_mixture, ExperimentDesign,
    MixtureModel, PowerRow, TestPlan,
};
use sigsleuth::strength::{bootstrap_lambda, estimate_lambda_at};
use sigsleuth::subspace::{
    active_subspace, bootstrap_subspace, estimate_subspace, local_linear_gradients,
    logit_surface, SmootherConfig,
};
use sigsleuth::teststats::Statistic;
use sigsleuth::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sigsleuth",
    about = "Classifier-based detection of collective anomalies in labeled-background data",
    version
)]
struct Cli {
    /// Base seed; every random choice in a run derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores; SIGSLEUTH_WORKERS overrides).
    /// Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Omit timestamps (and runtime columns) for byte-identical reruns.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ForestArgs {
    /// Trees in the forest.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Minimum rows per leaf.
    #[arg(long, default_value_t = 5)]
    min_leaf: usize,
    /// Depth limit; 0 grows to purity.
    #[arg(long, default_value_t = 0)]
    max_depth: usize,
    /// Features tried per split: "sqrt" or a count.
    #[arg(long, default_value = "sqrt")]
    features: String,
}

impl ForestArgs {
    fn config(&self, seed: u64) -> Result<ForestConfig> {
        let features_per_split = if self.features == "sqrt" {
            FeaturesPerSplit::Sqrt
        } else {
            let k: usize = self
                .features
                .parse()
                .map_err(|_| Error::Config(format!("--features '{}' is not sqrt or a count", self.features)))?;
            FeaturesPerSplit::Fixed(k)
        };
        Ok(ForestConfig {
            n_trees: self.trees,
            max_depth: (self.max_depth > 0).then_some(self.max_depth),
            min_leaf: self.min_leaf,
            features_per_split,
            seed,
        })
    }
}

#[derive(Args, Clone)]
struct SplitArgs {
    /// Background rows used for training (default: half).
    #[arg(long)]
    train_background: Option<usize>,
    /// Background rows held out (default: the matching test size).
    #[arg(long)]
    test_background: Option<usize>,
    /// Experimental rows used for training (default: half).
    #[arg(long)]
    train_experimental: Option<usize>,
    /// Experimental rows held out; must equal --test-background.
    #[arg(long)]
    test_experimental: Option<usize>,
}

impl SplitArgs {
    fn resolve(&self, m_b: usize, n: usize, seed: u64) -> SplitSpec {
        let defaults = SplitSpec::balanced_halves(m_b, n, seed);
        SplitSpec {
            train_background: self.train_background.unwrap_or(defaults.train_background),
            test_background: self.test_background.unwrap_or(defaults.test_background),
            train_experimental: self.train_experimental.unwrap_or(defaults.train_experimental),
            test_experimental: self.test_experimental.unwrap_or(defaults.test_experimental),
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate background/experimental (and optionally signal) CSVs from
    /// Gaussian mixtures or the 2-D ridge toy.
    Simulate {
        #[arg(long)]
        out_dir: PathBuf,
        /// Background sample size.
        #[arg(long, default_value_t = 2000)]
        background: usize,
        /// Experimental sample size.
        #[arg(long, default_value_t = 2000)]
        experimental: usize,
        /// Signal strength of the experimental mixture.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Also write a pure signal sample of this size.
        #[arg(long, default_value_t = 0)]
        signal: usize,
        /// Mixture JSON for the background (default: built-in 5-D mixture).
        #[arg(long)]
        background_model: Option<PathBuf>,
        /// Mixture JSON for the signal (default: built-in 5-D mixture).
        #[arg(long)]
        signal_model: Option<PathBuf>,
        /// Built-in toy dataset instead of mixtures ("ridges": 2-D signal
        /// on lines parallel to the anti-diagonal).
        #[arg(long)]
        toy: Option<String>,
        /// Distort the experimental signal rows: "column:factor".
        #[arg(long)]
        distort: Option<String>,
        /// Keep provenance labels in the experimental CSV.
        #[arg(long)]
        write_labels: bool,
    },
    /// Apply log transforms, azimuth rotation and column drops to a CSV.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated columns to log-transform.
        #[arg(long, value_delimiter = ',')]
        log_columns: Vec<String>,
        /// Comma-separated columns to drop.
        #[arg(long, value_delimiter = ',')]
        drop_columns: Vec<String>,
        /// Rotate every *_phi column relative to this column, then drop it.
        #[arg(long)]
        phi_anchor: Option<String>,
        /// Keep only rows where a column equals a value: "column=value".
        #[arg(long)]
        jet_filter: Option<String>,
    },
    /// Train a forest on two CSVs (class 0, class 1) and save it.
    Train {
        #[arg(long)]
        class0: PathBuf,
        #[arg(long)]
        class1: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
    },
    /// Run one hypothesis test and write its report.
    Test {
        /// md-lrt | md-score | mi-lrt | mi-auc | mi-mce
        #[arg(long)]
        stat: String,
        /// asymptotic | bootstrap | permutation | slow-permutation
        #[arg(long)]
        method: String,
        #[arg(long)]
        background: PathBuf,
        #[arg(long)]
        experimental: PathBuf,
        /// Signal training sample; required by the md-* statistics.
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        cycles: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// Trees per re-training in slow permutation.
        #[arg(long, default_value_t = 50)]
        slow_trees: usize,
        /// Re-training budget: refuse if (cycles+1)·trees exceeds this.
        #[arg(long, default_value_t = 250_000)]
        max_retrain_trees: u64,
        /// Run past the re-training budget.
        #[arg(long)]
        force: bool,
    },
    /// Estimate the signal strength with bootstrap uncertainty intervals.
    EstimateStrength {
        #[arg(long)]
        background: PathBuf,
        #[arg(long)]
        experimental: PathBuf,
        /// Left edge of the boundary window (T).
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        /// Histogram bin width (b); (1-T)/b must be whole.
        #[arg(long, default_value_t = 0.01)]
        bin_width: f64,
        /// Bootstrap cycles behind the resampling intervals.
        #[arg(long, default_value_t = 100)]
        bootstrap: usize,
        /// "all" for bootstrap + GLM intervals, "none" for GLM only.
        #[arg(long, default_value = "all")]
        intervals: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Interpret a trained classifier: mean standardized logit gradient and
    /// leading eigenvectors, with bootstrap bands.
    ActiveSubspace {
        #[arg(long)]
        background: PathBuf,
        #[arg(long)]
        experimental: PathBuf,
        /// Reuse a trained forest; the input tables then serve as held-out
        /// evaluation data and no split/training happens.
        #[arg(long)]
        forest_file: Option<PathBuf>,
        /// Smoothing parameter h; the kernel sd along axis j is sd_j / h.
        #[arg(long, default_value_t = 0.5)]
        smoothing: f64,
        /// Bootstrap cycles for uncertainty bands; 0 skips the bootstrap.
        #[arg(long, default_value_t = 500)]
        bootstrap: usize,
        /// Emit only the leading k eigenvectors (0 = all).
        #[arg(long, default_value_t = 0)]
        eigenvectors: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Rejection-rate study over replicated simulations.
    PowerStudy {
        /// Comma-separated signal strengths.
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2")]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        background_size: usize,
        #[arg(long, default_value_t = 1000)]
        signal_size: usize,
        #[arg(long, default_value_t = 2000)]
        experimental_size: usize,
        #[arg(long, default_value_t = 50)]
        replicates: usize,
        /// Tests to run: "stat:method" pairs, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "mi-auc:permutation")]
        stats: Vec<String>,
        #[arg(long, default_value_t = 200)]
        cycles: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        background_model: Option<PathBuf>,
        #[arg(long)]
        signal_model: Option<PathBuf>,
        /// Distort the experimental signal rows: "column:factor".
        #[arg(long)]
        distort: Option<String>,
        /// Output path; format from extension (.csv or .json).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .or_else(|| std::env::var("SIGSLEUTH_WORKERS").ok().and_then(|v| v.parse().ok()));
    if let Some(w) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::Config(_) => 2,
            Error::Numerical(_) | Error::Training(_) | Error::Inconclusive(_) => 4,
            _ => 3,
        });
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate {
            out_dir,
            background,
            experimental,
            lambda,
            signal,
            background_model,
            signal_model,
            toy,
            distort,
            write_labels,
        } => cmd_simulate(
            cli,
            out_dir,
            *background,
            *experimental,
            *lambda,
            *signal,
            background_model.as_deref(),
            signal_model.as_deref(),
            toy.as_deref(),
            distort.as_deref(),
            *write_labels,
        ),
        Command::Preprocess { input, output, log_columns, drop_columns, phi_anchor, jet_filter } => {
            let recipe = PreprocessRecipe {
                jet_filter: jet_filter.as_deref().map(parse_jet_filter).transpose()?,
                drop_columns: drop_columns.clone(),
                log_columns: log_columns.clone(),
                phi_rotation_anchor: phi_anchor.clone(),
            };
            let table = load_csv(input, &recipe)?;
            let table = sigsleuth::data::preprocess(&table, &recipe)?;
            write_csv(&table, output)?;
            println!("wrote {} rows x {} columns to {}", table.n_rows(), table.n_cols(), output.display());
            Ok(())
        }
        Command::Train { class0, class1, out, forest } => {
            let recipe = PreprocessRecipe::default();
            let c0 = load_csv(class0, &recipe)?;
            let c1 = load_csv(class1, &recipe)?;
            let f = fit(&c0, &c1, &forest.config(derive_seed(cli.seed, "train", 0))?)?;
            f.save(out)?;
            println!("trained forest ({} trees, prior {:.4}) -> {}", f.n_trees(), f.prior(), out.display());
            Ok(())
        }
        Command::Test {
            stat,
            method,
            background,
            experimental,
            signal,
            cycles,
            alpha,
            out,
            forest,
            split: split_args,
            slow_trees,
            max_retrain_trees,
            force,
        } => cmd_test(
            cli,
            stat,
            method,
            background,
            experimental,
            signal.as_deref(),
            *cycles,
            *alpha,
            out,
            forest,
            split_args,
            *slow_trees,
            *max_retrain_trees,
            *force,
        ),
        Command::EstimateStrength {
            background,
            experimental,
            threshold,
            bin_width,
            bootstrap,
            intervals,
            alpha,
            out,
            forest,
            split: split_args,
        } => {
            let recipe = PreprocessRecipe::default();
            let x = load_csv(background, &recipe)?;
            let w = load_csv(experimental, &recipe)?;
            let split_spec =
                split_args.resolve(x.n_rows(), w.n_rows(), derive_seed(cli.seed, "split", 0));
            let cfg = forest.config(derive_seed(cli.seed, "forest", 0))?;
            let estimate = match intervals.as_str() {
                "none" => estimate_lambda_at(&x, &w, &cfg, &split_spec, *threshold, *bin_width, *alpha)?,
                "all" => bootstrap_lambda(
                    &x,
                    &w,
                    &cfg,
                    &split_spec,
                    *threshold,
                    *bin_width,
                    *bootstrap,
                    *alpha,
                    derive_seed(cli.seed, "strength-bootstrap", 0),
                )?,
                other => {
                    return Err(Error::Config(format!("--intervals must be all or none, got '{other}'")))
                }
            };
            let mut json = estimate.to_json();
            attach_timestamp(&mut json, cli.no_timestamp);
            write_json(&json, out)?;
            println!(
                "lambda_hat = {:.4} (raw {:.4}) -> {}",
                estimate.lambda_hat,
                estimate.lambda_hat_raw,
                out.display()
            );
            Ok(())
        }
        Command::ActiveSubspace {
            background,
            experimental,
            forest_file,
            smoothing,
            bootstrap,
            eigenvectors,
            alpha,
            out,
            forest,
            split: split_args,
        } => cmd_active_subspace(
            cli,
            background,
            experimental,
            forest_file.as_deref(),
            *smoothing,
            *bootstrap,
            *eigenvectors,
            *alpha,
            out,
            forest,
            split_args,
        ),
        Command::PowerStudy {
            lambdas,
            background_size,
            signal_size,
            experimental_size,
            replicates,
            stats,
            cycles,
            alpha,
            background_model,
            signal_model,
            distort,
            out,
            forest,
        } => {
            let bg = load_mixture_or(background_model.as_deref(), default_background_mixture)?;
            let sig = load_mixture_or(signal_model.as_deref(), default_signal_mixture)?;
            let plans: Vec<TestPlan> = stats
                .iter()
                .map(|s| parse_plan(s, *cycles))
                .collect::<Result<_>>()?;
            let distortion = distort.as_deref().map(parse_distortion).transpose()?;
            let mut rows: Vec<PowerRow> = Vec::new();
            for (i, lambda) in lambdas.iter().enumerate() {
                let design = ExperimentDesign {
                    lambda: *lambda,
                    background_size: *background_size,
                    signal_size: *signal_size,
                    experimental_size: *experimental_size,
                    replicates: *replicates,
                    seed: derive_seed(cli.seed, "power-lambda", i as u64),
                    alpha: *alpha,
                    distortion: distortion.clone(),
                };
                rows.extend(power_study(
                    &design,
                    &bg,
                    &sig,
                    &plans,
                    &forest.config(0)?,
                    &SlowPermOptions::default(),
                )?);
            }
            if cli.no_timestamp {
                for r in &mut rows {
                    r.mean_runtime_ms = 0.0;
                }
            }
            let is_json = out.extension().is_some_and(|e| e == "json");
            if is_json {
                write_json(&serde_json::to_value(&rows)?, out)?;
            } else {
                std::fs::write(out, power_rows_to_csv(&rows))?;
            }
            println!("wrote {} power rows to {}", rows.len(), out.display());
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cli: &Cli,
    out_dir: &Path,
    background: usize,
    experimental: usize,
    lambda: f64,
    signal: usize,
    background_model: Option<&Path>,
    signal_model: Option<&Path>,
    toy: Option<&str>,
    distort: Option<&str>,
    write_labels: bool,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let (bg_table, mut exp_table, sig_table) = match toy {
        Some("ridges") => {
            let (bg, exp) =
                ridge_toy_pair(background, experimental, lambda, derive_seed(cli.seed, "toy", 0))?;
            let sig = (signal > 0)
                .then(|| {
                    ridge_toy_pair(1, signal, 1.0, derive_seed(cli.seed, "toy-signal", 0))
                        .map(|(_, s)| s)
                })
                .transpose()?;
            (bg, exp, sig)
        }
        Some(other) => return Err(Error::Config(format!("unknown toy '{other}'"))),
        None => {
            let bg_model = load_mixture_or(background_model, default_background_mixture)?;
            let sig_model = load_mixture_or(signal_model, default_signal_mixture)?;
            let bg = sample_mixture(&bg_model, background, derive_seed(cli.seed, "sim-bg", 0))?;
            let exp = make_experimental(
                &bg_model,
                &sig_model,
                experimental,
                lambda,
                derive_seed(cli.seed, "sim-exp", 0),
            )?;
            let sig = (signal > 0)
                .then(|| sample_mixture(&sig_model, signal, derive_seed(cli.seed, "sim-sig", 0)))
                .transpose()?;
            (bg, exp, sig)
        }
    };
    if let Some(spec) = distort {
        let (column, factor) = parse_distortion(spec)?;
        exp_table = distort_signal(&exp_table, &column, factor)?;
    }
    if !write_labels {
        exp_table = exp_table.without_labels();
    }
    write_csv(&bg_table, out_dir.join("background.csv"))?;
    write_csv(&exp_table, out_dir.join("experimental.csv"))?;
    if let Some(sig) = sig_table {
        write_csv(&sig.without_labels(), out_dir.join("signal.csv"))?;
    }
    println!(
        "wrote background ({background}) and experimental ({experimental}, lambda={lambda}) to {}",
        out_dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_test(
    cli: &Cli,
    stat: &str,
    method: &str,
    background: &Path,
    experimental: &Path,
    signal: Option<&Path>,
    cycles: usize,
    alpha: f64,
    out: &Path,
    forest_args: &ForestArgs,
    split_args: &SplitArgs,
    slow_trees: usize,
    max_retrain_trees: u64,
    force: bool,
) -> Result<()> {
    let stat: Statistic = stat.parse()?;
    let method: NullMethod = method.parse()?;
    let recipe = PreprocessRecipe::default();
    let x = load_csv(background, &recipe)?;
    let w = load_csv(experimental, &recipe)?;
    let spec = NullSpec::new(method, cycles, derive_seed(cli.seed, "null", 0), alpha)?;

    let mut report: TestReport = if stat.is_model_independent() {
        match method {
            NullMethod::SlowPermutation => {
                let cfg = ForestConfig {
                    n_trees: slow_trees,
                    ..forest_args.config(derive_seed(cli.seed, "forest", 0))?
                };
                let opts = SlowPermOptions { budget_trees: max_retrain_trees, force };
                slow_permutation(stat, &x, &w, &cfg, &spec, &opts)?
            }
            _ => {
                let split_spec =
                    split_args.resolve(x.n_rows(), w.n_rows(), derive_seed(cli.seed, "split", 0));
                let parts = split(&x, &w, &split_spec)?;
                let cfg = forest_args.config(derive_seed(cli.seed, "forest", 0))?;
                let forest = fit(&parts.train_background, &parts.train_experimental, &cfg)?;
                match method {
                    NullMethod::Asymptotic => asymptotic_null(
                        stat,
                        &parts.test_background,
                        &parts.test_experimental,
                        &forest,
                        &spec,
                    )?,
                    _ => resample_null(
                        stat,
                        &parts.test_background,
                        &parts.test_experimental,
                        &forest,
                        &spec,
                    )?,
                }
            }
        }
    } else {
        let signal_path = signal.ok_or_else(|| {
            Error::Config(format!("{} requires --signal with a signal training CSV", stat.as_str()))
        })?;
        if method == NullMethod::Asymptotic || method == NullMethod::SlowPermutation {
            return Err(Error::Config(format!(
                "supervised statistics support bootstrap/permutation nulls, not {}",
                method.as_str()
            )));
        }
        let y = load_csv(signal_path, &recipe)?;
        // Background splits into a training part and the held-out part that
        // anchors the null resampling; the experimental sample is not split.
        let m_b = x.n_rows();
        let m1 = split_args.train_background.unwrap_or(m_b / 2);
        let m2 = split_args.test_background.unwrap_or(m_b - m1);
        let (x1, x2) = split_background(&x, m1, m2, derive_seed(cli.seed, "split", 0))?;
        let cfg = forest_args.config(derive_seed(cli.seed, "forest", 0))?;
        let forest = fit(&x1, &y, &cfg)?;
        resample_null_supervised(stat, &x2, &w, &forest, &spec)?
    };

    if !cli.no_timestamp {
        report.timestamp = Some(rfc3339_now());
    }
    write_json(&report.to_json(), out)?;
    println!(
        "{} / {}: statistic {:.6}, p = {:.6}, reject = {} -> {}",
        stat.as_str(),
        method.as_str(),
        report.statistic.value,
        report.p_value,
        report.reject,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_active_subspace(
    cli: &Cli,
    background: &Path,
    experimental: &Path,
    forest_file: Option<&Path>,
    smoothing: f64,
    bootstrap: usize,
    eigenvectors: usize,
    alpha: f64,
    out: &Path,
    forest_args: &ForestArgs,
    split_args: &SplitArgs,
) -> Result<()> {
    let recipe = PreprocessRecipe::default();
    let x = load_csv(background, &recipe)?;
    let w = load_csv(experimental, &recipe)?;
    let scfg = SmootherConfig { bandwidth: smoothing, ..Default::default() };

    let mut report = match forest_file {
        Some(path) => {
            // Pre-trained classifier: the inputs act as held-out evaluation
            // data and no further split or bootstrap happens.
            let forest = Forest::load(path)?;
            let eval = x.concat(&w)?;
            let logits = logit_surface(&forest, &eval, scfg.epsilon)?;
            let field = local_linear_gradients(&eval, &logits, &scfg)?;
            active_subspace(&field, eval.names())?
        }
        None => {
            let split_spec =
                split_args.resolve(x.n_rows(), w.n_rows(), derive_seed(cli.seed, "split", 0));
            let cfg = forest_args.config(derive_seed(cli.seed, "forest", 0))?;
            if bootstrap == 0 {
                estimate_subspace(&x, &w, &cfg, &scfg, &split_spec)?
            } else {
                bootstrap_subspace(
                    &x,
                    &w,
                    &cfg,
                    &scfg,
                    &split_spec,
                    bootstrap,
                    alpha,
                    derive_seed(cli.seed, "subspace-bootstrap", 0),
                )?
            }
        }
    };

    if eigenvectors > 0 {
        report.eigenvectors.truncate(eigenvectors);
        if let Some(b) = report.bootstrap.as_mut() {
            b.eigenvector_bands.truncate(eigenvectors);
            b.eigenvector_draws.truncate(eigenvectors);
        }
    }
    let mut json = report.to_json();
    attach_timestamp(&mut json, cli.no_timestamp);
    write_json(&json, out)?;
    println!(
        "leading eigenvalue {:.4} -> {}",
        report.eigenvalues.first().copied().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}

fn parse_jet_filter(spec: &str) -> Result<JetFilter> {
    let (column, value) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--jet-filter '{spec}' is not column=value")))?;
    let equals: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("jet filter value '{value}' is not a number")))?;
    Ok(JetFilter { column: column.to_string(), equals })
}

fn parse_distortion(spec: &str) -> Result<(String, f64)> {
    let (column, factor) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("--distort '{spec}' is not column:factor")))?;
    let factor: f64 = factor
        .parse()
        .map_err(|_| Error::Config(format!("distortion factor '{factor}' is not a number")))?;
    Ok((column.to_string(), factor))
}

fn parse_plan(spec: &str, cycles: usize) -> Result<TestPlan> {
    let (stat, method) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("--stats entry '{spec}' is not stat:method")))?;
    Ok(TestPlan { statistic: stat.parse()?, method: method.parse()?, cycles })
}

fn load_mixture_or(path: Option<&Path>, default: fn() -> MixtureModel) -> Result<MixtureModel> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            MixtureModel::from_json(&serde_json::from_str(&text)?)
        }
        None => Ok(default()),
    }
}

fn attach_timestamp(json: &mut serde_json::Value, suppress: bool) {
    if !suppress {
        if let Some(map) = json.as_object_mut() {
            map.insert("timestamp".into(), serde_json::Value::String(rfc3339_now()));
        }
    }
}

fn write_json(value: &serde_json::Value, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// RFC 3339 UTC timestamp without external dependencies.
fn rfc3339_now() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let days = secs / 86_400;
    let rem = secs % 86_400;
    // civil-from-days (Gregorian), valid for the post-1970 range
    let z = days + 719_468;
    let era = z / 146_097;
    let doe = z % 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + u64::from(month <= 2);
    format!(
        "{year:04}-{month:02}-{day:02}T{:02}:{:02}:{:02}Z",
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}
