//! Command-line front end: generate synthetic data, run the Bayesian
//! cluster-count pipeline, emit plot tables, and score labeled clusterings.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bcvi::bayes::PriorProfile;
use bcvi::clustering::{fcm_best_of_restarts, kmeans_best_of_restarts, RunOptions};
use bcvi::config::{build_config, load_mixture_spec, Algorithm, Overrides};
use bcvi::cvi::IndexKind;
use bcvi::dataset::{clustering_accuracy, generate_mixture, load_csv};
use bcvi::error::Result;
use bcvi::pipeline::{emit_plot_data, read_report, report_json, run_pipeline, write_report};

#[derive(Parser)]
#[command(
    name = "bcvi",
    version,
    about = "Bayesian cluster-count selection",
    long_about = "Clusters data over a range of candidate counts, scores each count with a \
                  validity index, and reports a posterior distribution over the true number \
                  of clusters."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// One-shot dispatch enum; boxing the large Run payload would buy nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic mixture dataset and write it as labeled CSV.
    Generate(GenerateArgs),
    /// Run the full pipeline and emit a JSON report.
    Run(RunArgs),
    /// Turn a JSON report into an error-bar table (k,mean,lo,hi).
    Plot(PlotArgs),
    /// Cluster a labeled CSV at one k and print the best-matching accuracy.
    Accuracy(AccuracyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Mixture spec file (key = value grammar; see the README).
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path; a `label` column records the source component.
    #[arg(long)]
    out: PathBuf,
    /// Override the spec's generation seed.
    #[arg(long, env = "BCVI_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Config file of `key = value` lines; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV dataset to cluster (mutually exclusive with --mixture).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Header column holding integer class labels, for accuracy reporting.
    #[arg(long)]
    label_column: Option<String>,
    /// Mixture spec file to generate data from (mutually exclusive with --csv).
    #[arg(long)]
    mixture: Option<PathBuf>,
    /// Validity index: db, str, wi (kmeans) or xb, kwon2, wp (fcm).
    #[arg(long)]
    index: Option<IndexKind>,
    /// Clustering algorithm; defaults to whichever family the index needs.
    #[arg(long)]
    algorithm: Option<String>,
    /// Largest candidate cluster count K (report covers k = 2..=K).
    #[arg(long)]
    k_max: Option<usize>,
    /// FCM fuzziness exponent m (> 1).
    #[arg(long)]
    fuzziness: Option<f64>,
    /// WP representative exponent; defaults to the fuzziness.
    #[arg(long)]
    gamma: Option<f64>,
    /// Davies-Bouldin dispersion order q.
    #[arg(long)]
    db_q: Option<f64>,
    /// Davies-Bouldin separation order t.
    #[arg(long)]
    db_t: Option<f64>,
    /// Prior family: flat, profile, explicit, or gd.
    #[arg(long)]
    prior: Option<String>,
    /// Weight for the flat prior.
    #[arg(long)]
    alpha: Option<f64>,
    /// Named profile for the profile prior: small, moderate, or large.
    #[arg(long)]
    profile: Option<PriorProfile>,
    /// Profile weight inside the favored band (scaled by sqrt(n)).
    #[arg(long)]
    weight_in: Option<f64>,
    /// Profile weight outside the favored band (scaled by sqrt(n)).
    #[arg(long)]
    weight_out: Option<f64>,
    /// Comma-separated per-k weights (explicit and gd priors).
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Comma-separated per-k beta weights (gd prior).
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Clustering restarts per k.
    #[arg(long)]
    restarts: Option<usize>,
    /// Iteration cap per clustering fit.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Convergence tolerance on centroid displacement.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Seed for restarts and data generation.
    #[arg(long, env = "BCVI_SEED")]
    seed: Option<u64>,
    /// Size of the reported confidence set.
    #[arg(long)]
    top_m: Option<usize>,
    /// Fail unless labeled accuracy reaches 0.75.
    #[arg(long)]
    require_accuracy: bool,
    /// Report path; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// JSON report produced by `run`.
    #[arg(long)]
    report: PathBuf,
    /// Output CSV path; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AccuracyArgs {
    /// Labeled CSV dataset.
    #[arg(long)]
    csv: PathBuf,
    /// Header column holding integer class labels.
    #[arg(long)]
    label_column: String,
    /// Cluster count to fit; defaults to the number of labeled classes.
    #[arg(long)]
    k: Option<usize>,
    /// kmeans (default) or fcm.
    #[arg(long, default_value = "kmeans")]
    algorithm: String,
    /// FCM fuzziness exponent m (> 1).
    #[arg(long, default_value_t = 2.0)]
    fuzziness: f64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, env = "BCVI_SEED", default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Plot(args) => plot(args),
        Command::Accuracy(args) => accuracy(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code())
        }
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut spec = load_mixture_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let dataset = generate_mixture(&spec)?;
    dataset.write_csv(&args.out)?;
    eprintln!(
        "wrote {} points in {} dimensions to {}",
        dataset.n(),
        dataset.p(),
        args.out.display()
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let file_overrides = match &args.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let flag_overrides = Overrides {
        csv: args.csv,
        label_column: args.label_column,
        mixture: args.mixture,
        algorithm: args.algorithm.as_deref().map(str::parse).transpose()?,
        index: args.index,
        k_max: args.k_max,
        fuzziness: args.fuzziness,
        gamma: args.gamma,
        db_q: args.db_q,
        db_t: args.db_t,
        prior: args.prior,
        alpha: args.alpha,
        profile: args.profile,
        weight_in: args.weight_in,
        weight_out: args.weight_out,
        alphas: args.alphas,
        betas: args.betas,
        restarts: args.restarts,
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        seed: args.seed,
        top_m: args.top_m,
        require_accuracy: args.require_accuracy.then_some(true),
    };
    let config = build_config(file_overrides.merge(flag_overrides))?;
    let report = run_pipeline(&config)?;
    match &args.out {
        Some(path) => write_report(&report, path)?,
        None => print!("{}", report_json(&report)),
    }
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let report = read_report(&args.report)?;
    match &args.out {
        Some(path) => emit_plot_data(&report, path)?,
        None => print!("{}", bcvi::pipeline::plot_csv(&report)),
    }
    Ok(())
}

fn accuracy(args: AccuracyArgs) -> Result<()> {
    let dataset = load_csv(&args.csv, Some(&args.label_column))?;
    let labels = dataset.labels().expect("label column was requested");
    let k = args.k.unwrap_or_else(|| dataset.label_count());
    let options = RunOptions {
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        restarts: args.restarts,
        seed: args.seed,
    };
    let assignments = match args.algorithm.parse::<Algorithm>()? {
        Algorithm::KMeans => kmeans_best_of_restarts(dataset.points(), k, &options)?.assignments,
        Algorithm::Fcm => {
            fcm_best_of_restarts(dataset.points(), k, args.fuzziness, &options)?.harden()
        }
    };
    let accuracy = clustering_accuracy(labels, &assignments)?;
    println!("{accuracy}");
    Ok(())
}
