//! End-to-end driver: data in, clusterings over the candidate range, index
//! series, posterior update, ranked report out.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayes::{
    bcvi_rank, compute_ratios, dirichlet_posterior, gd_posterior, BcviResult, DirichletPrior,
    GdPrior,
};
use crate::clustering::{
    fcm_best_of_restarts, kmeans_best_of_restarts, HardClustering, RunOptions, SoftClustering,
};
use crate::config::{Algorithm, DataSource, PipelineConfig, PriorConfig};
use crate::cvi::{CviSeries, IndexKind};
use crate::cvi_hard::{db_series, str_series, wi_series};
use crate::cvi_soft::{kwon2_series, wp_series, xb_series};
use crate::dataset::{clustering_accuracy, generate_mixture, load_csv, Dataset};
use crate::error::{Error, Result};

/// Prior family and parameters as they entered the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSummary {
    /// "dirichlet" or "gd".
    pub kind: String,
    /// Per-k weights: k = 2..=K for Dirichlet, k = 2..=K-1 for GD.
    pub alphas: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<BTreeMap<usize, f64>>,
}

/// Everything about the run that is not a per-k number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dataset: String,
    pub n: usize,
    pub p: usize,
    pub algorithm: String,
    pub index: String,
    /// "A" when larger index values are better, "B" when smaller are.
    pub direction: String,
    pub k_max: usize,
    pub prior: PriorSummary,
    pub seed: u64,
    pub restarts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzziness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db_t: Option<f64>,
    /// True when the index series was all-equal, so the ratios carry no
    /// ranking information.
    pub degenerate_ratios: bool,
    /// ks where the correlation profile was degenerate (WI/WP only).
    pub degenerate_ks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// The k the accuracy was measured at: the labeled class count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_k: Option<usize>,
}

/// One row of the per-k table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub k: usize,
    /// Raw index value, exactly as the index module produced it.
    pub gi_value: f64,
    /// Normalized ratio r_k.
    pub ratio: f64,
    pub posterior_mean: f64,
    pub posterior_sd: f64,
    /// 1-based position in the ranking.
    pub rank: usize,
}

/// The reported confidence set: the top_m candidate counts and their total
/// posterior mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub top_m: usize,
    pub set: Vec<usize>,
    pub mass: f64,
}

/// Full pipeline output: metadata, the per-k table, and the ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub records: Vec<KRecord>,
    pub ranking: Vec<usize>,
    pub confidence: Confidence,
}

/// Load or generate the configured dataset, then run the full pipeline.
pub fn run_pipeline(config: &PipelineConfig) -> Result<ReportBundle> {
    config.validate()?;
    let dataset = match &config.source {
        DataSource::Csv { path, label_column } => load_csv(path, label_column.as_deref())?,
        DataSource::Mixture(spec) => generate_mixture(spec)?,
    };
    run_pipeline_on(config, &dataset)
}

/// Run the pipeline on an already-materialized dataset.
pub fn run_pipeline_on(config: &PipelineConfig, dataset: &Dataset) -> Result<ReportBundle> {
    config.validate()?;
    let n = dataset.n();
    let k_max = config.k_max;
    if k_max + 1 > n {
        return Err(Error::KOutOfRange { k: k_max + 1, n });
    }
    // Slope-profile indices look one k past the reporting range.
    let k_top = match config.index {
        IndexKind::Str | IndexKind::Wi | IndexKind::Wp => k_max + 1,
        IndexKind::Db | IndexKind::Xb | IndexKind::Kwon2 => k_max,
    };
    let options = RunOptions {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        restarts: config.restarts,
        seed: config.seed,
    };

    let points = dataset.points();
    let mut hard: BTreeMap<usize, HardClustering> = BTreeMap::new();
    let mut soft: BTreeMap<usize, SoftClustering> = BTreeMap::new();
    match config.algorithm {
        Algorithm::KMeans => {
            for k in 2..=k_top {
                let fit =
                    kmeans_best_of_restarts(points, k, &options).map_err(|e| e.at_k(k))?;
                hard.insert(k, fit);
            }
        }
        Algorithm::Fcm => {
            for k in 2..=k_top {
                let fit = fcm_best_of_restarts(points, k, config.fuzziness, &options)
                    .map_err(|e| e.at_k(k))?;
                soft.insert(k, fit);
            }
        }
    }

    let series: CviSeries = match config.index {
        IndexKind::Db => db_series(points, &hard, config.db_q, config.db_t)?,
        IndexKind::Str => str_series(points, &hard)?,
        IndexKind::Wi => wi_series(points, &hard)?,
        IndexKind::Xb => xb_series(points, &soft)?,
        IndexKind::Kwon2 => kwon2_series(points, &soft)?,
        IndexKind::Wp => wp_series(points, &soft, config.effective_gamma())?,
    };
    let ratios = compute_ratios(&series, n)?;

    let (result, prior_summary): (BcviResult, PriorSummary) = match &config.prior {
        PriorConfig::Flat { alpha } => {
            let prior = DirichletPrior::flat(k_max, *alpha)?;
            let summary = PriorSummary {
                kind: "dirichlet".into(),
                alphas: prior.alphas().clone(),
                betas: None,
            };
            (dirichlet_posterior(&prior, &ratios)?, summary)
        }
        PriorConfig::Profile { profile, weight_in, weight_out } => {
            let prior = DirichletPrior::from_profile(*profile, *weight_in, *weight_out, n, k_max)?;
            let summary = PriorSummary {
                kind: "dirichlet".into(),
                alphas: prior.alphas().clone(),
                betas: None,
            };
            (dirichlet_posterior(&prior, &ratios)?, summary)
        }
        PriorConfig::Explicit { alphas } => {
            let prior = DirichletPrior::from_list(alphas)?;
            let summary = PriorSummary {
                kind: "dirichlet".into(),
                alphas: prior.alphas().clone(),
                betas: None,
            };
            (dirichlet_posterior(&prior, &ratios)?, summary)
        }
        PriorConfig::Gd { alphas, betas } => {
            let prior = GdPrior::from_lists(alphas, betas)?;
            let summary = PriorSummary {
                kind: "gd".into(),
                alphas: prior.alphas().clone(),
                betas: Some(prior.betas().clone()),
            };
            (gd_posterior(&prior, &ratios)?, summary)
        }
    };
    let ranking = bcvi_rank(&result, config.top_m)?;

    // Accuracy against the labels, when they exist and their class count was
    // one of the fitted ks.
    let mut accuracy = None;
    let mut accuracy_k = None;
    if let Some(labels) = dataset.labels() {
        let target = dataset.label_count();
        if target >= 2 && target <= k_top {
            let assignments: Vec<usize> = match config.algorithm {
                Algorithm::KMeans => hard[&target].assignments.clone(),
                Algorithm::Fcm => soft[&target].harden(),
            };
            accuracy = Some(clustering_accuracy(labels, &assignments)?);
            accuracy_k = Some(target);
        }
    }
    if config.require_accuracy {
        match accuracy {
            Some(acc) if acc >= 0.75 => {}
            Some(acc) => {
                return Err(Error::AccuracyBelowThreshold { accuracy: acc, threshold: 0.75 })
            }
            None => {
                return Err(Error::Config(
                    "require-accuracy needs labeled data whose class count is within the \
                     fitted range"
                        .into(),
                ))
            }
        }
    }

    let records: Vec<KRecord> = (2..=k_max)
        .map(|k| {
            let mean = result.means()[&k];
            KRecord {
                k,
                gi_value: series.value(k).expect("series covers the reporting range"),
                ratio: ratios.value(k).expect("ratios cover the reporting range"),
                posterior_mean: mean,
                posterior_sd: result.variances()[&k].sqrt(),
                rank: ranking.order.iter().position(|&r| r == k).expect("ranking covers all ks")
                    + 1,
            }
        })
        .collect();

    Ok(ReportBundle {
        metadata: RunMetadata {
            dataset: dataset.name().to_string(),
            n,
            p: dataset.p(),
            algorithm: config.algorithm.name().to_string(),
            index: config.index.name().to_string(),
            direction: series.direction().code().to_string(),
            k_max,
            prior: prior_summary,
            seed: config.seed,
            restarts: config.restarts,
            fuzziness: matches!(config.algorithm, Algorithm::Fcm).then_some(config.fuzziness),
            gamma: (config.index == IndexKind::Wp).then_some(config.effective_gamma()),
            db_q: (config.index == IndexKind::Db).then_some(config.db_q),
            db_t: (config.index == IndexKind::Db).then_some(config.db_t),
            degenerate_ratios: ratios.degenerate(),
            degenerate_ks: series.degenerate_ks().to_vec(),
            accuracy,
            accuracy_k,
        },
        records,
        ranking: ranking.order,
        confidence: Confidence {
            top_m: config.top_m,
            set: ranking.confidence_set,
            mass: ranking.confidence_mass,
        },
    })
}

/// The report as pretty JSON with a trailing newline. Key order follows the
/// struct declarations, so identical runs serialize byte-identically.
pub fn report_json(report: &ReportBundle) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Write the JSON report to a file.
pub fn write_report(report: &ReportBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report_json(report)).map_err(|e| Error::io(path, e))
}

/// Read a JSON report back.
pub fn read_report(path: impl AsRef<Path>) -> Result<ReportBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidReport(e.to_string()))
}

/// Error-bar table for plotting: `k,mean,lo,hi` with lo = mean - 2 sd
/// clamped at 0 and hi = mean + 2 sd clamped at 1.
pub fn plot_csv(report: &ReportBundle) -> String {
    let mut out = String::from("k,mean,lo,hi\n");
    for record in &report.records {
        let lo = (record.posterior_mean - 2.0 * record.posterior_sd).max(0.0);
        let hi = (record.posterior_mean + 2.0 * record.posterior_sd).min(1.0);
        writeln!(out, "{},{},{lo},{hi}", record.k, record.posterior_mean)
            .expect("string writes cannot fail");
    }
    out
}

/// Write the plot table to a file.
pub fn emit_plot_data(report: &ReportBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, plot_csv(report)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build_config, Overrides};
    use crate::matrix::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::path::PathBuf;

    /// Three clearly separated 2-D blobs, 8 points each, with labels.
    fn three_blobs() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (cls, (cx, cy)) in [(0.0f64, 0.0f64), (30.0, 0.0), (15.0, 25.0)].into_iter().enumerate() {
            for _ in 0..8 {
                rows.push(vec![cx + rng.random::<f64>(), cy + rng.random::<f64>()]);
                labels.push(cls as i64 + 1);
            }
        }
        Dataset::new("three-blobs", Matrix::from_rows(&rows).unwrap(), Some(&labels))
            .unwrap()
    }

    fn base_config(index: IndexKind, k_max: usize) -> PipelineConfig {
        build_config(Overrides {
            csv: Some(PathBuf::from("unused.csv")),
            index: Some(index),
            k_max: Some(k_max),
            restarts: Some(4),
            seed: Some(7),
            top_m: Some(2),
            ..Overrides::default()
        })
        .unwrap()
    }

    #[test]
    fn report_covers_the_range_and_sums_to_one() {
        let dataset = three_blobs();
        let config = base_config(IndexKind::Db, 6);
        let report = run_pipeline_on(&config, &dataset).unwrap();

        let ks: Vec<usize> = report.records.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![2, 3, 4, 5, 6]);
        let mass: f64 = report.records.iter().map(|r| r.posterior_mean).sum();
        assert!((mass - 1.0).abs() <= 1e-10, "means sum to {mass}");
        let mut ranks: Vec<usize> = report.records.iter().map(|r| r.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![1, 2, 3, 4, 5]);
        assert_eq!(report.ranking.len(), 5);
        assert_eq!(report.confidence.set.len(), 2);
        assert_eq!(report.metadata.direction, "B");
        assert_eq!(report.metadata.n, 24);
        assert_eq!(report.metadata.accuracy_k, Some(3));
        let accuracy = report.metadata.accuracy.expect("labels present");
        assert!(accuracy >= 0.95, "blobs are separated, got {accuracy}");
        assert_eq!(report.metadata.db_q, Some(2.0));
        assert!(report.metadata.fuzziness.is_none(), "kmeans run has no fuzziness");
    }

    #[test]
    fn gi_values_match_the_index_module_bit_for_bit() {
        let dataset = three_blobs();
        let config = base_config(IndexKind::Db, 5);
        let report = run_pipeline_on(&config, &dataset).unwrap();

        let options = RunOptions {
            max_iterations: config.max_iterations,
            tolerance: config.tolerance,
            restarts: config.restarts,
            seed: config.seed,
        };
        let hard: BTreeMap<usize, HardClustering> = (2..=5)
            .map(|k| (k, kmeans_best_of_restarts(dataset.points(), k, &options).unwrap()))
            .collect();
        let series = db_series(dataset.points(), &hard, 2.0, 2.0).unwrap();
        for record in &report.records {
            let expected = series.value(record.k).unwrap();
            assert!(
                record.gi_value.to_bits() == expected.to_bits(),
                "k = {}: {} vs {}",
                record.k,
                record.gi_value,
                expected
            );
        }
    }

    #[test]
    fn identical_configs_serialize_identically() {
        let dataset = three_blobs();
        let config = base_config(IndexKind::Wi, 5);
        let a = report_json(&run_pipeline_on(&config, &dataset).unwrap());
        let b = report_json(&run_pipeline_on(&config, &dataset).unwrap());
        assert_eq!(a, b, "same seed must give byte-identical reports");
    }

    #[test]
    fn report_json_round_trips() {
        let dataset = three_blobs();
        let mut config = base_config(IndexKind::Wp, 5);
        config.gamma = Some(1.5);
        let report = run_pipeline_on(&config, &dataset).unwrap();
        assert_eq!(report.metadata.gamma, Some(1.5));
        assert_eq!(report.metadata.fuzziness, Some(2.0));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn bad_report_files_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("garbage.json");
        std::fs::write(&path, "{\"not\": \"a report\"}").unwrap();
        let err = read_report(&path).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Data);
    }

    #[test]
    fn plot_rows_are_clamped_two_sigma_bars() {
        let dataset = three_blobs();
        let config = base_config(IndexKind::Db, 5);
        let report = run_pipeline_on(&config, &dataset).unwrap();
        let text = plot_csv(&report);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,mean,lo,hi"));
        for (line, record) in lines.zip(&report.records) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0].parse::<usize>().unwrap(), record.k);
            let mean: f64 = fields[1].parse().unwrap();
            let lo: f64 = fields[2].parse().unwrap();
            let hi: f64 = fields[3].parse().unwrap();
            assert_eq!(mean, record.posterior_mean, "means round-trip exactly");
            assert_eq!(lo, (record.posterior_mean - 2.0 * record.posterior_sd).max(0.0));
            assert_eq!(hi, (record.posterior_mean + 2.0 * record.posterior_sd).min(1.0));
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
    }

    #[test]
    fn accuracy_gate_fails_on_shuffled_labels() {
        // Same points, labels deliberately at war with the geometry.
        let blobs = three_blobs();
        let labels: Vec<i64> = (0..blobs.n()).map(|i| (i % 3) as i64).collect();
        let dataset = Dataset::new(
            "shuffled",
            Matrix::from_rows(
                &blobs.points().iter_rows().map(<[f64]>::to_vec).collect::<Vec<_>>(),
            )
            .unwrap(),
            Some(&labels),
        )
        .unwrap();

        let mut config = base_config(IndexKind::Db, 5);
        config.require_accuracy = true;
        let err = run_pipeline_on(&config, &dataset).unwrap_err();
        assert!(
            matches!(err, Error::AccuracyBelowThreshold { .. }),
            "got {err}"
        );

        // Unlabeled data cannot satisfy the gate either.
        let unlabeled = Dataset::from_points(
            "plain",
            &blobs.points().iter_rows().map(<[f64]>::to_vec).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(run_pipeline_on(&config, &unlabeled).is_err());
    }

    #[test]
    fn k_range_must_fit_the_data() {
        let dataset = three_blobs();
        let config = base_config(IndexKind::Db, 24);
        let err = run_pipeline_on(&config, &dataset).unwrap_err();
        assert!(matches!(err, Error::KOutOfRange { k: 25, n: 24 }), "got {err}");
    }

    #[test]
    fn soft_pipeline_hardens_for_accuracy() {
        let dataset = three_blobs();
        let mut config = base_config(IndexKind::Xb, 5);
        config.require_accuracy = true;
        let report = run_pipeline_on(&config, &dataset).unwrap();
        assert!(report.metadata.accuracy.unwrap() >= 0.95);
        assert_eq!(report.metadata.algorithm, "fcm");
        assert_eq!(report.metadata.fuzziness, Some(2.0));
        assert!(report.metadata.gamma.is_none(), "gamma is a wp knob");
    }
}
