//! Validity indices computed on hard (k-means) clusterings: the
//! Davies-Bouldin index, the STR dispersion-gain index, and the slope-ratio
//! correlation index.

use std::collections::BTreeMap;

use crate::clustering::HardClustering;
use crate::cvi::{AllInfinite, CorrelationProfile, CviSeries, IndexKind};
use crate::error::{Error, Result};
use crate::matrix::{euclidean_distance, minkowski_distance, Matrix};
use crate::paircorr::{baseline_dispersion, pair_distance_correlation, RepresentativeMap};

fn validate_clustering(data: &Matrix, clustering: &HardClustering) -> Result<()> {
    if clustering.assignments.len() != data.rows() {
        return Err(Error::DimensionMismatch {
            left: clustering.assignments.len(),
            right: data.rows(),
        });
    }
    if clustering.centroids.cols() != data.cols() {
        return Err(Error::DimensionMismatch {
            left: clustering.centroids.cols(),
            right: data.cols(),
        });
    }
    if clustering.centroids.rows() != clustering.k {
        return Err(Error::DimensionMismatch {
            left: clustering.centroids.rows(),
            right: clustering.k,
        });
    }
    Ok(())
}

/// Require the map to hold clusterings for exactly k = 2..=k_top with the
/// stated minimum top, each fitted with the k it is filed under.
fn validate_range(
    clusterings: &BTreeMap<usize, HardClustering>,
    min_top: usize,
    what: &str,
) -> Result<usize> {
    let Some((&lo, _)) = clusterings.first_key_value() else {
        return Err(Error::InvalidSeries(format!("{what}: no clusterings given")));
    };
    let (&hi, _) = clusterings.last_key_value().expect("non-empty map");
    if lo != 2 || clusterings.len() != hi - 1 || hi < min_top {
        return Err(Error::InvalidSeries(format!(
            "{what}: clusterings must cover k = 2..={min_top} or more contiguously"
        )));
    }
    for (&k, clustering) in clusterings {
        if clustering.k != k {
            return Err(Error::InvalidSeries(format!(
                "{what}: entry at k = {k} holds a clustering with k = {}",
                clustering.k
            )));
        }
    }
    Ok(hi)
}

/// Davies-Bouldin index: the average, over clusters, of the worst-case ratio
/// of summed within-cluster dispersions (order `q`) to between-centroid
/// separation (Minkowski order `t`). Smaller is better. `q = t = 2` is the
/// usual choice.
pub fn db_value(data: &Matrix, clustering: &HardClustering, q: f64, t: f64) -> Result<f64> {
    validate_clustering(data, clustering)?;
    if !(q.is_finite() && q >= 1.0) || !(t.is_finite() && t >= 1.0) {
        return Err(Error::Config(format!("dispersion orders must be >= 1, got q = {q}, t = {t}")));
    }
    let k = clustering.k;
    if k < 2 {
        return Err(Error::IndexUndefined("the index needs at least 2 clusters".into()));
    }

    let mut moments = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (x, &a) in data.iter_rows().zip(&clustering.assignments) {
        moments[a] += euclidean_distance(x, clustering.centroids.row(a)).powf(q);
        counts[a] += 1;
    }
    let dispersions: Vec<f64> = moments
        .iter()
        .zip(&counts)
        .map(|(&m, &c)| (m / c as f64).powf(1.0 / q))
        .collect();

    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if j == i {
                continue;
            }
            let separation =
                minkowski_distance(clustering.centroids.row(i), clustering.centroids.row(j), t);
            if separation == 0.0 {
                return Err(Error::CoincidentCentroids { k, i: i.min(j), j: i.max(j) });
            }
            worst = worst.max((dispersions[i] + dispersions[j]) / separation);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Davies-Bouldin over every clustering in the map (k = 2..=K).
pub fn db_series(
    data: &Matrix,
    clusterings: &BTreeMap<usize, HardClustering>,
    q: f64,
    t: f64,
) -> Result<CviSeries> {
    validate_range(clusterings, 3, "db")?;
    let mut values = BTreeMap::new();
    for (&k, clustering) in clusterings {
        let v = db_value(data, clustering, q, t).map_err(|e| e.at_k(k))?;
        values.insert(k, v);
    }
    CviSeries::new(IndexKind::Db, values)
}

/// Ratio of the largest to the smallest pairwise centroid distance.
fn centroid_spread_ratio(centroids: &Matrix, k: usize) -> Result<f64> {
    let mut max_d = f64::NEG_INFINITY;
    let mut min_d = f64::INFINITY;
    for i in 0..centroids.rows() {
        for j in (i + 1)..centroids.rows() {
            let d = euclidean_distance(centroids.row(i), centroids.row(j));
            if d == 0.0 {
                return Err(Error::CoincidentCentroids { k, i, j });
            }
            max_d = max_d.max(d);
            min_d = min_d.min(d);
        }
    }
    Ok(max_d / min_d)
}

/// STR index over k = 2..K, from clusterings fitted for k = 2..K+1.
///
/// STR(k) multiplies the gain in the dispersion ratio E when moving from
/// k-1 to k clusters by the gain in the centroid spread ratio D from k to
/// k+1. E(k) is the total distance to the global centroid over the summed
/// within-cluster distances; E(1) = 1 analytically, since one cluster's
/// centroid *is* the global centroid. Larger is better.
pub fn str_series(data: &Matrix, clusterings: &BTreeMap<usize, HardClustering>) -> Result<CviSeries> {
    let k_top = validate_range(clusterings, 4, "str")?;
    let k_max = k_top - 1;

    let center = data.mean_row();
    let total_to_center: f64 =
        data.iter_rows().map(|x| euclidean_distance(x, &center)).sum();

    // E over k = 1..K.
    let mut dispersion_ratio = BTreeMap::from([(1usize, 1.0f64)]);
    for k in 2..=k_max {
        let clustering = &clusterings[&k];
        validate_clustering(data, clustering).map_err(|e| e.at_k(k))?;
        let within: f64 = data
            .iter_rows()
            .zip(&clustering.assignments)
            .map(|(x, &a)| euclidean_distance(x, clustering.centroids.row(a)))
            .sum();
        if within == 0.0 {
            return Err(Error::IndexUndefined(
                "zero within-cluster dispersion: every point sits on its centroid".into(),
            )
            .at_k(k));
        }
        dispersion_ratio.insert(k, total_to_center / within);
    }

    // D over k = 2..K+1.
    let mut spread_ratio = BTreeMap::new();
    for k in 2..=k_top {
        let clustering = &clusterings[&k];
        validate_clustering(data, clustering).map_err(|e| e.at_k(k))?;
        spread_ratio.insert(k, centroid_spread_ratio(&clustering.centroids, k).map_err(|e| e.at_k(k))?);
    }

    let values: BTreeMap<usize, f64> = (2..=k_max)
        .map(|k| {
            let gain_e = dispersion_ratio[&k] - dispersion_ratio[&(k - 1)];
            let gain_d = spread_ratio[&(k + 1)] - spread_ratio[&k];
            (k, gain_e * gain_d)
        })
        .collect();
    CviSeries::new(IndexKind::Str, values)
}

/// Correlation profile over k = 1..K+1 for hard clusterings: the baseline
/// dispersion at k = 1, then the pair-distance correlation against each
/// clustering's centroid representatives. Degenerate correlations enter as 0
/// and are recorded; an error is raised only when every k is degenerate.
pub fn correlation_profile_from_hard(
    data: &Matrix,
    clusterings: &BTreeMap<usize, HardClustering>,
) -> Result<CorrelationProfile> {
    let k_top = validate_range(clusterings, 4, "wi")?;
    let mut values = BTreeMap::from([(1usize, baseline_dispersion(data)?)]);
    let mut degenerate = Vec::new();
    for k in 2..=k_top {
        let clustering = &clusterings[&k];
        validate_clustering(data, clustering).map_err(|e| e.at_k(k))?;
        let reps = RepresentativeMap::from_hard_clustering(clustering);
        let corr = pair_distance_correlation(data, &reps).map_err(|e| e.at_k(k))?;
        if corr.degenerate {
            degenerate.push(k);
        }
        values.insert(k, corr.value);
    }
    if degenerate.len() == k_top - 1 {
        return Err(Error::IndexUndefined(
            "the pair correlation is degenerate at every k".into(),
        ));
    }
    Ok(CorrelationProfile::new(values)?.with_degenerate_ks(degenerate))
}

/// Slope-ratio correlation index over k = 2..K on hard clusterings, from
/// clusterings fitted for k = 2..K+1. Larger is better. Unlike its soft
/// counterpart it has no fallback when the slope ratio is infinite
/// everywhere; that case is an error.
pub fn wi_series(data: &Matrix, clusterings: &BTreeMap<usize, HardClustering>) -> Result<CviSeries> {
    let profile = correlation_profile_from_hard(data, clusterings)?;
    let values = profile.resolve(AllInfinite::Undefined)?;
    Ok(CviSeries::new(IndexKind::Wi, values)?
        .with_degenerate_ks(profile.degenerate_ks().to_vec()))
}
