//! Validity indices computed on fuzzy clusterings: Xie-Beni, KWON2, and the
//! slope-ratio correlation index on membership-blended representatives.

use std::collections::BTreeMap;

use crate::clustering::SoftClustering;
use crate::cvi::{AllInfinite, CorrelationProfile, CviSeries, IndexKind};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::paircorr::{baseline_dispersion, pair_distance_correlation, RepresentativeMap};

fn validate_clustering(data: &Matrix, clustering: &SoftClustering) -> Result<()> {
    if clustering.membership.rows() != data.rows() {
        return Err(Error::DimensionMismatch {
            left: clustering.membership.rows(),
            right: data.rows(),
        });
    }
    if clustering.membership.cols() != clustering.c {
        return Err(Error::DimensionMismatch {
            left: clustering.membership.cols(),
            right: clustering.c,
        });
    }
    if clustering.centroids.rows() != clustering.c || clustering.centroids.cols() != data.cols() {
        return Err(Error::DimensionMismatch {
            left: clustering.centroids.rows() * clustering.centroids.cols(),
            right: clustering.c * data.cols(),
        });
    }
    Ok(())
}

fn validate_range(
    clusterings: &BTreeMap<usize, SoftClustering>,
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
        if clustering.c != k {
            return Err(Error::InvalidSeries(format!(
                "{what}: entry at k = {k} holds a clustering with c = {}",
                clustering.c
            )));
        }
    }
    Ok(hi)
}

/// Smallest squared distance between two distinct centroids; an error names
/// the first coincident pair.
fn min_centroid_separation(centroids: &Matrix, k: usize) -> Result<f64> {
    let mut min_sep = f64::INFINITY;
    for i in 0..centroids.rows() {
        for j in (i + 1)..centroids.rows() {
            let d = squared_distance(centroids.row(i), centroids.row(j));
            if d == 0.0 {
                return Err(Error::CoincidentCentroids { k, i, j });
            }
            min_sep = min_sep.min(d);
        }
    }
    Ok(min_sep)
}

/// Xie-Beni index: squared-membership-weighted within dispersion over the
/// worst centroid separation, per point. Smaller is better. The membership
/// exponent is fixed at 2 regardless of the fuzziness used for fitting.
pub fn xb_value(data: &Matrix, clustering: &SoftClustering) -> Result<f64> {
    validate_clustering(data, clustering)?;
    if clustering.c < 2 {
        return Err(Error::IndexUndefined("the index needs at least 2 clusters".into()));
    }
    let mut within = 0.0;
    for (x, mu) in data.iter_rows().zip(clustering.membership.iter_rows()) {
        for (&w, centroid) in mu.iter().zip(clustering.centroids.iter_rows()) {
            within += w * w * squared_distance(x, centroid);
        }
    }
    let min_sep = min_centroid_separation(&clustering.centroids, clustering.c)?;
    Ok(within / (data.rows() as f64 * min_sep))
}

/// Xie-Beni over every clustering in the map (k = 2..=K).
pub fn xb_series(data: &Matrix, clusterings: &BTreeMap<usize, SoftClustering>) -> Result<CviSeries> {
    validate_range(clusterings, 3, "xb")?;
    let mut values = BTreeMap::new();
    for (&k, clustering) in clusterings {
        values.insert(k, xb_value(data, clustering).map_err(|e| e.at_k(k))?);
    }
    CviSeries::new(IndexKind::Xb, values)
}

/// KWON2 index. Smaller is better.
///
/// A punishing-function construction: the membership-weighted within
/// dispersion (with exponent 2^sqrt(m/2)) plus a centroid-scatter term and a
/// stabilizer w3, scaled by w1 and w2, over the worst centroid separation
/// plus 1/k + 1/k^(m-1). The weights keep the index from collapsing as k
/// approaches n.
pub fn kwon2_value(data: &Matrix, clustering: &SoftClustering) -> Result<f64> {
    validate_clustering(data, clustering)?;
    let n = data.rows();
    let k = clustering.c;
    if k < 2 {
        return Err(Error::IndexUndefined("the index needs at least 2 clusters".into()));
    }
    if k > n {
        return Err(Error::IndexUndefined(format!("the index needs k <= n, got k = {k}, n = {n}")));
    }
    let m = clustering.fuzziness;
    let nf = n as f64;
    let kf = k as f64;

    let w1 = (nf - kf + 1.0) / nf;
    let w2 = (kf / (kf - 1.0)).powf(std::f64::consts::SQRT_2);
    let w3 = nf * kf / ((nf - kf + 1.0) * (nf - kf + 1.0));
    let exponent = 2f64.powf((m / 2.0).sqrt());

    let mut within = 0.0;
    for (x, mu) in data.iter_rows().zip(clustering.membership.iter_rows()) {
        for (&w, centroid) in mu.iter().zip(clustering.centroids.iter_rows()) {
            within += w.powf(exponent) * squared_distance(x, centroid);
        }
    }

    let min_sep = min_centroid_separation(&clustering.centroids, k)?;

    let center = data.mean_row();
    let scatter: Vec<f64> = clustering
        .centroids
        .iter_rows()
        .map(|v| squared_distance(v, &center))
        .collect();
    let max_scatter = scatter.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_scatter == 0.0 {
        // Unreachable once distinct centroids exist, kept as a guard against
        // a zero denominator.
        return Err(Error::IndexUndefined(
            "every centroid coincides with the global centroid".into(),
        ));
    }
    let scatter_term: f64 = scatter.iter().sum::<f64>() / max_scatter;

    let numerator = w1 * (w2 * within + scatter_term + w3);
    let denominator = min_sep + 1.0 / kf + kf.powf(1.0 - m);
    Ok(numerator / denominator)
}

/// KWON2 over every clustering in the map (k = 2..=K).
pub fn kwon2_series(
    data: &Matrix,
    clusterings: &BTreeMap<usize, SoftClustering>,
) -> Result<CviSeries> {
    validate_range(clusterings, 3, "kwon2")?;
    let mut values = BTreeMap::new();
    for (&k, clustering) in clusterings {
        values.insert(k, kwon2_value(data, clustering).map_err(|e| e.at_k(k))?);
    }
    CviSeries::new(IndexKind::Kwon2, values)
}

/// Correlation profile over k = 1..K+1 for fuzzy clusterings: the baseline
/// dispersion at k = 1, then pair-distance correlations against
/// membership-blended representatives with exponent `gamma`.
pub fn correlation_profile_from_soft(
    data: &Matrix,
    clusterings: &BTreeMap<usize, SoftClustering>,
    gamma: f64,
) -> Result<CorrelationProfile> {
    let k_top = validate_range(clusterings, 4, "wp")?;
    let mut values = BTreeMap::from([(1usize, baseline_dispersion(data)?)]);
    let mut degenerate = Vec::new();
    for k in 2..=k_top {
        let clustering = &clusterings[&k];
        validate_clustering(data, clustering).map_err(|e| e.at_k(k))?;
        let reps = RepresentativeMap::from_soft_clustering(clustering, gamma)?;
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

/// Slope-ratio correlation index over k = 2..K on fuzzy clusterings, from
/// clusterings fitted for k = 2..K+1. Larger is better. When the slope ratio
/// is infinite at every k, the slope difference alone is the index; and on
/// crisp memberships the representatives collapse to cluster centroids, so
/// this agrees exactly with the hard-clustering slope index.
pub fn wp_series(
    data: &Matrix,
    clusterings: &BTreeMap<usize, SoftClustering>,
    gamma: f64,
) -> Result<CviSeries> {
    let profile = correlation_profile_from_soft(data, clusterings, gamma)?;
    let values = profile.resolve(AllInfinite::SlopeDifference)?;
    Ok(CviSeries::new(IndexKind::Wp, values)?
        .with_degenerate_ks(profile.degenerate_ks().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{fcm_best_of_restarts, kmeans_best_of_restarts, HardClustering, RunOptions};
    use crate::cvi_hard::wi_series;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> Matrix {
        Matrix::from_rows(&points.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    /// Crisp soft clustering with the given assignments and centroids.
    fn crisp(assignments: &[usize], centroids: &[Vec<f64>], fuzziness: f64) -> SoftClustering {
        let c = centroids.len();
        let membership = Matrix::from_rows(
            &assignments
                .iter()
                .map(|&a| (0..c).map(|j| f64::from(u8::from(j == a))).collect::<Vec<f64>>())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        SoftClustering {
            c,
            membership,
            centroids: Matrix::from_rows(centroids).unwrap(),
            fuzziness,
            objective: 0.0,
            iterations: 0,
            converged: true,
        }
    }

    /// Convert a hard clustering into its crisp soft equivalent.
    fn crisp_from_hard(clustering: &HardClustering, fuzziness: f64) -> SoftClustering {
        let centroids: Vec<Vec<f64>> =
            clustering.centroids.iter_rows().map(<[f64]>::to_vec).collect();
        crisp(&clustering.assignments, &centroids, fuzziness)
    }

    #[test]
    fn xb_two_tight_pairs() {
        // Within = 4 (each point at distance 1), n = 4, min separation 100.
        let data = line(&[0.0, 2.0, 10.0, 12.0]);
        let clustering = crisp(&[0, 0, 1, 1], &[vec![1.0], vec![11.0]], 2.0);
        let got = xb_value(&data, &clustering).unwrap();
        assert!((got - 0.01).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn xb_uses_squared_memberships_regardless_of_fuzziness() {
        let data = line(&[0.0, 2.0, 10.0, 12.0]);
        let a = xb_value(&data, &crisp(&[0, 0, 1, 1], &[vec![1.0], vec![11.0]], 2.0)).unwrap();
        let b = xb_value(&data, &crisp(&[0, 0, 1, 1], &[vec![1.0], vec![11.0]], 3.5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kwon2_two_tight_pairs() {
        let data = line(&[0.0, 2.0, 10.0, 12.0]);
        let clustering = crisp(&[0, 0, 1, 1], &[vec![1.0], vec![11.0]], 2.0);
        let got = kwon2_value(&data, &clustering).unwrap();
        // Independent substitution: w1 = 3/4, w2 = 2^sqrt(2), within = 4,
        // scatter = (25 + 25)/25 = 2, w3 = 8/9, denominator = 100 + 1.
        let expected = 0.75 * (2f64.powf(std::f64::consts::SQRT_2) * 4.0 + 2.0 + 8.0 / 9.0) / 101.0;
        assert!((got - expected).abs() < 1e-12, "got {got}, expected {expected}");
        assert!((got - 0.100615).abs() < 1e-6);
    }

    #[test]
    fn kwon2_smallest_instance() {
        // Two points, two clusters: the within term vanishes and the
        // stabilizers dominate: 0.5 * (0 + 2 + 4) / (4 + 1) = 3/5.
        let data = line(&[0.0, 2.0]);
        let clustering = crisp(&[0, 1], &[vec![0.0], vec![2.0]], 2.0);
        let got = kwon2_value(&data, &clustering).unwrap();
        assert!((got - 0.6).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn kwon2_hand_value_on_wider_pairs() {
        let data = line(&[0.0, 1.0, 9.0, 10.0]);
        let clustering = crisp(&[0, 0, 1, 1], &[vec![0.5], vec![9.5]], 2.0);
        let got = kwon2_value(&data, &clustering).unwrap();
        assert!((got - 0.050799).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn soft_indices_reject_coincident_centroids() {
        let data = line(&[0.0, 1.0, 2.0, 3.0]);
        let clustering = crisp(&[0, 0, 1, 1], &[vec![1.5], vec![1.5]], 2.0);
        assert!(matches!(
            xb_value(&data, &clustering).unwrap_err(),
            Error::CoincidentCentroids { .. }
        ));
        assert!(matches!(
            kwon2_value(&data, &clustering).unwrap_err(),
            Error::CoincidentCentroids { .. }
        ));
    }

    #[test]
    fn kwon2_rejects_more_clusters_than_points() {
        let data = line(&[0.0, 2.0]);
        let clustering = crisp(&[0, 1], &[vec![0.0], vec![1.0], vec![2.0]], 2.0);
        let err = kwon2_value(&data, &clustering).unwrap_err();
        assert!(matches!(err, Error::IndexUndefined(_)), "got {err}");
    }

    #[test]
    fn fitted_fcm_series_are_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut rows = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (12.0, 0.0), (6.0, 9.0)] {
            for _ in 0..10 {
                rows.push(vec![cx + rng.random::<f64>(), cy + rng.random::<f64>()]);
            }
        }
        let data = Matrix::from_rows(&rows).unwrap();
        let opts = RunOptions { seed: 5, ..RunOptions::default() };
        let clusterings: BTreeMap<usize, SoftClustering> =
            (2..=5).map(|k| (k, fcm_best_of_restarts(&data, k, 2.0, &opts).unwrap())).collect();

        let sub: BTreeMap<usize, SoftClustering> =
            clusterings.iter().filter(|(&k, _)| k <= 4).map(|(&k, c)| (k, c.clone())).collect();
        for series in [
            xb_series(&data, &sub).unwrap(),
            kwon2_series(&data, &sub).unwrap(),
            wp_series(&data, &clusterings, 2.0).unwrap(),
        ] {
            assert_eq!(series.k_max(), 4);
            assert!(series.values().values().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn crisp_memberships_collapse_wp_to_wi() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rows: Vec<Vec<f64>> =
            (0..30).map(|_| vec![rng.random::<f64>() * 8.0, rng.random::<f64>() * 8.0]).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let opts = RunOptions { seed: 13, ..RunOptions::default() };
        let hard: BTreeMap<usize, HardClustering> =
            (2..=6).map(|k| (k, kmeans_best_of_restarts(&data, k, &opts).unwrap())).collect();
        let soft: BTreeMap<usize, SoftClustering> =
            hard.iter().map(|(&k, h)| (k, crisp_from_hard(h, 2.0))).collect();

        let wi = wi_series(&data, &hard).unwrap();
        for gamma in [1.0, 2.0, 5.0] {
            let wp = wp_series(&data, &soft, gamma).unwrap();
            for (k, &expected) in wi.values() {
                let got = wp.value(*k).unwrap();
                assert!(
                    (got - expected).abs() <= 1e-12,
                    "gamma {gamma}, k {k}: wp {got} vs wi {expected}"
                );
            }
        }
    }
}
