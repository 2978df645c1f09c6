//! K-means (Lloyd) and fuzzy c-means, with deterministic multi-restart
//! selection.
//!
//! Both algorithms guarantee a coherent returned model: the stored hard
//! assignments are exactly the nearest-centroid map of the stored centroids
//! (ties to the lowest cluster id), every cluster is non-empty, and the
//! stored membership matrix is exactly the closed-form update of the stored
//! centroids. The stored objective is recomputed from those final fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{euclidean_distance, squared_distance, Matrix};

/// Options shared by the iterative clustering runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Hard cap on update iterations.
    pub max_iterations: usize,
    /// Convergence threshold on the maximum centroid displacement.
    pub tolerance: f64,
    /// Number of independent restarts in [`kmeans_best_of_restarts`] /
    /// [`fcm_best_of_restarts`].
    pub restarts: usize,
    /// Base seed; restart i runs with [`restart_seed`]`(seed, i)`.
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_iterations: 200, tolerance: 1e-6, restarts: 20, seed: 0 }
    }
}

/// Result of a hard (k-means) clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct HardClustering {
    pub k: usize,
    /// Cluster id in `0..k` per point; exactly the nearest-centroid map of
    /// `centroids`, ties to the lowest id.
    pub assignments: Vec<usize>,
    /// k x p centroid matrix.
    pub centroids: Matrix,
    /// Sum of squared distances to the assigned centroid.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of a fuzzy c-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftClustering {
    pub c: usize,
    /// n x c membership matrix; rows sum to 1 and equal the closed-form
    /// update of `centroids`.
    pub membership: Matrix,
    /// c x p centroid matrix.
    pub centroids: Matrix,
    pub fuzziness: f64,
    /// Sum over points and clusters of membership^fuzziness times squared
    /// distance.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SoftClustering {
    /// Harden by assigning each point to its highest-membership cluster
    /// (ties to the lowest id).
    pub fn harden(&self) -> Vec<usize> {
        self.membership
            .iter_rows()
            .map(|row| {
                let mut best = 0;
                for (j, &w) in row.iter().enumerate() {
                    if w > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

/// Seed used for the `restart`-th restart of a run with base seed `seed`.
/// SplitMix64 keyed by the restart counter, so restarts are decorrelated but
/// fully reproducible.
pub fn restart_seed(seed: u64, restart: u64) -> u64 {
    let mut z = seed.wrapping_add(restart.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw `k` distinct point indices uniformly (partial Fisher-Yates).
fn sample_initial_centroids(data: &Matrix, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = data.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    for slot in 0..k {
        let pick = rng.random_range(slot..n);
        indices.swap(slot, pick);
    }
    indices[..k].iter().map(|&i| data.row(i).to_vec()).collect()
}

fn check_k(data: &Matrix, k: usize) -> Result<()> {
    if k == 0 || k > data.rows() {
        return Err(Error::KOutOfRange { k, n: data.rows() });
    }
    Ok(())
}

/// Nearest-centroid assignment, ties to the lowest cluster id.
fn assign_nearest(data: &Matrix, centroids: &[Vec<f64>]) -> Vec<usize> {
    data.iter_rows()
        .map(|x| {
            let mut best = 0;
            let mut best_d = squared_distance(x, &centroids[0]);
            for (j, c) in centroids.iter().enumerate().skip(1) {
                let d = squared_distance(x, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Assign points to centroids, reseeding empty clusters onto the point
/// currently farthest from its own centroid until every cluster is occupied.
/// Returns the assignment and whether any reseeding happened. Post-condition:
/// the assignment is exactly `assign_nearest(data, centroids)` and every
/// cluster is non-empty.
fn assign_with_repair(
    data: &Matrix,
    centroids: &mut [Vec<f64>],
    k: usize,
) -> Result<(Vec<usize>, bool)> {
    let mut repaired = false;
    for _ in 0..=2 * k {
        let assignments = assign_nearest(data, centroids);
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok((assignments, repaired));
        };
        repaired = true;
        // Farthest point whose departure leaves its own cluster occupied and
        // which does not already sit on a centroid (that would just recreate
        // the tie that emptied the cluster).
        let mut donor: Option<(usize, f64)> = None;
        for (i, x) in data.iter_rows().enumerate() {
            if counts[assignments[i]] <= 1 {
                continue;
            }
            if centroids.iter().any(|c| c.as_slice() == x) {
                continue;
            }
            let d = squared_distance(x, &centroids[assignments[i]]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let Some((far, _)) = donor else {
            return Err(Error::EmptyClusterUnrepairable { k });
        };
        centroids[empty] = data.row(far).to_vec();
    }
    Err(Error::EmptyClusterUnrepairable { k })
}

fn cluster_means(data: &Matrix, assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let p = data.cols();
    let mut sums = vec![vec![0.0; p]; k];
    let mut counts = vec![0usize; k];
    for (x, &a) in data.iter_rows().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        debug_assert!(count > 0, "means computed on an empty cluster");
        for s in sum.iter_mut() {
            *s /= count as f64;
        }
    }
    sums
}

fn hard_objective(data: &Matrix, assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    data.iter_rows()
        .zip(assignments)
        .map(|(x, &a)| squared_distance(x, &centroids[a]))
        .sum()
}

fn max_displacement(old: &[Vec<f64>], new: &[Vec<f64>]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| euclidean_distance(a, b))
        .fold(0.0, f64::max)
}

/// One k-means run from a seeded random initialization. Also returns the
/// objective value after initialization and after every iteration; the trace
/// is non-increasing.
pub fn kmeans_once_traced(
    data: &Matrix,
    k: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<(HardClustering, Vec<f64>)> {
    check_k(data, k)?;
    let mut centroids = sample_initial_centroids(data, k, seed);
    let (mut assignments, _) = assign_with_repair(data, &mut centroids, k)?;
    let mut trace = vec![hard_objective(data, &assignments, &centroids)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let new_centroids = cluster_means(data, &assignments, k);
        let displacement = max_displacement(&centroids, &new_centroids);
        centroids = new_centroids;
        let repaired;
        (assignments, repaired) = assign_with_repair(data, &mut centroids, k)?;
        trace.push(hard_objective(data, &assignments, &centroids));
        if displacement < opts.tolerance && !repaired {
            converged = true;
            break;
        }
    }
    let objective = *trace.last().expect("trace has the initial value");
    let clustering = HardClustering {
        k,
        assignments,
        centroids: Matrix::from_rows(&centroids)?,
        objective,
        iterations,
        converged,
    };
    Ok((clustering, trace))
}

/// One k-means run from a seeded random initialization.
pub fn kmeans_once(data: &Matrix, k: usize, seed: u64, opts: &RunOptions) -> Result<HardClustering> {
    kmeans_once_traced(data, k, seed, opts).map(|(c, _)| c)
}

/// Best of `opts.restarts` independent k-means runs, by objective; ties keep
/// the earliest restart.
pub fn kmeans_best_of_restarts(data: &Matrix, k: usize, opts: &RunOptions) -> Result<HardClustering> {
    if opts.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let mut best: Option<HardClustering> = None;
    for restart in 0..opts.restarts {
        let run = kmeans_once(data, k, restart_seed(opts.seed, restart as u64), opts)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart ran"))
}

/// Closed-form fuzzy membership update for the given centroids. A point that
/// coincides with a centroid gets the indicator row of the first such
/// centroid.
fn fuzzy_memberships(data: &Matrix, centroids: &[Vec<f64>], fuzziness: f64) -> Matrix {
    let c = centroids.len();
    let exponent = 2.0 / (fuzziness - 1.0);
    let mut rows = Vec::with_capacity(data.rows() * c);
    let mut dists = vec![0.0; c];
    for x in data.iter_rows() {
        for (d, centroid) in dists.iter_mut().zip(centroids) {
            *d = euclidean_distance(x, centroid);
        }
        if let Some(hit) = dists.iter().position(|&d| d == 0.0) {
            for j in 0..c {
                rows.push(if j == hit { 1.0 } else { 0.0 });
            }
            continue;
        }
        for j in 0..c {
            let mut denom = 0.0;
            for &dl in &dists {
                denom += (dists[j] / dl).powf(exponent);
            }
            rows.push(1.0 / denom);
        }
    }
    Matrix::new(data.rows(), c, rows).expect("membership dimensions are consistent")
}

fn soft_objective(data: &Matrix, membership: &Matrix, centroids: &[Vec<f64>], fuzziness: f64) -> f64 {
    let mut total = 0.0;
    for (x, weights) in data.iter_rows().zip(membership.iter_rows()) {
        for (w, centroid) in weights.iter().zip(centroids) {
            total += w.powf(fuzziness) * squared_distance(x, centroid);
        }
    }
    total
}

/// Membership-weighted centroid update. A cluster whose total weight
/// underflows to zero keeps its previous centroid.
fn fuzzy_centroids(
    data: &Matrix,
    membership: &Matrix,
    previous: &[Vec<f64>],
    fuzziness: f64,
) -> Vec<Vec<f64>> {
    let c = previous.len();
    let p = data.cols();
    let mut sums = vec![vec![0.0; p]; c];
    let mut weights = vec![0.0; c];
    for (x, row) in data.iter_rows().zip(membership.iter_rows()) {
        for (j, &mu) in row.iter().enumerate() {
            let w = mu.powf(fuzziness);
            weights[j] += w;
            for (s, v) in sums[j].iter_mut().zip(x) {
                *s += w * v;
            }
        }
    }
    for j in 0..c {
        if weights[j] == 0.0 {
            sums[j] = previous[j].clone();
        } else {
            for s in sums[j].iter_mut() {
                *s /= weights[j];
            }
        }
    }
    sums
}

/// One fuzzy c-means run from a seeded random initialization. Also returns
/// the objective after every iteration; the trace is non-increasing.
pub fn fcm_once_traced(
    data: &Matrix,
    c: usize,
    fuzziness: f64,
    seed: u64,
    opts: &RunOptions,
) -> Result<(SoftClustering, Vec<f64>)> {
    check_k(data, c)?;
    if !(fuzziness.is_finite() && fuzziness > 1.0) {
        return Err(Error::FuzzinessOutOfRange { m: fuzziness });
    }
    let mut centroids = sample_initial_centroids(data, c, seed);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut membership = fuzzy_memberships(data, &centroids, fuzziness);
    while iterations < opts.max_iterations {
        iterations += 1;
        let new_centroids = fuzzy_centroids(data, &membership, &centroids, fuzziness);
        let displacement = max_displacement(&centroids, &new_centroids);
        centroids = new_centroids;
        membership = fuzzy_memberships(data, &centroids, fuzziness);
        trace.push(soft_objective(data, &membership, &centroids, fuzziness));
        if displacement < opts.tolerance {
            converged = true;
            break;
        }
    }
    let objective =
        trace.last().copied().unwrap_or_else(|| soft_objective(data, &membership, &centroids, fuzziness));
    let clustering = SoftClustering {
        c,
        membership,
        centroids: Matrix::from_rows(&centroids)?,
        fuzziness,
        objective,
        iterations,
        converged,
    };
    Ok((clustering, trace))
}

/// One fuzzy c-means run from a seeded random initialization.
pub fn fcm_once(
    data: &Matrix,
    c: usize,
    fuzziness: f64,
    seed: u64,
    opts: &RunOptions,
) -> Result<SoftClustering> {
    fcm_once_traced(data, c, fuzziness, seed, opts).map(|(s, _)| s)
}

/// Best of `opts.restarts` independent fuzzy c-means runs, by objective; ties
/// keep the earliest restart.
pub fn fcm_best_of_restarts(
    data: &Matrix,
    c: usize,
    fuzziness: f64,
    opts: &RunOptions,
) -> Result<SoftClustering> {
    if opts.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let mut best: Option<SoftClustering> = None;
    for restart in 0..opts.restarts {
        let run = fcm_once(data, c, fuzziness, restart_seed(opts.seed, restart as u64), opts)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart ran"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four_points() -> Matrix {
        Matrix::from_rows(&[vec![0.0], vec![2.0], vec![10.0], vec![12.0]]).unwrap()
    }

    fn random_data(seed: u64, n: usize, p: usize) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..p).map(|_| rng.random::<f64>() * 10.0).collect()).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    /// Exhaustive minimum within-cluster sum of squares over all assignments
    /// of n points to k labeled clusters (empty clusters allowed, they just
    /// never win). Oracle for small instances.
    fn brute_force_wcss(data: &Matrix, k: usize) -> f64 {
        let n = data.rows();
        let mut best = f64::INFINITY;
        let mut assignment = vec![0usize; n];
        loop {
            let mut sums = vec![vec![0.0; data.cols()]; k];
            let mut counts = vec![0usize; k];
            for (i, x) in data.iter_rows().enumerate() {
                counts[assignment[i]] += 1;
                for (s, v) in sums[assignment[i]].iter_mut().zip(x) {
                    *s += v;
                }
            }
            let mut obj = 0.0;
            for (i, x) in data.iter_rows().enumerate() {
                let a = assignment[i];
                let mut d = 0.0;
                for (dim, v) in x.iter().enumerate() {
                    let c = sums[a][dim] / counts[a] as f64;
                    d += (v - c) * (v - c);
                }
                obj += d;
            }
            best = best.min(obj);
            // Next assignment in base-k counting order.
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                assignment[pos] += 1;
                if assignment[pos] < k {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn kmeans_two_well_separated_pairs() {
        let data = four_points();
        let opts = RunOptions { seed: 5, ..RunOptions::default() };
        let run = kmeans_best_of_restarts(&data, 2, &opts).unwrap();
        assert!(run.converged);
        assert_eq!(run.objective, brute_force_wcss(&data, 2));
        assert!((run.objective - 4.0).abs() < 1e-12, "objective {}", run.objective);
        let mut centers: Vec<f64> = run.centroids.iter_rows().map(|r| r[0]).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((centers[0] - 1.0).abs() < 1e-12 && (centers[1] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_k_equals_n_is_exact() {
        let run = kmeans_best_of_restarts(&four_points(), 4, &RunOptions::default()).unwrap();
        assert_eq!(run.objective, 0.0);
        let mut counts = vec![0; 4];
        for &a in &run.assignments {
            counts[a] += 1;
        }
        assert_eq!(counts, vec![1, 1, 1, 1]);
    }

    #[test]
    fn kmeans_single_cluster_is_the_global_mean() {
        let run = kmeans_once(&four_points(), 1, 0, &RunOptions::default()).unwrap();
        assert!((run.centroids.row(0)[0] - 6.0).abs() < 1e-12);
        assert!((run.objective - 104.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_rejects_k_beyond_n() {
        let err = kmeans_once(&four_points(), 5, 0, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::KOutOfRange { k: 5, n: 4 }));
    }

    #[test]
    fn single_restart_matches_derived_seed_zero() {
        let data = random_data(11, 40, 2);
        let opts = RunOptions { restarts: 1, seed: 99, ..RunOptions::default() };
        let best = kmeans_best_of_restarts(&data, 3, &opts).unwrap();
        let once = kmeans_once(&data, 3, restart_seed(99, 0), &opts).unwrap();
        assert_eq!(best, once);
    }

    #[test]
    fn kmeans_is_deterministic() {
        let data = random_data(3, 60, 3);
        let opts = RunOptions { seed: 4, ..RunOptions::default() };
        let a = kmeans_best_of_restarts(&data, 4, &opts).unwrap();
        let b = kmeans_best_of_restarts(&data, 4, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_survives_duplicate_heavy_data() {
        // Four distinct values among many duplicates: k = 3 must still yield
        // three non-empty clusters via empty-cluster repair.
        let rows: Vec<Vec<f64>> = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 5.0, 9.0]
            .iter()
            .map(|&v| vec![v])
            .collect();
        let data = Matrix::from_rows(&rows).unwrap();
        for seed in 0..20 {
            let run = kmeans_once(&data, 3, seed, &RunOptions::default()).unwrap();
            let mut counts = vec![0usize; 3];
            for &a in &run.assignments {
                counts[a] += 1;
            }
            assert!(counts.iter().all(|&c| c > 0), "seed {seed}: empty cluster, counts {counts:?}");
        }
    }

    #[test]
    fn fcm_pulls_centroids_to_pair_midpoints() {
        let data = four_points();
        let opts = RunOptions { seed: 21, ..RunOptions::default() };
        let run = fcm_best_of_restarts(&data, 2, 2.0, &opts).unwrap();
        assert!(run.converged);
        let mut centers: Vec<f64> = run.centroids.iter_rows().map(|r| r[0]).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(
            (centers[0] - 1.0).abs() < 0.1 && (centers[1] - 11.0).abs() < 0.1,
            "centroids {centers:?} should sit near 1 and 11"
        );

        // Independent fixed-point oracle: alternate the closed-form updates
        // from a fixed sensible start until the centroids stop moving.
        let (mut a, mut b) = (0.5f64, 11.5f64);
        for _ in 0..10_000 {
            let mut num = [0.0f64; 2];
            let mut den = [0.0f64; 2];
            for &x in &[0.0, 2.0, 10.0, 12.0] {
                let (da, db) = ((x - a).abs(), (x - b).abs());
                let (ua, ub) = if da == 0.0 {
                    (1.0, 0.0)
                } else if db == 0.0 {
                    (0.0, 1.0)
                } else {
                    let r = (da / db).powi(2);
                    (1.0 / (1.0 + r), 1.0 / (1.0 + 1.0 / r))
                };
                num[0] += ua * ua * x;
                den[0] += ua * ua;
                num[1] += ub * ub * x;
                den[1] += ub * ub;
            }
            let (na, nb) = (num[0] / den[0], num[1] / den[1]);
            let moved = (na - a).abs().max((nb - b).abs());
            a = na;
            b = nb;
            if moved < 1e-10 {
                break;
            }
        }
        let mut oracle = [a, b];
        oracle.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((centers[0] - oracle[0]).abs() < 1e-4 && (centers[1] - oracle[1]).abs() < 1e-4);
    }

    #[test]
    fn fcm_membership_matches_closed_form_of_returned_centroids() {
        let data = random_data(17, 50, 2);
        let m = 2.5;
        let run = fcm_best_of_restarts(&data, 3, m, &RunOptions { seed: 1, ..RunOptions::default() })
            .unwrap();
        // Recompute the membership formula from scratch against the returned
        // centroids.
        for (i, x) in data.iter_rows().enumerate() {
            let dists: Vec<f64> =
                run.centroids.iter_rows().map(|v| euclidean_distance(x, v)).collect();
            for j in 0..3 {
                let expected = if dists.contains(&0.0) {
                    f64::from(u8::from(dists.iter().position(|&d| d == 0.0).unwrap() == j))
                } else {
                    let mut denom = 0.0;
                    for l in 0..3 {
                        denom += (dists[j] / dists[l]).powf(2.0 / (m - 1.0));
                    }
                    1.0 / denom
                };
                let got = run.membership.row(i)[j];
                assert!(
                    (got - expected).abs() < 1e-10,
                    "membership[{i}][{j}] = {got}, closed form {expected}"
                );
            }
        }
    }

    #[test]
    fn fcm_point_on_centroid_gets_indicator_row() {
        let centroids = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        let data = Matrix::from_rows(&[vec![3.0, 4.0], vec![1.0, 1.0]]).unwrap();
        let mu = fuzzy_memberships(&data, &centroids, 2.0);
        assert_eq!(mu.row(0), &[0.0, 1.0]);
    }

    #[test]
    fn fcm_equidistant_point_splits_membership_evenly() {
        let centroids = vec![vec![-1.0], vec![1.0]];
        let data = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let mu = fuzzy_memberships(&data, &centroids, 2.0);
        assert!((mu.row(0)[0] - 0.5).abs() < 1e-15 && (mu.row(0)[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fcm_rejects_bad_fuzziness() {
        let data = four_points();
        for m in [1.0, 0.5, f64::NAN, f64::INFINITY] {
            let err = fcm_once(&data, 2, m, 0, &RunOptions::default()).unwrap_err();
            assert!(matches!(err, Error::FuzzinessOutOfRange { .. }), "m = {m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn kmeans_model_is_coherent(seed in any::<u64>(), n in 10usize..60, k in 2usize..6) {
            let data = random_data(seed, n, 2);
            let opts = RunOptions { restarts: 3, seed, ..RunOptions::default() };
            let run = kmeans_best_of_restarts(&data, k, &opts).unwrap();

            // Every cluster non-empty.
            let mut counts = vec![0usize; k];
            for &a in &run.assignments {
                counts[a] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c > 0), "counts {:?}", counts);

            // Assignments are the nearest-centroid map of the stored centroids.
            for (i, x) in data.iter_rows().enumerate() {
                let assigned = squared_distance(x, run.centroids.row(run.assignments[i]));
                for j in 0..k {
                    let d = squared_distance(x, run.centroids.row(j));
                    prop_assert!(
                        assigned <= d || (assigned == d && run.assignments[i] <= j),
                        "point {} assigned to {} but {} is nearer", i, run.assignments[i], j
                    );
                }
            }

            // Objective is recomputable from the stored fields.
            let recomputed: f64 = data
                .iter_rows()
                .zip(&run.assignments)
                .map(|(x, &a)| squared_distance(x, run.centroids.row(a)))
                .sum();
            prop_assert!((recomputed - run.objective).abs() <= 1e-9 * (1.0 + run.objective));
        }

        #[test]
        fn objective_traces_never_increase(seed in any::<u64>(), n in 10usize..50) {
            let data = random_data(seed, n, 3);
            let opts = RunOptions::default();
            let (_, hard_trace) = kmeans_once_traced(&data, 3, seed, &opts).unwrap();
            for w in hard_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "trace {:?}", hard_trace);
            }
            let (soft, soft_trace) = fcm_once_traced(&data, 3, 2.0, seed, &opts).unwrap();
            for w in soft_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "trace {:?}", soft_trace);
            }

            // Membership rows always sum to one.
            for row in soft.membership.iter_rows() {
                let sum: f64 = row.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9, "row sum {}", sum);
            }

            // Soft objective is recomputable from the stored fields.
            let recomputed = soft_objective(
                &data,
                &soft.membership,
                &soft.centroids.iter_rows().map(<[f64]>::to_vec).collect::<Vec<_>>(),
                soft.fuzziness,
            );
            prop_assert!((recomputed - soft.objective).abs() <= 1e-9 * (1.0 + soft.objective));
        }
    }
}
