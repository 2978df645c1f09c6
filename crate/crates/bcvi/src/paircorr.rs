//! Streaming correlation between point-pair distances and representative-pair
//! distances.
//!
//! The correlation underlying the slope-based indices compares, over all
//! unordered point pairs, the distance between two points with the distance
//! between their cluster representatives. The number of pairs grows
//! quadratically (n = 7225 already means ~26 million pairs), so everything
//! here works in a single pass with O(1) memory: five compensated sufficient
//! sums, with both streams shifted by the first pair's values to keep the
//! final cancellation benign.

use crate::clustering::{HardClustering, SoftClustering};
use crate::error::{Error, Result};
use crate::matrix::{euclidean_distance, Matrix};

/// Per-point representative, e.g. the centroid of the point's cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeMap {
    points: Matrix,
}

impl RepresentativeMap {
    /// Use the rows of `points` directly as representatives.
    pub fn new(points: Matrix) -> Self {
        RepresentativeMap { points }
    }

    /// Each point is represented by the centroid of its assigned cluster.
    pub fn from_hard_clustering(clustering: &HardClustering) -> Self {
        let rows: Vec<Vec<f64>> = clustering
            .assignments
            .iter()
            .map(|&a| clustering.centroids.row(a).to_vec())
            .collect();
        RepresentativeMap::new(Matrix::from_rows(&rows).expect("centroid rows are equal length"))
    }

    /// Each point is represented by its membership-weighted centroid blend
    /// with exponent `gamma`: the weights are the point's memberships raised
    /// to `gamma` and renormalized. Crisp memberships therefore reduce this
    /// to [`RepresentativeMap::from_hard_clustering`] exactly.
    pub fn from_soft_clustering(clustering: &SoftClustering, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
        }
        let p = clustering.centroids.cols();
        let mut rows = Vec::with_capacity(clustering.membership.rows());
        for mu in clustering.membership.iter_rows() {
            let mut rep = vec![0.0; p];
            let mut total = 0.0;
            for (&w, centroid) in mu.iter().zip(clustering.centroids.iter_rows()) {
                let wg = w.powf(gamma);
                total += wg;
                for (r, v) in rep.iter_mut().zip(centroid) {
                    *r += wg * v;
                }
            }
            for r in rep.iter_mut() {
                *r /= total;
            }
            rows.push(rep);
        }
        Ok(RepresentativeMap::new(Matrix::from_rows(&rows)?))
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }
}

/// Correlation over point pairs, with a degeneracy marker instead of an
/// error so index series stay total on flat inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrValue {
    /// Pearson correlation clamped to [-1, 1]; 0 when `degenerate`.
    pub value: f64,
    /// True when either distance stream had zero variance.
    pub degenerate: bool,
    /// Number of unordered pairs the streams ran over.
    pub pairs: u64,
}

/// Kahan-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum
    }
}

/// Pearson correlation between pairwise point distances and pairwise
/// representative distances, streamed over all unordered pairs in one pass.
///
/// Zero variance in either stream yields `value = 0` with the degenerate
/// flag set rather than an error.
pub fn pair_distance_correlation(data: &Matrix, reps: &RepresentativeMap) -> Result<CorrValue> {
    let n = data.rows();
    if n < 3 {
        return Err(Error::TooFewPoints { n, min: 3 });
    }
    if reps.points.rows() != n {
        return Err(Error::DimensionMismatch { left: reps.points.rows(), right: n });
    }
    if reps.points.cols() != data.cols() {
        return Err(Error::DimensionMismatch { left: reps.points.cols(), right: data.cols() });
    }

    // Shifting both streams by their first value makes the sums small
    // relative to the second moments, so the textbook combination below
    // loses no meaningful precision; the correlation itself is
    // shift-invariant.
    let shift_a = euclidean_distance(data.row(0), data.row(1));
    let shift_b = euclidean_distance(reps.points.row(0), reps.points.row(1));

    let mut sum_a = Compensated::default();
    let mut sum_b = Compensated::default();
    let mut sum_aa = Compensated::default();
    let mut sum_bb = Compensated::default();
    let mut sum_ab = Compensated::default();
    for i in 0..n {
        let xi = data.row(i);
        let ri = reps.points.row(i);
        for j in (i + 1)..n {
            let a = euclidean_distance(xi, data.row(j)) - shift_a;
            let b = euclidean_distance(ri, reps.points.row(j)) - shift_b;
            sum_a.add(a);
            sum_b.add(b);
            sum_aa.add(a * a);
            sum_bb.add(b * b);
            sum_ab.add(a * b);
        }
    }

    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let m = pairs as f64;
    let var_a = sum_aa.value() - sum_a.value() * sum_a.value() / m;
    let var_b = sum_bb.value() - sum_b.value() * sum_b.value() / m;
    if var_a <= 0.0 || var_b <= 0.0 {
        return Ok(CorrValue { value: 0.0, degenerate: true, pairs });
    }
    let cov = sum_ab.value() - sum_a.value() * sum_b.value() / m;
    let value = (cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrValue { value, degenerate: false, pairs })
}

/// Dispersion of the distances from each point to the global centroid:
/// sample standard deviation divided by the range. This is the k = 1 entry
/// of a correlation profile, where no pairing structure exists yet.
pub fn baseline_dispersion(data: &Matrix) -> Result<f64> {
    let n = data.rows();
    if n < 2 {
        return Err(Error::TooFewPoints { n, min: 2 });
    }
    let center = data.mean_row();
    let dists: Vec<f64> = data.iter_rows().map(|x| euclidean_distance(x, &center)).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut mean = Compensated::default();
    for &d in &dists {
        lo = lo.min(d);
        hi = hi.max(d);
        mean.add(d);
    }
    if hi == lo {
        return Err(Error::IndexUndefined(
            "every point is equidistant from the global centroid".into(),
        ));
    }
    let mean = mean.value() / n as f64;
    let mut ss = Compensated::default();
    for &d in &dists {
        ss.add((d - mean) * (d - mean));
    }
    let sd = (ss.value() / (n as f64 - 1.0)).sqrt();
    Ok(sd / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize, scale: f64) -> Matrix {
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..p).map(|_| rng.random::<f64>() * scale).collect()).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn identity_representatives_give_perfect_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = random_matrix(&mut rng, 20, 3, 5.0);
        let corr = pair_distance_correlation(&data, &RepresentativeMap::new(data.clone())).unwrap();
        assert!(!corr.degenerate);
        assert_eq!(corr.pairs, 190);
        assert!((corr.value - 1.0).abs() < 1e-12, "corr {}", corr.value);
        assert!(corr.value <= 1.0, "clamp must hold");
    }

    #[test]
    fn constant_representatives_are_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = random_matrix(&mut rng, 15, 2, 5.0);
        let reps = RepresentativeMap::new(
            Matrix::from_rows(&vec![vec![1.0, 2.0]; 15]).unwrap(),
        );
        let corr = pair_distance_correlation(&data, &reps).unwrap();
        assert!(corr.degenerate);
        assert_eq!(corr.value, 0.0);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let data = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let err = pair_distance_correlation(&data, &RepresentativeMap::new(data.clone()))
            .unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { n: 2, min: 3 }));
    }

    #[test]
    fn mismatched_representatives_are_rejected() {
        let data = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let reps = RepresentativeMap::new(Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap());
        assert!(pair_distance_correlation(&data, &reps).is_err());
    }

    #[test]
    fn baseline_dispersion_hand_value() {
        // Points 0, 1, 3 on a line: centroid 4/3, distances (4/3, 1/3, 5/3),
        // sample standard deviation sqrt(13/27), range 4/3.
        let data = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let got = baseline_dispersion(&data).unwrap();
        let expected = (13.0f64 / 27.0).sqrt() * 0.75;
        assert!((got - expected).abs() < 1e-12, "got {got}, expected {expected}");
        assert!((got - 0.520416).abs() < 1e-6);
    }

    #[test]
    fn baseline_dispersion_rejects_equidistant_points() {
        // Vertices of a square: all at distance 1 from the centroid.
        let data = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ])
        .unwrap();
        assert!(matches!(baseline_dispersion(&data).unwrap_err(), Error::IndexUndefined(_)));
    }

    #[test]
    fn crisp_soft_representatives_match_hard_representatives() {
        use crate::clustering::{HardClustering, SoftClustering};
        let centroids = Matrix::from_rows(&[vec![0.0, 0.0], vec![10.0, 10.0]]).unwrap();
        let assignments = vec![0, 0, 1, 1];
        let membership = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let hard = HardClustering {
            k: 2,
            assignments,
            centroids: centroids.clone(),
            objective: 0.0,
            iterations: 0,
            converged: true,
        };
        let soft = SoftClustering {
            c: 2,
            membership,
            centroids,
            fuzziness: 2.0,
            objective: 0.0,
            iterations: 0,
            converged: true,
        };
        let from_hard = RepresentativeMap::from_hard_clustering(&hard);
        for gamma in [1.0, 2.0, 7.5] {
            let from_soft = RepresentativeMap::from_soft_clustering(&soft, gamma).unwrap();
            assert_eq!(from_soft, from_hard, "gamma = {gamma}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn streaming_matches_naive_two_pass(seed in any::<u64>(), n in 3usize..40, p in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_matrix(&mut rng, n, p, 10.0);
            let reps = random_matrix(&mut rng, n, p, 10.0);
            let got = pair_distance_correlation(&data, &RepresentativeMap::new(reps.clone())).unwrap();

            let mut a = Vec::new();
            let mut b = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    a.push(euclidean_distance(data.row(i), data.row(j)));
                    b.push(euclidean_distance(reps.row(i), reps.row(j)));
                }
            }
            let expected = naive_pearson(&a, &b);
            prop_assert!(!got.degenerate);
            prop_assert!((got.value - expected).abs() < 1e-10,
                "streaming {} vs naive {}", got.value, expected);
        }
    }
}
