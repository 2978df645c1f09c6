//! Datasets: CSV loading/saving, synthetic Gaussian/uniform mixtures, and
//! label-vs-clustering accuracy.
//!
//! Labels are arbitrary integers in the outside world; internally they are
//! compacted to contiguous ids `0..L` (sorted by original value) so the rest
//! of the crate can index with them directly.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A point set with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    points: Matrix,
    /// Compacted label ids in `0..label_count`, one per point.
    labels: Option<Vec<usize>>,
    label_count: usize,
}

impl Dataset {
    /// Validate and build a dataset. `labels`, when present, may use arbitrary
    /// integer values; they are compacted to `0..L` in ascending value order.
    pub fn new(name: impl Into<String>, points: Matrix, labels: Option<&[i64]>) -> Result<Self> {
        if points.rows() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 points, got {}",
                points.rows()
            )));
        }
        if points.cols() == 0 {
            return Err(Error::InvalidDataset("points have no coordinates".into()));
        }
        if !points.is_finite() {
            return Err(Error::InvalidDataset("coordinates must be finite".into()));
        }
        let (labels, label_count) = match labels {
            None => (None, 0),
            Some(raw) => {
                if raw.len() != points.rows() {
                    return Err(Error::InvalidDataset(format!(
                        "{} labels for {} points",
                        raw.len(),
                        points.rows()
                    )));
                }
                let (compact, count) = compact_labels(raw);
                (Some(compact), count)
            }
        };
        Ok(Dataset { name: name.into(), points, labels, label_count })
    }

    /// Convenience constructor from plain rows, mostly for tests.
    pub fn from_points(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        Dataset::new(name, Matrix::from_rows(rows)?, None)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.points.rows()
    }

    /// Number of coordinates per point.
    pub fn p(&self) -> usize {
        self.points.cols()
    }

    /// Compacted labels (`0..label_count`), if the dataset is labeled.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct label classes (0 for unlabeled data).
    pub fn label_count(&self) -> usize {
        self.label_count
    }

    /// Write as CSV with a `x1..xp` header (plus `label` when labeled).
    /// Coordinates are written in shortest round-trip form, so a subsequent
    /// [`load_csv`] reproduces them exactly; labels are written 1-based.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for d in 0..self.p() {
            if d > 0 {
                out.push(',');
            }
            out.push_str(&format!("x{}", d + 1));
        }
        if self.labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for (i, row) in self.points.iter_rows().enumerate() {
            for (d, x) in row.iter().enumerate() {
                if d > 0 {
                    out.push(',');
                }
                out.push_str(&x.to_string());
            }
            if let Some(labels) = &self.labels {
                out.push_str(&format!(",{}", labels[i] + 1));
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Map arbitrary integer labels to contiguous ids `0..L`, assigning ids in
/// ascending order of the original values.
fn compact_labels(raw: &[i64]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<i64> = raw.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let compact = raw
        .iter()
        .map(|v| distinct.binary_search(v).expect("value came from this list"))
        .collect();
    (compact, distinct.len())
}

/// Load a CSV of numeric columns, auto-detecting an optional header row.
///
/// The first non-blank line is treated as a header exactly when none of its
/// fields parse as a finite number; a mixed row (some numeric cells) is data,
/// so a stray text cell in it is reported as an error rather than silently
/// swallowing the row as a header. `label_column`, when given, names the
/// header column holding integer class labels; every other column is a
/// coordinate. Error messages use 1-based file line numbers (a header line
/// counts) and 1-based columns.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    // (1-based line number, line) with blank lines dropped.
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let Some(&(_, first_line)) = lines.first() else {
        return Err(Error::EmptyFile { path: path.into() });
    };

    let first_fields: Vec<&str> = first_line.split(',').collect();
    let width = first_fields.len();
    let has_header = first_fields.iter().all(|f| !is_finite_number(f));
    let header: Vec<String> = if has_header {
        first_fields.iter().map(|f| f.trim().to_string()).collect()
    } else {
        Vec::new()
    };

    let label_idx = match label_column {
        None => None,
        Some(name) => {
            let idx = header.iter().position(|h| h == name).ok_or_else(|| {
                Error::MissingLabelColumn { path: path.into(), name: name.to_string() }
            })?;
            Some(idx)
        }
    };

    let data_lines = if has_header { &lines[1..] } else { &lines[..] };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(data_lines.len());
    let mut labels: Vec<i64> = Vec::new();
    for &(line_no, line) in data_lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::RaggedRow {
                path: path.into(),
                row: line_no,
                expected: width,
                found: fields.len(),
            });
        }
        let mut row = Vec::with_capacity(width - usize::from(label_idx.is_some()));
        for (col, cell) in fields.iter().enumerate() {
            let value = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(
                || Error::NonNumericCell {
                    path: path.into(),
                    row: line_no,
                    col: col + 1,
                    cell: cell.trim().to_string(),
                },
            )?;
            if label_idx == Some(col) {
                if value.fract() != 0.0 || value.abs() > i64::MAX as f64 {
                    return Err(Error::NonIntegerLabel { path: path.into(), row: line_no, value });
                }
                labels.push(value as i64);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }

    let name = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(name, Matrix::from_rows(&rows)?, label_idx.map(|_| labels.as_slice()))
}

fn is_finite_number(field: &str) -> bool {
    field.trim().parse::<f64>().map(|v| v.is_finite()).unwrap_or(false)
}

/// Shape of one mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentShape {
    /// Independent per-axis normal noise; `spread` holds standard deviations.
    Gaussian,
    /// Axis-aligned box; `spread` holds half-widths.
    UniformBox,
}

/// One component of a synthetic mixture.
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    /// Relative weight; the full weight vector is normalized internally.
    pub weight: f64,
    pub center: Vec<f64>,
    /// Per-axis scale, strictly positive (standard deviation or half-width).
    pub spread: Vec<f64>,
    pub shape: ComponentShape,
}

/// Specification of a synthetic mixture dataset.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub name: String,
    pub components: Vec<MixtureComponent>,
    pub total_n: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidMixture("no components".into()));
        }
        if self.total_n < self.components.len() {
            return Err(Error::InvalidMixture(format!(
                "total-n = {} is smaller than the number of components ({})",
                self.total_n,
                self.components.len()
            )));
        }
        let p = self.components[0].center.len();
        if p == 0 {
            return Err(Error::InvalidMixture("component centers have no coordinates".into()));
        }
        for (i, comp) in self.components.iter().enumerate() {
            let label = i + 1;
            if !(comp.weight.is_finite() && comp.weight > 0.0) {
                return Err(Error::InvalidMixture(format!(
                    "component {label}: weight must be positive, got {}",
                    comp.weight
                )));
            }
            if comp.center.len() != p || comp.spread.len() != p {
                return Err(Error::InvalidMixture(format!(
                    "component {label}: center/spread must all have {p} coordinates"
                )));
            }
            if comp.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMixture(format!(
                    "component {label}: center coordinates must be finite"
                )));
            }
            if comp.spread.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(Error::InvalidMixture(format!(
                    "component {label}: spread values must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Split `total_n` points across components proportionally to their weights.
/// Deterministic: floors plus largest-remainder rounding (ties to the lower
/// index), then every component is topped up to at least one point.
fn apportion_counts(weights: &[f64], total_n: usize) -> Vec<usize> {
    let wsum: f64 = weights.iter().sum();
    let ideals: Vec<f64> = weights.iter().map(|w| w / wsum * total_n as f64).collect();
    let mut counts: Vec<usize> = ideals.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideals[a] - ideals[a].floor();
        let fb = ideals[b] - ideals[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total_n - assigned) {
        counts[i] += 1;
    }
    // Guarantee every component appears (total_n >= components is validated).
    while counts.contains(&0) {
        let zero = counts.iter().position(|&c| c == 0).unwrap();
        let donor = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
        counts[donor] -= 1;
        counts[zero] += 1;
    }
    counts
}

/// Draw a labeled dataset from a mixture specification. Fully deterministic
/// for a given spec: the per-component point counts are apportioned from the
/// weights and all coordinates come from one seeded stream.
pub fn generate_mixture(spec: &MixtureSpec) -> Result<Dataset> {
    spec.validate()?;
    let weights: Vec<f64> = spec.components.iter().map(|c| c.weight).collect();
    let counts = apportion_counts(&weights, spec.total_n);
    let p = spec.components[0].center.len();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(spec.total_n * p);
    let mut labels = Vec::with_capacity(spec.total_n);
    for (idx, (comp, &count)) in spec.components.iter().zip(&counts).enumerate() {
        for _ in 0..count {
            for d in 0..p {
                let x = match comp.shape {
                    ComponentShape::Gaussian => {
                        let z: f64 = rng.sample(StandardNormal);
                        comp.center[d] + comp.spread[d] * z
                    }
                    ComponentShape::UniformBox => {
                        comp.center[d] + comp.spread[d] * (2.0 * rng.random::<f64>() - 1.0)
                    }
                };
                data.push(x);
            }
            labels.push(idx as i64 + 1);
        }
    }
    Dataset::new(spec.name.clone(), Matrix::new(spec.total_n, p, data)?, Some(&labels))
}

/// Fraction of points whose cluster agrees with their label under the best
/// one-to-one matching between label classes and clusters, computed exactly
/// on the class-by-cluster contingency table.
///
/// Both inputs may use arbitrary ids; they are compacted internally, so the
/// result is invariant under relabeling either side.
pub fn clustering_accuracy(labels: &[usize], assignments: &[usize]) -> Result<f64> {
    if labels.len() != assignments.len() {
        return Err(Error::LengthMismatch { left: labels.len(), right: assignments.len() });
    }
    if labels.is_empty() {
        return Err(Error::InvalidDataset("accuracy inputs are empty".into()));
    }
    let raw_l: Vec<i64> = labels.iter().map(|&v| v as i64).collect();
    let raw_a: Vec<i64> = assignments.iter().map(|&v| v as i64).collect();
    let (l_ids, l_count) = compact_labels(&raw_l);
    let (a_ids, a_count) = compact_labels(&raw_a);

    let mut table = vec![vec![0i64; a_count]; l_count];
    for (&l, &a) in l_ids.iter().zip(&a_ids) {
        table[l][a] += 1;
    }
    let matched = max_assignment_total(&table);
    Ok(matched as f64 / labels.len() as f64)
}

/// Maximum total weight of an injective row-to-column matching on a
/// nonnegative table (Kuhn-Munkres with potentials, O(rows^2 * cols)).
fn max_assignment_total(table: &[Vec<i64>]) -> i64 {
    let (r, c) = (table.len(), table[0].len());
    // The algorithm wants rows <= cols; matching is symmetric, so transpose.
    if r > c {
        let mut t = vec![vec![0i64; r]; c];
        for (i, row) in table.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t[j][i] = v;
            }
        }
        return max_assignment_total(&t);
    }
    const INF: i64 = i64::MAX / 4;
    let cost = |i: usize, j: usize| -table[i][j]; // maximize = minimize negated
    // 1-based arrays with 0 as the sentinel row/column.
    let mut u = vec![0i64; r + 1];
    let mut v = vec![0i64; c + 1];
    let mut matched_row = vec![0usize; c + 1]; // column j -> row matched to it
    let mut way = vec![0usize; c + 1];
    for i in 1..=r {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; c + 1];
        let mut used = vec![false; c + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=c {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=c {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Walk the augmenting path back to the start.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }
    let mut total = 0i64;
    for j in 1..=c {
        if matched_row[j] != 0 {
            total += table[matched_row[j] - 1][j - 1];
        }
    }
    total
}
