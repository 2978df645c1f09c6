//! Shared cluster-validity-index machinery: series over a k range, preferred
//! directions, and the slope-based resolution of correlation profiles.
//!
//! The correlation-driven indices (the hard and soft slope indices) both
//! start from a profile of correlation values over k = 1..K+1 and pass it
//! through the same two transforms:
//!
//! * the **slope ratio** at k compares the correlation gain when going from
//!   k-1 to k clusters against the gain from k to k+1 (relative to the
//!   remaining headroom below 1), and
//! * the **slope difference** subtracts those normalized gains instead.
//!
//! The ratio's denominator clamps negative gains to zero, so it routinely
//! divides by zero; the resolution rules below turn the resulting infinities
//! back into finite, comparable scores.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Whether larger or smaller index values indicate better clusterings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Larger values are better ("condition A").
    LargerBetter,
    /// Smaller values are better ("condition B").
    SmallerBetter,
}

impl Direction {
    /// Short code used in reports: "A" for larger-better, "B" for
    /// smaller-better.
    pub fn code(self) -> &'static str {
        match self {
            Direction::LargerBetter => "A",
            Direction::SmallerBetter => "B",
        }
    }
}

/// The six supported validity indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    /// Davies-Bouldin (hard, smaller better).
    Db,
    /// STR dispersion-gain index (hard, larger better).
    Str,
    /// Slope-ratio correlation index on hard clusterings (larger better).
    Wi,
    /// Xie-Beni (soft, smaller better).
    Xb,
    /// KWON2 (soft, smaller better).
    Kwon2,
    /// Slope-ratio correlation index on soft clusterings (larger better).
    Wp,
}

impl IndexKind {
    pub const ALL: [IndexKind; 6] =
        [IndexKind::Db, IndexKind::Str, IndexKind::Wi, IndexKind::Xb, IndexKind::Kwon2, IndexKind::Wp];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Db => "db",
            IndexKind::Str => "str",
            IndexKind::Wi => "wi",
            IndexKind::Xb => "xb",
            IndexKind::Kwon2 => "kwon2",
            IndexKind::Wp => "wp",
        }
    }

    /// The direction is a fixed property of each index.
    pub fn direction(self) -> Direction {
        match self {
            IndexKind::Str | IndexKind::Wi | IndexKind::Wp => Direction::LargerBetter,
            IndexKind::Db | IndexKind::Xb | IndexKind::Kwon2 => Direction::SmallerBetter,
        }
    }

    /// True for indices computed on fuzzy clusterings.
    pub fn requires_soft(self) -> bool {
        matches!(self, IndexKind::Xb | IndexKind::Kwon2 | IndexKind::Wp)
    }
}

impl std::str::FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|kind| kind.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown index {s:?} (expected one of db, str, wi, xb, kwon2, wp)")))
    }
}

/// Finite index values over a contiguous k range starting at 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CviSeries {
    index: IndexKind,
    values: BTreeMap<usize, f64>,
    degenerate_ks: Vec<usize>,
}

impl CviSeries {
    /// Validate and build a series: keys must be contiguous from 2 with at
    /// least two entries, and every value must be finite.
    pub fn new(index: IndexKind, values: BTreeMap<usize, f64>) -> Result<Self> {
        if values.len() < 2 || *values.keys().next().unwrap_or(&0) != 2 {
            return Err(Error::InvalidSeries(format!(
                "{} series must cover k = 2..K with K >= 3",
                index.name()
            )));
        }
        for (offset, (&k, &v)) in values.iter().enumerate() {
            if k != offset + 2 {
                return Err(Error::InvalidSeries(format!(
                    "{} series skips k = {}",
                    index.name(),
                    offset + 2
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "{} series value at k = {k} is not finite",
                    index.name()
                )));
            }
        }
        Ok(CviSeries { index, values, degenerate_ks: Vec::new() })
    }

    /// Attach the list of k values whose underlying correlation was
    /// degenerate (zero variance, recorded as 0 in the profile).
    pub fn with_degenerate_ks(mut self, ks: Vec<usize>) -> Self {
        self.degenerate_ks = ks;
        self
    }

    pub fn index(&self) -> IndexKind {
        self.index
    }

    pub fn direction(&self) -> Direction {
        self.index.direction()
    }

    pub fn values(&self) -> &BTreeMap<usize, f64> {
        &self.values
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        self.values.get(&k).copied()
    }

    /// Smallest k in the series (always 2).
    pub fn k_min(&self) -> usize {
        2
    }

    /// Largest k in the series.
    pub fn k_max(&self) -> usize {
        *self.values.keys().next_back().expect("series is non-empty")
    }

    /// k values whose underlying correlation was degenerate.
    pub fn degenerate_ks(&self) -> &[usize] {
        &self.degenerate_ks
    }
}

/// Denominators (and numerators in the 0/0 case) smaller than this count as
/// zero in the slope ratio.
const ZERO_TOLERANCE: f64 = 1e-15;

/// Correlation values over k = 1..K+1, the raw material for the slope-based
/// indices. Entry 1 is the baseline dispersion; entries 2..K+1 are pair
/// correlations of the fitted clusterings.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    values: BTreeMap<usize, f64>,
    degenerate_ks: Vec<usize>,
}

impl CorrelationProfile {
    /// Validate and build a profile: keys contiguous from 1, at least 4
    /// entries (so the resolved series has at least two values), all finite.
    pub fn new(values: BTreeMap<usize, f64>) -> Result<Self> {
        if values.len() < 4 || *values.keys().next().unwrap_or(&0) != 1 {
            return Err(Error::InvalidSeries(
                "correlation profile must cover k = 1..K+1 with K >= 3".into(),
            ));
        }
        for (offset, (&k, &v)) in values.iter().enumerate() {
            if k != offset + 1 {
                return Err(Error::InvalidSeries(format!("correlation profile skips k = {}", offset + 1)));
            }
            if !v.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "correlation profile value at k = {k} is not finite"
                )));
            }
        }
        Ok(CorrelationProfile { values, degenerate_ks: Vec::new() })
    }

    /// Record which k had a degenerate (zero-variance) correlation.
    pub fn with_degenerate_ks(mut self, ks: Vec<usize>) -> Self {
        self.degenerate_ks = ks;
        self
    }

    pub fn values(&self) -> &BTreeMap<usize, f64> {
        &self.values
    }

    pub fn degenerate_ks(&self) -> &[usize] {
        &self.degenerate_ks
    }

    /// Largest k with a reported index value: one less than the profile end.
    pub fn k_max(&self) -> usize {
        self.values.keys().next_back().expect("profile is non-empty") - 1
    }

    fn triple(&self, k: usize) -> (f64, f64, f64) {
        (self.values[&(k - 1)], self.values[&k], self.values[&(k + 1)])
    }

    /// Resolve the profile into finite index values over k = 2..K.
    ///
    /// The slope ratio is computed at every k; the infinities it produces are
    /// then folded back onto the finite scale:
    ///
    /// 1. no +inf present: every -inf becomes the minimum finite ratio;
    /// 2. some +inf present: +inf becomes the maximum finite ratio, -inf the
    ///    minimum, and the slope difference is added at every k to break the
    ///    resulting ties;
    /// 3. no finite ratio at all: governed by `fallback` — with
    ///    [`AllInfinite::SlopeDifference`] the slope difference alone is the
    ///    index, with [`AllInfinite::Undefined`] this is an error.
    pub fn resolve(&self, fallback: AllInfinite) -> Result<BTreeMap<usize, f64>> {
        let k_max = self.k_max();
        let ks: Vec<usize> = (2..=k_max).collect();
        let ratios: Vec<f64> = ks
            .iter()
            .map(|&k| {
                let (prev, cur, next) = self.triple(k);
                slope_ratio(prev, cur, next)
            })
            .collect();

        let finite: Vec<f64> = ratios.iter().copied().filter(|v| v.is_finite()).collect();
        let resolved: Vec<f64> = if finite.is_empty() {
            match fallback {
                AllInfinite::Undefined => {
                    return Err(Error::IndexUndefined(
                        "the slope ratio is infinite at every k".into(),
                    ))
                }
                AllInfinite::SlopeDifference => ks
                    .iter()
                    .map(|&k| {
                        let (prev, cur, next) = self.triple(k);
                        slope_difference(prev, cur, next)
                    })
                    .collect(),
            }
        } else {
            let min_finite = finite.iter().copied().fold(f64::INFINITY, f64::min);
            let max_finite = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let has_pos_inf = ratios.contains(&f64::INFINITY);
            ks.iter()
                .zip(&ratios)
                .map(|(&k, &ratio)| {
                    if !has_pos_inf {
                        // Only -inf needs replacing; ties are acceptable here.
                        if ratio.is_finite() {
                            ratio
                        } else {
                            min_finite
                        }
                    } else {
                        let base = if ratio.is_finite() {
                            ratio
                        } else if ratio > 0.0 {
                            max_finite
                        } else {
                            min_finite
                        };
                        let (prev, cur, next) = self.triple(k);
                        base + slope_difference(prev, cur, next)
                    }
                })
                .collect()
        };

        let mut out = BTreeMap::new();
        for (&k, &v) in ks.iter().zip(&resolved) {
            if !v.is_finite() {
                return Err(Error::IndexUndefined(format!(
                    "slope resolution produced a non-finite value at k = {k}"
                )));
            }
            out.insert(k, v);
        }
        Ok(out)
    }
}

/// What to do when the slope ratio is infinite at every k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllInfinite {
    /// Fail: the hard-clustering slope index has no fallback.
    Undefined,
    /// Use the slope difference alone, as the soft-clustering index does.
    SlopeDifference,
}

/// Ratio of the normalized correlation gain at k to the (clamped) gain at
/// k+1. Zero denominators map to signed infinity by the numerator's sign,
/// and to 0 when the numerator is zero as well.
fn slope_ratio(prev: f64, cur: f64, next: f64) -> f64 {
    let numerator = (cur - prev) * (1.0 - cur);
    let denominator = f64::max(0.0, next - cur) * (1.0 - prev);
    if denominator.abs() < ZERO_TOLERANCE {
        if numerator.abs() < ZERO_TOLERANCE {
            0.0
        } else if numerator > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        numerator / denominator
    }
}

/// Difference of the normalized correlation gains at k and k+1.
fn slope_difference(prev: f64, cur: f64, next: f64) -> f64 {
    (cur - prev) / (1.0 - prev) - (next - cur) / (1.0 - cur)
}
