//! Bayesian layer: turn a validity-index series into a ratio vector, update a
//! Dirichlet or generalized-Dirichlet prior over the candidate cluster
//! counts, and report closed-form posterior means, variances, and rankings.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::cvi::{CviSeries, Direction};
use crate::error::{Error, Result};

/// Natural log of the Gamma function (Lanczos approximation, g = 7).
///
/// Accurate to roughly 1e-14 relative error over the positive axis, which is
/// where every caller in this crate lives; negative non-integer arguments go
/// through the reflection formula for completeness.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    const BASE: f64 = 0.999_999_999_999_809_9;

    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = BASE;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Normalized index ratios r_k for k = 2..=K, carrying the data size that
/// scales the prior update.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioVector {
    values: BTreeMap<usize, f64>,
    n: usize,
    degenerate: bool,
}

impl RatioVector {
    /// Build from explicit ratios keyed by contiguous k = 2..=K. Ratios must
    /// be nonnegative, finite, and sum to 1 within 1e-12.
    pub fn new(values: BTreeMap<usize, f64>, n: usize) -> Result<Self> {
        let Some((&lo, _)) = values.first_key_value() else {
            return Err(Error::InvalidSeries("ratio vector is empty".into()));
        };
        let (&hi, _) = values.last_key_value().expect("non-empty map");
        if lo != 2 || values.len() != hi - 1 {
            return Err(Error::InvalidSeries(
                "ratio vector keys must cover k = 2..=K contiguously".into(),
            ));
        }
        if values.len() < 2 {
            return Err(Error::InvalidSeries("ratio vector needs at least two entries".into()));
        }
        for (&k, &r) in &values {
            if !r.is_finite() {
                return Err(Error::NonFiniteSeries { k });
            }
            if r < 0.0 {
                return Err(Error::InvalidSeries(format!("negative ratio {r} at k = {k}")));
            }
        }
        let sum: f64 = values.values().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSeries(format!("ratios sum to {sum}, expected 1")));
        }
        Ok(Self { values, n, degenerate: false })
    }

    /// Mark the vector as coming from an all-equal (rank-free) series.
    pub fn with_degenerate(mut self, degenerate: bool) -> Self {
        self.degenerate = degenerate;
        self
    }

    pub fn values(&self) -> &BTreeMap<usize, f64> {
        &self.values
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        self.values.get(&k).copied()
    }

    /// Number of clustered points behind the series.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn k_max(&self) -> usize {
        *self.values.last_key_value().expect("non-empty map").0
    }
}

/// Normalize a CVI series into ratios: values are anchored at the series
/// minimum when larger is better and at the maximum when smaller is better,
/// then scaled to sum to 1. An all-equal series carries no ranking
/// information and becomes the uniform vector with the degenerate flag set.
pub fn compute_ratios(series: &CviSeries, n: usize) -> Result<RatioVector> {
    for (&k, &v) in series.values() {
        if !v.is_finite() {
            return Err(Error::NonFiniteSeries { k });
        }
    }
    let raw: Vec<f64> = series.values().values().copied().collect();
    let shifted: Vec<f64> = match series.direction() {
        Direction::LargerBetter => {
            let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
            raw.iter().map(|v| v - min).collect()
        }
        Direction::SmallerBetter => {
            let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            raw.iter().map(|v| max - v).collect()
        }
    };
    let total: f64 = shifted.iter().sum();
    let count = shifted.len();
    let (ratios, degenerate) = if total == 0.0 {
        (vec![1.0 / count as f64; count], true)
    } else {
        (shifted.iter().map(|s| s / total).collect(), false)
    };
    let values = series.values().keys().copied().zip(ratios).collect();
    Ok(RatioVector::new(values, n)?.with_degenerate(degenerate))
}

/// Named prior profile: which band of cluster counts the prior favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorProfile {
    /// Mass on k = 2..=4.
    Small,
    /// Mass on k = 5..=7.
    Moderate,
    /// Mass on k = 8..=10.
    Large,
}

impl PriorProfile {
    pub fn name(self) -> &'static str {
        match self {
            PriorProfile::Small => "small",
            PriorProfile::Moderate => "moderate",
            PriorProfile::Large => "large",
        }
    }

    /// The favored band of cluster counts.
    pub fn k_range(self) -> RangeInclusive<usize> {
        match self {
            PriorProfile::Small => 2..=4,
            PriorProfile::Moderate => 5..=7,
            PriorProfile::Large => 8..=10,
        }
    }
}

impl FromStr for PriorProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(PriorProfile::Small),
            "moderate" => Ok(PriorProfile::Moderate),
            "large" => Ok(PriorProfile::Large),
            other => Err(Error::Config(format!(
                "unknown prior profile '{other}' (expected small, moderate, or large)"
            ))),
        }
    }
}

impl fmt::Display for PriorProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn validate_positive(params: &BTreeMap<usize, f64>, what: &str) -> Result<()> {
    for (&k, &a) in params {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidPrior(format!("{what} at k = {k} must be positive, got {a}")));
        }
    }
    Ok(())
}

fn validate_contiguous(params: &BTreeMap<usize, f64>, what: &str) -> Result<usize> {
    let Some((&lo, _)) = params.first_key_value() else {
        return Err(Error::InvalidPrior(format!("{what} map is empty")));
    };
    let (&hi, _) = params.last_key_value().expect("non-empty map");
    if lo != 2 || params.len() != hi - 1 {
        return Err(Error::InvalidPrior(format!("{what} keys must be contiguous from k = 2")));
    }
    Ok(hi)
}

/// Dirichlet prior over (p_2, ..., p_K): one positive weight per candidate
/// cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    alphas: BTreeMap<usize, f64>,
}

impl DirichletPrior {
    /// Explicit weights keyed by contiguous k = 2..=K with K >= 3.
    pub fn new(alphas: BTreeMap<usize, f64>) -> Result<Self> {
        let hi = validate_contiguous(&alphas, "alpha")?;
        if hi < 3 {
            return Err(Error::InvalidPrior("a Dirichlet prior needs K >= 3".into()));
        }
        validate_positive(&alphas, "alpha")?;
        Ok(Self { alphas })
    }

    /// Weights listed in order for k = 2, 3, ..., K.
    pub fn from_list(alphas: &[f64]) -> Result<Self> {
        Self::new((2..).zip(alphas.iter().copied()).collect())
    }

    /// The same weight at every k.
    pub fn flat(k_max: usize, alpha: f64) -> Result<Self> {
        if k_max < 3 {
            return Err(Error::InvalidPrior("a Dirichlet prior needs K >= 3".into()));
        }
        Self::new((2..=k_max).map(|k| (k, alpha)).collect())
    }

    /// Profile prior: `weight_in` on the profile's favored band, `weight_out`
    /// elsewhere, both scaled by sqrt(n).
    pub fn from_profile(
        profile: PriorProfile,
        weight_in: f64,
        weight_out: f64,
        n: usize,
        k_max: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPrior("profile priors need n >= 1".into()));
        }
        let scale = (n as f64).sqrt();
        let band = profile.k_range();
        Self::new(
            (2..=k_max)
                .map(|k| (k, if band.contains(&k) { weight_in } else { weight_out } * scale))
                .collect(),
        )
    }

    pub fn alphas(&self) -> &BTreeMap<usize, f64> {
        &self.alphas
    }

    /// Total prior weight, often written alpha_0.
    pub fn alpha_zero(&self) -> f64 {
        self.alphas.values().sum()
    }

    pub fn k_max(&self) -> usize {
        *self.alphas.last_key_value().expect("non-empty map").0
    }
}

/// Generalized-Dirichlet prior over (p_2, ..., p_K): shape pairs
/// (alpha_k, beta_k) for k = 2..=K-1, with p_K determined by the rest.
/// Richer than the Dirichlet: each component gets its own spread control.
#[derive(Debug, Clone, PartialEq)]
pub struct GdPrior {
    alphas: BTreeMap<usize, f64>,
    betas: BTreeMap<usize, f64>,
    k_max: usize,
}

impl GdPrior {
    /// Explicit shape pairs keyed by contiguous k = 2..=K-1; requires K >= 4
    /// so at least two pairs constrain the free last component.
    pub fn new(alphas: BTreeMap<usize, f64>, betas: BTreeMap<usize, f64>) -> Result<Self> {
        let a_hi = validate_contiguous(&alphas, "alpha")?;
        let b_hi = validate_contiguous(&betas, "beta")?;
        if a_hi != b_hi {
            return Err(Error::InvalidPrior(format!(
                "alpha covers k = 2..={a_hi} but beta covers k = 2..={b_hi}"
            )));
        }
        let k_max = a_hi + 1;
        if k_max < 4 {
            return Err(Error::InvalidPrior(
                "a generalized-Dirichlet prior needs K >= 4".into(),
            ));
        }
        validate_positive(&alphas, "alpha")?;
        validate_positive(&betas, "beta")?;
        Ok(Self { alphas, betas, k_max })
    }

    /// Shape pairs listed in order for k = 2, 3, ..., K-1.
    pub fn from_lists(alphas: &[f64], betas: &[f64]) -> Result<Self> {
        if alphas.len() != betas.len() {
            return Err(Error::InvalidPrior(format!(
                "alpha list has {} entries but beta list has {}",
                alphas.len(),
                betas.len()
            )));
        }
        Self::new(
            (2..).zip(alphas.iter().copied()).collect(),
            (2..).zip(betas.iter().copied()).collect(),
        )
    }

    pub fn alphas(&self) -> &BTreeMap<usize, f64> {
        &self.alphas
    }

    pub fn betas(&self) -> &BTreeMap<usize, f64> {
        &self.betas
    }

    /// K: the largest cluster count the prior covers (one past the shape
    /// pairs, since p_K is the leftover component).
    pub fn k_max(&self) -> usize {
        self.k_max
    }
}

/// Posterior parameters in the same family as the prior.
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorParams {
    Dirichlet { alphas: BTreeMap<usize, f64> },
    GeneralizedDirichlet { alphas: BTreeMap<usize, f64>, betas: BTreeMap<usize, f64> },
}

impl PosteriorParams {
    pub fn kind(&self) -> &'static str {
        match self {
            PosteriorParams::Dirichlet { .. } => "dirichlet",
            PosteriorParams::GeneralizedDirichlet { .. } => "gd",
        }
    }
}

/// Posterior summary over candidate cluster counts: the index value of the
/// method. `means[k]` is the posterior probability that the data has k
/// clusters, as smoothed by the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct BcviResult {
    posterior: PosteriorParams,
    means: BTreeMap<usize, f64>,
    variances: BTreeMap<usize, f64>,
    ranking: Vec<usize>,
    degenerate: bool,
}

impl BcviResult {
    fn assemble(
        posterior: PosteriorParams,
        means: BTreeMap<usize, f64>,
        variances: BTreeMap<usize, f64>,
        degenerate: bool,
    ) -> Self {
        debug_assert!(
            (means.values().sum::<f64>() - 1.0).abs() <= 1e-10,
            "posterior means must sum to 1"
        );
        debug_assert!(variances.values().all(|&v| v > 0.0), "posterior variances must be positive");
        let ranking = rank_by_mean(&means);
        Self { posterior, means, variances, ranking, degenerate }
    }

    pub fn posterior(&self) -> &PosteriorParams {
        &self.posterior
    }

    pub fn prior_kind(&self) -> &'static str {
        self.posterior.kind()
    }

    /// Posterior mean per k — the BCVI value itself.
    pub fn means(&self) -> &BTreeMap<usize, f64> {
        &self.means
    }

    pub fn variances(&self) -> &BTreeMap<usize, f64> {
        &self.variances
    }

    /// Candidate ks sorted by posterior mean, best first; ties go to the
    /// smaller k.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// True when the underlying series was all-equal, so the posterior is
    /// the prior plus a uniform data mass rather than evidence of structure.
    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
}

fn rank_by_mean(means: &BTreeMap<usize, f64>) -> Vec<usize> {
    let mut order: Vec<usize> = means.keys().copied().collect();
    // BTreeMap iteration is ascending in k, and the sort is stable, so equal
    // means keep the smaller k first.
    order.sort_by(|a, b| means[b].partial_cmp(&means[a]).expect("finite means"));
    order
}

/// Closed-form Dirichlet posterior: the prior weights plus n times the
/// ratios, with moments evaluated directly.
pub fn dirichlet_posterior(prior: &DirichletPrior, r: &RatioVector) -> Result<BcviResult> {
    if prior.k_max() != r.k_max() {
        return Err(Error::PriorRangeMismatch {
            prior_lo: 2,
            prior_hi: prior.k_max(),
            series_lo: 2,
            series_hi: r.k_max(),
        });
    }
    let n = r.n() as f64;
    let alphas: BTreeMap<usize, f64> =
        prior.alphas().iter().map(|(&k, &a)| (k, a + n * r.value(k).expect("shared range"))).collect();
    let total: f64 = alphas.values().sum();
    let means: BTreeMap<usize, f64> = alphas.iter().map(|(&k, &a)| (k, a / total)).collect();
    let variances: BTreeMap<usize, f64> = alphas
        .iter()
        .map(|(&k, &a)| (k, a * (total - a) / (total * total * (total + 1.0))))
        .collect();
    Ok(BcviResult::assemble(
        PosteriorParams::Dirichlet { alphas },
        means,
        variances,
        r.degenerate(),
    ))
}

/// Closed-form generalized-Dirichlet posterior: alpha_k gains n r_k and
/// beta_k gains the tail mass n (r_{k+1} + ... + r_K); moments come from the
/// stick-breaking products.
pub fn gd_posterior(prior: &GdPrior, r: &RatioVector) -> Result<BcviResult> {
    if prior.k_max() != r.k_max() {
        return Err(Error::PriorRangeMismatch {
            prior_lo: 2,
            prior_hi: prior.k_max(),
            series_lo: 2,
            series_hi: r.k_max(),
        });
    }
    let n = r.n() as f64;
    let k_max = prior.k_max();
    let mut alphas = BTreeMap::new();
    let mut betas = BTreeMap::new();
    // Walk k downward keeping tail = r_{k+1} + ... + r_K, the mass beyond k
    // that feeds the beta update.
    let mut tail = r.value(k_max).expect("shared range");
    for k in (2..=(k_max - 1)).rev() {
        let r_k = r.value(k).expect("shared range");
        alphas.insert(k, prior.alphas()[&k] + n * r_k);
        betas.insert(k, prior.betas()[&k] + n * tail);
        tail += r_k;
    }

    // Stick-breaking moments: E[p_k] peels off alpha/(alpha+beta) of whatever
    // mass the earlier components left standing.
    let mut means = BTreeMap::new();
    let mut variances = BTreeMap::new();
    let mut carry_mean = 1.0;
    let mut carry_second = 1.0;
    for k in 2..k_max {
        let a = alphas[&k];
        let b = betas[&k];
        let mean = carry_mean * a / (a + b);
        let second = carry_second * (a + 1.0) * a / ((a + b + 1.0) * (a + b));
        means.insert(k, mean);
        variances.insert(k, second - mean * mean);
        carry_mean *= b / (a + b);
        carry_second *= (b + 1.0) * b / ((a + b + 1.0) * (a + b));
    }
    means.insert(k_max, carry_mean);
    variances.insert(k_max, carry_second - carry_mean * carry_mean);

    Ok(BcviResult::assemble(
        PosteriorParams::GeneralizedDirichlet { alphas, betas },
        means,
        variances,
        r.degenerate(),
    ))
}

/// General mixed moment E[prod_k p_k^(s_k)] of a generalized-Dirichlet
/// distribution, for nonnegative integer exponents keyed by k (missing keys
/// mean exponent 0). Evaluated as a product of Gamma ratios in log space.
pub fn gd_moment(
    alphas: &BTreeMap<usize, f64>,
    betas: &BTreeMap<usize, f64>,
    exponents: &BTreeMap<usize, u32>,
) -> Result<f64> {
    validate_positive(alphas, "alpha")?;
    validate_positive(betas, "beta")?;
    if alphas.keys().ne(betas.keys()) {
        return Err(Error::InvalidPrior("alpha and beta must share their k-range".into()));
    }
    if let Some(k) = exponents.keys().find(|k| !alphas.contains_key(k)) {
        return Err(Error::InvalidPrior(format!("exponent at k = {k} is outside the parameter range")));
    }
    let mut log_total = 0.0;
    // delta_k = sum of exponents strictly after k; build by scanning from the
    // right.
    let mut delta = 0.0;
    for (&k, &a) in alphas.iter().rev() {
        let b = betas[&k];
        let s = f64::from(exponents.get(&k).copied().unwrap_or(0));
        log_total += ln_gamma(a + b) + ln_gamma(a + s) + ln_gamma(b + delta)
            - ln_gamma(a)
            - ln_gamma(b)
            - ln_gamma(a + b + s + delta);
        delta += s;
    }
    let value = log_total.exp();
    if !value.is_finite() {
        return Err(Error::MomentOverflow);
    }
    Ok(value)
}

/// Moment E[p_K^s] of the leftover component of a generalized-Dirichlet
/// distribution.
pub fn gd_last_moment(
    alphas: &BTreeMap<usize, f64>,
    betas: &BTreeMap<usize, f64>,
    s: u32,
) -> Result<f64> {
    validate_positive(alphas, "alpha")?;
    validate_positive(betas, "beta")?;
    if alphas.keys().ne(betas.keys()) {
        return Err(Error::InvalidPrior("alpha and beta must share their k-range".into()));
    }
    let s = f64::from(s);
    let mut log_total = 0.0;
    for (&k, &a) in alphas {
        let b = betas[&k];
        log_total += ln_gamma(a + b) + ln_gamma(b + s) - ln_gamma(b) - ln_gamma(a + b + s);
    }
    let value = log_total.exp();
    if !value.is_finite() {
        return Err(Error::MomentOverflow);
    }
    Ok(value)
}

/// A ranking of candidate cluster counts with a cumulative-mass confidence
/// set.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Every k, best posterior mean first; ties go to the smaller k.
    pub order: Vec<usize>,
    /// The top_m entries of `order`.
    pub confidence_set: Vec<usize>,
    /// Total posterior mass on the confidence set.
    pub confidence_mass: f64,
}

/// Rank cluster counts by posterior mean and report the top_m set with its
/// cumulative mass.
pub fn bcvi_rank(result: &BcviResult, top_m: usize) -> Result<Ranking> {
    let count = result.means().len();
    if top_m == 0 || top_m > count {
        return Err(Error::Config(format!(
            "top_m must be between 1 and {count} (the number of candidate ks), got {top_m}"
        )));
    }
    let order = result.ranking().to_vec();
    let confidence_set: Vec<usize> = order[..top_m].to_vec();
    let confidence_mass = confidence_set.iter().map(|k| result.means()[k]).sum();
    Ok(Ranking { order, confidence_set, confidence_mass })
}
