//! Run configuration: the pipeline's knobs, a flat `key = value` config-file
//! grammar, and the mixture-spec grammar for synthetic datasets.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bayes::PriorProfile;
use crate::cvi::IndexKind;
use crate::dataset::{ComponentShape, MixtureComponent, MixtureSpec};
use crate::error::{Error, Result};

/// Which clustering family fits the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    KMeans,
    Fcm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::Fcm => "fcm",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Algorithm::KMeans),
            "fcm" => Ok(Algorithm::Fcm),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected kmeans or fcm)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the points come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Csv { path: PathBuf, label_column: Option<String> },
    Mixture(MixtureSpec),
}

/// Prior family and parameters, as specified by the user; turned into a
/// concrete prior once n and the k-range are known.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorConfig {
    /// Dirichlet with the same weight at every k.
    Flat { alpha: f64 },
    /// Dirichlet profile: `weight_in` over the profile's band, `weight_out`
    /// elsewhere, both scaled by sqrt(n).
    Profile { profile: PriorProfile, weight_in: f64, weight_out: f64 },
    /// Dirichlet with explicit per-k weights for k = 2..=K.
    Explicit { alphas: Vec<f64> },
    /// Generalized Dirichlet with explicit shape pairs for k = 2..=K-1.
    Gd { alphas: Vec<f64>, betas: Vec<f64> },
}

impl PriorConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            PriorConfig::Flat { .. } => "flat",
            PriorConfig::Profile { .. } => "profile",
            PriorConfig::Explicit { .. } => "explicit",
            PriorConfig::Gd { .. } => "gd",
        }
    }
}

/// Everything a pipeline run needs. Built by [`build_config`] from layered
/// [`Overrides`]; construct directly in library code.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub source: DataSource,
    pub algorithm: Algorithm,
    pub index: IndexKind,
    /// Largest candidate cluster count K; the report covers k = 2..=K.
    pub k_max: usize,
    /// FCM fuzziness exponent m.
    pub fuzziness: f64,
    /// Representative blending exponent for WP; defaults to `fuzziness`.
    pub gamma: Option<f64>,
    /// Davies-Bouldin dispersion and separation orders.
    pub db_q: f64,
    pub db_t: f64,
    pub prior: PriorConfig,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Size of the reported confidence set.
    pub top_m: usize,
    /// Fail the run when labeled accuracy falls below 0.75.
    pub require_accuracy: bool,
}

impl PipelineConfig {
    /// Structural checks that need no data: index/algorithm compatibility
    /// and parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.index.requires_soft() != matches!(self.algorithm, Algorithm::Fcm) {
            let family = if self.index.requires_soft() { "fcm" } else { "kmeans" };
            return Err(Error::Config(format!(
                "index {} requires algorithm {family}, got {}",
                self.index.name(),
                self.algorithm
            )));
        }
        if self.k_max < 3 {
            return Err(Error::Config(format!("k-max must be at least 3, got {}", self.k_max)));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max-iterations must be at least 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if matches!(self.algorithm, Algorithm::Fcm) && !(self.fuzziness.is_finite() && self.fuzziness > 1.0)
        {
            return Err(Error::FuzzinessOutOfRange { m: self.fuzziness });
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Config(format!("gamma must be positive and finite, got {g}")));
            }
        }
        if !(self.db_q.is_finite() && self.db_q >= 1.0 && self.db_t.is_finite() && self.db_t >= 1.0)
        {
            return Err(Error::Config(format!(
                "db-q and db-t must be at least 1, got {} and {}",
                self.db_q, self.db_t
            )));
        }
        if self.top_m == 0 || self.top_m > self.k_max - 1 {
            return Err(Error::Config(format!(
                "top-m must be between 1 and k-max - 1 = {}, got {}",
                self.k_max - 1,
                self.top_m
            )));
        }
        match &self.prior {
            PriorConfig::Flat { .. } | PriorConfig::Profile { .. } => {}
            PriorConfig::Explicit { alphas } => {
                if alphas.len() != self.k_max - 1 {
                    return Err(Error::Config(format!(
                        "explicit prior needs one alpha per k = 2..={} ({} values), got {}",
                        self.k_max,
                        self.k_max - 1,
                        alphas.len()
                    )));
                }
            }
            PriorConfig::Gd { alphas, betas } => {
                if self.k_max < 4 {
                    return Err(Error::Config(
                        "a generalized-Dirichlet prior needs k-max at least 4".into(),
                    ));
                }
                if alphas.len() != self.k_max - 2 || betas.len() != self.k_max - 2 {
                    return Err(Error::Config(format!(
                        "gd prior needs one alpha and one beta per k = 2..={} ({} values each), \
                         got {} and {}",
                        self.k_max - 1,
                        self.k_max - 2,
                        alphas.len(),
                        betas.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// The gamma actually used for WP representatives.
    pub fn effective_gamma(&self) -> f64 {
        self.gamma.unwrap_or(self.fuzziness)
    }
}

/// A partial configuration: every knob optional. The config file and the CLI
/// flags each produce one of these; later layers win.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub csv: Option<PathBuf>,
    pub label_column: Option<String>,
    pub mixture: Option<PathBuf>,
    pub algorithm: Option<Algorithm>,
    pub index: Option<IndexKind>,
    pub k_max: Option<usize>,
    pub fuzziness: Option<f64>,
    pub gamma: Option<f64>,
    pub db_q: Option<f64>,
    pub db_t: Option<f64>,
    pub prior: Option<String>,
    pub alpha: Option<f64>,
    pub profile: Option<PriorProfile>,
    pub weight_in: Option<f64>,
    pub weight_out: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub restarts: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub top_m: Option<usize>,
    pub require_accuracy: Option<bool>,
}

impl Overrides {
    /// Layer `over` on top of `self`: every knob `over` sets wins.
    #[must_use]
    pub fn merge(mut self, over: Overrides) -> Overrides {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(
            csv, label_column, mixture, algorithm, index, k_max, fuzziness, gamma, db_q, db_t,
            prior, alpha, profile, weight_in, weight_out, alphas, betas, restarts, max_iterations,
            tolerance, seed, top_m, require_accuracy,
        );
        self
    }

    /// Parse a flat `key = value` config file. Unknown keys, duplicate keys,
    /// and malformed values are errors naming the line.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Overrides> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut over = Overrides::default();
        for (line_no, key, value) in parse_kv_lines(&text)? {
            over.apply(&key, &value, line_no)?;
        }
        Ok(over)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e| {
                Error::Config(format!("line {line}: bad value '{value}' for {key}: {e}"))
            })
        }

        match key {
            "csv" => self.csv = Some(PathBuf::from(value)),
            "label-column" => self.label_column = Some(value.to_string()),
            "mixture" => self.mixture = Some(PathBuf::from(value)),
            "algorithm" => self.algorithm = Some(value.parse()?),
            "index" => self.index = Some(value.parse()?),
            "k-max" => self.k_max = Some(parse(key, value, line)?),
            "fuzziness" => self.fuzziness = Some(parse(key, value, line)?),
            "gamma" => self.gamma = Some(parse(key, value, line)?),
            "db-q" => self.db_q = Some(parse(key, value, line)?),
            "db-t" => self.db_t = Some(parse(key, value, line)?),
            "prior" => self.prior = Some(value.to_string()),
            "alpha" => self.alpha = Some(parse(key, value, line)?),
            "profile" => self.profile = Some(value.parse()?),
            "weight-in" => self.weight_in = Some(parse(key, value, line)?),
            "weight-out" => self.weight_out = Some(parse(key, value, line)?),
            "alphas" => self.alphas = Some(parse_float_list(key, value, line)?),
            "betas" => self.betas = Some(parse_float_list(key, value, line)?),
            "restarts" => self.restarts = Some(parse(key, value, line)?),
            "max-iterations" => self.max_iterations = Some(parse(key, value, line)?),
            "tolerance" => self.tolerance = Some(parse(key, value, line)?),
            "seed" => self.seed = Some(parse(key, value, line)?),
            "top-m" => self.top_m = Some(parse(key, value, line)?),
            "require-accuracy" => self.require_accuracy = Some(parse(key, value, line)?),
            other => {
                return Err(Error::Config(format!("line {line}: unknown config key '{other}'")))
            }
        }
        Ok(())
    }
}

/// Resolve layered overrides into a full pipeline configuration, applying
/// defaults and reading the mixture spec file when one is named.
pub fn build_config(over: Overrides) -> Result<PipelineConfig> {
    let source = match (over.csv, over.mixture) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("csv and mixture are mutually exclusive".into()))
        }
        (None, None) => {
            return Err(Error::Config("a data source is required: set csv or mixture".into()))
        }
        (Some(path), None) => DataSource::Csv { path, label_column: over.label_column },
        (None, Some(path)) => {
            if over.label_column.is_some() {
                return Err(Error::Config(
                    "label-column applies only to csv sources (mixtures label themselves)".into(),
                ));
            }
            DataSource::Mixture(load_mixture_spec(&path)?)
        }
    };

    let prior = match over.prior.as_deref().unwrap_or("flat") {
        "flat" => {
            let unused = over.profile.is_some()
                || over.weight_in.is_some()
                || over.weight_out.is_some()
                || over.alphas.is_some()
                || over.betas.is_some();
            if unused {
                return Err(Error::Config(
                    "prior flat takes only alpha; remove profile/weight/alphas/betas settings"
                        .into(),
                ));
            }
            PriorConfig::Flat { alpha: over.alpha.unwrap_or(1.0) }
        }
        "profile" => {
            if over.alpha.is_some() || over.alphas.is_some() || over.betas.is_some() {
                return Err(Error::Config(
                    "prior profile takes profile/weight-in/weight-out; remove alpha settings"
                        .into(),
                ));
            }
            let profile = over.profile.ok_or_else(|| {
                Error::Config("prior profile needs a profile name (small|moderate|large)".into())
            })?;
            PriorConfig::Profile {
                profile,
                weight_in: over.weight_in.unwrap_or(1.0),
                weight_out: over.weight_out.unwrap_or(0.1),
            }
        }
        "explicit" => {
            let alphas = over
                .alphas
                .ok_or_else(|| Error::Config("prior explicit needs an alphas list".into()))?;
            if over.betas.is_some() {
                return Err(Error::Config("betas belong to the gd prior, not explicit".into()));
            }
            PriorConfig::Explicit { alphas }
        }
        "gd" => {
            let alphas =
                over.alphas.ok_or_else(|| Error::Config("prior gd needs an alphas list".into()))?;
            let betas =
                over.betas.ok_or_else(|| Error::Config("prior gd needs a betas list".into()))?;
            PriorConfig::Gd { alphas, betas }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown prior '{other}' (expected flat, profile, explicit, or gd)"
            )))
        }
    };

    let index = over.index.ok_or_else(|| Error::Config("an index is required".into()))?;
    let algorithm = over.algorithm.unwrap_or(if index.requires_soft() {
        Algorithm::Fcm
    } else {
        Algorithm::KMeans
    });

    let config = PipelineConfig {
        source,
        algorithm,
        index,
        k_max: over.k_max.unwrap_or(10),
        fuzziness: over.fuzziness.unwrap_or(2.0),
        gamma: over.gamma,
        db_q: over.db_q.unwrap_or(2.0),
        db_t: over.db_t.unwrap_or(2.0),
        prior,
        restarts: over.restarts.unwrap_or(20),
        max_iterations: over.max_iterations.unwrap_or(200),
        tolerance: over.tolerance.unwrap_or(1e-6),
        seed: over.seed.unwrap_or(0),
        top_m: over.top_m.unwrap_or(3),
        require_accuracy: over.require_accuracy.unwrap_or(false),
    };
    config.validate()?;
    Ok(config)
}

/// Split flat config text into (line, key, value) triples. Blank lines and
/// `#` comments are dropped; duplicate keys are an error.
fn parse_kv_lines(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {line_no}: expected 'key = value', got '{line}'"
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {line_no}: empty key")));
        }
        if let Some(first) = seen.insert(key.clone(), line_no) {
            return Err(Error::Config(format!(
                "line {line_no}: duplicate key '{key}' (first set on line {first})"
            )));
        }
        entries.push((line_no, key, value));
    }
    Ok(entries)
}

fn parse_float_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("line {line}: bad number '{}' in {key}", f.trim()))
            })
        })
        .collect()
}

/// Read and parse a mixture spec file.
///
/// Grammar: flat `key = value` lines with `total-n`, optional `name` and
/// `seed`, and per-component keys `component.N.weight` (default 1),
/// `component.N.center` (required, comma-separated), `component.N.spread`
/// (default 1 per axis; a single value broadcasts), `component.N.shape`
/// (gaussian | uniform-box, default gaussian). Component numbers start at 1
/// and must be contiguous.
pub fn load_mixture_spec(path: impl AsRef<Path>) -> Result<MixtureSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let default_name =
        path.file_stem().map_or_else(|| "mixture".to_string(), |s| s.to_string_lossy().into_owned());
    parse_mixture_spec(&text, &default_name)
}

/// Parse mixture spec text; `default_name` fills in when no `name` key is
/// given.
pub fn parse_mixture_spec(text: &str, default_name: &str) -> Result<MixtureSpec> {
    struct Partial {
        weight: Option<f64>,
        center: Option<Vec<f64>>,
        spread: Option<Vec<f64>>,
        shape: Option<ComponentShape>,
    }

    let mut name = default_name.to_string();
    let mut total_n: Option<usize> = None;
    let mut seed = 0u64;
    let mut partials: BTreeMap<usize, Partial> = BTreeMap::new();

    for (line, key, value) in parse_kv_lines(text)? {
        match key.as_str() {
            "name" => name = value,
            "total-n" => {
                total_n = Some(value.parse().map_err(|_| {
                    Error::Config(format!("line {line}: bad value '{value}' for total-n"))
                })?);
            }
            "seed" => {
                seed = value.parse().map_err(|_| {
                    Error::Config(format!("line {line}: bad value '{value}' for seed"))
                })?;
            }
            other => {
                let Some(rest) = other.strip_prefix("component.") else {
                    return Err(Error::Config(format!(
                        "line {line}: unknown mixture key '{other}'"
                    )));
                };
                let Some((number, field)) = rest.split_once('.') else {
                    return Err(Error::Config(format!(
                        "line {line}: expected component.N.field, got '{other}'"
                    )));
                };
                let number: usize = number.parse().map_err(|_| {
                    Error::Config(format!("line {line}: bad component number in '{other}'"))
                })?;
                if number == 0 {
                    return Err(Error::Config(format!(
                        "line {line}: component numbers start at 1"
                    )));
                }
                let partial = partials.entry(number).or_insert(Partial {
                    weight: None,
                    center: None,
                    spread: None,
                    shape: None,
                });
                match field {
                    "weight" => {
                        partial.weight = Some(value.parse().map_err(|_| {
                            Error::Config(format!("line {line}: bad weight '{value}'"))
                        })?);
                    }
                    "center" => partial.center = Some(parse_float_list(&key, &value, line)?),
                    "spread" => partial.spread = Some(parse_float_list(&key, &value, line)?),
                    "shape" => {
                        partial.shape = Some(match value.as_str() {
                            "gaussian" => ComponentShape::Gaussian,
                            "uniform-box" => ComponentShape::UniformBox,
                            other => {
                                return Err(Error::Config(format!(
                                    "line {line}: unknown shape '{other}' \
                                     (expected gaussian or uniform-box)"
                                )))
                            }
                        });
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "line {line}: unknown component field '{other}'"
                        )))
                    }
                }
            }
        }
    }

    let total_n =
        total_n.ok_or_else(|| Error::Config("mixture spec needs total-n".into()))?;
    if partials.is_empty() {
        return Err(Error::Config("mixture spec needs at least one component".into()));
    }
    let count = partials.len();
    if *partials.last_key_value().expect("non-empty").0 != count {
        return Err(Error::Config(format!(
            "component numbers must be contiguous from 1 (found {count} components, \
             highest number {})",
            partials.last_key_value().expect("non-empty").0
        )));
    }

    let mut components = Vec::with_capacity(count);
    for (number, partial) in partials {
        let center = partial.center.ok_or_else(|| {
            Error::Config(format!("component {number} needs a center"))
        })?;
        let spread = match partial.spread {
            None => vec![1.0; center.len()],
            Some(s) if s.len() == 1 => vec![s[0]; center.len()],
            Some(s) => s,
        };
        components.push(MixtureComponent {
            weight: partial.weight.unwrap_or(1.0),
            center,
            spread,
            shape: partial.shape.unwrap_or(ComponentShape::Gaussian),
        });
    }

    let spec = MixtureSpec { name, components, total_n, seed };
    spec.validate()?;
    Ok(spec)
}
