//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use knotph_core::analysis::{DEFAULT_EMBED_DIM, DEFAULT_NEIGHBORS, DEFAULT_SIMILARITY_THRESHOLD, DEFAULT_TOP_CLASSES};
use knotph_core::geometry::DEFAULT_INTERP_FACTOR;
use knotph_core::landscape::DEFAULT_PERMUTATIONS;
use knotph_core::persistence::MaxScale;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20240;
pub const DEFAULT_OUTPUT_DIR: &str = "knotph_out";

/// Distance used by `compare` and `noise`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Wasserstein,
    Landscape,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Wasserstein => "wasserstein",
            Metric::Landscape => "landscape",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wasserstein" => Ok(Metric::Wasserstein),
            "landscape" => Ok(Metric::Landscape),
            other => Err(format!("unknown metric '{other}' (expected wasserstein or landscape)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input_dir: Option<PathBuf>,
    pub annotation_path: Option<PathBuf>,
    pub similarity_path: Option<PathBuf>,
    pub similarity_threshold: f64,
    pub top_classes: usize,
    pub interp_factor: usize,
    pub max_scale: MaxScale,
    pub sigmas: Vec<f64>,
    pub seed: u64,
    pub n_neighbors: usize,
    pub embed_dim: usize,
    pub landscape_p: f64,
    pub randomization_k: usize,
    pub metric: Metric,
    pub lanes: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_dir: None,
            annotation_path: None,
            similarity_path: None,
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            top_classes: DEFAULT_TOP_CLASSES,
            interp_factor: DEFAULT_INTERP_FACTOR,
            max_scale: MaxScale::Auto,
            sigmas: default_sigmas(),
            seed: DEFAULT_SEED,
            n_neighbors: DEFAULT_NEIGHBORS,
            embed_dim: DEFAULT_EMBED_DIM,
            landscape_p: 1.0,
            randomization_k: DEFAULT_PERMUTATIONS,
            metric: Metric::Landscape,
            lanes: None,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        }
    }
}

/// 0.1, 0.2, ..., 1.0
pub fn default_sigmas() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

fn bad(key: &str, value: &str, why: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key} = '{value}': {why}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| bad(key, value, e))
}

pub fn parse_sigmas(value: &str) -> Result<Vec<f64>, CliError> {
    let sigmas = value
        .split(',')
        .map(|s| parse::<f64>("sigmas", s))
        .collect::<Result<Vec<_>, _>>()?;
    if sigmas.is_empty() || sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(bad("sigmas", value, "need finite values >= 0"));
    }
    Ok(sigmas)
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value.trim());
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Parses config text; relative paths are taken from `base`.
    pub fn from_text(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim(), base)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base)
    }

    /// Sets one key; paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), CliError> {
        match key {
            "input_dir" => self.input_dir = Some(resolve(base, value)),
            "annotation_path" => self.annotation_path = Some(resolve(base, value)),
            "similarity_path" => self.similarity_path = Some(resolve(base, value)),
            "output_dir" => self.output_dir = resolve(base, value),
            "similarity_threshold" => self.similarity_threshold = parse(key, value)?,
            "top_classes" => self.top_classes = parse(key, value)?,
            "interp_factor" => self.interp_factor = parse(key, value)?,
            "max_scale" => self.max_scale = parse(key, value)?,
            "sigmas" => self.sigmas = parse_sigmas(value)?,
            "seed" => self.seed = parse(key, value)?,
            "n_neighbors" => self.n_neighbors = parse(key, value)?,
            "embed_dim" => self.embed_dim = parse(key, value)?,
            "landscape_p" => self.landscape_p = parse(key, value)?,
            "randomization_k" => self.randomization_k = parse(key, value)?,
            "metric" => self.metric = parse(key, value)?,
            "lanes" => {
                self.lanes = match value.trim() {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold < 1.0) {
            return fail(format!(
                "similarity_threshold must lie in (0, 1), got {}",
                self.similarity_threshold
            ));
        }
        if self.top_classes == 0 {
            return fail("top_classes must be >= 1".into());
        }
        if self.n_neighbors == 0 {
            return fail("n_neighbors must be >= 1".into());
        }
        if self.embed_dim == 0 {
            return fail("embed_dim must be >= 1".into());
        }
        if !(self.landscape_p >= 1.0 && self.landscape_p.fract() == 0.0) {
            return fail(format!("landscape_p must be an integer >= 1, got {}", self.landscape_p));
        }
        if self.randomization_k == 0 {
            return fail("randomization_k must be >= 1".into());
        }
        if self.lanes == Some(0) {
            return fail("lanes must be >= 1".into());
        }
        Ok(())
    }

    /// Resolved settings that determine results, keyed by config name.
    /// The output directory is left out so runs into different
    /// directories record identical configs.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut m = BTreeMap::new();
        m.insert("input_dir".into(), path(&self.input_dir));
        m.insert("annotation_path".into(), path(&self.annotation_path));
        m.insert("similarity_path".into(), path(&self.similarity_path));
        m.insert("similarity_threshold".into(), self.similarity_threshold.to_string());
        m.insert("top_classes".into(), self.top_classes.to_string());
        m.insert("interp_factor".into(), self.interp_factor.to_string());
        m.insert("max_scale".into(), self.max_scale.to_string());
        m.insert(
            "sigmas".into(),
            self.sigmas.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        );
        m.insert("seed".into(), self.seed.to_string());
        m.insert("n_neighbors".into(), self.n_neighbors.to_string());
        m.insert("embed_dim".into(), self.embed_dim.to_string());
        m.insert("landscape_p".into(), self.landscape_p.to_string());
        m.insert("randomization_k".into(), self.randomization_k.to_string());
        m.insert("metric".into(), self.metric.to_string());
        m
    }
}
