//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! dataset = data/qm9_1k.csv        # relative to the config file
//! property = lumo
//! max_bonds = 2
//! model = krr-rbf
//! target = 0.038, 0.042            # repeat for several intervals
//! target = -0.02, 0.002
//! output = runs/demo
//! seed = 0
//! ```
//!
//! Every other key has a default; see [`RunConfig::keys`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::generate::DEFAULT_NODE_BUDGET;
use crate::regression::FeatureSelection;
use crate::regression::ModelKind;
use crate::search::SearchConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub property: String,
    /// Reject unparseable SMILES (strict) or skip them (lenient).
    pub strict: bool,
    pub max_bonds: usize,
    pub model: ModelKind,
    /// Grid overrides; `None` keeps the default decade grid.
    pub alphas: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub folds: usize,
    pub feature_selection: Option<(FeatureSelection, usize)>,
    pub targets: Vec<(f64, f64)>,
    /// Seed, bounds, target scale and conditions are filled in per run.
    pub search: SearchConfig,
    pub max_structures: Option<usize>,
    pub node_budget: Option<u64>,
    pub max_atoms: usize,
    pub templates: Option<PathBuf>,
    pub pca_components: usize,
    pub output: PathBuf,
    pub seed: u64,
    /// Reuse artifacts already present in the output directory.
    pub resume: bool,
}

impl RunConfig {
    /// Configuration with every default and the required fields filled in.
    pub fn new(dataset: impl Into<PathBuf>, property: impl Into<String>, output: impl Into<PathBuf>) -> Self {
        RunConfig {
            dataset: dataset.into(),
            property: property.into(),
            strict: true,
            max_bonds: 2,
            model: ModelKind::KrrRbf,
            alphas: None,
            gammas: None,
            folds: 10,
            feature_selection: None,
            targets: Vec::new(),
            search: SearchConfig::default(),
            max_structures: Some(10),
            node_budget: Some(DEFAULT_NODE_BUDGET),
            max_atoms: crate::chem::DEFAULT_MAX_ATOMS,
            templates: None,
            pca_components: 2,
            output: output.into(),
            seed: 0,
            resume: false,
        }
    }

    /// Recognized keys, for documentation and error messages.
    pub fn keys() -> &'static [&'static str] {
        &[
            "dataset", "property", "mode", "max_bonds", "model", "alphas", "gammas", "folds", "feature_selection",
            "feature_budget", "target", "particles", "iterations", "inertia", "cognitive", "social", "lambda",
            "candidates", "bound_factor", "restarts", "max_structures", "node_budget", "max_atoms", "templates",
            "pca_components", "output", "seed", "resume",
        ]
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::new("", "", "");
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut selection: Option<(usize, FeatureSelection)> = None;
        let mut budget: Option<(usize, usize)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") })?;
            if !Self::keys().contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            }
            if key != "target" && !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            let bad = |message: String| ConfigError::Value { line, key: key.to_string(), message };
            let path = |v: &str| {
                let p = PathBuf::from(v);
                if p.is_relative() {
                    base.join(p)
                } else {
                    p
                }
            };
            match key {
                "dataset" => cfg.dataset = path(value),
                "property" => cfg.property = value.to_string(),
                "mode" => {
                    cfg.strict = match value {
                        "strict" => true,
                        "lenient" => false,
                        other => return Err(bad(format!("expected strict or lenient, got `{other}`"))),
                    }
                }
                "max_bonds" => cfg.max_bonds = number(value).map_err(bad)?,
                "model" => cfg.model = ModelKind::parse(value).ok_or_else(|| bad(format!("unknown model `{value}`")))?,
                "alphas" => cfg.alphas = Some(list(value).map_err(bad)?),
                "gammas" => cfg.gammas = Some(list(value).map_err(bad)?),
                "folds" => cfg.folds = number(value).map_err(bad)?,
                "feature_selection" => {
                    if value != "none" {
                        selection = Some((line, value.parse().map_err(|_| bad(format!("unknown method `{value}`")))?));
                    }
                }
                "feature_budget" => budget = Some((line, number(value).map_err(bad)?)),
                "target" => {
                    let v: Vec<f64> = list(value).map_err(bad)?;
                    match v[..] {
                        [lo, hi] if lo <= hi => cfg.targets.push((lo, hi)),
                        [_, _] => return Err(bad("lower bound exceeds upper bound".into())),
                        _ => return Err(bad("expected `lo, hi`".into())),
                    }
                }
                "particles" => cfg.search.particles = number(value).map_err(bad)?,
                "iterations" => cfg.search.iterations = number(value).map_err(bad)?,
                "inertia" => cfg.search.inertia = number(value).map_err(bad)?,
                "cognitive" => cfg.search.cognitive = number(value).map_err(bad)?,
                "social" => cfg.search.social = number(value).map_err(bad)?,
                "lambda" => cfg.search.lambda = number(value).map_err(bad)?,
                "candidates" => cfg.search.candidates = number(value).map_err(bad)?,
                "bound_factor" => cfg.search.bound_factor = number(value).map_err(bad)?,
                "restarts" => cfg.search.restarts = number(value).map_err(bad)?,
                "max_structures" => cfg.max_structures = optional(value).map_err(bad)?,
                "node_budget" => cfg.node_budget = optional(value).map_err(bad)?,
                "max_atoms" => cfg.max_atoms = number(value).map_err(bad)?,
                "templates" => cfg.templates = Some(path(value)),
                "pca_components" => cfg.pca_components = number(value).map_err(bad)?,
                "output" => cfg.output = path(value),
                "seed" => cfg.seed = number(value).map_err(bad)?,
                "resume" => cfg.resume = number(value).map_err(bad)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        match (selection, budget) {
            (Some((_, method)), Some((_, b))) => cfg.feature_selection = Some((method, b)),
            (Some((line, _)), None) => {
                return Err(ConfigError::Value {
                    line,
                    key: "feature_selection".into(),
                    message: "needs feature_budget".into(),
                })
            }
            (None, Some((line, _))) => {
                return Err(ConfigError::Value {
                    line,
                    key: "feature_budget".into(),
                    message: "only meaningful with feature_selection".into(),
                })
            }
            (None, None) => {}
        }
        for key in ["dataset", "property", "output"] {
            if !seen.contains(key) {
                return Err(ConfigError::Missing(key));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that hold regardless of how the config was built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.property.is_empty() || self.property == "smiles" {
            return fail("property must name a column other than `smiles`");
        }
        if self.max_bonds > crate::features::MAX_SUBSTRUCTURE_BONDS {
            return fail(&format!("max_bonds must be at most {}", crate::features::MAX_SUBSTRUCTURE_BONDS));
        }
        if self.folds < 2 {
            return fail("folds must be at least 2");
        }
        if self.targets.is_empty() {
            return fail("at least one `target = lo, hi` is required");
        }
        if self.targets.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return fail("target intervals must be finite with lo <= hi");
        }
        if self.gammas.is_some() && !self.model.is_kernel() {
            return fail("gammas only apply to kernel models");
        }
        if self.alphas.as_ref().is_some_and(|a| a.is_empty() || a.iter().any(|&x| !(x > 0.0 && x.is_finite()))) {
            return fail("alphas must be positive");
        }
        if self.gammas.as_ref().is_some_and(|g| g.is_empty() || g.iter().any(|&x| !(x > 0.0 && x.is_finite()))) {
            return fail("gammas must be positive");
        }
        let s = &self.search;
        if s.particles == 0 || s.iterations == 0 || s.candidates == 0 {
            return fail("particles, iterations and candidates must be positive");
        }
        if !(s.lambda >= 0.0 && s.bound_factor > 0.0) {
            return fail("lambda must be non-negative and bound_factor positive");
        }
        if self.max_atoms == 0 || self.max_atoms > 64 {
            return fail("max_atoms must be in 1..=64");
        }
        Ok(())
    }
}

fn number<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse `{s}`"))
}

fn optional<T: std::str::FromStr>(s: &str) -> Result<Option<T>, String> {
    if s == "none" {
        Ok(None)
    } else {
        number(s).map(Some)
    }
}

fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',').map(|x| number(x.trim())).collect()
}
