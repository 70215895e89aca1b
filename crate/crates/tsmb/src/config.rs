//! Run configuration: a single TOML file with defaults, overridable by CLI
//! flags (flag > config > default).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{SplitSpec, TaskKind};
use crate::error::{Error, Result};
use crate::learners::{LearnerKind, LearnerSpec, Loss};
use crate::optimizer::SearchBox;
use crate::scores::ScoreFunction;

/// Training/prediction strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Tsmb,
    Tdb,
    Perturbed,
    TdePoint,
    NoAlignment,
    RealDelay,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsmb" => Ok(Method::Tsmb),
            "tdb" => Ok(Method::Tdb),
            "perturbed" => Ok(Method::Perturbed),
            "tde-point" => Ok(Method::TdePoint),
            "no-alignment" => Ok(Method::NoAlignment),
            "real-delay" => Ok(Method::RealDelay),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected tsmb, tdb, perturbed, tde-point, \
                 no-alignment, or real-delay)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Tsmb => "tsmb",
            Method::Tdb => "tdb",
            Method::Perturbed => "perturbed",
            Method::TdePoint => "tde-point",
            Method::NoAlignment => "no-alignment",
            Method::RealDelay => "real-delay",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub target_column: String,
    pub task: TaskKind,
    /// Ground-truth sidecar location; defaults to `<path>.truth.toml`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_path: Option<PathBuf>,
}

impl DatasetConfig {
    pub fn sidecar_path(&self) -> PathBuf {
        self.truth_path.clone().unwrap_or_else(|| {
            let mut s = self.path.clone().into_os_string();
            s.push(".truth.toml");
            PathBuf::from(s)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 0.5,
            validation: 0.25,
            test: 0.25,
        }
    }
}

impl SplitConfig {
    pub fn to_spec(self) -> Result<SplitSpec> {
        SplitSpec::new(self.train, self.validation, self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
#[serde(tag = "kind")]
pub enum InjectionConfig {
    Fixed {
        delays: Vec<usize>,
    },
    Stochastic {
        candidates: Vec<Vec<usize>>,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: Method,
    /// Bootstrap/ensemble sample count.
    pub b: usize,
    pub block_fraction: f64,
    /// Perturbation scale on the normalized delay scale (perturbed only).
    pub sigma: f64,
    /// Interval levels evaluated for coverage.
    pub alphas: Vec<f64>,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            name: Method::Tsmb,
            b: 100,
            block_fraction: 0.25,
            sigma: 0.1,
            alphas: vec![0.05, 0.2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Gcc,
    Tdmi,
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcc" => Ok(ScoreKind::Gcc),
            "tdmi" => Ok(ScoreKind::Tdmi),
            other => Err(Error::Config(format!(
                "unknown score '{other}' (expected gcc or tdmi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub kind: ScoreKind,
    pub knn_k: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            kind: ScoreKind::Gcc,
            knn_k: crate::scores::DEFAULT_KNN_K,
        }
    }
}

impl ScoreConfig {
    pub fn to_score(self) -> ScoreFunction {
        match self.kind {
            ScoreKind::Gcc => ScoreFunction::Gcc,
            ScoreKind::Tdmi => ScoreFunction::Tdmi { k: self.knn_k },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub l2: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        let gbdt = crate::learners::GbdtParams::default();
        Self {
            kind: LearnerKind::Gbdt,
            n_trees: gbdt.n_trees,
            max_depth: gbdt.max_depth,
            learning_rate: gbdt.learning_rate,
            min_samples_leaf: gbdt.min_samples_leaf,
            l2: crate::learners::LinearParams::default().l2,
        }
    }
}

impl LearnerConfig {
    pub fn to_spec(self, task: TaskKind, seed: u64) -> LearnerSpec {
        LearnerSpec {
            kind: self.kind,
            gbdt: crate::learners::GbdtParams {
                n_trees: self.n_trees,
                max_depth: self.max_depth,
                learning_rate: self.learning_rate,
                min_samples_leaf: self.min_samples_leaf,
            },
            linear: crate::learners::LinearParams { l2: self.l2 },
            loss: match task {
                TaskKind::Regression => Loss::Squared,
                TaskKind::Classification => Loss::Logistic,
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub delay_min: usize,
    pub delay_max: usize,
    pub window_min: usize,
    pub window_max: usize,
    pub budget: usize,
    pub max_iterations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            delay_min: 0,
            delay_max: 30,
            window_min: 1,
            window_max: 4,
            budget: crate::optimizer::DEFAULT_BUDGET,
            max_iterations: crate::optimizer::DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SearchConfig {
    pub fn to_box(self, n_features: usize) -> Result<SearchBox> {
        Ok(SearchBox::uniform(
            n_features,
            (self.delay_min, self.delay_max),
            (self.window_min, self.window_max),
        )?
        .with_budget(self.budget, self.max_iterations))
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Full run configuration; every field beyond `dataset` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionConfig>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Concurrent bootstrap member cap; 0 uses the runtime default.
    /// Excluded from the serialized echo: results are independent of the
    /// worker count, so it is not part of a run's identity.
    #[serde(default, skip_serializing)]
    pub workers: usize,
}

/// CLI flag overrides; precedence is flag > config > default.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<String>,
    pub score: Option<String>,
    pub learner: Option<String>,
    pub b: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub alphas: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<()> {
        if let Some(m) = &o.method {
            self.method.name = m.parse()?;
        }
        if let Some(s) = &o.score {
            self.score.kind = s.parse()?;
        }
        if let Some(l) = &o.learner {
            self.learner.kind = match l.as_str() {
                "gbdt" => LearnerKind::Gbdt,
                "linear" => LearnerKind::Linear,
                other => {
                    return Err(Error::Config(format!(
                        "unknown learner '{other}' (expected gbdt or linear)"
                    )))
                }
            };
        }
        if let Some(b) = o.b {
            self.method.b = b;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if !o.alphas.is_empty() {
            self.method.alphas = o.alphas.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.split.to_spec()?;
        if self.method.b == 0 {
            return Err(Error::Config("method.b must be >= 1".into()));
        }
        if !(self.method.block_fraction > 0.0 && self.method.block_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "method.block_fraction must be in (0, 1], got {}",
                self.method.block_fraction
            )));
        }
        if self.method.sigma < 0.0 {
            return Err(Error::Config("method.sigma must be >= 0".into()));
        }
        if self.method.alphas.is_empty() {
            return Err(Error::Config("method.alphas must not be empty".into()));
        }
        for &alpha in &self.method.alphas {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Config(format!(
                    "method.alphas entries must be in (0, 1), got {alpha}"
                )));
            }
        }
        if self.score.knn_k == 0 {
            return Err(Error::Config("score.knn_k must be >= 1".into()));
        }
        if let Some(injection) = &self.injection {
            match injection {
                InjectionConfig::Fixed { delays } => {
                    if delays.is_empty() {
                        return Err(Error::Config("injection.delays must not be empty".into()));
                    }
                }
                InjectionConfig::Stochastic { candidates, .. } => {
                    if candidates.len() < 2 {
                        return Err(Error::Config(
                            "injection.candidates needs at least 2 delay vectors".into(),
                        ));
                    }
                    if candidates.iter().any(|c| c.len() != candidates[0].len()) {
                        return Err(Error::Config(
                            "injection.candidates must all have the same length".into(),
                        ));
                    }
                }
            }
        }
        // Learner and search bounds are validated when converted; surface
        // those errors now rather than mid-run.
        self.learner
            .to_spec(self.dataset.task, self.seed)
            .validate()?;
        self.search.to_box(1)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[dataset]
path = "data.csv"
target_column = "y"
task = "regression"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.method.name, Method::Tsmb);
        assert_eq!(cfg.method.b, 100);
        assert_eq!(cfg.method.block_fraction, 0.25);
        assert_eq!(cfg.search.budget, 2000);
        assert_eq!(cfg.learner.n_trees, 100);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_named_in_the_error() {
        let text = format!("{MINIMAL}\n[method]\nname = \"tsmb\"\nbee = 3\n");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("bee"), "error was: {err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        let o = Overrides {
            method: Some("tde-point".into()),
            score: Some("tdmi".into()),
            learner: Some("linear".into()),
            b: Some(7),
            seed: Some(99),
            workers: Some(2),
            out: Some(PathBuf::from("elsewhere")),
            alphas: vec![0.1],
        };
        cfg.apply_overrides(&o).unwrap();
        assert_eq!(cfg.method.name, Method::TdePoint);
        assert_eq!(cfg.score.kind, ScoreKind::Tdmi);
        assert_eq!(cfg.learner.kind, LearnerKind::Linear);
        assert_eq!(cfg.method.b, 7);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.method.alphas, vec![0.1]);
    }

    #[test]
    fn bad_override_values_are_rejected() {
        let mut cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        let o = Overrides {
            method: Some("magic".into()),
            ..Overrides::default()
        };
        assert!(cfg.apply_overrides(&o).is_err());
    }

    #[test]
    fn validation_catches_bad_alphas_and_fractions() {
        let mut cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        cfg.method.alphas = vec![1.5];
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        cfg.split.train = 0.9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stochastic_injection_config_parses() {
        let text = format!(
            "{MINIMAL}\n[injection]\nkind = \"stochastic\"\ncandidates = [[1, 2], [3, 4]]\nseed = 5\n"
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        cfg.validate().unwrap();
        match cfg.injection.unwrap() {
            InjectionConfig::Stochastic { candidates, seed } => {
                assert_eq!(candidates, vec![vec![1, 2], vec![3, 4]]);
                assert_eq!(seed, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn sidecar_path_defaults_next_to_the_dataset() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(
            cfg.dataset.sidecar_path(),
            PathBuf::from("data.csv.truth.toml")
        );
    }
}
