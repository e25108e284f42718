//! Experiment configuration, loadable from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use qubo_tree::{PenaltyWeights, QuboProblem, Schedule, TargetTransform};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SYNTHETIC_REPEATS: usize = 5;
pub const DEFAULT_REAL_REPEATS: usize = 10;
pub const DEFAULT_TRIALS: usize = 1000;
/// `a` used for tabular data and for the constrained arm of an ablation.
pub const DEFAULT_SPLIT_RATIO: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Synthetic,
    Real,
    Ablation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Fresh planted dataset per repeat, seeded `base_seed + repeat`.
    Synthetic {
        n_samples: usize,
        n_conditions: usize,
        k: usize,
    },
    /// Binarized once, then subsampled to `n_samples` rows per repeat.
    Csv {
        path: PathBuf,
        schema: PathBuf,
        n_samples: usize,
        #[serde(default = "default_q_fractions")]
        q_fractions: Vec<f64>,
        #[serde(default = "default_max_categories")]
        max_categories: usize,
    },
    /// Continuous pool with a two-feature interaction, handled like `Csv`.
    Planted {
        pool_size: usize,
        n_features: usize,
        effect: f64,
        noise_sd: f64,
        n_samples: usize,
        #[serde(default = "default_q_fractions")]
        q_fractions: Vec<f64>,
    },
}

fn default_q_fractions() -> Vec<f64> {
    qubo_tree::data::DEFAULT_Q_FRACTIONS.to_vec()
}

fn default_max_categories() -> usize {
    qubo_tree::binarize::DEFAULT_MAX_CATEGORIES
}

impl DatasetSource {
    pub fn n_samples(&self) -> usize {
        match self {
            DatasetSource::Synthetic { n_samples, .. }
            | DatasetSource::Csv { n_samples, .. }
            | DatasetSource::Planted { n_samples, .. } => *n_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    /// Defaults to the scale of the largest linear coefficient.
    pub t_start: Option<f64>,
    /// Defaults to `1e-3 * t_start`.
    pub t_end: Option<f64>,
}

fn default_sweeps() -> usize {
    qubo_tree::anneal::DEFAULT_SWEEPS
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            sweeps: default_sweeps(),
            t_start: None,
            t_end: None,
        }
    }
}

impl ScheduleConfig {
    pub fn resolve(&self, problem: &QuboProblem) -> qubo_tree::Result<Schedule> {
        let d = Schedule::default_for(problem);
        let t_start = self.t_start.unwrap_or(d.t_start);
        let t_end = self.t_end.unwrap_or(1e-3 * t_start);
        Schedule::new(t_start, t_end, self.sweeps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub dataset: DatasetSource,
    /// One run per entry.
    pub max_conditions: Vec<usize>,
    /// `None` drops the split-ratio constraint. Ablations use this value, or
    /// [`DEFAULT_SPLIT_RATIO`], for their constrained arm.
    #[serde(default)]
    pub min_split_ratio: Option<f64>,
    #[serde(default)]
    pub weights: Option<PenaltyWeights>,
    #[serde(default)]
    pub target_transform: TargetTransform,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    /// Defaults by mode: 5 synthetic, 10 otherwise.
    #[serde(default)]
    pub n_repeats: Option<usize>,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

impl ExperimentConfig {
    pub fn synthetic(
        n_samples: usize,
        n_conditions: usize,
        k: usize,
        max_conditions: usize,
    ) -> Self {
        Self {
            mode: Mode::Synthetic,
            dataset: DatasetSource::Synthetic {
                n_samples,
                n_conditions,
                k,
            },
            max_conditions: vec![max_conditions],
            min_split_ratio: None,
            weights: None,
            target_transform: TargetTransform::default(),
            schedule: ScheduleConfig::default(),
            n_trials: DEFAULT_TRIALS,
            n_repeats: None,
            base_seed: 0,
        }
    }

    pub fn real(dataset: DatasetSource, max_conditions: usize) -> Self {
        Self {
            mode: Mode::Real,
            dataset,
            max_conditions: vec![max_conditions],
            min_split_ratio: Some(DEFAULT_SPLIT_RATIO),
            weights: None,
            target_transform: TargetTransform::default(),
            schedule: ScheduleConfig::default(),
            n_trials: DEFAULT_TRIALS,
            n_repeats: None,
            base_seed: 0,
        }
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn repeats(&self) -> usize {
        self.n_repeats.unwrap_or(match self.mode {
            Mode::Synthetic => DEFAULT_SYNTHETIC_REPEATS,
            Mode::Real | Mode::Ablation => DEFAULT_REAL_REPEATS,
        })
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.max_conditions.is_empty() {
            bail!("max_conditions must list at least one M");
        }
        if self.max_conditions.contains(&0) {
            bail!("M must be at least 1");
        }
        if self.n_trials == 0 || self.repeats() == 0 {
            bail!("n_trials and n_repeats must be positive");
        }
        if let Some(a) = self.min_split_ratio {
            if !(0.0..0.5).contains(&a) {
                bail!("min_split_ratio must lie in [0, 0.5), got {a}");
            }
        }
        if let Some(w) = &self.weights {
            w.validate()?;
        }
        if self.mode == Mode::Synthetic && !matches!(self.dataset, DatasetSource::Synthetic { .. })
        {
            bail!("synthetic mode needs a synthetic dataset source");
        }
        if self.dataset.n_samples() < 2 {
            bail!("need at least 2 samples");
        }
        if let (Some(s), Some(e)) = (self.schedule.t_start, self.schedule.t_end) {
            Schedule::new(s, e, self.schedule.sweeps)?;
        }
        Ok(())
    }
}
