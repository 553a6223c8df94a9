use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use advdiff::baselines::{ExpRewardSpec, ExpSetting};
use advdiff::envs::{PointMassConfig, RegressionHyper, SteeringConfig, TriObjectiveConfig};
use advdiff::rl::{RewardSource, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    PointmassTrack,
    TriObjective,
    Steering,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Regression => "regression",
            TaskKind::PointmassTrack => "pointmass_track",
            TaskKind::TriObjective => "tri_objective",
            TaskKind::Steering => "steering",
        }
    }

    /// The hand-designed reward each task is compared against.
    pub fn manual_reward(self) -> RewardKind {
        match self {
            TaskKind::Regression => RewardKind::Supervised,
            TaskKind::PointmassTrack => RewardKind::ExpManual,
            TaskKind::TriObjective => RewardKind::ToleranceManual,
            TaskKind::Steering => RewardKind::Mixed,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Add,
    ExpManual,
    ToleranceManual,
    Mixed,
    /// Plain L2 regression; the reference run for the regression task.
    Supervised,
}

impl RewardKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RewardKind::Add => "add",
            RewardKind::ExpManual => "exp_manual",
            RewardKind::ToleranceManual => "tolerance_manual",
            RewardKind::Mixed => "mixed",
            RewardKind::Supervised => "supervised",
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub seed: u64,
    /// Defaults to the training horizon.
    pub horizon: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 16,
            seed: 10_000,
            horizon: None,
        }
    }
}

/// Everything a run needs. `seed` and `reward` override the corresponding
/// fields of `train`; for the regression task `iterations` is the number of
/// generator steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub reward: RewardKind,
    pub iterations: u64,
    pub seed: u64,
    /// Seeds of an ablation grid; empty means `[seed]`.
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Checkpoint every this many iterations (0: final only).
    pub checkpoint_every: u64,
    /// Replaces the exp-reward weights of the tracking tasks.
    pub exp_setting: Option<ExpSetting>,
    pub eval: EvalConfig,
    pub train: TrainConfig,
    pub pointmass: PointMassConfig,
    pub tri_objective: TriObjectiveConfig,
    pub steering: SteeringConfig,
    pub regression: RegressionHyper,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::PointmassTrack,
            reward: RewardKind::Add,
            iterations: 150,
            seed: 0,
            seeds: Vec::new(),
            output_dir: PathBuf::from("runs/default"),
            checkpoint_every: 50,
            exp_setting: None,
            eval: EvalConfig::default(),
            train: TrainConfig::default(),
            pointmass: PointMassConfig::default(),
            tri_objective: TriObjectiveConfig::default(),
            steering: SteeringConfig::default(),
            regression: RegressionHyper::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut value: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: ExperimentConfig = value.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let allowed: &[RewardKind] = match self.task {
            TaskKind::Regression => &[RewardKind::Add, RewardKind::Supervised],
            TaskKind::PointmassTrack => &[RewardKind::Add, RewardKind::ExpManual],
            TaskKind::TriObjective => &[RewardKind::Add, RewardKind::ToleranceManual],
            TaskKind::Steering => &[RewardKind::Add, RewardKind::Mixed],
        };
        if !allowed.contains(&self.reward) {
            return Err(CliError::Config(format!(
                "reward `{}` is not available for task `{}`",
                self.reward, self.task
            )));
        }
        if self.eval.episodes == 0 || self.eval.horizon == Some(0) {
            return Err(CliError::Config("evaluation needs at least one episode and step".into()));
        }
        if self.task != TaskKind::Regression {
            self.train_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// The training config with the experiment-level seed and reward applied.
    pub fn train_config(&self) -> TrainConfig {
        let mut t = self.train.clone();
        t.seed = self.seed;
        t.reward_source = if self.reward == RewardKind::Add {
            RewardSource::Add
        } else {
            RewardSource::Manual
        };
        t
    }

    pub fn pointmass_config(&self) -> PointMassConfig {
        let mut c = self.pointmass.clone();
        if let Some(s) = self.exp_setting {
            c.exp_reward = ExpRewardSpec::point_mass(s);
        }
        c
    }

    pub fn steering_config(&self) -> SteeringConfig {
        let mut c = self.steering.clone();
        if let Some(s) = self.exp_setting {
            c.tracking_reward = ExpRewardSpec::point_mass(s);
        }
        c
    }

    pub fn regression_hyper(&self) -> RegressionHyper {
        let mut h = self.regression.clone();
        h.steps = self.iterations as usize;
        h.seed = self.seed;
        h
    }

    pub fn eval_horizon(&self) -> usize {
        self.eval.horizon.unwrap_or(self.train.horizon)
    }
}

/// Applies `path.to.key=value`. The value is parsed as a TOML value and
/// falls back to a bare string.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override path `{path}`")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{path}`: `{key}` is not inside a table")))?;
        node = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| CliError::Config(format!("`{path}` does not name a table entry")))?;
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// The grid axes of `ablate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationAxis {
    GpMode,
    ExpWeights,
    RewardSource,
}

impl AblationAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationAxis::GpMode => "gp_mode",
            AblationAxis::ExpWeights => "exp_weights",
            AblationAxis::RewardSource => "reward_source",
        }
    }
}

impl FromStr for AblationAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gp_mode" => Ok(AblationAxis::GpMode),
            "exp_weights" | "exp_weight_settings" => Ok(AblationAxis::ExpWeights),
            "reward_source" | "reward" => Ok(AblationAxis::RewardSource),
            _ => Err(format!("unknown axis `{s}` (gp_mode, exp_weights, reward_source)")),
        }
    }
}
