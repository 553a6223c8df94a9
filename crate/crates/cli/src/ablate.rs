use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use advdiff::baselines::ExpSetting;
use advdiff::rl::MeanStd;
use advdiff::GpMode;
use serde::{Deserialize, Serialize};

use crate::config::{AblationAxis, ExperimentConfig, RewardKind, TaskKind};
use crate::run::run;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: String,
    pub label: String,
    pub seed: u64,
    pub final_error: f64,
    pub manual_return: Option<f64>,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub setting: String,
    pub label: String,
    pub runs: usize,
    /// Mean and (population) std of `final_error` across seeds.
    pub final_error: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub dir: PathBuf,
    pub axis: String,
    pub rows: Vec<AblationRow>,
    pub summary: Vec<AblationSummary>,
}

impl AblationResult {
    pub fn summary_for(&self, setting: &str) -> Option<&AblationSummary> {
        self.summary.iter().find(|s| s.setting == setting)
    }
}

/// The grid points of an axis as `(name, label, config)`.
pub fn grid(base: &ExperimentConfig, axis: AblationAxis) -> Result<Vec<(String, String, ExperimentConfig)>, CliError> {
    let mut out = Vec::new();
    match axis {
        AblationAxis::GpMode => {
            for mode in GpMode::ALL {
                let mut c = base.clone();
                c.reward = RewardKind::Add;
                c.train.gp_mode = mode;
                c.regression.gp_mode = mode;
                out.push((mode.as_str().to_string(), mode.to_string(), c));
            }
        }
        AblationAxis::ExpWeights => {
            if !matches!(base.task, TaskKind::PointmassTrack | TaskKind::Steering) {
                return Err(CliError::Config(format!("task `{}` has no exp-weight settings", base.task)));
            }
            for s in ExpSetting::ALL {
                let mut c = base.clone();
                c.reward = base.task.manual_reward();
                c.exp_setting = Some(s);
                out.push((s.as_str().to_string(), s.label().to_string(), c));
            }
        }
        AblationAxis::RewardSource => {
            for r in [RewardKind::Add, base.task.manual_reward()] {
                let mut c = base.clone();
                c.reward = r;
                out.push((r.as_str().to_string(), r.as_str().to_string(), c));
            }
        }
    }
    Ok(out)
}

/// One run per grid point and seed under
/// `output_dir/ablation_<axis>/<setting>/seed_<s>`, then `ablation.csv`
/// (one row per run) and `summary.csv` (mean ± std per setting).
pub fn ablate(base: &ExperimentConfig, axis: AblationAxis) -> Result<AblationResult, CliError> {
    base.validate()?;
    let root = base.output_dir.join(format!("ablation_{}", axis.as_str()));
    let points = grid(base, axis)?;
    let seeds = base.seeds();
    let mut rows = Vec::new();
    for (name, label, cfg) in &points {
        for &seed in &seeds {
            let mut c = cfg.clone();
            c.seed = seed;
            c.seeds = Vec::new();
            c.output_dir = root.join(name).join(format!("seed_{seed}"));
            let report = run(&c)?;
            rows.push(AblationRow {
                setting: name.clone(),
                label: label.clone(),
                seed,
                final_error: report.final_error().unwrap_or(f64::NAN),
                manual_return: report.evaluation.as_ref().map(|e| e.manual_return.mean),
                samples: report.samples,
            });
        }
    }
    let summary: Vec<AblationSummary> = points
        .iter()
        .map(|(name, label, _)| {
            let errs: Vec<f64> = rows.iter().filter(|r| &r.setting == name).map(|r| r.final_error).collect();
            AblationSummary {
                setting: name.clone(),
                label: label.clone(),
                runs: errs.len(),
                final_error: MeanStd::of(&errs),
            }
        })
        .collect();

    let mut table = String::from("setting,label,seed,final_error,manual_return,samples\n");
    for r in &rows {
        let manual = r.manual_return.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(table, "{},{},{},{},{},{}", r.setting, r.label, r.seed, r.final_error, manual, r.samples);
    }
    let mut sum = String::from("setting,label,runs,mean_final_error,std_final_error\n");
    for s in &summary {
        let _ = writeln!(sum, "{},{},{},{},{}", s.setting, s.label, s.runs, s.final_error.mean, s.final_error.std);
    }
    fs::create_dir_all(&root)?;
    fs::write(root.join("ablation.csv"), table)?;
    fs::write(root.join("summary.csv"), sum)?;
    Ok(AblationResult {
        dir: root,
        axis: axis.as_str().to_string(),
        rows,
        summary,
    })
}
