use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use advdiff::envs::regression::mean_over_range;
use advdiff::envs::{
    regression_train, Env, PointMassTrackEnv, RegressionObjective, SteeringEnv, TriObjectiveEnv,
};
use advdiff::nets::checkpoint::save_mlp;
use advdiff::rl::{EvalReport, IterationRecord, PositiveCounter, Trainer};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, RewardKind, TaskKind};
use crate::curves::{write_curves, write_input_gradients};
use crate::CliError;

/// One line of `metrics.jsonl`. RL runs fill the rollout and update fields,
/// regression runs fill `mse` and the generator loss.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_return: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual_return: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_errors: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminated_episodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx_kl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disc_loss: Option<f64>,
    /// Mean `D` over the negatives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_negative: Option<f64>,
    /// `D(0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_zero: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp: Option<f64>,
}

impl MetricsRecord {
    fn from_iteration(r: &IterationRecord) -> Self {
        Self {
            iteration: r.iteration,
            samples: r.samples,
            mean_return: Some(r.mean_return),
            manual_return: Some(r.manual_return),
            tracking_error: r.tracking_error,
            objective_errors: r.objective_errors.clone(),
            terminated_episodes: Some(r.terminated_episodes),
            policy_loss: Some(r.update.policy_loss),
            value_loss: Some(r.update.value_loss),
            clip_fraction: Some(r.update.clip_fraction),
            approx_kl: Some(r.update.approx_kl),
            disc_loss: r.update.disc_loss,
            d_negative: r.update.d_negative,
            d_zero: r.update.d_positive,
            gp: r.update.disc_penalty,
            ..Self::default()
        }
    }
}

/// `mean |dD/d delta|` over the far (x > 3) and near (x < 1) samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientShift {
    pub step: usize,
    pub far: f64,
    pub near: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub final_mse: f64,
    /// First and last logged input gradients; adversarial runs only.
    pub initial_gradients: Option<GradientShift>,
    pub final_gradients: Option<GradientShift>,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dir: PathBuf,
    pub task: TaskKind,
    pub reward: RewardKind,
    pub seed: u64,
    pub iterations: u64,
    pub samples: u64,
    pub evaluation: Option<EvalReport>,
    pub positives: Option<PositiveCounter>,
    pub regression: Option<RegressionReport>,
    pub wall_seconds: f64,
}

impl RunReport {
    /// The headline number of a run: evaluation tracking error, the mean
    /// objective error for tasks without a reference, or the dataset MSE.
    pub fn final_error(&self) -> Option<f64> {
        if let Some(r) = &self.regression {
            return Some(r.final_mse);
        }
        let e = self.evaluation.as_ref()?;
        match &e.tracking_error {
            Some(t) => Some(t.mean),
            None if !e.objective_errors.is_empty() => {
                Some(e.objective_errors.iter().map(|m| m.mean).sum::<f64>() / e.objective_errors.len() as f64)
            }
            None => None,
        }
    }
}

struct RunFiles {
    dir: PathBuf,
    metrics: File,
    timing: File,
    start: Instant,
}

impl RunFiles {
    fn create(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let dir = cfg.output_dir.clone();
        fs::create_dir_all(dir.join("checkpoints"))
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        fs::create_dir_all(dir.join("curves"))?;
        fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
        let open = |name: &str| {
            OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(true)
                .open(dir.join(name))
        };
        let metrics = open("metrics.jsonl")?;
        let timing = open("timing.jsonl")?;
        for stale in ["report.json", "divergence.json"] {
            let _ = fs::remove_file(dir.join(stale));
        }
        Ok(Self {
            dir,
            metrics,
            timing,
            start: Instant::now(),
        })
    }

    /// Appends and flushes, so the file parses after a crash.
    fn append(&mut self, record: &MetricsRecord) -> Result<(), CliError> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.metrics.write_all(line.as_bytes())?;
        self.metrics.flush()?;
        let t = json!({"iteration": record.iteration, "wall_seconds": self.elapsed()});
        writeln!(self.timing, "{t}")?;
        self.timing.flush()?;
        Ok(())
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Runs one experiment into `cfg.output_dir`. On divergence the current
/// networks are written to `checkpoints/*_diverged.bin` next to a
/// `divergence.json` before the error is returned.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let mut files = RunFiles::create(cfg)?;
    let result = match cfg.task {
        TaskKind::Regression => run_regression(cfg, &mut files),
        TaskKind::PointmassTrack => run_rl(PointMassTrackEnv::new(cfg.pointmass_config())?, cfg, &mut files),
        TaskKind::TriObjective => run_rl(TriObjectiveEnv::new(cfg.tri_objective.clone())?, cfg, &mut files),
        TaskKind::Steering => run_rl(SteeringEnv::new(cfg.steering_config())?, cfg, &mut files),
    };
    // Curves are written even for a failed run; they only read metrics.jsonl.
    let curves = write_curves(&files.dir);
    let mut report = result?;
    curves?;
    report.wall_seconds = files.elapsed();
    fs::write(files.dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn checkpoint_meta(cfg: &ExperimentConfig, role: &str, iteration: u64, sigma: Option<&[f64]>) -> serde_json::Value {
    json!({
        "role": role,
        "iteration": iteration,
        "sigma": sigma,
        "config": cfg,
    })
}

fn save_nets<E: Env + Clone>(
    trainer: &Trainer<E>,
    cfg: &ExperimentConfig,
    dir: &Path,
    tag: &str,
) -> Result<(), CliError> {
    let l = trainer.learner();
    let it = trainer.iteration();
    let ck = dir.join("checkpoints");
    save_mlp(
        ck.join(format!("policy_{tag}.bin")),
        l.policy.mean_net(),
        checkpoint_meta(cfg, "policy", it, Some(l.policy.sigma())),
    )?;
    save_mlp(ck.join(format!("critic_{tag}.bin")), &l.critic, checkpoint_meta(cfg, "critic", it, None))?;
    if let Some(d) = &l.disc {
        let mut meta = checkpoint_meta(cfg, "discriminator", it, None);
        meta["normalizer"] = serde_json::to_value(&l.normalizer)?;
        save_mlp(ck.join(format!("discriminator_{tag}.bin")), d.net(), meta)?;
    }
    Ok(())
}

fn dump_divergence(dir: &Path, iteration: u64, err: &CliError) -> Result<(), CliError> {
    let body = json!({"iteration": iteration, "error": err.to_string()});
    fs::write(dir.join("divergence.json"), serde_json::to_string_pretty(&body)?)?;
    Ok(())
}

fn run_rl<E: Env + Clone>(env: E, cfg: &ExperimentConfig, files: &mut RunFiles) -> Result<RunReport, CliError> {
    let mut trainer = Trainer::new(env, cfg.train_config())?;
    for _ in 0..cfg.iterations {
        let record = match trainer.iterate() {
            Ok(r) => r,
            Err(e) => {
                let err = CliError::from(e);
                if matches!(err, CliError::Divergence(_)) {
                    dump_divergence(&files.dir, trainer.iteration(), &err)?;
                    save_nets(&trainer, cfg, &files.dir, "diverged")?;
                }
                return Err(err);
            }
        };
        files.append(&MetricsRecord::from_iteration(&record))?;
        let done = trainer.iteration();
        if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && done < cfg.iterations {
            save_nets(&trainer, cfg, &files.dir, &format!("iter_{done:06}"))?;
        }
    }
    save_nets(&trainer, cfg, &files.dir, "final")?;
    let evaluation = trainer.evaluate(cfg.eval.episodes, cfg.eval_horizon(), cfg.eval.seed)?;
    Ok(RunReport {
        dir: files.dir.clone(),
        task: cfg.task,
        reward: cfg.reward,
        seed: cfg.seed,
        iterations: trainer.iteration(),
        samples: trainer.samples(),
        evaluation: Some(evaluation),
        positives: trainer.learner().disc.as_ref().map(|_| trainer.learner().positives.clone()),
        regression: None,
        wall_seconds: 0.0,
    })
}

fn run_regression(cfg: &ExperimentConfig, files: &mut RunFiles) -> Result<RunReport, CliError> {
    let hyper = cfg.regression_hyper();
    let objective = match cfg.reward {
        RewardKind::Supervised => RegressionObjective::Supervised,
        _ => RegressionObjective::Adversarial,
    };
    if hyper.steps == 0 {
        return Ok(RunReport {
            dir: files.dir.clone(),
            task: cfg.task,
            reward: cfg.reward,
            seed: cfg.seed,
            iterations: 0,
            samples: 0,
            evaluation: None,
            positives: None,
            regression: None,
            wall_seconds: 0.0,
        });
    }
    let out = match regression_train(&hyper, objective) {
        Ok(o) => o,
        Err(e) => {
            let err = CliError::from(e);
            if matches!(err, CliError::Divergence(_)) {
                dump_divergence(&files.dir, 0, &err)?;
            }
            return Err(err);
        }
    };
    let adversarial = objective == RegressionObjective::Adversarial;
    for l in &out.log {
        let step = l.step as u64;
        files.append(&MetricsRecord {
            iteration: step,
            samples: step * hyper.points as u64,
            mse: Some(l.mse),
            generator_loss: l.g_loss.is_finite().then_some(l.g_loss),
            disc_loss: (adversarial && l.d_loss.is_finite()).then_some(l.d_loss),
            d_negative: (adversarial && l.d_delta.is_finite()).then_some(l.d_delta),
            d_zero: (adversarial && l.d_zero.is_finite()).then_some(l.d_zero),
            gp: (adversarial && l.d_loss.is_finite()).then_some(l.penalty),
            ..MetricsRecord::default()
        })?;
    }
    let xs = out.task.xs();
    let shift = |(step, g): &(usize, Vec<f64>)| GradientShift {
        step: *step,
        far: mean_over_range(xs, g, 3.0, f64::INFINITY),
        near: mean_over_range(xs, g, f64::NEG_INFINITY, 1.0),
    };
    write_input_gradients(&files.dir, xs, &out.input_gradients)?;
    let ck = files.dir.join("checkpoints");
    save_mlp(ck.join("generator_final.bin"), &out.generator, checkpoint_meta(cfg, "generator", hyper.steps as u64, None))?;
    if let Some(d) = &out.discriminator {
        save_mlp(
            ck.join("discriminator_final.bin"),
            d.net(),
            checkpoint_meta(cfg, "discriminator", hyper.steps as u64, None),
        )?;
    }
    Ok(RunReport {
        dir: files.dir.clone(),
        task: cfg.task,
        reward: cfg.reward,
        seed: cfg.seed,
        iterations: hyper.steps as u64,
        samples: (hyper.steps * hyper.points) as u64,
        evaluation: None,
        positives: None,
        regression: Some(RegressionReport {
            final_mse: out.final_mse,
            initial_gradients: out.input_gradients.first().map(shift),
            final_gradients: out.input_gradients.last().map(shift),
        }),
        wall_seconds: 0.0,
    })
}
