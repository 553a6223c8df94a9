use crate::rl::{gae, td_lambda_targets, RlError};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// The sampled (unclamped) action.
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    /// The episode terminated on this step (failure), so nothing is bootstrapped.
    pub done: bool,
    /// Raw differential after the step.
    pub delta: Vec<f64>,
    /// Outer iteration that produced this transition.
    pub iteration: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    /// Value of the state after the last transition; 0 if it terminated.
    pub bootstrap_value: f64,
    pub tracking_errors: Vec<f64>,
    /// Per step, one entry per task objective.
    pub objective_errors: Vec<Vec<f64>>,
    pub manual_return: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn terminated(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.done)
    }

    pub fn reward_sum(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }

    pub fn mean_tracking_error(&self) -> Option<f64> {
        if self.tracking_errors.is_empty() {
            None
        } else {
            Some(self.tracking_errors.iter().sum::<f64>() / self.tracking_errors.len() as f64)
        }
    }
}

/// On-policy experience of one outer iteration, grouped by episode.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBuffer {
    pub iteration: u64,
    pub episodes: Vec<Episode>,
}

impl TrajectoryBuffer {
    pub fn new(iteration: u64) -> Self {
        Self {
            iteration,
            episodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.episodes.iter().map(Episode::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.episodes.iter().flat_map(|e| e.transitions.iter())
    }

    pub fn deltas(&self) -> Vec<&[f64]> {
        self.transitions().map(|t| t.delta.as_slice()).collect()
    }

    /// `(advantages, value targets)` flattened in episode order.
    pub fn advantages_and_targets(
        &self,
        gamma: f64,
        gae_lambda: f64,
        td_lambda: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), RlError> {
        let mut adv = Vec::with_capacity(self.len());
        let mut targets = Vec::with_capacity(self.len());
        for ep in &self.episodes {
            let r: Vec<f64> = ep.transitions.iter().map(|t| t.reward).collect();
            let v: Vec<f64> = ep.transitions.iter().map(|t| t.value).collect();
            let d: Vec<bool> = ep.transitions.iter().map(|t| t.done).collect();
            adv.extend(gae(&r, &v, ep.bootstrap_value, &d, gamma, gae_lambda)?);
            targets.extend(td_lambda_targets(&r, &v, ep.bootstrap_value, &d, gamma, td_lambda)?);
        }
        Ok((adv, targets))
    }

    /// Mean over episodes of the per-episode mean tracking error.
    pub fn mean_tracking_error(&self) -> Option<f64> {
        let errs: Vec<f64> = self.episodes.iter().filter_map(Episode::mean_tracking_error).collect();
        if errs.is_empty() {
            None
        } else {
            Some(errs.iter().sum::<f64>() / errs.len() as f64)
        }
    }

    /// Mean per objective over all steps.
    pub fn mean_objective_errors(&self) -> Vec<f64> {
        let mut sum: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for row in self.episodes.iter().flat_map(|e| e.objective_errors.iter()) {
            if sum.is_empty() {
                sum = vec![0.0; row.len()];
            }
            for (s, v) in sum.iter_mut().zip(row) {
                *s += v;
            }
            n += 1;
        }
        sum.iter().map(|s| s / n.max(1) as f64).collect()
    }

    /// Mean reward sum per episode.
    pub fn mean_episode_return(&self) -> f64 {
        let n = self.episodes.len().max(1) as f64;
        self.episodes.iter().map(Episode::reward_sum).sum::<f64>() / n
    }
}
