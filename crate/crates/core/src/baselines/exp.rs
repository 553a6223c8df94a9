use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::add::{differential, FeatureLayout, Features};
use crate::baselines::BaselineError;

/// One `w * exp(-alpha * |e|^2)` term over a group of features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub name: String,
    pub weight: f64,
    pub scale: f64,
    /// Feature labels making up the error vector. May be empty, in which
    /// case the term contributes its full weight.
    #[serde(default)]
    pub features: Vec<String>,
    /// Per-feature weights inside the squared norm; all 1 when absent.
    #[serde(default)]
    pub feature_weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpRewardSpec {
    pub terms: Vec<ExpTerm>,
}

/// The reward-weight settings of the tracking sensitivity study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpSetting {
    #[serde(rename = "setting_1")]
    Setting1,
    #[serde(rename = "setting_2")]
    Setting2,
    #[serde(rename = "setting_3")]
    Setting3,
    #[serde(rename = "setting_4")]
    Setting4,
    #[serde(rename = "setting_5")]
    Setting5,
    Default,
}

impl ExpSetting {
    pub const ALL: [ExpSetting; 6] = [
        ExpSetting::Setting1,
        ExpSetting::Setting2,
        ExpSetting::Setting3,
        ExpSetting::Setting4,
        ExpSetting::Setting5,
        ExpSetting::Default,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExpSetting::Setting1 => "setting_1",
            ExpSetting::Setting2 => "setting_2",
            ExpSetting::Setting3 => "setting_3",
            ExpSetting::Setting4 => "setting_4",
            ExpSetting::Setting5 => "setting_5",
            ExpSetting::Default => "default",
        }
    }

    /// Name as printed in the sensitivity table.
    pub fn label(self) -> &'static str {
        match self {
            ExpSetting::Setting1 => "Setting 1",
            ExpSetting::Setting2 => "Setting 2",
            ExpSetting::Setting3 => "Setting 3",
            ExpSetting::Setting4 => "Setting 4",
            ExpSetting::Setting5 => "Setting 5",
            ExpSetting::Default => "Default*",
        }
    }

    /// `(weights, scales)` in the order pose, joint velocity, root velocity,
    /// end effector, center of mass.
    pub fn parameters(self) -> ([f64; 5], [f64; 5]) {
        const W: [f64; 5] = [0.5, 0.1, 0.15, 0.1, 0.15];
        match self {
            ExpSetting::Setting1 => ([0.2; 5], [1.0; 5]),
            ExpSetting::Setting2 => (W, [4.0, 10.0, 0.2, 1.0, 0.1]),
            ExpSetting::Setting3 => (W, [0.2, 0.05, 3.0, 1.5, 8.0]),
            ExpSetting::Setting4 => (W, [10.0, 0.04, 100.0, 7.5, 75.0]),
            ExpSetting::Setting5 => ([0.2, 0.1, 0.2, 0.05, 0.45], [0.25, 0.01, 5.0, 1.0, 10.0]),
            ExpSetting::Default => (W, [0.25, 0.01, 5.0, 1.0, 10.0]),
        }
    }
}

impl fmt::Display for ExpSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExpSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExpSetting::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.label() == s)
            .ok_or_else(|| format!("unknown reward setting `{s}`"))
    }
}

pub const TERM_NAMES: [&str; 5] = ["p", "jv", "rv", "e", "c"];

impl ExpRewardSpec {
    /// Five-term tracking reward with the given setting. `groups` gives the
    /// feature labels of each term in `TERM_NAMES` order.
    pub fn tracking(setting: ExpSetting, groups: [&[&str]; 5]) -> Self {
        let (w, a) = setting.parameters();
        Self {
            terms: (0..5)
                .map(|i| ExpTerm {
                    name: TERM_NAMES[i].to_string(),
                    weight: w[i],
                    scale: a[i],
                    features: groups[i].iter().map(|s| s.to_string()).collect(),
                    feature_weights: None,
                })
                .collect(),
        }
    }

    /// Tracking reward on a point mass: pose -> position, joint and root
    /// velocity -> velocity; end-effector and center-of-mass terms are empty.
    pub fn point_mass(setting: ExpSetting) -> Self {
        const POS: &[&str] = &["pos_x", "pos_y"];
        const VEL: &[&str] = &["vel_x", "vel_y"];
        Self::tracking(setting, [POS, VEL, VEL, &[], &[]])
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        for t in &self.terms {
            if !(t.weight >= 0.0) {
                return Err(BaselineError::InvalidSpec(format!("term {}: weight < 0", t.name)));
            }
            if !(t.scale > 0.0) {
                return Err(BaselineError::InvalidSpec(format!("term {}: scale <= 0", t.name)));
            }
            if let Some(fw) = &t.feature_weights {
                if fw.len() != t.features.len() || fw.iter().any(|w| !(*w >= 0.0)) {
                    return Err(BaselineError::InvalidSpec(format!(
                        "term {}: feature weights must be non-negative, one per feature",
                        t.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Resolves feature labels against `layout` once, for repeated evaluation.
    pub fn resolve(&self, layout: &FeatureLayout) -> Result<ResolvedExpReward, BaselineError> {
        self.validate()?;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut idx = Vec::with_capacity(t.features.len());
            for f in &t.features {
                let i = layout
                    .labels()
                    .iter()
                    .position(|l| l == f)
                    .ok_or_else(|| BaselineError::MissingFeature(f.clone()))?;
                idx.push(i);
            }
            let fw = t
                .feature_weights
                .clone()
                .unwrap_or_else(|| vec![1.0; idx.len()]);
            terms.push((t.weight, t.scale, idx, fw));
        }
        Ok(ResolvedExpReward { terms })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedExpReward {
    terms: Vec<(f64, f64, Vec<usize>, Vec<f64>)>,
}

impl ResolvedExpReward {
    /// Reward for a differential `reference ⊖ agent` in the resolved layout.
    pub fn eval(&self, delta: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(w, a, idx, fw)| {
                let e2: f64 = idx.iter().zip(fw).map(|(&i, k)| k * delta[i] * delta[i]).sum();
                w * (-a * e2).exp()
            })
            .sum()
    }
}

/// `sum_i w_i exp(-alpha_i |e_i|^2)` with `e_i` the group-`i` part of
/// `reference ⊖ agent`.
pub fn exp_reward(spec: &ExpRewardSpec, agent: &Features, reference: &Features) -> Result<f64, BaselineError> {
    let delta = differential(reference, agent).map_err(|_| BaselineError::LayoutMismatch)?;
    Ok(spec.resolve(delta.layout())?.eval(delta.values()))
}

/// Same sum from precomputed squared group errors, one per term.
pub fn exp_reward_from_errors(spec: &ExpRewardSpec, squared_errors: &[f64]) -> Result<f64, BaselineError> {
    if squared_errors.len() != spec.terms.len() {
        return Err(BaselineError::InvalidSpec(format!(
            "{} squared errors for {} terms",
            squared_errors.len(),
            spec.terms.len()
        )));
    }
    Ok(spec
        .terms
        .iter()
        .zip(squared_errors)
        .map(|(t, e2)| t.weight * (-t.scale * e2).exp())
        .sum())
}
