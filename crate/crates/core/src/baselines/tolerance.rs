use serde::{Deserialize, Serialize};

use crate::baselines::BaselineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigmoid {
    Linear,
    Gaussian,
}

/// `1` on `[lower, upper]`, decaying outside over `margin` to `value_at_margin`.
/// `None` bounds are unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub margin: f64,
    pub value_at_margin: f64,
    pub sigmoid: Sigmoid,
}

impl ToleranceSpec {
    pub fn new(
        lower: Option<f64>,
        upper: Option<f64>,
        margin: f64,
        value_at_margin: f64,
        sigmoid: Sigmoid,
    ) -> Result<Self, BaselineError> {
        let spec = Self {
            lower,
            upper,
            margin,
            value_at_margin,
            sigmoid,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `[lower, inf)`
    pub fn at_least(lower: f64, margin: f64, value_at_margin: f64, sigmoid: Sigmoid) -> Result<Self, BaselineError> {
        Self::new(Some(lower), None, margin, value_at_margin, sigmoid)
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        if let (Some(a), Some(b)) = (self.lower, self.upper) {
            if a > b {
                return Err(BaselineError::InvalidSpec(format!("tolerance bounds {a} > {b}")));
            }
        }
        if !(self.margin > 0.0) {
            return Err(BaselineError::InvalidSpec("tolerance margin must be > 0".into()));
        }
        if !(self.value_at_margin > 0.0 && self.value_at_margin < 1.0) {
            return Err(BaselineError::InvalidSpec(
                "tolerance value at margin must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Normalized distance outside the bounds, `max(a - x, x - b) / m`, or 0 inside.
    pub fn distance(&self, x: f64) -> f64 {
        let below = self.lower.map_or(f64::NEG_INFINITY, |a| a - x);
        let above = self.upper.map_or(f64::NEG_INFINITY, |b| x - b);
        below.max(above).max(0.0) / self.margin
    }
}

pub fn tolerance(x: f64, spec: &ToleranceSpec) -> f64 {
    let d = spec.distance(x);
    if d == 0.0 {
        return 1.0;
    }
    let vm = spec.value_at_margin;
    match spec.sigmoid {
        Sigmoid::Linear => {
            let s = (1.0 - vm) * d;
            if s.abs() < 1.0 {
                1.0 - s
            } else {
                0.0
            }
        }
        Sigmoid::Gaussian => (-(1.0 / vm).ln() * d * d).exp(),
    }
}

/// Targets and margins of the stand-and-move reward. `humanoid()` uses
/// humanoid-scale targets; `toy()` matches the point-mass three-objective task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkerRewardSpec {
    pub height_target: f64,
    pub height_margin: f64,
    pub speed_target: f64,
    pub speed_margin: f64,
}

impl WalkerRewardSpec {
    pub fn humanoid() -> Self {
        Self {
            height_target: 1.2,
            height_margin: 0.6,
            speed_target: 8.0,
            speed_margin: 4.0,
        }
    }

    pub fn toy() -> Self {
        Self {
            height_target: 1.0,
            height_margin: 0.5,
            speed_target: 1.0,
            speed_margin: 0.5,
        }
    }

    fn stand(&self) -> ToleranceSpec {
        ToleranceSpec {
            lower: Some(self.height_target),
            upper: None,
            margin: self.height_margin,
            value_at_margin: 0.1,
            sigmoid: Sigmoid::Gaussian,
        }
    }

    fn mov(&self) -> ToleranceSpec {
        ToleranceSpec {
            lower: Some(self.speed_target),
            upper: None,
            margin: self.speed_margin,
            value_at_margin: 0.5,
            sigmoid: Sigmoid::Linear,
        }
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        self.stand().validate()?;
        self.mov().validate()
    }
}

/// `(r_stand, r_move)`.
pub fn walker_terms(h: f64, u: f64, v: f64, spec: &WalkerRewardSpec) -> (f64, f64) {
    let stand = (3.0 * tolerance(h, &spec.stand()) + (1.0 + u) / 2.0) / 4.0;
    (stand, tolerance(v, &spec.mov()))
}

/// `r_stand * (5 r_move + 1) / 6`.
pub fn walker_manual_reward(h: f64, u: f64, v: f64, spec: &WalkerRewardSpec) -> f64 {
    let (stand, mov) = walker_terms(h, u, v, spec);
    stand * (5.0 * mov + 1.0) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian(vm: f64, m: f64) -> ToleranceSpec {
        ToleranceSpec::new(Some(-1.0), Some(2.0), m, vm, Sigmoid::Gaussian).unwrap()
    }

    #[test]
    fn inside_bounds_is_one() {
        let g = gaussian(0.1, 0.5);
        for x in [-1.0, 0.0, 1.5, 2.0] {
            assert_eq!(tolerance(x, &g), 1.0);
        }
    }

    #[test]
    fn gaussian_at_one_margin_is_value_at_margin() {
        let g = gaussian(0.1, 0.5);
        assert!((tolerance(2.5, &g) - 0.1).abs() < 1e-12);
        assert!((tolerance(-1.5, &g) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn linear_profile() {
        let l = ToleranceSpec::new(Some(0.0), Some(0.0), 1.0, 0.5, Sigmoid::Linear).unwrap();
        assert_eq!(tolerance(1.0, &l), 0.5);
        assert_eq!(tolerance(-0.5, &l), 0.75);
        assert_eq!(tolerance(2.0, &l), 0.0);
        assert_eq!(tolerance(7.0, &l), 0.0);
    }

    #[test]
    fn unbounded_side_never_decays() {
        let s = ToleranceSpec::at_least(1.2, 0.6, 0.1, Sigmoid::Gaussian).unwrap();
        assert_eq!(tolerance(1e9, &s), 1.0);
        assert!((tolerance(0.6, &s) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ToleranceSpec::new(Some(2.0), Some(1.0), 1.0, 0.5, Sigmoid::Linear).is_err());
        assert!(ToleranceSpec::new(None, None, 0.0, 0.5, Sigmoid::Linear).is_err());
        assert!(ToleranceSpec::new(None, None, 1.0, 1.0, Sigmoid::Linear).is_err());
        assert!(ToleranceSpec::new(None, None, 1.0, 0.0, Sigmoid::Gaussian).is_err());
    }

    #[test]
    fn walker_saturates_at_targets() {
        let p = WalkerRewardSpec::humanoid();
        assert_eq!(walker_manual_reward(1.2, 1.0, 8.0, &p), 1.0);
        assert_eq!(walker_manual_reward(5.0, 1.0, 20.0, &p), 1.0);
        // (1 - 0.5) * d reaches 1 at d = 2, i.e. v = 8 - 2 * 4 = 0.
        assert!((walker_manual_reward(1.2, 1.0, 0.0, &p) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn walker_matches_formula() {
        let p = WalkerRewardSpec::humanoid();
        for i in 0..200 {
            let h = 0.01 * i as f64;
            let u = ((i as f64) * 0.37).sin();
            let v = 0.05 * i as f64;
            let dh = ((1.2 - h) / 0.6).max(0.0);
            let stand_h = if dh == 0.0 { 1.0 } else { (-(10.0f64).ln() * dh * dh).exp() };
            let dv = ((8.0 - v) / 4.0).max(0.0);
            let mv = if 0.5 * dv < 1.0 { 1.0 - 0.5 * dv } else { 0.0 };
            let expected = (3.0 * stand_h + (1.0 + u) / 2.0) / 4.0 * (5.0 * mv + 1.0) / 6.0;
            assert!((walker_manual_reward(h, u, v, &p) - expected).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn continuous_at_the_bound(vm in 0.01f64..0.99, m in 0.1f64..5.0, linear in any::<bool>()) {
            let sig = if linear { Sigmoid::Linear } else { Sigmoid::Gaussian };
            let s = ToleranceSpec::new(Some(0.0), Some(1.0), m, vm, sig).unwrap();
            prop_assert!((tolerance(1.0 + 1e-9, &s) - 1.0).abs() < 1e-8);
            prop_assert!((tolerance(-1e-9, &s) - 1.0).abs() < 1e-8);
        }

        #[test]
        fn tolerance_is_in_unit_interval(x in -100.0f64..100.0, vm in 0.01f64..0.99, m in 0.1f64..5.0) {
            for sig in [Sigmoid::Linear, Sigmoid::Gaussian] {
                let s = ToleranceSpec::new(Some(-1.0), Some(1.0), m, vm, sig).unwrap();
                let t = tolerance(x, &s);
                prop_assert!((0.0..=1.0).contains(&t));
            }
        }

        #[test]
        fn walker_reward_in_unit_interval(h in -5.0f64..5.0, u in -1.0f64..1.0, v in -20.0f64..20.0) {
            let r = walker_manual_reward(h, u, v, &WalkerRewardSpec::humanoid());
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
