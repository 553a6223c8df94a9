use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::add::AddError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Linear,
    /// Scalar angle in radians; differences wrap to `(-pi, pi]`.
    Angle,
}

/// Names and kinds of the entries of a feature vector. Shared (via `Arc`)
/// between every feature vector and differential of one experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureLayout {
    labels: Vec<String>,
    kinds: Vec<FeatureKind>,
}

impl FeatureLayout {
    pub fn new(entries: &[(&str, FeatureKind)]) -> Arc<Self> {
        Arc::new(Self {
            labels: entries.iter().map(|(l, _)| l.to_string()).collect(),
            kinds: entries.iter().map(|(_, k)| *k).collect(),
        })
    }

    pub fn linear<L: AsRef<str>>(labels: &[L]) -> Arc<Self> {
        Arc::new(Self {
            labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
            kinds: vec![FeatureKind::Linear; labels.len()],
        })
    }

    /// `prefix0, prefix1, ..` linear layout, e.g. per-sample regression errors.
    pub fn indexed(prefix: &str, len: usize) -> Arc<Self> {
        Arc::new(Self {
            labels: (0..len).map(|i| format!("{prefix}{i}")).collect(),
            kinds: vec![FeatureKind::Linear; len],
        })
    }

    /// Layout of `self` followed by `other`.
    pub fn concat(&self, other: &FeatureLayout) -> Arc<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let mut kinds = self.kinds.clone();
        kinds.extend(other.kinds.iter().copied());
        Arc::new(Self { labels, kinds })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }
}

/// Observation-map output for the agent or the reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    values: Vec<f64>,
    layout: Arc<FeatureLayout>,
}

impl Features {
    pub fn new(values: Vec<f64>, layout: Arc<FeatureLayout>) -> Result<Self, AddError> {
        if values.len() != layout.len() {
            return Err(AddError::Dimension {
                expected: layout.len(),
                got: values.len(),
            });
        }
        Ok(Self { values, layout })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> &Arc<FeatureLayout> {
        &self.layout
    }
}

/// Per-objective errors; the all-zero vector is the ideal solution.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialVector {
    values: Vec<f64>,
    layout: Arc<FeatureLayout>,
}

impl DifferentialVector {
    pub fn new(values: Vec<f64>, layout: Arc<FeatureLayout>) -> Result<Self, AddError> {
        if values.len() != layout.len() {
            return Err(AddError::Dimension {
                expected: layout.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AddError::NonFinite);
        }
        Ok(Self { values, layout })
    }

    /// The canonical positive sample for this layout.
    pub fn zeros(layout: Arc<FeatureLayout>) -> Self {
        Self {
            values: vec![0.0; layout.len()],
            layout,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn labels(&self) -> &[String] {
        self.layout.labels()
    }

    pub fn layout(&self) -> &Arc<FeatureLayout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `[self, extra]`, used to append task objectives to tracking errors.
    pub fn concat(&self, extra: &DifferentialVector) -> DifferentialVector {
        let mut values = self.values.clone();
        values.extend_from_slice(&extra.values);
        DifferentialVector {
            values,
            layout: self.layout.concat(&extra.layout),
        }
    }
}

impl AsRef<[f64]> for DifferentialVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// `reference ⊖ agent`: plain subtraction for linear features, wrapped
/// subtraction for angles.
pub fn differential(reference: &Features, agent: &Features) -> Result<DifferentialVector, AddError> {
    if !Arc::ptr_eq(&reference.layout, &agent.layout) && reference.layout != agent.layout {
        return Err(AddError::LabelMismatch);
    }
    let values = reference
        .values
        .iter()
        .zip(&agent.values)
        .zip(reference.layout.kinds())
        .map(|((r, a), kind)| match kind {
            FeatureKind::Linear => r - a,
            FeatureKind::Angle => wrap_angle(r - a),
        })
        .collect();
    DifferentialVector::new(values, reference.layout.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_features_give_zero() {
        let layout = FeatureLayout::linear(&["x", "y"]);
        let f = Features::new(vec![1.5, -2.0], layout).unwrap();
        assert!(differential(&f, &f).unwrap().is_zero());
    }

    #[test]
    fn angles_wrap_the_short_way() {
        let layout = FeatureLayout::new(&[("heading", FeatureKind::Angle)]);
        let r = Features::new(vec![3.1], layout.clone()).unwrap();
        let a = Features::new(vec![-3.1], layout).unwrap();
        let d = differential(&r, &a).unwrap();
        assert!((d.values()[0] - (6.2 - TAU)).abs() < 1e-12);
        assert!((d.values()[0] + 0.0832).abs() < 1e-4);
    }

    #[test]
    fn wrap_range_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn mismatched_labels_are_rejected() {
        let r = Features::new(vec![0.0], FeatureLayout::linear(&["x"])).unwrap();
        let a = Features::new(vec![0.0], FeatureLayout::linear(&["y"])).unwrap();
        assert!(matches!(differential(&r, &a), Err(AddError::LabelMismatch)));
    }

    #[test]
    fn equal_layouts_in_distinct_allocations_are_compatible() {
        let r = Features::new(vec![2.0], FeatureLayout::linear(&["x"])).unwrap();
        let a = Features::new(vec![0.5], FeatureLayout::linear(&["x"])).unwrap();
        assert_eq!(differential(&r, &a).unwrap().values(), &[1.5]);
    }

    proptest! {
        #[test]
        fn linear_differential_is_componentwise_subtraction(
            pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..12)
        ) {
            let layout = FeatureLayout::indexed("f", pairs.len());
            let r: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let a: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let d = differential(
                &Features::new(r.clone(), layout.clone()).unwrap(),
                &Features::new(a.clone(), layout).unwrap(),
            ).unwrap();
            for i in 0..pairs.len() {
                prop_assert_eq!(d.values()[i], r[i] - a[i]);
            }
        }

        #[test]
        fn wrapped_angles_stay_in_range(x in -100.0f64..100.0) {
            let w = wrap_angle(x);
            prop_assert!(w > -PI && w <= PI);
            let k = ((x - w) / TAU).round();
            prop_assert!((x - w - k * TAU).abs() < 1e-9);
        }
    }
}
