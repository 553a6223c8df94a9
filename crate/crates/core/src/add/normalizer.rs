use serde::{Deserialize, Serialize};

use crate::add::{AddError, DifferentialVector};

const STD_FLOOR: f64 = 1e-6;

/// Per-dimension statistic the differential is divided by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaScale {
    /// Running standard deviation.
    #[default]
    Std,
    /// Running root mean square, `sqrt(var + mean^2)`.
    Rms,
}

/// Running per-dimension standardization of differential vectors, followed
/// by a per-dimension amplification.
///
/// Statistics are accumulated with Welford's algorithm. Centering is off by
/// default so the ideal differential (all zeros) keeps mapping to the
/// discriminator's positive sample; the mean is still tracked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaNormalizer {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: u64,
    frozen: bool,
    amplification: Vec<f64>,
    center: bool,
    /// Freeze after this many `update` calls.
    freeze_after: Option<u64>,
    updates: u64,
    #[serde(default)]
    scale: DeltaScale,
}

impl DeltaNormalizer {
    pub fn new(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            count: 0,
            frozen: false,
            amplification: vec![1.0; dim],
            center: false,
            freeze_after: None,
            updates: 0,
            scale: DeltaScale::Std,
        }
    }

    /// Frozen normalizer with zero mean, unit std and unit amplification.
    pub fn identity(dim: usize) -> Self {
        let mut n = Self::new(dim);
        n.frozen = true;
        n
    }

    /// Frozen normalizer with fixed statistics.
    pub fn fixed(mean: Vec<f64>, std: Vec<f64>) -> Result<Self, AddError> {
        if mean.len() != std.len() {
            return Err(AddError::Dimension {
                expected: mean.len(),
                got: std.len(),
            });
        }
        let dim = mean.len();
        Ok(Self {
            m2: std.iter().map(|s| s * s).collect(),
            mean,
            count: 1,
            frozen: true,
            amplification: vec![1.0; dim],
            center: false,
            freeze_after: None,
            updates: 0,
            scale: DeltaScale::Std,
        })
    }

    pub fn with_amplification(mut self, amplification: Vec<f64>) -> Result<Self, AddError> {
        if amplification.len() != self.mean.len() {
            return Err(AddError::Dimension {
                expected: self.mean.len(),
                got: amplification.len(),
            });
        }
        self.amplification = amplification;
        Ok(self)
    }

    pub fn with_centering(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn with_freeze_after(mut self, updates: Option<u64>) -> Self {
        self.freeze_after = updates;
        self
    }

    pub fn with_scale(mut self, scale: DeltaScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn scale(&self) -> DeltaScale {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn amplification(&self) -> &[f64] {
        &self.amplification
    }

    pub fn std(&self) -> Vec<f64> {
        self.m2
            .iter()
            .map(|m2| {
                if self.count == 0 {
                    1.0
                } else {
                    (m2 / self.count as f64).sqrt().max(STD_FLOOR)
                }
            })
            .collect()
    }

    /// The per-dimension divisor: the std or the RMS, depending on the scale mode.
    pub fn divisor(&self) -> Vec<f64> {
        let std = self.std();
        match self.scale {
            DeltaScale::Std => std,
            DeltaScale::Rms => std
                .iter()
                .zip(&self.mean)
                .map(|(s, m)| {
                    if self.count == 0 {
                        1.0
                    } else {
                        (s * s + m * m).sqrt().max(STD_FLOOR)
                    }
                })
                .collect(),
        }
    }

    /// Folds a batch into the running statistics. Ignored once frozen.
    pub fn update<V: AsRef<[f64]>>(&mut self, batch: &[V]) -> Result<(), AddError> {
        if self.frozen {
            return Ok(());
        }
        for sample in batch {
            let sample = sample.as_ref();
            if sample.len() != self.dim() {
                return Err(AddError::Dimension {
                    expected: self.dim(),
                    got: sample.len(),
                });
            }
            self.count += 1;
            let n = self.count as f64;
            for ((m, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
                let d = x - *m;
                *m += d / n;
                *m2 += d * (x - *m);
            }
        }
        self.updates += 1;
        if let Some(limit) = self.freeze_after {
            if self.updates >= limit {
                self.frozen = true;
            }
        }
        Ok(())
    }

    pub fn normalize_values(&self, delta: &[f64]) -> Result<Vec<f64>, AddError> {
        if delta.len() != self.dim() {
            return Err(AddError::Dimension {
                expected: self.dim(),
                got: delta.len(),
            });
        }
        let std = self.divisor();
        Ok(delta
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = if self.center { self.mean[i] } else { 0.0 };
                (x - c) / std[i] * self.amplification[i]
            })
            .collect())
    }

    pub fn normalize(&self, delta: &DifferentialVector) -> Result<DifferentialVector, AddError> {
        DifferentialVector::new(self.normalize_values(delta.values())?, delta.layout().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identity_normalizer_is_identity() {
        let n = DeltaNormalizer::identity(3);
        let d = [0.5, -1.25, 3.0];
        assert_eq!(n.normalize_values(&d).unwrap(), d.to_vec());
        let centered = DeltaNormalizer::fixed(vec![0.0; 3], vec![1.0; 3])
            .unwrap()
            .with_centering(true);
        assert_eq!(centered.normalize_values(&d).unwrap(), d.to_vec());
    }

    #[test]
    fn rms_scale_divides_by_root_mean_square() {
        let mut n = DeltaNormalizer::new(1).with_scale(DeltaScale::Rms);
        n.update(&[[3.0], [5.0]]).unwrap();
        // mean 4, population variance 1
        let rms = 17.0_f64.sqrt();
        assert!((n.normalize_values(&[2.0]).unwrap()[0] - 2.0 / rms).abs() < 1e-12);
        let std = n.clone().with_scale(DeltaScale::Std);
        assert!((std.normalize_values(&[2.0]).unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn amplification_scales_selected_dims() {
        let plain = DeltaNormalizer::fixed(vec![0.0; 3], vec![2.0; 3]).unwrap();
        let amped = plain.clone().with_amplification(vec![1.0, 50.0, 50.0]).unwrap();
        let d = [1.0, 2.0, -4.0];
        let a = plain.normalize_values(&d).unwrap();
        let b = amped.normalize_values(&d).unwrap();
        assert_eq!(b[0], a[0]);
        assert_eq!(b[1], 50.0 * a[1]);
        assert_eq!(b[2], 50.0 * a[2]);
    }

    #[test]
    fn running_statistics_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dist = Normal::new(3.0, 2.0).unwrap();
        let samples: Vec<Vec<f64>> = (0..10_000).map(|_| vec![dist.sample(&mut rng)]).collect();
        let mut n = DeltaNormalizer::new(1);
        for chunk in samples.chunks(100) {
            n.update(chunk).unwrap();
        }
        assert!((n.mean()[0] - 3.0).abs() < 0.1);
        assert!((n.std()[0] - 2.0).abs() < 0.1);
    }

    #[test]
    fn freezes_after_warmup() {
        let mut n = DeltaNormalizer::new(1).with_freeze_after(Some(2));
        n.update(&[[1.0]]).unwrap();
        assert!(!n.is_frozen());
        n.update(&[[3.0]]).unwrap();
        assert!(n.is_frozen());
        let before = n.clone();
        n.update(&[[100.0]]).unwrap();
        assert_eq!(n, before);
    }

    #[test]
    fn std_has_a_floor() {
        let mut n = DeltaNormalizer::new(1);
        n.update(&[[2.0], [2.0]]).unwrap();
        assert_eq!(n.std()[0], 1e-6);
    }

    #[test]
    fn zero_differential_stays_zero_without_centering() {
        let mut n = DeltaNormalizer::new(2);
        n.update(&[[1.0, 5.0], [3.0, 9.0]]).unwrap();
        assert_eq!(n.normalize_values(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }
}
