use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::EnvError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// `A (cos th, sin th)`
    Circle,
    /// `(A sin th, A/2 sin 2th)`, a figure eight.
    Lissajous,
    /// `(A sin th, 0)`
    Sine,
}

impl ReferenceKind {
    pub const ALL: [ReferenceKind; 3] = [ReferenceKind::Circle, ReferenceKind::Lissajous, ReferenceKind::Sine];

    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceKind::Circle => "circle",
            ReferenceKind::Lissajous => "lissajous",
            ReferenceKind::Sine => "sine",
        }
    }
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReferenceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown reference kind `{s}`"))
    }
}

/// A periodic planar trajectory parameterized by phase in `[0, 1)`;
/// `th = 2 pi phase`, time `t = phase * period`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub kind: ReferenceKind,
    /// Seconds per cycle.
    pub period: f64,
    /// Meters.
    pub amplitude: f64,
}

impl Reference {
    pub fn new(kind: ReferenceKind, period: f64, amplitude: f64) -> Result<Self, EnvError> {
        let r = Self {
            kind,
            period,
            amplitude,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(EnvError::InvalidConfig(format!(
                "reference period must be positive, got {}",
                self.period
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(EnvError::InvalidConfig(format!(
                "reference amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        TAU / self.period
    }

    pub fn position(&self, phase: f64) -> [f64; 2] {
        let th = TAU * phase;
        let a = self.amplitude;
        match self.kind {
            ReferenceKind::Circle => [a * th.cos(), a * th.sin()],
            ReferenceKind::Lissajous => [a * th.sin(), 0.5 * a * (2.0 * th).sin()],
            ReferenceKind::Sine => [a * th.sin(), 0.0],
        }
    }

    /// Time derivative of [`Reference::position`], m/s.
    pub fn velocity(&self, phase: f64) -> [f64; 2] {
        let th = TAU * phase;
        let aw = self.amplitude * self.omega();
        match self.kind {
            ReferenceKind::Circle => [-aw * th.sin(), aw * th.cos()],
            ReferenceKind::Lissajous => [aw * th.cos(), aw * (2.0 * th).cos()],
            ReferenceKind::Sine => [aw * th.cos(), 0.0],
        }
    }

    pub fn acceleration(&self, phase: f64) -> [f64; 2] {
        let th = TAU * phase;
        let aw2 = self.amplitude * self.omega().powi(2);
        match self.kind {
            ReferenceKind::Circle => [-aw2 * th.cos(), -aw2 * th.sin()],
            ReferenceKind::Lissajous => [-aw2 * th.sin(), -2.0 * aw2 * (2.0 * th).sin()],
            ReferenceKind::Sine => [-aw2 * th.sin(), 0.0],
        }
    }

    /// `[pos_x, pos_y, vel_x, vel_y]`
    pub fn features(&self, phase: f64) -> [f64; 4] {
        let p = self.position(phase);
        let v = self.velocity(phase);
        [p[0], p[1], v[0], v[1]]
    }

    /// `phase,pos_x,pos_y,vel_x,vel_y` rows over one period.
    pub fn write_csv<W: Write>(&self, mut out: W, samples: usize) -> std::io::Result<()> {
        writeln!(out, "phase,pos_x,pos_y,vel_x,vel_y")?;
        for i in 0..samples {
            let phase = i as f64 / samples as f64;
            let f = self.features(phase);
            writeln!(out, "{phase},{},{},{},{}", f[0], f[1], f[2], f[3])?;
        }
        Ok(())
    }
}
