//! Seeded synthetic wind-like series for dataset-free runs and tests.
//!
//! * `noise`: i.i.d. uniform with mean `level` and standard deviation `sigma`.
//! * `ar2`: `x_t = φ1 x_{t-1} + φ2 x_{t-2} + ε_t`, `ε ~ N(0, σ²)`, started from
//!   zero and run through a burn-in, then shifted by `level`.
//! * `sinusoid`: `level + amplitude · sin(2π t / period) + ε_t`.
//!
//! Every kind is clipped at zero so the output is a valid wind-speed series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::WindSeries;

const AR_BURN_IN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Noise,
    Ar2,
    Sinusoid,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(SynthKind::Noise),
            "ar2" => Ok(SynthKind::Ar2),
            "sinusoid" => Ok(SynthKind::Sinusoid),
            other => Err(Error::invalid(format!("unknown generator kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub length: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub sigma: f64,
    pub level: f64,
    pub amplitude: f64,
    pub period: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::Ar2,
            length: 20_000,
            phi1: 1.2,
            phi2: -0.3,
            sigma: 0.5,
            level: 8.0,
            amplitude: 3.0,
            period: 144,
            seed: 0,
        }
    }
}

/// Stationarity triangle of an AR(2) process: both characteristic roots lie
/// inside the unit circle.
pub fn ar2_is_stationary(phi1: f64, phi2: f64) -> bool {
    phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0 && phi2.abs() < 1.0
}

/// Lag-1 autocorrelation of a stationary AR(2) process (Yule–Walker).
pub fn ar2_lag1_autocorrelation(phi1: f64, phi2: f64) -> f64 {
    phi1 / (1.0 - phi2)
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::invalid("length must be at least 1"));
        }
        if !(self.sigma >= 0.0) || !self.level.is_finite() {
            return Err(Error::invalid("sigma must be nonnegative and level finite"));
        }
        match self.kind {
            SynthKind::Ar2 if !ar2_is_stationary(self.phi1, self.phi2) => Err(Error::invalid(format!(
                "AR(2) coefficients phi1={} phi2={} are not stationary (a characteristic root lies on or outside the unit circle)",
                self.phi1, self.phi2
            ))),
            SynthKind::Sinusoid if self.period == 0 => Err(Error::invalid("period must be at least 1")),
            _ => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<WindSeries> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, self.sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let values: Vec<f64> = match self.kind {
            SynthKind::Noise => {
                let half_width = self.sigma * 3f64.sqrt();
                (0..self.length)
                    .map(|_| self.level + half_width * (2.0 * rng.random::<f64>() - 1.0))
                    .collect()
            }
            SynthKind::Ar2 => {
                let (mut x1, mut x2) = (0.0f64, 0.0f64);
                let mut out = Vec::with_capacity(self.length);
                for t in 0..AR_BURN_IN + self.length {
                    let x = self.phi1 * x1 + self.phi2 * x2 + normal.sample(&mut rng);
                    x2 = x1;
                    x1 = x;
                    if t >= AR_BURN_IN {
                        out.push(self.level + x);
                    }
                }
                out
            }
            SynthKind::Sinusoid => (0..self.length)
                .map(|t| {
                    let phase = 2.0 * std::f64::consts::PI * (t % self.period) as f64 / self.period as f64;
                    self.level + self.amplitude * phase.sin() + normal.sample(&mut rng)
                })
                .collect(),
        };
        WindSeries::from_values(values.into_iter().map(|v| v.max(0.0)).collect())
    }
}
