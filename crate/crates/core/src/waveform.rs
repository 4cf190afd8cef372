use serde::{Deserialize, Serialize};

use crate::error::{require_positive, ModelError, Result};

/// Uniformly sampled real signal: `samples[n]` is the value at `t0 + n dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub dt: f64,
    pub t0: f64,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(dt: f64, t0: f64, samples: Vec<f64>) -> Result<Self> {
        require_positive("dt", dt)?;
        if !t0.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "t0",
                reason: "must be finite".into(),
            });
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "samples",
                reason: format!("sample {i} is not finite"),
            });
        }
        Ok(Self { dt, t0, samples })
    }

    /// Samples `f(t0 + n dt)` for `n in 0..n_samples`.
    pub fn from_fn(dt: f64, t0: f64, n_samples: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..n_samples).map(|n| f(t0 + n as f64 * dt)).collect();
        Self { dt, t0, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|n| self.time(n))
    }

    pub fn mean(&self) -> Option<f64> {
        if self.is_empty() {
            None
        } else {
            Some(self.samples.iter().sum::<f64>() / self.len() as f64)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Samples `[start, end)` with the time origin moved accordingly.
    pub fn slice(&self, start: usize, end: usize) -> Waveform {
        Waveform {
            dt: self.dt,
            t0: self.time(start),
            samples: self.samples[start..end].to_vec(),
        }
    }

    /// Every `factor`-th sample, starting with the first.
    pub fn decimate(&self, factor: usize) -> Waveform {
        Waveform {
            dt: self.dt * factor as f64,
            t0: self.t0,
            samples: self.samples.iter().step_by(factor.max(1)).copied().collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Waveform {
        Waveform {
            dt: self.dt,
            t0: self.t0,
            samples: self.samples.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Errors unless both waveforms share length, interval and start time.
    pub fn check_aligned(&self, other: &Waveform) -> Result<()> {
        if self.len() != other.len() {
            return Err(ModelError::GridMismatch(format!(
                "lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let tol = 1e-9 * self.dt;
        if (self.dt - other.dt).abs() > tol || (self.t0 - other.t0).abs() > tol {
            return Err(ModelError::GridMismatch(format!(
                "grids (dt {}, t0 {}) and (dt {}, t0 {})",
                self.dt, self.t0, other.dt, other.t0
            )));
        }
        Ok(())
    }
}
