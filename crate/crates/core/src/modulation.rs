//! Binary data to pulse timings, and the ideal two-level switching signal.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, ModelError, Result};

/// Tolerance, in periods, for placing a sample that lands on an edge.
const EDGE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Variable pulse width; depth is in duty-cycle units.
    Vpwm,
    /// Variable pulse position; depth is a center shift in seconds.
    Vppm,
    Unmodulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    pub scheme: Scheme,
    /// Symbol (switching) period in seconds.
    pub period: f64,
    /// Average duty cycle δ.
    pub delta: f64,
    #[serde(default)]
    pub depth: f64,
}

impl ModulationConfig {
    pub fn vpwm(period: f64, delta: f64, depth: f64) -> Self {
        Self {
            scheme: Scheme::Vpwm,
            period,
            delta,
            depth,
        }
    }

    pub fn vppm(period: f64, delta: f64, depth: f64) -> Self {
        Self {
            scheme: Scheme::Vppm,
            period,
            delta,
            depth,
        }
    }

    pub fn unmodulated(period: f64, delta: f64) -> Self {
        Self {
            scheme: Scheme::Unmodulated,
            period,
            delta,
            depth: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("period", self.period)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "delta",
                reason: format!("duty cycle must lie in (0, 1), got {}", self.delta),
            });
        }
        if !self.depth.is_finite() || self.depth < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "depth",
                reason: format!("must be finite and >= 0, got {}", self.depth),
            });
        }
        Ok(())
    }

    /// Encodes `bits` with the configured scheme.
    pub fn encode(&self, bits: &[u8]) -> Result<SwitchingPattern> {
        match self.scheme {
            Scheme::Vpwm => encode_vpwm(bits, self),
            Scheme::Vppm => encode_vppm(bits, self),
            Scheme::Unmodulated => unmodulated_pattern(self, bits.len()),
        }
    }
}

/// One pulse per symbol period: `[start[k], end[k])` relative to `k T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingPattern {
    pub period: f64,
    pub starts: Vec<f64>,
    pub ends: Vec<f64>,
}

impl SwitchingPattern {
    /// Checks `0 <= start < end <= T` for every symbol.
    pub fn new(period: f64, starts: Vec<f64>, ends: Vec<f64>) -> Result<Self> {
        require_positive("period", period)?;
        if starts.len() != ends.len() {
            return Err(ModelError::InvalidParameter {
                name: "pattern",
                reason: format!("{} starts but {} ends", starts.len(), ends.len()),
            });
        }
        for (k, (&s, &e)) in starts.iter().zip(&ends).enumerate() {
            if !(s >= 0.0 && s < e && e <= period) {
                return Err(ModelError::DepthOutOfRange {
                    symbol: k,
                    start: s,
                    end: e,
                    period,
                });
            }
        }
        Ok(Self {
            period,
            starts,
            ends,
        })
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.starts[k] + self.ends[k])
    }

    pub fn width(&self, k: usize) -> f64 {
        self.ends[k] - self.starts[k]
    }

    /// Time-averaged duty cycle over all symbols (0 for an empty pattern).
    pub fn mean_duty(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (0..self.len()).map(|k| self.width(k)).sum::<f64>() / (self.period * self.len() as f64)
    }

    pub fn duration(&self) -> f64 {
        self.period * self.len() as f64
    }

    /// Switching edges as `(time, +1 rising | -1 falling)` in time order.
    pub fn edges(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2 * self.len());
        for k in 0..self.len() {
            let base = k as f64 * self.period;
            out.push((base + self.starts[k], 1.0));
            out.push((base + self.ends[k], -1.0));
        }
        out
    }

    /// Ideal switching signal `s1(t)` with half-open pulses.
    pub fn level_at(&self, t: f64) -> u8 {
        if t < 0.0 || self.is_empty() {
            return 0;
        }
        let mut k = (t / self.period).floor() as isize;
        let mut tau = t - k as f64 * self.period;
        // Division rounding may put t one symbol off.
        if tau < 0.0 {
            k -= 1;
            tau = t - k as f64 * self.period;
        } else if tau >= self.period {
            k += 1;
            tau = t - k as f64 * self.period;
        }
        if k < 0 || k as usize >= self.len() {
            return 0;
        }
        let k = k as usize;
        // Samples landing on an edge up to roundoff count as past it.
        let tol = EDGE_SNAP * self.period;
        u8::from(tau + tol >= self.starts[k] && tau + tol < self.ends[k])
    }

    /// Pattern followed by `other`, which must share the symbol period.
    pub fn concat(&self, other: &SwitchingPattern) -> Result<SwitchingPattern> {
        if self.period != other.period {
            return Err(ModelError::InvalidParameter {
                name: "period",
                reason: "patterns with different symbol periods".into(),
            });
        }
        let mut starts = self.starts.clone();
        let mut ends = self.ends.clone();
        starts.extend_from_slice(&other.starts);
        ends.extend_from_slice(&other.ends);
        SwitchingPattern::new(self.period, starts, ends)
    }
}

fn check_bits(bits: &[u8]) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        Some(i) => Err(ModelError::InvalidParameter {
            name: "bits",
            reason: format!("symbol {i} is {}, expected 0 or 1", bits[i]),
        }),
        None => Ok(()),
    }
}

fn signed(bit: u8) -> f64 {
    2.0 * f64::from(bit) - 1.0
}

/// Centered pulses whose duty cycle is `δ ± depth`.
pub fn encode_vpwm(bits: &[u8], cfg: &ModulationConfig) -> Result<SwitchingPattern> {
    cfg.validate()?;
    check_bits(bits)?;
    let t = cfg.period;
    let mut starts = Vec::with_capacity(bits.len());
    let mut ends = Vec::with_capacity(bits.len());
    for (k, &bit) in bits.iter().enumerate() {
        let duty = cfg.delta + signed(bit) * cfg.depth;
        if !(duty > 0.0 && duty < 1.0) {
            return Err(ModelError::DepthOutOfRange {
                symbol: k,
                start: 0.5 * t - 0.5 * duty * t,
                end: 0.5 * t + 0.5 * duty * t,
                period: t,
            });
        }
        starts.push(0.5 * t - 0.5 * duty * t);
        ends.push(0.5 * t + 0.5 * duty * t);
    }
    SwitchingPattern::new(t, starts, ends)
}

/// Fixed-width pulses whose center moves to `T/2 ± depth`.
pub fn encode_vppm(bits: &[u8], cfg: &ModulationConfig) -> Result<SwitchingPattern> {
    cfg.validate()?;
    check_bits(bits)?;
    let t = cfg.period;
    let half = 0.5 * cfg.delta * t;
    let mut starts = Vec::with_capacity(bits.len());
    let mut ends = Vec::with_capacity(bits.len());
    for (k, &bit) in bits.iter().enumerate() {
        let center = 0.5 * t + signed(bit) * cfg.depth;
        let (s, e) = (center - half, center + half);
        if s < 0.0 || e > t {
            return Err(ModelError::DepthOutOfRange {
                symbol: k,
                start: s,
                end: e,
                period: t,
            });
        }
        starts.push(s);
        ends.push(e);
    }
    SwitchingPattern::new(t, starts, ends)
}

pub fn unmodulated_pattern(cfg: &ModulationConfig, symbols: usize) -> Result<SwitchingPattern> {
    cfg.validate()?;
    let t = cfg.period;
    let s = 0.5 * t - 0.5 * cfg.delta * t;
    let e = 0.5 * t + 0.5 * cfg.delta * t;
    SwitchingPattern::new(t, vec![s; symbols], vec![e; symbols])
}

/// Point samples `s1(n dt)` for `n in 0..n_samples`.
pub fn sample_switching(pat: &SwitchingPattern, dt: f64, n_samples: usize) -> Vec<u8> {
    (0..n_samples)
        .map(|n| pat.level_at(n as f64 * dt))
        .collect()
}

/// Alternating `1, 0, 1, 0, ...` of the given length.
pub fn alternating_bits(len: usize) -> Vec<u8> {
    (0..len).map(|k| u8::from(k % 2 == 0)).collect()
}
