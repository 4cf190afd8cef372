//! Physical converter parameters and the quantities derived from them.
//!
//! The buck output filter is a series inductor feeding a capacitor in
//! parallel with an Ohmic load. With `a = 1/(2 C R_L)` and
//! `b = sqrt(1/(L C) - a^2)` its poles are `-a ± i b`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, ModelError, Result};

/// Inductance, capacitance, load and input voltage of the converter (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub inductance: f64,
    pub capacitance: f64,
    pub load_resistance: f64,
    #[serde(default = "default_input_voltage")]
    pub input_voltage: f64,
}

fn default_input_voltage() -> f64 {
    1.0
}

impl CircuitParams {
    pub fn new(
        inductance: f64,
        capacitance: f64,
        load_resistance: f64,
        input_voltage: f64,
    ) -> Result<Self> {
        let p = Self {
            inductance,
            capacitance,
            load_resistance,
            input_voltage,
        };
        p.validate()?;
        Ok(p)
    }

    /// Normalized parameters with `V1 = 1 V`.
    pub fn normalized(inductance: f64, capacitance: f64, load_resistance: f64) -> Result<Self> {
        Self::new(inductance, capacitance, load_resistance, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("inductance", self.inductance)?;
        require_positive("capacitance", self.capacitance)?;
        require_positive("load_resistance", self.load_resistance)?;
        require_positive("input_voltage", self.input_voltage)
    }

    /// Load resistance at which the poles merge, `0.5 sqrt(L/C)`.
    pub fn critical_resistance(&self) -> f64 {
        0.5 * (self.inductance / self.capacitance).sqrt()
    }

    pub fn underdamped_valid(&self) -> bool {
        self.load_resistance > self.critical_resistance()
    }

    pub fn lc(&self) -> f64 {
        self.inductance * self.capacitance
    }

    /// Time constant `C R_L`, the bound on the simplified Euler step.
    pub fn rc(&self) -> f64 {
        self.capacitance * self.load_resistance
    }
}

/// Damping rate and ringing frequency of the complex pole pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    /// Damping rate `a` in 1/s.
    pub a: f64,
    /// Ringing angular frequency `b` in rad/s.
    pub b: f64,
}

impl Dynamics {
    /// Upper pole `-a + i b`.
    pub fn s01(&self) -> Complex64 {
        Complex64::new(-self.a, self.b)
    }

    /// Lower pole `-a - i b`.
    pub fn s02(&self) -> Complex64 {
        Complex64::new(-self.a, -self.b)
    }

    /// Squared natural frequency `a^2 + b^2`, equal to `1/(L C)`.
    pub fn natural_frequency_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

/// Output voltage and its slope at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConditions {
    pub v2_0: f64,
    #[serde(default)]
    pub dv2_0: f64,
}

impl InitialConditions {
    pub fn new(v2_0: f64, dv2_0: f64) -> Self {
        Self { v2_0, dv2_0 }
    }

    /// DC operating point `v2 = δ V1` with zero slope.
    pub fn steady(duty: f64, input_voltage: f64) -> Self {
        Self::new(duty * input_voltage, 0.0)
    }
}

pub fn derive_dynamics(p: &CircuitParams) -> Result<Dynamics> {
    p.validate()?;
    if !p.underdamped_valid() {
        return Err(ModelError::Overdamped {
            load_resistance: p.load_resistance,
            limit: p.critical_resistance(),
        });
    }
    let a = 1.0 / (2.0 * p.capacitance * p.load_resistance);
    let disc = 1.0 / p.lc() - a * a;
    if disc <= 0.0 {
        // Rounding at the boundary can leave a non-positive discriminant.
        return Err(ModelError::Overdamped {
            load_resistance: p.load_resistance,
            limit: p.critical_resistance(),
        });
    }
    Ok(Dynamics { a, b: disc.sqrt() })
}

/// `H(f) = 1 / (1 + i 2πf L/R_L - (2πf)^2 L C)`.
pub fn frequency_response(p: &CircuitParams, f: f64) -> Complex64 {
    let w = 2.0 * PI * f;
    let den = Complex64::new(1.0 - w * w * p.lc(), w * p.inductance / p.load_resistance);
    den.inv()
}

/// Impulse response `e^{-at} sin(bt) / (L C b)` for `t >= 0`, zero before.
pub fn impulse_response(d: &Dynamics, p: &CircuitParams, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    (-d.a * t).exp() * (d.b * t).sin() / (p.lc() * d.b)
}

/// 3 dB cut-off frequency of the undamped LC lowpass.
pub fn cutoff_frequency(p: &CircuitParams) -> f64 {
    ((1.0 + 2f64.sqrt()) / p.lc()).sqrt() / (2.0 * PI)
}

pub fn initial_inductor_current(p: &CircuitParams, ic: &InitialConditions) -> f64 {
    ic.v2_0 / p.load_resistance + p.capacitance * ic.dv2_0
}
