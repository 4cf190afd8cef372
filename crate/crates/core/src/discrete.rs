//! Discrete-time Euler iterations for inductor current and output voltage.

use serde::{Deserialize, Serialize};

use crate::circuit::{initial_inductor_current, CircuitParams, InitialConditions};
use crate::error::{ModelError, Result};
use crate::modulation::{sample_switching, SwitchingPattern};
use crate::waveform::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Simplified,
    Predictive,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Exact, Variant::Simplified, Variant::Predictive];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Simplified => "simplified",
            Variant::Predictive => "predictive",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Variant::Exact),
            "simplified" => Ok(Variant::Simplified),
            "predictive" => Ok(Variant::Predictive),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// Continuous conduction, or discontinuous with the inductor current
/// clipped at zero (asynchronous converter with a freewheeling diode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConductionMode {
    #[default]
    Ccm,
    Dcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub mu: f64,
    pub dt: f64,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    pub il: f64,
    pub v2: f64,
    pub n: usize,
}

/// Iteration coefficients for `dt = period / oversampling`.
pub fn derive_params(
    p: &CircuitParams,
    oversampling: usize,
    period: f64,
    variant: Variant,
) -> Result<DiscreteParams> {
    p.validate()?;
    if oversampling == 0 {
        return Err(ModelError::InvalidParameter {
            name: "oversampling",
            reason: "must be at least 1".into(),
        });
    }
    crate::error::require_positive("period", period)?;
    let dt = period / oversampling as f64;
    let (l, c, r) = (p.inductance, p.capacitance, p.load_resistance);
    let cr = c * r;
    match variant {
        Variant::Exact => {
            let den = l * (cr + dt) + r * dt * dt;
            Ok(DiscreteParams {
                alpha: l * (cr + dt) / den,
                beta: dt * (cr + dt) / den,
                gamma: -cr * dt / den,
                kappa: cr / (cr + dt),
                mu: r * dt / (cr + dt),
                dt,
                variant,
            })
        }
        Variant::Simplified | Variant::Predictive => {
            if dt >= cr {
                return Err(ModelError::UnstableStep { dt, limit: cr });
            }
            Ok(DiscreteParams {
                alpha: 1.0,
                beta: dt / l,
                gamma: -dt / l,
                kappa: (cr - dt) / cr,
                mu: dt / c,
                dt,
                variant,
            })
        }
    }
}

/// One update from sample `n` to `n + 1`.
///
/// `s1_n` is the switch state at the new sample, `s1_prev` at the old one.
pub fn step(
    s: SimState,
    s1_n: u8,
    s1_prev: u8,
    dp: &DiscreteParams,
    input_voltage: f64,
    mode: ConductionMode,
) -> SimState {
    let clip = |i: f64| match mode {
        ConductionMode::Ccm => i,
        ConductionMode::Dcm => i.max(0.0),
    };
    let (il, v2) = match dp.variant {
        Variant::Exact | Variant::Simplified => {
            let il = clip(dp.alpha * s.il + dp.beta * input_voltage * f64::from(s1_n) + dp.gamma * s.v2);
            (il, dp.kappa * s.v2 + dp.mu * il)
        }
        Variant::Predictive => {
            let il = clip(s.il + dp.beta * input_voltage * f64::from(s1_prev) + dp.gamma * s.v2);
            (il, dp.kappa * s.v2 + dp.mu * s.il)
        }
    };
    SimState { il, v2, n: s.n + 1 }
}

/// Runs the iteration over a sampled switching sequence. Sample 0 holds
/// the initial state; `s1[0]` is consumed only as the predecessor of
/// sample 1.
pub fn simulate_samples(
    p: &CircuitParams,
    s1: &[u8],
    ic: &InitialConditions,
    dp: &DiscreteParams,
    mode: ConductionMode,
) -> Result<(Waveform, Waveform)> {
    let il0 = initial_inductor_current(p, ic);
    if mode == ConductionMode::Dcm && (il0 < 0.0 || ic.v2_0 < 0.0) {
        return Err(ModelError::InvalidParameter {
            name: "ic",
            reason: format!("DCM needs iL[0] >= 0 and v2[0] >= 0, got iL[0] = {il0}, v2[0] = {}", ic.v2_0),
        });
    }
    let n = s1.len();
    let mut v2 = Vec::with_capacity(n);
    let mut il = Vec::with_capacity(n);
    if n > 0 {
        let mut state = SimState { il: il0, v2: ic.v2_0, n: 0 };
        v2.push(state.v2);
        il.push(state.il);
        for k in 1..n {
            state = step(state, s1[k], s1[k - 1], dp, p.input_voltage, mode);
            v2.push(state.v2);
            il.push(state.il);
        }
    }
    Ok((
        Waveform { dt: dp.dt, t0: 0.0, samples: v2 },
        Waveform { dt: dp.dt, t0: 0.0, samples: il },
    ))
}

/// `(v2, iL)` trajectories of length `K * J` for a switching pattern.
pub fn simulate(
    p: &CircuitParams,
    pat: &SwitchingPattern,
    ic: &InitialConditions,
    oversampling: usize,
    variant: Variant,
    mode: ConductionMode,
) -> Result<(Waveform, Waveform)> {
    let dp = derive_params(p, oversampling, pat.period, variant)?;
    let s1 = sample_switching(pat, dp.dt, pat.len() * oversampling);
    simulate_samples(p, &s1, ic, &dp, mode)
}
