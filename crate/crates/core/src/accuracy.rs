//! Bias and bias-corrected MSE of the discrete models against the analytic
//! output, swept over oversampling factor and variant.

use serde::{Deserialize, Serialize};

use crate::analytic::output_voltage;
use crate::circuit::{derive_dynamics, CircuitParams, Dynamics, InitialConditions};
use crate::discrete::{derive_params, simulate_samples, ConductionMode, Variant};
use crate::error::{ModelError, Result};
use crate::modulation::{sample_switching, ModulationConfig, SwitchingPattern};
use crate::spectrum::fit_slope;
use crate::waveform::Waveform;

/// Envelope decay `e^{-a t}` that counts as settled.
pub const SETTLE_LEVEL: f64 = 1e-6;

/// Whole symbols until the transient envelope falls below [`SETTLE_LEVEL`].
pub fn settle_symbols(d: &Dynamics, period: f64) -> usize {
    ((1.0 / SETTLE_LEVEL).ln() / (d.a * period)).ceil() as usize
}

/// Analytic output sampled at `dt = T/J` for `n` in `[settle J, K J)`.
pub fn reference_samples(
    d: &Dynamics,
    ic: &InitialConditions,
    pat: &SwitchingPattern,
    input_voltage: f64,
    oversampling: usize,
    settle: usize,
) -> Result<Waveform> {
    if pat.len() <= settle {
        return Err(ModelError::PatternTooShort {
            symbols: pat.len(),
            required: settle + 1,
        });
    }
    let dt = pat.period / oversampling as f64;
    let start = settle * oversampling;
    let end = pat.len() * oversampling;
    // Absolute indices keep the grid exact under decimation.
    let samples = (start..end)
        .map(|n| output_voltage(d, ic, pat, input_voltage, n as f64 * dt))
        .collect();
    Ok(Waveform {
        dt,
        t0: start as f64 * dt,
        samples,
    })
}

/// `mean(v2) - delta V1`; NaN for an empty waveform.
pub fn bias(v2: &Waveform, delta: f64, input_voltage: f64) -> f64 {
    v2.mean().map_or(f64::NAN, |m| m - delta * input_voltage)
}

/// `mean((v2 - b - v2_ref)^2)` over aligned grids.
pub fn mse(v2: &Waveform, v2_ref: &Waveform, b: f64) -> Result<f64> {
    v2.check_aligned(v2_ref)?;
    if v2.is_empty() {
        return Err(ModelError::GridMismatch("empty waveforms".into()));
    }
    let sum: f64 = v2
        .samples
        .iter()
        .zip(&v2_ref.samples)
        .map(|(x, r)| (x - b - r).powi(2))
        .sum();
    Ok(sum / v2.len() as f64)
}

/// How the turn-on transient is kept out of the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SettleMode {
    /// Start from the steady-state ic and skip this many leading symbols.
    Guard { symbols: usize },
    /// Prepend [`settle_symbols`] symbols of the bit sequence repeated
    /// cyclically, then evaluate over exactly the given bits.
    PreRoll,
}

impl Default for SettleMode {
    fn default() -> Self {
        SettleMode::Guard { symbols: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyOptions {
    #[serde(default)]
    pub settle: SettleMode,
    /// Advance PREDICTIVE trajectories one sample before comparing.
    #[serde(default = "default_true")]
    pub align_predictive: bool,
}

fn default_true() -> bool {
    true
}

impl Default for AccuracyOptions {
    fn default() -> Self {
        Self {
            settle: SettleMode::default(),
            align_predictive: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    #[serde(rename = "J")]
    pub oversampling: usize,
    pub variant: Variant,
    pub bias: f64,
    pub mse: f64,
    pub n_samples: usize,
    pub settle_symbols: usize,
}

struct Layout {
    pattern: SwitchingPattern,
    /// First and one-past-last evaluated symbol.
    first: usize,
    last: usize,
}

fn layout(cfg: &ModulationConfig, bits: &[u8], d: &Dynamics, settle: SettleMode) -> Result<Layout> {
    let k = bits.len();
    match settle {
        SettleMode::Guard { symbols } => {
            // The final symbol is held back so the aligned PREDICTIVE
            // window stays inside the trajectory.
            if k < symbols + 2 {
                return Err(ModelError::PatternTooShort {
                    symbols: k,
                    required: symbols + 2,
                });
            }
            Ok(Layout {
                pattern: cfg.encode(bits)?,
                first: symbols,
                last: k - 1,
            })
        }
        SettleMode::PreRoll => {
            if k == 0 {
                return Err(ModelError::PatternTooShort { symbols: 0, required: 1 });
            }
            let s = settle_symbols(d, cfg.period);
            let cyclic = |i: usize| bits[i % k];
            let lead = (k - s % k) % k;
            let extended: Vec<u8> = (0..s)
                .map(|i| cyclic(lead + i))
                .chain(bits.iter().copied())
                .chain(std::iter::once(bits[0]))
                .collect();
            Ok(Layout {
                pattern: cfg.encode(&extended)?,
                first: s,
                last: s + k,
            })
        }
    }
}

/// One report per `(J, variant)` pair, in input order.
pub fn sweep(
    p: &CircuitParams,
    cfg: &ModulationConfig,
    bits: &[u8],
    j_list: &[usize],
    variants: &[Variant],
    opts: &AccuracyOptions,
) -> Result<Vec<AccuracyReport>> {
    let d = derive_dynamics(p)?;
    cfg.validate()?;
    let lay = layout(cfg, bits, &d, opts.settle)?;
    let ic = InitialConditions::steady(cfg.delta, p.input_voltage);
    let mut out = Vec::with_capacity(j_list.len() * variants.len());
    for &j in j_list {
        if j == 0 {
            return Err(ModelError::InvalidParameter {
                name: "J_list",
                reason: "oversampling factors must be at least 1".into(),
            });
        }
        let full = reference_samples(&d, &ic, &lay.pattern, p.input_voltage, j, lay.first)?;
        let reference = full.slice(0, (lay.last - lay.first) * j);
        let n_total = lay.pattern.len() * j;
        let dt = cfg.period / j as f64;
        let s1 = sample_switching(&lay.pattern, dt, n_total);
        for &variant in variants {
            let dp = derive_params(p, j, cfg.period, variant)?;
            let (v2, _) = simulate_samples(p, &s1, &ic, &dp, ConductionMode::Ccm)?;
            let shift = usize::from(variant == Variant::Predictive && opts.align_predictive);
            let start = lay.first * j + shift;
            let window = Waveform {
                dt,
                t0: reference.t0,
                samples: v2.samples[start..start + reference.len()].to_vec(),
            };
            let b = bias(&window, cfg.delta, p.input_voltage);
            out.push(AccuracyReport {
                oversampling: j,
                variant,
                bias: b,
                mse: mse(&window, &reference, b)?,
                n_samples: window.len(),
                settle_symbols: lay.first,
            });
        }
    }
    Ok(out)
}

/// Least-squares slope of `log10(mse)` against `log10(J)` for `J >= j_min`.
pub fn mse_slope(reports: &[AccuracyReport], variant: Variant, j_min: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.variant == variant && r.oversampling >= j_min && r.mse > 0.0)
        .map(|r| ((r.oversampling as f64).log10(), r.mse.log10()))
        .collect();
    fit_slope(&pts)
}
