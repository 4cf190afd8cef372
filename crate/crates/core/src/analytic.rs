//! Exact continuous-time output voltage of the buck filter.
//!
//! The output splits into a transient driven only by the initial conditions
//! and a data-dependent sum of per-symbol pulse shapes `g_tx`. Each `g_tx`
//! is the difference of two shifted unit-step responses of the filter.

use std::f64::consts::PI;

use crate::circuit::{impulse_response, CircuitParams, Dynamics, InitialConditions};
use crate::error::{ModelError, Result};
use crate::modulation::SwitchingPattern;
use crate::waveform::Waveform;

/// Pulses whose trailing edge lies more than this many `1/a` in the past
/// contribute below 1e-26 and are skipped.
const DECAY_HORIZON: f64 = 60.0;

/// Truncation point of the sampled impulse response, in units of `1/a`.
pub const KERNEL_SPAN: f64 = 30.0;

pub fn transient_component(d: &Dynamics, ic: &InitialConditions, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let (s, c) = (d.b * t).sin_cos();
    (-d.a * t).exp() * ((d.a * ic.v2_0 + ic.dv2_0) / d.b * s + ic.v2_0 * c)
}

/// Decaying part `e^{-at}(cos bt + (a/b) sin bt)` of the step response.
fn step_residual(d: &Dynamics, t: f64) -> f64 {
    let (s, c) = (d.b * t).sin_cos();
    (-d.a * t).exp() * (c + d.a / d.b * s)
}

/// Unit-step response `1 - e^{-at}(cos bt + (a/b) sin bt)` for `t >= 0`.
pub fn unit_step_component(d: &Dynamics, t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        1.0 - step_residual(d, t)
    }
}

/// Basic pulse shape for a rectangular pulse of width `tp` centered at 0.
pub fn pulse_shape_gtx(d: &Dynamics, tp: f64, t: f64) -> f64 {
    let half = 0.5 * tp;
    if t < -half {
        0.0
    } else if t < half {
        unit_step_component(d, t + half)
    } else {
        // Both steps active; the unit parts cancel exactly.
        step_residual(d, t - half) - step_residual(d, t + half)
    }
}

pub fn data_component(d: &Dynamics, pat: &SwitchingPattern, input_voltage: f64, t: f64) -> f64 {
    if pat.is_empty() || t < 0.0 {
        return 0.0;
    }
    let period = pat.period;
    let horizon = DECAY_HORIZON / d.a;
    let first = (((t - horizon) / period).floor() - 1.0).max(0.0) as usize;
    let mut acc = 0.0;
    for k in first..pat.len() {
        let origin = k as f64 * period;
        if origin + pat.starts[k] > t {
            break;
        }
        acc += pulse_shape_gtx(d, pat.width(k), t - origin - pat.center(k));
    }
    input_voltage * acc
}

pub fn output_voltage(
    d: &Dynamics,
    ic: &InitialConditions,
    pat: &SwitchingPattern,
    input_voltage: f64,
    t: f64,
) -> f64 {
    transient_component(d, ic, t) + data_component(d, pat, input_voltage, t)
}

/// `output_voltage(n dt)` for `n in 0..n_samples`.
pub fn sample_output(
    d: &Dynamics,
    ic: &InitialConditions,
    pat: &SwitchingPattern,
    input_voltage: f64,
    dt: f64,
    n_samples: usize,
) -> Waveform {
    Waveform::from_fn(dt, 0.0, n_samples, |t| {
        output_voltage(d, ic, pat, input_voltage, t)
    })
}

pub fn sample_data_component(
    d: &Dynamics,
    pat: &SwitchingPattern,
    input_voltage: f64,
    dt: f64,
    n_samples: usize,
) -> Waveform {
    Waveform::from_fn(dt, 0.0, n_samples, |t| data_component(d, pat, input_voltage, t))
}

pub fn sample_transient(
    d: &Dynamics,
    ic: &InitialConditions,
    dt: f64,
    n_samples: usize,
) -> Waveform {
    Waveform::from_fn(dt, 0.0, n_samples, |t| transient_component(d, ic, t))
}

/// Largest sampling interval that resolves the ringing: 20 samples per `2π/b`.
pub fn max_convolution_step(d: &Dynamics) -> f64 {
    2.0 * PI / (20.0 * d.b)
}

/// Rectangle-rule convolution of an arbitrary filter input with `h_i`.
///
/// `y[n] = dt * sum_m v1[n-m] h_i(m dt)` with the kernel cut at `30/a`.
/// The result shares the input grid.
pub fn convolve_end_to_end(v1: &Waveform, d: &Dynamics, p: &CircuitParams) -> Result<Waveform> {
    let limit = max_convolution_step(d);
    if !(v1.dt <= limit) {
        return Err(ModelError::ResolutionTooCoarse { dt: v1.dt, limit });
    }
    let taps = ((KERNEL_SPAN / d.a) / v1.dt).floor() as usize + 1;
    let taps = taps.min(v1.len());
    let kernel: Vec<f64> = (0..taps)
        .map(|m| impulse_response(d, p, m as f64 * v1.dt) * v1.dt)
        .collect();
    let x = &v1.samples;
    let samples = (0..x.len())
        .map(|n| {
            let reach = n.min(taps - 1);
            (0..=reach).map(|m| kernel[m] * x[n - m]).sum()
        })
        .collect();
    Ok(Waveform {
        dt: v1.dt,
        t0: v1.t0,
        samples,
    })
}
