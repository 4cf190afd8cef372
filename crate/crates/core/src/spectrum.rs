//! Fourier spectrum of the output ripple.
//!
//! Transforms use the continuous convention `X(f) = ∫ x(t) e^{-i2πft} dt`,
//! so analytic values and FFT estimates (scaled by `dt`) share units of V·s.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::data_component;
use crate::circuit::{CircuitParams, Dynamics};
use crate::error::{ModelError, Result};
use crate::modulation::{alternating_bits, ModulationConfig};
use crate::waveform::Waveform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Weight of the Dirac impulse at f = 0, which cannot live on the grid.
    pub dc_mass: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub frequency_hz: f64,
    pub re: f64,
    pub im: f64,
    pub mag_db: f64,
}

impl SpectrumGrid {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Magnitudes in dB relative to `reference` (V·s).
    pub fn magnitudes_db(&self, reference: f64) -> Vec<f64> {
        self.values.iter().map(|v| to_db(v.norm(), reference)).collect()
    }

    /// CSV rows with magnitudes normalized by `input_voltage * period`.
    pub fn rows(&self, input_voltage: f64, period: f64) -> Vec<SpectrumRow> {
        let reference = input_voltage * period;
        self.frequencies
            .iter()
            .zip(&self.values)
            .map(|(&f, v)| SpectrumRow {
                frequency_hz: f,
                re: v.re,
                im: v.im,
                mag_db: to_db(v.norm(), reference),
            })
            .collect()
    }

    /// Value at the grid point closest to `f`.
    pub fn nearest(&self, f: f64) -> Option<(f64, Complex64)> {
        let idx = self.frequencies.partition_point(|&x| x < f);
        let candidates = [idx.checked_sub(1), Some(idx)];
        candidates
            .into_iter()
            .flatten()
            .filter(|&i| i < self.len())
            .min_by(|&i, &j| {
                (self.frequencies[i] - f)
                    .abs()
                    .total_cmp(&(self.frequencies[j] - f).abs())
            })
            .map(|i| (self.frequencies[i], self.values[i]))
    }
}

pub fn to_db(magnitude: f64, reference: f64) -> f64 {
    20.0 * (magnitude / reference).log10()
}

pub fn validate_grid(frequencies: &[f64]) -> Result<()> {
    if frequencies.contains(&0.0) {
        return Err(ModelError::ZeroFrequency);
    }
    for (i, &f) in frequencies.iter().enumerate() {
        if !(f.is_finite() && f > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "frequencies",
                reason: format!("entry {i} = {f} is not a positive frequency"),
            });
        }
        if i > 0 && f <= frequencies[i - 1] {
            return Err(ModelError::InvalidParameter {
                name: "frequencies",
                reason: format!("entry {i} = {f} is not strictly increasing"),
            });
        }
    }
    Ok(())
}

/// Logarithmically spaced grid with `points` entries spanning `[f_min, f_max]`.
pub fn log_grid(f_min: f64, f_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_max > f_min && f_max.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "f_min",
            reason: format!("need 0 < f_min < f_max, got [{f_min}, {f_max}]"),
        });
    }
    if points < 2 {
        return Err(ModelError::InvalidParameter {
            name: "points",
            reason: format!("need at least 2 points, got {points}"),
        });
    }
    let (lo, hi) = (f_min.ln(), f_max.ln());
    let step = (hi - lo) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| (lo + step * i as f64).exp()).collect();
    grid[0] = f_min;
    grid[points - 1] = f_max;
    Ok(grid)
}

/// Transform of the switched input `V1 * s1(t)` at `f != 0`.
pub fn v1_spectrum(pat: &crate::modulation::SwitchingPattern, input_voltage: f64, f: f64) -> Result<Complex64> {
    if f == 0.0 {
        return Err(ModelError::ZeroFrequency);
    }
    let w = 2.0 * PI * f;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..pat.len() {
        let origin = k as f64 * pat.period;
        acc += Complex64::from_polar(1.0, -w * (origin + pat.starts[k]))
            - Complex64::from_polar(1.0, -w * (origin + pat.ends[k]));
    }
    Ok(acc * input_voltage / Complex64::new(0.0, w))
}

/// Ripple spectrum `V1(f) / (LC (i2πf - s01)(i2πf - s02))` on a positive grid.
///
/// The `-δ V1 δ0(f)` term is reported as `dc_mass = δ V1` with δ the mean
/// duty of the pattern.
pub fn ripple_spectrum(
    p: &CircuitParams,
    d: &Dynamics,
    pat: &crate::modulation::SwitchingPattern,
    frequencies: &[f64],
) -> Result<SpectrumGrid> {
    validate_grid(frequencies)?;
    let lc = p.lc();
    let (s01, s02) = (d.s01(), d.s02());
    let values = frequencies
        .iter()
        .map(|&f| {
            let s = Complex64::new(0.0, 2.0 * PI * f);
            Ok(v1_spectrum(pat, p.input_voltage, f)? / (lc * (s - s01) * (s - s02)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumGrid {
        frequencies: frequencies.to_vec(),
        values,
        dc_mass: Some(pat.mean_duty() * p.input_voltage),
    })
}

/// DFT of `samples - dc_remove`, scaled by `dt`, on the positive bins.
///
/// Bin `k` sits at `k / (N dt)` for `k = 1..=N/2`. The phase is referenced
/// to `t = 0`, so a waveform starting at `t0` carries `e^{-i2πf t0}`.
pub fn spectrum_via_fft(w: &Waveform, dc_remove: f64) -> Result<SpectrumGrid> {
    let n = w.len();
    if n < 2 {
        return Err(ModelError::InvalidParameter {
            name: "waveform",
            reason: format!("need at least 2 samples, got {n}"),
        });
    }
    let mut buf: Vec<Complex64> = w
        .samples
        .iter()
        .map(|&x| Complex64::new(x - dc_remove, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * w.dt);
    let (frequencies, values) = (1..=n / 2)
        .map(|k| {
            let f = k as f64 * df;
            let phase = Complex64::from_polar(1.0, -2.0 * PI * f * w.t0);
            (f, buf[k] * w.dt * phase)
        })
        .unzip();
    Ok(SpectrumGrid {
        frequencies,
        values,
        dc_mass: None,
    })
}

/// Least-squares slope in dB/decade through the local maxima of `mags_db`
/// that fall inside `[f_lo, f_hi]`. `None` with fewer than two maxima.
pub fn envelope_slope(frequencies: &[f64], mags_db: &[f64], f_lo: f64, f_hi: f64) -> Option<f64> {
    let peaks: Vec<(f64, f64)> = (1..mags_db.len().saturating_sub(1))
        .filter(|&i| {
            mags_db[i] > mags_db[i - 1]
                && mags_db[i] >= mags_db[i + 1]
                && (f_lo..=f_hi).contains(&frequencies[i])
        })
        .map(|i| (frequencies[i].log10(), mags_db[i]))
        .collect();
    fit_slope(&peaks)
}

pub(crate) fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicComparison {
    pub frequency_hz: f64,
    pub analytic_db: f64,
    pub fft_db: f64,
}

/// Compares the closed-form spectrum of an alternating pattern with an FFT
/// of its sampled steady-state ripple at the harmonics of `1/(2T)`.
///
/// The FFT window covers `window_symbols` (even) symbols that start after
/// `guard_symbols` (even) symbols, sampled `oversampling` times per period.
/// Both paths are normalized by `V1 * T`; harmonics more than `floor_db`
/// below the strongest line are dropped as numerical nulls.
pub fn compare_harmonics(
    p: &CircuitParams,
    d: &Dynamics,
    cfg: &ModulationConfig,
    guard_symbols: usize,
    window_symbols: usize,
    oversampling: usize,
    f_max: f64,
    floor_db: f64,
) -> Result<Vec<HarmonicComparison>> {
    if !guard_symbols.is_multiple_of(2) || !window_symbols.is_multiple_of(2) || window_symbols == 0 {
        return Err(ModelError::InvalidParameter {
            name: "window_symbols",
            reason: "guard and window must span whole data periods (even symbol counts)".into(),
        });
    }
    let t = cfg.period;
    let analytic_pat = cfg.encode(&alternating_bits(window_symbols))?;
    let long_pat = cfg.encode(&alternating_bits(guard_symbols + window_symbols))?;
    let dt = t / oversampling as f64;
    let t0 = guard_symbols as f64 * t;
    let n = window_symbols * oversampling;
    let ripple = Waveform::from_fn(dt, t0, n, |time| {
        data_component(d, &long_pat, p.input_voltage, time)
    });
    let dc = long_pat.mean_duty() * p.input_voltage;
    let fft = spectrum_via_fft(&ripple, dc)?;
    let reference = p.input_voltage * t;
    let fundamental = 1.0 / (2.0 * t);
    let bins_per_harmonic = window_symbols / 2;
    let mut out = Vec::new();
    let mut m = 1;
    while m as f64 * fundamental < f_max {
        let f = m as f64 * fundamental;
        let idx = m * bins_per_harmonic - 1;
        if idx >= fft.len() {
            break;
        }
        let analytic = ripple_spectrum(p, d, &analytic_pat, &[f])?.values[0];
        out.push(HarmonicComparison {
            frequency_hz: f,
            analytic_db: to_db(analytic.norm(), reference),
            fft_db: to_db(fft.values[idx].norm(), reference),
        });
        m += 1;
    }
    let strongest = out
        .iter()
        .map(|h| h.analytic_db)
        .fold(f64::NEG_INFINITY, f64::max);
    out.retain(|h| h.analytic_db > strongest - floor_db);
    Ok(out)
}
