//! Receiver-side building blocks: noisy observation, transient removal,
//! zero-forcing equalization and exhaustive sequence detection.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::transient_component;
use crate::circuit::{frequency_response, CircuitParams, Dynamics, InitialConditions};
use crate::discrete::{derive_params, simulate_samples, ConductionMode, Variant};
use crate::error::{ModelError, Result};
use crate::modulation::{sample_switching, ModulationConfig};
use crate::waveform::Waveform;

/// Largest bit count accepted by [`brute_force_detect`].
pub const MAX_DETECT_BITS: usize = 12;

/// `r = c v2 + n` with white Gaussian `n` of standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub c: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl ObservationModel {
    pub fn new(c: f64, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "sigma",
                reason: format!("must be finite and non-negative, got {sigma}"),
            });
        }
        if !c.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "c",
                reason: format!("must be finite, got {c}"),
            });
        }
        Ok(Self { c, sigma, seed })
    }
}

/// Estimates of `v2(0)` and `dv2/dt(0)` available at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimatedIC {
    pub v2_0_hat: f64,
    pub dv2_0_hat: f64,
}

impl EstimatedIC {
    pub fn new(v2_0_hat: f64, dv2_0_hat: f64) -> Self {
        Self { v2_0_hat, dv2_0_hat }
    }

    /// Truth plus the given estimation errors.
    pub fn with_errors(truth: &InitialConditions, eps_v: f64, eps_dv: f64) -> Self {
        Self::new(truth.v2_0 + eps_v, truth.dv2_0 + eps_dv)
    }

    fn as_ic(&self) -> InitialConditions {
        InitialConditions::new(self.v2_0_hat, self.dv2_0_hat)
    }
}

/// Seeded `c w[n] + N(0, sigma^2)`.
pub fn observe(w: &Waveform, om: &ObservationModel) -> Waveform {
    let samples = if om.sigma == 0.0 {
        w.samples.iter().map(|&x| om.c * x).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(om.seed);
        let normal = Normal::new(0.0, om.sigma).expect("sigma validated as finite and >= 0");
        w.samples
            .iter()
            .map(|&x| om.c * x + normal.sample(&mut rng))
            .collect()
    };
    Waveform {
        dt: w.dt,
        t0: w.t0,
        samples,
    }
}

/// Noise standard deviation giving `snr_db` relative to the variance of `signal`.
pub fn sigma_for_snr(signal: &Waveform, snr_db: f64) -> f64 {
    let n = signal.len() as f64;
    let mean = signal.mean().unwrap_or(0.0);
    let var = signal.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (var / 10f64.powf(snr_db / 10.0)).sqrt()
}

pub fn reconstruct_transient(d: &Dynamics, e: &EstimatedIC, t: f64) -> f64 {
    transient_component(d, &e.as_ic(), t)
}

/// `r[n] - c_assumed * reconstruct_transient(t_n)` on the waveform's own clock.
pub fn subtract_transient(r: &Waveform, d: &Dynamics, e: &EstimatedIC, c_assumed: f64) -> Waveform {
    let samples = r
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| x - c_assumed * reconstruct_transient(d, e, r.time(n)))
        .collect();
    Waveform {
        dt: r.dt,
        t0: r.t0,
        samples,
    }
}

/// `1/H(f)` for `eps = 0`, otherwise `conj(H) / (|H|^2 + eps)`.
pub fn zf_response(p: &CircuitParams, f: f64, eps: f64) -> Complex64 {
    let h = frequency_response(p, f);
    if eps == 0.0 {
        1.0 / h
    } else {
        h.conj() / (h.norm_sqr() + eps)
    }
}

/// Applies [`zf_response`] bin by bin after removing the mean.
///
/// Inputs whose length is not a power of two are padded with the last
/// sample; the output is cut back to the input length.
pub fn equalize_frequency_domain(r: &Waveform, p: &CircuitParams, eps: f64) -> Waveform {
    let n_in = r.len();
    if n_in == 0 {
        return r.clone();
    }
    let mean = r.mean().unwrap_or(0.0);
    let n = n_in.next_power_of_two();
    let edge = r.samples[n_in - 1];
    let mut buf: Vec<Complex64> = r
        .samples
        .iter()
        .copied()
        .chain(std::iter::repeat_n(edge, n - n_in))
        .map(|x| Complex64::new(x - mean, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * r.dt);
    for (k, v) in buf.iter_mut().enumerate() {
        let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let f = signed * df;
        // Keep the Nyquist bin real so the inverse stays real.
        let g = if 2 * k == n {
            Complex64::new(zf_response(p, f, eps).re, 0.0)
        } else {
            zf_response(p, f, eps)
        };
        *v *= g;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Waveform {
        dt: r.dt,
        t0: r.t0,
        samples: buf[..n_in].iter().map(|v| v.re * scale + mean).collect(),
    }
}

/// Windows of sub-sampled inductor current and output voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub il_window: Vec<f64>,
    pub v2_window: Vec<f64>,
    /// Sub-sample index; the newest window entry sits at sample `m * n_sub`.
    pub m: usize,
    pub n_sub: usize,
}

/// Default window length and decimation for a given oversampling factor.
pub fn default_state_layout(oversampling: usize) -> (usize, usize) {
    (2, (oversampling / 2).max(1))
}

/// States at every sub-sample `m` with a full window of `l_m` entries.
pub fn build_state_sequence(
    il: &Waveform,
    v2: &Waveform,
    oversampling: usize,
    n_sub: usize,
    l_m: usize,
) -> Result<Vec<JointState>> {
    if n_sub == 0 || !oversampling.is_multiple_of(n_sub) {
        return Err(ModelError::IndivisibleDecimation {
            oversampling,
            decimation: n_sub,
        });
    }
    if l_m == 0 {
        return Err(ModelError::InvalidParameter {
            name: "L_m",
            reason: "window length must be at least 1".into(),
        });
    }
    il.check_aligned(v2)?;
    if il.is_empty() {
        return Ok(Vec::new());
    }
    let m_last = (il.len() - 1) / n_sub;
    Ok((l_m - 1..=m_last)
        .map(|m| {
            let idx = (m + 1 - l_m..=m).map(|i| i * n_sub);
            JointState {
                il_window: idx.clone().map(|i| il.samples[i]).collect(),
                v2_window: idx.map(|i| v2.samples[i]).collect(),
                m,
                n_sub,
            }
        })
        .collect())
}

/// Exhaustive search over all `2^K` bit sequences for the EXACT-model
/// trajectory closest to `r` in squared distance. Ties go to the
/// lexicographically smallest sequence. `r` must be in volts (divided by
/// `c`) and hold `K * J` samples from `t = 0`.
pub fn brute_force_detect(
    r: &Waveform,
    p: &CircuitParams,
    cfg: &ModulationConfig,
    ic: &InitialConditions,
    oversampling: usize,
    symbols: usize,
) -> Result<Vec<u8>> {
    if symbols > MAX_DETECT_BITS {
        return Err(ModelError::TooManyBits {
            symbols,
            max: MAX_DETECT_BITS,
        });
    }
    let n = symbols * oversampling;
    if r.len() != n {
        return Err(ModelError::GridMismatch(format!(
            "observation has {} samples, expected K*J = {n}",
            r.len()
        )));
    }
    let dp = derive_params(p, oversampling, cfg.period, Variant::Exact)?;
    if ((r.dt - dp.dt) / dp.dt).abs() > 1e-9 {
        return Err(ModelError::GridMismatch(format!(
            "observation dt {} differs from T/J = {}",
            r.dt, dp.dt
        )));
    }
    let mut best: Option<(f64, Vec<u8>)> = None;
    for code in 0u32..(1u32 << symbols) {
        // Most significant bit first, so counting order is lexicographic.
        let bits: Vec<u8> = (0..symbols)
            .map(|i| ((code >> (symbols - 1 - i)) & 1) as u8)
            .collect();
        let pat = cfg.encode(&bits)?;
        let s1 = sample_switching(&pat, dp.dt, n);
        let (v2, _) = simulate_samples(p, &s1, ic, &dp, ConductionMode::Ccm)?;
        let dist: f64 = v2
            .samples
            .iter()
            .zip(&r.samples)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, bits));
        }
    }
    Ok(best.map(|(_, b)| b).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::derive_dynamics;
    use crate::discrete::simulate;
    use approx::assert_relative_eq;

    const T: f64 = 1e-6;

    fn fig3() -> (CircuitParams, Dynamics) {
        let p = CircuitParams::normalized(10e-6, 1e-6, 10.0).unwrap();
        (p, derive_dynamics(&p).unwrap())
    }

    fn omega(f: f64) -> f64 {
        2.0 * std::f64::consts::PI * f
    }

    #[test]
    fn noiseless_observation_scales() {
        let w = Waveform::from_fn(1e-8, 0.0, 50, |t| (t * 3e7).sin());
        assert_eq!(observe(&w, &ObservationModel::new(1.0, 0.0, 1).unwrap()), w);
        let two = observe(&w, &ObservationModel::new(2.0, 0.0, 1).unwrap());
        assert!(two.samples.iter().zip(&w.samples).all(|(a, b)| *a == 2.0 * b));
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let w = Waveform::new(1e-8, 0.0, vec![0.5; 100_000]).unwrap();
        let om = ObservationModel::new(1.0, 0.02, 7).unwrap();
        let r = observe(&w, &om);
        let var = r.samples.iter().map(|x| (x - 0.5).powi(2)).sum::<f64>() / 1e5;
        assert!((var / 4e-4 - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn observation_is_seeded() {
        let w = Waveform::new(1e-8, 0.0, vec![0.0; 64]).unwrap();
        let a = observe(&w, &ObservationModel::new(1.0, 0.1, 3).unwrap());
        let b = observe(&w, &ObservationModel::new(1.0, 0.1, 3).unwrap());
        let c = observe(&w, &ObservationModel::new(1.0, 0.1, 4).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(ObservationModel::new(1.0, -1.0, 0).is_err());
    }

    #[test]
    fn exact_estimate_reconstructs_transient() {
        let (_, d) = fig3();
        let ic = InitialConditions::new(0.4, 2e4);
        let e = EstimatedIC::with_errors(&ic, 0.0, 0.0);
        for i in 0..100 {
            let t = i as f64 * 3e-7;
            assert_eq!(reconstruct_transient(&d, &e, t), transient_component(&d, &ic, t));
        }
    }

    #[test]
    fn residual_is_transient_of_negated_errors() {
        let (_, d) = fig3();
        let ic = InitialConditions::new(0.4, 2e4);
        let e = EstimatedIC::with_errors(&ic, 0.01, -300.0);
        let err = InitialConditions::new(-0.01, 300.0);
        for i in 0..100 {
            let t = i as f64 * 5e-7;
            let residual = transient_component(&d, &ic, t) - reconstruct_transient(&d, &e, t);
            assert!((residual - transient_component(&d, &err, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn voltage_error_residual_bound() {
        let (_, d) = fig3();
        let ic = InitialConditions::steady(0.75, 1.0);
        let e = EstimatedIC::with_errors(&ic, 0.01, 0.0);
        let r = Waveform::from_fn(T / 20.0, 0.0, 4000, |t| transient_component(&d, &ic, t));
        let out = subtract_transient(&r, &d, &e, 1.0);
        let bound = 0.01 * (1.0 + d.a / d.b);
        for (n, x) in out.samples.iter().enumerate() {
            let t = out.time(n);
            assert!(x.abs() <= bound * (-d.a * t).exp() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn zf_inverts_response() {
        let (p, _) = fig3();
        assert_eq!(zf_response(&p, 0.0, 0.0), Complex64::new(1.0, 0.0));
        for f in [1e2, 5e4, 1.59e5, 1e6, 3e7] {
            let prod = zf_response(&p, f, 0.0) * frequency_response(&p, f);
            assert!((prod - 1.0).norm() < 1e-12);
            let h2 = frequency_response(&p, f).norm_sqr();
            assert_relative_eq!(
                zf_response(&p, f, h2).norm(),
                0.5 * zf_response(&p, f, 0.0).norm(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn equalizer_preserves_constant() {
        let (p, _) = fig3();
        let r = Waveform::new(1e-8, 0.0, vec![0.3; 100]).unwrap();
        let out = equalize_frequency_domain(&r, &p, 0.0);
        assert_eq!(out.len(), 100);
        assert!(out.samples.iter().all(|x| (x - 0.3).abs() < 1e-12));
    }

    #[test]
    fn equalizer_inverts_filtering_of_smooth_input() {
        let (p, _) = fig3();
        let n = 4096;
        let dt = 1e-7;
        let df = 1.0 / (n as f64 * dt);
        let tones = [(3.0, 0.2, 0.0), (11.0, 0.1, 1.0), (40.0, 0.05, 2.0)];
        let input = Waveform::from_fn(dt, 0.0, n, |t| {
            0.5 + tones.iter().map(|&(k, a, ph)| a * (omega(k * df) * t + ph).cos()).sum::<f64>()
        });
        let filtered = Waveform::from_fn(dt, 0.0, n, |t| {
            0.5 + tones
                .iter()
                .map(|&(k, a, ph)| {
                    let h = frequency_response(&p, k * df);
                    a * h.norm() * (omega(k * df) * t + ph + h.arg()).cos()
                })
                .sum::<f64>()
        });
        let out = equalize_frequency_domain(&filtered, &p, 0.0);
        let err = out
            .samples
            .iter()
            .zip(&input.samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn state_sequence_trivial_layout() {
        let il = Waveform::new(1.0, 0.0, vec![1.0, 2.0, 3.0]).unwrap();
        let v2 = Waveform::new(1.0, 0.0, vec![4.0, 5.0, 6.0]).unwrap();
        let s = build_state_sequence(&il, &v2, 1, 1, 1).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].il_window, vec![2.0]);
        assert_eq!(s[2].v2_window, vec![6.0]);
        assert!(matches!(
            build_state_sequence(&il, &v2, 8, 3, 2),
            Err(ModelError::IndivisibleDecimation { oversampling: 8, decimation: 3 })
        ));
    }

    #[test]
    fn state_windows_hold_decimated_history() {
        let il = Waveform::from_fn(1.0, 0.0, 17, |t| t);
        let v2 = il.map(|x| -x);
        let s = build_state_sequence(&il, &v2, 8, 4, 2).unwrap();
        assert_eq!(s.first().unwrap().m, 1);
        assert_eq!(s[0].il_window, vec![0.0, 4.0]);
        assert_eq!(s.last().unwrap().il_window, vec![12.0, 16.0]);
        assert_eq!(s.last().unwrap().v2_window, vec![-12.0, -16.0]);
        assert_eq!(default_state_layout(16), (2, 8));
    }

    #[test]
    fn noiseless_detection_recovers_bits() {
        let (p, _) = fig3();
        let cfg = ModulationConfig::vpwm(T, 0.75, 0.2);
        let ic = InitialConditions::steady(0.75, 1.0);
        let bits = vec![1, 0, 0, 1, 1, 0, 1, 0];
        let (v2, _) = simulate(&p, &cfg.encode(&bits).unwrap(), &ic, 16, Variant::Exact, ConductionMode::Ccm).unwrap();
        assert_eq!(brute_force_detect(&v2, &p, &cfg, &ic, 16, 8).unwrap(), bits);
    }

    #[test]
    fn ties_resolve_to_smallest_sequence() {
        let (p, _) = fig3();
        let cfg = ModulationConfig::vpwm(T, 0.75, 0.0);
        let ic = InitialConditions::steady(0.75, 1.0);
        let (v2, _) = simulate(&p, &cfg.encode(&[1, 1, 1]).unwrap(), &ic, 8, Variant::Exact, ConductionMode::Ccm).unwrap();
        assert_eq!(brute_force_detect(&v2, &p, &cfg, &ic, 8, 3).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn detection_limits() {
        let (p, _) = fig3();
        let cfg = ModulationConfig::vpwm(T, 0.75, 0.2);
        let ic = InitialConditions::default();
        let r = Waveform::new(T / 4.0, 0.0, vec![0.0; 13 * 4]).unwrap();
        assert_eq!(
            brute_force_detect(&r, &p, &cfg, &ic, 4, 13).unwrap_err(),
            ModelError::TooManyBits { symbols: 13, max: 12 }
        );
        assert!(matches!(
            brute_force_detect(&r, &p, &cfg, &ic, 4, 3),
            Err(ModelError::GridMismatch(_))
        ));
    }
}
