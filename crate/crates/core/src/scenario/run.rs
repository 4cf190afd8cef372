//! Executes a validated [`Scenario`] and collects its tables and report.

use std::f64::consts::PI;

use serde_json::{json, Value};

use super::{ConfigError, GeneralizedModel, RunSpec, Scenario, Table};
use crate::accuracy::{mse_slope, sweep};
use crate::analytic::{pulse_shape_gtx, sample_data_component, sample_output, sample_transient};
use crate::circuit::{cutoff_frequency, derive_dynamics, frequency_response, CircuitParams};
use crate::discrete::{derive_params, simulate, Variant};
use crate::equalization::{
    brute_force_detect, equalize_frequency_domain, observe, sigma_for_snr, subtract_transient,
    EstimatedIC, ObservationModel,
};
use crate::error::ModelError;
use crate::laplace::{
    build_general_load_model, build_parasitic_model, find_poles, simulate_generalized,
    FullInitialConditions,
};
use crate::modulation::sample_switching;
use crate::spectrum::{compare_harmonics, envelope_slope, log_grid, ripple_spectrum, to_db};
use crate::waveform::Waveform;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
}

impl RunError {
    /// Process exit status: 2 for configuration problems, 1 for model failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Model(_) => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub tables: Vec<Table>,
    pub report: Value,
}

impl RunOutput {
    /// Sidecar metadata for one table: the fully resolved configuration.
    pub fn metadata(&self, table: &Table) -> Value {
        let bits: String = self
            .scenario
            .bits()
            .map(|b| b.iter().map(|x| char::from(b'0' + x)).collect())
            .unwrap_or_default();
        json!({
            "table": table.name,
            "columns": table.columns,
            "rows": table.rows.len(),
            "scenario": self.scenario,
            "resolved": {
                "bits": bits,
                "ic": self.scenario.initial_conditions(),
            },
        })
    }
}

pub fn run(s: &Scenario) -> Result<RunOutput, RunError> {
    s.validate()?;
    let bits = s.bits()?;
    let (tables, metrics) = match &s.run {
        RunSpec::Analytic {
            oversampling,
            components,
            duration_symbols,
        } => run_analytic(s, &bits, *oversampling, *components, *duration_symbols)?,
        RunSpec::PulseShape {
            duties,
            span_symbols,
            oversampling,
            circuits,
        } => run_pulse_shape(s, duties, *span_symbols, *oversampling, circuits)?,
        RunSpec::Discrete {
            oversampling,
            variant,
            mode,
        } => {
            let pat = s.modulation.encode(&bits)?;
            let ic = s.initial_conditions();
            let (v2, il) = simulate(&s.circuit, &pat, &ic, *oversampling, *variant, *mode)?;
            let m = json!({
                "samples": v2.len(),
                "v2_min": v2.samples.iter().copied().fold(f64::INFINITY, f64::min),
                "v2_max": v2.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "il_min": il.samples.iter().copied().fold(f64::INFINITY, f64::min),
            });
            (
                vec![
                    Table::waveform("v2", "v2_volts", &v2),
                    Table::waveform("il", "il_amps", &il),
                ],
                m,
            )
        }
        RunSpec::Spectrum {
            f_min,
            f_max,
            points,
            fft_check,
        } => {
            let (mut tables, mut m) = run_spectrum(s, &bits, *f_min, *f_max, *points)?;
            if let Some(fc) = fft_check {
                let d = derive_dynamics(&s.circuit)?;
                let rows = compare_harmonics(
                    &s.circuit,
                    &d,
                    &s.modulation,
                    fc.guard_symbols,
                    fc.window_symbols,
                    fc.oversampling,
                    fc.f_max,
                    fc.floor_db,
                )?;
                let mut t = Table::new("harmonics", &["frequency_hz", "analytic_db", "fft_db", "diff_db"]);
                let mut worst: f64 = 0.0;
                for r in &rows {
                    let diff = r.fft_db - r.analytic_db;
                    worst = worst.max(diff.abs());
                    t.push(vec![r.frequency_hz.into(), r.analytic_db.into(), r.fft_db.into(), diff.into()]);
                }
                m["fft_check"] = json!({ "harmonics": rows.len(), "max_abs_diff_db": worst });
                tables.push(t);
            }
            (tables, m)
        }
        RunSpec::Accuracy {
            j_list,
            variants,
            options,
        } => {
            let reports = sweep(&s.circuit, &s.modulation, &bits, j_list, variants, options)?;
            let v1 = s.circuit.input_voltage;
            let mut t = Table::new("accuracy", &["J", "variant", "bias_over_v1", "mse_over_v1sq"]);
            for r in &reports {
                t.push(vec![
                    r.oversampling.into(),
                    r.variant.name().into(),
                    (r.bias / v1).into(),
                    (r.mse / (v1 * v1)).into(),
                ]);
            }
            let slopes: serde_json::Map<String, Value> = variants
                .iter()
                .map(|&v| (v.name().to_string(), json!(mse_slope(&reports, v, 8))))
                .collect();
            let m = json!({
                "settle_symbols": reports.first().map(|r| r.settle_symbols),
                "mse_slope_j_ge_8": slopes,
            });
            (vec![t], m)
        }
        RunSpec::Params {
            oversampling,
            lc,
            c_min,
            c_max,
            points,
        } => run_params(s, *oversampling, *lc, *c_min, *c_max, *points)?,
        RunSpec::Equalize {
            oversampling,
            snr_db,
            sigma,
            c,
            eps,
            eps_v,
            eps_dv,
            detect,
        } => run_equalize(
            s,
            &bits,
            *oversampling,
            EqualizeSettings {
                snr_db: *snr_db,
                sigma: *sigma,
                c: *c,
                eps: *eps,
                eps_v: *eps_v,
                eps_dv: *eps_dv,
                detect: *detect,
            },
        )?,
        RunSpec::Generalized {
            model,
            oversampling,
            ic,
        } => {
            let r = match model {
                GeneralizedModel::Parasitic(q) => build_parasitic_model(&s.circuit, q)?,
                GeneralizedModel::GeneralLoad(g) => build_general_load_model(&s.circuit, g)?,
            };
            let ic = ic.unwrap_or_else(|| FullInitialConditions::from_base(&s.initial_conditions()));
            let pat = s.modulation.encode(&bits)?;
            let v2 = simulate_generalized(&r, &pat, &ic, s.circuit.input_voltage, *oversampling)?;
            let poles: Vec<[f64; 2]> = find_poles(&r)?.iter().map(|p| [p.re, p.im]).collect();
            let m = json!({
                "order": r.order(),
                "dc_gain": r.dc_gain(),
                "poles": poles,
                "num": r.num,
                "den": r.den,
                "samples": v2.len(),
            });
            (vec![Table::waveform("v2", "v2_volts", &v2)], m)
        }
    };
    let report = json!({
        "id": s.id,
        "kind": s.run.kind(),
        "symbols": bits.len(),
        "files": tables.iter().map(Table::file_name).collect::<Vec<_>>(),
        "metrics": metrics,
    });
    Ok(RunOutput {
        scenario: s.clone(),
        tables,
        report,
    })
}

/// Symbols after which the transient has decayed by `e^-10`.
pub(crate) fn ripple_guard_symbols(a: f64, period: f64) -> usize {
    (10.0 / (a * period)).ceil() as usize
}

fn run_analytic(
    s: &Scenario,
    bits: &[u8],
    j: usize,
    components: bool,
    duration_symbols: Option<usize>,
) -> Result<(Vec<Table>, Value), RunError> {
    let p = &s.circuit;
    let d = derive_dynamics(p)?;
    let pat = s.modulation.encode(bits)?;
    let ic = s.initial_conditions();
    let symbols = duration_symbols.unwrap_or(bits.len());
    let dt = s.modulation.period / j as f64;
    let n = symbols * j;
    let v2 = sample_output(&d, &ic, &pat, p.input_voltage, dt, n);

    let nominal = s.modulation.delta * p.input_voltage;
    let guard = ripple_guard_symbols(d.a, s.modulation.period);
    let ripple = (symbols > guard).then(|| {
        v2.samples[guard * j..]
            .iter()
            .map(|x| (x - nominal).abs())
            .fold(0.0, f64::max)
            / nominal
    });
    let m = json!({
        "samples": n,
        "a": d.a,
        "b": d.b,
        "nominal_v2": nominal,
        "guard_symbols": guard,
        "relative_ripple": ripple,
    });

    let mut tables = vec![Table::waveform("v2", "v2_volts", &v2)];
    if components {
        let v1 = Waveform {
            dt,
            t0: 0.0,
            samples: sample_switching(&pat, dt, n)
                .into_iter()
                .map(|x| f64::from(x) * p.input_voltage)
                .collect(),
        };
        tables.push(Table::waveform("v1", "v1_volts", &v1));
        tables.push(Table::waveform("transient", "v2t_volts", &sample_transient(&d, &ic, dt, n)));
        tables.push(Table::waveform(
            "data",
            "v2d_volts",
            &sample_data_component(&d, &pat, p.input_voltage, dt, n),
        ));
    }
    Ok((tables, m))
}

fn run_pulse_shape(
    s: &Scenario,
    duties: &[f64],
    span: usize,
    j: usize,
    circuits: &[CircuitParams],
) -> Result<(Vec<Table>, Value), RunError> {
    let own = [s.circuit];
    let circuits = if circuits.is_empty() { &own[..] } else { circuits };
    let period = s.modulation.period;
    let dt = period / j as f64;
    let t0 = -0.5 * period;
    let mut tables = Vec::new();
    let mut shapes = Vec::new();
    for (i, p) in circuits.iter().enumerate() {
        let d = derive_dynamics(p)?;
        for (k, &duty) in duties.iter().enumerate() {
            let tp = duty * period;
            let w = Waveform::from_fn(dt, t0, span * j, |t| pulse_shape_gtx(&d, tp, t));
            let (n_peak, peak) = w
                .samples
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (n, x)| if x > acc.1 { (n, x) } else { acc });
            shapes.push(json!({
                "file": format!("gtx_c{i}_d{k}.csv"),
                "circuit": p,
                "duty": duty,
                "peak": peak,
                "peak_time_s": w.time(n_peak),
                "ringing_period_s": 2.0 * PI / d.b,
            }));
            tables.push(Table::waveform(format!("gtx_c{i}_d{k}"), "gtx", &w));
        }
    }
    Ok((tables, json!({ "shapes": shapes })))
}

fn run_spectrum(
    s: &Scenario,
    bits: &[u8],
    f_min: f64,
    f_max: f64,
    points: usize,
) -> Result<(Vec<Table>, Value), RunError> {
    let p = &s.circuit;
    let d = derive_dynamics(p)?;
    let pat = s.modulation.encode(bits)?;
    let freqs = log_grid(f_min, f_max, points)?;
    let grid = ripple_spectrum(p, &d, &pat, &freqs)?;
    let period = s.modulation.period;
    let reference = p.input_voltage * period;

    let mut spectrum = Table::new("spectrum", &["frequency_hz", "re", "im", "mag_db"]);
    for r in grid.rows(p.input_voltage, period) {
        spectrum.push(vec![r.frequency_hz.into(), r.re.into(), r.im.into(), r.mag_db.into()]);
    }
    let mut response = Table::new("filter_response", &["frequency_hz", "re", "im", "mag_db"]);
    for &f in &freqs {
        let h = frequency_response(p, f);
        response.push(vec![f.into(), h.re.into(), h.im.into(), to_db(h.norm(), 1.0).into()]);
    }

    let f3 = cutoff_frequency(p);
    let slope = envelope_slope(&freqs, &grid.magnitudes_db(reference), 10.0 * f3, 100.0 * f3);
    let m = json!({
        "f_3db_hz": f3,
        "dc_mass": grid.dc_mass,
        "envelope_slope_db_per_decade": slope,
        "envelope_band_hz": [10.0 * f3, 100.0 * f3],
        "normalization": reference,
    });
    Ok((vec![spectrum, response], m))
}

fn run_params(
    s: &Scenario,
    j: usize,
    lc: f64,
    c_min: f64,
    c_max: f64,
    points: usize,
) -> Result<(Vec<Table>, Value), RunError> {
    let names = ["alpha", "beta", "gamma", "kappa", "mu"];
    let mut t = Table::new(
        "params",
        &[
            "capacitance_f",
            "inductance_h",
            "alpha_exact",
            "alpha_approx",
            "beta_exact",
            "beta_approx",
            "gamma_exact",
            "gamma_approx",
            "kappa_exact",
            "kappa_approx",
            "mu_exact",
            "mu_approx",
        ],
    );
    let mut gaps = vec![Vec::with_capacity(points); names.len()];
    for i in 0..points {
        let c = c_min * (c_max / c_min).powf(i as f64 / (points - 1) as f64);
        let p = CircuitParams {
            inductance: lc / c,
            capacitance: c,
            ..s.circuit
        };
        let e = derive_params(&p, j, s.modulation.period, Variant::Exact)?;
        let a = derive_params(&p, j, s.modulation.period, Variant::Simplified)?;
        let pairs = [
            (e.alpha, a.alpha),
            (e.beta, a.beta),
            (e.gamma, a.gamma),
            (e.kappa, a.kappa),
            (e.mu, a.mu),
        ];
        let mut row = vec![c.into(), p.inductance.into()];
        for (k, (x, y)) in pairs.into_iter().enumerate() {
            row.push(x.into());
            row.push(y.into());
            gaps[k].push(((y - x) / x).abs());
        }
        t.push(row);
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mut rel = serde_json::Map::new();
    for (k, name) in names.iter().enumerate() {
        rel.insert(name.to_string(), json!(max(&gaps[k])));
    }
    let m = json!({
        "max_relative_gap": rel,
        "gamma_gap_smallest_c": gaps[2][0],
        "gamma_gap_excluding_smallest_c": max(&gaps[2][1..]),
    });
    Ok((vec![t], m))
}

struct EqualizeSettings {
    snr_db: Option<f64>,
    sigma: f64,
    c: f64,
    eps: f64,
    eps_v: f64,
    eps_dv: f64,
    detect: bool,
}

fn run_equalize(s: &Scenario, bits: &[u8], j: usize, cfg: EqualizeSettings) -> Result<(Vec<Table>, Value), RunError> {
    let p = &s.circuit;
    let d = derive_dynamics(p)?;
    let pat = s.modulation.encode(bits)?;
    let ic = s.initial_conditions();
    let dt = s.modulation.period / j as f64;
    let n = bits.len() * j;
    let v2 = sample_output(&d, &ic, &pat, p.input_voltage, dt, n);
    let clean = v2.map(|x| cfg.c * x);
    let sigma = cfg.snr_db.map_or(cfg.sigma, |snr| sigma_for_snr(&clean, snr));
    let om = ObservationModel::new(cfg.c, sigma, s.seed)?;
    let r = observe(&v2, &om);

    let est = EstimatedIC::with_errors(&ic, cfg.eps_v, cfg.eps_dv);
    let data_hat = subtract_transient(&r, &d, &est, cfg.c).map(|x| x / cfg.c);
    let data_true = sample_data_component(&d, &pat, p.input_voltage, dt, n);
    let v1_hat = equalize_frequency_domain(&data_hat, p, cfg.eps);

    let mut t = Table::new("equalize", &["t_s", "v2_volts", "observed", "data_estimate", "v1_estimate"]);
    for k in 0..n {
        t.push(vec![
            v2.time(k).into(),
            v2.samples[k].into(),
            r.samples[k].into(),
            data_hat.samples[k].into(),
            v1_hat.samples[k].into(),
        ]);
    }
    let data_err = data_hat
        .samples
        .iter()
        .zip(&data_true.samples)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let mut m = json!({
        "sigma": sigma,
        "snr_db": cfg.snr_db,
        "data_component_max_error": data_err,
    });
    if cfg.detect {
        let scaled = r.map(|x| x / cfg.c);
        let detected = brute_force_detect(&scaled, p, &s.modulation, &ic, j, bits.len())?;
        let errors = detected.iter().zip(bits).filter(|(a, b)| a != b).count();
        m["detected_bits"] = json!(detected.iter().map(|b| char::from(b'0' + b)).collect::<String>());
        m["bit_errors"] = json!(errors);
    }
    Ok((vec![t], m))
}
