//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p tpc-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{base_model, general_load_model, max_pointwise_relative_error, max_relative_error, parasitic_model};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tpc_core::analytic::{sample_data_component, sample_output};
use tpc_core::circuit::{derive_dynamics, frequency_response, CircuitParams, InitialConditions};
use tpc_core::discrete::{simulate, ConductionMode, Variant};
use tpc_core::equalization::{
    brute_force_detect, observe, sigma_for_snr, subtract_transient, zf_response, EstimatedIC,
    ObservationModel,
};
use tpc_core::laplace::{
    build_general_load_model, build_parasitic_model, find_poles, partial_fractions, root_residual,
    simulate_generalized, FullInitialConditions, GeneralLoad, LoadCapacitance, ParasiticParams,
    RationalLaplace,
};
use tpc_core::modulation::{alternating_bits, ModulationConfig};
use tpc_core::scenario::{preset, run, table1_underdamped, Cell, RunOutput};

const T: f64 = 1e-6;

struct Check {
    pass: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            pass: true,
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, note: impl Into<String>) {
        self.pass &= ok;
        let note = note.into();
        self.notes.push(if ok { note } else { format!("[x] {note}") });
    }
}

fn run_preset(name: &str) -> (RunOutput, f64) {
    let t0 = Instant::now();
    let out = run(&preset(name).expect("preset exists")).expect("preset runs");
    (out, t0.elapsed().as_secs_f64())
}

fn metric(out: &RunOutput, path: &[&str]) -> Value {
    path.iter()
        .fold(&out.report["metrics"], |v, k| &v[*k])
        .clone()
}

fn criterion_1() -> Check {
    let mut c = Check::new();
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let cases = table1_underdamped();
    for (p, delta) in &cases {
        let t0 = Instant::now();
        let d = derive_dynamics(p).unwrap();
        let pat = ModulationConfig::vpwm(T, *delta, 0.2)
            .encode(&alternating_bits(64))
            .unwrap();
        let ic = InitialConditions::steady(*delta, p.input_voltage);
        let (j, n) = (20, 64 * 20);
        let dt = T / j as f64;
        let v2 = sample_output(&d, &ic, &pat, p.input_voltage, dt, n);
        let x0 = [ic.v2_0 / p.load_resistance + p.capacitance * ic.dv2_0, ic.v2_0];
        let oracle = base_model(p).simulate(&x0, &pat, p.input_voltage, dt, n, T / 1000.0);
        worst = worst.max(max_pointwise_relative_error(&v2.samples, &oracle));
        slowest = slowest.max(t0.elapsed().as_secs_f64());
    }
    c.require(cases.len() == 8, format!("{} underdamped cases", cases.len()));
    c.require(worst < 1e-4, format!("max rel err {worst:.2e} < 1e-4"));
    c.require(slowest < 5.0, format!("slowest case {slowest:.2} s < 5 s"));
    c
}

fn criterion_2() -> Check {
    let mut c = Check::new();
    let (out, secs) = run_preset("fig4_ltspice_check");
    let ripple = metric(&out, &["relative_ripple"]).as_f64().unwrap_or(f64::NAN);
    let guard = metric(&out, &["guard_symbols"]);
    c.require(ripple < 3e-3, format!("ripple {:.4} % < 0.3 % (guard {guard} symbols)", 100.0 * ripple));
    c.require(secs < 5.0, format!("runtime {secs:.2} s < 5 s"));
    c
}

fn criterion_3() -> Check {
    let mut c = Check::new();
    let (out, _) = run_preset("fig5_spectrum");
    let slope = metric(&out, &["envelope_slope_db_per_decade"]).as_f64().unwrap_or(f64::NAN);
    c.require(
        (slope + 40.0).abs() <= 3.0,
        format!("envelope slope {slope:.2} dB/dec within -40 +/- 3"),
    );
    let diff = metric(&out, &["fft_check", "max_abs_diff_db"]).as_f64().unwrap_or(f64::NAN);
    let n = metric(&out, &["fft_check", "harmonics"]);
    c.require(diff < 1.0, format!("FFT vs closed form {diff:.3} dB < 1 dB over {n} harmonics below 5 f_s"));
    c
}

/// `(J, variant, bias_over_v1, mse_over_v1sq)` rows of an accuracy table.
fn accuracy_rows(out: &RunOutput) -> Vec<(usize, String, f64, f64)> {
    out.tables[0]
        .rows
        .iter()
        .map(|r| match (&r[0], &r[1], &r[2], &r[3]) {
            (Cell::Int(j), Cell::Text(v), Cell::Float(b), Cell::Float(m)) => (*j as usize, v.clone(), *b, *m),
            other => panic!("unexpected row {other:?}"),
        })
        .collect()
}

fn series(rows: &[(usize, String, f64, f64)], variant: &str) -> Vec<(usize, f64, f64)> {
    rows.iter()
        .filter(|r| r.1 == variant)
        .map(|r| (r.0, r.2, r.3))
        .collect()
}

fn criterion_4() -> Check {
    let mut c = Check::new();
    let (out, _) = run_preset("fig7_mse");
    let rows = accuracy_rows(&out);
    for v in ["exact", "simplified", "predictive"] {
        let s = series(&rows, v);
        let mse: Vec<f64> = s.iter().map(|r| r.2).collect();
        c.require(mse.windows(2).all(|w| w[1] < w[0]), format!("{v} strictly decreasing"));
        c.require(mse.iter().all(|&m| m > 0.0), format!("{v} MSE > 0"));
        let slope = metric(&out, &["mse_slope_j_ge_8", v]).as_f64().unwrap_or(f64::NAN);
        c.require((slope + 1.0).abs() <= 0.3, format!("{v} slope {slope:.3} within -1 +/- 0.3"));
    }
    let (e, s, p) = (series(&rows, "exact"), series(&rows, "simplified"), series(&rows, "predictive"));
    let best = p.iter().zip(&e).zip(&s).all(|((p, e), s)| p.2 <= e.2 && p.2 <= s.2);
    c.require(best, "predictive <= exact, simplified at every J");
    c
}

fn criterion_5() -> Check {
    let mut c = Check::new();
    let (out, _) = run_preset("fig6_bias");
    let rows = accuracy_rows(&out);
    let max_bias = rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    for v in ["exact", "simplified", "predictive"] {
        let s = series(&rows, v);
        let (first, last) = (s.first().unwrap(), s.last().unwrap());
        c.require(
            last.1.abs() < first.1.abs(),
            format!("{v} |bias(J={})| {:.2e} < |bias(J={})| {:.2e}", last.0, last.1.abs(), first.0, first.1.abs()),
        );
    }
    let (e, s, p) = (series(&rows, "exact"), series(&rows, "simplified"), series(&rows, "predictive"));
    let spread = e
        .iter()
        .zip(&s)
        .zip(&p)
        .map(|((e, s), p)| {
            let lo = e.1.min(s.1).min(p.1);
            let hi = e.1.max(s.1).max(p.1);
            hi - lo
        })
        .fold(0.0, f64::max);
    c.require(
        spread < 0.1 * max_bias,
        format!("max spread {spread:.2e} < 10 % of max |bias| {max_bias:.2e}"),
    );
    c
}

fn criterion_6() -> Check {
    let mut c = Check::new();
    let (out, _) = run_preset("fig8_params");
    let s = &out.scenario;
    if let tpc_core::scenario::RunSpec::Params { c_min, c_max, .. } = s.run {
        let decades = (c_max / c_min).log10();
        c.require(decades >= 3.0, format!("C sweep spans {decades:.1} decades"));
    }
    for k in ["alpha", "beta", "kappa", "mu"] {
        let g = metric(&out, &["max_relative_gap", k]).as_f64().unwrap();
        c.require(g < 0.02, format!("{k} gap {:.3} %", 100.0 * g));
    }
    let g_rest = metric(&out, &["gamma_gap_excluding_smallest_c"]).as_f64().unwrap();
    let g_small = metric(&out, &["gamma_gap_smallest_c"]).as_f64().unwrap();
    c.require(g_rest < 0.02, format!("gamma gap {:.3} % away from smallest C", 100.0 * g_rest));
    c.require(g_small < 0.1, format!("gamma gap {:.3} % at smallest C", 100.0 * g_small));
    c
}

fn criterion_7() -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut runs, mut identical, mut clipped, mut negative_il) = (0, 0, 0, 0);
    let mut mismatched = 0;
    for _ in 0..90 {
        let l = 10f64.powf(rng.random_range(-6.0..-4.0));
        let r = [2.0, 10.0, 20.0][rng.random_range(0..3)];
        let p = CircuitParams::normalized(l, 1e-11 / l, r).unwrap();
        let delta = rng.random_range(0.2..0.8);
        let depth = rng.random_range(0.0..0.15f64).min(delta).min(1.0 - delta);
        let cfg = ModulationConfig::vpwm(T, delta, depth);
        let bits: Vec<u8> = (0..32).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let pat = cfg.encode(&bits).unwrap();
        let ic = if rng.random_bool(0.5) {
            InitialConditions::steady(delta, 1.0)
        } else {
            InitialConditions::default()
        };
        let j = [10, 20, 50][rng.random_range(0..3)];
        let variant = Variant::ALL[rng.random_range(0..3)];
        let Ok((ccm_v, ccm_i)) = simulate(&p, &pat, &ic, j, variant, ConductionMode::Ccm) else {
            continue;
        };
        let (dcm_v, dcm_i) = simulate(&p, &pat, &ic, j, variant, ConductionMode::Dcm).unwrap();
        runs += 1;
        negative_il += dcm_i.samples.iter().filter(|&&i| i < 0.0).count();
        if ccm_i.samples.iter().all(|&i| i >= 0.0) {
            identical += 1;
            let same = ccm_v.samples.iter().zip(&dcm_v.samples).all(|(a, b)| a.to_bits() == b.to_bits())
                && ccm_i.samples.iter().zip(&dcm_i.samples).all(|(a, b)| a.to_bits() == b.to_bits());
            mismatched += usize::from(!same);
        } else {
            clipped += 1;
        }
    }
    c.require(negative_il == 0, format!("{runs} runs, {negative_il} negative iL samples in DCM"));
    c.require(
        mismatched == 0 && identical > 0,
        format!("{identical} CCM-safe runs bit-identical ({mismatched} mismatches)"),
    );
    c.require(clipped > 0, format!("{clipped} runs exercised clipping"));
    c
}

fn criterion_8() -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = CircuitParams::normalized(10e-6, 1e-6, 10.0).unwrap();
    let d = derive_dynamics(&p).unwrap();

    let zf = (0..10_000)
        .map(|_| {
            let f = 10f64.powf(rng.random_range(0.0..9.0));
            (zf_response(&p, f, 0.0) * frequency_response(&p, f) - 1.0).norm()
        })
        .fold(0.0, f64::max);
    c.require(zf < 1e-12, format!("|F H - 1| max {zf:.1e} over 1e4 frequencies"));

    let cfg = ModulationConfig::vpwm(T, 0.75, 0.2);
    let pat = cfg.encode(&alternating_bits(16)).unwrap();
    let ic = InitialConditions::new(0.6, 3e4);
    let dt = T / 20.0;
    let r = sample_output(&d, &ic, &pat, 1.0, dt, 320).map(|x| 2.0 * x);
    let exact = subtract_transient(&r, &d, &EstimatedIC::with_errors(&ic, 0.0, 0.0), 2.0);
    let data = sample_data_component(&d, &pat, 1.0, dt, 320).map(|x| 2.0 * x);
    let base_err = max_relative_error(&exact.samples, &data.samples);
    let mut lin: f64 = 0.0;
    for _ in 0..100 {
        let (ev, edv) = (rng.random_range(-0.05..0.05), rng.random_range(-5e4..5e4));
        let lambda = rng.random_range(-3.0..3.0);
        let delta = |s: f64| {
            let w = subtract_transient(&r, &d, &EstimatedIC::with_errors(&ic, s * ev, s * edv), 2.0);
            w.samples.iter().zip(&exact.samples).map(|(a, b)| a - b).collect::<Vec<f64>>()
        };
        let (one, scaled) = (delta(1.0), delta(lambda));
        let target: Vec<f64> = one.iter().map(|x| lambda * x).collect();
        let scale = target.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
        let dev = scaled.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        lin = lin.max(dev);
    }
    c.require(base_err < 1e-12, format!("exact-ic subtraction error {base_err:.1e}"));
    c.require(lin < 1e-9, format!("residual linearity deviation {lin:.1e} over 100 draws"));

    let (j, k) = (10, 6);
    let truth_ic = InitialConditions::steady(0.75, 1.0);
    let mut wrong = 0;
    for code in 0u32..(1 << k) {
        let bits: Vec<u8> = (0..k).map(|i| ((code >> (k - 1 - i)) & 1) as u8).collect();
        let pat = cfg.encode(&bits).unwrap();
        let (v2, _) = simulate(&p, &pat, &truth_ic, j, Variant::Exact, ConductionMode::Ccm).unwrap();
        let r = observe(&v2, &ObservationModel::new(1.0, 0.0, 0).unwrap());
        wrong += usize::from(brute_force_detect(&r, &p, &cfg, &truth_ic, j, k).unwrap() != bits);
    }
    c.require(wrong == 0, format!("noiseless detection: {wrong} of 64 sequences wrong"));

    let mut errors = 0;
    for trial in 0..100u64 {
        let bits: Vec<u8> = (0..8).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let pat = cfg.encode(&bits).unwrap();
        let (v2, _) = simulate(&p, &pat, &truth_ic, j, Variant::Exact, ConductionMode::Ccm).unwrap();
        let sigma = sigma_for_snr(&v2, 30.0);
        let r = observe(&v2, &ObservationModel::new(1.0, sigma, trial).unwrap());
        let got = brute_force_detect(&r, &p, &cfg, &truth_ic, j, 8).unwrap();
        errors += got.iter().zip(&bits).filter(|(a, b)| a != b).count();
    }
    c.require(errors == 0, format!("30 dB SNR, K = 8, 100 trials: {errors} bit errors"));
    c
}

fn criterion_9() -> Check {
    let mut c = Check::new();
    let t0 = Instant::now();
    let cfg = ModulationConfig::vpwm(T, 0.75, 0.2);

    let mut reduction: f64 = 0.0;
    for (p, _) in table1_underdamped() {
        let d = derive_dynamics(&p).unwrap();
        let pat = cfg.encode(&alternating_bits(32)).unwrap();
        let ic = InitialConditions::new(0.5, 1e4);
        let base = sample_output(&d, &ic, &pat, 1.0, T / 20.0, 640);
        let full = FullInitialConditions::from_base(&ic);
        let models = [
            build_parasitic_model(&p, &ParasiticParams::default()).unwrap(),
            build_general_load_model(&p, &GeneralLoad::resistive(p.load_resistance)).unwrap(),
        ];
        for m in &models {
            let v = simulate_generalized(m, &pat, &full, 1.0, 20).unwrap();
            reduction = reduction.max(max_relative_error(&v.samples, &base.samples));
        }
    }
    c.require(reduction < 1e-9, format!("degenerate reductions max rel err {reduction:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut residual, mut coef_residual, mut pf, mut worst): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut check_model = |r: &RationalLaplace, rng: &mut ChaCha8Rng| {
        for z in find_poles(r).unwrap() {
            residual = residual.max(root_residual(&r.den, z));
            coef_residual = coef_residual.max(r.den.eval(z).norm() / r.den.norm());
        }
        let pr = partial_fractions(&r.num, &r.den).unwrap();
        for _ in 0..10 {
            let s = Complex64::new(rng.random_range(-1e6..1e6), rng.random_range(-1e7..1e7));
            let direct = r.transfer(s);
            pf = pf.max((pr.eval(s) - direct).norm() / direct.norm());
        }
    };
    for trial in 0..100u64 {
        let l = 10f64.powf(rng.random_range(-5.0..-4.0));
        let p = CircuitParams::normalized(l, 1e-11 / l, rng.random_range(2.0..20.0)).unwrap();
        let (r, ss) = if trial < 50 {
            let rs = rng.random_range(0.0..0.1);
            let q = ParasiticParams {
                esr_c: rng.random_range(1e-3..0.2),
                esl_c: 10f64.powf(rng.random_range(-9.0..-7.0)),
                r_ds_on_1: rs,
                r_ds_on_2: rs,
            };
            (build_parasitic_model(&p, &q).unwrap(), parasitic_model(&p, &q))
        } else {
            let g = GeneralLoad {
                load_resistance: rng.random_range(2.0..20.0),
                series_inductance: 10f64.powf(rng.random_range(-7.0..-5.0)),
                series_capacitance: LoadCapacitance::Finite(10f64.powf(rng.random_range(-6.0..-4.0))),
            };
            (build_general_load_model(&p, &g).unwrap(), general_load_model(&p, &g))
        };
        check_model(&r, &mut rng);
        let x0: Vec<f64> = (0..ss.order()).map(|_| rng.random_range(-0.5..1.0)).collect();
        let bits: Vec<u8> = (0..16).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let pat = cfg.encode(&bits).unwrap();
        let v = simulate_generalized(&r, &pat, &ss.derivative_ics(&x0), 1.0, 20).unwrap();
        let oracle = ss.simulate(&x0, &pat, 1.0, v.dt, v.len(), T / 1000.0);
        worst = worst.max(max_relative_error(&v.samples, &oracle));
    }
    let secs = t0.elapsed().as_secs_f64();
    c.require(
        residual < 1e-8,
        format!("pole residual |den(p)| / sum|c_k||p|^k max {residual:.1e} (|den(p)|/||den||_2 max {coef_residual:.1e})"),
    );
    c.require(pf < 1e-8, format!("partial-fraction round trip {pf:.1e}"));
    c.require(worst < 1e-3, format!("50 + 50 random draws vs RK4 max rel err {worst:.1e}"));
    c.require(secs < 60.0, format!("{secs:.1} s < 60 s"));
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("analytic vs RK4 oracle", criterion_1),
        ("ripple bound", criterion_2),
        ("spectrum decay", criterion_3),
        ("MSE scaling", criterion_4),
        ("bias behavior", criterion_5),
        ("discrete-parameter approximation", criterion_6),
        ("DCM properties", criterion_7),
        ("equalization identities", criterion_8),
        ("generalized solver", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let check = f();
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!check.pass);
        println!(
            "criterion {} {verdict} {name} ({:.1} s): {}",
            i + 1,
            t0.elapsed().as_secs_f64(),
            check.notes.join("; ")
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
