//! Named scenarios reproducing the standard figures and a few extras.

use super::{BitPattern, BitSpec, FftCheck, GeneralizedModel, IcPreset, IcSpec, RunSpec, Scenario, SCHEMA_VERSION};
use crate::accuracy::{AccuracyOptions, SettleMode};
use crate::circuit::CircuitParams;
use crate::discrete::Variant;
use crate::laplace::{GeneralLoad, LoadCapacitance, ParasiticParams};
use crate::modulation::ModulationConfig;

const T: f64 = 1e-6;

const NAMES: [&str; 10] = [
    "fig2_gtx",
    "fig3_components",
    "fig4_ltspice_check",
    "fig5_spectrum",
    "fig6_bias",
    "fig7_mse",
    "fig8_params",
    "equalize_demo",
    "parasitic_fig4",
    "general_load_demo",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

fn circuit(l: f64, c: f64, r: f64) -> CircuitParams {
    CircuitParams {
        inductance: l,
        capacitance: c,
        load_resistance: r,
        input_voltage: 1.0,
    }
}

/// L = 10 uH, C = 1 uF, R_L = 10 ohm.
fn small_l() -> CircuitParams {
    circuit(10e-6, 1e-6, 10.0)
}

/// L = 100 uH, C = 0.1 uF, R_L = 20 ohm.
fn large_l() -> CircuitParams {
    circuit(100e-6, 0.1e-6, 20.0)
}

/// Every underdamped (circuit, duty) pair from the standard parameter grid:
/// L in {10, 100} uH with C chosen so that L C = 1e-11, R_L in {2, 10, 20}
/// ohm and duty in {0.5, 0.75}.
pub fn table1_underdamped() -> Vec<(CircuitParams, f64)> {
    let mut out = Vec::new();
    for (l, c) in [(10e-6, 1e-6), (100e-6, 0.1e-6)] {
        for r in [2.0, 10.0, 20.0] {
            let p = circuit(l, c, r);
            if !p.underdamped_valid() {
                continue;
            }
            for delta in [0.5, 0.75] {
                out.push((p, delta));
            }
        }
    }
    out
}

fn scenario(id: &str, circuit: CircuitParams, modulation: ModulationConfig, bits: BitSpec, run: RunSpec) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        id: id.to_string(),
        circuit,
        modulation,
        bits,
        ic: IcSpec::Preset(IcPreset::Steady),
        run,
        seed: 0,
    }
}

fn fig6_j_list() -> Vec<usize> {
    (4..=64)
        .chain((72..=128).step_by(8))
        .chain([160, 192, 224, 256])
        .collect()
}

pub fn preset(name: &str) -> Option<Scenario> {
    let fig3_mod = ModulationConfig::vpwm(T, 0.75, 0.2);
    let fig4_mod = ModulationConfig::vpwm(T, 0.75, 0.025);
    let s = match name {
        "fig2_gtx" => {
            let circuits = table1_underdamped()
                .into_iter()
                .map(|(p, _)| p)
                .fold(Vec::new(), |mut v: Vec<CircuitParams>, p| {
                    if !v.contains(&p) {
                        v.push(p);
                    }
                    v
                });
            scenario(
                name,
                small_l(),
                ModulationConfig::unmodulated(T, 0.75),
                BitSpec::Literal("1".into()),
                RunSpec::PulseShape {
                    duties: vec![0.5, 0.75],
                    span_symbols: 20,
                    oversampling: 100,
                    circuits,
                },
            )
        }
        "fig3_components" => scenario(
            name,
            small_l(),
            fig3_mod,
            BitSpec::Literal("10101".into()),
            RunSpec::Analytic {
                oversampling: 100,
                components: true,
                duration_symbols: Some(40),
            },
        ),
        "fig4_ltspice_check" => scenario(
            name,
            large_l(),
            fig4_mod,
            BitSpec::alternating(64),
            RunSpec::Analytic {
                oversampling: 100,
                components: false,
                duration_symbols: None,
            },
        ),
        "fig5_spectrum" => scenario(
            name,
            large_l(),
            fig4_mod,
            BitSpec::alternating(64),
            RunSpec::Spectrum {
                f_min: 1e3,
                f_max: 1e8,
                points: 20_000,
                fft_check: Some(FftCheck {
                    guard_symbols: 40,
                    window_symbols: 64,
                    oversampling: 1000,
                    f_max: 5e6,
                    floor_db: 80.0,
                }),
            },
        ),
        "fig6_bias" => scenario(
            name,
            small_l(),
            fig3_mod,
            BitSpec::alternating(64),
            RunSpec::Accuracy {
                j_list: fig6_j_list(),
                variants: Variant::ALL.to_vec(),
                options: AccuracyOptions {
                    settle: SettleMode::PreRoll,
                    align_predictive: true,
                },
            },
        ),
        "fig7_mse" => scenario(
            name,
            small_l(),
            fig3_mod,
            BitSpec::alternating(64),
            RunSpec::Accuracy {
                j_list: vec![4, 8, 16, 32, 64, 128, 256],
                variants: Variant::ALL.to_vec(),
                options: AccuracyOptions {
                    settle: SettleMode::PreRoll,
                    align_predictive: true,
                },
            },
        ),
        "fig8_params" => scenario(
            name,
            circuit(10e-6, 1e-6, 20.0),
            ModulationConfig::unmodulated(T, 0.75),
            BitSpec::Literal("1".into()),
            RunSpec::Params {
                oversampling: 10,
                lc: 1e-11,
                c_min: 10f64.powf(-6.5),
                c_max: 1e-3,
                points: 71,
            },
        ),
        "equalize_demo" => {
            let mut s = scenario(
                name,
                small_l(),
                fig3_mod,
                BitSpec::Generated {
                    pattern: BitPattern::Random,
                    k: 8,
                },
                RunSpec::Equalize {
                    oversampling: 20,
                    snr_db: Some(30.0),
                    sigma: 0.0,
                    c: 1.0,
                    eps: 1e-3,
                    eps_v: 0.0,
                    eps_dv: 0.0,
                    detect: true,
                },
            );
            s.seed = 7;
            s
        }
        "parasitic_fig4" => scenario(
            name,
            large_l(),
            fig4_mod,
            BitSpec::alternating(64),
            RunSpec::Generalized {
                model: GeneralizedModel::Parasitic(ParasiticParams {
                    esr_c: 0.05,
                    esl_c: 1e-9,
                    r_ds_on_1: 0.01,
                    r_ds_on_2: 0.01,
                }),
                oversampling: 100,
                ic: None,
            },
        ),
        "general_load_demo" => scenario(
            name,
            small_l(),
            fig3_mod,
            BitSpec::alternating(32),
            RunSpec::Generalized {
                model: GeneralizedModel::GeneralLoad(GeneralLoad {
                    load_resistance: 10.0,
                    series_inductance: 1e-6,
                    series_capacitance: LoadCapacitance::Finite(10e-6),
                }),
                oversampling: 100,
                ic: None,
            },
        ),
        _ => return None,
    };
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underdamped_grid_has_eight_entries() {
        let grid = table1_underdamped();
        assert_eq!(grid.len(), 8);
        assert!(grid.iter().all(|(p, _)| (p.lc() - 1e-11).abs() < 1e-24));
    }

    #[test]
    fn names_resolve() {
        for n in preset_names() {
            assert_eq!(preset(n).unwrap().id, *n);
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn fig6_grid() {
        let j = fig6_j_list();
        assert_eq!(j.first(), Some(&4));
        assert_eq!(j.last(), Some(&256));
        assert!(j.windows(2).all(|w| w[0] < w[1]));
    }
}
