use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tpc_core::accuracy::{sweep, AccuracyOptions, SettleMode};
use tpc_core::analytic::sample_output;
use tpc_core::circuit::{self, derive_dynamics, InitialConditions};
use tpc_core::discrete::{self, ConductionMode, Variant};
use tpc_core::error::ModelError;
use tpc_core::laplace::{self, Poly, RationalLaplace};
use tpc_core::modulation;
use tpc_core::scenario::{self, Scenario};
use tpc_core::spectrum;

fn model_err(e: ModelError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> PyResult<T> {
    s.parse()
        .map_err(|_| PyValueError::new_err(format!("unknown {what} `{s}`")))
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct CircuitParams {
    inner: circuit::CircuitParams,
}

#[pymethods]
impl CircuitParams {
    #[new]
    #[pyo3(signature = (inductance, capacitance, load_resistance, input_voltage = 1.0))]
    fn new(inductance: f64, capacitance: f64, load_resistance: f64, input_voltage: f64) -> PyResult<Self> {
        circuit::CircuitParams::new(inductance, capacitance, load_resistance, input_voltage)
            .map(|inner| Self { inner })
            .map_err(model_err)
    }

    #[getter]
    fn inductance(&self) -> f64 {
        self.inner.inductance
    }

    #[getter]
    fn capacitance(&self) -> f64 {
        self.inner.capacitance
    }

    #[getter]
    fn load_resistance(&self) -> f64 {
        self.inner.load_resistance
    }

    #[getter]
    fn input_voltage(&self) -> f64 {
        self.inner.input_voltage
    }

    /// `(a, b)`: the poles are `-a +/- i b`.
    fn dynamics(&self) -> PyResult<(f64, f64)> {
        let d = derive_dynamics(&self.inner).map_err(model_err)?;
        Ok((d.a, d.b))
    }

    fn cutoff_frequency(&self) -> f64 {
        circuit::cutoff_frequency(&self.inner)
    }

    fn frequency_response(&self, f: f64) -> Complex64 {
        circuit::frequency_response(&self.inner, f)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "CircuitParams(inductance={}, capacitance={}, load_resistance={}, input_voltage={})",
            p.inductance, p.capacitance, p.load_resistance, p.input_voltage
        )
    }
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct ModulationConfig {
    inner: modulation::ModulationConfig,
}

#[pymethods]
impl ModulationConfig {
    #[staticmethod]
    fn vpwm(period: f64, delta: f64, depth: f64) -> PyResult<Self> {
        Self::checked(modulation::ModulationConfig::vpwm(period, delta, depth))
    }

    #[staticmethod]
    fn vppm(period: f64, delta: f64, depth: f64) -> PyResult<Self> {
        Self::checked(modulation::ModulationConfig::vppm(period, delta, depth))
    }

    #[staticmethod]
    fn unmodulated(period: f64, delta: f64) -> PyResult<Self> {
        Self::checked(modulation::ModulationConfig::unmodulated(period, delta))
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    /// Pulse `(start, end)` times in seconds, one per bit.
    fn encode(&self, bits: Vec<u8>) -> PyResult<Vec<(f64, f64)>> {
        let pat = self.inner.encode(&bits).map_err(model_err)?;
        Ok((0..pat.len()).map(|k| (pat.starts[k], pat.ends[k])).collect())
    }
}

impl ModulationConfig {
    fn checked(inner: modulation::ModulationConfig) -> PyResult<Self> {
        inner.validate().map_err(model_err)?;
        Ok(Self { inner })
    }
}

/// Closed-form `v2` at `n T / J`, `n in 0..K J`. Returns `(t, v2)`.
#[pyfunction]
#[pyo3(signature = (circuit, modulation, bits, oversampling, v2_0 = None, dv2_0 = 0.0))]
fn analytic_output(
    circuit: &CircuitParams,
    modulation: &ModulationConfig,
    bits: Vec<u8>,
    oversampling: usize,
    v2_0: Option<f64>,
    dv2_0: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = &circuit.inner;
    let cfg = &modulation.inner;
    let d = derive_dynamics(p).map_err(model_err)?;
    let pat = cfg.encode(&bits).map_err(model_err)?;
    let ic = InitialConditions::new(v2_0.unwrap_or(cfg.delta * p.input_voltage), dv2_0);
    let dt = cfg.period / oversampling.max(1) as f64;
    let w = sample_output(&d, &ic, &pat, p.input_voltage, dt, bits.len() * oversampling);
    Ok((w.times().collect(), w.samples))
}

/// Discrete-time trajectories. Returns `(v2, iL)`.
#[pyfunction]
#[pyo3(signature = (circuit, modulation, bits, oversampling, variant = "exact", mode = "ccm", v2_0 = None, dv2_0 = 0.0))]
#[allow(clippy::too_many_arguments)]
fn simulate_discrete(
    circuit: &CircuitParams,
    modulation: &ModulationConfig,
    bits: Vec<u8>,
    oversampling: usize,
    variant: &str,
    mode: &str,
    v2_0: Option<f64>,
    dv2_0: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = &circuit.inner;
    let cfg = &modulation.inner;
    let variant: Variant = parse(variant, "variant")?;
    let mode = match mode {
        "ccm" => ConductionMode::Ccm,
        "dcm" => ConductionMode::Dcm,
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    let pat = cfg.encode(&bits).map_err(model_err)?;
    let ic = InitialConditions::new(v2_0.unwrap_or(cfg.delta * p.input_voltage), dv2_0);
    let (v2, il) = discrete::simulate(p, &pat, &ic, oversampling, variant, mode).map_err(model_err)?;
    Ok((v2.samples, il.samples))
}

/// Bias and MSE per `(J, variant)` as `(J, variant, bias, mse)` tuples.
#[pyfunction]
#[pyo3(signature = (circuit, modulation, bits, j_list, variants = vec!["exact".to_string(), "simplified".to_string(), "predictive".to_string()], guard_symbols = None))]
fn accuracy_sweep(
    circuit: &CircuitParams,
    modulation: &ModulationConfig,
    bits: Vec<u8>,
    j_list: Vec<usize>,
    variants: Vec<String>,
    guard_symbols: Option<usize>,
) -> PyResult<Vec<(usize, String, f64, f64)>> {
    let variants = variants
        .iter()
        .map(|v| parse::<Variant>(v, "variant"))
        .collect::<PyResult<Vec<_>>>()?;
    let opts = AccuracyOptions {
        settle: guard_symbols.map_or(SettleMode::PreRoll, |symbols| SettleMode::Guard { symbols }),
        align_predictive: true,
    };
    let reports = sweep(&circuit.inner, &modulation.inner, &bits, &j_list, &variants, &opts).map_err(model_err)?;
    Ok(reports
        .into_iter()
        .map(|r| (r.oversampling, r.variant.name().to_string(), r.bias, r.mse))
        .collect())
}

/// Closed-form ripple spectrum on the given positive frequencies.
#[pyfunction]
fn ripple_spectrum(
    circuit: &CircuitParams,
    modulation: &ModulationConfig,
    bits: Vec<u8>,
    frequencies: Vec<f64>,
) -> PyResult<Vec<Complex64>> {
    let p = &circuit.inner;
    let d = derive_dynamics(p).map_err(model_err)?;
    let pat = modulation.inner.encode(&bits).map_err(model_err)?;
    let grid = spectrum::ripple_spectrum(p, &d, &pat, &frequencies).map_err(model_err)?;
    Ok(grid.values)
}

/// Poles of `den(D) v2 = num(D) v1`; coefficients in ascending powers.
#[pyfunction]
fn find_poles(num: Vec<f64>, den: Vec<f64>) -> PyResult<Vec<Complex64>> {
    let r = RationalLaplace::from_ode(Poly::new(num), Poly::new(den)).map_err(model_err)?;
    laplace::find_poles(&r).map_err(model_err)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    scenario::preset_names().to_vec()
}

/// Scenario JSON of a built-in preset.
#[pyfunction]
fn preset(name: &str) -> PyResult<String> {
    scenario::preset(name)
        .map(|s| s.to_json())
        .ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))
}

/// Runs a scenario given as JSON. Returns `(report_json, {file_name: csv_text})`.
#[pyfunction]
fn run_scenario(config: &str) -> PyResult<(String, Vec<(String, String)>)> {
    let s = Scenario::from_json(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = scenario::run(&s).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let files = out.tables.iter().map(|t| (t.file_name(), t.to_csv())).collect();
    Ok((out.report.to_string(), files))
}

#[pymodule]
fn tpc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CircuitParams>()?;
    m.add_class::<ModulationConfig>()?;
    m.add_function(wrap_pyfunction!(analytic_output, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(ripple_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(find_poles, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
