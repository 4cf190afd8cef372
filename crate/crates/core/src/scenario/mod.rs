//! Scenario files: a versioned JSON description of circuit, modulation,
//! data, initial conditions and the computation to run.

mod presets;
mod run;
mod table;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accuracy::AccuracyOptions;
use crate::circuit::{CircuitParams, InitialConditions};
use crate::discrete::{ConductionMode, Variant};
use crate::error::ModelError;
use crate::laplace::{FullInitialConditions, GeneralLoad, ParasiticParams};
use crate::modulation::{alternating_bits, ModulationConfig};

pub use presets::{preset, preset_names, table1_underdamped};
pub use run::{run, RunError, RunOutput};
pub use table::{format_float, Cell, Table};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    pub circuit: CircuitParams,
    pub modulation: ModulationConfig,
    pub bits: BitSpec,
    #[serde(default)]
    pub ic: IcSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitPattern {
    Alternating,
    Random,
    Ones,
    Zeros,
}

/// Either a literal `"10110"` string or a generated pattern of `K` bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BitSpec {
    Literal(String),
    Generated {
        pattern: BitPattern,
        #[serde(rename = "K")]
        k: usize,
    },
}

impl BitSpec {
    pub fn alternating(k: usize) -> Self {
        BitSpec::Generated {
            pattern: BitPattern::Alternating,
            k,
        }
    }

    /// Random patterns draw from a ChaCha8 stream seeded with `seed`.
    pub fn resolve(&self, seed: u64) -> Result<Vec<u8>, ConfigError> {
        match self {
            BitSpec::Literal(s) => s
                .chars()
                .filter(|c| !c.is_whitespace() && *c != '_')
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(ConfigError::new("bits", format!("unexpected character `{other}`"))),
                })
                .collect(),
            BitSpec::Generated { pattern, k } => Ok(match pattern {
                BitPattern::Alternating => alternating_bits(*k),
                BitPattern::Ones => vec![1; *k],
                BitPattern::Zeros => vec![0; *k],
                BitPattern::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..*k).map(|_| u8::from(rng.random::<bool>())).collect()
                }
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcPreset {
    /// `v2(0) = delta V1`, `dv2/dt(0) = 0`.
    Steady,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IcSpec {
    Preset(IcPreset),
    Explicit(InitialConditions),
}

impl Default for IcSpec {
    fn default() -> Self {
        IcSpec::Preset(IcPreset::Steady)
    }
}

impl IcSpec {
    pub fn resolve(&self, delta: f64, input_voltage: f64) -> InitialConditions {
        match self {
            IcSpec::Preset(IcPreset::Steady) => InitialConditions::steady(delta, input_voltage),
            IcSpec::Preset(IcPreset::Zero) => InitialConditions::default(),
            IcSpec::Explicit(ic) => *ic,
        }
    }
}

/// Harmonic cross-check between the closed-form and FFT spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FftCheck {
    pub guard_symbols: usize,
    pub window_symbols: usize,
    #[serde(rename = "J")]
    pub oversampling: usize,
    pub f_max: f64,
    #[serde(default = "default_floor_db")]
    pub floor_db: f64,
}

fn default_floor_db() -> f64 {
    80.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralizedModel {
    Parasitic(ParasiticParams),
    GeneralLoad(GeneralLoad),
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunSpec {
    /// Closed-form output on `K J` samples (or `duration_symbols J`).
    Analytic {
        #[serde(rename = "J")]
        oversampling: usize,
        #[serde(default)]
        components: bool,
        #[serde(default)]
        duration_symbols: Option<usize>,
    },
    /// `g_tx` for unmodulated pulses `Tp = duty T` on each listed circuit
    /// (default: the scenario circuit).
    PulseShape {
        duties: Vec<f64>,
        span_symbols: usize,
        #[serde(rename = "J")]
        oversampling: usize,
        #[serde(default)]
        circuits: Vec<CircuitParams>,
    },
    Discrete {
        #[serde(rename = "J")]
        oversampling: usize,
        variant: Variant,
        #[serde(default)]
        mode: ConductionMode,
    },
    Spectrum {
        f_min: f64,
        f_max: f64,
        points: usize,
        #[serde(default)]
        fft_check: Option<FftCheck>,
    },
    Accuracy {
        #[serde(rename = "J_list")]
        j_list: Vec<usize>,
        variants: Vec<Variant>,
        #[serde(default)]
        options: AccuracyOptions,
    },
    /// Exact vs simplified iteration coefficients over a log-spaced sweep
    /// of C with `L = lc / C` and the scenario load resistance.
    Params {
        #[serde(rename = "J")]
        oversampling: usize,
        lc: f64,
        c_min: f64,
        c_max: f64,
        points: usize,
    },
    Equalize {
        #[serde(rename = "J")]
        oversampling: usize,
        /// Noise level as SNR over the received-signal variance; overrides `sigma`.
        #[serde(default)]
        snr_db: Option<f64>,
        #[serde(default)]
        sigma: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default)]
        eps: f64,
        #[serde(default)]
        eps_v: f64,
        #[serde(default)]
        eps_dv: f64,
        #[serde(default)]
        detect: bool,
    },
    Generalized {
        model: GeneralizedModel,
        #[serde(rename = "J")]
        oversampling: usize,
        /// Overrides the scenario ic when present.
        #[serde(default)]
        ic: Option<FullInitialConditions>,
    },
}

impl RunSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            RunSpec::Analytic { .. } => "analytic",
            RunSpec::PulseShape { .. } => "pulse_shape",
            RunSpec::Discrete { .. } => "discrete",
            RunSpec::Spectrum { .. } => "spectrum",
            RunSpec::Accuracy { .. } => "accuracy",
            RunSpec::Params { .. } => "params",
            RunSpec::Equalize { .. } => "equalize",
            RunSpec::Generalized { .. } => "generalized",
        }
    }
}

/// Invalid configuration, naming the offending field by its dotted path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    fn from_model(prefix: &str, e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter { name, reason } => Self::new(format!("{prefix}.{name}"), reason),
            ModelError::DepthOutOfRange { .. } => Self::new(format!("{prefix}.depth"), e.to_string()),
            other => Self::new(prefix, other.to_string()),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
    }
}

fn at_least_one(field: &str, v: usize) -> Result<(), ConfigError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be at least 1"))
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ConfigError::new("<root>", e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn bits(&self) -> Result<Vec<u8>, ConfigError> {
        self.bits.resolve(self.seed)
    }

    pub fn initial_conditions(&self) -> InitialConditions {
        self.ic.resolve(self.modulation.delta, self.circuit.input_voltage)
    }

    /// Structural and range checks; physics failures (overdamped circuit,
    /// unstable step) surface later as model errors.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.id.trim().is_empty() {
            return Err(ConfigError::new("id", "must not be empty"));
        }
        self.circuit
            .validate()
            .map_err(|e| ConfigError::from_model("circuit", e))?;
        self.modulation
            .validate()
            .map_err(|e| ConfigError::from_model("modulation", e))?;
        let bits = self.bits()?;
        self.modulation
            .encode(&bits)
            .map_err(|e| ConfigError::from_model("modulation", e))?;
        if let IcSpec::Explicit(ic) = &self.ic {
            if !(ic.v2_0.is_finite() && ic.dv2_0.is_finite()) {
                return Err(ConfigError::new("ic", "initial conditions must be finite"));
            }
        }
        self.validate_run(bits.len())
    }

    fn validate_run(&self, k: usize) -> Result<(), ConfigError> {
        match &self.run {
            RunSpec::Analytic {
                oversampling,
                duration_symbols,
                ..
            } => {
                at_least_one("run.J", *oversampling)?;
                if duration_symbols.is_none() && k == 0 {
                    return Err(ConfigError::new("bits", "need at least one symbol"));
                }
            }
            RunSpec::PulseShape {
                duties,
                span_symbols,
                oversampling,
                circuits,
            } => {
                at_least_one("run.J", *oversampling)?;
                at_least_one("run.span_symbols", *span_symbols)?;
                if duties.is_empty() {
                    return Err(ConfigError::new("run.duties", "must not be empty"));
                }
                for (i, d) in duties.iter().enumerate() {
                    if !(*d > 0.0 && *d <= 1.0) {
                        return Err(ConfigError::new(format!("run.duties[{i}]"), format!("must lie in (0, 1], got {d}")));
                    }
                }
                for (i, c) in circuits.iter().enumerate() {
                    c.validate()
                        .map_err(|e| ConfigError::from_model(&format!("run.circuits[{i}]"), e))?;
                }
            }
            RunSpec::Discrete { oversampling, .. } => {
                at_least_one("run.J", *oversampling)?;
                if k == 0 {
                    return Err(ConfigError::new("bits", "need at least one symbol"));
                }
            }
            RunSpec::Spectrum {
                f_min,
                f_max,
                points,
                fft_check,
            } => {
                positive("run.f_min", *f_min)?;
                positive("run.f_max", *f_max)?;
                if f_max <= f_min {
                    return Err(ConfigError::new("run.f_max", "must exceed f_min"));
                }
                if *points < 2 {
                    return Err(ConfigError::new("run.points", "need at least 2 points"));
                }
                if let Some(fc) = fft_check {
                    if fc.window_symbols == 0 || fc.window_symbols % 2 != 0 {
                        return Err(ConfigError::new("run.fft_check.window_symbols", "must be even and positive"));
                    }
                    if fc.guard_symbols % 2 != 0 {
                        return Err(ConfigError::new("run.fft_check.guard_symbols", "must be even"));
                    }
                    at_least_one("run.fft_check.J", fc.oversampling)?;
                    positive("run.fft_check.f_max", fc.f_max)?;
                }
            }
            RunSpec::Accuracy { j_list, variants, .. } => {
                if j_list.is_empty() {
                    return Err(ConfigError::new("run.J_list", "must not be empty"));
                }
                for (i, j) in j_list.iter().enumerate() {
                    at_least_one(&format!("run.J_list[{i}]"), *j)?;
                }
                if variants.is_empty() {
                    return Err(ConfigError::new("run.variants", "must not be empty"));
                }
            }
            RunSpec::Params {
                oversampling,
                lc,
                c_min,
                c_max,
                points,
            } => {
                at_least_one("run.J", *oversampling)?;
                positive("run.lc", *lc)?;
                positive("run.c_min", *c_min)?;
                positive("run.c_max", *c_max)?;
                if c_max <= c_min {
                    return Err(ConfigError::new("run.c_max", "must exceed c_min"));
                }
                if *points < 2 {
                    return Err(ConfigError::new("run.points", "need at least 2 points"));
                }
            }
            RunSpec::Equalize {
                oversampling,
                snr_db,
                sigma,
                c,
                eps,
                detect,
                ..
            } => {
                at_least_one("run.J", *oversampling)?;
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(ConfigError::new("run.sigma", "must be finite and >= 0"));
                }
                if let Some(s) = snr_db {
                    if !s.is_finite() {
                        return Err(ConfigError::new("run.snr_db", "must be finite"));
                    }
                }
                if !(c.is_finite() && *c != 0.0) {
                    return Err(ConfigError::new("run.c", "must be finite and nonzero"));
                }
                if !(*eps >= 0.0 && eps.is_finite()) {
                    return Err(ConfigError::new("run.eps", "must be finite and >= 0"));
                }
                if *detect && k > crate::equalization::MAX_DETECT_BITS {
                    return Err(ConfigError::new(
                        "bits",
                        format!("detection supports at most {} bits, got {k}", crate::equalization::MAX_DETECT_BITS),
                    ));
                }
                if k == 0 {
                    return Err(ConfigError::new("bits", "need at least one symbol"));
                }
            }
            RunSpec::Generalized { model, oversampling, .. } => {
                at_least_one("run.J", *oversampling)?;
                match model {
                    GeneralizedModel::Parasitic(q) => q
                        .validate()
                        .map_err(|e| ConfigError::from_model("run.model.parasitic", e))?,
                    GeneralizedModel::GeneralLoad(g) => g
                        .validate()
                        .map_err(|e| ConfigError::from_model("run.model.general_load", e))?,
                }
                if k == 0 {
                    return Err(ConfigError::new("bits", "need at least one symbol"));
                }
            }
        }
        Ok(())
    }
}
