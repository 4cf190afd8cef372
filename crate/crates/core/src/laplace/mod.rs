//! Higher-order filter models: capacitor parasitics and a general series
//! R-L-C load. Each model is an ODE `den(D) v2 = num(D) v1` solved through
//! the Laplace domain with distinct-pole partial fractions.

pub mod poly;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitParams;
use crate::error::{require_non_negative, require_positive, ModelError, Result};
use crate::modulation::SwitchingPattern;
use crate::waveform::Waveform;

pub use poly::{check_distinct, roots, Poly};

/// Series parasitics of the output capacitor and switch on-resistances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParasiticParams {
    pub esr_c: f64,
    pub esl_c: f64,
    #[serde(default)]
    pub r_ds_on_1: f64,
    #[serde(default)]
    pub r_ds_on_2: f64,
}

impl ParasiticParams {
    pub fn validate(&self) -> Result<()> {
        require_non_negative("esr_c", self.esr_c)?;
        require_non_negative("esl_c", self.esl_c)?;
        require_non_negative("r_ds_on_1", self.r_ds_on_1)?;
        require_non_negative("r_ds_on_2", self.r_ds_on_2)?;
        if self.r_ds_on_1 != self.r_ds_on_2 {
            return Err(ModelError::DegenerateTopology(format!(
                "switch resistances differ ({} vs {} ohm); the filter is then not time-invariant",
                self.r_ds_on_1, self.r_ds_on_2
            )));
        }
        Ok(())
    }
}

/// Capacitor in series with the load; `Infinite` shorts it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadCapacitance {
    Infinite,
    Finite(f64),
}

/// Series `R_L`, `L_L`, `C_L` load across the output capacitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralLoad {
    pub load_resistance: f64,
    pub series_inductance: f64,
    pub series_capacitance: LoadCapacitance,
}

impl GeneralLoad {
    pub fn validate(&self) -> Result<()> {
        require_positive("load_resistance", self.load_resistance)?;
        require_non_negative("series_inductance", self.series_inductance)?;
        if let LoadCapacitance::Finite(c) = self.series_capacitance {
            require_positive("series_capacitance", c)?;
        }
        Ok(())
    }

    /// Ohmic load only.
    pub fn resistive(load_resistance: f64) -> Self {
        Self {
            load_resistance,
            series_inductance: 0.0,
            series_capacitance: LoadCapacitance::Infinite,
        }
    }
}

/// Which initial value an [`IcTerm`] polynomial multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcSymbol {
    V1,
    Dv1,
    V2,
    Dv2,
    D2v2,
    D3v2,
}

impl IcSymbol {
    fn input(j: usize) -> Self {
        [IcSymbol::V1, IcSymbol::Dv1][j]
    }

    fn output(j: usize) -> Self {
        [IcSymbol::V2, IcSymbol::Dv2, IcSymbol::D2v2, IcSymbol::D3v2][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcTerm {
    pub symbol: IcSymbol,
    pub poly: Poly,
}

/// `V2(s) = num/den V1(s) + sum_i value_i * poly_i / den`, with the
/// denominator normalized to `den(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalLaplace {
    pub num: Poly,
    pub den: Poly,
    pub ic_terms: Vec<IcTerm>,
}

/// Initial values at `t = 0-`. Input values default to 0 because the
/// switched input is right-sided.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullInitialConditions {
    #[serde(default)]
    pub v1: f64,
    #[serde(default)]
    pub dv1: f64,
    #[serde(default)]
    pub v2: f64,
    #[serde(default)]
    pub dv2: f64,
    #[serde(default)]
    pub d2v2: f64,
    #[serde(default)]
    pub d3v2: f64,
}

impl FullInitialConditions {
    pub fn value(&self, sym: IcSymbol) -> f64 {
        match sym {
            IcSymbol::V1 => self.v1,
            IcSymbol::Dv1 => self.dv1,
            IcSymbol::V2 => self.v2,
            IcSymbol::Dv2 => self.dv2,
            IcSymbol::D2v2 => self.d2v2,
            IcSymbol::D3v2 => self.d3v2,
        }
    }

    pub fn from_base(ic: &crate::circuit::InitialConditions) -> Self {
        Self {
            v2: ic.v2_0,
            dv2: ic.dv2_0,
            ..Self::default()
        }
    }
}

impl RationalLaplace {
    /// Model of `den(D) v2 = num(D) v1`.
    pub fn from_ode(num: Poly, den: Poly) -> Result<Self> {
        let d0 = den.coeffs()[0];
        if den.degree() < 1 || d0 == 0.0 || num.degree() >= den.degree() {
            return Err(ModelError::DegenerateTopology(format!(
                "need a strictly proper transfer function with den(0) != 0, got degrees {}/{}",
                num.degree(),
                den.degree()
            )));
        }
        if den.degree() > 4 || num.degree() > 2 {
            return Err(ModelError::InvalidParameter {
                name: "den",
                reason: format!(
                    "supported orders are den <= 4 and num <= 2, got {}/{}",
                    den.degree(),
                    num.degree()
                ),
            });
        }
        let (num, den) = (num.scale(1.0 / d0), den.scale(1.0 / d0));
        let mut ic_terms = Vec::new();
        for j in 0..den.degree() {
            ic_terms.push(IcTerm {
                symbol: IcSymbol::output(j),
                poly: den.ic_polynomial(j),
            });
        }
        for j in 0..num.degree() {
            ic_terms.push(IcTerm {
                symbol: IcSymbol::input(j),
                poly: num.ic_polynomial(j).scale(-1.0),
            });
        }
        Ok(Self { num, den, ic_terms })
    }

    pub fn order(&self) -> usize {
        self.den.degree()
    }

    pub fn transfer(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }

    pub fn dc_gain(&self) -> f64 {
        self.num.coeffs()[0] / self.den.coeffs()[0]
    }

    /// Numerator of the initial-condition response `sum value_i poly_i`.
    pub fn ic_numerator(&self, ic: &FullInitialConditions) -> Poly {
        self.ic_terms
            .iter()
            .fold(Poly::constant(0.0), |acc, t| acc.add(&t.poly.scale(ic.value(t.symbol))))
    }
}

/// Filter with ESR/ESL in series with C and a switch resistance in series
/// with L, driving a resistive load.
pub fn build_parasitic_model(p: &CircuitParams, q: &ParasiticParams) -> Result<RationalLaplace> {
    p.validate()?;
    q.validate()?;
    let (l, c, rl) = (p.inductance, p.capacitance, p.load_resistance);
    // Capacitor branch impedance Nc / (s C).
    let nc = Poly::new(vec![1.0, q.esr_c * c, q.esl_c * c]);
    let series = Poly::new(vec![q.r_ds_on_1, l]);
    let shunt = Poly::new(vec![0.0, rl * c]).add(&nc);
    let num = nc.scale(rl);
    let den = num.add(&series.mul(&shunt));
    RationalLaplace::from_ode(num, den)
}

/// Filter driving a series R-L-C load (no parasitics).
pub fn build_general_load_model(p: &CircuitParams, gl: &GeneralLoad) -> Result<RationalLaplace> {
    p.validate()?;
    gl.validate()?;
    let (l, c) = (p.inductance, p.capacitance);
    // Load impedance Nl / Dl.
    let (nl, dl) = match gl.series_capacitance {
        LoadCapacitance::Infinite => (
            Poly::new(vec![gl.load_resistance, gl.series_inductance]),
            Poly::constant(1.0),
        ),
        LoadCapacitance::Finite(cl) => (
            Poly::new(vec![1.0, gl.load_resistance * cl, gl.series_inductance * cl]),
            Poly::new(vec![0.0, cl]),
        ),
    };
    let sl = Poly::new(vec![0.0, l]);
    let sc = Poly::new(vec![0.0, c]);
    let den = nl.add(&sl.mul(&dl.add(&sc.mul(&nl))));
    RationalLaplace::from_ode(nl, den)
}

/// Bound on [`root_residual`] enforced by [`find_poles`].
pub const POLE_RESIDUAL: f64 = 1e-8;

/// `|den(z)| / sum_k |c_k| |z|^k`: the residual relative to the size of the
/// terms being summed, which stays meaningful when poles span many decades.
pub fn root_residual(den: &Poly, z: Complex64) -> f64 {
    let scale: f64 = den
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs() * z.norm().powi(k as i32))
        .sum();
    den.eval(z).norm() / scale
}

/// Distinct poles of the model, residual-checked.
pub fn find_poles(r: &RationalLaplace) -> Result<Vec<Complex64>> {
    if r.den.degree() > 4 {
        return Err(ModelError::InvalidParameter {
            name: "den",
            reason: format!("degree {} exceeds 4", r.den.degree()),
        });
    }
    let poles = roots(&r.den)?;
    for z in &poles {
        let res = root_residual(&r.den, *z);
        if !(res < POLE_RESIDUAL) {
            return Err(ModelError::InvalidParameter {
                name: "den",
                reason: format!("root {z} has relative residual {res:e} above {POLE_RESIDUAL:e}"),
            });
        }
    }
    check_distinct(&poles)?;
    Ok(poles)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleResidue {
    pub poles: Vec<Complex64>,
    pub residues: Vec<Complex64>,
}

impl PoleResidue {
    /// `sum residue_i / (s - pole_i)`
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, r)| r / (s - p))
            .sum()
    }
}

/// Expansion of the strictly proper `num / den` over the given distinct poles.
pub fn residues_at(num: &Poly, den: &Poly, poles: &[Complex64]) -> Result<PoleResidue> {
    if num.degree() >= den.degree() && !num.is_zero() {
        return Err(ModelError::InvalidParameter {
            name: "num",
            reason: "expansion needs a strictly proper rational function".into(),
        });
    }
    if poles.len() != den.degree() {
        return Err(ModelError::InvalidParameter {
            name: "poles",
            reason: format!("{} poles for a degree-{} denominator", poles.len(), den.degree()),
        });
    }
    check_distinct(poles)?;
    let lead = den.lead();
    let residues = poles
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let prod: Complex64 = poles
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &pj)| pi - pj)
                .product();
            num.eval(pi) / (lead * prod)
        })
        .collect();
    Ok(PoleResidue {
        poles: poles.to_vec(),
        residues,
    })
}

/// Partial fractions of `num / den`.
pub fn partial_fractions(num: &Poly, den: &Poly) -> Result<PoleResidue> {
    let poles = roots(den)?;
    residues_at(num, den, &poles)
}

/// `sum residue_i e^{pole_i t}` for `t >= 0`, 0 before.
pub fn inverse_laplace_distinct(pr: &PoleResidue, t: f64) -> Result<f64> {
    if let Some(p) = pr.poles.iter().find(|p| p.re >= 0.0) {
        return Err(ModelError::UnstablePole(format!("{p}")));
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    Ok(eval_modes(pr, t))
}

fn eval_modes(pr: &PoleResidue, t: f64) -> f64 {
    pr.poles
        .iter()
        .zip(&pr.residues)
        .map(|(p, r)| r * (p * t).exp())
        .sum::<Complex64>()
        .re
}

/// Response to a unit step at `t = 0`: `dc + sum residue_i e^{pole_i t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub dc: f64,
    pub modes: PoleResidue,
}

impl StepResponse {
    pub fn at(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            self.dc + eval_modes(&self.modes, t)
        }
    }
}

/// Pole-residue split of a model for given initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub transient: PoleResidue,
    pub step: StepResponse,
    /// Slowest decay rate `min |Re(pole)|`.
    pub min_decay: f64,
}

pub fn decompose(r: &RationalLaplace, ic: &FullInitialConditions) -> Result<Decomposition> {
    let poles = find_poles(r)?;
    if let Some(p) = poles.iter().find(|p| p.re >= 0.0) {
        return Err(ModelError::UnstablePole(format!("{p}")));
    }
    let transient = residues_at(&r.ic_numerator(ic), &r.den, &poles)?;
    let forced = residues_at(&r.num, &r.den, &poles)?;
    // num / (s den): the pole at 0 gives the DC gain, the others r_i / p_i.
    let modes = PoleResidue {
        poles: poles.clone(),
        residues: forced
            .residues
            .iter()
            .zip(&poles)
            .map(|(r, p)| r / p)
            .collect(),
    };
    let min_decay = poles.iter().map(|p| -p.re).fold(f64::INFINITY, f64::min);
    Ok(Decomposition {
        transient,
        step: StepResponse {
            dc: r.dc_gain(),
            modes,
        },
        min_decay,
    })
}

/// Edges older than this many slowest time constants count as settled.
const SETTLED_HORIZON: f64 = 60.0;

/// Output voltage on `n dt`, `n in 0..K J`, by superposing the transient
/// with `±V1` step responses at every switching edge.
pub fn simulate_generalized(
    r: &RationalLaplace,
    pat: &SwitchingPattern,
    ic: &FullInitialConditions,
    input_voltage: f64,
    oversampling: usize,
) -> Result<Waveform> {
    if oversampling == 0 {
        return Err(ModelError::InvalidParameter {
            name: "oversampling",
            reason: "must be at least 1".into(),
        });
    }
    let dec = decompose(r, ic)?;
    let dt = pat.period / oversampling as f64;
    let n = pat.len() * oversampling;
    let edges = pat.edges();
    let horizon = SETTLED_HORIZON / dec.min_decay;
    let mut settled = 0.0;
    let mut first_live = 0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        while first_live < edges.len() && t - edges[first_live].0 > horizon {
            settled += edges[first_live].1;
            first_live += 1;
        }
        let mut v = settled * dec.step.dc;
        for &(te, sign) in &edges[first_live..] {
            if te > t {
                break;
            }
            v += sign * dec.step.at(t - te);
        }
        samples.push(input_voltage * v + eval_modes(&dec.transient, t));
    }
    Ok(Waveform {
        dt,
        t0: 0.0,
        samples,
    })
}
