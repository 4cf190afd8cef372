//! Reference integrators shared by the integration and acceptance tests.
//! Written against the circuit equations directly; nothing here calls the
//! closed-form or Laplace code under test.

#![allow(dead_code)]

use tpc_core::circuit::CircuitParams;
use tpc_core::laplace::{FullInitialConditions, GeneralLoad, LoadCapacitance, ParasiticParams};
use tpc_core::modulation::SwitchingPattern;

/// `dx/dt = A x + b v1(t)`, `v2 = c . x`.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.b.len()
    }

    fn deriv(&self, x: &[f64], u: f64) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + bi * u)
            .collect()
    }

    fn output(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    fn norm_inf(&self) -> f64 {
        self.a
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `(v2, dv2, d2v2, d3v2)` at `0-` for state `x0` with zero input.
    pub fn derivative_ics(&self, x0: &[f64]) -> FullInitialConditions {
        let mut x = x0.to_vec();
        let mut d = [0.0; 4];
        for slot in d.iter_mut() {
            *slot = self.output(&x);
            x = self.deriv(&x, 0.0);
        }
        FullInitialConditions {
            v1: 0.0,
            dv1: 0.0,
            v2: d[0],
            dv2: d[1],
            d2v2: d[2],
            d3v2: d[3],
        }
    }

    fn rk4(&self, x: &mut [f64], u: f64, span: f64, h_max: f64) {
        if span <= 0.0 {
            return;
        }
        let n = (span / h_max).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let k1 = self.deriv(x, u);
            let x2: Vec<f64> = x.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
            let k2 = self.deriv(&x2, u);
            let x3: Vec<f64> = x.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
            let k3 = self.deriv(&x3, u);
            let x4: Vec<f64> = x.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
            let k4 = self.deriv(&x4, u);
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }

    /// Output at `n dt` for `n in 0..n_samples`. The input is piecewise
    /// constant between switching edges and integration restarts at every
    /// edge, so no RK4 step straddles a discontinuity. Steps are at most
    /// `min(h_max, 1 / |A|_inf)`.
    pub fn simulate(
        &self,
        x0: &[f64],
        pat: &SwitchingPattern,
        input_voltage: f64,
        dt: f64,
        n_samples: usize,
        h_max: f64,
    ) -> Vec<f64> {
        let h = h_max.min(1.0 / self.norm_inf());
        let edges = pat.edges();
        let mut next_edge = 0;
        let mut x = x0.to_vec();
        let mut t = 0.0;
        let mut u = 0.0;
        let mut out = Vec::with_capacity(n_samples);
        for k in 0..n_samples {
            let target = k as f64 * dt;
            while next_edge < edges.len() && edges[next_edge].0 <= target {
                let (te, sign) = edges[next_edge];
                self.rk4(&mut x, u, te - t, h);
                t = t.max(te);
                u += sign * input_voltage;
                next_edge += 1;
            }
            self.rk4(&mut x, u, target - t, h);
            t = t.max(target);
            out.push(self.output(&x));
        }
        out
    }
}

/// States `(iL, v2)` of the ideal filter with Ohmic load.
pub fn base_model(p: &CircuitParams) -> StateSpace {
    let (l, c, r) = (p.inductance, p.capacitance, p.load_resistance);
    StateSpace {
        a: vec![vec![0.0, -1.0 / l], vec![1.0 / c, -1.0 / (r * c)]],
        b: vec![1.0 / l, 0.0],
        c: vec![0.0, 1.0],
    }
}

/// States `(iL, vC, iC)`: inductor current, voltage on the ideal capacitor
/// and current in the capacitor branch (ESR + ESL + C). `v2 = R_L (iL - iC)`.
/// Needs `esl_c > 0`.
pub fn parasitic_model(p: &CircuitParams, q: &ParasiticParams) -> StateSpace {
    let (l, c, r) = (p.inductance, p.capacitance, p.load_resistance);
    let (rs, rc, lc) = (q.r_ds_on_1, q.esr_c, q.esl_c);
    assert!(lc > 0.0, "oracle needs a capacitor series inductance");
    StateSpace {
        a: vec![
            vec![-(rs + r) / l, 0.0, r / l],
            vec![0.0, 0.0, 1.0 / c],
            vec![r / lc, -1.0 / lc, -(r + rc) / lc],
        ],
        b: vec![1.0 / l, 0.0, 0.0],
        c: vec![r, 0.0, -r],
    }
}

/// States `(iL, v2, iLoad, vCL)` for a series `R_L`, `L_L`, `C_L` load.
/// Needs `L_L > 0` and a finite `C_L`.
pub fn general_load_model(p: &CircuitParams, g: &GeneralLoad) -> StateSpace {
    let (l, c) = (p.inductance, p.capacitance);
    let (rl, ll) = (g.load_resistance, g.series_inductance);
    let cl = match g.series_capacitance {
        LoadCapacitance::Finite(cl) => cl,
        LoadCapacitance::Infinite => panic!("oracle needs a finite load capacitance"),
    };
    assert!(ll > 0.0, "oracle needs a load inductance");
    StateSpace {
        a: vec![
            vec![0.0, -1.0 / l, 0.0, 0.0],
            vec![1.0 / c, 0.0, -1.0 / c, 0.0],
            vec![0.0, 1.0 / ll, -rl / ll, -1.0 / ll],
            vec![0.0, 0.0, 1.0 / cl, 0.0],
        ],
        b: vec![1.0 / l, 0.0, 0.0, 0.0],
        c: vec![0.0, 1.0, 0.0, 0.0],
    }
}

/// `max |x - y| / max |y|`.
pub fn max_relative_error(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

/// `max_n |x[n] - y[n]| / |y[n]|`.
pub fn max_pointwise_relative_error(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max)
}
