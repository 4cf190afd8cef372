//! Real polynomials in ascending-power form and their complex roots.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// `coeffs[k]` multiplies `s^k`. Trailing zeros are trimmed on construction,
/// so the last coefficient is the leading one (except for the zero polynomial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `s`
    pub fn s() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn lead(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn add(&self, other: &Poly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + other.coeffs.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `sum_{k > j} c_k s^{k-1-j}`: the polynomial multiplying the `j`-th
    /// derivative initial value when this polynomial acts as a differential
    /// operator under the Laplace transform.
    pub fn ic_polynomial(&self, j: usize) -> Self {
        if j >= self.degree() {
            return Self::constant(0.0);
        }
        Self::new(self.coeffs[j + 1..].to_vec())
    }

    /// Monic polynomial with the given roots (imaginary parts of the result
    /// are dropped; pass conjugate-closed root sets).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c.into_iter().map(|z| z.re).collect())
    }
}

/// Relative distance under which two roots count as repeated.
pub const REPEATED_TOLERANCE: f64 = 1e-6;

/// All complex roots, conjugate pairs made exact.
///
/// Roots come from the eigenvalues of the companion matrix of the
/// polynomial in the scaled variable `x = s / sigma` (sigma the geometric
/// mean root magnitude), refined by Newton steps on the original
/// polynomial. Ordering: by descending real part, positive imaginary part
/// first within a conjugate pair.
pub fn roots(p: &Poly) -> Result<Vec<Complex64>> {
    let n = p.degree();
    if p.is_zero() {
        return Err(ModelError::InvalidParameter {
            name: "polynomial",
            reason: "zero polynomial has no isolated roots".into(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let c = p.coeffs();
    // Zero roots first, then work on the deflated polynomial.
    let zeros = c.iter().take_while(|&&x| x == 0.0).count();
    let q = Poly::new(c[zeros..].to_vec());
    let mut found: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); zeros];
    let m = q.degree();
    if m > 0 {
        let qc = q.coeffs();
        let sigma = (qc[0].abs() / qc[m].abs()).powf(1.0 / m as f64);
        // Monic coefficients in x: b_k = c_k sigma^k / (c_m sigma^m).
        let b: Vec<f64> = (0..m)
            .map(|k| qc[k] * sigma.powi(k as i32 - m as i32) / qc[m])
            .collect();
        let mut comp = DMatrix::<f64>::zeros(m, m);
        for i in 1..m {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..m {
            comp[(i, m - 1)] = -b[i];
        }
        let eig = comp.complex_eigenvalues();
        let dq = q.derivative();
        for z in eig.iter() {
            found.push(polish(&q, &dq, *z * sigma));
        }
    }
    Ok(pair_conjugates(found))
}

fn polish(p: &Poly, dp: &Poly, mut z: Complex64) -> Complex64 {
    let mut res = p.eval(z).norm();
    for _ in 0..4 {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval(z) / d;
        let r = p.eval(cand).norm();
        if !(r < res) {
            break;
        }
        z = cand;
        res = r;
    }
    z
}

fn pair_conjugates(mut r: Vec<Complex64>) -> Vec<Complex64> {
    let tol = 1e-9;
    let mut out = Vec::with_capacity(r.len());
    // Real roots.
    let mut complex = Vec::new();
    for z in r.drain(..) {
        if z.im.abs() <= tol * z.norm() {
            out.push(Complex64::new(z.re, 0.0));
        } else {
            complex.push(z);
        }
    }
    let mut upper: Vec<Complex64> = complex.iter().copied().filter(|z| z.im > 0.0).collect();
    let mut lower: Vec<Complex64> = complex.iter().copied().filter(|z| z.im < 0.0).collect();
    upper.sort_by(|a, b| b.re.total_cmp(&a.re));
    for u in upper {
        let (idx, _) = match lower
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (a.conj() - u).norm().total_cmp(&(b.conj() - u).norm()))
        {
            Some(x) => x,
            None => {
                out.push(u);
                continue;
            }
        };
        let l = lower.swap_remove(idx);
        let avg = Complex64::new(0.5 * (u.re + l.re), 0.5 * (u.im - l.im));
        out.push(avg);
        out.push(avg.conj());
    }
    out.extend(lower);
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

/// Rejects root sets containing two roots closer than
/// [`REPEATED_TOLERANCE`] relative to their magnitude.
pub fn check_distinct(roots: &[Complex64]) -> Result<()> {
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let scale = roots[i].norm().max(roots[j].norm());
            let gap = (roots[i] - roots[j]).norm();
            if gap <= REPEATED_TOLERANCE * scale || (scale == 0.0 && gap == 0.0) {
                return Err(ModelError::RepeatedPoles {
                    first: format!("{}", roots[i]),
                    second: format!("{}", roots[j]),
                });
            }
        }
    }
    Ok(())
}
