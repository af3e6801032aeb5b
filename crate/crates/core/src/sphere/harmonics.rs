use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::chart::{frame_sphere, TangentChart};
use crate::error::{Error, Result};
use crate::fd::{first5_richardson, second5_richardson};

/// Value, gradient and Hessian of a function of (x, y, z), propagated through
/// polynomial arithmetic.
#[derive(Debug, Clone, Copy)]
struct Hyper3 {
    v: f64,
    g: [f64; 3],
    h: [[f64; 3]; 3],
}

impl Hyper3 {
    fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    fn variable(i: usize, v: f64) -> Self {
        let mut g = [0.0; 3];
        g[i] = 1.0;
        Self { v, g, h: [[0.0; 3]; 3] }
    }

    fn scale(self, s: f64) -> Self {
        let mut out = self;
        out.v *= s;
        for i in 0..3 {
            out.g[i] *= s;
            for j in 0..3 {
                out.h[i][j] *= s;
            }
        }
        out
    }
}

impl Add for Hyper3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out.v += o.v;
        for i in 0..3 {
            out.g[i] += o.g[i];
            for j in 0..3 {
                out.h[i][j] += o.h[i][j];
            }
        }
        out
    }
}

impl Sub for Hyper3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-1.0)
    }
}

impl Mul for Hyper3 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..3 {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for j in 0..3 {
                out.h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        out
    }
}

/// Real regular solid harmonics S_ℓm for ℓ ≤ `lmax`, indexed `[ℓ][m + ℓ]`,
/// normalized so that S_ℓ0 = r^ℓ P_ℓ(z/r).
fn solid_harmonics(lmax: usize, p: &Vector3<f64>) -> Vec<Vec<Hyper3>> {
    let x = Hyper3::variable(0, p.x);
    let y = Hyper3::variable(1, p.y);
    let z = Hyper3::variable(2, p.z);
    let r2 = x * x + y * y + z * z;
    let mut s: Vec<Vec<Hyper3>> = vec![vec![Hyper3::constant(1.0)]];
    for l in 0..lmax {
        let lf = l as f64;
        let mut next = vec![Hyper3::constant(0.0); 2 * l + 3];
        let first = l == 0;
        let pre = ((if first { 2.0 } else { 1.0 }) * (2.0 * lf + 1.0) / (2.0 * lf + 2.0)).sqrt();
        let top = s[l][2 * l];
        let bottom = s[l][0];
        let (tx, ty) = if first {
            (x * top, y * top)
        } else {
            (x * top - y * bottom, y * top + x * bottom)
        };
        next[2 * l + 2] = tx.scale(pre);
        next[0] = ty.scale(pre);
        for m in -(l as i64)..=(l as i64) {
            let mf = m as f64;
            let idx = (m + l as i64) as usize;
            let mut v = (z * s[l][idx]).scale(2.0 * lf + 1.0);
            if l >= 1 && m.unsigned_abs() as usize <= l - 1 {
                let lower = s[l - 1][(m + l as i64 - 1) as usize];
                v = v - (r2 * lower).scale(((lf + mf) * (lf - mf)).sqrt());
            }
            next[idx + 1] = v.scale(1.0 / ((lf + mf + 1.0) * (lf - mf + 1.0)).sqrt());
        }
        s.push(next);
    }
    s
}

/// One term c·Y_ℓ^m of a real spherical-harmonic expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicTerm {
    pub l: u32,
    pub m: i32,
    pub c: f64,
}

/// Scalar field `constant + Σ c·Y_ℓ^m` on the unit sphere, with real
/// orthonormal harmonics (Y_ℓ^{m<0} ∝ sin, Y_ℓ^{m>0} ∝ cos in longitude).
///
/// Y₂⁰ = √(5/4π)·(3cos²θ − 1)/2, so ε(3cos²θ − 1) is the term with
/// c = 2ε·√(4π/5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalHarmonicField {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub coeffs: Vec<HarmonicTerm>,
}

/// Value, chart gradient and chart Hessian of a field at a point of S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereJet {
    pub value: f64,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
}

pub const MAX_DEGREE: u32 = 24;

impl SphericalHarmonicField {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, coeffs: Vec::new() }
    }

    /// `value + ε(3cos²θ − 1)`, written through Y₂⁰.
    pub fn zonal_quadratic(value: f64, eps: f64) -> Self {
        Self {
            constant: value,
            coeffs: vec![HarmonicTerm { l: 2, m: 0, c: 2.0 * eps * (4.0 * PI / 5.0).sqrt() }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.coeffs {
            if t.l > MAX_DEGREE {
                return Err(Error::InvalidInput(format!("harmonic degree {} exceeds {MAX_DEGREE}", t.l)));
            }
            if t.m.unsigned_abs() > t.l {
                return Err(Error::InvalidInput(format!("harmonic order {} out of range for degree {}", t.m, t.l)));
            }
            if !t.c.is_finite() {
                return Err(Error::InvalidInput("non-finite harmonic coefficient".into()));
            }
        }
        if !self.constant.is_finite() {
            return Err(Error::InvalidInput("non-finite constant term".into()));
        }
        Ok(())
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.iter().map(|t| t.l as usize).max().unwrap_or(0)
    }

    fn ambient(&self, p: &Vector3<f64>) -> Hyper3 {
        let table = solid_harmonics(self.max_degree(), p);
        self.coeffs.iter().fold(Hyper3::constant(self.constant), |acc, t| {
            let l = t.l as usize;
            let norm = ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt();
            acc + table[l][(t.m as i64 + l as i64) as usize].scale(t.c * norm)
        })
    }

    pub fn value(&self, p: &Vector3<f64>) -> f64 {
        self.ambient(p).v
    }

    /// Exact intrinsic jet in the given chart: gradient Eᵀ∇P and Riemannian
    /// Hessian Eᵀ D²P E − (p·∇P) I of the polynomial extension P.
    pub fn jet_in_chart(&self, chart: &TangentChart) -> SphereJet {
        let p = chart.base();
        let a = self.ambient(&p);
        let g = Vector3::from(a.g);
        let h = Matrix3::from_fn(|i, j| a.h[i][j]);
        let e = chart.basis();
        let radial = p.dot(&g);
        let hess = e.transpose() * h * e - Matrix2::identity() * radial;
        SphereJet {
            value: a.v,
            gradient: e.transpose() * g,
            hessian: (hess + hess.transpose()) * 0.5,
        }
    }

    pub fn jet(&self, p: &Vector3<f64>) -> Result<SphereJet> {
        Ok(self.jet_in_chart(&frame_sphere(p)?))
    }
}

/// Finite-difference jet on the exponential chart at `p`: five-point
/// stencils with step 1e-4 and one Richardson level. Mixed second
/// derivatives come from the diagonal directions (e₁ ± e₂)/√2.
pub fn sh_jet(field: &SphericalHarmonicField, p: &Vector3<f64>) -> Result<SphereJet> {
    sh_jet_in_chart(field, &frame_sphere(p)?, 1e-4)
}

pub fn sh_jet_in_chart(field: &SphericalHarmonicField, chart: &TangentChart, h: f64) -> Result<SphereJet> {
    let value = field.value(&chart.base());
    let along = |dir: Vector2<f64>| move |t: f64| -> Result<f64> { Ok(field.value(&chart.exp(&(dir * t)))) };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let dirs = [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0), Vector2::new(s, s), Vector2::new(s, -s)];
    let mut grad = Vector2::zeros();
    for i in 0..2 {
        grad[i] = first5_richardson(&mut along(dirs[i]), h)?;
    }
    let mut second = [0.0; 4];
    for (k, dir) in dirs.iter().enumerate() {
        second[k] = second5_richardson(&mut along(*dir), value, h)?;
    }
    let mixed = 0.5 * (second[2] - second[3]);
    Ok(SphereJet {
        value,
        gradient: grad,
        hessian: Matrix2::new(second[0], mixed, mixed, second[1]),
    })
}
