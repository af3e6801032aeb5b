use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::ray::unit_circle_entry;
use super::{perp, ray_first_hit_2d, unit, Frame2D, ParametricCurve2D, RayHit2D, DEFAULT_BRACKET_SAMPLES};
use crate::error::{Error, Result};

/// Explicitly given outer boundary.
///
/// The ellipse is parametrized as (a cos φ, b sin φ); the radial Fourier
/// curve as ρ(φ)(cos φ, sin φ) with ρ(φ) = a₀ + Σ a_k cos kφ + b_k sin kφ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterCurve2D {
    Ellipse { a: f64, b: f64 },
    RadialFourier(Vec<[f64; 2]>),
}

fn radial_jet(coeffs: &[[f64; 2]], phi: f64) -> (f64, f64, f64) {
    let mut r = (0.0, 0.0, 0.0);
    for (k, &[a, b]) in coeffs.iter().enumerate() {
        if k == 0 {
            r.0 += a;
            continue;
        }
        let kf = k as f64;
        let (s, c) = (kf * phi).sin_cos();
        r.0 += a * c + b * s;
        r.1 += kf * (-a * s + b * c);
        r.2 -= kf * kf * (a * c + b * s);
    }
    r
}

impl OuterCurve2D {
    pub fn validate(&self) -> Result<()> {
        match self {
            OuterCurve2D::Ellipse { a, b } if !(*a > 0.0 && *b > 0.0) => Err(
                Error::InvalidInput(format!("ellipse semi-axes must be positive, got a={a}, b={b}")),
            ),
            OuterCurve2D::RadialFourier(c) if c.is_empty() => {
                Err(Error::InvalidInput("radial Fourier curve has no coefficients".into()))
            }
            _ => Ok(()),
        }
    }

    /// Parameter of a point on (or near) the curve, and the implicit
    /// membership residual at that point.
    pub fn locate(&self, x: &Vector2<f64>) -> (f64, f64) {
        match self {
            OuterCurve2D::Ellipse { a, b } => {
                let phi = (x.y / b).atan2(x.x / a);
                (phi, (x.x / a).powi(2) + (x.y / b).powi(2) - 1.0)
            }
            OuterCurve2D::RadialFourier(c) => {
                let phi = x.y.atan2(x.x);
                (phi, x.norm() - radial_jet(c, phi).0)
            }
        }
    }

    /// Strict interior test.
    pub fn contains(&self, x: &Vector2<f64>) -> bool {
        match self {
            OuterCurve2D::Ellipse { a, b } => (x.x / a).powi(2) + (x.y / b).powi(2) < 1.0,
            OuterCurve2D::RadialFourier(c) => x.norm() < radial_jet(c, x.y.atan2(x.x)).0,
        }
    }

    /// First crossing of a ray with the curve: closed form for the ellipse,
    /// bracketing otherwise.
    pub fn first_hit(&self, origin: &Vector2<f64>, direction: &Vector2<f64>) -> Result<RayHit2D> {
        match self {
            OuterCurve2D::Ellipse { a, b } => {
                let p = Vector2::new(origin.x / a, origin.y / b);
                let q = Vector2::new(direction.x / a, direction.y / b);
                let t = unit_circle_entry(&p, &q)?;
                let point = origin + direction * t;
                let param = (point.y / b).atan2(point.x / a).rem_euclid(std::f64::consts::TAU);
                Ok(RayHit2D { t, param, point })
            }
            OuterCurve2D::RadialFourier(_) => ray_first_hit_2d(self, origin, direction, DEFAULT_BRACKET_SAMPLES),
        }
    }

    /// Unit normal pointing into the enclosed region at a curve point.
    pub fn inward_normal(&self, x: &Vector2<f64>) -> Result<Vector2<f64>> {
        let (phi, _) = self.locate(x);
        let f = self.frame(phi)?;
        Ok(-Vector2::new(f.normal[0], f.normal[1]))
    }
}

impl ParametricCurve2D for OuterCurve2D {
    fn eval(&self, t: f64) -> Vector2<f64> {
        match self {
            OuterCurve2D::Ellipse { a, b } => Vector2::new(a * t.cos(), b * t.sin()),
            OuterCurve2D::RadialFourier(c) => unit(t) * radial_jet(c, t).0,
        }
    }

    fn eval_d1(&self, t: f64) -> Vector2<f64> {
        match self {
            OuterCurve2D::Ellipse { a, b } => Vector2::new(-a * t.sin(), b * t.cos()),
            OuterCurve2D::RadialFourier(c) => {
                let (r, r1, _) = radial_jet(c, t);
                let u = unit(t);
                u * r1 + perp(&u) * r
            }
        }
    }

    fn eval_d2(&self, t: f64) -> Vector2<f64> {
        match self {
            OuterCurve2D::Ellipse { a, b } => Vector2::new(-a * t.cos(), -b * t.sin()),
            OuterCurve2D::RadialFourier(c) => {
                let (r, r1, r2) = radial_jet(c, t);
                let u = unit(t);
                u * (r2 - r) + perp(&u) * (2.0 * r1)
            }
        }
    }

    fn frame(&self, t: f64) -> Result<Frame2D> {
        let d1 = self.eval_d1(t);
        let speed = d1.norm();
        if !(speed > 1e-14) {
            return Err(Error::GeometryDegenerate(format!(
                "outer curve has vanishing derivative at {t}"
            )));
        }
        let tangent = d1 / speed;
        let p = self.eval(t);
        Ok(Frame2D {
            theta: t,
            point: [p.x, p.y],
            tangent: [tangent.x, tangent.y],
            normal: [tangent.y, -tangent.x],
            curvature: super::cross(&d1, &self.eval_d2(t)) / speed.powi(3),
        })
    }
}
