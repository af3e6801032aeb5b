//! Planar convex cores (support-function curves), explicit outer curves and
//! ray intersection against either.

mod outer;
mod ray;
mod support;

pub use outer::OuterCurve2D;
pub use ray::{ray_first_hit_2d, RayHit2D, DEFAULT_BRACKET_SAMPLES};
pub use support::{convexity_audit, ConvexityReport, SupportCurve2D, SupportFunction, SupportJet};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit direction (cos θ, sin θ).
pub fn unit(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

/// Counter-clockwise quarter turn of `v`.
pub fn perp(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

pub fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Point, unit tangent, outward unit normal and signed curvature at a curve
/// parameter. Curvature is positive where the curve is convex with respect to
/// the outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame2D {
    pub theta: f64,
    pub point: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
}

/// A closed, counter-clockwise parametrized plane curve with period 2π.
pub trait ParametricCurve2D {
    fn eval(&self, t: f64) -> Vector2<f64>;
    fn eval_d1(&self, t: f64) -> Vector2<f64>;
    fn eval_d2(&self, t: f64) -> Vector2<f64>;

    /// Generic frame from the first two derivatives.
    fn frame(&self, t: f64) -> Result<Frame2D> {
        let d1 = self.eval_d1(t);
        let speed = d1.norm();
        if !(speed > 1e-14) {
            return Err(Error::GeometryDegenerate(format!(
                "vanishing curve derivative at parameter {t}"
            )));
        }
        let tangent = d1 / speed;
        let normal = Vector2::new(tangent.y, -tangent.x);
        let curvature = cross(&d1, &self.eval_d2(t)) / speed.powi(3);
        let p = self.eval(t);
        Ok(Frame2D {
            theta: t,
            point: [p.x, p.y],
            tangent: [tangent.x, tangent.y],
            normal: [normal.x, normal.y],
            curvature,
        })
    }
}

/// Frame of either kind of planar curve.
pub fn frame_2d<C: ParametricCurve2D>(curve: &C, theta: f64) -> Result<Frame2D> {
    curve.frame(theta)
}
