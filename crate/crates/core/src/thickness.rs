//! The thickness function d on ∂C: analytic (Fourier on a planar core,
//! spherical harmonics on S²) or measured by casting the outward normal ray
//! against an explicit outer curve.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPoint, Chart, Core};
use crate::error::{Error, Result};
use crate::fd::{first5_richardson, second5_richardson};
use crate::geometry2d::{cross, perp, unit, OuterCurve2D, ParametricCurve2D, SupportCurve2D};
use crate::sphere::{sh_jet_in_chart, SphericalHarmonicField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThicknessField {
    /// d(θ) = a₀ + Σ a_k cos kθ + b_k sin kθ in the normal angle of a planar core.
    Fourier(Vec<[f64; 2]>),
    SphericalHarmonic(SphericalHarmonicField),
    /// First-exit distance along the outward normal to an explicit outer curve.
    RayCast(OuterCurve2D),
}

/// Value, intrinsic gradient and intrinsic Hessian of d in the chart at a
/// boundary point (arclength on curves, geodesic normal coordinates on S²).
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessJet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl ThicknessJet {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.norm()
    }
}

/// d and its first two derivatives in the normal angle θ of a planar core.
/// For ray-cast fields `outer_param` is the parameter of the exit point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaJet {
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub outer_param: Option<f64>,
}

fn fourier_jet(coeffs: &[[f64; 2]], theta: f64) -> (f64, f64, f64) {
    let mut r = (0.0, 0.0, 0.0);
    for (k, &[a, b]) in coeffs.iter().enumerate() {
        if k == 0 {
            r.0 += a;
            continue;
        }
        let kf = k as f64;
        let (s, c) = (kf * theta).sin_cos();
        r.0 += a * c + b * s;
        r.1 += kf * (b * c - a * s);
        r.2 -= kf * kf * (a * c + b * s);
    }
    r
}

fn oc_violation(origin: &Vector2<f64>, dir: &Vector2<f64>) -> Error {
    Error::OcViolation { point: vec![origin.x, origin.y], normal: vec![dir.x, dir.y] }
}

impl ThicknessField {
    pub fn validate(&self, core: &Core) -> Result<()> {
        match (self, core) {
            (ThicknessField::Fourier(c), Core::Curve(_)) if !c.is_empty() => Ok(()),
            (ThicknessField::Fourier(_), Core::Curve(_)) => {
                Err(Error::InvalidInput("Fourier thickness has no coefficients".into()))
            }
            (ThicknessField::RayCast(outer), Core::Curve(_)) => outer.validate(),
            (ThicknessField::SphericalHarmonic(f), Core::UnitSphere) => f.validate(),
            _ => Err(Error::InvalidInput("thickness field does not match the core dimension".into())),
        }
    }

    /// θ-jet on a planar core. Ray-cast derivatives come from implicit
    /// differentiation of γ(φ) = c(θ) + t·u(θ).
    pub fn theta_jet(&self, core: &SupportCurve2D, theta: f64) -> Result<ThetaJet> {
        match self {
            ThicknessField::Fourier(c) => {
                let (d, d1, d2) = fourier_jet(c, theta);
                Ok(ThetaJet { d, d1, d2, outer_param: None })
            }
            ThicknessField::RayCast(outer) => {
                let u = unit(theta);
                let origin = core.point(theta);
                let hit = outer.first_hit(&origin, &u).map_err(|_| oc_violation(&origin, &u))?;
                let t = hit.t;
                let sj = core.jet(theta);
                let rho = sj.radius();
                let rho1 = sj.h1 + sj.h3;
                let g1 = outer.eval_d1(hit.param);
                let g2 = outer.eval_d2(hit.param);
                let up = perp(&u);
                // [γ', −u] [φ'; t'] = rhs
                let det = cross(&u, &g1);
                if !(det.abs() > 1e-12 * g1.norm()) {
                    return Err(Error::GeometryDegenerate(format!(
                        "normal ray at θ = {theta} meets the outer curve tangentially"
                    )));
                }
                let solve = |rhs: Vector2<f64>| -> (f64, f64) {
                    // Cramer on columns γ' and −u
                    let phi = cross(&rhs, &(-u)) / cross(&g1, &(-u));
                    let tt = cross(&g1, &rhs) / cross(&g1, &(-u));
                    (phi, tt)
                };
                let (p1, t1) = solve(up * (rho + t));
                let rhs2 = up * (rho1 + 2.0 * t1) - u * (rho + t) - g2 * (p1 * p1);
                let (_, t2) = solve(rhs2);
                Ok(ThetaJet { d: t, d1: t1, d2: t2, outer_param: Some(hit.param) })
            }
            ThicknessField::SphericalHarmonic(_) => {
                Err(Error::InvalidInput("spherical field evaluated on a planar core".into()))
            }
        }
    }

    pub fn value(&self, core: &Core, at: &BoundaryPoint) -> Result<f64> {
        match (self, core, at) {
            (ThicknessField::SphericalHarmonic(f), _, BoundaryPoint::Sphere { point }) => Ok(f.value(point)),
            (ThicknessField::Fourier(c), _, BoundaryPoint::Curve { theta, .. }) => Ok(fourier_jet(c, *theta).0),
            (_, Core::Curve(curve), BoundaryPoint::Curve { theta, .. }) => Ok(self.theta_jet(curve, *theta)?.d),
            _ => Err(Error::InvalidInput("boundary point does not match the thickness field".into())),
        }
    }

    /// Exact jet: termwise for series, implicit differentiation for ray-cast.
    pub fn jet(&self, core: &Core, at: &BoundaryPoint) -> Result<ThicknessJet> {
        match (self, core, at) {
            (ThicknessField::SphericalHarmonic(f), Core::UnitSphere, BoundaryPoint::Sphere { .. }) => {
                let Chart::Sphere(chart) = core.chart(at)? else { unreachable!() };
                Ok(from_sphere(f.jet_in_chart(&chart)))
            }
            (_, Core::Curve(curve), BoundaryPoint::Curve { theta, .. }) => {
                let j = self.theta_jet(curve, *theta)?;
                Ok(arclength_jet(curve, *theta, &j))
            }
            _ => Err(Error::InvalidInput("boundary point does not match the thickness field".into())),
        }
    }

    /// Finite-difference jet on the intrinsic chart: five-point stencils of
    /// step `h`, one Richardson level.
    pub fn jet_fd(&self, core: &Core, at: &BoundaryPoint, h: f64) -> Result<ThicknessJet> {
        let chart = core.chart(at)?;
        match (self, &chart) {
            (ThicknessField::SphericalHarmonic(f), Chart::Sphere(tc)) => Ok(from_sphere(sh_jet_in_chart(f, tc, h)?)),
            (_, Chart::Arc { .. }) => {
                let value = self.value(core, at)?;
                let mut along = |s: f64| {
                    let q = core.exp(&chart, &DVector::from_element(1, s))?;
                    self.value(core, &q)
                };
                let g = first5_richardson(&mut along, h)?;
                let hh = second5_richardson(&mut along, value, h)?;
                Ok(ThicknessJet {
                    value,
                    gradient: DVector::from_element(1, g),
                    hessian: DMatrix::from_element(1, 1, hh),
                })
            }
            _ => Err(Error::InvalidInput("boundary point does not match the thickness field".into())),
        }
    }
}

/// Converts θ-derivatives to arclength derivatives: d_s = d_θ/ρ and
/// d_ss = (d_θθ ρ − d_θ ρ_θ)/ρ³ with ρ = h + h''.
pub fn arclength_jet(core: &SupportCurve2D, theta: f64, j: &ThetaJet) -> ThicknessJet {
    let sj = core.jet(theta);
    let rho = sj.radius();
    let rho1 = sj.h1 + sj.h3;
    ThicknessJet {
        value: j.d,
        gradient: DVector::from_element(1, j.d1 / rho),
        hessian: DMatrix::from_element(1, 1, (j.d2 * rho - j.d1 * rho1) / rho.powi(3)),
    }
}

fn from_sphere(j: crate::sphere::SphereJet) -> ThicknessJet {
    let h: Matrix2<f64> = j.hessian;
    ThicknessJet {
        value: j.value,
        gradient: DVector::from_vec(vec![j.gradient.x, j.gradient.y]),
        hessian: DMatrix::from_fn(2, 2, |i, k| h[(i, k)]),
    }
}

/// Jet of d at a boundary point.
pub fn thickness_jet(field: &ThicknessField, core: &Core, at: &BoundaryPoint) -> Result<ThicknessJet> {
    field.jet(core, at)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use super::*;
    use crate::geometry2d::SupportFunction;

    fn circle_in_ellipse() -> (Core, ThicknessField) {
        (
            Core::Curve(SupportCurve2D::unit_circle()),
            ThicknessField::RayCast(OuterCurve2D::Ellipse { a: 2.0, b: 1.5 }),
        )
    }

    /// Distance from the unit circle at angle θ to the ellipse along u(θ),
    /// from the quadratic in t.
    fn ellipse_oracle(theta: f64) -> f64 {
        let (a, b) = (2.0f64, 1.5f64);
        let (c, s) = (theta.cos(), theta.sin());
        // the ray from u(θ) along u(θ) is the line through the origin:
        // (1 + t)²·(c²/a² + s²/b²) = 1
        let q = c * c / (a * a) + s * s / (b * b);
        1.0 / q.sqrt() - 1.0
    }

    #[test]
    fn axis_values() {
        let (core, field) = circle_in_ellipse();
        for (theta, d) in [(0.0, 1.0), (FRAC_PI_2, 0.5), (PI, 1.0), (3.0 * FRAC_PI_2, 0.5)] {
            let j = field.jet(&core, &core.curve_point(theta).unwrap()).unwrap();
            assert!((j.value - d).abs() < 1e-14);
            assert!(j.gradient_norm() <= 1e-9);
        }
    }

    #[test]
    fn ray_cast_matches_quadratic_oracle() {
        let (core, field) = circle_in_ellipse();
        let p = core.curve_point(FRAC_PI_4).unwrap();
        let j = field.jet(&core, &p).unwrap();
        assert!((j.value - ellipse_oracle(FRAC_PI_4)).abs() < 1e-14);
        // derivatives of the oracle by central differences of the closed form
        let h = 1e-4;
        let d1 = (ellipse_oracle(FRAC_PI_4 + h) - ellipse_oracle(FRAC_PI_4 - h)) / (2.0 * h);
        let d2 = (ellipse_oracle(FRAC_PI_4 + h) - 2.0 * ellipse_oracle(FRAC_PI_4) + ellipse_oracle(FRAC_PI_4 - h))
            / (h * h);
        assert!((j.gradient[0] - d1).abs() < 1e-7);
        assert!((j.hessian[(0, 0)] - d2).abs() < 1e-5);
        let fd = field.jet_fd(&core, &p, 1e-4).unwrap();
        assert!((fd.gradient[0] - j.gradient[0]).abs() < 1e-9);
        assert!((fd.hessian[(0, 0)] - j.hessian[(0, 0)]).abs() < 1e-6);
    }

    #[test]
    fn ray_cast_exit_lies_on_outer_curve() {
        let core = Core::Curve(SupportCurve2D::new(SupportFunction::Ellipse { a: 1.2, b: 0.9 }));
        let outer = OuterCurve2D::RadialFourier(vec![[2.4, 0.0], [0.1, 0.05], [0.2, 0.0]]);
        let field = ThicknessField::RayCast(outer.clone());
        let Core::Curve(curve) = &core else { unreachable!() };
        for k in 0..64 {
            let theta = 0.1 * k as f64;
            let j = field.theta_jet(curve, theta).unwrap();
            let x = curve.point(theta) + unit(theta) * j.d;
            assert!(outer.locate(&x).1.abs() <= 1e-10);
        }
    }

    #[test]
    fn implicit_jet_matches_fd_on_general_geometry() {
        let core = Core::Curve(SupportCurve2D::new(SupportFunction::SupportFourier(vec![
            [1.0, 0.0],
            [0.05, 0.02],
            [0.06, -0.03],
        ])));
        let field = ThicknessField::RayCast(OuterCurve2D::RadialFourier(vec![[2.5, 0.0], [0.0, 0.1], [0.15, 0.05]]));
        for k in 0..40 {
            let p = core.curve_point(0.157 * k as f64).unwrap();
            let a = field.jet(&core, &p).unwrap();
            let f = field.jet_fd(&core, &p, 1e-4).unwrap();
            assert!((a.gradient[0] - f.gradient[0]).abs() < 1e-8);
            // second differences of a root-solved distance carry ~1e-6 of rounding at h = 1e-4
            assert!((a.hessian[(0, 0)] - f.hessian[(0, 0)]).abs() < 1e-5);
        }
    }

    #[test]
    fn fourier_field_termwise() {
        let core = Core::Curve(SupportCurve2D::unit_circle());
        let field = ThicknessField::Fourier(vec![[1.0, 0.0], [0.0, 0.0], [0.1, 0.0]]);
        let j = field.jet(&core, &core.curve_point(FRAC_PI_4).unwrap()).unwrap();
        assert!((j.gradient[0] + 0.2).abs() < 1e-15);
        let j0 = field.jet(&core, &core.curve_point(0.0).unwrap()).unwrap();
        assert!((j0.hessian[(0, 0)] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn arclength_rescaling_on_a_non_circular_core() {
        // d as a function of θ on an ellipse core; compare with FD in arclength
        let core = Core::Curve(SupportCurve2D::new(SupportFunction::Ellipse { a: 1.5, b: 1.0 }));
        let field = ThicknessField::Fourier(vec![[1.0, 0.0], [0.1, 0.2], [0.0, 0.15]]);
        for k in 0..30 {
            let p = core.curve_point(0.21 * k as f64).unwrap();
            let a = field.jet(&core, &p).unwrap();
            let f = field.jet_fd(&core, &p, 1e-4).unwrap();
            assert!((a.gradient[0] - f.gradient[0]).abs() < 1e-9);
            assert!((a.hessian[(0, 0)] - f.hessian[(0, 0)]).abs() < 1e-6);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = ThicknessField::SphericalHarmonic(SphericalHarmonicField::constant(1.0));
        assert!(f.validate(&Core::Curve(SupportCurve2D::unit_circle())).is_err());
        assert!(f.validate(&Core::UnitSphere).is_ok());
    }
}
