//! Points of the core boundary ∂C and intrinsic tangent charts on it, for
//! both planar cores (arclength charts) and the unit sphere (exponential
//! charts).

use std::f64::consts::TAU;

use nalgebra::{DVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry2d::{unit, SupportCurve2D};
use crate::sphere::{frame_sphere, to_spherical, TangentChart};

/// Convex core boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Core {
    Curve(SupportCurve2D),
    UnitSphere,
}

/// A point of ∂C. Planar points are keyed by their normal angle θ ∈ [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    Curve { theta: f64, point: Vector2<f64> },
    Sphere { point: Vector3<f64> },
}

impl BoundaryPoint {
    /// θ for planar points; (colatitude, longitude) on the sphere.
    pub fn params(&self) -> Vec<f64> {
        match self {
            BoundaryPoint::Curve { theta, .. } => vec![*theta],
            BoundaryPoint::Sphere { point } => {
                let (t, p) = to_spherical(point);
                vec![t, p]
            }
        }
    }

    pub fn ambient(&self) -> Vec<f64> {
        match self {
            BoundaryPoint::Curve { point, .. } => vec![point.x, point.y],
            BoundaryPoint::Sphere { point } => vec![point.x, point.y, point.z],
        }
    }

    pub fn ambient_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.ambient())
    }

    /// Euclidean distance between two points of the same boundary.
    pub fn distance(&self, other: &BoundaryPoint) -> f64 {
        (self.ambient_vector() - other.ambient_vector()).norm()
    }

    /// Outward unit normal of the core at this point.
    pub fn normal(&self) -> DVector<f64> {
        match self {
            BoundaryPoint::Curve { theta, .. } => {
                let u = unit(*theta);
                DVector::from_vec(vec![u.x, u.y])
            }
            BoundaryPoint::Sphere { point } => DVector::from_vec(vec![point.x, point.y, point.z]),
        }
    }
}

/// Intrinsic chart centred at a boundary point: signed arclength on a curve,
/// geodesic normal coordinates on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chart {
    Arc { theta: f64 },
    Sphere(TangentChart),
}

impl Core {
    /// Manifold dimension of ∂C.
    pub fn dim(&self) -> usize {
        match self {
            Core::Curve(_) => 1,
            Core::UnitSphere => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim() + 1
    }

    pub fn curve_point(&self, theta: f64) -> Result<BoundaryPoint> {
        match self {
            Core::Curve(c) => {
                let theta = theta.rem_euclid(TAU);
                Ok(BoundaryPoint::Curve { theta, point: c.point(theta) })
            }
            Core::UnitSphere => Err(Error::InvalidInput("planar parameter given for a spherical core".into())),
        }
    }

    pub fn sphere_point(&self, p: &Vector3<f64>) -> Result<BoundaryPoint> {
        match self {
            Core::UnitSphere => {
                let n = p.norm();
                if !((n - 1.0).abs() <= 1e-10) {
                    return Err(Error::InvalidInput(format!("point not on the unit sphere: |p| = {n}")));
                }
                Ok(BoundaryPoint::Sphere { point: p / n })
            }
            Core::Curve(_) => Err(Error::InvalidInput("spatial point given for a planar core".into())),
        }
    }

    /// Boundary point from parameters (θ, or colatitude and longitude).
    pub fn point_from_params(&self, params: &[f64]) -> Result<BoundaryPoint> {
        match (self, params) {
            (Core::Curve(_), [theta]) => self.curve_point(*theta),
            (Core::UnitSphere, [t, p]) => self.sphere_point(&crate::sphere::from_spherical(*t, *p)),
            _ => Err(Error::InvalidInput(format!(
                "expected {} boundary parameter(s), got {}",
                self.dim(),
                params.len()
            ))),
        }
    }

    pub fn chart(&self, at: &BoundaryPoint) -> Result<Chart> {
        match at {
            BoundaryPoint::Curve { theta, .. } => Ok(Chart::Arc { theta: *theta }),
            BoundaryPoint::Sphere { point } => Ok(Chart::Sphere(frame_sphere(point)?)),
        }
    }

    /// Exponential map of the chart: moves a chart vector onto ∂C.
    pub fn exp(&self, chart: &Chart, v: &DVector<f64>) -> Result<BoundaryPoint> {
        match (self, chart) {
            (Core::Curve(c), Chart::Arc { theta }) => self.curve_point(c.advance(*theta, v[0])),
            (Core::UnitSphere, Chart::Sphere(tc)) => {
                Ok(BoundaryPoint::Sphere { point: tc.exp(&Vector2::new(v[0], v[1])) })
            }
            _ => Err(Error::InvalidInput("chart does not belong to this core".into())),
        }
    }

    /// Inverse of [`Core::exp`].
    pub fn log(&self, chart: &Chart, q: &BoundaryPoint) -> Result<DVector<f64>> {
        match (self, chart, q) {
            (Core::Curve(c), Chart::Arc { theta }, BoundaryPoint::Curve { theta: t, .. }) => {
                Ok(DVector::from_element(1, c.arc_offset(*theta, *t)))
            }
            (Core::UnitSphere, Chart::Sphere(tc), BoundaryPoint::Sphere { point }) => {
                let v = tc.log(point);
                Ok(DVector::from_vec(vec![v.x, v.y]))
            }
            _ => Err(Error::InvalidInput("point does not belong to this chart".into())),
        }
    }

    /// Ambient images of the chart basis vectors at the chart centre.
    pub fn chart_basis(&self, chart: &Chart) -> Vec<DVector<f64>> {
        match chart {
            Chart::Arc { theta } => {
                let t = crate::geometry2d::perp(&unit(*theta));
                vec![DVector::from_vec(vec![t.x, t.y])]
            }
            Chart::Sphere(tc) => vec![
                DVector::from_vec(tc.e1.to_vec()),
                DVector::from_vec(tc.e2.to_vec()),
            ],
        }
    }

    /// Deterministic sample of boundary points: `n` equispaced normal angles,
    /// or `n` Fibonacci-lattice points on the sphere.
    pub fn sample(&self, n: usize) -> Vec<BoundaryPoint> {
        match self {
            Core::Curve(c) => (0..n)
                .map(|k| {
                    let theta = TAU * k as f64 / n as f64;
                    BoundaryPoint::Curve { theta, point: c.point(theta) }
                })
                .collect(),
            Core::UnitSphere => crate::sphere::fibonacci_sphere(n)
                .into_iter()
                .map(|point| BoundaryPoint::Sphere { point })
                .collect(),
        }
    }

    /// Interior reference point used to orient outer normals.
    pub fn centroid(&self) -> DVector<f64> {
        match self {
            Core::Curve(c) => {
                let g = c.centroid();
                DVector::from_vec(vec![g.x, g.y])
            }
            Core::UnitSphere => DVector::zeros(3),
        }
    }

    /// Principal curvatures of ∂C in the chart basis (positive for convex).
    pub fn curvature(&self, at: &BoundaryPoint) -> Vec<f64> {
        match (self, at) {
            (Core::Curve(c), BoundaryPoint::Curve { theta, .. }) => vec![1.0 / c.radius_of_curvature(*theta)],
            _ => vec![1.0, 1.0],
        }
    }
}
