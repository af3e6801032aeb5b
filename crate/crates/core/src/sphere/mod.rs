//! The unit sphere as a convex core: tangent charts, geodesic exponential
//! map, ray intersection, and real spherical-harmonic scalar fields.

mod chart;
mod harmonics;

pub use chart::{fibonacci_sphere, frame_sphere, ray_first_hit_sphere, TangentChart};
pub use harmonics::{sh_jet, sh_jet_in_chart, HarmonicTerm, SphereJet, SphericalHarmonicField, MAX_DEGREE};

use nalgebra::Vector3;

/// Colatitude θ ∈ [0, π] and longitude φ ∈ (-π, π] of a unit vector.
pub fn to_spherical(p: &Vector3<f64>) -> (f64, f64) {
    let theta = p.z.clamp(-1.0, 1.0).acos();
    (theta, p.y.atan2(p.x))
}

pub fn from_spherical(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}
