//! Numerical self-checks shared by the command-line verifier and the test
//! suites: analytic against finite-difference derivatives, and the
//! identity property of concentric configurations.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryPoint;
use crate::error::Result;
use crate::fd::central3_vector;
use crate::return_map::ReturnMapSystem;

/// ‖a − b‖ / max(‖b‖, 1).
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetCheck {
    pub points: usize,
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
}

/// Exact jets of d against five-point Richardson jets at `points`.
pub fn jet_cross_check(sys: &ReturnMapSystem, points: &[BoundaryPoint]) -> Result<JetCheck> {
    let errs: Vec<(f64, f64)> = points
        .par_iter()
        .map(|c| {
            let exact = sys.thickness_jet(c)?;
            let fd = sys.thickness_jet_fd(c)?;
            let col = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
            Ok((
                relative_error(&col(&fd.gradient), &col(&exact.gradient)),
                relative_error(&fd.hessian, &exact.hessian),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(JetCheck {
        points: points.len(),
        max_gradient_error: errs.iter().map(|e| e.0).fold(0.0, f64::max),
        max_hessian_error: errs.iter().map(|e| e.1).fold(0.0, f64::max),
    })
}

/// Largest deviation between DΦ·eⱼ and the central difference of Φ along
/// each chart direction eⱼ.
pub fn radial_differential_check(sys: &ReturnMapSystem, points: &[BoundaryPoint], h: f64) -> Result<f64> {
    let errs: Vec<f64> = points
        .par_iter()
        .map(|c| {
            let chart = sys.core.chart(c)?;
            let n = sys.dim();
            let mut worst: f64 = 0.0;
            for j in 0..n {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                let analytic = sys.radial_differential(c, &e)?;
                let mut phi = |t: f64| sys.radial_map(&sys.core.exp(&chart, &(&e * t))?);
                let fd = central3_vector(&mut phi, h)?;
                worst = worst.max((analytic - fd.value).norm());
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub samples: usize,
    /// max |F(c) − c| over the samples.
    pub max_displacement: f64,
    pub jacobian_points: usize,
    /// max ‖DF − I‖_F over the Jacobian points.
    pub max_jacobian_deviation: f64,
}

/// Measures how far F is from the identity on `samples` boundary points
/// and DF from I on an evenly spread subset of `jacobian_points`.
pub fn identity_check(sys: &ReturnMapSystem, samples: &[BoundaryPoint], jacobian_points: usize) -> Result<IdentityCheck> {
    let disp: Vec<f64> = samples
        .par_iter()
        .map(|c| Ok(sys.return_map(c)?.distance(c)))
        .collect::<Result<_>>()?;
    let stride = (samples.len() / jacobian_points.max(1)).max(1);
    let picked: Vec<&BoundaryPoint> = samples.iter().step_by(stride).take(jacobian_points).collect();
    let n = sys.dim();
    let dev: Vec<f64> = picked
        .par_iter()
        .map(|c| Ok((sys.return_jacobian(c)?.matrix - DMatrix::<f64>::identity(n, n)).norm()))
        .collect::<Result<_>>()?;
    Ok(IdentityCheck {
        samples: samples.len(),
        max_displacement: disp.into_iter().fold(0.0, f64::max),
        jacobian_points: picked.len(),
        max_jacobian_deviation: dev.into_iter().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::random_seeds;
    use crate::sphere::{HarmonicTerm, SphericalHarmonicField};

    #[test]
    fn concentric_configurations_are_the_identity() {
        let sys = ReturnMapSystem::concentric_circles(2.0).unwrap();
        let r = identity_check(&sys, &sys.core.sample(360), 10).unwrap();
        assert!(r.max_displacement <= 1e-9 && r.max_jacobian_deviation <= 1e-7, "{r:?}");
        let sys = ReturnMapSystem::concentric_spheres(2.0).unwrap();
        let r = identity_check(&sys, &sys.core.sample(500), 10).unwrap();
        assert!(r.max_displacement <= 1e-7 && r.max_jacobian_deviation <= 1e-7, "{r:?}");
        assert_eq!(r.jacobian_points, 10);
    }

    #[test]
    fn derivative_checks_on_series_fields() {
        let sys = ReturnMapSystem::planar_fourier(vec![[1.0, 0.0], [0.1, -0.05], [0.0, 0.2]]).unwrap();
        let pts = random_seeds(&sys.core, 50, 3).unwrap();
        let j = jet_cross_check(&sys, &pts).unwrap();
        assert!(j.max_gradient_error < 1e-8 && j.max_hessian_error < 1e-6, "{j:?}");
        assert!(radial_differential_check(&sys, &pts, 1e-4).unwrap() < 1e-6);

        let f = SphericalHarmonicField { constant: 1.0, coeffs: vec![HarmonicTerm { l: 3, m: -2, c: 0.1 }] };
        let sys = ReturnMapSystem::spherical(f).unwrap();
        let pts = random_seeds(&sys.core, 50, 4).unwrap();
        let j = jet_cross_check(&sys, &pts).unwrap();
        assert!(j.max_gradient_error < 1e-8 && j.max_hessian_error < 1e-6, "{j:?}");
        assert!(radial_differential_check(&sys, &pts, 1e-4).unwrap() < 1e-6);
    }
}
