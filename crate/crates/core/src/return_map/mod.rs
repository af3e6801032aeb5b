//! The round trip F = π∘Φ: out along the core normal by d (radial map Φ),
//! back along the inward normal of the outer boundary (reciprocal map π).

mod audit;

pub use audit::{admissibility_audit, AdmissibilityReport};

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPoint, Chart, Core};
use crate::error::{Error, Result};
use crate::fd::central3_vector;
use crate::geometry2d::{cross, perp, unit, OuterCurve2D, ParametricCurve2D, SupportCurve2D};
use crate::sphere::{ray_first_hit_sphere, SphericalHarmonicField};
use crate::thickness::{ThicknessField, ThicknessJet};

/// Numerical tolerances shared by the solvers and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Target residual for ray–curve root polishing.
    pub ray_residual: f64,
    /// Step of finite-difference thickness jets.
    pub fd_step: f64,
    /// Step of the finite-difference return Jacobian.
    pub jacobian_step: f64,
    /// Gradient norm below which an orbit point counts as critical.
    pub tol_grad: f64,
    /// Displacement below which an orbit counts as stationary.
    pub tol_disp: f64,
    /// Allowed increase of d per step before the monotonicity audit objects.
    pub slack: f64,
    /// Thickness values at or below this are treated as contact.
    pub floor: f64,
    /// Relative Hessian-eigenvalue threshold for degeneracy.
    pub degeneracy_rel: f64,
    /// Half-width of the neutral band around |eig(DF)| = 1.
    pub neutral_band: f64,
    /// Gradient norm targeted by Newton refinement of equilibria.
    pub newton_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ray_residual: 1e-12,
            fd_step: 1e-4,
            jacobian_step: 1e-5,
            tol_grad: 1e-8,
            tol_disp: 1e-9,
            slack: 1e-10,
            floor: 1e-6,
            degeneracy_rel: 1e-6,
            neutral_band: 1e-6,
            newton_tol: 1e-10,
        }
    }
}

/// Two-step discrepancy above which a Jacobian is flagged as unconverged.
pub const JACOBIAN_WARN: f64 = 1e-4;

/// Finite-difference return Jacobian in the intrinsic chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub matrix: DMatrix<f64>,
    /// Max discrepancy between the raw estimates at steps h and h/2.
    pub discrepancy: f64,
    pub converged: bool,
}

/// Where Φ(c) lands and which way the inward normal of ∂Ω points there.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterSample {
    pub point: DVector<f64>,
    pub inward_normal: DVector<f64>,
}

/// Core boundary, thickness field and tolerances: everything needed to
/// evaluate Φ, π and F.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMapSystem {
    pub core: Core,
    pub field: ThicknessField,
    pub tolerances: Tolerances,
}

fn v2(v: &Vector2<f64>) -> DVector<f64> {
    DVector::from_vec(vec![v.x, v.y])
}

fn v3(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_vec(vec![v.x, v.y, v.z])
}

impl ReturnMapSystem {
    pub fn new(core: Core, field: ThicknessField, tolerances: Tolerances) -> Result<Self> {
        if let Core::Curve(c) = &core {
            let report = crate::geometry2d::convexity_audit(c, 1024)?;
            if !report.pass {
                return Err(Error::GeometryDegenerate(format!(
                    "core is not strictly convex: min h + h'' = {}",
                    report.min_radius_of_curvature
                )));
            }
        }
        field.validate(&core)?;
        Ok(Self { core, field, tolerances })
    }

    /// Unit circle inside the circle of radius `r` (d ≡ r − 1).
    pub fn concentric_circles(r: f64) -> Result<Self> {
        Self::new(
            Core::Curve(SupportCurve2D::unit_circle()),
            ThicknessField::Fourier(vec![[r - 1.0, 0.0]]),
            Tolerances::default(),
        )
    }

    /// Unit circle inside the ellipse x²/a² + y²/b² = 1, d by ray casting.
    pub fn circle_in_ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(
            Core::Curve(SupportCurve2D::unit_circle()),
            ThicknessField::RayCast(OuterCurve2D::Ellipse { a, b }),
            Tolerances::default(),
        )
    }

    /// Unit sphere inside the sphere of radius `r`.
    pub fn concentric_spheres(r: f64) -> Result<Self> {
        Self::spherical(SphericalHarmonicField::constant(r - 1.0))
    }

    pub fn spherical(field: SphericalHarmonicField) -> Result<Self> {
        Self::new(Core::UnitSphere, ThicknessField::SphericalHarmonic(field), Tolerances::default())
    }

    /// Fourier thickness on the unit circle.
    pub fn planar_fourier(coeffs: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(Core::Curve(SupportCurve2D::unit_circle()), ThicknessField::Fourier(coeffs), Tolerances::default())
    }

    /// Manifold dimension of ∂C.
    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    pub fn thickness(&self, c: &BoundaryPoint) -> Result<f64> {
        self.field.value(&self.core, c)
    }

    pub fn thickness_jet(&self, c: &BoundaryPoint) -> Result<ThicknessJet> {
        self.field.jet(&self.core, c)
    }

    /// Finite-difference jet at the configured step.
    pub fn thickness_jet_fd(&self, c: &BoundaryPoint) -> Result<ThicknessJet> {
        self.field.jet_fd(&self.core, c, self.tolerances.fd_step)
    }

    /// Φ(c) = c + d(c)ν(c).
    pub fn radial_map(&self, c: &BoundaryPoint) -> Result<DVector<f64>> {
        let d = self.thickness(c)?;
        Ok(c.ambient_vector() + c.normal() * d)
    }

    /// DΦ(c)v = (I + d S_C)v + ⟨∇d, v⟩ν for a chart vector v, with the shape
    /// operator S_C = Dν positive on convex cores.
    pub fn radial_differential(&self, c: &BoundaryPoint, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!("tangent vector must have {} components", self.dim())));
        }
        let jet = self.thickness_jet(c)?;
        let chart = self.core.chart(c)?;
        let basis = self.core.chart_basis(&chart);
        let kappa = self.core.curvature(c);
        let mut out = c.normal() * jet.gradient.dot(v);
        for (i, e) in basis.iter().enumerate() {
            out += e * (v[i] * (1.0 + jet.value * kappa[i]));
        }
        Ok(out)
    }

    /// Φ(c) and the inward unit normal of ∂Ω there, from analytic tangents.
    pub fn outer_sample(&self, c: &BoundaryPoint) -> Result<OuterSample> {
        match (c, &self.core) {
            (BoundaryPoint::Curve { theta, point }, Core::Curve(curve)) => {
                let j = self.field.theta_jet(curve, *theta)?;
                let u = unit(*theta);
                let x = point + u * j.d;
                let tangent = match (&self.field, j.outer_param) {
                    (ThicknessField::RayCast(outer), Some(phi)) => outer.eval_d1(phi),
                    _ => {
                        let rho = curve.radius_of_curvature(*theta);
                        perp(&u) * (rho + j.d) + u * j.d1
                    }
                };
                let n = self.orient(v2(&x), v2(&perp(&tangent)), tangent.norm())?;
                Ok(OuterSample { point: v2(&x), inward_normal: n })
            }
            (BoundaryPoint::Sphere { point }, Core::UnitSphere) => {
                let jet = self.thickness_jet(c)?;
                let Chart::Sphere(tc) = self.core.chart(c)? else { unreachable!() };
                let rho = 1.0 + jet.value;
                let grad = tc.to_ambient(&Vector2::new(jet.gradient[0], jet.gradient[1]));
                let outward = point * rho - grad;
                let x = point * rho;
                let n = self.orient(v3(&x), v3(&(-outward)), outward.norm())?;
                Ok(OuterSample { point: v3(&x), inward_normal: n })
            }
            _ => Err(Error::InvalidInput("boundary point does not belong to this core".into())),
        }
    }

    /// Normalizes a candidate inward normal and fixes its sign to point
    /// toward the core centroid.
    fn orient(&self, x: DVector<f64>, n: DVector<f64>, speed: f64) -> Result<DVector<f64>> {
        let len = n.norm();
        if !(speed > 1e-10 && len > 1e-10) {
            return Err(Error::GeometryDegenerate(format!(
                "outer boundary has a degenerate tangent at {:?}",
                x.as_slice()
            )));
        }
        let n = n / len;
        let radial = x - self.core.centroid();
        Ok(if n.dot(&radial) > 0.0 { -n } else { n })
    }

    /// Boundary point c with Φ(c) = x, for x on ∂Ω.
    pub fn radial_preimage(&self, x: &DVector<f64>) -> Result<BoundaryPoint> {
        let off = |c: BoundaryPoint| -> Result<BoundaryPoint> {
            let gap = (self.radial_map(&c)? - x).norm();
            if gap > 1e-8 * (1.0 + x.norm()) {
                return Err(Error::InvalidInput(format!(
                    "point {:?} is not on the outer boundary (gap {gap:e})",
                    x.as_slice()
                )));
            }
            Ok(c)
        };
        match &self.core {
            Core::Curve(curve) => {
                if x.len() != 2 {
                    return Err(Error::InvalidInput("expected a planar point".into()));
                }
                let theta = curve.normal_foot(&Vector2::new(x[0], x[1]))?;
                off(self.core.curve_point(theta)?)
            }
            Core::UnitSphere => {
                if x.len() != 3 {
                    return Err(Error::InvalidInput("expected a spatial point".into()));
                }
                let p = Vector3::new(x[0], x[1], x[2]);
                off(self.core.sphere_point(&p.normalize())?)
            }
        }
    }

    /// Inward unit normal of ∂Ω at x.
    pub fn inward_normal_outer(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if let (ThicknessField::RayCast(outer), 2) = (&self.field, x.len()) {
            let xv = Vector2::new(x[0], x[1]);
            let (phi, residual) = outer.locate(&xv);
            if residual.abs() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "point {:?} is not on the outer boundary (residual {residual:e})",
                    x.as_slice()
                )));
            }
            let t = outer.eval_d1(phi);
            return self.orient(x.clone(), v2(&perp(&t)), t.norm());
        }
        let c = self.radial_preimage(x)?;
        Ok(self.outer_sample(&c)?.inward_normal)
    }

    /// First hit on ∂C of the ray from x along the direction `n`.
    pub fn reciprocal_along(&self, x: &DVector<f64>, n: &DVector<f64>) -> Result<BoundaryPoint> {
        let violation = || Error::OcViolation { point: x.as_slice().to_vec(), normal: n.as_slice().to_vec() };
        match &self.core {
            Core::Curve(curve) => {
                let hit = curve
                    .first_hit(&Vector2::new(x[0], x[1]), &Vector2::new(n[0], n[1]))
                    .map_err(|e| match e {
                        Error::RayMiss { .. } => violation(),
                        other => other,
                    })?;
                self.core.curve_point(hit.param)
            }
            Core::UnitSphere => {
                let p = ray_first_hit_sphere(&Vector3::new(x[0], x[1], x[2]), &Vector3::new(n[0], n[1], n[2]))
                    .map_err(|e| match e {
                        Error::RayMiss { .. } => violation(),
                        other => other,
                    })?;
                Ok(BoundaryPoint::Sphere { point: p })
            }
        }
    }

    /// π(x): follow the inward normal of ∂Ω from x to its first hit on ∂C.
    pub fn reciprocal_map(&self, x: &DVector<f64>) -> Result<BoundaryPoint> {
        let n = self.inward_normal_outer(x)?;
        self.reciprocal_along(x, &n)
    }

    /// F(c) = π(Φ(c)).
    pub fn return_map(&self, c: &BoundaryPoint) -> Result<BoundaryPoint> {
        let s = self.outer_sample(c)?;
        self.reciprocal_along(&s.point, &s.inward_normal)
    }

    /// DF(c) by central differences of v ↦ log_c F(exp_c v) at the
    /// configured step, with one Richardson level.
    pub fn return_jacobian(&self, c: &BoundaryPoint) -> Result<Jacobian> {
        self.return_jacobian_with_step(c, self.tolerances.jacobian_step)
    }

    pub fn return_jacobian_with_step(&self, c: &BoundaryPoint, h: f64) -> Result<Jacobian> {
        let chart = self.core.chart(c)?;
        let n = self.dim();
        let mut matrix = DMatrix::zeros(n, n);
        let mut discrepancy: f64 = 0.0;
        for j in 0..n {
            let mut g = |t: f64| -> Result<DVector<f64>> {
                let mut v = DVector::zeros(n);
                v[j] = t;
                let q = self.core.exp(&chart, &v)?;
                self.core.log(&chart, &self.return_map(&q)?)
            };
            let diff = central3_vector(&mut g, h)?;
            matrix.set_column(j, &diff.value);
            discrepancy = discrepancy.max(diff.discrepancy);
        }
        Ok(Jacobian { matrix, discrepancy, converged: discrepancy <= JACOBIAN_WARN })
    }

    /// Principal curvatures of ∂Ω at Φ(c), positive where ∂Ω is convex.
    ///
    /// Planar curvature is exact everywhere; on the sphere the values are
    /// (ρ − hᵢ)/ρ² with ρ = 1 + d and hᵢ the Hessian eigenvalues, which
    /// holds at critical points of d only.
    pub fn outer_curvatures(&self, c: &BoundaryPoint) -> Result<Vec<f64>> {
        match (c, &self.core) {
            (BoundaryPoint::Curve { theta, .. }, Core::Curve(curve)) => {
                let j = self.field.theta_jet(curve, *theta)?;
                let sj = curve.jet(*theta);
                let rho = sj.radius();
                let rho1 = sj.h1 + sj.h3;
                let u = unit(*theta);
                let up = perp(&u);
                let d1 = up * (rho + j.d) + u * j.d1;
                let d2 = up * (rho1 + 2.0 * j.d1) + u * (j.d2 - rho - j.d);
                Ok(vec![cross(&d1, &d2) / d1.norm().powi(3)])
            }
            (BoundaryPoint::Sphere { .. }, Core::UnitSphere) => {
                let jet = self.thickness_jet(c)?;
                if jet.gradient_norm() > 1e-6 {
                    return Err(Error::NotApplicable(
                        "outer principal curvatures on the sphere are evaluated at critical points only".into(),
                    ));
                }
                let rho = 1.0 + jet.value;
                let (h, _) = crate::linalg::symmetric_eigen(&jet.hessian);
                Ok(h.iter().map(|hi| (rho - hi) / (rho * rho)).collect())
            }
            _ => Err(Error::InvalidInput("boundary point does not belong to this core".into())),
        }
    }
}
