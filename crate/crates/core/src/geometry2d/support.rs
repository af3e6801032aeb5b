use std::f64::consts::TAU;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::ray::unit_circle_entry;
use super::{perp, ray_first_hit_2d, unit, wrap_angle, Frame2D, ParametricCurve2D, RayHit2D, DEFAULT_BRACKET_SAMPLES};
use crate::error::{Error, Result};

/// Support function h(θ) of a planar convex body.
///
/// Fourier coefficients are `(a_k, b_k)` pairs for orders `k = 0..K`, giving
/// h(θ) = a₀ + Σ a_k cos kθ + b_k sin kθ (`b₀` is ignored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SupportFunction {
    SupportFourier(Vec<[f64; 2]>),
    Ellipse { a: f64, b: f64 },
}

/// h and its first three θ-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportJet {
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl SupportJet {
    /// Radius of curvature h + h''.
    pub fn radius(&self) -> f64 {
        self.h + self.h2
    }
}

impl SupportFunction {
    pub fn jet(&self, theta: f64) -> SupportJet {
        match self {
            SupportFunction::SupportFourier(coeffs) => {
                let mut j = SupportJet { h: 0.0, h1: 0.0, h2: 0.0, h3: 0.0 };
                for (k, &[a, b]) in coeffs.iter().enumerate() {
                    if k == 0 {
                        j.h += a;
                        continue;
                    }
                    let kf = k as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    let even = a * c + b * s;
                    let odd = -a * s + b * c;
                    j.h += even;
                    j.h1 += kf * odd;
                    j.h2 -= kf * kf * even;
                    j.h3 -= kf * kf * kf * odd;
                }
                j
            }
            SupportFunction::Ellipse { a, b } => {
                let mean = 0.5 * (a * a + b * b);
                let half = 0.5 * (a * a - b * b);
                let (s2, c2) = (2.0 * theta).sin_cos();
                let g = mean + half * c2;
                let g1 = -2.0 * half * s2;
                let g2 = -4.0 * half * c2;
                let g3 = 8.0 * half * s2;
                let h = g.sqrt();
                let h1 = g1 / (2.0 * h);
                let h2 = (0.5 * g2 - h1 * h1) / h;
                let h3 = (0.5 * g3 - 3.0 * h1 * h2) / h;
                SupportJet { h, h1, h2, h3 }
            }
        }
    }

    /// ∫ h dθ over [t0, t1].
    fn integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            SupportFunction::SupportFourier(coeffs) => {
                let prim = |t: f64| {
                    coeffs.iter().enumerate().fold(0.0, |acc, (k, &[a, b])| {
                        if k == 0 {
                            acc + a * t
                        } else {
                            let kf = k as f64;
                            let (s, c) = (kf * t).sin_cos();
                            acc + (a * s - b * c) / kf
                        }
                    })
                };
                prim(t1) - prim(t0)
            }
            SupportFunction::Ellipse { .. } => gauss_legendre(|t| self.jet(t).h, t0, t1),
        }
    }
}

/// Composite 8-point Gauss–Legendre rule on panels of width ≤ π/32.
fn gauss_legendre<F: Fn(f64) -> f64>(f: F, t0: f64, t1: f64) -> f64 {
    const NODES: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const WEIGHTS: [f64; 4] = [
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let panels = (((t1 - t0).abs() / (std::f64::consts::PI / 32.0)).ceil() as usize).max(1);
    let w = (t1 - t0) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = t0 + (p as f64 + 0.5) * w;
            let half = 0.5 * w;
            NODES
                .iter()
                .zip(WEIGHTS.iter())
                .map(|(&x, &wt)| wt * (f(mid - half * x) + f(mid + half * x)))
                .sum::<f64>()
                * half
        })
        .sum()
}

/// Convex core boundary parametrized by the outward normal angle θ:
/// c(θ) = h(θ)u(θ) + h'(θ)u⊥(θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportCurve2D {
    pub support: SupportFunction,
}

impl SupportCurve2D {
    pub fn new(support: SupportFunction) -> Self {
        Self { support }
    }

    pub fn unit_circle() -> Self {
        Self::new(SupportFunction::SupportFourier(vec![[1.0, 0.0]]))
    }

    pub fn jet(&self, theta: f64) -> SupportJet {
        self.support.jet(theta)
    }

    /// Radius of curvature h + h''; positive for strictly convex curves.
    pub fn radius_of_curvature(&self, theta: f64) -> f64 {
        self.jet(theta).radius()
    }

    pub fn point(&self, theta: f64) -> Vector2<f64> {
        let j = self.jet(theta);
        let u = unit(theta);
        u * j.h + perp(&u) * j.h1
    }

    /// Centre and radius when the support function has no order ≥ 2 terms.
    pub fn as_circle(&self) -> Option<(Vector2<f64>, f64)> {
        match &self.support {
            SupportFunction::SupportFourier(c) if c.len() <= 2 => {
                let centre = c.get(1).map(|&[a, b]| Vector2::new(a, b)).unwrap_or_else(Vector2::zeros);
                Some((centre, c.first().map_or(0.0, |v| v[0])))
            }
            SupportFunction::Ellipse { a, b } if a == b => Some((Vector2::zeros(), *a)),
            _ => None,
        }
    }

    /// First crossing of a ray with the curve: closed form for circles,
    /// bracketing otherwise. The hit parameter is the normal angle.
    pub fn first_hit(&self, origin: &Vector2<f64>, direction: &Vector2<f64>) -> Result<RayHit2D> {
        if let Some((centre, r)) = self.as_circle() {
            let t = unit_circle_entry(&((origin - centre) / r), &(direction / r))?;
            let point = origin + direction * t;
            let d = point - centre;
            return Ok(RayHit2D { t, param: d.y.atan2(d.x).rem_euclid(TAU), point });
        }
        ray_first_hit_2d(self, origin, direction, DEFAULT_BRACKET_SAMPLES)
    }

    /// Steiner point of the body; always interior.
    pub fn centroid(&self) -> Vector2<f64> {
        match &self.support {
            SupportFunction::SupportFourier(c) => c
                .get(1)
                .map(|&[a, b]| Vector2::new(a, b))
                .unwrap_or_else(Vector2::zeros),
            SupportFunction::Ellipse { .. } => Vector2::zeros(),
        }
    }

    /// Exact frame: normal u(θ), curvature 1/(h + h'').
    pub fn frame(&self, theta: f64) -> Result<Frame2D> {
        let j = self.jet(theta);
        let rho = j.radius();
        if !(rho > 0.0) {
            return Err(Error::GeometryDegenerate(format!(
                "support curve not strictly convex at θ = {theta}: h + h'' = {rho}"
            )));
        }
        let u = unit(theta);
        let t = perp(&u);
        let p = u * j.h + t * j.h1;
        Ok(Frame2D {
            theta,
            point: [p.x, p.y],
            tangent: [t.x, t.y],
            normal: [u.x, u.y],
            curvature: 1.0 / rho,
        })
    }

    /// Arclength from θ₀ to θ₁ (signed), ∫(h + h'')dθ.
    pub fn arclength(&self, t0: f64, t1: f64) -> f64 {
        self.support.integral(t0, t1) + self.jet(t1).h1 - self.jet(t0).h1
    }

    pub fn perimeter(&self) -> f64 {
        self.arclength(0.0, TAU)
    }

    /// Parameter reached by moving a signed arclength `s` from θ₀.
    pub fn advance(&self, theta0: f64, s: f64) -> f64 {
        if s == 0.0 {
            return theta0;
        }
        let mut theta = theta0 + s / self.radius_of_curvature(theta0);
        for _ in 0..60 {
            let residual = self.arclength(theta0, theta) - s;
            let step = residual / self.radius_of_curvature(theta);
            theta -= step;
            if step.abs() <= 1e-16 * (1.0 + theta.abs()) {
                break;
            }
        }
        theta
    }

    /// Signed arclength from θ₀ to θ along the shorter angular branch.
    pub fn arc_offset(&self, theta0: f64, theta: f64) -> f64 {
        self.arclength(theta0, theta0 + wrap_angle(theta - theta0))
    }

    /// Parameter θ whose boundary point lies on the normal line through `x`
    /// outside the body: x = c(θ) + r·u(θ), r ≥ 0.
    pub fn normal_foot(&self, x: &Vector2<f64>) -> Result<f64> {
        if let Some((centre, _)) = self.as_circle() {
            let d = x - centre;
            return Ok(d.y.atan2(d.x));
        }
        // g(θ) = cross(u, x - c(θ)) = cross(u, x) - h'(θ)
        let g = |t: f64| {
            let u = unit(t);
            u.x * x.y - u.y * x.x - self.jet(t).h1
        };
        let n = 512;
        let mut best: Option<(f64, f64)> = None;
        let mut prev = (0.0, g(0.0));
        for k in 1..=n {
            let t = TAU * k as f64 / n as f64;
            let cur = (t, g(t));
            if prev.1 == 0.0 || prev.1 * cur.1 < 0.0 {
                let root = bisect(&g, prev.0, cur.0, prev.1);
                let r = (x - self.point(root)).dot(&unit(root));
                if r >= -1e-12 && best.map_or(true, |(_, br)| r < br) {
                    best = Some((root, r));
                }
            }
            prev = cur;
        }
        best.map(|(t, _)| t).ok_or_else(|| {
            Error::GeometryDegenerate(format!("no normal foot found for point {x:?}"))
        })
    }
}

fn bisect<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64, glo: f64) -> f64 {
    if glo == 0.0 {
        return lo;
    }
    let slo = glo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl ParametricCurve2D for SupportCurve2D {
    fn eval(&self, t: f64) -> Vector2<f64> {
        self.point(t)
    }

    fn eval_d1(&self, t: f64) -> Vector2<f64> {
        perp(&unit(t)) * self.radius_of_curvature(t)
    }

    fn eval_d2(&self, t: f64) -> Vector2<f64> {
        let j = self.jet(t);
        let u = unit(t);
        perp(&u) * (j.h1 + j.h3) - u * j.radius()
    }

    fn frame(&self, t: f64) -> Result<Frame2D> {
        SupportCurve2D::frame(self, t)
    }
}

/// Result of a sampled strict-convexity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub samples: usize,
    /// Minimum of h + h'' over the samples.
    pub min_radius_of_curvature: f64,
    pub argmin_theta: f64,
    pub pass: bool,
}

/// Samples h + h'' on a uniform grid; passes iff the minimum is positive.
pub fn convexity_audit(curve: &SupportCurve2D, samples: usize) -> Result<ConvexityReport> {
    if samples < 64 {
        return Err(Error::InvalidInput(format!(
            "convexity audit needs at least 64 samples, got {samples}"
        )));
    }
    let (argmin_theta, min) = (0..samples)
        .map(|k| {
            let t = TAU * k as f64 / samples as f64;
            (t, curve.radius_of_curvature(t))
        })
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    Ok(ConvexityReport {
        samples,
        min_radius_of_curvature: min,
        argmin_theta,
        pass: min > 0.0,
    })
}
