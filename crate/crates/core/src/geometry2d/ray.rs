use std::f64::consts::TAU;

use nalgebra::Vector2;

use super::{cross, ParametricCurve2D};
use crate::error::{Error, Result};

/// Number of uniform parameter samples used to bracket crossings.
pub const DEFAULT_BRACKET_SAMPLES: usize = 512;

const TIE_TOL: f64 = 1e-12;
const GRAZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit2D {
    /// Distance along the (unit) direction.
    pub t: f64,
    /// Curve parameter of the hit.
    pub param: f64,
    pub point: Vector2<f64>,
}

/// First transversal crossing of the ray `origin + t·direction`, `t ≥ 0`,
/// with a closed parametric curve.
///
/// Crossings are bracketed by sign changes of the signed gap
/// `cross(γ(φ) − origin, direction)` over `samples` uniform parameters and
/// polished by safeguarded Newton. Contacts without a sign change are not
/// hits; if one is the only candidate the miss is flagged tangential.
pub fn ray_first_hit_2d<C: ParametricCurve2D + ?Sized>(
    curve: &C,
    origin: &Vector2<f64>,
    direction: &Vector2<f64>,
    samples: usize,
) -> Result<RayHit2D> {
    let norm = direction.norm();
    if !((norm - 1.0).abs() < 1e-10) {
        return Err(Error::InvalidInput(format!("ray direction not normalized: |d| = {norm}")));
    }
    let samples = samples.max(16);
    let gap = |phi: f64| cross(&(curve.eval(phi) - origin), direction);
    let gap_d1 = |phi: f64| cross(&curve.eval_d1(phi), direction);
    let along = |phi: f64| (curve.eval(phi) - origin).dot(direction);

    let params: Vec<f64> = (0..=samples).map(|k| TAU * k as f64 / samples as f64).collect();
    let gaps: Vec<f64> = params.iter().map(|&p| gap(p)).collect();

    let mut best: Option<RayHit2D> = None;
    let mut near_touch = false;
    for k in 0..samples {
        let (g0, g1) = (gaps[k], gaps[k + 1]);
        let crossing = (g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0);
        let exact = g0 == 0.0 && {
            let prev = gaps[if k == 0 { samples - 1 } else { k - 1 }];
            prev * g1 < 0.0
        };
        if !(crossing || exact) {
            if g0.abs() < GRAZE_TOL && along(params[k]) >= 0.0 {
                near_touch = true;
            }
            continue;
        }
        let phi = if exact {
            params[k]
        } else {
            polish(&gap, &gap_d1, params[k], params[k + 1], g0)
        };
        let t = along(phi);
        if t < -TIE_TOL {
            continue;
        }
        let t = t.max(0.0);
        let phi = phi.rem_euclid(TAU);
        let better = match best {
            None => true,
            Some(b) => t < b.t - TIE_TOL || ((t - b.t).abs() <= TIE_TOL && phi < b.param),
        };
        if better {
            best = Some(RayHit2D { t, param: phi, point: origin + direction * t });
        }
    }
    best.ok_or(Error::RayMiss { tangential: near_touch })
}

/// Smallest t ≥ 0 with |p + t·q| = 1 at a transversal crossing; the
/// closed-form route for circles and ellipses (after rescaling).
pub(crate) fn unit_circle_entry(p: &Vector2<f64>, q: &Vector2<f64>) -> Result<f64> {
    let a = q.norm_squared();
    let b = p.dot(q);
    let c = p.norm_squared() - 1.0;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return Err(Error::RayMiss { tangential: false });
    }
    if disc == 0.0 {
        return Err(Error::RayMiss { tangential: -b / a >= 0.0 });
    }
    let s = disc.sqrt();
    let k = -(b + b.signum() * s);
    let (mut t1, mut t2) = (k / a, c / k);
    if t1 > t2 {
        std::mem::swap(&mut t1, &mut t2);
    }
    if t1 >= -TIE_TOL {
        Ok(t1.max(0.0))
    } else if t2 >= -TIE_TOL {
        Ok(t2.max(0.0))
    } else {
        Err(Error::RayMiss { tangential: false })
    }
}

/// Safeguarded Newton on a sign-change bracket, run to machine precision.
fn polish<G, D>(g: &G, dg: &D, mut lo: f64, mut hi: f64, glo: f64) -> f64
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let slo = glo.signum();
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    for _ in 0..200 {
        let gx = g(x);
        if gx.abs() < best.1 {
            best = (x, gx.abs());
        }
        if gx == 0.0 {
            return x;
        }
        if gx.signum() == slo {
            lo = x;
        } else {
            hi = x;
        }
        let d = dg(x);
        let newton = x - gx / d;
        let next = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || hi - lo <= f64::EPSILON {
            let gn = g(next);
            return if gn.abs() < best.1 { next } else { best.0 };
        }
        x = next;
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry2d::{OuterCurve2D, SupportCurve2D, SupportFunction};

    #[test]
    fn circle_hits_and_misses() {
        let c = SupportCurve2D::unit_circle();
        let hit = ray_first_hit_2d(&c, &Vector2::new(3.0, 0.0), &Vector2::new(-1.0, 0.0), 512)
            .unwrap();
        assert!((hit.t - 2.0).abs() < 1e-15);
        assert!((hit.point - Vector2::new(1.0, 0.0)).norm() < 1e-15);
        let miss = ray_first_hit_2d(&c, &Vector2::new(3.0, 0.0), &Vector2::new(0.0, 1.0), 512);
        assert_eq!(miss, Err(Error::RayMiss { tangential: false }));
    }

    #[test]
    fn grazing_ray_is_tangential_miss() {
        let c = SupportCurve2D::unit_circle();
        // the line y = 1 touches the circle at θ = π/2 without crossing
        let miss = ray_first_hit_2d(&c, &Vector2::new(-3.0, 1.0), &Vector2::new(1.0, 0.0), 512);
        assert_eq!(miss, Err(Error::RayMiss { tangential: true }));
    }

    /// Closed-form ray–ellipse intersection (smallest nonnegative root).
    fn ellipse_oracle(a: f64, b: f64, o: Vector2<f64>, d: Vector2<f64>) -> f64 {
        let qa = (d.x / a).powi(2) + (d.y / b).powi(2);
        let qb = 2.0 * (o.x * d.x / (a * a) + o.y * d.y / (b * b));
        let qc = (o.x / a).powi(2) + (o.y / b).powi(2) - 1.0;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let (t1, t2) = ((-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa));
        if t1 >= 0.0 {
            t1
        } else {
            t2
        }
    }

    #[test]
    fn ellipse_hits_match_quadratic() {
        let e = OuterCurve2D::Ellipse { a: 2.0, b: 1.5 };
        let o = Vector2::new(1.2, 0.5);
        for k in 0..64 {
            let ang = 0.1 + TAU * k as f64 / 64.0;
            let d = Vector2::new(ang.cos(), ang.sin());
            let hit = ray_first_hit_2d(&e, &o, &d, 512).unwrap();
            assert!((hit.t - ellipse_oracle(2.0, 1.5, o, d)).abs() < 1e-10);
            let p = hit.point;
            assert!((p.x * p.x / 4.0 + p.y * p.y / 2.25 - 1.0).abs() < 1e-10);
        }
        // the same ellipse given as a support curve
        let s = SupportCurve2D::new(SupportFunction::Ellipse { a: 2.0, b: 1.5 });
        let d = Vector2::new(-0.6, 0.8);
        let out = Vector2::new(4.0, -3.0);
        let hit = ray_first_hit_2d(&s, &out, &d, 512).unwrap();
        assert!((hit.t - ellipse_oracle(2.0, 1.5, out, d)).abs() < 1e-10);
    }

    #[test]
    fn entry_point_is_first_of_two_crossings() {
        let c = SupportCurve2D::unit_circle();
        let hit = ray_first_hit_2d(&c, &Vector2::new(-2.0, 0.3), &Vector2::new(1.0, 0.0), 512)
            .unwrap();
        assert!((hit.point.x + (1.0f64 - 0.09).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_unnormalized_direction() {
        let c = SupportCurve2D::unit_circle();
        let r = ray_first_hit_2d(&c, &Vector2::new(3.0, 0.0), &Vector2::new(-2.0, 0.0), 512);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn closed_form_paths_agree_with_bracketing() {
        let ellipse = OuterCurve2D::Ellipse { a: 2.0, b: 1.5 };
        let circle = SupportCurve2D::new(SupportFunction::SupportFourier(vec![[0.8, 0.0], [0.1, -0.2]]));
        let o = Vector2::new(0.3, -0.1);
        for k in 0..48 {
            let a = 0.131 * k as f64;
            let d = Vector2::new(a.cos(), a.sin());
            let fast = ellipse.first_hit(&o, &d).unwrap();
            let slow = ray_first_hit_2d(&ellipse, &o, &d, DEFAULT_BRACKET_SAMPLES).unwrap();
            assert!((fast.t - slow.t).abs() < 1e-12 && (fast.param - slow.param).abs() < 1e-10);
            let far = Vector2::new(3.0, 2.0);
            let inward = (Vector2::new(0.1, -0.2) - far + Vector2::new(0.3 * a.sin(), 0.3 * a.cos())).normalize();
            let fast = circle.first_hit(&far, &inward).unwrap();
            let slow = ray_first_hit_2d(&circle, &far, &inward, DEFAULT_BRACKET_SAMPLES).unwrap();
            assert!((fast.t - slow.t).abs() < 1e-12 && (fast.param - slow.param).abs() < 1e-10);
        }
        assert!(circle.first_hit(&Vector2::new(3.0, 0.0), &Vector2::new(0.0, 1.0)).is_err());
    }
}
