use nalgebra::{Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormal tangent frame at a point of S².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentChart {
    pub base: [f64; 3],
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

impl TangentChart {
    pub fn base(&self) -> Vector3<f64> {
        Vector3::from(self.base)
    }

    /// 3×2 matrix whose columns are the tangent basis vectors.
    pub fn basis(&self) -> Matrix3x2<f64> {
        Matrix3x2::from_columns(&[Vector3::from(self.e1), Vector3::from(self.e2)])
    }

    pub fn to_ambient(&self, v: &Vector2<f64>) -> Vector3<f64> {
        self.basis() * v
    }

    pub fn to_chart(&self, w: &Vector3<f64>) -> Vector2<f64> {
        self.basis().transpose() * w
    }

    /// Geodesic exponential map: exp_p(v) = cos|v| p + sin|v| v/|v|.
    pub fn exp(&self, v: &Vector2<f64>) -> Vector3<f64> {
        let w = self.to_ambient(v);
        let s = w.norm();
        let p = self.base();
        if s == 0.0 {
            return p;
        }
        (p * s.cos() + w * (s.sin() / s)).normalize()
    }

    /// Inverse of [`TangentChart::exp`] (defined away from the antipode).
    pub fn log(&self, q: &Vector3<f64>) -> Vector2<f64> {
        let p = self.base();
        let w = q - p * p.dot(q);
        let wn = w.norm();
        if wn == 0.0 {
            return Vector2::zeros();
        }
        let angle = wn.atan2(p.dot(q));
        self.to_chart(&w) * (angle / wn)
    }

    /// Differential of `exp` at chart vector `v`, as a 3×2 matrix.
    pub fn exp_differential(&self, v: &Vector2<f64>) -> Matrix3x2<f64> {
        let b = self.basis();
        let s = v.norm();
        if s == 0.0 {
            return b;
        }
        let p = self.base();
        let what = b * v / s;
        let (sin, cos) = s.sin_cos();
        let mut out = Matrix3x2::zeros();
        for i in 0..2 {
            let delta = b.column(i).into_owned();
            let radial = what.dot(&delta);
            let col = -p * (sin * radial) + what * (cos * radial) + (delta - what * radial) * (sin / s);
            out.set_column(i, &col);
        }
        out
    }
}

/// Deterministic tangent frame at `p`: Gram–Schmidt against the coordinate
/// axis least aligned with `p`, completed by `p × e1`.
pub fn frame_sphere(p: &Vector3<f64>) -> Result<TangentChart> {
    let n = p.norm();
    if !((n - 1.0).abs() <= 1e-10) {
        return Err(Error::InvalidInput(format!("point not on the unit sphere: |p| = {n}")));
    }
    let p = p / n;
    let axis = if p.x.abs() <= p.y.abs() && p.x.abs() <= p.z.abs() {
        Vector3::x()
    } else if p.y.abs() <= p.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = (axis - p * p.dot(&axis)).normalize();
    let e2 = p.cross(&e1);
    Ok(TangentChart { base: p.into(), e1: e1.into(), e2: e2.into() })
}

/// Nearest intersection of a ray with the unit sphere, by the stable
/// quadratic formula. A negative discriminant or a sphere lying entirely
/// behind the origin is a miss.
pub fn ray_first_hit_sphere(origin: &Vector3<f64>, direction: &Vector3<f64>) -> Result<Vector3<f64>> {
    let dn = direction.norm();
    if !((dn - 1.0).abs() < 1e-10) {
        return Err(Error::InvalidInput(format!("ray direction not normalized: |d| = {dn}")));
    }
    let b = origin.dot(direction);
    let c = origin.norm_squared() - 1.0;
    let disc = b * b - c;
    if disc < 0.0 {
        return Err(Error::RayMiss { tangential: false });
    }
    let sq = disc.sqrt();
    // roots of t² + 2bt + c: q = -(b + sign(b)√disc), t = q and c/q
    let q = -(b + b.signum() * sq);
    let (mut t1, mut t2) = if q != 0.0 { (q, c / q) } else { (-b, -b) };
    if t1 > t2 {
        std::mem::swap(&mut t1, &mut t2);
    }
    let t = if t1 >= 0.0 {
        t1
    } else if t2 >= 0.0 {
        t2
    } else {
        return Err(Error::RayMiss { tangential: false });
    };
    if disc == 0.0 {
        return Err(Error::RayMiss { tangential: true });
    }
    Ok((origin + direction * t).normalize())
}

/// `n` quasi-uniform points on S² (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_orthonormal() {
        let north = frame_sphere(&Vector3::z()).unwrap();
        assert_eq!(north.e1[2], 0.0);
        assert_eq!(north.e2[2], 0.0);
        let east = frame_sphere(&Vector3::x()).unwrap();
        assert_eq!(east.e1[0], 0.0);
        assert_eq!(east.e2[0], 0.0);
        for p in fibonacci_sphere(300) {
            let c = frame_sphere(&p).unwrap();
            let b = c.basis();
            let gram = b.transpose() * b;
            assert!((gram - nalgebra::Matrix2::identity()).amax() <= 1e-12);
            assert!((b.transpose() * p).amax() <= 1e-12);
        }
        assert!(frame_sphere(&Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn exp_log_roundtrip() {
        let c = frame_sphere(&Vector3::new(0.3, -0.4, 0.5).normalize()).unwrap();
        for &v in &[Vector2::new(1e-5, -2e-5), Vector2::new(0.3, 0.9), Vector2::new(-1.2, 0.1)] {
            let q = c.exp(&v);
            assert!((q.norm() - 1.0).abs() < 1e-15);
            assert!((c.log(&q) - v).norm() < 1e-13);
            // geodesic distance is the chart norm
            let angle = c.base().cross(&q).norm().atan2(c.base().dot(&q));
            assert!((angle - v.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn exp_differential_matches_finite_differences() {
        let c = frame_sphere(&Vector3::new(-0.2, 0.7, 0.1).normalize()).unwrap();
        let v = Vector2::new(0.2, -0.35);
        let j = c.exp_differential(&v);
        let h = 1e-6;
        for i in 0..2 {
            let mut e = Vector2::zeros();
            e[i] = h;
            let fd = (c.exp(&(v + e)) - c.exp(&(v - e))) / (2.0 * h);
            assert!((fd - j.column(i)).amax() < 1e-9);
        }
    }

    #[test]
    fn ray_sphere_cases() {
        let hit = ray_first_hit_sphere(&Vector3::new(2.0, 0.0, 0.0), &-Vector3::x()).unwrap();
        assert!((hit - Vector3::x()).norm() < 1e-15);
        assert_eq!(
            ray_first_hit_sphere(&Vector3::new(2.0, 0.0, 0.0), &Vector3::z()),
            Err(Error::RayMiss { tangential: false })
        );
    }

    #[test]
    fn ray_sphere_matches_marching() {
        let o = Vector3::new(1.7, 0.4, -0.2);
        let d = (Vector3::new(-1.0, -0.1, 0.15) - o * 0.0).normalize();
        let hit = ray_first_hit_sphere(&o, &d).unwrap();
        assert!((hit.norm() - 1.0).abs() <= 1e-14);
        // brute-force marching oracle: first sample inside the ball, then bisect
        let dt = 1e-4;
        let mut t = 0.0;
        while (o + d * (t + dt)).norm() > 1.0 {
            t += dt;
        }
        let (mut lo, mut hi) = (t, t + dt);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (o + d * mid).norm() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(((o + d * lo) - hit).norm() < 1e-12);
    }

    #[test]
    fn ray_sphere_is_rotation_invariant() {
        let o = Vector3::new(1.7, 0.4, -0.2);
        let d = Vector3::new(-0.9, -0.3, 0.2).normalize();
        let hit = ray_first_hit_sphere(&o, &d).unwrap();
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let hit_r = ray_first_hit_sphere(&(rot * o), &(rot * d)).unwrap();
        assert!((rot * hit - hit_r).norm() <= 1e-12);
    }
}
