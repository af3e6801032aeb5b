//! Central finite-difference stencils with one level of Richardson
//! extrapolation.

use nalgebra::DVector;

use crate::error::Result;

/// Five-point first derivative, O(h⁴).
pub fn first5<F>(f: &mut F, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (m2, m1, p1, p2) = (f(-2.0 * h)?, f(-h)?, f(h)?, f(2.0 * h)?);
    Ok((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h))
}

/// Five-point second derivative, O(h⁴). `f0` is the value at the center.
pub fn second5<F>(f: &mut F, f0: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (m2, m1, p1, p2) = (f(-2.0 * h)?, f(-h)?, f(h)?, f(2.0 * h)?);
    Ok((-m2 + 16.0 * m1 - 30.0 * f0 + 16.0 * p1 - p2) / (12.0 * h * h))
}

/// Richardson combination for an O(h⁴) scheme evaluated at h and h/2.
pub fn richardson4(coarse: f64, fine: f64) -> f64 {
    (16.0 * fine - coarse) / 15.0
}

/// Five-point first derivative, extrapolated once.
pub fn first5_richardson<F>(f: &mut F, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let coarse = first5(f, h)?;
    let fine = first5(f, 0.5 * h)?;
    Ok(richardson4(coarse, fine))
}

/// Five-point second derivative, extrapolated once.
pub fn second5_richardson<F>(f: &mut F, f0: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let coarse = second5(f, f0, h)?;
    let fine = second5(f, f0, 0.5 * h)?;
    Ok(richardson4(coarse, fine))
}

/// Outcome of a vector-valued central difference taken at h and h/2.
#[derive(Debug, Clone)]
pub struct CentralDiff {
    /// Richardson-extrapolated derivative.
    pub value: DVector<f64>,
    /// Max-norm discrepancy between the raw h and h/2 estimates.
    pub discrepancy: f64,
}

/// Three-point central difference of a vector-valued map at h and h/2,
/// combined with one Richardson level (O(h²) → O(h⁴)).
pub fn central3_vector<F>(f: &mut F, h: f64) -> Result<CentralDiff>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    let coarse = (f(h)? - f(-h)?) / (2.0 * h);
    let fine = (f(0.5 * h)? - f(-0.5 * h)?) / h;
    let discrepancy = (&fine - &coarse).amax();
    let value = (&fine * 4.0 - &coarse) / 3.0;
    Ok(CentralDiff { value, discrepancy })
}
