use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ReturnMapSystem;
use crate::boundary::{BoundaryPoint, Core};
use crate::thickness::ThicknessField;

/// Sampled admissibility of a configuration: positive thickness, Φ an
/// immersion, every inward normal of ∂Ω reaching the core, and no fold of
/// the return map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub min_thickness: f64,
    pub argmin_thickness: Vec<f64>,
    pub positivity_pass: bool,
    /// Smallest area (length) stretch |det DΦ| of the radial map.
    pub min_radial_stretch: f64,
    pub immersion_pass: bool,
    /// Explicit outer curves only: every sampled core point lies inside.
    pub containment_pass: bool,
    /// Planar only: smallest normal-transport factor 1 − d·κ_Ω.
    pub min_focal_factor: Option<f64>,
    /// Smallest det DF over the samples where F is defined.
    pub min_return_det: Option<f64>,
    /// Parameters of samples with det DF ≤ 0 (first few).
    pub folds: Vec<Vec<f64>>,
    pub fold_count: usize,
    pub oc_pass_rate: f64,
    pub oc_failures: Vec<Vec<f64>>,
    pub oc_failure_count: usize,
    pub pass: bool,
}

const LISTED: usize = 8;

struct Sample {
    params: Vec<f64>,
    thickness: Option<f64>,
    stretch: Option<f64>,
    inside: bool,
    focal: Option<f64>,
    reaches_core: bool,
    det: Option<f64>,
}

fn probe(sys: &ReturnMapSystem, c: &BoundaryPoint) -> Sample {
    let params = c.params();
    let inside = match (&sys.field, c) {
        (ThicknessField::RayCast(outer), BoundaryPoint::Curve { point, .. }) => outer.contains(point),
        _ => true,
    };
    let jet = sys.thickness_jet(c).ok();
    let stretch = jet.as_ref().map(|j| {
        let k = sys.core.curvature(c);
        let n = j.gradient.len();
        let g = nalgebra::DMatrix::from_fn(n, n, |a, b| {
            let diag = if a == b { (1.0 + j.value * k[a]).powi(2) } else { 0.0 };
            diag + j.gradient[a] * j.gradient[b]
        });
        g.determinant().max(0.0).sqrt()
    });
    let focal = match (&sys.core, &jet) {
        (Core::Curve(_), Some(j)) => sys.outer_curvatures(c).ok().map(|k| 1.0 - j.value * k[0]),
        _ => None,
    };
    let reaches_core = jet.is_some() && sys.return_map(c).is_ok();
    let det = if reaches_core {
        sys.return_jacobian(c).ok().map(|jac| jac.matrix.determinant())
    } else {
        None
    };
    Sample { params, thickness: jet.map(|j| j.value), stretch, inside, focal, reaches_core, det }
}

/// Audits `samples` boundary points (default 1024 on curves, 2048 on the
/// sphere). Sampling runs in parallel; the report is reduced in sample
/// order.
pub fn admissibility_audit(sys: &ReturnMapSystem, samples: Option<usize>) -> AdmissibilityReport {
    let n = samples.unwrap_or(match sys.core {
        Core::Curve(_) => 1024,
        Core::UnitSphere => 2048,
    });
    let points = sys.core.sample(n);
    let probes: Vec<Sample> = points.par_iter().map(|c| probe(sys, c)).collect();

    let floor = sys.tolerances.floor;
    let mut min_thickness = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut positivity = true;
    let mut min_stretch = f64::INFINITY;
    let mut containment = true;
    let mut min_focal: Option<f64> = None;
    let mut min_det: Option<f64> = None;
    let mut folds = Vec::new();
    let mut fold_count = 0;
    let mut oc_failures = Vec::new();
    let mut oc_failure_count = 0;
    for s in &probes {
        match s.thickness {
            Some(d) => {
                if d < min_thickness {
                    min_thickness = d;
                    argmin = s.params.clone();
                }
                positivity &= d > floor;
            }
            None => positivity = false,
        }
        min_stretch = min_stretch.min(s.stretch.unwrap_or(0.0));
        containment &= s.inside;
        if let Some(f) = s.focal {
            min_focal = Some(min_focal.map_or(f, |m| m.min(f)));
        }
        if let Some(det) = s.det {
            min_det = Some(min_det.map_or(det, |m| m.min(det)));
            if det <= 0.0 {
                fold_count += 1;
                if folds.len() < LISTED {
                    folds.push(s.params.clone());
                }
            }
        }
        if !s.reaches_core {
            oc_failure_count += 1;
            if oc_failures.len() < LISTED {
                oc_failures.push(s.params.clone());
            }
        }
    }
    let immersion = min_stretch > 1e-10;
    let oc_pass_rate = if n == 0 { 0.0 } else { (n - oc_failure_count) as f64 / n as f64 };
    AdmissibilityReport {
        samples: n,
        min_thickness,
        argmin_thickness: argmin,
        positivity_pass: positivity,
        min_radial_stretch: min_stretch,
        immersion_pass: immersion,
        containment_pass: containment,
        min_focal_factor: min_focal,
        min_return_det: min_det,
        folds,
        fold_count,
        oc_pass_rate,
        oc_failures,
        oc_failure_count,
        pass: positivity && immersion && containment && fold_count == 0 && oc_failure_count == 0,
    }
}
