//! Orbits of the return map, their monotonicity and cycle audits, and
//! basin scans against a Morse catalog.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPoint, Core};
use crate::error::{Error, Result};
use crate::morse::MorseCatalog;
use crate::return_map::ReturnMapSystem;

/// Loops whose diameter stays within this multiple of `dist_tol` are
/// treated as fixed-point jitter rather than cycles.
pub const CYCLE_DIAMETER_FACTOR: f64 = 10.0;
/// Seeds land on the catalog entry within this multiple of `tol_disp`.
pub const ASSIGN_FACTOR: f64 = 10.0;
/// Offset applied to grid seeds by the generic-basin option.
pub const BASIN_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitParams {
    pub max_steps: usize,
    pub tol_disp: f64,
    pub tol_grad: f64,
}

impl Default for OrbitParams {
    fn default() -> Self {
        Self { max_steps: 10_000, tol_disp: 1e-9, tol_grad: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub step: usize,
    pub params: Vec<f64>,
    pub point: Vec<f64>,
    pub d: f64,
    /// ½d².
    pub lyapunov: f64,
    pub grad_norm: f64,
    /// |c_{n+1} − c_n|; absent when F failed at this iterate.
    pub disp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "message", rename_all = "snake_case")]
pub enum OrbitStatus {
    Converged,
    MaxSteps,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub seed: Vec<f64>,
    pub records: Vec<OrbitRecord>,
    pub status: OrbitStatus,
    /// Parameters and ambient point of the limit, when converged.
    pub limit_params: Option<Vec<f64>>,
    pub limit_point: Option<Vec<f64>>,
}

impl OrbitTrace {
    pub fn converged(&self) -> bool {
        self.status == OrbitStatus::Converged
    }

    pub fn steps(&self) -> usize {
        self.records.last().map_or(0, |r| r.step)
    }
}

fn record(sys: &ReturnMapSystem, step: usize, c: &BoundaryPoint, disp: Option<f64>) -> Result<OrbitRecord> {
    let jet = sys.thickness_jet(c)?;
    Ok(OrbitRecord {
        step,
        params: c.params(),
        point: c.ambient(),
        d: jet.value,
        lyapunov: 0.5 * jet.value * jet.value,
        grad_norm: jet.gradient_norm(),
        disp,
    })
}

/// Iterates F from `c0` until |c_{n+1} − c_n| ≤ tol_disp and
/// |∇d(c_n)| ≤ tol_grad, or until `max_steps` applications of F. The
/// trace holds c₀ … c_N; each record carries the displacement to its
/// successor.
pub fn iterate_orbit(sys: &ReturnMapSystem, c0: &BoundaryPoint, params: &OrbitParams) -> Result<OrbitTrace> {
    if params.max_steps == 0 {
        return Err(Error::InvalidInput("max_steps must be at least 1".into()));
    }
    let mut records = Vec::new();
    let mut c = *c0;
    let mut status = OrbitStatus::MaxSteps;
    let mut limit = None;
    for n in 0..=params.max_steps {
        let next = sys.return_map(&c);
        let disp = next.as_ref().ok().map(|q| q.distance(&c));
        let rec = match record(sys, n, &c, disp) {
            Ok(r) => r,
            Err(e) => {
                status = OrbitStatus::Error(e.to_string());
                break;
            }
        };
        let grad = rec.grad_norm;
        records.push(rec);
        let next = match next {
            Ok(q) => q,
            Err(e) => {
                status = OrbitStatus::Error(e.to_string());
                break;
            }
        };
        if disp.unwrap_or(f64::INFINITY) <= params.tol_disp && grad <= params.tol_grad {
            status = OrbitStatus::Converged;
            limit = Some(c);
            break;
        }
        if n == params.max_steps {
            break;
        }
        c = next;
    }
    Ok(OrbitTrace {
        seed: c0.params(),
        records,
        status,
        limit_params: limit.map(|l| l.params()),
        limit_point: limit.map(|l| l.ambient()),
    })
}

/// Orbits from every seed, in seed order.
pub fn iterate_orbits(sys: &ReturnMapSystem, seeds: &[BoundaryPoint], params: &OrbitParams) -> Result<Vec<OrbitTrace>> {
    seeds.par_iter().map(|s| iterate_orbit(sys, s, params)).collect()
}

/// The direction in which d is expected to move along orbits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovSense {
    #[default]
    Decreasing,
    Increasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub before: f64,
    pub after: f64,
    /// Signed move of d against the expected sense.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub sense: LyapunovSense,
    pub slack: f64,
    pub steps: usize,
    pub violations: Vec<Violation>,
    /// Steps where d did not change although |∇d| exceeded tol_grad.
    pub stalls: Vec<usize>,
    /// Largest move against the expected sense (negative when none).
    pub max_excess: f64,
    pub pass: bool,
}

/// Flags every step where d moves against `sense` by more than `slack`,
/// and every step where d stays exactly constant at a noncritical point.
pub fn monotonicity_audit(trace: &OrbitTrace, slack: f64, tol_grad: f64, sense: LyapunovSense) -> MonotonicityReport {
    let mut violations = Vec::new();
    let mut stalls = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    for w in trace.records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let excess = match sense {
            LyapunovSense::Decreasing => b.d - a.d,
            LyapunovSense::Increasing => a.d - b.d,
        };
        max_excess = max_excess.max(excess);
        if excess > slack {
            violations.push(Violation { step: a.step, before: a.d, after: b.d, excess });
        }
        if b.d == a.d && a.grad_norm > tol_grad {
            stalls.push(a.step);
        }
    }
    MonotonicityReport {
        sense,
        slack,
        steps: trace.records.len().saturating_sub(1),
        pass: violations.is_empty() && stalls.is_empty(),
        violations,
        stalls,
        max_excess,
    }
}

/// Nonincreasing-d audit.
pub fn descent_audit(trace: &OrbitTrace, slack: f64, tol_grad: f64) -> MonotonicityReport {
    monotonicity_audit(trace, slack, tol_grad, LyapunovSense::Decreasing)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCandidate {
    pub trace: usize,
    pub start_step: usize,
    pub period: usize,
    pub return_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub traces: usize,
    pub dist_tol: f64,
    /// Traces ending on a fixed point (period 1, trivial).
    pub fixed_point_traces: usize,
    pub cycles: Vec<CycleCandidate>,
    pub pass: bool,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Pairwise scan of each trace for a return within `dist_tol` to an
/// earlier iterate that is not itself fixed (its step moved more than
/// `dist_tol`). Loops of diameter ≤ 10·dist_tol are ignored.
pub fn cycle_audit(traces: &[OrbitTrace], dist_tol: f64) -> CycleReport {
    let found: Vec<Option<CycleCandidate>> = traces
        .par_iter()
        .enumerate()
        .map(|(ti, t)| {
            let pts: Vec<&[f64]> = t.records.iter().map(|r| r.point.as_slice()).collect();
            for i in 0..pts.len() {
                let moving = match t.records[i].disp {
                    Some(d) => d > dist_tol,
                    None => false,
                };
                if !moving {
                    continue;
                }
                let mut diameter: f64 = 0.0;
                for j in i + 1..pts.len() {
                    let r = dist(pts[i], pts[j]);
                    if r <= dist_tol && diameter > CYCLE_DIAMETER_FACTOR * dist_tol {
                        return Some(CycleCandidate { trace: ti, start_step: i, period: j - i, return_distance: r });
                    }
                    diameter = diameter.max(r);
                }
            }
            None
        })
        .collect();
    let cycles: Vec<CycleCandidate> = found.into_iter().flatten().collect();
    CycleReport {
        traces: traces.len(),
        dist_tol,
        fixed_point_traces: traces.iter().filter(|t| t.converged()).count(),
        pass: cycles.is_empty(),
        cycles,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinSample {
    pub seed: Vec<f64>,
    /// Catalog id of the limit equilibrium.
    pub limit: Option<usize>,
    pub steps: usize,
    pub status: OrbitStatus,
    pub limit_params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinCount {
    pub id: usize,
    pub params: Vec<f64>,
    pub index: usize,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinSummary {
    pub seeds: usize,
    pub converged: usize,
    pub counts: Vec<BasinCount>,
    pub unassigned: usize,
    pub unassigned_limits: Vec<Vec<f64>>,
    pub jitter: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinScan {
    pub samples: Vec<BasinSample>,
    pub summary: BasinSummary,
}

/// Moves a seed by `BASIN_JITTER` along a fixed tangent direction.
fn jitter(core: &Core, c: &BoundaryPoint) -> Result<BoundaryPoint> {
    let chart = core.chart(c)?;
    let v = nalgebra::DVector::from_element(core.dim(), BASIN_JITTER / (core.dim() as f64).sqrt());
    core.exp(&chart, &v)
}

/// Runs an orbit from every seed and labels it with the catalog entry
/// nearest its limit (within 10·tol_disp). Results are in seed order.
pub fn basin_scan(
    sys: &ReturnMapSystem,
    seeds: &[BoundaryPoint],
    params: &OrbitParams,
    catalog: &MorseCatalog,
    generic: bool,
) -> Result<BasinScan> {
    let seeds: Vec<BoundaryPoint> = if generic {
        seeds.iter().map(|s| jitter(&sys.core, s)).collect::<Result<_>>()?
    } else {
        seeds.to_vec()
    };
    let traces = iterate_orbits(sys, &seeds, params)?;
    let radius = ASSIGN_FACTOR * params.tol_disp;
    let samples: Vec<BasinSample> = traces
        .iter()
        .map(|t| {
            let limit = t.limit_point.as_ref().and_then(|p| {
                catalog
                    .records
                    .iter()
                    .map(|r| (dist(&r.point, p), r.id))
                    .filter(|&(d, _)| d <= radius)
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, id)| id)
            });
            BasinSample {
                seed: t.seed.clone(),
                limit,
                steps: t.steps(),
                status: t.status.clone(),
                limit_params: t.limit_params.clone(),
            }
        })
        .collect();
    let counts = catalog
        .records
        .iter()
        .map(|r| BasinCount {
            id: r.id,
            params: r.params.clone(),
            index: r.index,
            seeds: samples.iter().filter(|s| s.limit == Some(r.id)).count(),
        })
        .collect();
    let unassigned: Vec<&BasinSample> = samples.iter().filter(|s| s.limit.is_none()).collect();
    let mut notes = Vec::new();
    if catalog.continuum {
        notes.push("degenerate: continuum of fixed points".to_string());
    }
    let failed = samples.iter().filter(|s| s.status != OrbitStatus::Converged).count();
    if failed > 0 {
        notes.push(format!("{failed} orbits did not converge"));
    }
    let summary = BasinSummary {
        seeds: samples.len(),
        converged: samples.len() - failed,
        counts,
        unassigned: unassigned.len(),
        unassigned_limits: unassigned.iter().filter_map(|s| s.limit_params.clone()).collect(),
        jitter: generic,
        notes,
    };
    Ok(BasinScan { samples, summary })
}

/// Seeds drawn uniformly on the core from a ChaCha8 stream.
pub fn random_seeds(core: &Core, n: usize, rng_seed: u64) -> Result<Vec<BoundaryPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n)
        .map(|_| match core {
            Core::Curve(_) => core.curve_point(rng.random_range(0.0..std::f64::consts::TAU)),
            Core::UnitSphere => {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).sqrt();
                core.sphere_point(&Vector3::new(s * phi.cos(), s * phi.sin(), z))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use super::*;
    use crate::geometry2d::wrap_angle;
    use crate::morse::analyze;

    fn ellipse() -> ReturnMapSystem {
        ReturnMapSystem::circle_in_ellipse(2.0, 1.5).unwrap()
    }

    /// d(θ) = 1/√(cos²θ/a² + sin²θ/b²) − 1 for the unit circle in the
    /// ellipse, and its derivative.
    fn d_exact(t: f64) -> f64 {
        1.0 / (t.cos().powi(2) / 4.0 + t.sin().powi(2) / 2.25).sqrt() - 1.0
    }

    #[test]
    fn concentric_orbit_is_constant() {
        let sys = ReturnMapSystem::concentric_circles(2.0).unwrap();
        let c = sys.core.curve_point(1.3).unwrap();
        let t = iterate_orbit(&sys, &c, &OrbitParams::default()).unwrap();
        assert!(t.converged());
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.steps(), 0);
        assert!(descent_audit(&t, 1e-10, 1e-8).pass);
    }

    #[test]
    fn ellipse_orbit_climbs_to_the_major_axis() {
        // F = π∘R∘Φ moves along +d': the orbit from π/4 ends at the
        // maximum θ = 0 (d = 1), not at the minimum θ = π/2.
        let sys = ellipse();
        let c = sys.core.curve_point(FRAC_PI_4).unwrap();
        let t = iterate_orbit(&sys, &c, &OrbitParams::default()).unwrap();
        assert!(t.converged());
        let lim = t.limit_params.as_ref().unwrap()[0];
        assert!(wrap_angle(lim).abs() < 1e-8);
        let last = t.records.last().unwrap();
        assert!((last.d - 1.0).abs() < 1e-12 && (last.d - d_exact(lim)).abs() < 1e-12);
        for r in &t.records {
            assert!((r.d - d_exact(r.params[0])).abs() < 1e-12);
            assert_eq!(r.lyapunov, 0.5 * r.d * r.d);
        }
        let down = descent_audit(&t, 1e-10, 1e-8);
        assert!(!down.pass && !down.violations.is_empty());
        let up = monotonicity_audit(&t, 1e-10, 1e-8, LyapunovSense::Increasing);
        assert!(up.pass, "{up:?}");
    }

    #[test]
    fn step_budget_bounds_trace_length() {
        let sys = ellipse();
        let c = sys.core.curve_point(1.4).unwrap();
        let t = iterate_orbit(&sys, &c, &OrbitParams { max_steps: 3, ..Default::default() }).unwrap();
        assert_eq!(t.status, OrbitStatus::MaxSteps);
        assert_eq!(t.records.len(), 4);
        assert!(t.limit_params.is_none());
        let err = iterate_orbit(&sys, &c, &OrbitParams { max_steps: 0, ..Default::default() });
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    fn synthetic(points: &[[f64; 2]], ds: &[f64]) -> OrbitTrace {
        let records = points
            .iter()
            .zip(ds)
            .enumerate()
            .map(|(k, (p, &d))| OrbitRecord {
                step: k,
                params: vec![p[1].atan2(p[0])],
                point: p.to_vec(),
                d,
                lyapunov: 0.5 * d * d,
                grad_norm: 1.0,
                disp: points.get(k + 1).map(|q| dist(p, q)),
            })
            .collect();
        OrbitTrace { seed: vec![0.0], records, status: OrbitStatus::MaxSteps, limit_params: None, limit_point: None }
    }

    #[test]
    fn injected_increase_is_one_violation() {
        let pts = [[1.0, 0.0], [0.9, 0.1], [0.8, 0.2], [0.7, 0.3]];
        let t = synthetic(&pts, &[1.0, 0.9, 0.901, 0.8]);
        let r = descent_audit(&t, 1e-10, 1e-8);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].step, 1);
        assert!((r.max_excess - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn equality_off_critical_is_flagged() {
        let pts = [[1.0, 0.0], [0.9, 0.1], [0.8, 0.2]];
        let t = synthetic(&pts, &[1.0, 0.9, 0.9]);
        let r = descent_audit(&t, 1e-10, 1e-8);
        assert!(r.violations.is_empty());
        assert_eq!(r.stalls, vec![1]);
        assert!(!r.pass);
    }

    #[test]
    fn cycles() {
        let a = [1.0, 0.0];
        let b = [-1.0, 0.0];
        let two = synthetic(&[a, b, a, b, a], &[1.0; 5]);
        let rep = cycle_audit(&[two], 1e-7);
        assert_eq!(rep.cycles.len(), 1);
        assert_eq!(rep.cycles[0].period, 2);
        assert!(!rep.pass);

        let sys = ellipse();
        let seed = sys.core.curve_point(0.0).unwrap();
        let fixed = iterate_orbit(&sys, &seed, &OrbitParams::default()).unwrap();
        assert!(fixed.converged() && fixed.records.len() == 1);
        let rep = cycle_audit(&[fixed], 1e-7);
        assert!(rep.pass && rep.fixed_point_traces == 1);
    }

    #[test]
    fn oscillating_convergence_is_not_a_cycle() {
        // c_n = (−0.9)ⁿ·r: returns within dist_tol of c_n after two steps
        // once r is small, but the loop diameter stays below 10·dist_tol.
        let pts: Vec<[f64; 2]> = (0..200).map(|n| [1.0 + 1e-6 * (-0.9f64).powi(n), 0.0]).collect();
        let rep = cycle_audit(&[synthetic(&pts, &vec![1.0; 200])], 1e-7);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn ellipse_basins() {
        let sys = ellipse();
        let (_, cat) = analyze(&sys).unwrap();
        let seeds = sys.core.sample(64);
        let scan = basin_scan(&sys, &seeds, &OrbitParams::default(), &cat, false).unwrap();
        assert_eq!(scan.summary.unassigned, 0);
        let count = |t: f64| {
            let r = cat.records.iter().find(|r| wrap_angle(r.params[0] - t).abs() < 1e-6).unwrap();
            scan.summary.counts[r.id].seeds
        };
        // seeds on the minor axis stay put; the other 62 split by mirror
        // symmetry between the two maxima
        assert_eq!(count(FRAC_PI_2), 1);
        assert_eq!(count(3.0 * FRAC_PI_2), 1);
        assert_eq!(count(0.0), 31);
        assert_eq!(count(PI), 31);
        for (k, s) in scan.samples.iter().enumerate() {
            if k == 0 || k == 32 {
                assert_eq!(s.steps, 0);
                assert_eq!(s.limit, cat.records.iter().find(|r| wrap_angle(r.params[0] - s.seed[0]).abs() < 1e-9).map(|r| r.id));
            }
        }
        let jittered = basin_scan(&sys, &seeds, &OrbitParams::default(), &cat, true).unwrap();
        // a 1e-9 offset from a minimum already meets both stopping tolerances
        let labels = |s: &BasinScan| s.samples.iter().map(|x| x.limit).collect::<Vec<_>>();
        assert!(jittered.summary.jitter);
        assert_eq!(labels(&jittered), labels(&scan));
    }

    #[test]
    fn concentric_basins_flag_continuum() {
        let sys = ReturnMapSystem::concentric_circles(2.0).unwrap();
        let (_, cat) = analyze(&sys).unwrap();
        let seeds = sys.core.sample(16);
        let scan = basin_scan(&sys, &seeds, &OrbitParams::default(), &cat, false).unwrap();
        assert!(scan.summary.notes.iter().any(|n| n == "degenerate: continuum of fixed points"));
        for (s, seed) in scan.samples.iter().zip(&seeds) {
            assert_eq!(s.limit_params.as_ref().unwrap(), &seed.params());
        }
    }

    #[test]
    fn random_seeds_are_reproducible() {
        let core = Core::UnitSphere;
        let a = random_seeds(&core, 10, 7).unwrap();
        let b = random_seeds(&core, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_seeds(&core, 10, 8).unwrap());
    }
}
