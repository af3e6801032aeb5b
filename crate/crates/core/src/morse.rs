//! Critical points of d (= fixed points of F), their Morse indices, and the
//! Morse-inequality and Euler-characteristic audits.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPoint, Core};
use crate::error::Result;
use crate::linalg::{symmetric_eigen, Eigenvalue};
use crate::return_map::ReturnMapSystem;

/// Distance below which two refined candidates are the same equilibrium.
pub const MERGE_DISTANCE: f64 = 1e-6;
/// Required fixed-point residual |F(c*) − c*| of a located equilibrium.
pub const FIXED_POINT_TOL: f64 = 1e-8;
/// Absolute floor under the relative degeneracy threshold.
pub const DEGENERACY_FLOOR: f64 = 1e-9;

const NEWTON_ITERS: usize = 60;
const NEIGHBOURS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Attracting,
    Repelling,
    Saddle,
    Neutral,
}

/// A located critical point of d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub id: usize,
    pub params: Vec<f64>,
    pub point: Vec<f64>,
    pub d: f64,
    pub grad_norm: f64,
    pub hessian: Vec<Vec<f64>>,
    /// Ascending.
    pub hessian_eigenvalues: Vec<f64>,
    pub index: usize,
    pub degenerate: bool,
    pub fixed_point_residual: f64,
    pub df_eigenvalues: Option<Vec<Eigenvalue>>,
    pub classification: Option<Classification>,
}

impl EquilibriumRecord {
    pub fn boundary_point(&self, core: &Core) -> Result<BoundaryPoint> {
        match core {
            Core::Curve(_) => core.curve_point(self.params[0]),
            Core::UnitSphere => {
                let p = nalgebra::Vector3::new(self.point[0], self.point[1], self.point[2]);
                core.sphere_point(&p.normalize())
            }
        }
    }

    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        let n = self.hessian.len();
        DMatrix::from_fn(n, n, |i, j| self.hessian[i][j])
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.hessian_eigenvalues.iter().map(|h| h.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Output of the grid scan and Newton refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumScan {
    pub grid_size: usize,
    /// Typical spacing of the scan grid.
    pub grid_spacing: f64,
    pub candidates: usize,
    pub records: Vec<EquilibriumRecord>,
    /// |∇d| vanishes on the whole grid: a continuum of fixed points.
    pub continuum: bool,
    pub warnings: Vec<String>,
}

fn grid(core: &Core, density: usize) -> (Vec<BoundaryPoint>, f64) {
    match core {
        Core::Curve(_) => {
            let n = density.max(1024);
            (core.sample(n), TAU / n as f64)
        }
        Core::UnitSphere => {
            let n = density.max(5000);
            (core.sample(n), (4.0 * std::f64::consts::PI / n as f64).sqrt())
        }
    }
}

/// Indices of grid points whose |∇d| does not exceed that of any neighbour
/// (cyclic neighbours on curves, 8 nearest on the sphere).
fn local_minima(core: &Core, points: &[BoundaryPoint], g: &[f64]) -> Vec<usize> {
    let n = points.len();
    match core {
        Core::Curve(_) => (0..n).filter(|&k| g[k] <= g[(k + n - 1) % n] && g[k] <= g[(k + 1) % n]).collect(),
        Core::UnitSphere => {
            let amb: Vec<DVector<f64>> = points.iter().map(|p| p.ambient_vector()).collect();
            let keep: Vec<bool> = (0..n)
                .into_par_iter()
                .map(|k| {
                    let mut near: Vec<(f64, usize)> = (0..n)
                        .filter(|&j| j != k)
                        .map(|j| ((&amb[j] - &amb[k]).norm_squared(), j))
                        .collect();
                    near.select_nth_unstable_by(NEIGHBOURS - 1, |a, b| a.0.total_cmp(&b.0));
                    near[..NEIGHBOURS].iter().all(|&(_, j)| g[k] <= g[j])
                })
                .collect();
            (0..n).filter(|&k| keep[k]).collect()
        }
    }
}

/// Moore–Penrose pseudo-inverse applied to `g`, ignoring directions with
/// |eigenvalue| below 1e-12 of the largest.
fn pinv_solve(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let (vals, vecs) = symmetric_eigen(h);
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut out = DVector::zeros(g.len());
    for i in 0..vals.len() {
        if vals[i].abs() > 1e-12 * scale && vals[i] != 0.0 {
            let col = vecs.column(i);
            out += col * (col.dot(g) / vals[i]);
        }
    }
    out
}

/// Damped Newton on ∇d in intrinsic charts.
fn refine(sys: &ReturnMapSystem, start: &BoundaryPoint, tol: f64) -> Result<Option<BoundaryPoint>> {
    let mut c = *start;
    let mut jet = sys.thickness_jet(&c)?;
    for _ in 0..NEWTON_ITERS {
        let g = jet.gradient_norm();
        if g <= tol {
            return Ok(Some(c));
        }
        let step = -pinv_solve(&jet.hessian, &jet.gradient);
        let chart = sys.core.chart(&c)?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let q = sys.core.exp(&chart, &(&step * scale))?;
            let qj = sys.thickness_jet(&q)?;
            if qj.gradient_norm() < g {
                c = q;
                jet = qj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((jet.gradient_norm() <= tol).then_some(c))
}

fn record_at(sys: &ReturnMapSystem, id: usize, c: &BoundaryPoint) -> Result<EquilibriumRecord> {
    let jet = sys.thickness_jet(c)?;
    let (vals, _) = symmetric_eigen(&jet.hessian);
    let residual = sys.return_map(c)?.distance(c);
    Ok(EquilibriumRecord {
        id,
        params: c.params(),
        point: c.ambient(),
        d: jet.value,
        grad_norm: jet.gradient_norm(),
        hessian: crate::linalg::to_rows(&jet.hessian),
        hessian_eigenvalues: vals.iter().copied().collect(),
        index: 0,
        degenerate: false,
        fixed_point_residual: residual,
        df_eigenvalues: None,
        classification: None,
    })
}

/// Grid scan of |∇d| (≥ 1024 samples on curves, ≥ 5000 on the sphere),
/// Newton refinement of the local minima to |∇d| ≤ `tol_grad`, merging of
/// duplicates, and a fixed-point check of every survivor. Records come
/// back ordered by parameter, with ids in that order.
pub fn locate_equilibria(sys: &ReturnMapSystem, grid_density: usize, tol_grad: f64) -> Result<EquilibriumScan> {
    let (points, spacing) = grid(&sys.core, grid_density);
    let g: Vec<f64> = points
        .par_iter()
        .map(|p| sys.thickness_jet(p).map(|j| j.gradient_norm()))
        .collect::<Result<_>>()?;
    let continuum = g.iter().all(|&v| v <= tol_grad);
    let minima = local_minima(&sys.core, &points, &g);
    let refined: Vec<Result<Option<BoundaryPoint>>> =
        minima.par_iter().map(|&k| refine(sys, &points[k], tol_grad)).collect();

    let mut warnings = Vec::new();
    let mut found: Vec<BoundaryPoint> = Vec::new();
    for (&k, r) in minima.iter().zip(refined) {
        match r? {
            Some(c) => {
                if found.iter().all(|f| f.distance(&c) > MERGE_DISTANCE) {
                    found.push(c);
                }
            }
            None => warnings.push(format!(
                "Newton refinement did not converge from grid point {:?}; candidate dropped",
                points[k].params()
            )),
        }
    }
    found.sort_by(|a, b| {
        let (pa, pb) = (a.params(), b.params());
        pa.iter().zip(&pb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let records: Vec<EquilibriumRecord> = found
        .par_iter()
        .enumerate()
        .map(|(id, c)| record_at(sys, id, c))
        .collect::<Result<_>>()?;
    for r in &records {
        if r.fixed_point_residual > FIXED_POINT_TOL {
            warnings.push(format!(
                "equilibrium {} at {:?} moves by {:e} under F",
                r.id, r.params, r.fixed_point_residual
            ));
        }
    }
    Ok(EquilibriumScan {
        grid_size: points.len(),
        grid_spacing: spacing,
        candidates: minima.len(),
        records,
        continuum,
        warnings,
    })
}

/// A cluster of degenerate critical points, such as a circle of minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateSet {
    pub count: usize,
    pub member_ids: Vec<usize>,
    pub mean_d: f64,
    /// Sphere only.
    pub mean_colatitude: Option<f64>,
}

/// Records with Morse indices and degeneracy flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseCatalog {
    pub dimension: usize,
    pub threshold: f64,
    pub records: Vec<EquilibriumRecord>,
    pub degenerate_sets: Vec<DegenerateSet>,
    /// No degenerate records and no continuum: d is Morse on the scan.
    pub morse: bool,
    pub continuum: bool,
}

/// Assigns indices (eigenvalues below −threshold) and degeneracy flags
/// (some |eigenvalue| ≤ threshold), with threshold =
/// max(`degeneracy_rel`·max|eig|, 1e-9). Degenerate records closer than
/// `link` are clustered into degenerate sets.
pub fn morse_catalog(scan: &EquilibriumScan, dimension: usize, degeneracy_rel: f64, link: f64) -> MorseCatalog {
    let scale = scan
        .records
        .iter()
        .flat_map(|r| r.hessian_eigenvalues.iter().map(|h| h.abs()))
        .fold(0.0, f64::max);
    let threshold = (degeneracy_rel * scale).max(DEGENERACY_FLOOR);
    let records: Vec<EquilibriumRecord> = scan
        .records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.index = r.hessian_eigenvalues.iter().filter(|&&h| h < -threshold).count();
            r.degenerate = r.hessian_eigenvalues.iter().any(|h| h.abs() <= threshold);
            r
        })
        .collect();
    let degenerate_sets = cluster(&records, dimension, link);
    MorseCatalog {
        dimension,
        threshold,
        morse: degenerate_sets.is_empty() && !scan.continuum,
        continuum: scan.continuum,
        records,
        degenerate_sets,
    }
}

fn cluster(records: &[EquilibriumRecord], dimension: usize, link: f64) -> Vec<DegenerateSet> {
    let members: Vec<&EquilibriumRecord> = records.iter().filter(|r| r.degenerate).collect();
    let n = members.len();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut sets = Vec::new();
    for start in 0..n {
        if label[start].is_some() {
            continue;
        }
        let id = sets.len();
        label[start] = Some(id);
        let mut stack = vec![start];
        let mut group = Vec::new();
        while let Some(i) = stack.pop() {
            group.push(i);
            for j in 0..n {
                if label[j].is_none() {
                    let dist = members[i].point.iter().zip(&members[j].point).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    if dist <= link {
                        label[j] = Some(id);
                        stack.push(j);
                    }
                }
            }
        }
        group.sort_unstable();
        let count = group.len();
        let mean = |f: &dyn Fn(&EquilibriumRecord) -> f64| group.iter().map(|&i| f(members[i])).sum::<f64>() / count as f64;
        sets.push(DegenerateSet {
            count,
            member_ids: group.iter().map(|&i| members[i].id).collect(),
            mean_d: mean(&|r| r.d),
            mean_colatitude: (dimension == 2).then(|| mean(&|r| r.params[0])),
        });
    }
    sets
}

/// Betti numbers b₀ … b_{N−1} of the boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDescriptor {
    pub betti: Vec<usize>,
}

impl TopologyDescriptor {
    /// The sphere S^k: b₀ = b_k = 1, all others zero.
    pub fn sphere(k: usize) -> Self {
        let mut betti = vec![0; k + 1];
        betti[0] += 1;
        betti[k] += 1;
        Self { betti }
    }

    /// The 2-torus, (1, 2, 1).
    pub fn torus() -> Self {
        Self { betti: vec![1, 2, 1] }
    }

    /// χ = Σ (−1)^k b_k.
    pub fn euler_characteristic(&self) -> i64 {
        self.betti.iter().enumerate().map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) }).sum()
    }

    pub fn betti_sum(&self) -> usize {
        self.betti.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub critical_points: usize,
    pub betti: Vec<usize>,
    pub betti_sum: usize,
    pub index_counts: Vec<usize>,
    pub morse_inequality_pass: bool,
    /// Σ (−1)^index over the catalog.
    pub index_sum: i64,
    pub euler_characteristic: i64,
    pub euler_balance_pass: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TopologyAudit {
    Checked(TopologyReport),
    NotApplicable { reason: String },
}

impl TopologyAudit {
    pub fn passed(&self) -> bool {
        matches!(self, TopologyAudit::Checked(r) if r.pass)
    }
}

/// Checks #critical points ≥ Σ b_k and Σ(−1)^index = χ. Not applicable
/// when the catalog holds degenerate critical points.
pub fn topology_audit(records: &[EquilibriumRecord], topo: &TopologyDescriptor) -> TopologyAudit {
    if records.iter().any(|r| r.degenerate) {
        return TopologyAudit::NotApplicable {
            reason: "not applicable: Morse–Bott (degenerate critical set)".into(),
        };
    }
    let mut index_counts = vec![0; topo.betti.len().max(1)];
    for r in records {
        if r.index >= index_counts.len() {
            index_counts.resize(r.index + 1, 0);
        }
        index_counts[r.index] += 1;
    }
    let index_sum: i64 = records.iter().map(|r| if r.index % 2 == 0 { 1 } else { -1 }).sum();
    let chi = topo.euler_characteristic();
    let morse = records.len() >= topo.betti_sum();
    let balance = index_sum == chi;
    TopologyAudit::Checked(TopologyReport {
        critical_points: records.len(),
        betti: topo.betti.clone(),
        betti_sum: topo.betti_sum(),
        index_counts,
        morse_inequality_pass: morse,
        index_sum,
        euler_characteristic: chi,
        euler_balance_pass: balance,
        pass: morse && balance,
    })
}

/// Locates, indexes and clusters the critical points of a system with its
/// default tolerances.
pub fn analyze(sys: &ReturnMapSystem) -> Result<(EquilibriumScan, MorseCatalog)> {
    let scan = locate_equilibria(sys, 0, sys.tolerances.newton_tol)?;
    let catalog = morse_catalog(&scan, sys.dim(), sys.tolerances.degeneracy_rel, 8.0 * scan.grid_spacing);
    Ok((scan, catalog))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::geometry2d::wrap_angle;
    use crate::sphere::{HarmonicTerm, SphericalHarmonicField};

    /// Roots of d'(θ) by sign changes on a dense grid of the closed form.
    fn sign_change_count(dprime: impl Fn(f64) -> f64, n: usize) -> usize {
        (0..n)
            .filter(|&k| {
                let a = dprime(TAU * k as f64 / n as f64);
                let b = dprime(TAU * (k + 1) as f64 / n as f64);
                (a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0)
            })
            .count()
    }

    #[test]
    fn circle_in_ellipse_has_four_axis_equilibria() {
        let sys = ReturnMapSystem::circle_in_ellipse(2.0, 1.5).unwrap();
        let (scan, cat) = analyze(&sys).unwrap();
        assert_eq!(scan.records.len(), 4);
        // d(θ) = 1/√(cos²θ/4 + sin²θ/2.25) − 1 is monotone between the axes
        let q = |t: f64| t.cos().powi(2) / 4.0 + t.sin().powi(2) / 2.25;
        let dprime = |t: f64| -0.5 * q(t).powf(-1.5) * (2.0 * t.sin() * t.cos() * (1.0 / 2.25 - 0.25));
        assert_eq!(sign_change_count(dprime, 100_000), 4);
        for (r, want) in scan.records.iter().zip([0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]) {
            assert!(wrap_angle(r.params[0] - want).abs() < 1e-6);
            assert!(r.fixed_point_residual <= FIXED_POINT_TOL);
        }
        let mut idx: Vec<usize> = cat.records.iter().map(|r| r.index).collect();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 0, 1, 1]);
        assert!(cat.morse);
        let TopologyAudit::Checked(t) = topology_audit(&cat.records, &TopologyDescriptor::sphere(1)) else {
            panic!("expected a checked audit")
        };
        assert!(t.pass && t.index_sum == 0 && t.euler_characteristic == 0);
    }

    #[test]
    fn fourier_field_indices() {
        let sys = ReturnMapSystem::planar_fourier(vec![[1.0, 0.0], [0.0, 0.0], [0.1, 0.0]]).unwrap();
        let (scan, cat) = analyze(&sys).unwrap();
        assert_eq!(scan.records.len(), 4);
        let at = |t: f64| cat.records.iter().find(|r| wrap_angle(r.params[0] - t).abs() < 1e-8).unwrap();
        assert_eq!(at(0.0).index, 1);
        assert!((at(0.0).hessian_eigenvalues[0] + 0.4).abs() < 1e-12);
        assert_eq!(at(FRAC_PI_2).index, 0);
    }

    #[test]
    fn constant_field_is_a_continuum() {
        let sys = ReturnMapSystem::concentric_circles(2.0).unwrap();
        let (scan, cat) = analyze(&sys).unwrap();
        assert!(scan.continuum && !cat.morse);
        assert!(cat.records.iter().all(|r| r.degenerate));
        assert!(matches!(
            topology_audit(&cat.records, &TopologyDescriptor::sphere(1)),
            TopologyAudit::NotApplicable { .. }
        ));
    }

    #[test]
    fn zonal_field_is_morse_bott() {
        let sys = ReturnMapSystem::spherical(SphericalHarmonicField::zonal_quadratic(1.0, 0.1)).unwrap();
        let (_, cat) = analyze(&sys).unwrap();
        let poles: Vec<&EquilibriumRecord> = cat.records.iter().filter(|r| !r.degenerate).collect();
        assert_eq!(poles.len(), 2);
        for p in poles {
            assert!(p.params[0] < 1e-6 || p.params[0] > PI - 1e-6);
            assert_eq!(p.index, 2);
            assert!((p.d - 1.2).abs() < 1e-12);
        }
        assert_eq!(cat.degenerate_sets.len(), 1);
        let set = &cat.degenerate_sets[0];
        assert!(set.count >= 2);
        assert!((set.mean_colatitude.unwrap() - FRAC_PI_2).abs() < 1e-6);
        assert!(matches!(
            topology_audit(&cat.records, &TopologyDescriptor::sphere(2)),
            TopologyAudit::NotApplicable { .. }
        ));
    }

    #[test]
    fn mixed_sphere_field_balances_to_two() {
        let f = SphericalHarmonicField {
            constant: 1.0,
            coeffs: vec![HarmonicTerm { l: 2, m: 0, c: 0.1 }, HarmonicTerm { l: 2, m: 2, c: 0.05 }],
        };
        let sys = ReturnMapSystem::spherical(f).unwrap();
        let (_, cat) = analyze(&sys).unwrap();
        assert!(cat.morse);
        let TopologyAudit::Checked(t) = topology_audit(&cat.records, &TopologyDescriptor::sphere(2)) else {
            panic!("expected a checked audit")
        };
        // 1 + 0.1Y₂⁰ + 0.05Y₂²: one antipodal pair each of maxima, saddles, minima
        assert_eq!(t.index_counts, vec![2, 2, 2]);
        assert_eq!(t.index_sum, 2);
        assert!(t.pass);
    }

    #[test]
    fn euler_imbalance_is_reported() {
        let mk = |index: usize| EquilibriumRecord {
            id: 0,
            params: vec![0.0],
            point: vec![1.0, 0.0],
            d: 1.0,
            grad_norm: 0.0,
            hessian: vec![vec![1.0]],
            hessian_eigenvalues: vec![1.0],
            index,
            degenerate: false,
            fixed_point_residual: 0.0,
            df_eigenvalues: None,
            classification: None,
        };
        let TopologyAudit::Checked(t) = topology_audit(&[mk(0), mk(0), mk(1)], &TopologyDescriptor::sphere(1)) else {
            panic!("expected a checked audit")
        };
        assert_eq!(t.index_sum, 1);
        assert!(!t.euler_balance_pass && t.morse_inequality_pass && !t.pass);
    }

    #[test]
    fn descriptors() {
        assert_eq!(TopologyDescriptor::sphere(1).euler_characteristic(), 0);
        assert_eq!(TopologyDescriptor::sphere(2).euler_characteristic(), 2);
        assert_eq!(TopologyDescriptor::sphere(2).betti, vec![1, 0, 1]);
        assert_eq!(TopologyDescriptor::torus().euler_characteristic(), 0);
    }
}
