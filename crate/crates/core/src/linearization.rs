//! Linearization of F at an equilibrium: the operator A = (I − DF)·Hess⁻¹,
//! stability, curvature gaps, local constants and the Morse normal frame.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPoint, Chart, Core};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, from_rows, spectral_radius, symmetric_eigen, symmetrize, to_rows, Eigenvalue};
use crate::morse::{Classification, EquilibriumRecord, DEGENERACY_FLOOR};
use crate::return_map::ReturnMapSystem;

/// Radii at which local constants and remainder ratios are sampled.
pub const RADII: [f64; 8] = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4, 1.5625e-4, 1e-4];
pub const SAMPLES_PER_RADIUS: usize = 32;
/// Off-diagonal share of DF in the curvature eigenbasis above which the
/// principal directions count as misaligned.
pub const ALIGNMENT_LIMIT: f64 = 0.1;

/// Curvature sign convention for the curvature-gap values μᵢ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// μ = (1 − d κ_C)/(1 − d κ_Ω) with positive curvatures of convex curves.
    Paper,
    /// μ = (1 + d κ_C)(1 − d κ_Ω): the core stretches by the parallel-curve
    /// factor and the outer projection shrinks by the focal factor.
    #[default]
    Standard,
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Convention::Paper),
            "standard" => Ok(Convention::Standard),
            other => Err(Error::InvalidInput(format!("unknown convention '{other}', expected paper|standard"))),
        }
    }
}

/// μ for one principal direction.
pub fn curvature_gap(kappa_core: f64, kappa_outer: f64, d: f64, convention: Convention) -> f64 {
    match convention {
        Convention::Paper => (1.0 - d * kappa_core) / (1.0 - d * kappa_outer),
        Convention::Standard => (1.0 + d * kappa_core) * (1.0 - d * kappa_outer),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Contracting,
    Neutral,
    Expanding,
}

/// Label of a multiplier by its modulus against 1 ± tol.
pub fn modulus_label(m: f64, tol: f64) -> Label {
    if m < 1.0 - tol {
        Label::Contracting
    } else if m > 1.0 + tol {
        Label::Expanding
    } else {
        Label::Neutral
    }
}

/// Attracting / repelling / saddle / neutral from the moduli of DF's
/// eigenvalues with a neutral band of half-width `tol`.
pub fn classify_spectrum(eigs: &[Eigenvalue], tol: f64) -> Classification {
    let labels: Vec<Label> = eigs.iter().map(|e| modulus_label(e.modulus(), tol)).collect();
    if labels.contains(&Label::Neutral) {
        Classification::Neutral
    } else if labels.iter().all(|&l| l == Label::Contracting) {
        Classification::Attracting
    } else if labels.iter().all(|&l| l == Label::Expanding) {
        Classification::Repelling
    } else {
        Classification::Saddle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub classification: Classification,
    pub spectral_radius: f64,
    /// All eigenvalues of A·Hess real and inside (0, 2).
    pub spectral_step: bool,
    /// A_sym positive definite and the spectral-step condition holds.
    pub assumptions_hold: bool,
    /// Classification implied by the Morse index.
    pub expected_from_index: Classification,
    pub index_coherent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub equilibrium: usize,
    pub params: Vec<f64>,
    pub point: Vec<f64>,
    pub d: f64,
    pub index: usize,
    pub df: Vec<Vec<f64>>,
    pub df_discrepancy: f64,
    pub df_eigenvalues: Vec<Eigenvalue>,
    pub hessian: Vec<Vec<f64>>,
    pub hessian_eigenvalues: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub a_eigenvalues: Vec<Eigenvalue>,
    /// ‖A − Aᵀ‖_F.
    pub symmetry_defect: f64,
    /// Eigenvalues of (A + Aᵀ)/2, ascending.
    pub a_sym_eigenvalues: Vec<f64>,
    /// Smallest eigenvalue of A_sym.
    pub m_a: f64,
    pub spd: bool,
    /// A⁻¹, when A is invertible.
    pub effective_metric: Option<Vec<Vec<f64>>>,
    /// ‖DF − (I − A·Hess)‖_F.
    pub consistency_residual: f64,
    pub step_eigenvalues: Vec<Eigenvalue>,
    pub verdict: StabilityVerdict,
}

impl LinearizationReport {
    pub fn base_point(&self, core: &Core) -> Result<BoundaryPoint> {
        match core {
            Core::Curve(_) => core.point_from_params(&self.params),
            Core::UnitSphere => {
                core.sphere_point(&nalgebra::Vector3::new(self.point[0], self.point[1], self.point[2]).normalize())
            }
        }
    }
    pub fn df_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.df)
    }
    pub fn a_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.a)
    }
    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.hessian)
    }
}

fn fro(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// A = (I − DF)·Hess⁻¹ in the intrinsic chart, with DF by central
/// differences; fails on degenerate equilibria.
pub fn operator_a(sys: &ReturnMapSystem, record: &EquilibriumRecord) -> Result<LinearizationReport> {
    let c = record.boundary_point(&sys.core)?;
    let jet = sys.thickness_jet(&c)?;
    let (h_vals, _) = symmetric_eigen(&jet.hessian);
    let min_abs = h_vals.iter().map(|h| h.abs()).fold(f64::INFINITY, f64::min);
    if record.degenerate || min_abs <= DEGENERACY_FLOOR {
        return Err(Error::DegenerateEquilibrium { min_abs_eigenvalue: min_abs });
    }
    let hess = symmetrize(&jet.hessian);
    let hinv = hess
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateEquilibrium { min_abs_eigenvalue: min_abs })?;
    let jac = sys.return_jacobian(&c)?;
    let n = sys.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let df = jac.matrix;
    let a = (&id - &df) * &hinv;
    let consistency_residual = fro(&(&df - (&id - &a * &hess)));
    let (sym_vals, _) = symmetric_eigen(&symmetrize(&a));
    let m_a = sym_vals.iter().copied().fold(f64::INFINITY, f64::min);
    let step = &a * &hess;
    let df_eigenvalues = eigenvalues(&df);
    let mut report = LinearizationReport {
        equilibrium: record.id,
        params: record.params.clone(),
        point: record.point.clone(),
        d: jet.value,
        index: record.index,
        df: to_rows(&df),
        df_discrepancy: jac.discrepancy,
        hessian: to_rows(&hess),
        hessian_eigenvalues: h_vals.iter().copied().collect(),
        a_eigenvalues: eigenvalues(&a),
        symmetry_defect: fro(&(&a - a.transpose())),
        a_sym_eigenvalues: sym_vals.iter().copied().collect(),
        m_a,
        spd: m_a > 0.0,
        effective_metric: a.clone().try_inverse().map(|m| to_rows(&m)),
        a: to_rows(&a),
        consistency_residual,
        step_eigenvalues: eigenvalues(&step),
        df_eigenvalues,
        verdict: StabilityVerdict {
            classification: Classification::Neutral,
            spectral_radius: 0.0,
            spectral_step: false,
            assumptions_hold: false,
            expected_from_index: Classification::Neutral,
            index_coherent: false,
        },
    };
    report.verdict = stability_classify(&report, sys.tolerances.neutral_band);
    Ok(report)
}

/// Classification from |eig(DF)|, the spectral-step verdict
/// eig(A·Hess) ⊂ (0, 2), and coherence with the Morse index.
pub fn stability_classify(report: &LinearizationReport, tol: f64) -> StabilityVerdict {
    let classification = classify_spectrum(&report.df_eigenvalues, tol);
    let spectral_step = report
        .step_eigenvalues
        .iter()
        .all(|e| e.im.abs() <= 1e-9 && e.re > 0.0 && e.re < 2.0);
    let n = report.hessian_eigenvalues.len();
    let expected = match report.index {
        0 => Classification::Attracting,
        i if i == n => Classification::Repelling,
        _ => Classification::Saddle,
    };
    StabilityVerdict {
        classification,
        spectral_radius: spectral_radius(&report.df_eigenvalues),
        spectral_step,
        assumptions_hold: report.spd && spectral_step,
        expected_from_index: expected,
        index_coherent: expected == classification,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGap {
    pub kappa_core: f64,
    pub kappa_outer: f64,
    /// Diagonal entry of DF in the curvature eigenbasis.
    pub df_eigenvalue: f64,
    pub mu_paper: f64,
    pub mu_standard: f64,
    /// μ under the active convention.
    pub mu: f64,
    pub deviation_paper: f64,
    pub deviation_standard: f64,
    pub deviation: f64,
    /// Label predicted under the active convention: by the sign of
    /// κ_C − κ_Ω (paper) or by |μ| against 1 (standard).
    pub predicted: Label,
    /// Label from |eig(DF)| against 1.
    pub observed: Label,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureGapReport {
    pub equilibrium: usize,
    pub convention: Convention,
    pub d: f64,
    pub off_diagonal_mass: f64,
    pub directions: Vec<DirectionGap>,
    pub max_deviation_paper: f64,
    pub max_deviation_standard: f64,
}

/// μᵢ at an equilibrium under `convention`, compared with DF expressed in
/// the principal-curvature eigenbasis. Not applicable when DF's
/// off-diagonal share in that basis exceeds 10% or a focal factor vanishes.
pub fn curvature_gap_spectrum(
    sys: &ReturnMapSystem,
    report: &LinearizationReport,
    convention: Convention,
) -> Result<CurvatureGapReport> {
    let c = report.base_point(&sys.core)?;
    let d = report.d;
    let kc = sys.core.curvature(&c);
    let ko = sys.outer_curvatures(&c)?;
    let (_, v) = symmetric_eigen(&report.hessian_matrix());
    let m = v.transpose() * report.df_matrix() * &v;
    let n = m.nrows();
    let off: f64 = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].powi(2))
        .sum::<f64>()
        .sqrt();
    let off_diagonal_mass = off / m.norm();
    if off_diagonal_mass > ALIGNMENT_LIMIT {
        return Err(Error::NotApplicable(format!(
            "principal directions misaligned: off-diagonal DF mass {off_diagonal_mass:.3}"
        )));
    }
    let tol = sys.tolerances.neutral_band;
    let mut directions = Vec::with_capacity(n);
    for i in 0..n {
        let (k_c, k_o) = (kc[i], ko[i]);
        if (1.0 - d * k_o).abs() < 1e-12 {
            return Err(Error::NotApplicable("focal factor 1 − d κ_Ω vanishes".into()));
        }
        let df = m[(i, i)];
        let mu_paper = curvature_gap(k_c, k_o, d, Convention::Paper);
        let mu_standard = curvature_gap(k_c, k_o, d, Convention::Standard);
        let (mu, predicted) = match convention {
            Convention::Paper => {
                let gap = k_c - k_o;
                let label = if gap.abs() <= tol {
                    Label::Neutral
                } else if gap > 0.0 {
                    Label::Contracting
                } else {
                    Label::Expanding
                };
                (mu_paper, label)
            }
            Convention::Standard => (mu_standard, modulus_label(mu_standard.abs(), tol)),
        };
        let observed = modulus_label(df.abs(), tol);
        directions.push(DirectionGap {
            kappa_core: k_c,
            kappa_outer: k_o,
            df_eigenvalue: df,
            mu_paper,
            mu_standard,
            mu,
            deviation_paper: (mu_paper - df).abs(),
            deviation_standard: (mu_standard - df).abs(),
            deviation: (mu - df).abs(),
            predicted,
            observed,
            agree: predicted == observed,
        });
    }
    let max = |f: fn(&DirectionGap) -> f64| directions.iter().map(f).fold(0.0, f64::max);
    Ok(CurvatureGapReport {
        equilibrium: report.equilibrium,
        convention,
        d,
        off_diagonal_mass,
        max_deviation_paper: max(|g| g.deviation_paper),
        max_deviation_standard: max(|g| g.deviation_standard),
        directions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderRow {
    pub radius: f64,
    pub samples: usize,
    /// max ‖R(c)‖/‖c − c*‖ over the ring.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEstimates {
    pub equilibrium: usize,
    pub minimum: bool,
    pub samples_per_radius: usize,
    /// min and max of (d(c) − d(c*))/‖c − c*‖².
    pub alpha: f64,
    pub beta: f64,
    /// min of (d(c) − d(F(c)))/‖∇d(c)‖².
    pub gamma: f64,
    /// max ‖F(c) − c*‖/‖c − c*‖ at the smallest radius.
    pub q: f64,
    pub spectral_radius: f64,
    pub remainder: Vec<RemainderRow>,
    /// Decrease of the remainder ratio per halving of the radius, between
    /// consecutive ladder entries.
    pub halving_factors: Vec<f64>,
    pub partial: bool,
}

/// Chart offsets of one ring: 32 directions on the sphere; on curves ±s
/// for 16 radii s spread over [0.75r, r].
fn ring(dim: usize, r: f64) -> Vec<DVector<f64>> {
    let n = SAMPLES_PER_RADIUS;
    if dim == 1 {
        let half = n / 2;
        (0..half)
            .flat_map(|j| {
                let s = r * (0.75 + 0.25 * j as f64 / (half - 1) as f64);
                [DVector::from_element(1, s), DVector::from_element(1, -s)]
            })
            .collect()
    } else {
        (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                DVector::from_vec(vec![r * a.cos(), r * a.sin()])
            })
            .collect()
    }
}

struct Sample {
    d_excess: f64,
    descent: Option<f64>,
    contraction: f64,
    remainder: f64,
}

fn coordinate_gradient(core: &Core, base: &Chart, v: &DVector<f64>, c: &BoundaryPoint, grad: &DVector<f64>) -> Result<DVector<f64>> {
    match base {
        Chart::Arc { .. } => Ok(grad.clone()),
        Chart::Sphere(tc) => {
            let basis = core.chart_basis(&core.chart(c)?);
            let amb = &basis[0] * grad[0] + &basis[1] * grad[1];
            let dexp = tc.exp_differential(&Vector2::new(v[0], v[1]));
            Ok(DVector::from_vec(vec![
                dexp.column(0).iter().zip(amb.iter()).map(|(a, b)| a * b).sum(),
                dexp.column(1).iter().zip(amb.iter()).map(|(a, b)| a * b).sum(),
            ]))
        }
    }
}

/// Samples rings of the given radii around c*: α, β from the quadratic
/// growth of d, γ from the one-step decrease of d, q from the contraction
/// at the smallest radius, and the remainder R(c) = F(c) − c + A∇d(c).
pub fn local_estimates(sys: &ReturnMapSystem, report: &LinearizationReport, radii: &[f64]) -> Result<LocalEstimates> {
    let c_star = report.base_point(&sys.core)?;
    let chart = sys.core.chart(&c_star)?;
    let d_star = report.d;
    let a = report.a_matrix();
    let dim = sys.dim();
    let mut rows = Vec::new();
    let mut all: Vec<Vec<Sample>> = Vec::new();
    let mut partial = false;
    for &r in radii {
        let offsets = ring(dim, r);
        let samples: Vec<Sample> = offsets
            .iter()
            .filter_map(|v| {
                let run = || -> Result<Sample> {
                    let c = sys.core.exp(&chart, v)?;
                    let x = sys.core.log(&chart, &c)?;
                    let jet = sys.thickness_jet(&c)?;
                    let f = sys.return_map(&c)?;
                    let fx = sys.core.log(&chart, &f)?;
                    let d_f = sys.thickness(&f)?;
                    let g = coordinate_gradient(&sys.core, &chart, &x, &c, &jet.gradient)?;
                    let rem = &fx - &x + &a * g;
                    let norm = x.norm();
                    let g2 = jet.gradient.norm_squared();
                    Ok(Sample {
                        d_excess: (jet.value - d_star) / (norm * norm),
                        descent: (g2 > 0.0).then(|| (jet.value - d_f) / g2),
                        contraction: fx.norm() / norm,
                        remainder: rem.norm() / norm,
                    })
                };
                run().ok()
            })
            .collect();
        if samples.len() < offsets.len() {
            partial = true;
        }
        rows.push(RemainderRow {
            radius: r,
            samples: samples.len(),
            max_ratio: samples.iter().map(|s| s.remainder).fold(0.0, f64::max),
        });
        all.push(samples);
    }
    let flat = || all.iter().flatten();
    let alpha = flat().map(|s| s.d_excess).fold(f64::INFINITY, f64::min);
    let beta = flat().map(|s| s.d_excess).fold(f64::NEG_INFINITY, f64::max);
    let gamma = flat().filter_map(|s| s.descent).fold(f64::INFINITY, f64::min);
    let smallest = radii
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let q = all
        .get(smallest)
        .map(|s| s.iter().map(|x| x.contraction).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    let halving_factors = rows
        .windows(2)
        .map(|w| (w[0].max_ratio / w[1].max_ratio).powf(1.0 / (w[0].radius / w[1].radius).log2()))
        .collect();
    Ok(LocalEstimates {
        equilibrium: report.equilibrium,
        minimum: report.index == 0,
        samples_per_radius: SAMPLES_PER_RADIUS,
        alpha,
        beta,
        gamma,
        q,
        spectral_radius: report.verdict.spectral_radius,
        remainder: rows,
        halving_factors,
        partial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    /// Columns: Hessian eigenvectors scaled by |hᵢ|^{-1/2}, negative
    /// eigenvalues first.
    pub basis: Vec<Vec<f64>>,
    /// Diagonal of J_λ.
    pub signature: Vec<i8>,
    pub a0: Vec<Vec<f64>>,
    /// ‖(I − A₀J_λ) − M⁻¹·DF·M‖_F.
    pub residual: f64,
}

/// Morse coordinates x with c − c* = M x, in which d − d* = ½ xᵀJ_λx and
/// F(x) = x − A₀J_λx + o(‖x‖).
pub fn normal_form_frame(report: &LinearizationReport) -> Result<NormalForm> {
    let (vals, vecs) = symmetric_eigen(&report.hessian_matrix());
    let min_abs = vals.iter().map(|h| h.abs()).fold(f64::INFINITY, f64::min);
    if min_abs <= DEGENERACY_FLOOR {
        return Err(Error::DegenerateEquilibrium { min_abs_eigenvalue: min_abs });
    }
    let n = vals.len();
    let scale = DMatrix::from_diagonal(&DVector::from_iterator(n, vals.iter().map(|h| h.abs().powf(-0.5))));
    let m = &vecs * scale;
    let minv = m.clone().try_inverse().ok_or(Error::DegenerateEquilibrium { min_abs_eigenvalue: min_abs })?;
    let a0 = &minv * report.a_matrix() * minv.transpose();
    let signature: Vec<i8> = vals.iter().map(|&h| if h < 0.0 { -1 } else { 1 }).collect();
    let j = DMatrix::from_diagonal(&DVector::from_iterator(n, signature.iter().map(|&s| s as f64)));
    let lhs = DMatrix::<f64>::identity(n, n) - &a0 * j;
    let rhs = &minv * report.df_matrix() * &m;
    Ok(NormalForm {
        basis: to_rows(&m),
        signature,
        a0: to_rows(&a0),
        residual: (lhs - rhs).norm(),
    })
}
