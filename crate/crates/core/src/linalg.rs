//! Small dense helpers for chart-sized (1×1, 2×2) matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Complex eigenvalue as a plain pair, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Eigenvalues of a general square matrix, sorted by real part then
/// imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Eigenvalue> {
    let mut out: Vec<Eigenvalue> = match m.nrows() {
        0 => Vec::new(),
        1 => vec![Eigenvalue { re: m[(0, 0)], im: 0.0 }],
        2 => {
            // closed form avoids Schur iteration noise on tiny matrices
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let half = 0.5 * tr;
            let disc = half * half - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                // stable pair: larger-magnitude root first, then det / root
                let big = if half >= 0.0 { half + s } else { half - s };
                let small = if big != 0.0 { det / big } else { 0.0 };
                vec![Eigenvalue { re: big, im: 0.0 }, Eigenvalue { re: small, im: 0.0 }]
            } else {
                let s = (-disc).sqrt();
                vec![Eigenvalue { re: half, im: s }, Eigenvalue { re: half, im: -s }]
            }
        }
        _ => m
            .complex_eigenvalues()
            .iter()
            .map(|z| Eigenvalue { re: z.re, im: z.im })
            .collect(),
    };
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

/// Symmetric eigendecomposition with ascending eigenvalues; columns of the
/// returned matrix are the matching unit eigenvectors.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn spectral_radius(eigs: &[Eigenvalue]) -> f64 {
    eigs.iter().map(Eigenvalue::modulus).fold(0.0, f64::max)
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_rotation_has_complex_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = eigenvalues(&m);
        assert_eq!(e.len(), 2);
        assert!((e[0].modulus() - 1.0).abs() < 1e-15);
        assert!((e[0].im + 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_eigen_is_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (v, q) = symmetric_eigen(&m);
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
        let back = &q * DMatrix::from_diagonal(&v) * q.transpose();
        assert!((back - m).amax() < 1e-14);
    }
}
