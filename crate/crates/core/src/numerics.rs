//! Dense real-matrix kernel.
//!
//! [`Mat`] is a thin newtype over `nalgebra::DMatrix<f64>` that adds the
//! dimension checks and the tolerance policy the rest of the crate relies
//! on. Every numeric tolerance used anywhere in the crate is defined in
//! [`tol`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::scenario::RandomSource;

/// Tolerance constants. Other modules import these instead of inlining
/// literals.
pub mod tol {
    /// Relative singular-value cutoff for the pseudo-inverse.
    pub const PINV_RELATIVE: f64 = 1e-12;
    /// Maximum relative asymmetry accepted by symmetric routines.
    pub const SYMMETRY: f64 = 1e-9;
    /// Residual bound guaranteed by [`super::solve_spd`].
    pub const SOLVE_RESIDUAL: f64 = 1e-9;
    /// Accuracy of the reservoir spectral-radius rescale.
    pub const SPECTRAL_RADIUS: f64 = 1e-6;
    /// Power-iteration step budget.
    pub const POWER_ITERATIONS: usize = 1000;
    /// Power-iteration convergence threshold.
    pub const POWER_CONVERGENCE: f64 = 1e-8;
    /// Conceptor algebra identities (double negation, OR with zero, ...).
    pub const CONCEPTOR_ALGEBRA: f64 = 1e-12;
    /// Zero-forcing residual `|H F - I|`.
    pub const ZERO_FORCING: f64 = 1e-9;
    /// Relative round-trip accuracy of power/rate inversions.
    pub const ROUND_TRIP: f64 = 1e-9;
    /// Free-memory quota below which the reservoir counts as full.
    pub const QUOTA_EXHAUSTED: f64 = 0.01;
    /// Rank cutoff for zero-forcing channel matrices (relative to largest
    /// singular value).
    pub const RANK_RELATIVE: f64 = 1e-10;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {op} got {lhs:?} and {rhs:?}")]
    DimensionMismatch { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },
    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("invalid reservoir parameter: {0}")]
    InvalidParameter(String),
    #[error("reservoir draw degenerate after {0} attempts")]
    DegenerateReservoir(usize),
}

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Mat(pub DMatrix<f64>);

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}{:?}", self.rows(), self.cols(), self.0.as_slice())
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Mat(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Mat(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Mat(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// One column per vector.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = DMatrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            m.column_mut(j).copy_from_slice(c);
        }
        Mat(m)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn transpose(&self) -> Mat {
        Mat(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat(&self.0 * s)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Maximum absolute row sum (induced infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows()).map(|i| self.0.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `self * v` for a plain vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols(), v.len(), "mul_vec dimension");
        let mut out = vec![0.0; self.rows()];
        // nalgebra storage is column-major; walk columns for locality.
        for (j, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let col = self.0.column(j);
            for (o, c) in out.iter_mut().zip(col.iter()) {
                *o += c * x;
            }
        }
        out
    }

    /// Largest entrywise asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.rows().min(self.cols());
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Mat {
        Mat((&self.0 + self.0.transpose()) * 0.5)
    }

    fn check_symmetric(&self) -> Result<(), NumericsError> {
        if self.rows() != self.cols() {
            return Err(NumericsError::NotSquare(self.rows(), self.cols()));
        }
        let scale = self.max_abs().max(1.0);
        let asym = self.asymmetry();
        if asym > tol::SYMMETRY * scale {
            return Err(NumericsError::NotSymmetric(asym));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut f64 {
        &mut self.0[idx]
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        Mat(&self.0 + &rhs.0)
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        Mat(&self.0 - &rhs.0)
    }
}

impl Mul for &Mat {
    type Output = Mat;
    /// Unchecked product; panics on mismatch. Use [`matmul`] for a checked one.
    fn mul(self, rhs: &Mat) -> Mat {
        Mat(&self.0 * &rhs.0)
    }
}

pub fn matmul(a: &Mat, b: &Mat) -> Result<Mat, NumericsError> {
    if a.cols() != b.rows() {
        return Err(NumericsError::DimensionMismatch { op: "matmul", lhs: a.shape(), rhs: b.shape() });
    }
    Ok(a * b)
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
pub fn solve_spd(a: &Mat, b: &Mat) -> Result<Mat, NumericsError> {
    if a.rows() != a.cols() {
        return Err(NumericsError::NotSquare(a.rows(), a.cols()));
    }
    if a.rows() != b.rows() {
        return Err(NumericsError::DimensionMismatch { op: "solve_spd", lhs: a.shape(), rhs: b.shape() });
    }
    a.check_symmetric()?;
    let n = a.rows();
    // Hand-rolled so the failing pivot can be reported.
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a.0[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(NumericsError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a.0[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    let mut x = b.0.clone();
    // forward: L y = b
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(Mat(x))
}

/// Moore–Penrose pseudo-inverse with singular values below
/// `tol * sigma_max` treated as zero.
pub fn pinv(a: &Mat, tol: f64) -> Mat {
    let (r, c) = a.shape();
    if r == 0 || c == 0 || a.max_abs() == 0.0 {
        return Mat::zeros(c, r);
    }
    let svd = a.0.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax;
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let k = svd.singular_values.len();
    let mut out = DMatrix::zeros(c, r);
    for s in 0..k {
        let sv = svd.singular_values[s];
        if sv <= cut || sv == 0.0 {
            continue;
        }
        out += (vt.row(s).transpose() / sv) * u.column(s).transpose();
    }
    Mat(out)
}

/// Pseudo-inverse with the default relative cutoff.
pub fn pinv_default(a: &Mat) -> Mat {
    pinv(a, tol::PINV_RELATIVE)
}

/// Symmetric eigendecomposition; eigenvalues sorted descending, eigenvectors
/// as matching columns.
pub fn sym_eig(a: &Mat) -> Result<(Vec<f64>, Mat), NumericsError> {
    a.check_symmetric()?;
    let eig = a.symmetrized().0.symmetric_eigen();
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, Mat(vecs)))
}

/// Rebuilds `V diag(f(λ)) Vᵀ` from a symmetric eigendecomposition.
pub fn spectral_map(values: &[f64], vectors: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let n = vectors.rows();
    let mut scaled = vectors.0.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = f(v);
        scaled.column_mut(j).scale_mut(s);
    }
    let _ = n;
    Mat(scaled * vectors.0.transpose())
}

/// Spectral radius of a general square matrix from its Schur form.
pub fn spectral_radius(a: &Mat) -> f64 {
    if a.rows() == 0 {
        return 0.0;
    }
    a.0.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Power-iteration growth estimate `‖A^k x‖^{1/k}`. Converges to the
/// spectral radius, but slowly when the dominant eigenvalues are a complex
/// pair; used as a cheap diagnostic, not for rescaling.
pub fn power_iteration_radius(a: &Mat, steps: usize) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut log_growth = 0.0;
    let mut prev = f64::NAN;
    let mut done = 0;
    for k in 1..=steps {
        let y = a.mul_vec(&x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        log_growth += norm.ln();
        x = y.into_iter().map(|v| v / norm).collect();
        let est = (log_growth / k as f64).exp();
        done = k;
        if (est - prev).abs() < tol::POWER_CONVERGENCE * est.max(1.0) && k > 50 {
            return est;
        }
        prev = est;
    }
    (log_growth / done as f64).exp()
}

/// Sparse random recurrent matrix rescaled to the requested spectral
/// radius.
pub fn random_reservoir(
    n: usize,
    density: f64,
    spectral_radius_target: f64,
    rs: &RandomSource,
) -> Result<Mat, NumericsError> {
    if n == 0 {
        return Err(NumericsError::InvalidParameter("reservoir size must be positive".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(NumericsError::InvalidParameter(format!("density {density} not in (0,1]")));
    }
    if !(spectral_radius_target > 0.0 && spectral_radius_target < 1.0) {
        return Err(NumericsError::InvalidParameter(format!("spectral radius {spectral_radius_target} not in (0,1)")));
    }
    raw_reservoir(n, density, spectral_radius_target, rs)
}

/// Same as [`random_reservoir`] without the `ρ < 1` precondition. Only the
/// invariant checker uses this, to build deliberately non-echo-state
/// reservoirs.
pub fn raw_reservoir(n: usize, density: f64, target: f64, rs: &RandomSource) -> Result<Mat, NumericsError> {
    const MAX_ATTEMPTS: usize = 16;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rs.derive(&format!("attempt-{attempt}")).rng();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if rng.gen::<f64>() < density {
                    m[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let mat = Mat(m);
        let rho = spectral_radius(&mat);
        if rho > 1e-12 && rho.is_finite() {
            return Ok(mat.scale(target / rho));
        }
    }
    Err(NumericsError::DegenerateReservoir(MAX_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_mat(r: usize, c: usize, seed: u64) -> Mat {
        let mut rng = RandomSource::new(seed).rng();
        let data: Vec<f64> = (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Mat::from_rows(r, c, &data)
    }

    #[test]
    fn matmul_identity_and_hand_case() {
        let a = random_mat(3, 4, 1);
        assert_eq!(matmul(&Mat::identity(3), &a).unwrap(), a);
        let x = Mat::from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let y = Mat::from_rows(2, 1, &[0.0, 1.0]);
        assert_eq!(matmul(&x, &y).unwrap(), Mat::from_rows(2, 1, &[2.0, 4.0]));
    }

    #[test]
    fn matmul_transpose_identity() {
        let a = random_mat(5, 5, 2);
        let b = random_mat(5, 5, 3);
        let lhs = matmul(&a, &b).unwrap().transpose();
        let rhs = matmul(&b.transpose(), &a.transpose()).unwrap();
        assert!((&lhs - &rhs).max_abs() <= 1e-12);
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let err = matmul(&Mat::zeros(2, 3), &Mat::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, NumericsError::DimensionMismatch { .. }));
    }

    #[test]
    fn solve_spd_cases() {
        let b = random_mat(3, 2, 4);
        assert!((&solve_spd(&Mat::identity(3), &b).unwrap() - &b).max_abs() < 1e-15);
        let d = Mat::from_diag(&[2.0, 4.0]);
        let x = solve_spd(&d, &Mat::from_rows(2, 1, &[2.0, 8.0])).unwrap();
        assert!((&x - &Mat::from_rows(2, 1, &[1.0, 2.0])).max_abs() < 1e-15);

        let a = random_mat(8, 8, 5);
        let spd = &(&a.transpose() * &a) + &Mat::identity(8);
        let rhs = random_mat(8, 3, 6);
        let sol = solve_spd(&spd, &rhs).unwrap();
        let resid = (&(&spd * &sol) - &rhs).norm() / rhs.norm();
        assert!(resid <= tol::SOLVE_RESIDUAL, "residual {resid}");
    }

    #[test]
    fn solve_spd_detects_indefinite() {
        let a = Mat::from_rows(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = solve_spd(&a, &Mat::identity(2)).unwrap_err();
        assert!(matches!(err, NumericsError::NotPositiveDefinite { pivot: 1, .. }));
    }

    fn penrose_residuals(a: &Mat, p: &Mat) -> [f64; 4] {
        let apa = &(a * p) * a;
        let pap = &(p * a) * p;
        let ap = a * p;
        let pa = p * a;
        [
            (&apa - a).max_abs(),
            (&pap - p).max_abs(),
            (&ap.transpose() - &ap).max_abs(),
            (&pa.transpose() - &pa).max_abs(),
        ]
    }

    #[test]
    fn pinv_cases() {
        let a = Mat::from_rows(2, 2, &[4.0, 7.0, 2.0, 6.0]);
        let inv = Mat::from_rows(2, 2, &[0.6, -0.7, -0.2, 0.4]);
        assert!((&pinv_default(&a) - &inv).max_abs() < 1e-9);
        assert_eq!(pinv_default(&Mat::zeros(3, 2)), Mat::zeros(2, 3));

        let r1 = Mat::from_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let p = pinv_default(&r1);
        for r in penrose_residuals(&r1, &p) {
            assert!(r < 1e-9, "{r}");
        }
        // Closed form for rank one: A / ‖A‖_F²
        assert!((&p - &r1.scale(1.0 / 25.0)).max_abs() < 1e-12);
    }

    #[test]
    fn pinv_of_orthogonal_is_transpose() {
        let a = random_mat(6, 6, 7);
        let q = Mat(a.0.clone().qr().q());
        assert!((&pinv_default(&q) - &q.transpose()).max_abs() < 1e-9);
    }

    #[test]
    fn sym_eig_cases() {
        let (vals, _) = sym_eig(&Mat::from_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(vals, vec![3.0, 1.0]);
        let (vals, _) = sym_eig(&Mat::identity(4)).unwrap();
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-15));

        let a = random_mat(6, 6, 8).symmetrized();
        let (vals, vecs) = sym_eig(&a).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = spectral_map(&vals, &vecs, |v| v);
        assert!((&rebuilt - &a).max_abs() <= 1e-9);
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let a = Mat::from_rows(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&a), Err(NumericsError::NotSymmetric(_))));
    }

    #[test]
    fn scalar_reservoir() {
        let w = random_reservoir(1, 1.0, 0.5, &RandomSource::new(3)).unwrap();
        assert!((w[(0, 0)].abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reservoir_is_deterministic_and_sparse() {
        let rs = RandomSource::new(11).derive("reservoir");
        let a = random_reservoir(100, 0.1, 0.9, &rs).unwrap();
        let b = random_reservoir(100, 0.1, 0.9, &rs).unwrap();
        assert_eq!(a, b);
        let nnz = a.0.iter().filter(|v| **v != 0.0).count() as f64;
        assert!((nnz / 10_000.0 - 0.1).abs() < 0.02);
    }

    #[test]
    fn reservoir_parameters_validated() {
        let rs = RandomSource::new(1);
        assert!(random_reservoir(10, 0.0, 0.5, &rs).is_err());
        assert!(random_reservoir(10, 0.5, 1.0, &rs).is_err());
    }

    #[test]
    fn power_iteration_on_symmetric_matches_eigs() {
        let a = random_mat(20, 20, 9).symmetrized();
        let (vals, _) = sym_eig(&a).unwrap();
        let rho = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let est = power_iteration_radius(&a, 20_000);
        assert!((est - rho).abs() / rho < 1e-2, "{est} vs {rho}");
    }
}
