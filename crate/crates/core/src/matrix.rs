//! Dense real matrix kernels for desk-scale problems.
//!
//! [`Matrix`] is a plain row-major buffer. [`SymMatrix`] wraps a matrix that is
//! exactly symmetric; the constructor symmetrizes its input as `(M + Mᵀ)/2` so
//! that the eigen-solvers downstream can rely on `s[i][j] == s[j][i]`.
//!
//! Symmetric eigenvalues come from cyclic Jacobi rotations. Eigenvalues of
//! general square matrices use a closed form up to 2×2 and a real Schur
//! decomposition above that.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute eigenvalue tolerance used when callers have no better choice.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries. Rejects empty shapes,
    /// a wrong entry count, and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix shape {rows}x{cols} is empty"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product `self · rhs`.
    ///
    /// Panics on incompatible shapes; all callers in this crate construct
    /// shapes from a validated system.
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec shape mismatch");
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.add(&rhs.scale(-1.0))
    }

    /// `Gᵀ · X · G` with `self` playing the role of `G`.
    pub fn congruence(&self, x: &Matrix) -> Matrix {
        self.transpose().matmul(x).matmul(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// `Aᵖ` by repeated squaring; `A⁰` is the identity.
pub fn mat_pow(a: &Matrix, p: u32) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let mut result = Matrix::identity(a.rows);
    let mut base = a.clone();
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            result = result.matmul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.matmul(&base);
        }
    }
    Ok(result)
}

/// Largest eigenvalue modulus of a general square matrix.
pub fn spectral_radius(a: &Matrix, tol: f64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if !a.all_finite() {
        return Err(Error::NonFinite);
    }
    match a.rows {
        1 => Ok(a[(0, 0)].abs()),
        2 => Ok(spectral_radius_2x2(a)),
        _ => {
            let schur = nalgebra::linalg::Schur::try_new(a.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER)
                .ok_or_else(|| {
                    Error::NumericalFailure(format!(
                        "real Schur iteration did not converge in {SCHUR_MAX_ITER} steps"
                    ))
                })?;
            Ok(schur
                .complex_eigenvalues()
                .iter()
                .fold(0.0, |m: f64, z| m.max(z.norm())))
        }
    }
}

/// Roots of `λ² − tr·λ + det`.
fn spectral_radius_2x2(a: &Matrix) -> f64 {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let half = 0.5 * tr;
    // (a−d)²/4 + bc avoids the cancellation in tr²/4 − det.
    let diff = 0.5 * (a[(0, 0)] - a[(1, 1)]);
    let disc = diff * diff + a[(0, 1)] * a[(1, 0)];
    if disc < 0.0 {
        return det.abs().sqrt();
    }
    let root = disc.sqrt();
    let big = if half >= 0.0 { half + root } else { half - root };
    let small = if big != 0.0 { det / big } else { 0.0 };
    big.abs().max(small.abs())
}

/// Symmetric matrix with exactly mirrored entries.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Symmetrizes `m` as `(M + Mᵀ)/2`.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        if !m.all_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self::symmetrize(m))
    }

    pub(crate) fn symmetrize(mut m: Matrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        SymMatrix(Matrix::identity(n).scale(c))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix(self.0.scale(c))
    }

    pub fn add(&self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(self.0.add(&rhs.0))
    }

    pub fn sub(&self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(self.0.sub(&rhs.0))
    }

    /// `Gᵀ · self · G`, re-symmetrized to absorb rounding.
    pub fn congruence(&self, g: &Matrix) -> SymMatrix {
        SymMatrix::symmetrize(g.congruence(&self.0))
    }

    /// `xᵀ · self · x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.0.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_eigenvalue(&self, tol: f64) -> Result<f64> {
        max_sym_eigenvalue(self, tol)
    }

    pub fn min_eigenvalue(&self, tol: f64) -> Result<f64> {
        Ok(-max_sym_eigenvalue(&self.scale(-1.0), tol)?)
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self, tol: f64) -> Result<Vec<f64>> {
        let mut ev = jacobi_eigenvalues(&self.0, tol)?;
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Lower Cholesky factor, or `None` when the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.dim();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self.0[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut v = self.0[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / d;
            }
        }
        Some(l)
    }

    /// Inverse of a positive definite matrix, `None` if not positive definite.
    pub fn inverse_spd(&self) -> Option<SymMatrix> {
        let l = self.cholesky()?;
        let n = self.dim();
        // Solve L Lᵀ X = I column by column.
        let mut inv = Matrix::zeros(n, n);
        let mut y = vec![0.0; n];
        for c in 0..n {
            for i in 0..n {
                let mut v = if i == c { 1.0 } else { 0.0 };
                for k in 0..i {
                    v -= l[(i, k)] * y[k];
                }
                y[i] = v / l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut v = y[i];
                for k in (i + 1)..n {
                    v -= l[(k, i)] * inv[(k, c)];
                }
                inv[(i, c)] = v / l[(i, i)];
            }
        }
        Some(SymMatrix::symmetrize(inv))
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Matrix::deserialize(d)?;
        SymMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// `λ_max(S)` to absolute accuracy `tol`; `S ≺ 0` iff the result is negative.
pub fn max_sym_eigenvalue(s: &SymMatrix, tol: f64) -> Result<f64> {
    let ev = jacobi_eigenvalues(&s.0, tol)?;
    Ok(ev.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Cyclic Jacobi. The diagonal is within `off(A)` of the spectrum (Weyl), so
/// sweeping stops once the off-diagonal Frobenius norm drops below `tol` or
/// reaches the rounding floor of the matrix.
fn jacobi_eigenvalues(m: &Matrix, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let n = m.rows;
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    if n == 2 {
        let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
        let mid = 0.5 * (a + d);
        let rad = (0.5 * (a - d)).hypot(b);
        return Ok(vec![mid - rad, mid + rad]);
    }
    let mut a = m.clone();
    let floor = 4.0 * f64::EPSILON * a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= tol.max(floor) || off == 0.0 {
            return Ok((0..n).map(|i| a[(i, i)]).collect());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NumericalFailure(format!(
        "Jacobi sweeps did not converge in {JACOBI_MAX_SWEEPS} sweeps"
    )))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn a1() -> Matrix {
        Matrix::from_rows(&[vec![1.0, 0.1], vec![-0.2, 0.9]]).unwrap()
    }

    fn a2() -> Matrix {
        Matrix::from_rows(&[vec![1.0, 0.1], vec![-0.9, 0.9]]).unwrap()
    }

    /// Characteristic polynomial roots, written independently of the kernel.
    fn char_poly_radius(m: &Matrix) -> f64 {
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = tr * tr - 4.0 * det;
        if disc < 0.0 {
            det.sqrt()
        } else {
            let r = disc.sqrt();
            ((tr + r) / 2.0).abs().max(((tr - r) / 2.0).abs())
        }
    }

    #[test]
    fn pow_zero_and_one() {
        let a = a1();
        assert_eq!(mat_pow(&a, 0).unwrap(), Matrix::identity(2));
        assert_eq!(mat_pow(&a, 1).unwrap(), a);
    }

    #[test]
    fn pow_two_matches_hand_product() {
        // [[1,0.1],[-0.2,0.9]]² by hand: [[1-0.02, 0.1+0.09], [-0.2-0.18, -0.02+0.81]]
        let p = mat_pow(&a1(), 2).unwrap();
        let expected = [[0.98, 0.19], [-0.38, 0.79]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(p[(i, j)], expected[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn pow_rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(mat_pow(&m, 2), Err(Error::NotSquare { .. })));
        assert!(matches!(spectral_radius(&m, 1e-10), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_abs_diff_eq!(spectral_radius(&Matrix::identity(2), 1e-10).unwrap(), 1.0);
        assert_abs_diff_eq!(spectral_radius(&a1(), 1e-10).unwrap(), 0.92f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(spectral_radius(&a2(), 1e-10).unwrap(), 0.99f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn spectral_radius_large_uses_schur() {
        // Block diagonal with a rotation-scaled block (modulus 0.5·√2) and 0.3.
        let m = Matrix::from_rows(&[
            vec![0.5, -0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 0.3],
        ])
        .unwrap();
        assert_abs_diff_eq!(spectral_radius(&m, 1e-10).unwrap(), 0.5 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn sym_eigen_examples() {
        let i3 = SymMatrix::identity(3);
        assert_abs_diff_eq!(max_sym_eigenvalue(&i3, 1e-10).unwrap(), 1.0, epsilon = 1e-12);
        let d = SymMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -3.0]]).unwrap();
        assert_abs_diff_eq!(max_sym_eigenvalue(&d, 1e-10).unwrap(), 2.0, epsilon = 1e-12);
        let x = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(max_sym_eigenvalue(&x, 1e-10).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_on_4x4_matches_known_spectrum() {
        // Tridiagonal [-1, 2, -1] of size 4 has eigenvalues 2 - 2cos(kπ/5).
        let mut m = Matrix::zeros(4, 4);
        for i in 0..4 {
            m[(i, i)] = 2.0;
            if i + 1 < 4 {
                m[(i, i + 1)] = -1.0;
                m[(i + 1, i)] = -1.0;
            }
        }
        let ev = SymMatrix::new(m).unwrap().eigenvalues(1e-12).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let expected = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 5.0).cos();
            assert_abs_diff_eq!(*v, expected, epsilon = 1e-11);
        }
    }

    #[test]
    fn symmetrization_is_exact() {
        let s = SymMatrix::new(Matrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]).unwrap()).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(0, 1)], s[(1, 0)]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn spd_inverse() {
        let s = SymMatrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 0.5], vec![0.0, 0.5, 2.0]]).unwrap();
        let inv = s.inverse_spd().unwrap();
        let prod = s.as_matrix().matmul(inv.as_matrix());
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)], e, epsilon = 1e-14);
            }
        }
        assert!(SymMatrix::scaled_identity(2, -1.0).cholesky().is_none());
    }

    fn square(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |d| Matrix::new(n, n, d).unwrap())
    }

    fn sized_square() -> impl Strategy<Value = Matrix> {
        (2usize..=4).prop_flat_map(square)
    }

    proptest! {
        #[test]
        fn pow_adds_exponents(a in sized_square(), p in 0u32..=8, q in 0u32..=8) {
            let lhs = mat_pow(&a, p + q).unwrap();
            let rhs = mat_pow(&a, p).unwrap().matmul(&mat_pow(&a, q).unwrap());
            let scale = lhs.max_abs().max(1.0);
            for (x, y) in lhs.as_slice().iter().zip(rhs.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn radius_of_ab_equals_ba(
            (a, b) in (2usize..=4).prop_flat_map(|n| (square(n), square(n)))
        ) {
            let ab = spectral_radius(&a.matmul(&b), 1e-10).unwrap();
            let ba = spectral_radius(&b.matmul(&a), 1e-10).unwrap();
            // Defective eigenvalues are only resolved to O(√ε); stay above that.
            prop_assert!((ab - ba).abs() <= 1e-7 * ab.max(1.0));
        }

        #[test]
        fn two_by_two_radius_matches_char_poly(a in square(2)) {
            let got = spectral_radius(&a, 1e-10).unwrap();
            prop_assert!((got - char_poly_radius(&a)).abs() <= 1e-9);
        }

        #[test]
        fn negated_scaled_identity(c in -100.0f64..100.0, n in 1usize..=5) {
            let s = SymMatrix::scaled_identity(n, c);
            prop_assert!((max_sym_eigenvalue(&s.scale(-1.0), 1e-10).unwrap() + c).abs() <= 1e-10);
            prop_assert!((s.min_eigenvalue(1e-10).unwrap() - c).abs() <= 1e-10);
        }

        #[test]
        fn radius_of_symmetric_from_extreme_eigenvalues(m in sized_square()) {
            let s = SymMatrix::new(m).unwrap();
            let tol = 1e-10;
            let hi = max_sym_eigenvalue(&s, tol).unwrap();
            let lo = -max_sym_eigenvalue(&s.scale(-1.0), tol).unwrap();
            let rho = spectral_radius(s.as_matrix(), tol).unwrap();
            prop_assert!((rho - hi.abs().max(lo.abs())).abs() <= 2.0 * tol);
        }
    }
}
