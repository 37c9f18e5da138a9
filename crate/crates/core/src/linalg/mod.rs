//! Dense real and complex linear algebra at desk scale.
//!
//! [`CMatrix`] stores the real and imaginary parts in separate row-major
//! arrays, so `M = M_r + i M_i` is available without copying through
//! [`CMatrix::re`] and [`CMatrix::im`]. Real matrices are complex matrices
//! whose imaginary part is identically zero.

mod eigen;
mod lu;
mod svd;

use std::fmt;
use std::ops::{Deref, DerefMut};

use num_complex::Complex64;
use thiserror::Error;

pub use eigen::eigenvalues;
pub use lu::{determinant, lu_solve, Determinant, Lu};
pub use svd::{pinv, svd, SvdResult, DEFAULT_RCOND};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix must have positive dimensions, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense complex matrix with split real/imaginary row-major storage.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            re: vec![0.0; rows * cols],
            im: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.re[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major real and imaginary parts.
    pub fn from_parts(rows: usize, cols: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix { rows, cols });
        }
        if re.len() != rows * cols || im.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                op: "from_parts",
                left: (rows, cols),
                right: (re.len(), im.len()),
            });
        }
        Ok(Self { rows, cols, re, im })
    }

    pub fn from_real(rows: usize, cols: usize, re: Vec<f64>) -> Result<Self> {
        let im = vec![0.0; re.len()];
        Self::from_parts(rows, cols, re, im)
    }

    /// Builds a matrix from nested rows of complex entries. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| {
            assert_eq!(rows[i].len(), c, "ragged row {i}");
            rows[i][j]
        })
    }

    /// Builds a real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| {
            assert_eq!(rows[i].len(), c, "ragged row {i}");
            Complex64::new(rows[i][j], 0.0)
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = f(i, j);
                m.re[i * cols + j] = z.re;
                m.im[i * cols + j] = z.im;
            }
        }
        m
    }

    /// Column vector from complex entries.
    pub fn column(values: &[Complex64]) -> Self {
        Self::from_fn(values.len(), 1, |i, _| values[i])
    }

    pub fn real_column(values: &[f64]) -> Self {
        Self::from_fn(values.len(), 1, |i, _| Complex64::new(values[i], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major real parts.
    pub fn re(&self) -> &[f64] {
        &self.re
    }

    /// Row-major imaginary parts.
    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn is_real(&self) -> bool {
        self.im.iter().all(|&v| v == 0.0)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.cols + j;
        Complex64::new(self.re[k], self.im[k])
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        let k = i * self.cols + j;
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    /// `M_r` as a real matrix.
    pub fn real_part(&self) -> CMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.clone(),
            im: vec![0.0; self.re.len()],
        }
    }

    /// `M_i` as a real matrix.
    pub fn imag_part(&self) -> CMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.im.clone(),
            im: vec![0.0; self.im.len()],
        }
    }

    pub fn conjugate(&self) -> CMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.clone(),
            im: self.im.iter().map(|v| -v).collect(),
        }
    }

    pub fn transpose(&self) -> CMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.re[j * self.rows + i] = self.re[i * self.cols + j];
                t.im[j * self.rows + i] = self.im[i * self.cols + j];
            }
        }
        t
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMatrix {
        self.transpose().conjugate()
    }

    fn check_same_shape(&self, other: &CMatrix, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other, "add")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.iter().zip(&other.re).map(|(a, b)| a + b).collect(),
            im: self.im.iter().zip(&other.im).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other, "sub")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.iter().zip(&other.re).map(|(a, b)| a - b).collect(),
            im: self.im.iter().zip(&other.im).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        let mut out = Self::zeros(self.rows, self.cols);
        for k in 0..self.re.len() {
            let z = Complex64::new(self.re[k], self.im[k]) * s;
            out.re[k] = z.re;
            out.im[k] = z.im;
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.iter().map(|v| v * s).collect(),
            im: self.im.iter().map(|v| v * s).collect(),
        }
    }

    pub fn neg(&self) -> CMatrix {
        self.scale_real(-1.0)
    }

    /// Entry-wise product with a complex scalar map, e.g. `γ ⊙ E`.
    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> CMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| f(self.get(i, j)))
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, p, q) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, q);
        for i in 0..n {
            for k in 0..p {
                let (ar, ai) = (self.re[i * p + k], self.im[i * p + k]);
                if ar == 0.0 && ai == 0.0 {
                    continue;
                }
                for j in 0..q {
                    let (br, bi) = (other.re[k * q + j], other.im[k * q + j]);
                    out.re[i * q + j] += ar * br - ai * bi;
                    out.im[i * q + j] += ar * bi + ai * br;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (ar, ac) = self.shape();
        let (br, bc) = other.shape();
        let mut out = Self::zeros(ar * br, ac * bc);
        for i in 0..ar {
            for j in 0..ac {
                let a = self.get(i, j);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..br {
                    for l in 0..bc {
                        out.set(i * br + k, j * bc + l, a * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Column-major stacking into an `rows*cols × 1` column.
    pub fn vec(&self) -> CMatrix {
        let mut out = Self::zeros(self.rows * self.cols, 1);
        for j in 0..self.cols {
            for i in 0..self.rows {
                let k = j * self.rows + i;
                out.re[k] = self.re[i * self.cols + j];
                out.im[k] = self.im[i * self.cols + j];
            }
        }
        out
    }

    /// Inverse of [`CMatrix::vec`]. Accepts any matrix holding `rows*cols` entries
    /// and reads them in row-major storage order (i.e. a column or row vector).
    pub fn unvec(v: &CMatrix, rows: usize, cols: usize) -> Result<CMatrix> {
        if v.re.len() != rows * cols || (v.rows != 1 && v.cols != 1) {
            return Err(LinalgError::DimensionMismatch {
                op: "unvec",
                left: v.shape(),
                right: (rows, cols),
            });
        }
        let mut out = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                out.re[i * cols + j] = v.re[j * rows + i];
                out.im[i * cols + j] = v.im[j * rows + i];
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.re
            .iter()
            .chain(&self.im)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r.hypot(*i))
            .fold(0.0, f64::max)
    }

    /// `[[a, b], [c, d]]` block assembly.
    pub fn block2x2(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> Result<CMatrix> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "block2x2",
                left: a.shape(),
                right: d.shape(),
            });
        }
        let (r0, c0) = a.shape();
        let mut out = Self::zeros(a.rows + c.rows, a.cols + b.cols);
        for (blk, ro, co) in [(a, 0, 0), (b, 0, c0), (c, r0, 0), (d, r0, c0)] {
            for i in 0..blk.rows {
                for j in 0..blk.cols {
                    out.set(ro + i, co + j, blk.get(i, j));
                }
            }
        }
        Ok(out)
    }

    /// Sub-block copy of `rows × cols` starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
        Self::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Real-only matrix-vector product; the imaginary part is ignored.
    pub fn real_mul_vec(&self, x: &[f64]) -> RVector {
        assert_eq!(self.cols, x.len(), "real_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.re[i * self.cols..(i + 1) * self.cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
        RVector(out)
    }

    pub(crate) fn to_dense(&self) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    pub(crate) fn from_dense(rows: usize, cols: usize, data: &[Complex64]) -> CMatrix {
        Self {
            rows,
            cols,
            re: data.iter().map(|z| z.re).collect(),
            im: data.iter().map(|z| z.im).collect(),
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, " {:+.6e}{:+.6e}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self.get(i, j);
                if j > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{:>10.6} {} {:>9.6}i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Dense real vector, e.g. a stacked state `[vec(X_r); vec(X_i)]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RVector(pub Vec<f64>);

impl RVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &[f64]) -> RVector {
        assert_eq!(self.len(), other.len(), "RVector::sub length mismatch");
        RVector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &[f64]) -> RVector {
        assert_eq!(self.len(), other.len(), "RVector::add length mismatch");
        RVector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: f64) -> RVector {
        RVector(self.0.iter().map(|v| v * s).collect())
    }
}

impl From<Vec<f64>> for RVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for RVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for RVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_with_scalar_identity_is_noop() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 2.0), c(3.0, -1.0)], vec![c(0.5, 0.0), c(0.0, 4.0)]]);
        assert_eq!(CMatrix::identity(1).kron(&m), m);
    }

    #[test]
    fn kron_of_transposed_f_with_identity() {
        // F_r(0) = [[6,1],[1,4]] is symmetric, so F_r^T = F_r.
        let fr = CMatrix::from_real_rows(&[vec![6.0, 1.0], vec![1.0, 4.0]]);
        let k = fr.transpose().kron(&CMatrix::identity(2));
        let expected = CMatrix::from_real_rows(&[
            vec![6.0, 0.0, 1.0, 0.0],
            vec![0.0, 6.0, 0.0, 1.0],
            vec![1.0, 0.0, 4.0, 0.0],
            vec![0.0, 1.0, 0.0, 4.0],
        ]);
        assert_eq!(k, expected);

        let k11 = k.sub(&CMatrix::identity(2).kron(&CMatrix::identity(2))).unwrap();
        let expected = CMatrix::from_real_rows(&[
            vec![5.0, 0.0, 1.0, 0.0],
            vec![0.0, 5.0, 0.0, 1.0],
            vec![1.0, 0.0, 3.0, 0.0],
            vec![0.0, 1.0, 0.0, 3.0],
        ]);
        assert_eq!(k11, expected);
    }

    #[test]
    fn vec_is_column_major() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.vec().re(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(m.vec().shape(), (4, 1));
        let s = CMatrix::from_rows(&[vec![c(2.5, -1.0)]]);
        assert_eq!(s.vec(), s);
    }

    #[test]
    fn unvec_inverts_vec_and_checks_length() {
        let v = CMatrix::real_column(&[1.0, 3.0, 2.0, 4.0]);
        let m = CMatrix::unvec(&v, 2, 2).unwrap();
        assert_eq!(m, CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]));

        let bad = CMatrix::real_column(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(
            CMatrix::unvec(&bad, 2, 2),
            Err(LinalgError::DimensionMismatch { op: "unvec", .. })
        ));
    }

    #[test]
    fn a_times_conj_a_at_zero() {
        let a = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]);
        let p = a.matmul(&a.conjugate()).unwrap();
        assert_eq!(p, CMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]));
    }

    #[test]
    fn conjugation_and_scaling_identities() {
        let m = CMatrix::from_rows(&[vec![c(1.0, -2.0), c(0.3, 0.7)]]);
        assert_eq!(m.conjugate().conjugate(), m);
        assert_eq!(m.scale(c(1.0, 0.0)), m);
        assert_eq!(m.hermitian(), m.transpose().conjugate());
    }

    #[test]
    fn matmul_rejects_nonconformant() {
        let a = CMatrix::zeros(2, 3);
        let b = CMatrix::zeros(2, 3);
        assert!(a.matmul(&b).is_err());
        assert!(a.add(&CMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn frobenius_norm_cases() {
        assert_eq!(CMatrix::zeros(3, 2).frobenius_norm(), 0.0);
        assert_eq!(CMatrix::from_real_rows(&[vec![3.0, 4.0]]).frobenius_norm(), 5.0);
        let z = CMatrix::from_rows(&[vec![c(1.0, 1.0)]]);
        assert!((z.frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn from_parts_validates() {
        assert!(CMatrix::from_parts(0, 2, vec![], vec![]).is_err());
        assert!(CMatrix::from_parts(2, 2, vec![0.0; 4], vec![0.0; 3]).is_err());
        assert!(CMatrix::from_parts(2, 2, vec![0.0; 4], vec![0.0; 4]).is_ok());
    }

    #[test]
    fn block_assembly_round_trips() {
        let a = CMatrix::from_real_rows(&[vec![1.0]]);
        let b = CMatrix::from_real_rows(&[vec![2.0]]);
        let cc = CMatrix::from_real_rows(&[vec![3.0]]);
        let d = CMatrix::from_rows(&[vec![c(4.0, 1.0)]]);
        let m = CMatrix::block2x2(&a, &b, &cc, &d).unwrap();
        assert_eq!(m.block(1, 1, 1, 1), d);
        assert_eq!(m.get(0, 1), c(2.0, 0.0));
    }
}
