use num_complex::Complex64;

use super::{CMatrix, LinalgError, Result};

/// LU factorization with partial pivoting, `P A = L U`.
///
/// Factoring never fails on singular input; [`Lu::solve`] does.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    swaps: usize,
    singular: bool,
}

/// Determinant kept as phase and log-modulus to avoid overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinant {
    /// Unit-modulus phase; `±1` for real matrices. Zero when the determinant vanishes.
    pub phase: Complex64,
    /// `ln |det|`, `-inf` when the determinant vanishes.
    pub log_abs: f64,
}

impl Determinant {
    pub fn value(&self) -> Complex64 {
        if self.log_abs == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        self.phase * self.log_abs.exp()
    }

    pub fn abs(&self) -> f64 {
        self.log_abs.exp()
    }

    /// Sign of the real part of the phase; 0 for a vanishing determinant.
    pub fn real_sign(&self) -> i8 {
        if self.log_abs == f64::NEG_INFINITY || self.phase.re == 0.0 {
            0
        } else if self.phase.re > 0.0 {
            1
        } else {
            -1
        }
    }
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                op: "lu",
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.to_dense();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let tol = a.max_abs() * n as f64 * f64::EPSILON;
        let mut singular = false;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            if pmax <= tol {
                singular = true;
            }
            let pivot = lu[k * n + k];
            if pivot == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Lu {
            n,
            lu,
            perm,
            swaps,
            singular,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// True when some pivot fell below `n·ε·max|a|`.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> Determinant {
        let mut phase = if self.swaps % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        };
        let mut log_abs = 0.0;
        for k in 0..self.n {
            let d = self.lu[k * self.n + k];
            let r = d.norm();
            if r == 0.0 {
                return Determinant {
                    phase: Complex64::new(0.0, 0.0),
                    log_abs: f64::NEG_INFINITY,
                };
            }
            phase *= d / r;
            log_abs += r.ln();
        }
        Determinant { phase, log_abs }
    }

    /// Solves `A X = B` for every column of `b`.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.n;
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                op: "lu_solve",
                left: (n, n),
                right: b.shape(),
            });
        }
        if self.singular {
            return Err(LinalgError::SingularMatrix);
        }
        let cols = b.cols();
        let bd = b.to_dense();
        let mut x = vec![Complex64::new(0.0, 0.0); n * cols];
        for c in 0..cols {
            let mut y: Vec<Complex64> = (0..n).map(|i| bd[self.perm[i] * cols + c]).collect();
            for i in 0..n {
                let mut s = y[i];
                for j in 0..i {
                    s -= self.lu[i * n + j] * y[j];
                }
                y[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in i + 1..n {
                    s -= self.lu[i * n + j] * y[j];
                }
                y[i] = s / self.lu[i * n + i];
            }
            for i in 0..n {
                x[i * cols + c] = y[i];
            }
        }
        Ok(CMatrix::from_dense(n, cols, &x))
    }

    /// Real right-hand side convenience; returns the real part of the solution.
    pub fn solve_real(&self, b: &[f64]) -> Result<Vec<f64>> {
        let x = self.solve(&CMatrix::real_column(b))?;
        Ok(x.re().to_vec())
    }
}

pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    Lu::new(a)?.solve(b)
}

pub fn determinant(a: &CMatrix) -> Result<Determinant> {
    Ok(Lu::new(a)?.determinant())
}
