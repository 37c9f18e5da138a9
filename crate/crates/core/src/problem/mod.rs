//! Time-variant Sylvester-conjugate problems `X(t)F(t) - A(t)X̄(t) = C(t)`.
//!
//! A problem holds `F` (n×n), `A` (m×m) and `C` (m×n) as [`TimeMatrix`]
//! values, plus an optional exact solution. [`build_wr_br`] maps an instance
//! onto the equivalent real system `W_R x = B_R` of size `2mn`, with the
//! unknown stacked as `[vec(X_r); vec(X_i)]`.

mod file;
mod uniqueness;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{CMatrix, LinalgError, RVector};
use crate::texpr::{EvalError, Expr, ParseError};

pub use file::{load_problem, parse_problem, write_problem, EXAMPLE3_TVP};
pub use uniqueness::{
    check_uniqueness, default_grid, uniqueness_det, uniqueness_eigen, UniquenessReport, UniquenessSample,
    DEFAULT_EPS_DET, DEFAULT_EPS_EIG, DEFAULT_GRID_POINTS,
};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("section [{section}] row {row} col {col}: {source}")]
    Parse {
        section: String,
        row: usize,
        col: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("dimension mismatch in [{section}]: {message}")]
    DimensionMismatch { section: String, message: String },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("[{0}] is built from code, not expressions, and cannot be written as text")]
    NotSymbolic(String),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("cannot read problem file: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ProblemError>;

type MatrixFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Clone)]
enum Entries {
    Symbolic {
        value: Vec<(Expr, Expr)>,
        derivative: Vec<(Expr, Expr)>,
    },
    Closure {
        value: MatrixFn,
        derivative: MatrixFn,
    },
}

/// A matrix-valued function of time together with its time derivative.
#[derive(Clone)]
pub struct TimeMatrix {
    rows: usize,
    cols: usize,
    entries: Entries,
}

impl TimeMatrix {
    /// Row-major `(re, im)` expression pairs; derivatives are taken symbolically.
    pub fn from_exprs(rows: usize, cols: usize, entries: Vec<(Expr, Expr)>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(ProblemError::DimensionMismatch {
                section: "TimeMatrix".into(),
                message: format!("expected {} entries for {rows}x{cols}, got {}", rows * cols, entries.len()),
            });
        }
        let derivative = entries
            .iter()
            .map(|(re, im)| (re.differentiate(), im.differentiate()))
            .collect();
        Ok(Self {
            rows,
            cols,
            entries: Entries::Symbolic {
                value: entries,
                derivative,
            },
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        value: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
        derivative: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            rows,
            cols,
            entries: Entries::Closure {
                value: Arc::new(value),
                derivative: Arc::new(derivative),
            },
        }
    }

    pub fn constant(m: CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let zero = CMatrix::zeros(rows, cols);
        Self::from_fn(rows, cols, move |_| m.clone(), move |_| zero.clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The expression grid, when the matrix was built from expressions.
    pub fn expressions(&self) -> Option<&[(Expr, Expr)]> {
        match &self.entries {
            Entries::Symbolic { value, .. } => Some(value),
            Entries::Closure { .. } => None,
        }
    }

    pub fn eval_at(&self, t: f64) -> Result<CMatrix> {
        match &self.entries {
            Entries::Symbolic { value, .. } => self.eval_grid(value, t),
            Entries::Closure { value, .. } => self.checked(value(t)),
        }
    }

    pub fn derivative_at(&self, t: f64) -> Result<CMatrix> {
        match &self.entries {
            Entries::Symbolic { derivative, .. } => self.eval_grid(derivative, t),
            Entries::Closure { derivative, .. } => self.checked(derivative(t)),
        }
    }

    fn eval_grid(&self, grid: &[(Expr, Expr)], t: f64) -> Result<CMatrix> {
        let mut re = Vec::with_capacity(grid.len());
        let mut im = Vec::with_capacity(grid.len());
        for (r, i) in grid {
            re.push(r.eval(t)?);
            im.push(i.eval(t)?);
        }
        Ok(CMatrix::from_parts(self.rows, self.cols, re, im)?)
    }

    fn checked(&self, m: CMatrix) -> Result<CMatrix> {
        if m.shape() != (self.rows, self.cols) {
            return Err(ProblemError::DimensionMismatch {
                section: "TimeMatrix".into(),
                message: format!("closure returned {:?}, declared {}x{}", m.shape(), self.rows, self.cols),
            });
        }
        Ok(m)
    }
}

impl fmt::Debug for TimeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.entries {
            Entries::Symbolic { .. } => "symbolic",
            Entries::Closure { .. } => "closure",
        };
        write!(f, "TimeMatrix({}x{}, {kind})", self.rows, self.cols)
    }
}

/// Values and derivatives of `F`, `A`, `C` at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub tau: f64,
    pub f: CMatrix,
    pub a: CMatrix,
    pub c: CMatrix,
    pub f_dot: CMatrix,
    pub a_dot: CMatrix,
    pub c_dot: CMatrix,
}

#[derive(Debug, Clone)]
pub struct TvsscmeProblem {
    name: String,
    m: usize,
    n: usize,
    f: TimeMatrix,
    a: TimeMatrix,
    c: TimeMatrix,
    exact: Option<TimeMatrix>,
}

impl TvsscmeProblem {
    pub fn new(
        name: impl Into<String>,
        f: TimeMatrix,
        a: TimeMatrix,
        c: TimeMatrix,
        exact: Option<TimeMatrix>,
    ) -> Result<Self> {
        let (m, n) = (c.rows(), c.cols());
        let check = |section: &str, tm: &TimeMatrix, r: usize, k: usize| {
            if tm.rows() != r || tm.cols() != k {
                Err(ProblemError::DimensionMismatch {
                    section: section.into(),
                    message: format!("expected {r}x{k}, got {}x{}", tm.rows(), tm.cols()),
                })
            } else {
                Ok(())
            }
        };
        check("F", &f, n, n)?;
        check("A", &a, m, m)?;
        if let Some(x) = &exact {
            check("EXACT", x, m, n)?;
        }
        Ok(Self {
            name: name.into(),
            m,
            n,
            f,
            a,
            c,
            exact,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Rows of `X`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Columns of `X`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of the stacked real state, `2mn`.
    pub fn state_dim(&self) -> usize {
        2 * self.m * self.n
    }

    pub fn f(&self) -> &TimeMatrix {
        &self.f
    }

    pub fn a(&self) -> &TimeMatrix {
        &self.a
    }

    pub fn c(&self) -> &TimeMatrix {
        &self.c
    }

    pub fn exact(&self) -> Option<&TimeMatrix> {
        self.exact.as_ref()
    }

    pub fn snapshot(&self, tau: f64) -> Result<Snapshot> {
        Ok(Snapshot {
            tau,
            f: self.f.eval_at(tau)?,
            a: self.a.eval_at(tau)?,
            c: self.c.eval_at(tau)?,
            f_dot: self.f.derivative_at(tau)?,
            a_dot: self.a.derivative_at(tau)?,
            c_dot: self.c.derivative_at(tau)?,
        })
    }

    /// `X F - A X̄ - C` at `tau`.
    pub fn equation_error(&self, x: &CMatrix, tau: f64) -> Result<CMatrix> {
        let f = self.f.eval_at(tau)?;
        let a = self.a.eval_at(tau)?;
        let c = self.c.eval_at(tau)?;
        Ok(x.matmul(&f)?.sub(&a.matmul(&x.conjugate())?)?.sub(&c)?)
    }

    /// Stacked exact state `[vec(X*_r); vec(X*_i)]`, if an exact solution is attached.
    pub fn exact_state(&self, tau: f64) -> Option<Result<RVector>> {
        self.exact
            .as_ref()
            .map(|x| x.eval_at(tau).map(|m| crate::models::flatten_state(&m)))
    }

    /// Time derivative of the stacked exact state.
    pub fn exact_state_derivative(&self, tau: f64) -> Option<Result<RVector>> {
        self.exact
            .as_ref()
            .map(|x| x.derivative_at(tau).map(|m| crate::models::flatten_state(&m)))
    }

    /// Residual of a stacked state: `‖x - x*(τ)‖` when an exact solution is
    /// attached, otherwise the equation residual `‖X F - A X̄ - C‖_F`.
    pub fn residual(&self, tau: f64, state: &[f64]) -> Result<f64> {
        match self.exact_state(tau) {
            Some(exact) => Ok(exact?.sub(state).norm2()),
            None => {
                let x = crate::models::lift_state(state, self.m, self.n)?;
                Ok(self.equation_error(&x, tau)?.frobenius_norm())
            }
        }
    }
}

/// Real-field system `W_R x = B_R` with time derivatives.
#[derive(Debug, Clone)]
pub struct RealSystem {
    pub w: CMatrix,
    pub b: RVector,
    pub w_dot: CMatrix,
    pub b_dot: RVector,
}

/// `[K11, K12; K21, K22]` from `F` and `A` via real-part Kronecker blocks.
fn real_block_matrix(f: &CMatrix, a: &CMatrix, m: usize, n: usize) -> CMatrix {
    let im_ = CMatrix::identity(m);
    let in_ = CMatrix::identity(n);
    let fr_t = f.real_part().transpose().kron(&im_);
    let fi_t = f.imag_part().transpose().kron(&im_);
    let ar = in_.kron(&a.real_part());
    let ai = in_.kron(&a.imag_part());
    // shapes are fixed by construction, the unwraps cannot fire
    let k11 = fr_t.sub(&ar).unwrap();
    let k12 = fi_t.add(&ai).unwrap().neg();
    let k21 = fi_t.sub(&ai).unwrap();
    let k22 = fr_t.add(&ar).unwrap();
    CMatrix::block2x2(&k11, &k12, &k21, &k22).unwrap()
}

fn stack_real_imag(m: &CMatrix) -> RVector {
    let v = m.vec();
    let mut out = v.re().to_vec();
    out.extend_from_slice(v.im());
    RVector(out)
}

pub fn build_wr_br(p: &TvsscmeProblem, tau: f64) -> Result<RealSystem> {
    let s = p.snapshot(tau)?;
    Ok(RealSystem {
        w: real_block_matrix(&s.f, &s.a, p.m, p.n),
        b: stack_real_imag(&s.c),
        // d/dt is linear, so the same block formula applies to the derivatives
        w_dot: real_block_matrix(&s.f_dot, &s.a_dot, p.m, p.n),
        b_dot: stack_real_imag(&s.c_dot),
    })
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn split(re: [[f64; 2]; 2], im: [[f64; 2]; 2]) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| c64(re[i][j], im[i][j]))
}

/// The 2×2 benchmark instance with closed-form exact solution
/// `X*(t) = [[s, c], [-c, -s]] (1 + i)`, where `s = sin t`, `c = cos t`.
///
/// Entries and derivatives are hand-coded closures; the shipped
/// `example3.tvp` file describes the same instance symbolically.
pub fn example3() -> TvsscmeProblem {
    let f = TimeMatrix::from_fn(
        2,
        2,
        |t| {
            let (s, c) = t.sin_cos();
            split([[6.0 + s, c], [c, 4.0 + s]], [[c, s], [s, c]])
        },
        |t| {
            let (s, c) = t.sin_cos();
            split([[c, -s], [-s, c]], [[-s, c], [c, -s]])
        },
    );
    let a = TimeMatrix::from_fn(
        2,
        2,
        |t| {
            let (s, c) = t.sin_cos();
            split([[c, s], [-s, c]], [[s, c], [c, -s]])
        },
        |t| {
            let (s, c) = t.sin_cos();
            split([[-s, c], [-c, -s]], [[c, -s], [-s, -c]])
        },
    );
    let cm = TimeMatrix::from_fn(
        2,
        2,
        |t| {
            let (s, c) = t.sin_cos();
            let s2 = (2.0 * t).sin();
            split(
                [
                    [2.0 * c * c - 2.0 * c * s + 6.0 * s, 4.0 * c + 2.0 * c * s - 2.0 * c * c],
                    [-2.0 * s2 - 6.0 * c + 2.0, 2.0 * s2 - 4.0 * s - 2.0],
                ],
                [
                    [2.0 * c * c + 2.0 * c * s + 6.0 * s, 4.0 * c + 2.0 * c * s + 2.0 * c * c],
                    [-2.0 * s2 - 6.0 * c - 2.0, -2.0 * s2 - 4.0 * s - 2.0],
                ],
            )
        },
        |t| {
            let (s, c) = t.sin_cos();
            let c2 = (2.0 * t).cos();
            // d(c²) = -2cs, d(cs) = c² - s² = cos 2t
            split(
                [
                    [-4.0 * c * s - 2.0 * c2 + 6.0 * c, -4.0 * s + 2.0 * c2 + 4.0 * c * s],
                    [-4.0 * c2 + 6.0 * s, 4.0 * c2 - 4.0 * c],
                ],
                [
                    [-4.0 * c * s + 2.0 * c2 + 6.0 * c, -4.0 * s + 2.0 * c2 - 4.0 * c * s],
                    [-4.0 * c2 + 6.0 * s, -4.0 * c2 - 4.0 * c],
                ],
            )
        },
    );
    let exact = TimeMatrix::from_fn(
        2,
        2,
        |t| {
            let (s, c) = t.sin_cos();
            let m = [[s, c], [-c, -s]];
            split(m, m)
        },
        |t| {
            let (s, c) = t.sin_cos();
            let m = [[c, -s], [s, -c]];
            split(m, m)
        },
    );
    TvsscmeProblem::new("example3", f, a, cm, Some(exact)).expect("example3 dimensions are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.sub(b).unwrap().frobenius_norm() <= tol
    }

    #[test]
    fn example3_values_at_zero() {
        let p = example3();
        let f0 = p.f().eval_at(0.0).unwrap();
        assert_eq!(f0, split([[6.0, 1.0], [1.0, 4.0]], [[1.0, 0.0], [0.0, 1.0]]));
        let c0 = p.c().eval_at(0.0).unwrap();
        assert_eq!(c0, split([[2.0, 2.0], [-4.0, -2.0]], [[2.0, 6.0], [-8.0, -2.0]]));
    }

    #[test]
    fn exact_solution_satisfies_equation_at_zero() {
        let p = example3();
        let x = p.exact().unwrap().eval_at(0.0).unwrap();
        let f = p.f().eval_at(0.0).unwrap();
        let a = p.a().eval_at(0.0).unwrap();
        let lhs = x.matmul(&f).unwrap().sub(&a.matmul(&x.conjugate()).unwrap()).unwrap();
        let expected = split([[2.0, 2.0], [-4.0, -2.0]], [[2.0, 6.0], [-8.0, -2.0]]);
        assert!(close(&lhs, &expected, 1e-14));
    }

    #[test]
    fn top_left_block_of_wr_at_zero() {
        let sys = build_wr_br(&example3(), 0.0).unwrap();
        let k11 = sys.w.block(0, 0, 4, 4);
        let expected = CMatrix::from_real_rows(&[
            vec![5.0, 0.0, 1.0, 0.0],
            vec![0.0, 5.0, 0.0, 1.0],
            vec![1.0, 0.0, 3.0, 0.0],
            vec![0.0, 1.0, 0.0, 3.0],
        ]);
        assert_eq!(k11, expected);
        assert!(sys.w.is_real());
    }

    #[test]
    fn wr_maps_exact_state_to_br_at_zero() {
        let sys = build_wr_br(&example3(), 0.0).unwrap();
        let x = [0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0];
        let wx = sys.w.real_mul_vec(&x);
        assert!(wx.sub(&sys.b).norm2() <= 1e-12);
        assert_eq!(example3().exact_state(0.0).unwrap().unwrap().0, x.to_vec());
    }

    #[test]
    fn decoupled_problem_has_identity_embedding() {
        let c = split([[1.0, -2.0], [3.5, 0.25]], [[0.0; 2]; 2]);
        let p = TvsscmeProblem::new(
            "decoupled",
            TimeMatrix::constant(CMatrix::identity(2)),
            TimeMatrix::constant(CMatrix::zeros(2, 2)),
            TimeMatrix::constant(c.clone()),
            None,
        )
        .unwrap();
        let sys = build_wr_br(&p, 0.3).unwrap();
        assert_eq!(sys.w, CMatrix::identity(8));
        // W = I, so the solution of W x = B is B itself and unstacks to C
        let x = crate::models::lift_state(&sys.b, 2, 2).unwrap();
        assert_eq!(x, c);
        assert_eq!(sys.w_dot, CMatrix::zeros(8, 8));
    }

    #[test]
    fn inconsistent_dimensions_are_rejected() {
        let err = TvsscmeProblem::new(
            "bad",
            TimeMatrix::constant(CMatrix::identity(3)),
            TimeMatrix::constant(CMatrix::identity(2)),
            TimeMatrix::constant(CMatrix::zeros(2, 2)),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ProblemError::DimensionMismatch { ref section, .. } if section == "F"));
    }

    #[test]
    fn residual_falls_back_to_equation_error_without_exact() {
        let p = example3();
        let bare = TvsscmeProblem::new("bare", p.f().clone(), p.a().clone(), p.c().clone(), None).unwrap();
        let x = p.exact_state(1.3).unwrap().unwrap();
        assert!(bare.residual(1.3, &x).unwrap() < 1e-12);
        let off = x.add(&[0.1; 8]);
        assert!(bare.residual(1.3, &off).unwrap() > 1e-3);
        assert!((p.residual(1.3, &off).unwrap() - (8.0f64 * 0.01).sqrt()).abs() < 1e-12);
    }
}
