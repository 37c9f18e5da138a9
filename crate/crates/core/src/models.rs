//! The three zeroing-neural-dynamics models in mass-matrix form
//! `mass(τ) · x′ = forcing(τ, x)`, over the stacked state `[vec(X_r); vec(X_i)]`.
//!
//! * [`ModelKind::ConCznd2`] drives the real-field error `W_R x - B_R` to zero.
//! * [`ModelKind::ConCznd1`] drives the complex error `X F - A X̄ - C` to zero.
//! * [`ModelKind::ConCznd1Conj`] drives the conjugated error `X̄ F̄ - Ā X - C̄` to zero.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{CMatrix, LinalgError, RVector};
use crate::ode::{solve_mass, ImplicitSystem, OdeError};
use crate::problem::{build_wr_br, ProblemError, Snapshot, TvsscmeProblem};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("con-cznd2 works on a real error vector and accepts only real gains, got {0}")]
    ComplexGainUnsupported(Gain),
    #[error("invalid gain: {0}")]
    InvalidGain(String),
    #[error("unknown model `{0}` (expected con-cznd1, con-cznd2 or con-cznd1-conj)")]
    UnknownModel(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solve(#[from] OdeError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Regulation gain `γ = re + i·im` with `re > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain {
    re: f64,
    im: f64,
}

impl Gain {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re > 0.0) || !re.is_finite() || !im.is_finite() {
            return Err(ModelError::InvalidGain(format!(
                "real part must be positive and finite, got {re}{im:+}i"
            )));
        }
        Ok(Self { re, im })
    }

    pub fn real(re: f64) -> Result<Self> {
        Self::new(re, 0.0)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Accepts `10`, `10+20i`, `10-20i`, `2.5e1-3i`.
impl FromStr for Gain {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || ModelError::InvalidGain(format!("cannot parse `{s}` (expected forms: 10, 10+20i, 10-20i)"));
        let Some(body) = s.strip_suffix('i') else {
            return Self::real(s.parse().map_err(|_| bad())?);
        };
        // split at the last sign that is neither leading nor part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
            .ok_or_else(bad)?;
        let re: f64 = body[..split].parse().map_err(|_| bad())?;
        let im_text = &body[split..];
        let im: f64 = match im_text {
            "+" => 1.0,
            "-" => -1.0,
            t => t.parse().map_err(|_| bad())?,
        };
        Self::new(re, im)
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_real() {
            write!(f, "{}", self.re)
        } else if self.im < 0.0 {
            write!(f, "{}-{}i", self.re, -self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Monotonically increasing odd activation applied to error entries.
pub trait Activation: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;

    fn apply(&self, x: f64) -> f64;

    /// Complex entries: real and imaginary parts independently unless overridden.
    fn apply_complex(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.apply(z.re), self.apply(z.im))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Linear;

impl Activation for Linear {
    fn name(&self) -> &str {
        "linear"
    }

    fn apply(&self, x: f64) -> f64 {
        x
    }

    fn apply_complex(&self, z: Complex64) -> Complex64 {
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    ConCznd1,
    ConCznd2,
    ConCznd1Conj,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::ConCznd1, ModelKind::ConCznd2, ModelKind::ConCznd1Conj];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::ConCznd1 => "con-cznd1",
            ModelKind::ConCznd2 => "con-cznd2",
            ModelKind::ConCznd1Conj => "con-cznd1-conj",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

/// `X = unvec(v[..mn]) + i·unvec(v[mn..])`.
pub fn lift_state(v: &[f64], m: usize, n: usize) -> std::result::Result<CMatrix, LinalgError> {
    let mn = m * n;
    if v.len() != 2 * mn {
        return Err(LinalgError::DimensionMismatch {
            op: "lift_state",
            left: (v.len(), 1),
            right: (2 * mn, 1),
        });
    }
    let re = CMatrix::unvec(&CMatrix::real_column(&v[..mn]), m, n)?;
    let im = CMatrix::unvec(&CMatrix::real_column(&v[mn..]), m, n)?;
    CMatrix::from_parts(m, n, re.re().to_vec(), im.re().to_vec())
}

/// Inverse of [`lift_state`]: `[vec(X_r); vec(X_i)]`.
pub fn flatten_state(x: &CMatrix) -> RVector {
    let v = x.vec();
    let mut out = v.re().to_vec();
    out.extend_from_slice(v.im());
    RVector(out)
}

/// One of the three models bound to a problem, gain and activation.
#[derive(Debug, Clone)]
pub struct ModelSystem {
    kind: ModelKind,
    problem: TvsscmeProblem,
    gamma: Gain,
    activation: Arc<dyn Activation>,
}

pub fn con_cznd1_system(p: &TvsscmeProblem, gamma: Gain, act: Arc<dyn Activation>) -> ModelSystem {
    ModelSystem {
        kind: ModelKind::ConCznd1,
        problem: p.clone(),
        gamma,
        activation: act,
    }
}

pub fn con_cznd2_system(p: &TvsscmeProblem, gamma: Gain, act: Arc<dyn Activation>) -> Result<ModelSystem> {
    if !gamma.is_real() {
        return Err(ModelError::ComplexGainUnsupported(gamma));
    }
    Ok(ModelSystem {
        kind: ModelKind::ConCznd2,
        problem: p.clone(),
        gamma,
        activation: act,
    })
}

pub fn con_cznd1_conj_system(p: &TvsscmeProblem, gamma: Gain, act: Arc<dyn Activation>) -> ModelSystem {
    ModelSystem {
        kind: ModelKind::ConCznd1Conj,
        problem: p.clone(),
        gamma,
        activation: act,
    }
}

fn split_blocks(
    a11: &CMatrix,
    a12: &CMatrix,
    a21: &CMatrix,
    a22: &CMatrix,
) -> std::result::Result<CMatrix, LinalgError> {
    CMatrix::block2x2(a11, a12, a21, a22)
}

impl ModelSystem {
    pub fn new(kind: ModelKind, p: &TvsscmeProblem, gamma: Gain, act: Arc<dyn Activation>) -> Result<Self> {
        match kind {
            ModelKind::ConCznd1 => Ok(con_cznd1_system(p, gamma, act)),
            ModelKind::ConCznd2 => con_cznd2_system(p, gamma, act),
            ModelKind::ConCznd1Conj => Ok(con_cznd1_conj_system(p, gamma, act)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn label(&self) -> &'static str {
        self.kind.name()
    }

    pub fn gamma(&self) -> Gain {
        self.gamma
    }

    pub fn problem(&self) -> &TvsscmeProblem {
        &self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.state_dim()
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(ModelError::Linalg(LinalgError::DimensionMismatch {
                op: "model state",
                left: (state.len(), 1),
                right: (self.dim(), 1),
            }));
        }
        Ok(())
    }

    /// Mass matrix at `tau`; all three models have state-independent masses.
    pub fn mass_at(&self, tau: f64) -> Result<CMatrix> {
        let (m, n) = (self.problem.m(), self.problem.n());
        match self.kind {
            ModelKind::ConCznd2 => Ok(build_wr_br(&self.problem, tau)?.w),
            ModelKind::ConCznd1 => {
                let f = self.problem.f().eval_at(tau)?;
                let a = self.problem.a().eval_at(tau)?;
                let p = f.transpose().kron(&CMatrix::identity(m));
                let q = CMatrix::identity(n).kron(&a);
                let (pr, pi, qr, qi) = (p.real_part(), p.imag_part(), q.real_part(), q.imag_part());
                Ok(split_blocks(&pr.sub(&qr)?, &pi.add(&qi)?.neg(), &pi.sub(&qi)?, &pr.add(&qr)?)?)
            }
            ModelKind::ConCznd1Conj => {
                let f = self.problem.f().eval_at(tau)?;
                let a = self.problem.a().eval_at(tau)?;
                let h = f.hermitian().kron(&CMatrix::identity(m));
                let l = CMatrix::identity(n).kron(&a.conjugate());
                let (hr, hi, lr, li) = (h.real_part(), h.imag_part(), l.real_part(), l.imag_part());
                Ok(split_blocks(&hr.sub(&lr)?, &hi.add(&li)?, &hi.sub(&li)?, &hr.add(&lr)?.neg())?)
            }
        }
    }

    fn complex_gain_times(&self, e: &CMatrix) -> CMatrix {
        let g = self.gamma.as_complex();
        e.map(|z| g * self.activation.apply_complex(z))
    }

    fn forcing_from(&self, s: &Snapshot, state: &[f64]) -> Result<RVector> {
        let (m, n) = (self.problem.m(), self.problem.n());
        match self.kind {
            ModelKind::ConCznd2 => {
                let sys = build_wr_br(&self.problem, s.tau)?;
                let err = sys.w.real_mul_vec(state).sub(&sys.b);
                let wdot_x = sys.w_dot.real_mul_vec(state);
                let g = self.gamma.re();
                let out = (0..state.len())
                    .map(|k| sys.b_dot[k] - wdot_x[k] - g * self.activation.apply(err[k]))
                    .collect();
                Ok(RVector(out))
            }
            ModelKind::ConCznd1 => {
                let x = lift_state(state, m, n)?;
                let xb = x.conjugate();
                let e = x.matmul(&s.f)?.sub(&s.a.matmul(&xb)?)?.sub(&s.c)?;
                let g = s
                    .c_dot
                    .add(&s.a_dot.matmul(&xb)?)?
                    .sub(&x.matmul(&s.f_dot)?)?
                    .sub(&self.complex_gain_times(&e))?;
                Ok(flatten_state(&g))
            }
            ModelKind::ConCznd1Conj => {
                let x = lift_state(state, m, n)?;
                let xb = x.conjugate();
                let fb = s.f.conjugate();
                let ab = s.a.conjugate();
                let e = xb.matmul(&fb)?.sub(&ab.matmul(&x)?)?.sub(&s.c.conjugate())?;
                let o = s
                    .c_dot
                    .conjugate()
                    .add(&s.a_dot.conjugate().matmul(&x)?)?
                    .sub(&xb.matmul(&s.f_dot.conjugate())?)?
                    .sub(&self.complex_gain_times(&e))?;
                Ok(flatten_state(&o))
            }
        }
    }

    pub fn forcing_at(&self, tau: f64, state: &[f64]) -> Result<RVector> {
        self.check_state(state)?;
        let s = self.problem.snapshot(tau)?;
        self.forcing_from(&s, state)
    }

    /// `x′` from `mass · x′ = forcing` (LU with pseudo-inverse fallback).
    pub fn state_derivative(&self, tau: f64, state: &[f64]) -> Result<RVector> {
        let mass = self.mass_at(tau)?;
        let forcing = self.forcing_at(tau, state)?;
        Ok(RVector(solve_mass(&mass, &forcing)?.0))
    }
}

impl ImplicitSystem for ModelSystem {
    fn dim(&self) -> usize {
        ModelSystem::dim(self)
    }

    fn mass(&self, t: f64, _x: &[f64]) -> std::result::Result<CMatrix, OdeError> {
        self.mass_at(t).map_err(|e| OdeError::System(e.to_string()))
    }

    fn forcing(&self, t: f64, x: &[f64]) -> std::result::Result<Vec<f64>, OdeError> {
        self.forcing_at(t, x)
            .map(RVector::into_inner)
            .map_err(|e| OdeError::System(e.to_string()))
    }

    fn mass_state_independent(&self) -> bool {
        true
    }
}
