//! Adaptive Dormand–Prince 4(5) integration of `mass(t, x) · x′ = forcing(t, x)`.

use thiserror::Error;

use crate::linalg::{pinv, svd, CMatrix, Lu, RVector, DEFAULT_RCOND};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size {h:e} fell below the minimum {h_min:e} at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64, h_min: f64 },
    #[error("exceeded {max_steps} steps at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("numerical failure at t = {t}: {message}")]
    NumericalFailure { t: f64, message: String },
    #[error("state has length {got}, system dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid time span [{t0}, {t1}]")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("system evaluation failed: {0}")]
    System(String),
}

pub type Result<T> = std::result::Result<T, OdeError>;

/// An implicit-linear system `mass(t, x) · x′ = forcing(t, x)` with a real mass matrix.
pub trait ImplicitSystem: Sync {
    fn dim(&self) -> usize;

    fn mass(&self, t: f64, x: &[f64]) -> Result<CMatrix>;

    fn forcing(&self, t: f64, x: &[f64]) -> Result<Vec<f64>>;

    /// When true the mass depends on `t` only and its factorization may be reused.
    fn mass_state_independent(&self) -> bool {
        false
    }

    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mass = self.mass(t, x)?;
        let f = self.forcing(t, x)?;
        solve_mass(&mass, &f).map(|(v, _)| v)
    }
}

type MassFn = Box<dyn Fn(f64, &[f64]) -> CMatrix + Send + Sync>;
type ForcingFn = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Closure-backed [`ImplicitSystem`].
pub struct FnSystem {
    dim: usize,
    mass: MassFn,
    forcing: ForcingFn,
    state_independent: bool,
}

impl FnSystem {
    pub fn new(
        dim: usize,
        mass: impl Fn(f64, &[f64]) -> CMatrix + Send + Sync + 'static,
        forcing: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            mass: Box::new(mass),
            forcing: Box::new(forcing),
            state_independent: false,
        }
    }

    /// `x′ = f(t, x)` (identity mass).
    pub fn explicit(dim: usize, forcing: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        let eye = CMatrix::identity(dim);
        Self::new(dim, move |_, _| eye.clone(), forcing).with_state_independent_mass()
    }

    pub fn with_state_independent_mass(mut self) -> Self {
        self.state_independent = true;
        self
    }
}

impl ImplicitSystem for FnSystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mass(&self, t: f64, x: &[f64]) -> Result<CMatrix> {
        Ok((self.mass)(t, x))
    }

    fn forcing(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.forcing)(t, x))
    }

    fn mass_state_independent(&self) -> bool {
        self.state_independent
    }
}

fn pinv_solve(mass: &CMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let failure = |message: String| OdeError::NumericalFailure { t: f64::NAN, message };
    let p = pinv(mass, DEFAULT_RCOND).map_err(|e| failure(e.to_string()))?;
    let d = p.real_mul_vec(f);
    // least-squares answers are only acceptable when they actually solve the system
    let resid = mass.real_mul_vec(&d).sub(f).norm2();
    let scale = mass.frobenius_norm() * d.norm2() + RVector(f.to_vec()).norm2();
    if !(resid <= 1e-8 * scale) {
        return Err(failure(format!(
            "mass matrix is singular and the forcing is outside its range (residual {resid:e})"
        )));
    }
    Ok(d.into_inner())
}

/// Solves `mass · d = f` by LU, falling back to the pseudo-inverse when singular.
/// The flag reports whether the fallback was used.
pub fn solve_mass(mass: &CMatrix, f: &[f64]) -> Result<(Vec<f64>, bool)> {
    if mass.rows() != f.len() {
        return Err(OdeError::DimensionMismatch {
            expected: mass.rows(),
            got: f.len(),
        });
    }
    let lu = Lu::new(mass).map_err(|e| OdeError::System(e.to_string()))?;
    solve_with(&lu, mass, f)
}

fn solve_with(lu: &Lu, mass: &CMatrix, f: &[f64]) -> Result<(Vec<f64>, bool)> {
    if !lu.is_singular() {
        if let Ok(d) = lu.solve_real(f) {
            if d.iter().all(|v| v.is_finite()) {
                return Ok((d, false));
            }
        }
    }
    pinv_solve(mass, f).map(|d| (d, true))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    /// `None` means a tenth of the span.
    pub h_max: Option<f64>,
    pub max_steps: usize,
    pub sample_count: usize,
    /// Keep every accepted `(t, x)` in [`Trajectory::steps`].
    pub record_steps: bool,
    /// Fill [`Trajectory::cond_estimates`] with 2-norm condition numbers of the mass.
    pub estimate_condition: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            abs_tol: 1e-6,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: None,
            max_steps: 1_000_000,
            sample_count: 1000,
            record_steps: false,
            estimate_condition: true,
        }
    }
}

impl IntegratorConfig {
    pub fn resolved_h_max(&self, t0: f64, t1: f64) -> f64 {
        self.h_max.unwrap_or((t1 - t0) / 10.0)
    }

    pub fn validate(&self, t0: f64, t1: f64) -> Result<()> {
        let h_max = self.resolved_h_max(t0, t1);
        let bad = |msg: String| Err(OdeError::InvalidConfig(msg));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad(format!("tolerances must be positive (rel {}, abs {})", self.rel_tol, self.abs_tol));
        }
        if !(0.0 < self.h_min && self.h_min <= self.h_init && self.h_init <= h_max) {
            return bad(format!(
                "need 0 < h_min <= h_init <= h_max, got {} / {} / {}",
                self.h_min, self.h_init, h_max
            ));
        }
        if self.sample_count < 2 {
            return bad(format!("sample_count must be at least 2, got {}", self.sample_count));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub fallback_solves: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    pub states: Vec<RVector>,
    /// `NaN` when no residual function was supplied.
    pub residuals: Vec<f64>,
    /// `NaN` when condition estimation is disabled.
    pub cond_estimates: Vec<f64>,
    pub stats: IntegratorStats,
    /// Accepted step endpoints, only with `record_steps`.
    pub steps: Vec<(f64, RVector)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn final_state(&self) -> Option<&RVector> {
        self.states.last()
    }
}

/// Result of a single Dormand–Prince step.
#[derive(Debug, Clone, PartialEq)]
pub struct Rk45Step {
    pub x4: Vec<f64>,
    pub x5: Vec<f64>,
    /// `max |x5 - x4|`, unscaled.
    pub err: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Derivative evaluator with per-time factorization reuse for state-independent masses.
struct Evaluator<'a, S: ImplicitSystem + ?Sized> {
    sys: &'a S,
    cache: Option<(f64, CMatrix, Lu)>,
    stats: IntegratorStats,
}

impl<'a, S: ImplicitSystem + ?Sized> Evaluator<'a, S> {
    fn new(sys: &'a S) -> Self {
        Self {
            sys,
            cache: None,
            stats: IntegratorStats::default(),
        }
    }

    fn deriv(&mut self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.stats.rhs_evals += 1;
        let f = self.sys.forcing(t, x)?;
        if f.len() != x.len() {
            return Err(OdeError::DimensionMismatch {
                expected: x.len(),
                got: f.len(),
            });
        }
        let reuse = self.sys.mass_state_independent();
        let hit = reuse && matches!(&self.cache, Some((ct, _, _)) if *ct == t);
        if !hit {
            let mass = self.sys.mass(t, x)?;
            let lu = Lu::new(&mass).map_err(|e| OdeError::System(e.to_string()))?;
            self.cache = Some((t, mass, lu));
        }
        let (_, mass, lu) = self.cache.as_ref().expect("cache filled above");
        let (d, fallback) = solve_with(lu, mass, &f).map_err(|e| with_time(e, t))?;
        if fallback {
            self.stats.fallback_solves += 1;
        }
        Ok(d)
    }

    /// Stages 2..7 given `k1`; returns `(x4, x5, k7)`.
    fn step(&mut self, t: f64, x: &[f64], h: f64, k1: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = x.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k1);
        for s in 1..7 {
            let xs: Vec<f64> = (0..n)
                .map(|i| x[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                .collect();
            let ks = self.deriv(t + C[s] * h, &xs)?;
            k.push(ks);
        }
        let combine = |b: &[f64; 7]| -> Vec<f64> {
            (0..n)
                .map(|i| x[i] + h * (0..7).map(|j| b[j] * k[j][i]).sum::<f64>())
                .collect()
        };
        let x5 = combine(&B5);
        let x4 = combine(&B4);
        let k7 = k.pop().expect("seven stages");
        Ok((x4, x5, k7))
    }
}

fn with_time(e: OdeError, t: f64) -> OdeError {
    match e {
        OdeError::NumericalFailure { message, .. } => OdeError::NumericalFailure { t, message },
        other => other,
    }
}

/// One Dormand–Prince step from `(t, x)` with step `h`.
pub fn rk45_step<S: ImplicitSystem + ?Sized>(sys: &S, t: f64, x: &[f64], h: f64) -> Result<Rk45Step> {
    if x.len() != sys.dim() {
        return Err(OdeError::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    let mut ev = Evaluator::new(sys);
    let k1 = ev.deriv(t, x)?;
    let (x4, x5, _) = ev.step(t, x, h, k1)?;
    let err = x4.iter().zip(&x5).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Rk45Step { x4, x5, err })
}

fn hermite(x0: &[f64], k0: &[f64], x1: &[f64], k1: &[f64], h: f64, theta: f64) -> Vec<f64> {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    (0..x0.len())
        .map(|i| h00 * x0[i] + h10 * h * k0[i] + h01 * x1[i] + h11 * h * k1[i])
        .collect()
}

fn sample_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            if k + 1 == count {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (count - 1) as f64
            }
        })
        .collect()
}

fn condition_estimate<S: ImplicitSystem + ?Sized>(sys: &S, t: f64, x: &[f64]) -> f64 {
    match sys.mass(t, x).ok().and_then(|m| svd(&m).ok()) {
        Some(s) => s.condition_number(),
        None => f64::NAN,
    }
}

/// Integrates over `span` and samples `cfg.sample_count` uniform points.
pub fn integrate<S: ImplicitSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
    residual_fn: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)>,
) -> Result<Trajectory> {
    let (t0, t1) = span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(OdeError::InvalidSpan { t0, t1 });
    }
    if x0.len() != sys.dim() {
        return Err(OdeError::DimensionMismatch {
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    cfg.validate(t0, t1)?;
    let h_max = cfg.resolved_h_max(t0, t1);

    let grid = sample_grid(t0, t1, cfg.sample_count);
    let mut states: Vec<RVector> = Vec::with_capacity(grid.len());
    states.push(RVector(x0.to_vec()));
    let mut next_sample = 1;

    let mut ev = Evaluator::new(sys);
    let mut steps = Vec::new();
    if cfg.record_steps {
        steps.push((t0, RVector(x0.to_vec())));
    }
    let mut t = t0;
    let mut x = x0.to_vec();
    let mut k1 = ev.deriv(t, &x)?;
    let mut h = cfg.h_init.min(h_max);

    while t < t1 {
        if ev.stats.accepted_steps + ev.stats.rejected_steps >= cfg.max_steps {
            return Err(OdeError::MaxStepsExceeded {
                t,
                max_steps: cfg.max_steps,
            });
        }
        let last = t + h >= t1;
        let h_try = if last { t1 - t } else { h };
        let (x4, x5, k7) = ev.step(t, &x, h_try, k1.clone())?;
        let err = x
            .iter()
            .zip(x4.iter().zip(&x5))
            .map(|(xo, (a, b))| (b - a).abs() / (cfg.abs_tol + cfg.rel_tol * xo.abs().max(b.abs())))
            .fold(0.0, |acc: f64, e| if e.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(e) });

        let factor = if err.is_nan() {
            0.2
        } else if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };

        if err <= 1.0 {
            let t_new = if last { t1 } else { t + h_try };
            while next_sample < grid.len() && grid[next_sample] <= t_new {
                let theta = ((grid[next_sample] - t) / h_try).clamp(0.0, 1.0);
                let xs = if theta == 1.0 {
                    x5.clone()
                } else {
                    hermite(&x, &k1, &x5, &k7, h_try, theta)
                };
                states.push(RVector(xs));
                next_sample += 1;
            }
            t = t_new;
            x = x5;
            k1 = k7;
            ev.stats.accepted_steps += 1;
            if cfg.record_steps {
                steps.push((t, RVector(x.clone())));
            }
        } else {
            ev.stats.rejected_steps += 1;
        }

        if t < t1 {
            h = (h_try * factor).min(h_max);
            if h < cfg.h_min {
                return Err(OdeError::StepSizeUnderflow { t, h, h_min: cfg.h_min });
            }
        }
    }

    let residuals = grid
        .iter()
        .zip(&states)
        .map(|(&tau, s)| residual_fn.map_or(f64::NAN, |f| f(tau, s)))
        .collect();
    let cond_estimates = grid
        .iter()
        .zip(&states)
        .map(|(&tau, s)| {
            if cfg.estimate_condition {
                condition_estimate(sys, tau, s)
            } else {
                f64::NAN
            }
        })
        .collect();

    Ok(Trajectory {
        taus: grid,
        states,
        residuals,
        cond_estimates,
        stats: ev.stats,
        steps,
    })
}
