//! Pointwise-on-grid uniqueness checks: disjoint spectra of `A Ā` and `F F̄`,
//! and a nonvanishing `det W_R`.

use num_complex::Complex64;

use super::{build_wr_br, Result, TvsscmeProblem};
use crate::linalg::{determinant, eigenvalues};

pub const DEFAULT_EPS_EIG: f64 = 1e-8;
pub const DEFAULT_EPS_DET: f64 = 1e-12;
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Per-instant data behind the report.
#[derive(Debug, Clone, Default)]
pub struct UniquenessSample {
    pub tau: f64,
    pub eig_aa: Vec<Complex64>,
    pub eig_ff: Vec<Complex64>,
    /// Minimum pairwise `|λ_i(AĀ) - λ_j(FF̄)|`.
    pub eigen_gap: Option<f64>,
    /// `ln |det W_R|`.
    pub log_abs_det: Option<f64>,
    /// Sign of `det W_R` (real matrix), 0 when it vanishes.
    pub det_sign: Option<i8>,
}

impl UniquenessSample {
    pub fn det(&self) -> Option<f64> {
        match (self.log_abs_det, self.det_sign) {
            (Some(l), Some(s)) => Some(f64::from(s) * l.exp()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub tau_grid: Vec<f64>,
    pub samples: Vec<UniquenessSample>,
    /// Present when the eigenvalue check ran.
    pub min_eigen_gap: Option<f64>,
    /// Present when the determinant check ran.
    pub min_abs_det: Option<f64>,
    pub det_sign_changes: usize,
    pub eps_eig: f64,
    pub eps_det: f64,
    pub unique: bool,
}

impl UniquenessReport {
    fn finish(mut self) -> Self {
        let eig_ok = self.min_eigen_gap.map_or(true, |g| g > self.eps_eig);
        let det_ok = self.min_abs_det.map_or(true, |d| d > self.eps_det);
        self.unique = eig_ok && det_ok;
        self
    }
}

/// Uniform grid of `points` instants over `[t0, t1]` (a single point yields `[t0]`).
pub fn default_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..points)
            .map(|k| {
                if k == points - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * k as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

fn eigen_sample(p: &TvsscmeProblem, tau: f64, sample: &mut UniquenessSample) -> Result<f64> {
    let a = p.a().eval_at(tau)?;
    let f = p.f().eval_at(tau)?;
    let eig_aa = eigenvalues(&a.matmul(&a.conjugate())?)?;
    let eig_ff = eigenvalues(&f.matmul(&f.conjugate())?)?;
    let gap = eig_aa
        .iter()
        .flat_map(|x| eig_ff.iter().map(move |y| (x - y).norm()))
        .fold(f64::INFINITY, f64::min);
    sample.eig_aa = eig_aa;
    sample.eig_ff = eig_ff;
    sample.eigen_gap = Some(gap);
    Ok(gap)
}

fn det_sample(p: &TvsscmeProblem, tau: f64, sample: &mut UniquenessSample) -> Result<(f64, i8)> {
    let w = build_wr_br(p, tau)?.w;
    let d = determinant(&w)?;
    sample.log_abs_det = Some(d.log_abs);
    sample.det_sign = Some(d.real_sign());
    Ok((d.log_abs, d.real_sign()))
}

fn run(p: &TvsscmeProblem, grid: &[f64], eps_eig: Option<f64>, eps_det: Option<f64>) -> Result<UniquenessReport> {
    assert!(!grid.is_empty(), "uniqueness check needs a non-empty grid");
    let mut samples = Vec::with_capacity(grid.len());
    let mut min_gap = f64::INFINITY;
    let mut min_log_det = f64::INFINITY;
    let mut sign_changes = 0;
    let mut last_sign: Option<i8> = None;
    for &tau in grid {
        let mut s = UniquenessSample {
            tau,
            ..Default::default()
        };
        if eps_eig.is_some() {
            min_gap = min_gap.min(eigen_sample(p, tau, &mut s)?);
        }
        if eps_det.is_some() {
            let (log_abs, sign) = det_sample(p, tau, &mut s)?;
            min_log_det = min_log_det.min(log_abs);
            if let Some(prev) = last_sign {
                if prev != sign {
                    sign_changes += 1;
                }
            }
            last_sign = Some(sign);
        }
        samples.push(s);
    }
    Ok(UniquenessReport {
        tau_grid: grid.to_vec(),
        samples,
        min_eigen_gap: eps_eig.map(|_| min_gap),
        min_abs_det: eps_det.map(|_| min_log_det.exp()),
        det_sign_changes: sign_changes,
        eps_eig: eps_eig.unwrap_or(DEFAULT_EPS_EIG),
        eps_det: eps_det.unwrap_or(DEFAULT_EPS_DET),
        unique: false,
    }
    .finish())
}

/// Spectral disjointness of `A Ā` and `F F̄` on each grid instant.
pub fn uniqueness_eigen(p: &TvsscmeProblem, grid: &[f64], eps_eig: f64) -> Result<UniquenessReport> {
    run(p, grid, Some(eps_eig), None)
}

/// `|det W_R| > eps_det` on each grid instant.
pub fn uniqueness_det(p: &TvsscmeProblem, grid: &[f64], eps_det: f64) -> Result<UniquenessReport> {
    run(p, grid, None, Some(eps_det))
}

/// Both checks on the same grid.
pub fn check_uniqueness(p: &TvsscmeProblem, grid: &[f64], eps_eig: f64, eps_det: f64) -> Result<UniquenessReport> {
    run(p, grid, Some(eps_eig), Some(eps_det))
}
