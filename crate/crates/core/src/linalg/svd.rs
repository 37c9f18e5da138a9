//! Thin SVD by one-sided (Hestenes) Jacobi rotations, and the
//! Moore–Penrose pseudo-inverse built on it.

use num_complex::Complex64;

use super::{CMatrix, LinalgError, Result};

/// Default relative cutoff for [`pinv`]: singular values below
/// `DEFAULT_RCOND · σ_max` are treated as zero.
pub const DEFAULT_RCOND: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// `m = u · diag(singular_values) · vᴴ`, thin form with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

impl SvdResult {
    /// `σ_max / σ_min`; infinite when the smallest singular value is zero.
    pub fn condition_number(&self) -> f64 {
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        let min = self.singular_values.last().copied().unwrap_or(0.0);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

pub fn svd(m: &CMatrix) -> Result<SvdResult> {
    if m.rows() >= m.cols() {
        jacobi_tall(m)
    } else {
        // m = (mᴴ)ᴴ = (U Σ Vᴴ)ᴴ = V Σ Uᴴ
        let t = jacobi_tall(&m.hermitian())?;
        Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

fn col_dot(a: &[Complex64], cols: usize, rows: usize, p: usize, q: usize) -> Complex64 {
    (0..rows).map(|i| a[i * cols + p].conj() * a[i * cols + q]).sum()
}

fn jacobi_tall(m: &CMatrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let mut a = m.to_dense();
    let mut v = CMatrix::identity(cols).to_dense();
    let eps = f64::EPSILON;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = col_dot(&a, cols, rows, p, p).re;
                let beta = col_dot(&a, cols, rows, q, q).re;
                let gamma = col_dot(&a, cols, rows, p, q);
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rephase column q so the off-diagonal Gram entry is real
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let ap = a[i * cols + p];
                    let aq = a[i * cols + q] * phase;
                    a[i * cols + p] = ap * c - aq * s;
                    a[i * cols + q] = ap * s + aq * c;
                }
                for i in 0..cols {
                    let vp = v[i * cols + p];
                    let vq = v[i * cols + q] * phase;
                    v[i * cols + p] = vp * c - vq * s;
                    v[i * cols + q] = vp * s + vq * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NumericalFailure(format!(
            "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let sigma: Vec<f64> = (0..cols).map(|j| col_dot(&a, cols, rows, j, j).re.sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));

    let smax = order.first().map_or(0.0, |&j| sigma[j]);
    let zero_cut = smax * rows.max(cols) as f64 * eps;

    let mut u = vec![Complex64::new(0.0, 0.0); rows * cols];
    let mut vs = vec![Complex64::new(0.0, 0.0); cols * cols];
    let mut sorted_sigma = Vec::with_capacity(cols);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        for i in 0..cols {
            vs[i * cols + dst] = v[i * cols + src];
        }
        if s > zero_cut && s > 0.0 {
            for i in 0..rows {
                u[i * cols + dst] = a[i * cols + src] / s;
            }
            sorted_sigma.push(s);
        } else {
            sorted_sigma.push(if s > zero_cut { s } else { 0.0 });
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut u, rows, cols, &missing);

    Ok(SvdResult {
        u: CMatrix::from_dense(rows, cols, &u),
        singular_values: sorted_sigma,
        v: CMatrix::from_dense(cols, cols, &vs),
    })
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every other column.
fn complete_orthonormal(u: &mut [Complex64], rows: usize, cols: usize, missing: &[usize]) {
    let mut filled: Vec<usize> = (0..cols).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &dst in missing {
        while candidate < rows {
            let mut w = vec![Complex64::new(0.0, 0.0); rows];
            w[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // two passes of Gram–Schmidt
            for _ in 0..2 {
                for &j in &filled {
                    let d: Complex64 = (0..rows).map(|i| u[i * cols + j].conj() * w[i]).sum();
                    for (i, wi) in w.iter_mut().enumerate() {
                        *wi -= d * u[i * cols + j];
                    }
                }
            }
            let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm > 0.5 {
                for (i, wi) in w.iter().enumerate() {
                    u[i * cols + dst] = wi / nrm;
                }
                filled.push(dst);
                break;
            }
        }
    }
}

/// Moore–Penrose pseudo-inverse; singular values `≤ rcond · σ_max` are dropped.
pub fn pinv(m: &CMatrix, rcond: f64) -> Result<CMatrix> {
    let s = svd(m)?;
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    let cut = rcond * smax;
    let k = s.singular_values.len();
    // V Σ⁺ Uᴴ
    let mut vs = s.v.clone();
    for j in 0..k {
        let sj = s.singular_values[j];
        let inv = if sj > cut && sj > 0.0 { 1.0 / sj } else { 0.0 };
        for i in 0..vs.rows() {
            let z = vs.get(i, j) * inv;
            vs.set(i, j, z);
        }
    }
    vs.matmul(&s.u.hermitian())
}
