//! Eigenvalues of a general complex matrix: Householder reduction to upper
//! Hessenberg form followed by single-shift (Wilkinson) QR sweeps with
//! Givens rotations and deflation.

use num_complex::Complex64;

use super::{CMatrix, LinalgError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            op: "eigenvalues",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let mut h = m.to_dense();
    hessenberg(&mut h, n);
    shifted_qr(&mut h, n)?;
    Ok((0..n).map(|i| h[i * n + i]).collect())
}

fn hessenberg(h: &mut [Complex64], n: usize) {
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[i * n + k]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // H <- (I - 2 v vᴴ) H
        for j in 0..n {
            let d: Complex64 = v.iter().enumerate().map(|(r, vr)| vr.conj() * h[(k + 1 + r) * n + j]).sum();
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r) * n + j] -= 2.0 * vr * d;
            }
        }
        // H <- H (I - 2 v vᴴ)
        for i in 0..n {
            let d: Complex64 = v.iter().enumerate().map(|(r, vr)| h[i * n + k + 1 + r] * vr).sum();
            for (r, vr) in v.iter().enumerate() {
                h[i * n + k + 1 + r] -= 2.0 * d * vr.conj();
            }
        }
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
    }
}

/// Rotation `G = [[c, s], [-s̄, c]]` with `G [x; y] = [r; 0]`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, y.conj() / y.norm());
    }
    let nrm = x.norm().hypot(y.norm());
    let ph = x / x.norm();
    (x.norm() / nrm, ph * y.conj() / nrm)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let mu1 = mean + disc;
    let mu2 = mean - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn shifted_qr(h: &mut [Complex64], n: usize) -> Result<()> {
    if n < 2 {
        return Ok(());
    }
    let cap = 100 * n;
    let eps = f64::EPSILON;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    let mut rot = vec![(0.0, ZERO); n];

    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[lo * n + lo - 1].norm();
            let diag = h[(lo - 1) * n + lo - 1].norm() + h[lo * n + lo].norm();
            if sub <= eps * diag || sub < f64::MIN_POSITIVE {
                h[lo * n + lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if total >= cap {
            return Err(LinalgError::NumericalFailure(format!(
                "QR eigenvalue iteration did not converge within {cap} iterations"
            )));
        }
        total += 1;
        since_deflation += 1;

        let mu = if since_deflation % 11 == 10 {
            // exceptional shift breaks rare cycling
            h[hi * n + hi] + h[hi * n + hi - 1].norm() * 1.5
        } else {
            wilkinson_shift(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };

        for k in lo..=hi {
            h[k * n + k] -= mu;
        }
        for k in lo..hi {
            let (c, s) = givens(h[k * n + k], h[(k + 1) * n + k]);
            rot[k] = (c, s);
            for j in k..=hi {
                let a = h[k * n + j];
                let b = h[(k + 1) * n + j];
                h[k * n + j] = a * c + s * b;
                h[(k + 1) * n + j] = -s.conj() * a + b * c;
            }
        }
        for k in lo..hi {
            let (c, s) = rot[k];
            for i in lo..=(k + 1).min(hi) {
                let a = h[i * n + k];
                let b = h[i * n + k + 1];
                h[i * n + k] = a * c + b * s.conj();
                h[i * n + k + 1] = -a * s + b * c;
            }
        }
        for k in lo..=hi {
            h[k * n + k] += mu;
        }
    }
    Ok(())
}
