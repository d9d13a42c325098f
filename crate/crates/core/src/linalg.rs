//! Small dense linear algebra: everything here operates on row-major
//! `Vec<Vec<f64>>` matrices of the sizes this crate actually meets
//! (state spaces up to a few thousand).

use crate::error::{Error, Result};

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        let row = &a[i];
        let out_row = &mut out[i];
        for (p, &apb) in row.iter().enumerate().take(k) {
            if apb == 0.0 {
                continue;
            }
            let brow = &b[p];
            for j in 0..m {
                out_row[j] += apb * brow[j];
            }
        }
    }
    out
}

/// Matrix power by repeated squaring.
pub fn mat_pow(a: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut result = identity(n);
    let mut base = a.to_vec();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        k >>= 1;
        if k > 0 {
            base = mat_mul(&base, &base);
        }
    }
    result
}

/// x^T A for a row vector x.
pub fn vec_mat(x: &[f64], a: &[Vec<f64>]) -> Vec<f64> {
    let m = a[0].len();
    let mut out = vec![0.0; m];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, v) in a[i].iter().enumerate() {
            out[j] += xi * v;
        }
    }
    out
}

/// A x for a column vector x.
pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Solve A x = b by LU decomposition with partial pivoting.
pub fn lu_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        // pivot
        let mut pivot = col;
        let mut best = m[col][col].abs();
        for (r, row) in m.iter().enumerate().skip(col + 1) {
            if row[col].abs() > best {
                best = row[col].abs();
                pivot = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::SolveFailed(format!(
                "singular matrix (pivot {best:.3e} at column {col})"
            )));
        }
        if pivot != col {
            m.swap(col, pivot);
            x.swap(col, pivot);
            perm.swap(col, pivot);
        }
        let diag = m[col][col];
        for r in col + 1..n {
            let factor = m[r][col] / diag;
            if factor == 0.0 {
                continue;
            }
            m[r][col] = 0.0;
            for c in col + 1..n {
                let sub = factor * m[col][c];
                m[r][c] -= sub;
            }
            x[r] -= factor * x[col];
        }
    }
    // back substitution
    for col in (0..n).rev() {
        let mut v = x[col];
        for c in col + 1..n {
            v -= m[col][c] * x[c];
        }
        x[col] = v / m[col][col];
    }
    Ok(x)
}

/// Largest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
pub fn sym_eig_max(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    let mut m = a.to_vec();
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j].abs();
            }
        }
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq.abs() < 1e-300 * scale {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = m[p][p];
                let aqq = m[q][q];
                m[p][p] = app - t * apq;
                m[q][q] = aqq + t * apq;
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r][p];
                    let arq = m[r][q];
                    m[r][p] = c * arp - s * arq;
                    m[p][r] = m[r][p];
                    m[r][q] = s * arp + c * arq;
                    m[q][r] = m[r][q];
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest singular value, computed as sqrt of the top eigenvalue of A^T A.
pub fn spectral_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let m = a[0].len();
    let mut gram = vec![vec![0.0; m]; m];
    for row in a.iter().take(n) {
        for i in 0..m {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..m {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }
    sym_eig_max(&gram).max(0.0).sqrt()
}

/// Dominant left eigenvector of a row-stochastic matrix, normalized to a
/// probability vector. Residual is measured as max|v Pi - v|.
///
/// The start vector is deliberately non-uniform so that periodic chains
/// oscillate instead of landing on the averaged fixed point; a tie in the
/// dominant eigenspace then surfaces as `NotConverged`.
pub fn stationary_power_iteration(p: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = p.len();
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.25 * (i + 1) as f64 / n as f64)
        .collect();
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = vec_mat(&v, p);
        let total: f64 = next.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::NotConverged {
                iterations: max_iter,
                residual,
            });
        }
        for x in next.iter_mut() {
            *x /= total;
        }
        residual = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        v = next;
        if residual < tol {
            return Ok(v);
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}
