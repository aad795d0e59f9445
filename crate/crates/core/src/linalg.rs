//! Symmetric eigensolvers.
//!
//! Sector blocks are real-symmetric tridiagonal, so the workhorse is the
//! implicit QL iteration with Wilkinson-style shifts ([`tridiagonal_eigen`]).
//! Dense real-symmetric matrices are first reduced by Householder reflections
//! ([`symmetric_eigenvalues`]); complex Hermitian matrices go through their
//! real 2n×2n embedding ([`hermitian_eigenvalues`]).

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};

/// Iteration budget per eigenvalue in the QL sweep.
const MAX_QL_ITERATIONS: usize = 64;

/// Default relative deflation threshold: an off-diagonal element is treated as
/// zero once it falls below this fraction of the matrix Frobenius norm.
pub const DEFAULT_DEFLATION_TOL: f64 = 1e-13;

/// Eigen-decomposition of a real-symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Row-major `n × n` matrix whose column `j` is the eigenvector of
    /// `values[j]`. Empty when vectors were not requested.
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Component `row` of eigenvector `col`.
    #[inline]
    pub fn vector(&self, row: usize, col: usize) -> f64 {
        self.vectors[row * self.values.len() + col]
    }
}

/// Diagonalizes the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off[i]` couples rows `i` and `i + 1`).
///
/// Deflation happens when `|off[i]| ≤ rel_tol · ‖T‖_F`.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], rel_tol: f64, want_vectors: bool) -> Result<SymmetricEigen> {
    let n = diag.len();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    if off.len() + 1 != n {
        return Err(Error::invalid(
            "off",
            "off-diagonal must be one shorter than the diagonal",
        ));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        id
    } else {
        Vec::new()
    };

    let norm = libm::sqrt(d.iter().map(|x| x * x).sum::<f64>() + 2.0 * off.iter().map(|x| x * x).sum::<f64>());
    let tol = rel_tol * norm;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= tol || e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::EigenNoConvergence {
                    index: l,
                    iterations: MAX_QL_ITERATIONS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if want_vectors {
                    for k in 0..n {
                        let row = k * n;
                        let zf = z[row + i + 1];
                        let zi = z[row + i];
                        z[row + i + 1] = s * zi + c * zf;
                        z[row + i] = c * zi - s * zf;
                    }
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Ascending order, eigenvectors permuted along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&j| d[j]).collect();
    let vectors = if want_vectors {
        let mut out = vec![0.0; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for row in 0..n {
                out[row * n + new_col] = z[row * n + old_col];
            }
        }
        out
    } else {
        Vec::new()
    };
    Ok(SymmetricEigen { values, vectors })
}

/// Eigenvalues (ascending) of a dense real-symmetric row-major `n × n` matrix.
///
/// Only the lower triangle is read.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    if matrix.len() != n * n {
        return Err(Error::invalid("matrix", "length is not n*n"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = matrix.to_vec();
    let (diag, off) = householder_tridiagonalize(&mut a, n);
    Ok(tridiagonal_eigen(&diag, &off, 0.0, false)?.values)
}

/// Householder reduction of a symmetric matrix to tridiagonal form
/// (eigenvalues-only variant; `a` is destroyed).
fn householder_tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let idx = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[idx(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -libm::sqrt(h) } else { libm::sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[idx(k, j)] * a[idx(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[idx(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[idx(i, l)];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[idx(i, i)];
    }
    // e[i] couples (i-1, i); shift to the (i, i+1) convention.
    let off = e[1..].to_vec();
    (d, off)
}

/// Eigenvalues (ascending) of a complex Hermitian row-major `n × n` matrix.
///
/// Uses the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum
/// is that of the Hermitian matrix with every eigenvalue doubled; one member
/// of each pair is returned.
pub fn hermitian_eigenvalues(matrix: &[C64], n: usize) -> Result<Vec<f64>> {
    if matrix.len() != n * n {
        return Err(Error::invalid("matrix", "length is not n*n"));
    }
    let m = 2 * n;
    let mut emb = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = matrix[i * n + j];
            emb[i * m + j] = z.re;
            emb[(i + n) * m + (j + n)] = z.re;
            emb[i * m + (j + n)] = -z.im;
            emb[(i + n) * m + j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(&emb, m)?;
    Ok(doubled.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}
