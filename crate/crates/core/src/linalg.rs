//! Small dense linear algebra: LU with partial pivoting, column-pivoted
//! Householder QR and Jacobi eigenvalues of symmetric matrices.
//!
//! Matrices are row-major `Vec<f64>` with an explicit dimension. Everything
//! here is sized for desk-scale problems (a few dozen rows and columns).

use crate::error::{Error, Result};

/// Below this ratio of smallest to largest pivot the factorization is
/// treated as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// LU factorization `P A = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    dim: usize,
    factors: Vec<f64>,
    perm: Vec<usize>,
    pivot_ratio: f64,
}

impl Lu {
    pub fn factor(matrix: &[f64], dim: usize) -> Result<Lu> {
        assert_eq!(matrix.len(), dim * dim);
        let mut a = matrix.to_vec();
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut max_pivot = 0.0f64;
        let mut min_pivot = f64::INFINITY;
        for k in 0..dim {
            let (piv, piv_abs) = (k..dim)
                .map(|r| (r, a[r * dim + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv != k {
                for c in 0..dim {
                    a.swap(k * dim + c, piv * dim + c);
                }
                perm.swap(k, piv);
            }
            max_pivot = max_pivot.max(piv_abs);
            min_pivot = min_pivot.min(piv_abs);
            if piv_abs == 0.0 {
                return Err(Error::SingularBasis { pivot_ratio: 0.0 });
            }
            let pivot = a[k * dim + k];
            for r in (k + 1)..dim {
                let factor = a[r * dim + k] / pivot;
                a[r * dim + k] = factor;
                if factor != 0.0 {
                    for c in (k + 1)..dim {
                        a[r * dim + c] -= factor * a[k * dim + c];
                    }
                }
            }
        }
        let pivot_ratio = if dim == 0 { 1.0 } else { min_pivot / max_pivot };
        if pivot_ratio < SINGULAR_PIVOT_RATIO {
            return Err(Error::SingularBasis { pivot_ratio });
        }
        Ok(Lu {
            dim,
            factors: a,
            perm,
            pivot_ratio,
        })
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let a = &self.factors;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= a[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in (r + 1)..n {
                s -= a[r * n + c] * x[c];
            }
            x[r] = s / a[r * n + r];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let a = &self.factors;
        // A^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w.
        let mut z = b.to_vec();
        for r in 0..n {
            let mut s = z[r];
            for c in 0..r {
                s -= a[c * n + r] * z[c];
            }
            z[r] = s / a[r * n + r];
        }
        for r in (0..n).rev() {
            let mut s = z[r];
            for c in (r + 1)..n {
                s -= a[c * n + r] * z[c];
            }
            z[r] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

/// Result of a rank-revealing QR factorization.
#[derive(Debug, Clone)]
pub struct RankReveal {
    pub rank: usize,
    /// Unit-norm vector spanning part of the numerical kernel, when the
    /// matrix is column-rank deficient.
    pub kernel: Option<Vec<f64>>,
}

/// Column-pivoted Householder QR of a `rows x cols` matrix. Columns whose
/// remaining norm falls below `rel_tol` times the largest diagonal of `R`
/// are considered dependent.
pub fn rank_reveal(matrix: &[f64], rows: usize, cols: usize, rel_tol: f64) -> RankReveal {
    assert_eq!(matrix.len(), rows * cols);
    let mut a = matrix.to_vec();
    let mut perm: Vec<usize> = (0..cols).collect();
    let steps = rows.min(cols);
    let mut rank = 0;
    let mut r00 = 0.0f64;
    for k in 0..steps {
        // Pivot on the column with largest remaining norm.
        let col_norm = |a: &[f64], c: usize| -> f64 {
            (k..rows).map(|r| a[r * cols + c] * a[r * cols + c]).sum::<f64>().sqrt()
        };
        let (best, best_norm) = (k..cols)
            .map(|c| (c, col_norm(&a, c)))
            .fold((k, -1.0), |b, cur| if cur.1 > b.1 { cur } else { b });
        if k == 0 {
            r00 = best_norm;
        }
        if best_norm <= rel_tol * r00 || best_norm == 0.0 {
            break;
        }
        if best != k {
            for r in 0..rows {
                a.swap(r * cols + k, r * cols + best);
            }
            perm.swap(k, best);
        }
        // Householder reflector zeroing a[k+1.., k].
        let alpha = if a[k * cols + k] >= 0.0 { -best_norm } else { best_norm };
        let mut v: Vec<f64> = (k..rows).map(|r| a[r * cols + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in k..cols {
                let dot: f64 = (k..rows).map(|r| v[r - k] * a[r * cols + c]).sum();
                let f = 2.0 * dot / vnorm2;
                for r in k..rows {
                    a[r * cols + c] -= f * v[r - k];
                }
            }
        }
        rank += 1;
    }
    if rank == cols {
        return RankReveal { rank, kernel: None };
    }
    // Kernel vector: solve R11 w = -R12 e_0 and append a unit entry.
    let mut w = vec![0.0; cols];
    w[rank] = 1.0;
    for r in (0..rank).rev() {
        let mut s = -a[r * cols + rank];
        for c in (r + 1)..rank {
            s -= a[r * cols + c] * w[c];
        }
        w[r] = s / a[r * cols + r];
    }
    let mut kernel = vec![0.0; cols];
    for (i, &p) in perm.iter().enumerate() {
        kernel[p] = w[i];
    }
    let norm = kernel.iter().map(|x| x * x).sum::<f64>().sqrt();
    kernel.iter_mut().for_each(|x| *x /= norm);
    RankReveal {
        rank,
        kernel: Some(kernel),
    }
}

/// Eigenvalues of a symmetric `n x n` matrix by cyclic Jacobi rotations,
/// sorted ascending.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}
