//! Seeded randomized truncated SVD via subspace iteration (Halko,
//! Martinsson & Tropp, 2011). A dense matrix is sketched with a seeded
//! Gaussian test matrix, the range is refined with power iterations, and
//! the small projected problem is solved exactly by one-sided Jacobi.

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_columns, Mat};
use crate::rng::Lcg;

#[derive(Debug, Clone)]
pub struct Svd {
    /// rows × rank, orthonormal columns
    pub u: Mat,
    /// non-increasing
    pub singular_values: Vec<f64>,
    /// cols × rank, orthonormal columns
    pub v: Mat,
}

impl Svd {
    /// `U · diag(s) · V^T`
    pub fn reconstruct(&self) -> Mat {
        let rank = self.singular_values.len();
        let mut scaled = self.u.clone();
        for r in 0..scaled.rows {
            for c in 0..rank {
                *scaled.at_mut(r, c) *= self.singular_values[c];
            }
        }
        scaled.matmul(&self.v.transpose())
    }
}

/// Exact SVD of a small dense matrix by one-sided Jacobi rotations on the
/// columns of A (or A^T when wide). Deterministic; O(n² m) per sweep.
pub fn jacobi_svd(matrix: &Mat) -> Svd {
    let transposed = matrix.rows < matrix.cols;
    let a0 = if transposed {
        matrix.transpose()
    } else {
        matrix.clone()
    };
    let m = a0.rows;
    let n = a0.cols;
    let mut a = a0;
    let mut v = Mat::zeros(n, n);
    for i in 0..n {
        *v.at_mut(i, i) = 1.0;
    }
    let eps = 1e-14;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..m {
                    let ap = a.at(r, p);
                    let aq = a.at(r, q);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let ap = a.at(r, p);
                    let aq = a.at(r, q);
                    *a.at_mut(r, p) = c * ap - s * aq;
                    *a.at_mut(r, q) = s * ap + c * aq;
                }
                for r in 0..n {
                    let vp = v.at(r, p);
                    let vq = v.at(r, q);
                    *v.at_mut(r, p) = c * vp - s * vq;
                    *v.at_mut(r, q) = s * vp + c * vq;
                }
            }
        }
        if off < eps {
            break;
        }
    }
    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|r| a.at(r, j) * a.at(r, j)).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = Mat::zeros(m, n);
    let mut vv = Mat::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let nrm = norms[src];
        singular_values.push(nrm);
        for r in 0..m {
            *u.at_mut(r, dst) = if nrm > 1e-300 {
                a.at(r, src) / nrm
            } else {
                0.0
            };
        }
        for r in 0..n {
            *vv.at_mut(r, dst) = v.at(r, src);
        }
    }
    if transposed {
        Svd {
            u: vv,
            singular_values,
            v: u,
        }
    } else {
        Svd {
            u,
            singular_values,
            v: vv,
        }
    }
}

pub const DEFAULT_OVERSAMPLE: usize = 8;
pub const DEFAULT_POWER_ITERS: usize = 5;

/// Rank-`rank` truncated SVD of a dense matrix. The sketch is seeded, so
/// results are reproducible; `power_iters` is clamped up to 5.
pub fn randomized_svd(matrix: &Mat, rank: usize, power_iters: usize, seed: u64) -> Result<Svd> {
    if rank == 0 {
        return Err(Error::Domain("svd rank must be >= 1".into()));
    }
    if matrix.rows == 0 || matrix.cols == 0 {
        return Err(Error::Domain("svd of an empty matrix".into()));
    }
    let max_rank = matrix.rows.min(matrix.cols);
    let rank = rank.min(max_rank);
    let sketch = (rank + DEFAULT_OVERSAMPLE).min(max_rank);
    let iters = power_iters.max(DEFAULT_POWER_ITERS);

    let mut rng = Lcg::new(seed);
    let mut omega = Mat::zeros(matrix.cols, sketch);
    for v in &mut omega.data {
        *v = rng.gaussian();
    }
    let mut q = matrix.matmul(&omega);
    orthonormalize_columns(&mut q);
    for _ in 0..iters {
        let mut z = matrix.t_matmul(&q);
        orthonormalize_columns(&mut z);
        q = matrix.matmul(&z);
        orthonormalize_columns(&mut q);
    }
    // Project: B = Q^T A  (sketch × cols), solve exactly, lift back.
    let b = q.t_matmul(matrix);
    let small = jacobi_svd(&b);
    let keep = rank.min(small.singular_values.len());
    let mut u_small = Mat::zeros(sketch, keep);
    for r in 0..sketch {
        for c in 0..keep {
            *u_small.at_mut(r, c) = small.u.at(r, c);
        }
    }
    let u = q.matmul(&u_small);
    let mut v = Mat::zeros(matrix.cols, keep);
    for r in 0..matrix.cols {
        for c in 0..keep {
            *v.at_mut(r, c) = small.v.at(r, c);
        }
    }
    let singular_values = small.singular_values[..keep].to_vec();
    if singular_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite singular values".into()));
    }
    Ok(Svd {
        u,
        singular_values,
        v,
    })
}
