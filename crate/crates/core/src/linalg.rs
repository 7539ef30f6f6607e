//! Minimal dense row-major matrix type and the few decompositions the
//! pipeline needs. Everything is `f64`; shapes stay small enough that
//! hand-rolled kernels are plenty.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.at(r, c);
            }
        }
        out
    }

    /// `self * other`
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow.iter()) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self^T * other`
    pub fn t_matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "t_matmul shape mismatch");
        let mut out = Mat::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let arow = self.row(r);
            let brow = other.row(r);
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(brow.iter()) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0 when either vector is all-zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// Orthonormalize the columns of `m` in place with modified Gram-Schmidt,
/// run twice for stability. Columns that collapse numerically (past the
/// true rank) are zeroed rather than normalized into noise directions.
pub fn orthonormalize_columns(m: &mut Mat) {
    let (rows, cols) = (m.rows, m.cols);
    let scale = (0..cols)
        .map(|j| {
            (0..rows)
                .map(|r| m.at(r, j) * m.at(r, j))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return;
    }
    let floor = scale * 1e-12;
    for _pass in 0..2 {
        for j in 0..cols {
            for k in 0..j {
                let mut proj = 0.0;
                for r in 0..rows {
                    proj += m.at(r, k) * m.at(r, j);
                }
                for r in 0..rows {
                    let v = m.at(r, k);
                    *m.at_mut(r, j) -= proj * v;
                }
            }
            let mut nrm = 0.0;
            for r in 0..rows {
                nrm += m.at(r, j) * m.at(r, j);
            }
            nrm = nrm.sqrt();
            if nrm > floor {
                for r in 0..rows {
                    *m.at_mut(r, j) /= nrm;
                }
            } else {
                for r in 0..rows {
                    *m.at_mut(r, j) = 0.0;
                }
            }
        }
    }
}

/// Solve the symmetric positive-definite system `(a + damping*I) x = b`
/// by Gaussian elimination with partial pivoting. `a` is n×n, `b` length n.
pub fn solve_damped(a: &Mat, b: &[f64], damping: f64) -> Result<Vec<f64>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let mut aug = Mat::zeros(n, n + 1);
    for i in 0..n {
        for j in 0..n {
            *aug.at_mut(i, j) = a.at(i, j) + if i == j { damping } else { 0.0 };
        }
        *aug.at_mut(i, n) = b[i];
    }
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if aug.at(r, col).abs() > aug.at(pivot, col).abs() {
                pivot = r;
            }
        }
        if aug.at(pivot, col).abs() < 1e-300 {
            return Err(Error::Numeric(format!(
                "singular system at column {col} despite damping {damping}"
            )));
        }
        if pivot != col {
            for j in 0..=n {
                let tmp = aug.at(col, j);
                *aug.at_mut(col, j) = aug.at(pivot, j);
                *aug.at_mut(pivot, j) = tmp;
            }
        }
        let inv = 1.0 / aug.at(col, col);
        for r in col + 1..n {
            let factor = aug.at(r, col) * inv;
            if factor == 0.0 {
                continue;
            }
            for j in col..=n {
                let v = aug.at(col, j);
                *aug.at_mut(r, j) -= factor * v;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = aug.at(i, n);
        for j in i + 1..n {
            acc -= aug.at(i, j) * x[j];
        }
        x[i] = acc / aug.at(i, i);
    }
    Ok(x)
}
