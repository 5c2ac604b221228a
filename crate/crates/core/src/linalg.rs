//! Sparse matrices and Krylov solvers for consistent, possibly singular,
//! symmetric positive semidefinite systems.

use nalgebra::DMatrix;

use crate::{par, Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. Entries are accumulated in input order within
    /// each `(row, col)`.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`; rows are computed independently.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        par::for_each_chunk_mut(y, 256, |chunk, ys| {
            let start = chunk * 256;
            for (k, y) in ys.iter_mut().enumerate() {
                *y = self.row(start + k).map(|(c, v)| v * x[c]).sum();
            }
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Largest `|A_ij - A_ji|` relative to the largest `|A_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Settings for [`conjugate_gradient`].
#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    /// Stop when `‖b - A x‖ ≤ max(rel_tol · ‖b‖, abs_tol)`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Iteration cap; `None` means `10 · n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_iter: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for `A x = b` with `A` symmetric
/// positive semidefinite and `b ∈ range(A)`.
///
/// `x` holds the initial guess on entry. With `x₀ ∈ range(P⁻¹A)` (for example
/// zero) the iterates stay there, so the result is the solution of minimal
/// `P`-norm; with `P = I` it is the minimum-norm solution.
pub fn conjugate_gradient<A>(
    apply: A,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgStats>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm(b);
    if b_norm <= opts.abs_tol || b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let threshold = (opts.rel_tol * b_norm).max(opts.abs_tol);
    let mut res = norm(&r);
    let mut it = 0;
    while res > threshold {
        if it >= max_iter {
            return Err(Error::SolverDiverged {
                iterations: it,
                residual: res / b_norm,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Search direction in the null space: b is not consistent.
            return Err(Error::SolverDiverged {
                iterations: it,
                residual: res / b_norm,
            });
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        res = norm(&r);
        it += 1;
    }
    Ok(CgStats {
        iterations: it,
        relative_residual: res / b_norm,
    })
}

/// Minimum-norm solution of a consistent PSD sparse system by plain CG
/// started from zero.
pub fn solve_semidefinite(a: &CsrMatrix, b: &[f64], opts: CgOptions) -> Result<(Vec<f64>, CgStats)> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    let mut x = vec![0.0; b.len()];
    let stats = conjugate_gradient(|v, out| a.mul_vec_into(v, out), None, b, &mut x, opts)?;
    Ok((x, stats))
}

/// Moore–Penrose pseudo-inverse of a small symmetric matrix, discarding
/// singular values below `cutoff`.
pub fn pseudo_inverse(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut s_inv = DMatrix::zeros(svd.singular_values.len(), svd.singular_values.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            s_inv[(i, i)] = 1.0 / s;
        }
    }
    vt.transpose() * s_inv * u.transpose()
}

/// Numerical rank with singular values above `rel_tol · σ_max`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = m.singular_values();
    let max = s.iter().fold(0.0f64, |a, &b| a.max(b));
    s.iter().filter(|&&x| x > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_systems() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 1.0)]);
        let (x, _) = solve_semidefinite(&a, &[2.0, 1.0], CgOptions::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);

        let singular = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0)]);
        let (x, _) = solve_semidefinite(&singular, &[1.0, 0.0], CgOptions::default()).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
    }

    #[test]
    fn min_norm_for_duplicated_columns() {
        // [[1,1],[1,1]] x = [2,2] -> min-norm solution (1,1)
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
        );
        let (x, _) = solve_semidefinite(&a, &[2.0, 2.0], CgOptions::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inconsistent_system_is_reported() {
        let singular = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0)]);
        let err = solve_semidefinite(&singular, &[1.0, 1.0], CgOptions::default());
        assert!(matches!(err, Err(Error::SolverDiverged { .. })));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 0, 1.0), (1, 0, 2.5)]);
        assert_eq!(a.get(1, 0), 3.5);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.mul_vec(&[1.0, 0.0]), vec![1.0, 3.5]);
    }

    #[test]
    fn pseudo_inverse_of_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = pseudo_inverse(&m, 1e-12);
        for v in p.iter() {
            assert!((v - 0.25).abs() < 1e-14);
        }
        assert_eq!(rank(&m, 1e-12), 1);
    }
}
