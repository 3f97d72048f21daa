//! Sparse symmetric positive definite solves.
//!
//! Systems up to [`DENSE_LIMIT`] unknowns go through a dense Cholesky
//! factorization; larger ones use Jacobi-preconditioned conjugate gradients
//! with a relative residual target. Either way the true residual is checked
//! after the solve.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub const DENSE_LIMIT: usize = 500;

/// Symmetric matrix in CSR form (full pattern stored, not just a triangle).
#[derive(Clone, Debug)]
pub struct SymCsr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    data: Vec<f64>,
}

impl SymCsr {
    /// Builds from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(merged.len());
        let mut data = Vec::with_capacity(merged.len());
        let mut row = 0usize;
        for (r, c, v) in merged {
            while row < r as usize {
                row += 1;
                indptr[row] = indices.len();
            }
            indices.push(c);
            data.push(v);
        }
        while row < n {
            row += 1;
            indptr[row] = indices.len();
        }
        Self { n, indptr, indices, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k] as usize];
            }
            *out = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (i, out) in d.iter_mut().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.indices[k] as usize == i {
                    *out += self.data[k];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k] as usize)] += self.data[k];
            }
        }
        m
    }
}

pub enum SpdSolver {
    Dense { matrix: SymCsr, factor: Cholesky<f64, Dyn> },
    Cg { matrix: SymCsr, inv_diag: Vec<f64>, tolerance: f64 },
}

impl SpdSolver {
    pub fn new(matrix: SymCsr, tolerance: f64) -> Result<Self> {
        if matrix.n() <= DENSE_LIMIT {
            let dense = matrix.to_dense();
            let factor = Cholesky::new(dense).ok_or(Error::SolveFailed {
                residual: f64::NAN,
                iterations: 0,
                tolerance,
            })?;
            Ok(Self::Dense { matrix, factor })
        } else {
            let diag = matrix.diagonal();
            if diag.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::SolveFailed { residual: f64::NAN, iterations: 0, tolerance });
            }
            let inv_diag = diag.iter().map(|&d| 1.0 / d).collect();
            Ok(Self::Cg { matrix, inv_diag, tolerance })
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Dense { matrix, factor } => {
                let b = DVector::from_column_slice(rhs);
                let x = factor.solve(&b);
                let sol: Vec<f64> = x.iter().copied().collect();
                check_residual(matrix, &sol, rhs, 1e-10, 0)?;
                Ok(sol)
            }
            Self::Cg { matrix, inv_diag, tolerance } => {
                let (sol, iters) = conjugate_gradient(matrix, inv_diag, rhs, *tolerance)?;
                check_residual(matrix, &sol, rhs, tolerance * 10.0, iters)?;
                Ok(sol)
            }
        }
    }
}

fn check_residual(
    a: &SymCsr,
    x: &[f64],
    b: &[f64],
    tolerance: f64,
    iterations: usize,
) -> Result<()> {
    let mut ax = vec![0.0; a.n()];
    a.apply(x, &mut ax);
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let resid = ax
        .iter()
        .zip(b)
        .map(|(am, bm)| (am - bm) * (am - bm))
        .sum::<f64>()
        .sqrt();
    let rel = if norm_b > 0.0 { resid / norm_b } else { resid };
    if rel > tolerance && resid > 1e-13 {
        return Err(Error::SolveFailed { residual: rel, iterations, tolerance });
    }
    Ok(())
}

fn conjugate_gradient(
    a: &SymCsr,
    inv_diag: &[f64],
    b: &[f64],
    tolerance: f64,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n();
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n + 100;
    for it in 0..max_iter {
        a.apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::SolveFailed { residual: f64::NAN, iterations: it, tolerance });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tolerance * norm_b {
            return Ok((x, it + 1));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::SolveFailed { residual: rnorm / norm_b, iterations: max_iter, tolerance })
}

/// Dense LU solve for general square systems (generator oracle sizes).
pub fn solve_dense(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.lu();
    lu.solve(&b).ok_or(Error::SolveFailed {
        residual: f64::NAN,
        iterations: 0,
        tolerance: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_plus_identity(n: usize) -> SymCsr {
        // 1D path graph Laplacian + I, SPD
        let mut t = Vec::new();
        for i in 0..n {
            let mut d = 1.0;
            if i > 0 {
                t.push((i as u32, (i - 1) as u32, -1.0));
                d += 1.0;
            }
            if i + 1 < n {
                t.push((i as u32, (i + 1) as u32, -1.0));
                d += 1.0;
            }
            t.push((i as u32, i as u32, d));
        }
        SymCsr::from_triplets(n, t)
    }

    #[test]
    fn dense_and_cg_agree() {
        for &n in &[40usize, 700] {
            let a = laplacian_plus_identity(n);
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let solver = SpdSolver::new(a.clone(), 1e-12).unwrap();
            let x = solver.solve(&b).unwrap();
            let mut ax = vec![0.0; n];
            a.apply(&x, &mut ax);
            let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n} err={err}");
        }
    }
}
