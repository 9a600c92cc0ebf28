//! Compressed sparse row storage and the Krylov solvers used by the field
//! solver.

use std::io::Write;

use crate::error::{IfePicError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed in
    /// input order so the result does not depend on anything but the input.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            // stable sort keeps the summation order of duplicates fixed
            scratch.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut s = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    s += scratch[k].1;
                    k += 1;
                }
                col_idx.push(c);
                values.push(s);
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for (r, out) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *out = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.get(r, r)).collect()
    }

    /// Largest |A_ij - A_ji| relative to the largest |A_ij|.
    pub fn symmetry_defect(&self) -> f64 {
        let max = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / max
    }

    /// Coordinate text dump: `row col value` per line, 0-based indices.
    pub fn write_coordinate(&self, mut w: impl Write) -> std::io::Result<()> {
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(w, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Incomplete LU factorisation with zero fill on the pattern of `a`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.nrows;
        let mut diag_pos = vec![usize::MAX; n];
        for r in 0..n {
            for k in lu.row_ptr[r]..lu.row_ptr[r + 1] {
                if lu.col_idx[k] == r {
                    diag_pos[r] = k;
                }
            }
            if diag_pos[r] == usize::MAX {
                return Err(IfePicError::InvalidConfig(format!("row {r} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.col_idx[k]] = k;
            }
            for k in start..end {
                let col = lu.col_idx[k];
                if col >= i {
                    break;
                }
                let pivot = lu.values[diag_pos[col]];
                if pivot == 0.0 {
                    return Err(IfePicError::InvalidConfig(format!("zero pivot in row {col}")));
                }
                let factor = lu.values[k] / pivot;
                lu.values[k] = factor;
                for kk in (diag_pos[col] + 1)..lu.row_ptr[col + 1] {
                    let p = pos[lu.col_idx[kk]];
                    if p != usize::MAX {
                        lu.values[p] -= factor * lu.values[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.col_idx[k]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag_pos })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.nrows;
        for i in 0..n {
            let mut s = r[i];
            for k in self.lu.row_ptr[i]..self.diag_pos[i] {
                s -= self.lu.values[k] * z[self.lu.col_idx[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (self.diag_pos[i] + 1)..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[k] * z[self.lu.col_idx[k]];
            }
            z[i] = s / self.lu.values[self.diag_pos[i]];
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite
/// systems.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<KrylovOutcome> {
    let n = a.nrows;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovOutcome { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dotv(&r, &z);
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(KrylovOutcome { iterations: it, residual: res });
        }
        a.mul_vec(&p, &mut ap);
        let alpha = rz / dotv(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dotv(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // recheck with the true residual before giving up
    let res = true_residual(a, b, x, bnorm);
    if res <= tol {
        return Ok(KrylovOutcome { iterations: max_iter, residual: res });
    }
    Err(IfePicError::SolverFailure { iterations: max_iter, residual: res })
}

/// ILU(0)-preconditioned BiCGSTAB for general nonsymmetric systems.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<KrylovOutcome> {
    let n = a.nrows;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovOutcome { iterations: 0, residual: 0.0 });
    }
    let m = Ilu0::new(a)?;
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            let res = true_residual(a, b, x, bnorm);
            if res <= tol {
                return Ok(KrylovOutcome { iterations: it, residual: res });
            }
        }
        let rho_new = dotv(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply(&p, &mut phat);
        a.mul_vec(&phat, &mut v);
        alpha = rho / dotv(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            res = true_residual(a, b, x, bnorm);
            if res <= tol {
                return Ok(KrylovOutcome { iterations: it + 1, residual: res });
            }
            r.copy_from_slice(&s);
            continue;
        }
        m.apply(&s, &mut shat);
        a.mul_vec(&shat, &mut t);
        omega = dotv(&t, &s) / dotv(&t, &t);
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / bnorm;
        if omega == 0.0 {
            break;
        }
    }
    let res = true_residual(a, b, x, bnorm);
    if res <= tol {
        return Ok(KrylovOutcome { iterations: max_iter, residual: res });
    }
    Err(IfePicError::SolverFailure { iterations: max_iter, residual: res })
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], bnorm: f64) -> f64 {
    let mut ax = vec![0.0; a.nrows];
    a.mul_vec(x, &mut ax);
    ax.iter().zip(b).map(|(ax, b)| (b - ax) * (b - ax)).sum::<f64>().sqrt() / bnorm
}
