//! Small dense symmetric-matrix kernels. Problem sizes here are tens of columns,
//! so plain row-major storage and textbook Cholesky are all that is needed.

use alloc::vec;
use alloc::vec::Vec;
use libm::{log, sqrt};

/// Pivots below this fraction of the original diagonal entry are treated as zero.
/// For a Gram matrix the ratio equals `1 - R^2` of that column on the preceding ones.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "row-major buffer must hold n*n entries");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `self += scale * v v^T`
    pub fn add_outer(&mut self, scale: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            let si = scale * v[i];
            if si == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for (r, vj) in row.iter_mut().zip(v) {
                *r += si * vj;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Cholesky factorization of a symmetric positive-definite matrix; `None` when a
    /// pivot falls below `rel_tol` times its original diagonal entry.
    pub fn cholesky(&self, rel_tol: f64) -> Option<Cholesky> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let ajj = self.get(j, j);
            let mut d = ajj;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > rel_tol * ajj.abs()) || !(ajj > 0.0) || !d.is_finite() {
                return None;
            }
            let ljj = sqrt(d);
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Some(Cholesky { n, l })
    }
}

#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * log(self.l[i * self.n + i])).sum()
    }

    pub fn inverse(&self) -> SquareMatrix {
        let n = self.n;
        let mut inv = SquareMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for (i, c) in col.into_iter().enumerate() {
                inv.set(i, j, c);
            }
        }
        inv
    }
}

/// Solves the normal equations `gram * x = rhs`, dropping any column whose pivot is
/// numerically zero (it is exactly explained by earlier columns). Dropped columns get
/// a zero coefficient; their indices are returned alongside the solution.
pub fn solve_normal_equations(gram: &SquareMatrix, rhs: &[f64], rel_tol: f64) -> (Vec<f64>, Vec<usize>) {
    let n = gram.dim();
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    // Greedy: add columns one by one, keep those that stay positive definite.
    let mut factor: Option<Cholesky> = None;
    for j in 0..n {
        let mut trial = active.clone();
        trial.push(j);
        let sub = submatrix(gram, &trial);
        match sub.cholesky(rel_tol) {
            Some(c) => {
                active = trial;
                factor = Some(c);
            }
            None => dropped.push(j),
        }
    }
    let mut x = vec![0.0; n];
    if let Some(c) = factor {
        let b: Vec<f64> = active.iter().map(|&j| rhs[j]).collect();
        for (k, v) in active.iter().zip(c.solve(&b)) {
            x[*k] = v;
        }
    }
    (x, dropped)
}

pub fn submatrix(m: &SquareMatrix, idx: &[usize]) -> SquareMatrix {
    let mut out = SquareMatrix::zeros(idx.len());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out.set(a, b, m.get(i, j));
        }
    }
    out
}
