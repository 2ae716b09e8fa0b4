//! Compressed sparse rows, direct LU via faer, and a Jacobi-preconditioned CG.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};

use crate::error::{Error, Result};

/// Systems larger than this are solved with preconditioned CG unless forced direct.
pub const DIRECT_LIMIT: usize = 200_000;
pub const CG_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            y[r] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .find(|&k| self.indices[k] == r)
                    .map_or(0.0, |k| self.values[k])
            })
            .collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        (self.indptr[r]..self.indptr[r + 1])
            .find(|&k| self.indices[k] == c)
            .map_or(0.0, |k| self.values[k])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| {
            (self.indptr[r]..self.indptr[r + 1]).all(|k| {
                let c = self.indices[k];
                (self.values[k] - self.get(c, r)).abs() <= tol * self.values[k].abs().max(1.0)
            })
        })
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut ax = vec![0.0; self.n];
        self.matvec(x, &mut ax);
        b.iter().zip(&ax).map(|(b, a)| b - a).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl CsrMatrix {
    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| {
                self.values[self.indptr[r]..self.indptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn sequential() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Sparse LU factorization reusable for several right-hand sides.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    matrix: CsrMatrix,
    a_norm: f64,
}

impl Factorization {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        sequential();
        let n = matrix.n;
        let mut trip = Vec::with_capacity(matrix.values.len());
        for r in 0..n {
            for k in matrix.indptr[r]..matrix.indptr[r + 1] {
                trip.push(Triplet::new(r, matrix.indices[k], matrix.values[k]));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
        Ok(Self {
            lu,
            matrix: matrix.clone(),
            a_norm: matrix.norm_inf(),
        })
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solves with up to three steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bn = norm(b);
        let mut x = self.raw_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite solution".into()));
        }
        if bn == 0.0 {
            return Ok(x);
        }
        for _ in 0..3 {
            let r = self.matrix.residual(&x, b);
            if norm(&r) <= 1e-13 * bn {
                break;
            }
            let dx = self.raw_solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        // normwise backward error
        let r = norm_inf(&self.matrix.residual(&x, b));
        let rel = r / (self.a_norm * norm_inf(&x) + norm_inf(b));
        if !(rel <= 1e-12) {
            return Err(Error::SingularSystem(format!(
                "direct solve backward error {rel:e}"
            )));
        }
        Ok(x)
    }
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite systems.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let inv_d: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::NonConvergence {
                residual: norm(&r) / bn,
                iterations: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bn {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_d[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        residual: norm(&r) / bn,
        iterations: max_iter,
    })
}

/// Solver selection for a single right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    /// Direct up to `DIRECT_LIMIT` unknowns, CG above.
    Auto,
    Direct,
    Iterative,
}

pub fn solve(a: &CsrMatrix, b: &[f64], choice: SolverChoice) -> Result<Vec<f64>> {
    let iterative = match choice {
        SolverChoice::Auto => a.n > DIRECT_LIMIT && a.is_symmetric(1e-12),
        SolverChoice::Direct => false,
        SolverChoice::Iterative => true,
    };
    if iterative {
        conjugate_gradient(a, b, 1e-12, CG_MAX_ITER)
    } else {
        Factorization::new(a)?.solve(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn duplicates_are_summed() {
        let m =
            CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0), (0, 1, -1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn diagonal_system() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 0, 2.0), (1, 1, 4.0), (2, 2, 8.0)]);
        let x = solve(&m, &[2.0, 4.0, 8.0], SolverChoice::Direct).unwrap();
        assert_eq!(x, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn direct_and_cg_agree_on_laplacian() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.01 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x1 = solve(&a, &b, SolverChoice::Direct).unwrap();
        let x2 = solve(&a, &b, SolverChoice::Iterative).unwrap();
        for (u, v) in x1.iter().zip(&x2) {
            assert_relative_eq!(u, v, epsilon = 1e-9);
        }
    }
}
