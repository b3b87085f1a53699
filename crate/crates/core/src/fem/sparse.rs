//! Compressed-row matrices and the direct solver backend.
//!
//! Factorization is delegated to faer's sparse LU. A CSR matrix of `A` is
//! handed to faer as the CSC matrix of `Aᵀ`, so forward solves use faer's
//! transposed solve and adjoint solves its plain one; no copy is made.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, MatMut};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    /// Column indices, strictly increasing within each row.
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::LinearSolver(format!("entry ({i},{j}) outside a {n}x{n} matrix")));
            }
            rows[i].push((j, v));
        }
        let mut m = Self {
            n,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            vals: Vec::new(),
        };
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                if m.col_idx.len() > *m.row_ptr.last().unwrap() && *m.col_idx.last().unwrap() == j {
                    *m.vals.last_mut().unwrap() += v;
                } else {
                    m.col_idx.push(j);
                    m.vals.push(v);
                }
            }
            m.row_ptr.push(m.col_idx.len());
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Position of entry (i, j) in `vals`.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].binary_search(&j).ok().map(|k| a + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.vals[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    /// Replaces row `i` by the unit row e_i (the diagonal must be stored).
    pub fn set_unit_row(&mut self, i: usize) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        for k in a..b {
            self.vals[k] = if self.col_idx[k] == i { 1.0 } else { 0.0 };
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, &t).expect("indices in range")
    }

    fn as_faer_transpose(&self) -> SparseColMatRef<'_, usize, f64> {
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.row_ptr, None, &self.col_idx);
        SparseColMatRef::new(sym, &self.vals)
    }

    /// Symbolic analysis of the sparsity pattern, reusable for every matrix
    /// with the same pattern.
    pub fn symbolic_lu(&self) -> Result<SymbolicLu<usize>> {
        SymbolicLu::try_new(self.as_faer_transpose().symbolic())
            .map_err(|e| Error::LinearSolver(format!("symbolic analysis failed: {e:?}")))
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// LU factorization of a square CSR matrix.
pub struct LuFactor {
    a: CsrMatrix,
    lu: Lu<usize, f64>,
}

impl LuFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let sym = a.symbolic_lu()?;
        Self::with_symbolic(a, &sym)
    }

    pub fn with_symbolic(a: &CsrMatrix, sym: &SymbolicLu<usize>) -> Result<Self> {
        let lu = Lu::try_new_with_symbolic(sym.clone(), a.as_faer_transpose()).map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
            LuError::Generic(g) => Error::LinearSolver(format!("{g:?}")),
        })?;
        Ok(Self { a: a.clone(), lu })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    fn raw(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let mut m = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        let view: MatMut<'_, f64> = m.as_mut();
        if transpose {
            self.lu.solve_in_place(view);
        } else {
            self.lu.solve_transpose_in_place(view);
        }
        let x: Vec<f64> = (0..b.len()).map(|i| m[(i, 0)]).collect();
        if let Some(pivot) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular { pivot });
        }
        Ok(x)
    }

    fn refined(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        if b.len() != self.a.n {
            return Err(Error::LinearSolver(format!(
                "right-hand side has length {}, matrix is {}x{}",
                b.len(),
                self.a.n,
                self.a.n
            )));
        }
        let apply = |x: &[f64]| if transpose { self.a.mul_transpose_vec(x) } else { self.a.mul_vec(x) };
        let bn = norm(b);
        let mut x = self.raw(b, transpose)?;
        if bn == 0.0 {
            return Ok(x);
        }
        let mut res: Vec<f64> = b.iter().zip(apply(&x)).map(|(bi, ai)| bi - ai).collect();
        let mut rn = norm(&res);
        for _ in 0..3 {
            if rn <= 1e-14 * bn {
                break;
            }
            let dx = self.raw(&res, transpose)?;
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let r2: Vec<f64> = b.iter().zip(apply(&trial)).map(|(bi, ai)| bi - ai).collect();
            let n2 = norm(&r2);
            if n2 >= rn {
                break;
            }
            x = trial;
            res = r2;
            rn = n2;
        }
        if rn > 1e-6 * bn {
            return Err(Error::LinearSolver(format!(
                "relative residual {:.3e} after refinement; matrix is numerically singular",
                rn / bn
            )));
        }
        Ok(x)
    }

    /// Solves A x = b with up to three steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.refined(b, false)
    }

    /// Solves Aᵀ z = c.
    pub fn solve_transpose(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.refined(c, true)
    }
}

pub fn sparse_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LuFactor::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(sparse_solve(&CsrMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]).unwrap();
        let x = sparse_solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15, "{x:?}");
    }

    #[test]
    fn random_spd_matches_refinement_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50;
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        // A = BᵀB + n I
        let mut dense = vec![vec![0.0; n]; n];
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { n as f64 } else { 0.0 };
                dense[i][j] = v;
                trip.push((i, j, v));
            }
        }
        let a = CsrMatrix::from_triplets(n, &trip).unwrap();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = sparse_solve(&a, &rhs).unwrap();

        // oracle: Jacobi-preconditioned Richardson iteration on the dense matrix
        // until the residual stagnates at round-off level
        let mut y = vec![0.0; n];
        let omega = 1.0 / dense.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        for _ in 0..20000 {
            let r: Vec<f64> = (0..n).map(|i| rhs[i] - (0..n).map(|j| dense[i][j] * y[j]).sum::<f64>()).collect();
            if norm(&r) < 1e-15 {
                break;
            }
            for i in 0..n {
                y[i] += omega * r[i];
            }
        }
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) / norm(&y) < 1e-10);
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        assert!(norm(&r) / norm(&rhs) < 1e-10);
    }

    #[test]
    fn transpose_solve() {
        let a = CsrMatrix::from_triplets(3, &[(0, 0, 4.0), (0, 2, 1.0), (1, 0, 2.0), (1, 1, 5.0), (2, 1, 1.0), (2, 2, 3.0)])
            .unwrap();
        let f = LuFactor::new(&a).unwrap();
        let c = [1.0, 2.0, 3.0];
        let z = f.solve_transpose(&c).unwrap();
        let back = a.mul_transpose_vec(&z);
        for i in 0..3 {
            assert!((back[i] - c[i]).abs() < 1e-14);
        }
        let z2 = LuFactor::new(&a.transpose()).unwrap().solve(&c).unwrap();
        for i in 0..3 {
            assert!((z[i] - z2[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = CsrMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 0.0), (2, 2, 1.0), (1, 2, 0.0)]).unwrap();
        match sparse_solve(&a, &[1.0, 1.0, 1.0]) {
            Err(Error::Singular { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected a singular-matrix error, got {other:?}"),
        }
        let b = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(sparse_solve(&b, &[1.0, 2.0]), Err(Error::Singular { .. }) | Err(Error::LinearSolver(_))));
    }
}
