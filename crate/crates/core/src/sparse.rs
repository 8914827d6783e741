//! Thin wrapper over faer's sparse direct solvers. The sparsity pattern of
//! every system assembled by a nonlinear iteration is fixed, so the symbolic
//! factorization is computed once and reused.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Factorization {
    /// Partial-pivoting LU for general matrices.
    Lu,
    /// Cholesky for symmetric positive definite matrices (lower triangle read).
    Cholesky,
}

pub(crate) struct DirectSolver {
    n: usize,
    kind: Factorization,
    lu: Option<SymbolicLu<usize>>,
    llt: Option<SymbolicLlt<usize>>,
}

impl DirectSolver {
    pub(crate) fn new(n: usize, kind: Factorization) -> Self {
        Self { n, kind, lu: None, llt: None }
    }

    /// Solves `A x = b` for `A` given as triplets. Triplets must be emitted in
    /// the same order with the same indices on every call.
    pub(crate) fn solve(&mut self, triplets: &[Triplet<usize, usize, f64>], rhs: &[f64]) -> Result<Vec<f64>, String> {
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, triplets)
            .map_err(|e| format!("matrix assembly failed: {e:?}"))?;
        let b = Col::<f64>::from_fn(self.n, |k| rhs[k]);
        let x = match self.kind {
            Factorization::Lu => {
                if self.lu.is_none() {
                    self.lu = Some(SymbolicLu::try_new(mat.symbolic()).map_err(|e| format!("{e:?}"))?);
                }
                let sym = self.lu.clone().expect("set above");
                let lu = Lu::try_new_with_symbolic(sym, mat.as_ref()).map_err(|e| format!("LU failed: {e:?}"))?;
                lu.solve(&b)
            }
            Factorization::Cholesky => {
                if self.llt.is_none() {
                    self.llt =
                        Some(SymbolicLlt::try_new(mat.symbolic(), Side::Lower).map_err(|e| format!("{e:?}"))?);
                }
                let sym = self.llt.clone().expect("set above");
                let llt = Llt::try_new_with_symbolic(sym, mat.as_ref(), Side::Lower)
                    .map_err(|e| format!("Cholesky failed: {e:?}"))?;
                llt.solve(&b)
            }
        };
        let out: Vec<f64> = (0..self.n).map(|k| x[k]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err("linear solve produced non-finite values".into());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_systems_repeatedly() {
        // [[4, 1], [1, 3]] x = [1, 2]
        let t = |a: f64| vec![Triplet::new(0, 0, 4.0 * a), Triplet::new(1, 0, a), Triplet::new(0, 1, a), Triplet::new(1, 1, 3.0 * a)];
        for kind in [Factorization::Lu, Factorization::Cholesky] {
            let mut s = DirectSolver::new(2, kind);
            for a in [1.0, 2.0] {
                let x = s.solve(&t(a), &[1.0, 2.0]).unwrap();
                assert!((4.0 * a * x[0] + a * x[1] - 1.0).abs() < 1e-12);
                assert!((a * x[0] + 3.0 * a * x[1] - 2.0).abs() < 1e-12);
            }
        }
    }
}
