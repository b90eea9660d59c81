//! Compressed sparse row operator over complex amplitudes.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows beyond this count are multiplied in parallel.
const PAR_ROWS: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` entries. Duplicates are summed and
    /// exact zeros dropped; columns within a row end up sorted.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, C64)>, nnz_cap: usize) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::param("entries", format!("({r}, {c}) outside dimension {dim}")));
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (r, c) => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != C64::new(0.0, 0.0));
        if merged.len() > nnz_cap {
            return Err(Error::OperatorTooLarge { nnz: merged.len(), cap: nnz_cap });
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        let cols = merged.iter().map(|e| e.1).collect();
        let vals = merged.iter().map(|e| e.2).collect();
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { dim, row_ptr, cols, vals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    fn row_dot(&self, i: usize, x: &[C64]) -> C64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let mut acc = C64::new(0.0, 0.0);
        for k in a..b {
            acc += self.vals[k] * x[self.cols[k]];
        }
        acc
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if self.dim >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    /// `⟨x|A|x⟩`.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        (0..self.dim).map(|i| x[i].conj() * self.row_dot(i, x)).sum()
    }

    /// `max |A_ij − conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i).conj()).norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `[A, D]` for a diagonal `D`.
    pub fn commutator_norm_with_diagonal(&self, diag: &[f64]) -> f64 {
        assert_eq!(diag.len(), self.dim);
        self.triplets()
            .map(|(i, j, v)| v.norm_sqr() * (diag[j] - diag[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute row sum; bounds the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim).map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn assembly_sums_duplicates_and_drops_zeros() {
        let op = SparseOperator::from_triplets(
            3,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(1.0, 0.0)), (2, 2, c(0.0, 0.0)), (1, 0, c(2.0, 0.0))],
            100,
        )
        .unwrap();
        assert_eq!(op.nnz(), 2);
        assert_eq!(op.get(0, 1), c(2.0, 0.0));
        assert_eq!(op.get(2, 2), c(0.0, 0.0));
        assert_eq!(op.hermiticity_error(), 0.0);
    }

    #[test]
    fn matvec_and_expectation() {
        let op = SparseOperator::from_triplets(2, vec![(0, 1, c(0.0, -1.0)), (1, 0, c(0.0, 1.0))], 10).unwrap();
        let x = [c(1.0, 0.0), c(0.0, 1.0)];
        let mut y = [c(0.0, 0.0); 2];
        op.matvec(&x, &mut y);
        assert_eq!(y, [c(1.0, 0.0), c(0.0, 1.0)]);
        assert!((op.expectation(&x) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn non_hermitian_detected() {
        let op = SparseOperator::from_triplets(2, vec![(0, 1, c(1.0, 0.0))], 10).unwrap();
        assert_eq!(op.hermiticity_error(), 1.0);
    }

    #[test]
    fn commutator_with_diagonal() {
        let op = SparseOperator::from_triplets(2, vec![(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))], 10).unwrap();
        assert_eq!(op.commutator_norm_with_diagonal(&[1.0, 1.0]), 0.0);
        assert!((op.commutator_norm_with_diagonal(&[0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cap_enforced() {
        let e = (0..5).map(|i| (i, i, c(1.0, 0.0))).collect();
        assert!(matches!(SparseOperator::from_triplets(5, e, 4), Err(Error::OperatorTooLarge { .. })));
    }
}
