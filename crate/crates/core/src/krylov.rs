//! Lanczos approximation of `exp(−iHt)·v` for Hermitian sparse `H`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Subspace size and step-error tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub dim: usize,
    pub tol: f64,
    pub min_step: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { dim: 30, tol: 1e-12, min_step: 1e-10 }
    }
}

/// Propagator with reusable scratch space.
#[derive(Debug)]
pub struct Lanczos {
    opts: KrylovOptions,
    basis: Vec<Vec<C64>>,
    w: Vec<C64>,
    /// Step length carried over between calls.
    step: f64,
    pub steps_taken: usize,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl Lanczos {
    pub fn new(dim: usize, opts: KrylovOptions) -> Self {
        let m = opts.dim.clamp(2, dim.max(2));
        Self {
            opts: KrylovOptions { dim: m, ..opts },
            basis: vec![vec![C64::new(0.0, 0.0); dim]; m + 1],
            w: vec![C64::new(0.0, 0.0); dim],
            step: f64::INFINITY,
            steps_taken: 0,
        }
    }

    /// Coefficients of `exp(−iTh)e₁` in the current basis of size `m`, with the
    /// residual estimate `β_m |c_m|`.
    fn coefficients(alpha: &[f64], beta: &[f64], m: usize, h: f64) -> (Vec<C64>, f64) {
        let mut tri = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            tri[(i, i)] = alpha[i];
            if i + 1 < m {
                tri[(i, i + 1)] = beta[i];
                tri[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(tri);
        let c: Vec<C64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| {
                        let q = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                        C64::from_polar(q, -eig.eigenvalues[k] * h)
                    })
                    .sum()
            })
            .collect();
        let err = beta[m - 1] * c[m - 1].norm();
        (c, err)
    }

    /// One accepted step of length at most `h_max`; returns the length taken.
    fn step(&mut self, op: &SparseOperator, v: &mut [C64], h_max: f64) -> Result<f64> {
        let nv = norm(v);
        let m_max = self.opts.dim.min(v.len());
        let scale = op.norm_bound().max(1e-300);
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta = Vec::with_capacity(m_max);
        for (b, x) in self.basis[0].iter_mut().zip(v.iter()) {
            *b = x / nv;
        }
        let mut h = self.step.min(h_max);
        let mut accepted: Option<(Vec<C64>, usize)> = None;
        for j in 0..m_max {
            op.matvec(&self.basis[j], &mut self.w);
            alpha.push(dot(&self.basis[j], &self.w).re);
            for k in 0..=j {
                let c = dot(&self.basis[k], &self.w);
                for (wi, bi) in self.w.iter_mut().zip(&self.basis[k]) {
                    *wi -= c * bi;
                }
            }
            let b = norm(&self.w);
            beta.push(b);
            let m = j + 1;
            if b <= 1e-13 * scale {
                // Invariant subspace: the projection is exact.
                accepted = Some((Self::coefficients(&alpha, &beta, m, h).0, m));
                break;
            }
            if m >= 4 || m == m_max {
                let (c, err) = Self::coefficients(&alpha, &beta, m, h);
                if err <= self.opts.tol {
                    self.step = if err < 0.01 * self.opts.tol && m < m_max / 2 { h * 1.5 } else { h };
                    accepted = Some((c, m));
                    break;
                }
            }
            if m < m_max {
                for (t, wi) in self.basis[j + 1].iter_mut().zip(&self.w) {
                    *t = wi / b;
                }
            }
        }
        let (c, m) = match accepted {
            Some(x) => x,
            None => loop {
                h *= 0.5;
                if h < self.opts.min_step {
                    return Err(Error::Integrator("Krylov step underflow".into()));
                }
                let (c, err) = Self::coefficients(&alpha, &beta, m_max, h);
                if err <= self.opts.tol {
                    self.step = h;
                    break (c, m_max);
                }
            },
        };
        v.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (k, ck) in c.iter().enumerate().take(m) {
            let s = ck * nv;
            for (x, b) in v.iter_mut().zip(&self.basis[k]) {
                *x += s * b;
            }
        }
        self.steps_taken += 1;
        Ok(h)
    }

    /// Overwrites `v` with `exp(−iH·t)·v`.
    pub fn propagate(&mut self, op: &SparseOperator, v: &mut [C64], t: f64) -> Result<()> {
        let mut remaining = t;
        while remaining > 1e-14 * t {
            if norm(v) == 0.0 {
                return Ok(());
            }
            remaining -= self.step(op, v, remaining)?;
        }
        Ok(())
    }
}
