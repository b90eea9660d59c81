//! Dense complex matrices held as separate real and imaginary parts, so that
//! products run on the optimized real kernels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self { re: DMatrix::zeros(n, n), im: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { re: DMatrix::identity(n, n), im: DMatrix::zeros(n, n) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, v) in d.iter().enumerate() {
            m.re[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.re.nrows()
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }

    pub fn adjoint(&self) -> Self {
        Self { re: self.re.transpose(), im: -self.im.transpose() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { re: &self.re * s, im: &self.im * s }
    }

    pub fn add_assign(&mut self, o: &Self) {
        self.re += &o.re;
        self.im += &o.im;
    }

    pub fn max_abs(&self) -> f64 {
        self.re.iter().zip(self.im.iter()).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// Largest column sum of moduli.
    pub fn norm1(&self) -> f64 {
        (0..self.dim())
            .map(|j| self.re.column(j).iter().zip(self.im.column(j).iter()).map(|(a, b)| a.hypot(*b)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn matvec(&self, v: &DVector<C64>) -> DVector<C64> {
        let vr = v.map(|z| z.re);
        let vi = v.map(|z| z.im);
        let r = &self.re * &vr - &self.im * &vi;
        let i = &self.re * &vi + &self.im * &vr;
        DVector::from_iterator(v.len(), r.iter().zip(i.iter()).map(|(a, b)| C64::new(*a, *b)))
    }

    /// `Re ⟨v|M|v⟩`.
    pub fn quad(&self, v: &DVector<C64>) -> f64 {
        v.dotc(&self.matvec(v)).re
    }
}

/// `exp(A·t)` together with `∫₀ᵗ exp(A†s) Γ_k exp(As) ds` for every diagonal
/// rate vector `Γ_k`.
pub(crate) fn expm_with_loss(a: &CMat, t: f64, rates: &[&[f64]]) -> (CMat, Vec<CMat>) {
    let n = a.dim();
    let norm = a.norm1() * t;
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let tau = t / 2f64.powi(squarings as i32);
    let b = a.scale(tau);
    let bd = b.adjoint();

    let mut u = CMat::identity(n);
    let mut term = CMat::identity(n);
    for k in 1..40 {
        term = term.mul(&b).scale(1.0 / k as f64);
        u.add_assign(&term);
        if term.max_abs() < 1e-18 {
            break;
        }
    }

    let mut ws: Vec<CMat> = rates
        .iter()
        .map(|g| {
            let mut x = CMat::diagonal(g).scale(tau);
            let mut w = x.clone();
            for k in 1..60 {
                let mut next = bd.mul(&x);
                next.add_assign(&x.mul(&b));
                x = next.scale(1.0 / (k + 1) as f64);
                w.add_assign(&x);
                if x.max_abs() < 1e-18 * w.max_abs().max(f64::MIN_POSITIVE) {
                    break;
                }
            }
            w
        })
        .collect();

    for _ in 0..squarings {
        let ud = u.adjoint();
        for w in ws.iter_mut() {
            let grown = ud.mul(w).mul(&u);
            w.add_assign(&grown);
        }
        u = u.mul(&u);
    }
    (u, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(m: &CMat) -> DMatrix<C64> {
        DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j))
    }

    fn sample(n: usize) -> (CMat, Vec<f64>) {
        let mut a = CMat::zeros(n);
        let mut rates = vec![0.0; n];
        for i in 0..n {
            a.im[(i, i)] = -0.3 * i as f64;
            if i + 1 < n {
                a.im[(i, i + 1)] = 1.0;
                a.im[(i + 1, i)] = 1.0;
            }
            rates[i] = 0.1 * (i % 3) as f64;
            a.re[(i, i)] = -0.5 * rates[i];
        }
        (a, rates)
    }

    #[test]
    fn exponential_matches_reference() {
        let (a, rates) = sample(12);
        let (u, _) = expm_with_loss(&a, 7.0, &[&rates]);
        let reference = (dense(&a) * C64::new(7.0, 0.0)).exp();
        let err = (dense(&u) - reference).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn loss_integral_balances_norm() {
        // d/dt ‖ψ‖² = −ψ†Γψ, so W = 1 − U†U when Γ carries all the damping.
        let (a, rates) = sample(12);
        let (u, ws) = expm_with_loss(&a, 7.0, &[&rates]);
        let balance = dense(&ws[0]) + dense(&u.adjoint().mul(&u));
        let err = (balance - DMatrix::identity(12, 12)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn matvec_and_quad() {
        let (a, _) = sample(5);
        let v = DVector::from_fn(5, |i, _| C64::new(i as f64, 1.0));
        let reference = dense(&a) * &v;
        assert!((a.matvec(&v) - &reference).norm() < 1e-13);
        assert!((a.quad(&v) - v.dotc(&reference).re).abs() < 1e-12);
    }
}
