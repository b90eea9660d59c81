//! Fixed-step classical Runge–Kutta for autonomous linear systems.

use num_complex::Complex64 as C64;

/// Scratch space for [`Rk4::step`].
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advance `y` by `h` under `dy/dt = f(y)`, where `f(y, out)` writes into `out`.
    pub fn step<F>(&mut self, y: &mut [C64], h: f64, mut f: F)
    where
        F: FnMut(&[C64], &mut [C64]),
    {
        let n = y.len();
        debug_assert_eq!(n, self.k1.len());
        f(y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * h);
        }
        f(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k2[i] * (0.5 * h);
        }
        f(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        f(&self.tmp, &mut self.k4);
        let w = h / 6.0;
        for i in 0..n {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}

/// Number of equal substeps of length `≤ max_step` covering `interval`.
pub fn substeps(interval: f64, max_step: f64) -> usize {
    if !(max_step > 0.0) || !max_step.is_finite() {
        return 1;
    }
    ((interval / max_step).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase() {
        // dy/dt = -i w y
        let w = 2.0;
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut rk = Rk4::new(1);
        let h = 1e-3;
        for _ in 0..1000 {
            rk.step(&mut y, h, |y, out| out[0] = C64::new(0.0, -w) * y[0]);
        }
        let exact = C64::new(0.0, -w).exp();
        assert!((y[0] - exact).norm() < 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let run = |n: usize| {
            let mut y = vec![C64::new(1.0, 0.0)];
            let mut rk = Rk4::new(1);
            for _ in 0..n {
                rk.step(&mut y, 1.0 / n as f64, |y, out| out[0] = -y[0]);
            }
            (y[0].re - (-1.0f64).exp()).abs()
        };
        let ratio = run(20) / run(40);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn substep_count() {
        assert_eq!(substeps(1.0, 0.3), 4);
        assert_eq!(substeps(1.0, 2.0), 1);
        assert_eq!(substeps(1.0, f64::INFINITY), 1);
    }
}
