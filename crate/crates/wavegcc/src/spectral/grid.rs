//! Periodic collocation grid and 2-D FFTs.

use super::SpectralBasis;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Uniform `n x n` grid on the torus `[0, L1) x [0, L2)`, values stored with
/// the `x1` index major.
#[derive(Clone)]
pub struct Collocation {
    pub n: usize,
    pub periods: [f64; 2],
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Collocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Collocation").field("n", &self.n).field("periods", &self.periods).finish()
    }
}

impl Collocation {
    pub fn new(n: usize, periods: [f64; 2]) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, periods, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn area(&self) -> f64 {
        self.periods[0] * self.periods[1]
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.periods[0] * i as f64 / self.n as f64, self.periods[1] * j as f64 / self.n as f64]
    }

    /// Signed frequency of grid index `i`.
    pub fn freq(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(f(self.point(i, j)));
            }
        }
        out
    }

    fn transpose(&self, a: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                a.swap(i * n + j, j * n + i);
            }
        }
    }

    fn fft2(&self, a: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(a);
        self.transpose(a);
        plan.process(a);
        self.transpose(a);
    }

    /// Grid values of `sum_m c_m e_m` from a full `n x n` coefficient array.
    pub fn full_to_values(&self, mut full: Vec<Complex64>) -> Vec<Complex64> {
        self.fft2(&mut full, &self.inv);
        let s = 1.0 / self.area().sqrt();
        full.iter_mut().for_each(|v| *v *= s);
        full
    }

    /// Full `n x n` array of coefficients against the orthonormal `e_m`.
    pub fn values_to_full(&self, mut values: Vec<Complex64>) -> Vec<Complex64> {
        self.fft2(&mut values, &self.fwd);
        let s = self.area().sqrt() / (self.n * self.n) as f64;
        values.iter_mut().for_each(|v| *v *= s);
        values
    }

    fn slot(&self, k: [i32; 2]) -> usize {
        let n = self.n as i64;
        let i = (k[0] as i64).rem_euclid(n) as usize;
        let j = (k[1] as i64).rem_euclid(n) as usize;
        i * self.n + j
    }

    /// Embeds band coefficients into a full grid array.
    pub fn embed(&self, basis: &SpectralBasis, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for (idx, k) in basis.modes.iter().enumerate() {
            full[self.slot(*k)] = coeffs[idx];
        }
        full
    }

    /// Restricts a full grid coefficient array to the band.
    pub fn restrict(&self, basis: &SpectralBasis, full: &[Complex64]) -> Vec<Complex64> {
        basis.modes.iter().map(|k| full[self.slot(*k)]).collect()
    }

    pub fn to_values(&self, basis: &SpectralBasis, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.full_to_values(self.embed(basis, coeffs))
    }

    pub fn to_band(&self, basis: &SpectralBasis, values: Vec<Complex64>) -> Vec<Complex64> {
        self.restrict(basis, &self.values_to_full(values))
    }

    /// `kappa_m = (2 pi)^2 (m1^2/L1^2 + m2^2/L2^2)` for every grid frequency.
    pub fn full_kappa(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let a = std::f64::consts::TAU * self.freq(i) as f64 / self.periods[0];
            for j in 0..n {
                let b = std::f64::consts::TAU * self.freq(j) as f64 / self.periods[1];
                out.push(a * a + b * b);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(65), 72);
        assert_eq!(smooth_size(257), 270);
        assert_eq!(smooth_size(513), 540);
        assert_eq!(smooth_size(1), 1);
    }

    #[test]
    fn roundtrip() {
        let basis = SpectralBasis::new(3, [1.0, 2.0]).unwrap();
        let g = Collocation::new(16, [1.0, 2.0]);
        let c: Vec<Complex64> =
            (0..basis.len()).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let back = g.to_band(&basis, g.to_values(&basis, &c));
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_values() {
        let basis = SpectralBasis::new(2, [1.0, 1.0]).unwrap();
        let g = Collocation::new(8, [1.0, 1.0]);
        let mut c = vec![Complex64::new(0.0, 0.0); basis.len()];
        c[basis.index([1, -2]).unwrap()] = Complex64::new(1.0, 0.0);
        let v = g.to_values(&basis, &c);
        let x = g.point(3, 5);
        let e = Complex64::from_polar(1.0, std::f64::consts::TAU * (x[0] - 2.0 * x[1]));
        assert!((v[3 * 8 + 5] - e).norm() < 1e-13);
    }
}
