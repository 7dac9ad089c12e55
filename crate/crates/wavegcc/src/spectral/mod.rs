//! Truncated Fourier calculus on the flat torus: Sobolev scales, the wave
//! splitting, exact Klein-Gordon propagation, time steppers, energies,
//! Gaussian beams and frequency shells.
//!
//! Fields are coefficient vectors against the orthonormal basis
//! `e_k(x) = exp(2 pi i (k1 x1 / L1 + k2 x2 / L2)) / sqrt(L1 L2)`,
//! `|k|_inf <= K_max`, with `-Laplace e_k = kappa_k e_k` and
//! `Lambda = (1 - Laplace)^{1/2}`, `lambda_k = sqrt(kappa_k + 1)`.

mod beam;
mod grid;
mod solvers;

pub use beam::gaussian_beam;
pub use grid::{smooth_size, Collocation};
pub use solvers::{potential_growth_rate, solve_damped, solve_potential, TimeSeries};

use crate::control_times::Sign;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

pub type C64 = Complex64;

/// Scalar state: coefficients against `e_k`.
pub type StateVector = Vec<C64>;

/// Cauchy data `(v0, v1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyPair {
    pub v0: StateVector,
    pub v1: StateVector,
}

/// Split data `(v_plus, v_minus)` with `v(t) = e^{it Lambda} v_plus + e^{-it Lambda} v_minus`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub plus: StateVector,
    pub minus: StateVector,
}

impl CauchyPair {
    pub fn zeros(n: usize) -> Self {
        Self { v0: vec![C64::new(0.0, 0.0); n], v1: vec![C64::new(0.0, 0.0); n] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub k_max: usize,
    pub periods: [f64; 2],
    pub modes: Vec<[i32; 2]>,
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(k_max: usize, periods: [f64; 2]) -> Result<Self> {
        crate::error::ensure_finite("periods", &periods)?;
        if periods[0] <= 0.0 || periods[1] <= 0.0 {
            return Err(Error::InvalidInput("periods must be positive".into()));
        }
        if k_max > 4096 {
            return Err(Error::InvalidInput(format!("K_max = {k_max} is out of range")));
        }
        let k = k_max as i32;
        let mut modes = Vec::with_capacity((2 * k_max + 1).pow(2));
        for k1 in -k..=k {
            for k2 in -k..=k {
                modes.push([k1, k2]);
            }
        }
        let kappa: Vec<f64> = modes
            .iter()
            .map(|m| {
                let a = TAU * m[0] as f64 / periods[0];
                let b = TAU * m[1] as f64 / periods[1];
                a * a + b * b
            })
            .collect();
        let lambda = kappa.iter().map(|k| (k + 1.0).sqrt()).collect();
        Ok(Self { k_max, periods, modes, kappa, lambda })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index(&self, k: [i32; 2]) -> Option<usize> {
        let km = self.k_max as i32;
        if k[0].abs() > km || k[1].abs() > km {
            return None;
        }
        let w = 2 * km + 1;
        Some(((k[0] + km) * w + (k[1] + km)) as usize)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(1.0, f64::max)
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa.iter().copied().fold(0.0, f64::max)
    }

    /// Minimal dealiased collocation size `4 K_max + 1`.
    pub fn dealiased_size(&self) -> usize {
        4 * self.k_max + 1
    }

    /// Collocation grid of 2-3-5-smooth size at least `max(4 K_max + 1, min_n)`.
    pub fn collocation(&self, min_n: usize) -> Collocation {
        Collocation::new(smooth_size(self.dealiased_size().max(min_n)), self.periods)
    }

    pub fn zeros(&self) -> StateVector {
        vec![C64::new(0.0, 0.0); self.len()]
    }

    fn check(&self, v: &[C64]) {
        assert_eq!(v.len(), self.len(), "state vector does not match the basis");
    }

    /// `Lambda^s v`.
    pub fn apply_lambda_s(&self, v: &[C64], s: f64) -> StateVector {
        self.check(v);
        v.iter().zip(&self.kappa).map(|(c, k)| c * (k + 1.0).powf(0.5 * s)).collect()
    }

    /// `||v||_{H^s}^2 = sum (kappa_k + 1)^s |c_k|^2`.
    pub fn norm_sq(&self, v: &[C64], s: f64) -> f64 {
        self.check(v);
        v.iter().zip(&self.kappa).map(|(c, k)| (k + 1.0).powf(s) * c.norm_sqr()).sum()
    }

    /// `(v, w)_{H^s}`.
    pub fn inner(&self, v: &[C64], w: &[C64], s: f64) -> C64 {
        v.iter().zip(w).zip(&self.kappa).map(|((a, b), k)| a * b.conj() * (k + 1.0).powf(s)).sum()
    }

    /// `v_+ = (v0 - i Lambda^{-1} v1)/2`, `v_- = (v0 + i Lambda^{-1} v1)/2`.
    pub fn split_sigma(&self, pair: &CauchyPair) -> SplitPair {
        self.check(&pair.v0);
        self.check(&pair.v1);
        let i = C64::new(0.0, 1.0);
        let mut plus = Vec::with_capacity(self.len());
        let mut minus = Vec::with_capacity(self.len());
        for ((a, b), l) in pair.v0.iter().zip(&pair.v1).zip(&self.lambda) {
            let w = i * b / l;
            plus.push(0.5 * (a - w));
            minus.push(0.5 * (a + w));
        }
        SplitPair { plus, minus }
    }

    /// `(v0, v1) = (v_+ + v_-, i Lambda (v_+ - v_-))`.
    pub fn unsplit_sigma(&self, split: &SplitPair) -> CauchyPair {
        let i = C64::new(0.0, 1.0);
        let v0 = split.plus.iter().zip(&split.minus).map(|(p, m)| p + m).collect();
        let v1 = split.plus.iter().zip(&split.minus).zip(&self.lambda).map(|((p, m), l)| i * l * (p - m)).collect();
        CauchyPair { v0, v1 }
    }

    /// `e^{+- i t Lambda} v`.
    pub fn propagate_free(&self, v: &[C64], t: f64, sign: Sign) -> StateVector {
        self.check(v);
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        v.iter().zip(&self.lambda).map(|(c, l)| c * C64::from_polar(1.0, s * t * l)).collect()
    }

    /// Cauchy data at time `t` of the free Klein-Gordon solution.
    pub fn evolve_free(&self, pair: &CauchyPair, t: f64) -> CauchyPair {
        let sp = self.split_sigma(pair);
        self.unsplit_sigma(&SplitPair {
            plus: self.propagate_free(&sp.plus, t, Sign::Plus),
            minus: self.propagate_free(&sp.minus, t, Sign::Minus),
        })
    }

    /// Product with a real grid function, truncated to the band.
    pub fn multiply_function(&self, grid: &Collocation, v: &[C64], f: &[f64]) -> Result<StateVector> {
        self.check(v);
        if grid.n < self.dealiased_size() {
            return Err(Error::Aliasing { grid: grid.n, required: self.dealiased_size() });
        }
        if f.len() != grid.n * grid.n {
            return Err(Error::InvalidInput("grid function does not match the collocation grid".into()));
        }
        let mut vals = grid.to_values(self, v);
        vals.iter_mut().zip(f).for_each(|(a, b)| *a *= b);
        Ok(grid.to_band(self, vals))
    }

    /// `E_s = (||v0||_{H^s}^2 + ||v1||_{H^{s-1}}^2) / 2`.
    pub fn energy(&self, pair: &CauchyPair, s: f64) -> f64 {
        0.5 * (self.norm_sq(&pair.v0, s) + self.norm_sq(&pair.v1, s - 1.0))
    }

    /// `E_c = (||v1||^2 + ||grad v0||^2 + int c |v0|^2) / 2` with the potential
    /// term evaluated on the collocation grid.
    pub fn energy_c(&self, grid: &Collocation, pair: &CauchyPair, c: &[f64]) -> f64 {
        let kinetic: f64 = pair.v1.iter().map(C64::norm_sqr).sum();
        let grad: f64 = pair.v0.iter().zip(&self.kappa).map(|(a, k)| k * a.norm_sqr()).sum();
        let vals = grid.to_values(self, &pair.v0);
        let w = grid.area() / (grid.n * grid.n) as f64;
        let pot: f64 = vals.iter().zip(c).map(|(u, c)| c * u.norm_sqr()).sum::<f64>() * w;
        0.5 * (kinetic + grad + pot)
    }

    /// Zeroes every mode with `kappa_k <= kappa`.
    pub fn shell_project(&self, pair: &CauchyPair, kappa: f64) -> CauchyPair {
        let keep = |v: &[C64]| -> StateVector {
            v.iter().zip(&self.kappa).map(|(c, k)| if *k > kappa { *c } else { C64::new(0.0, 0.0) }).collect()
        };
        CauchyPair { v0: keep(&pair.v0), v1: keep(&pair.v1) }
    }

    /// Low-frequency part `Pi_kappa`: the modes with `kappa_k <= kappa`.
    pub fn low_project(&self, pair: &CauchyPair, kappa: f64) -> CauchyPair {
        let keep = |v: &[C64]| -> StateVector {
            v.iter().zip(&self.kappa).map(|(c, k)| if *k <= kappa { *c } else { C64::new(0.0, 0.0) }).collect()
        };
        CauchyPair { v0: keep(&pair.v0), v1: keep(&pair.v1) }
    }

    pub fn shell_member(&self, pair: &CauchyPair, kappa: f64) -> bool {
        self.kappa
            .iter()
            .enumerate()
            .filter(|(_, k)| **k <= kappa)
            .all(|(i, _)| pair.v0[i] == C64::new(0.0, 0.0) && pair.v1[i] == C64::new(0.0, 0.0))
    }
}
