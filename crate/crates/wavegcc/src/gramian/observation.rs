use crate::error::{Error, Result};
use crate::geometry::Manifold;
use crate::regions::ObservationFunction;
use crate::spectral::{smooth_size, Collocation, SpectralBasis, C64};

/// Largest collocation size tried when resolving `b`.
pub const MAX_GRID: usize = 2048;

/// Default bound on the relative spectral tail of `b^2` beyond the
/// frequencies that alias into band products.
pub const DEFAULT_TAIL_TOL: f64 = 1e-7;

/// The observation quadratic form `q(v) = ||b v||_{H^s}^2` on the truncated
/// band, written in `H^s`-orthonormal coordinates `y = Lambda^s v`:
/// `Q y = Lambda^{-s} P_K (b Lambda^{2s} (b Lambda^{-s} y))`. For `s != 0` the
/// product and the outer `Lambda^{2s}` act on the full collocation grid.
#[derive(Debug, Clone)]
pub struct Observation {
    pub basis: SpectralBasis,
    pub grid: Collocation,
    pub s: f64,
    pub description: String,
    pub fingerprint: u64,
    /// Measured relative tail of the `b^2` spectrum.
    pub tail: f64,
    b: Vec<f64>,
    b2: Vec<f64>,
    mu: Vec<f64>,
    full_weight: Vec<f64>,
}

/// Relative size of the `b^2` spectrum at sup-frequencies `>= cut`, read off a
/// grid of size `nf`.
fn spectral_tail(values_sq: &[f64], grid: &Collocation, cut: i64) -> f64 {
    let full = grid.values_to_full(values_sq.iter().map(|v| C64::new(*v, 0.0)).collect());
    let n = grid.n;
    let mut head = 0.0f64;
    let mut tail = 0.0f64;
    for i in 0..n {
        let fi = grid.freq(i).abs();
        for j in 0..n {
            let f = fi.max(grid.freq(j).abs());
            let a = full[i * n + j].norm();
            if f >= cut {
                tail += a;
            } else {
                head = head.max(a);
            }
        }
    }
    if head > 0.0 {
        tail / head
    } else {
        0.0
    }
}

impl Observation {
    /// Builds the form for `b` on the band `|k|_inf <= k_max`.
    ///
    /// For `s = 0` the form is `P_K b^2 P_K`, which only involves the Fourier
    /// coefficients of `b^2` up to `2 k_max`; they are computed once on a fine
    /// grid whose size doubles until the spectral tail is below `tail_tol`.
    /// For `s != 0` products are taken on a collocation grid grown until the
    /// aliasing tail of `b^2` is below `tail_tol`.
    pub fn new(m: &Manifold, b: &ObservationFunction, k_max: usize, s: f64, tail_tol: f64) -> Result<Self> {
        let periods = match m {
            Manifold::FlatTorus { periods } => *periods,
            _ => return Err(Error::InvalidInput(format!("wave solvers need a flat torus, got {}", m.name()))),
        };
        b.validate_for(m)?;
        crate::error::ensure_finite("Sobolev index", &[s, tail_tol])?;
        let basis = SpectralBasis::new(k_max, periods)?;
        let eval = |x: [f64; 2]| b.evaluate(m, x);
        let base = smooth_size(basis.dealiased_size());
        if s == 0.0 {
            let mut nf = smooth_size((2 * base).max(128));
            loop {
                let fine = Collocation::new(nf, periods);
                let sq: Vec<f64> = fine.sample(eval).iter().map(|v| v * v).collect();
                let tail = spectral_tail(&sq, &fine, (3 * nf / 8) as i64);
                if tail <= tail_tol {
                    let full = fine.values_to_full(sq.into_iter().map(|v| C64::new(v, 0.0)).collect());
                    let wide = SpectralBasis::new(2 * k_max, periods)?;
                    let coeffs = fine.restrict(&wide, &full);
                    let grid = Collocation::new(base, periods);
                    let b2: Vec<f64> = grid.to_values(&wide, &coeffs).iter().map(|c| c.re).collect();
                    let values = grid.sample(eval);
                    let mut obs = Self::assemble(basis, grid, values, s, b.describe(), b.fingerprint(), tail);
                    obs.b2 = b2;
                    return Ok(obs);
                }
                if nf >= MAX_GRID {
                    return Err(Error::Resolution(format!(
                        "observation function needs a grid above {MAX_GRID} (tail {tail:.2e})"
                    )));
                }
                nf = (2 * nf).min(MAX_GRID);
            }
        }
        let mut n = base;
        loop {
            let cut = (n - 2 * k_max) as i64;
            let fine = Collocation::new(smooth_size(2 * n + 2), periods);
            let sq: Vec<f64> = fine.sample(eval).iter().map(|v| v * v).collect();
            let tail = spectral_tail(&sq, &fine, cut);
            if tail <= tail_tol {
                let grid = Collocation::new(n, periods);
                let values = grid.sample(eval);
                return Ok(Self::assemble(basis, grid, values, s, b.describe(), b.fingerprint(), tail));
            }
            if n >= MAX_GRID / 2 {
                return Err(Error::Resolution(format!(
                    "observation function needs a collocation grid above {} (tail {tail:.2e})",
                    MAX_GRID / 2
                )));
            }
            n = smooth_size((n * 5 / 4).max(n + 1)).min(MAX_GRID / 2);
        }
    }

    /// Uses given grid values of `b` without a resolution check.
    pub fn from_values(
        basis: SpectralBasis,
        grid: Collocation,
        values: Vec<f64>,
        s: f64,
        description: String,
    ) -> Result<Self> {
        if grid.n < basis.dealiased_size() {
            return Err(Error::Aliasing { grid: grid.n, required: basis.dealiased_size() });
        }
        if values.len() != grid.n * grid.n {
            return Err(Error::InvalidInput("observation values do not match the grid".into()));
        }
        crate::error::ensure_finite("observation values", &values)?;
        let fp = values.iter().fold(0xcbf29ce484222325u64, |h, v| (h ^ v.to_bits()).wrapping_mul(0x100000001b3));
        Ok(Self::assemble(basis, grid, values, s, description, fp, f64::NAN))
    }

    fn assemble(
        basis: SpectralBasis,
        grid: Collocation,
        b: Vec<f64>,
        s: f64,
        description: String,
        fingerprint: u64,
        tail: f64,
    ) -> Self {
        let b2 = b.iter().map(|v| v * v).collect();
        let mu = basis.kappa.iter().map(|k| (k + 1.0).powf(-0.5 * s)).collect();
        let full_weight =
            if s == 0.0 { Vec::new() } else { grid.full_kappa().iter().map(|k| (k + 1.0).powf(s)).collect() };
        Self { basis, grid, s, description, fingerprint, tail, b, b2, mu, full_weight }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    /// `lambda_k^{-s}`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `Q y`.
    pub fn apply(&self, y: &[C64]) -> Vec<C64> {
        let basis = &self.basis;
        if self.s == 0.0 {
            let mut vals = self.grid.to_values(basis, y);
            vals.iter_mut().zip(&self.b2).for_each(|(v, w)| *v *= w);
            return self.grid.to_band(basis, vals);
        }
        let u: Vec<C64> = y.iter().zip(&self.mu).map(|(a, m)| a * m).collect();
        let mut vals = self.grid.to_values(basis, &u);
        vals.iter_mut().zip(&self.b).for_each(|(v, w)| *v *= w);
        let mut full = self.grid.values_to_full(vals);
        full.iter_mut().zip(&self.full_weight).for_each(|(v, w)| *v *= w);
        let mut vals = self.grid.full_to_values(full);
        vals.iter_mut().zip(&self.b).for_each(|(v, w)| *v *= w);
        let mut out = self.grid.to_band(basis, vals);
        out.iter_mut().zip(&self.mu).for_each(|(v, m)| *v *= m);
        out
    }

    /// `q(Lambda^{-s} y) = <Q y, y>` evaluated directly on the grid.
    pub fn form(&self, y: &[C64]) -> f64 {
        if self.s == 0.0 {
            return self.apply(y).iter().zip(y).map(|(a, b)| (a * b.conj()).re).sum();
        }
        let u: Vec<C64> = y.iter().zip(&self.mu).map(|(a, m)| a * m).collect();
        let mut vals = self.grid.to_values(&self.basis, &u);
        vals.iter_mut().zip(&self.b).for_each(|(v, w)| *v *= w);
        let full = self.grid.values_to_full(vals);
        if self.s == 0.0 {
            full.iter().map(C64::norm_sqr).sum()
        } else {
            full.iter().zip(&self.full_weight).map(|(a, w)| w * a.norm_sqr()).sum()
        }
    }

    /// Diagonal entries `Q_kk`.
    pub fn diagonal(&self) -> Vec<f64> {
        if self.s == 0.0 {
            let m = self.b2.iter().sum::<f64>() / self.b2.len() as f64;
            return vec![m; self.len()];
        }
        let n = self.grid.n;
        let bhat = self.grid.values_to_full(self.b.iter().map(|v| C64::new(*v, 0.0)).collect());
        let cut = bhat.iter().map(|c| c.norm()).fold(0.0, f64::max) * 1e-13;
        let support: Vec<(i64, i64, f64)> = (0..n * n)
            .filter(|&p| bhat[p].norm() > cut)
            .map(|p| (self.grid.freq(p / n), self.grid.freq(p % n), bhat[p].norm_sqr() / self.grid.area()))
            .collect();
        let nn = n as i64;
        self.basis
            .modes
            .iter()
            .zip(&self.mu)
            .map(|(k, mu)| {
                let acc: f64 = support
                    .iter()
                    .map(|(j1, j2, w)| {
                        let a = (k[0] as i64 + j1).rem_euclid(nn) as usize;
                        let b = (k[1] as i64 + j2).rem_euclid(nn) as usize;
                        w * self.full_weight[a * n + b]
                    })
                    .sum();
                acc * mu * mu
            })
            .collect()
    }

    /// Dense `Q`, column major.
    pub fn dense(&self) -> Vec<C64> {
        let n = self.len();
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            let col = self.apply(&e);
            out[j * n..(j + 1) * n].copy_from_slice(&col);
            e[j] = C64::new(0.0, 0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::Component;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk() -> ObservationFunction {
        ObservationFunction::single(Component::Hole { center: [0.5, 0.5], r0: 0.25, r1: 0.35 })
    }

    fn random(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn form_matches_apply_and_is_hermitian() {
        let m = Manifold::unit_torus();
        for s in [0.0, 1.0, 0.5] {
            let obs = Observation::new(&m, &disk(), 4, s, 1e-6).unwrap();
            let x = random(obs.len(), 1);
            let y = random(obs.len(), 2);
            let qx = obs.apply(&x);
            let qy = obs.apply(&y);
            let a: C64 = qx.iter().zip(&y).map(|(p, q)| p * q.conj()).sum();
            let b: C64 = x.iter().zip(&qy).map(|(p, q)| p * q.conj()).sum();
            assert!((a - b).norm() < 1e-12 * a.norm());
            let f: C64 = qx.iter().zip(&x).map(|(p, q)| p * q.conj()).sum();
            assert!((f.re - obs.form(&x)).abs() < 1e-12 * f.re);
            assert!(f.im.abs() < 1e-12 * f.re);
            let d = obs.diagonal();
            let dense = obs.dense();
            for i in 0..obs.len() {
                assert!((dense[i * obs.len() + i].re - d[i]).abs() < 1e-11, "s={s} {i}");
            }
        }
    }

    #[test]
    fn constant_observation_is_identity() {
        let m = Manifold::unit_torus();
        for s in [0.0, 1.0] {
            let obs = Observation::new(&m, &ObservationFunction::everywhere(1.0), 3, s, 1e-10).unwrap();
            let x = random(obs.len(), 3);
            for (a, b) in obs.apply(&x).iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn resolution_grows_grid_or_fails() {
        let m = Manifold::unit_torus();
        let obs = Observation::new(&m, &disk(), 4, 0.0, 1e-6).unwrap();
        assert!(obs.grid.n >= 17 && obs.tail <= 1e-6);
        let sharp = ObservationFunction::single(Component::Hole { center: [0.5, 0.5], r0: 0.25, r1: 0.2501 });
        assert!(matches!(Observation::new(&m, &sharp, 4, 0.0, 1e-10), Err(Error::Resolution(_))));
        assert!(Observation::new(&Manifold::round_sphere(), &disk(), 4, 0.0, 1e-6).is_err());
    }
}
