use super::{Collocation, SpectralBasis, StateVector, C64};
use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::regions::cutoff;
use std::f64::consts::TAU;

fn min_image(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

/// Gaussian beam at `rho0 = (x0, eta)` with frequency scale `k`:
/// `exp(2 pi i k d.eta - 2 pi k |d|^2) psi(|d|)` with `d` the minimum-image
/// offset from `x0`, band-limited, mapped by `Lambda^{-s}` and normalized to
/// unit `H^s` norm.
pub fn gaussian_beam(
    basis: &SpectralBasis,
    grid: &Collocation,
    rho0: &PhasePoint,
    k: f64,
    s: f64,
) -> Result<StateVector> {
    crate::error::ensure_finite("beam", &[rho0.x[0], rho0.x[1], rho0.xi[0], rho0.xi[1], k, s])?;
    let eta = rho0.xi;
    if ((eta[0].hypot(eta[1])) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("beam direction must be a unit covector".into()));
    }
    if k < 4.0 {
        return Err(Error::InvalidInput(format!("beam scale k = {k} must be at least 4")));
    }
    let lmax = basis.periods[0].max(basis.periods[1]);
    if k * lmax > 0.5 * basis.k_max as f64 {
        return Err(Error::Resolution(format!("beam scale k = {k} needs K_max >= {}", (2.0 * k * lmax).ceil())));
    }
    if grid.n < basis.dealiased_size() {
        return Err(Error::Aliasing { grid: grid.n, required: basis.dealiased_size() });
    }
    let mut vals = Vec::with_capacity(grid.n * grid.n);
    for i in 0..grid.n {
        for j in 0..grid.n {
            let p = grid.point(i, j);
            let d = [min_image(p[0] - rho0.x[0], basis.periods[0]), min_image(p[1] - rho0.x[1], basis.periods[1])];
            let r = d[0].hypot(d[1]);
            let env = (-TAU * k * r * r).exp() * cutoff((r - 0.1) / 0.1);
            vals.push(C64::from_polar(env, TAU * k * (d[0] * eta[0] + d[1] * eta[1])));
        }
    }
    let band = grid.to_band(basis, vals);
    let mut w = basis.apply_lambda_s(&band, -s);
    let norm = basis.norm_sq(&w, s).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Construction("beam vanished after truncation".into()));
    }
    w.iter_mut().for_each(|c| *c /= norm);
    Ok(w)
}
