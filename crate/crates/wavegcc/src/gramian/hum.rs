use super::matrix::GramianApply;
use super::observation::Observation;
use crate::error::{Error, Result};
use crate::numerics::quadrature::{gauss_legendre_interval, oscillatory_node_count};
use crate::spectral::{CauchyPair, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumOptions {
    /// Relative residual target for conjugate gradient.
    pub tol: f64,
    /// Iteration cap; `None` means ten times the dimension.
    pub max_iter: Option<usize>,
    /// Samples of the control norm along `[0, T]`.
    pub samples: usize,
}

impl Default for HumOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: None, samples: 65 }
    }
}

#[derive(Debug, Clone)]
pub struct HumResult {
    /// Adjoint data in split `H^s`-orthonormal coordinates.
    pub adjoint: Vec<C64>,
    pub rhs: Vec<C64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `int_0^T ||b phi(t)||_{H^s}^2 dt`.
    pub control_cost: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// `(t, ||f(t)||_{L^2})`.
    pub control_norms: Vec<[f64; 2]>,
}

/// Right-hand side `D` of `G X = D` for steering `(u0, u1)` to rest.
pub fn hum_rhs(obs: &Observation, data: &CauchyPair) -> Vec<C64> {
    let basis = &obs.basis;
    let n = basis.len();
    let i = C64::new(0.0, 1.0);
    let mut d = vec![C64::new(0.0, 0.0); 2 * n];
    for k in 0..n {
        let (a, c, l, mu) = (data.v0[k], data.v1[k], basis.lambda[k], obs.mu()[k]);
        d[k] = -mu * (i * l * a + c);
        d[n + k] = mu * (i * l * a - c);
    }
    d
}

/// Control `f(t) = P_K (b Lambda^{2s} (b phi(t)))` for adjoint data `x`.
pub fn control_at(obs: &Observation, x: &[C64], t: f64) -> StateVector {
    let basis = &obs.basis;
    let n = basis.len();
    let u: Vec<C64> = (0..n)
        .map(|k| {
            let p = C64::from_polar(1.0, basis.lambda[k] * t);
            x[k] * p + x[n + k] * p.conj()
        })
        .collect();
    let mut f = obs.apply(&u);
    f.iter_mut().zip(obs.mu()).for_each(|(v, m)| *v /= m);
    f
}

/// Final Cauchy data of `u_tt + Lambda^2 u = f` from `data`, by modewise
/// Duhamel integrals on Gauss-Legendre nodes.
pub fn controlled_final_state(obs: &Observation, x: &[C64], data: &CauchyPair, t: f64) -> CauchyPair {
    let basis = &obs.basis;
    let n = basis.len();
    let count = 2 * oscillatory_node_count(2.0 * basis.lambda_max(), t) + 17;
    let (nodes, weights) = gauss_legendre_interval(count, t);
    let j = super::node_sum(count, 2 * n, |i, acc| {
        let (s, w) = (nodes[i], weights[i]);
        let f = control_at(obs, x, s);
        for k in 0..n {
            let p = C64::from_polar(w, basis.lambda[k] * s);
            acc[k] += p.conj() * f[k];
            acc[n + k] += p * f[k];
        }
    });
    let sp = basis.split_sigma(data);
    let i = C64::new(0.0, 1.0);
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for k in 0..n {
        let l = basis.lambda[k];
        let p = C64::from_polar(1.0, l * t);
        plus.push(p * (sp.plus[k] - i / (2.0 * l) * j[k]));
        minus.push(p.conj() * (sp.minus[k] + i / (2.0 * l) * j[n + k]));
    }
    basis.unsplit_sigma(&crate::spectral::SplitPair { plus, minus })
}

/// Jacobi-preconditioned conjugate gradient for `G x = d`. The returned
/// estimate is the smallest Rayleigh quotient met along the search directions.
pub fn conjugate_gradient(
    g: &dyn GramianApply,
    d: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<C64>, usize, f64)> {
    let dim = d.len();
    let dn = d.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    let mut x = vec![C64::new(0.0, 0.0); dim];
    if dn == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let diag: Vec<f64> = g.diagonal().iter().map(|v| if *v > 0.0 { 1.0 / v } else { 1.0 }).collect();
    let mut r = d.to_vec();
    let mut z: Vec<C64> = r.iter().zip(&diag).map(|(a, w)| a * w).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| (a.conj() * b).re).sum();
    let mut lambda_est = f64::INFINITY;
    let mut res = 1.0;
    for it in 1..=max_iter {
        let ap = g.apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| (a.conj() * b).re).sum();
        let pp: f64 = p.iter().map(C64::norm_sqr).sum();
        lambda_est = lambda_est.min(pap / pp);
        if !(pap > 0.0) {
            return Err(Error::IllConditioned { iterations: it, residual: res, lambda_min_estimate: lambda_est });
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
        r.iter_mut().zip(&ap).for_each(|(a, b)| *a -= alpha * b);
        res = r.iter().map(C64::norm_sqr).sum::<f64>().sqrt() / dn;
        if res <= tol {
            return Ok((x, it, res));
        }
        z = r.iter().zip(&diag).map(|(a, w)| a * w).collect();
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| (a.conj() * b).re).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(a, b)| *a = b + beta * *a);
    }
    Err(Error::IllConditioned { iterations: max_iter, residual: res, lambda_min_estimate: lambda_est })
}

/// HUM control driving `data` to rest at time `T = g.horizon()`.
pub fn hum_control(g: &dyn GramianApply, obs: &Observation, data: &CauchyPair, opts: &HumOptions) -> Result<HumResult> {
    let n = obs.len();
    if data.v0.len() != n || data.v1.len() != n {
        return Err(Error::InvalidInput("control data does not match the basis".into()));
    }
    if g.dim() != 2 * n {
        return Err(Error::InvalidInput("Gramian does not match the observation".into()));
    }
    crate::error::ensure_finite(
        "control data",
        &data.v0.iter().chain(&data.v1).flat_map(|c| [c.re, c.im]).collect::<Vec<_>>(),
    )?;
    let t = g.horizon();
    let d = hum_rhs(obs, data);
    let max_iter = opts.max_iter.unwrap_or(10 * g.dim());
    let (x, iterations, relative_residual) = conjugate_gradient(g, &d, opts.tol, max_iter)?;
    let control_cost = x.iter().zip(&d).map(|(a, b)| (a.conj() * b).re).sum();
    let initial_energy = obs.basis.energy(data, 0.0);
    let (final_energy, control_norms) = if iterations == 0 {
        (initial_energy, (0..opts.samples).map(|j| [t * j as f64 / (opts.samples.max(2) - 1) as f64, 0.0]).collect())
    } else {
        let fin = controlled_final_state(obs, &x, data, t);
        let m = opts.samples.max(2);
        let norms = (0..m)
            .map(|j| {
                let s = t * j as f64 / (m - 1) as f64;
                [s, obs.basis.norm_sq(&control_at(obs, &x, s), 0.0).sqrt()]
            })
            .collect();
        (obs.basis.energy(&fin, 0.0), norms)
    };
    Ok(HumResult {
        adjoint: x,
        rhs: d,
        iterations,
        relative_residual,
        control_cost,
        initial_energy,
        final_energy,
        control_norms,
    })
}
