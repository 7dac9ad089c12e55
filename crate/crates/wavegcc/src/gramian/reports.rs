use super::eigen::{min_eig, EigenOptions, Eigenpair};
use super::hum::{hum_control, HumOptions};
use super::matrix::{assemble_gramian, GramianApply, GramianOperator, DENSE_LIMIT};
use super::observation::Observation;
use crate::control_times::{geodesic_average, k_of_t};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, PhasePoint};
use crate::regions::ObservationFunction;
use crate::spectral::{gaussian_beam, CauchyPair, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

/// Smallest eigenvalue with its provenance: a converged eigenpair, or the best
/// Ritz value (an upper bound for the minimum) when the budget ran out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinEigSummary {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn summarize(r: Result<Eigenpair>) -> Result<(MinEigSummary, Vec<C64>)> {
    match r {
        Ok(p) => Ok((
            MinEigSummary { value: p.value, residual: p.residual, iterations: p.iterations, converged: true },
            p.vector,
        )),
        Err(Error::Eigensolver { iterations, value, residual, vector }) => {
            Ok((MinEigSummary { value, residual, iterations, converged: false }, vector))
        }
        Err(e) => Err(e),
    }
}

/// Dense Gramian when it fits, matrix-free operator otherwise.
pub fn gramian_for(obs: Arc<Observation>, t: f64) -> Result<Box<dyn GramianApply>> {
    if 2 * obs.len() <= DENSE_LIMIT {
        Ok(Box::new(assemble_gramian(&obs, t)?))
    } else {
        Ok(Box::new(GramianOperator::new(obs, t)?))
    }
}

/// Split vector carrying the `H^s`-normalized beam at `sigma(rho)` in `v_+`,
/// so that the solution concentrates along `phi_t(rho)`.
pub fn beam_split_vector(obs: &Observation, rho: &PhasePoint, k: f64) -> Result<Vec<C64>> {
    let beam = gaussian_beam(&obs.basis, &obs.grid, &rho.reflect(), k, obs.s)?;
    let mut x: Vec<C64> = beam.iter().zip(obs.mu()).map(|(a, m)| a / m).collect();
    x.extend(std::iter::repeat_n(C64::new(0.0, 0.0), obs.len()));
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub nx: usize,
    pub na: usize,
    pub beam_k: f64,
    /// Fixed beam tolerance; `None` uses 1.5 times the measured beam error.
    pub tol_beam: Option<f64>,
    pub eig: EigenOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservabilityReport {
    pub horizon: f64,
    pub k_max: usize,
    pub s: f64,
    pub k_of_t: f64,
    pub minimizer: [f64; 4],
    pub beam_k: f64,
    pub beam_average: f64,
    pub beam_rayleigh: f64,
    pub beam_relative_error: f64,
    pub lambda_min: MinEigSummary,
    pub c_obs_discrete: f64,
    pub tol_beam: f64,
    pub lower_bound_check: bool,
}

/// Smallest Gramian eigenvalue against `K(T)`, with the beam Rayleigh quotient
/// at the minimizing ray. Lanczos starts from the beam, so the reported value
/// never exceeds the Rayleigh quotient.
pub fn observability_report(
    m: &Manifold,
    b: &ObservationFunction,
    obs: Arc<Observation>,
    t: f64,
    opts: &ReportOptions,
) -> Result<ObservabilityReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {t}")));
    }
    let km = k_of_t(m, b, t, opts.nx, opts.na)?;
    let rho = km.minimizer;
    let beam_average = geodesic_average(m, b, &rho, t)?;
    let g = gramian_for(obs.clone(), t)?;
    let x = beam_split_vector(&obs, &rho, opts.beam_k)?;
    let beam_rayleigh = g.quadratic(&x);
    let (lambda_min, _) = summarize(min_eig(g.as_ref(), None, Some(&x), &opts.eig))?;
    let err = (beam_rayleigh - beam_average).abs();
    let tol_beam = opts.tol_beam.unwrap_or(1.5 * err);
    Ok(ObservabilityReport {
        horizon: t,
        k_max: obs.basis.k_max,
        s: obs.s,
        k_of_t: km.value,
        minimizer: [rho.x[0], rho.x[1], rho.xi[0], rho.xi[1]],
        beam_k: opts.beam_k,
        beam_average,
        beam_rayleigh,
        beam_relative_error: if beam_average > 0.0 { err / beam_average } else { f64::INFINITY },
        lambda_min,
        c_obs_discrete: 1.0 / lambda_min.value,
        tol_beam,
        lower_bound_check: lambda_min.value <= km.value + tol_beam,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellReport {
    pub kappa: f64,
    pub lambda_min: MinEigSummary,
    pub ratio: f64,
    /// Smallest `C0` with `<G V, V> >= K E_s - C0 E_{s-1/2}` on the sampled
    /// shell states.
    pub c0_empirical: f64,
}

/// Smallest eigenvalue on the shell `kappa_k > kappa` relative to `K(T)`,
/// with an empirical deficit constant from `samples` random shell states.
pub fn shell_observability(
    g: &dyn GramianApply,
    k_of_t: f64,
    kappa: f64,
    samples: usize,
    seed: u64,
    eig: &EigenOptions,
) -> Result<ShellReport> {
    if !(k_of_t > 0.0) {
        return Err(Error::InvalidInput("shell observability needs K(T) > 0".into()));
    }
    let basis = g.basis();
    let n = basis.len();
    let idx = super::matrix::shell_indices(basis, Some(kappa));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c0 = 0.0f64;
    let mut start = vec![C64::new(0.0, 0.0); 2 * n];
    for _ in 0..samples {
        let mut y = vec![C64::new(0.0, 0.0); 2 * n];
        for &i in &idx {
            y[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let es: f64 = y.iter().map(C64::norm_sqr).sum();
        let eh: f64 = y.iter().enumerate().map(|(i, v)| v.norm_sqr() / basis.lambda[i % n]).sum();
        let deficit = k_of_t * es - g.quadratic(&y);
        c0 = c0.max(deficit / eh);
        start.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
    }
    let start = if samples > 0 { Some(start.as_slice()) } else { None };
    let (lambda_min, _) = summarize(min_eig(g, Some(kappa), start, eig))?;
    Ok(ShellReport { kappa, lambda_min, ratio: lambda_min.value / k_of_t, c0_empirical: c0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellScan {
    pub levels: Vec<ShellReport>,
    /// Index of the first level whose ratio moved by less than 5% from the
    /// previous level.
    pub stabilized: Option<usize>,
    pub nondecreasing: bool,
}

pub fn shell_scan(
    g: &dyn GramianApply,
    k_of_t: f64,
    kappas: &[f64],
    samples: usize,
    seed: u64,
    eig: &EigenOptions,
) -> Result<ShellScan> {
    let levels =
        kappas.iter().map(|&k| shell_observability(g, k_of_t, k, samples, seed, eig)).collect::<Result<Vec<_>>>()?;
    let stabilized = (1..levels.len()).find(|&i| {
        let (a, b) = (levels[i - 1].ratio, levels[i].ratio);
        (b - a).abs() <= 0.05 * a.abs()
    });
    let nondecreasing = levels.windows(2).all(|w| {
        let slack = w[0].lambda_min.residual.max(w[1].lambda_min.residual) + 1e-10 * w[0].lambda_min.value.abs();
        w[1].lambda_min.value >= w[0].lambda_min.value - slack
    });
    Ok(ShellScan { levels, stabilized, nondecreasing })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub horizon: f64,
    pub k_of_t: f64,
    pub lambda_min: f64,
    pub c_obs_discrete: f64,
    pub hum_cost: f64,
    pub tol: f64,
    pub bound_holds: bool,
    pub log_c_obs: f64,
    pub inverse_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostScan {
    pub rows: Vec<ScanRow>,
    pub monotone: bool,
    pub all_bounds: bool,
}

/// For each horizon: `K(T)`, the smallest Gramian eigenvalue, the discrete
/// observability constant and the HUM cost of steering `data` to rest.
pub fn cost_scan(
    m: &Manifold,
    b: &ObservationFunction,
    obs: Arc<Observation>,
    horizons: &[f64],
    data: &CauchyPair,
    opts: &ReportOptions,
    hum: &HumOptions,
) -> Result<CostScan> {
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("horizons must be increasing".into()));
    }
    let mut rows = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let rep = observability_report(m, b, obs.clone(), t, opts)?;
        let g = gramian_for(obs.clone(), t)?;
        let cost = hum_control(g.as_ref(), &obs, data, hum)?.control_cost;
        rows.push(ScanRow {
            horizon: t,
            k_of_t: rep.k_of_t,
            lambda_min: rep.lambda_min.value,
            c_obs_discrete: rep.c_obs_discrete,
            hum_cost: cost,
            tol: rep.tol_beam,
            bound_holds: rep.lower_bound_check,
            log_c_obs: rep.c_obs_discrete.ln(),
            inverse_k: 1.0 / rep.k_of_t,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].lambda_min >= w[0].lambda_min - 1e-10 * w[1].horizon);
    let all_bounds = rows.iter().all(|r| r.bound_holds);
    Ok(CostScan { rows, monotone, all_bounds })
}
