use super::eigen::{dense_hermitian_eigen, lanczos, EigenOptions, Extreme};
use super::matrix::interval_integral;
use super::observation::Observation;
use crate::control_times::Sign;
use crate::control_times::{minimize_over_cosphere, path_integral};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, PhasePoint, Point};
use crate::numerics::quadrature::{gauss_legendre_interval, oscillatory_node_count};
use crate::regions::ObservationFunction;
use crate::spectral::{gaussian_beam, solve_damped, SpectralBasis, SplitPair, C64};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EgorovResult {
    pub numeric: f64,
    pub transported: f64,
    pub error: f64,
}

fn torus_periods(m: &Manifold) -> Result<[f64; 2]> {
    match m {
        Manifold::FlatTorus { periods } => Ok(*periods),
        _ => Err(Error::InvalidInput(format!("wave solvers need a flat torus, got {}", m.name()))),
    }
}

/// `<e^{itL} M_a e^{-itL} beta, beta>` for the unit `L^2` beam at `rho0`,
/// compared with `a` at the transported base point `x0 + t eta`.
pub fn egorov_probe<A>(m: &Manifold, a: A, t: f64, rho0: &PhasePoint, k: f64, k_max: usize) -> Result<EgorovResult>
where
    A: Fn(Point) -> f64,
{
    let periods = torus_periods(m)?;
    crate::error::ensure_finite("time", &[t])?;
    let basis = SpectralBasis::new(k_max, periods)?;
    let grid = basis.collocation(0);
    let beam = gaussian_beam(&basis, &grid, rho0, k, 0.0)?;
    let w = basis.propagate_free(&beam, t, Sign::Minus);
    let av = grid.sample(&a);
    crate::error::ensure_finite("symbol", &av)?;
    let aw = basis.multiply_function(&grid, &w, &av)?;
    let numeric = basis.inner(&aw, &w, 0.0).re;
    let x = m.wrap([rho0.x[0] + t * rho0.xi[0], rho0.x[1] + t * rho0.xi[1]]);
    let transported = a(x);
    Ok(EgorovResult { numeric, transported, error: (numeric - transported).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingRow {
    pub k_max: usize,
    pub lambda_max: f64,
    /// `|| Lambda int_0^T e^{-itL} B e^{-itL} dt ||` on `H^s`.
    pub off_diagonal: f64,
    /// `|| Lambda int_0^T e^{-itL} B e^{itL} dt ||` on `H^s`.
    pub diagonal: f64,
}

/// Largest dimension for which the probe matrices are formed densely.
const SMOOTHING_DENSE: usize = 1200;

fn dense_norm(a: &[C64], n: usize) -> Result<f64> {
    let mut ata = vec![C64::new(0.0, 0.0); n * n];
    ata.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        for (i, e) in col.iter_mut().enumerate() {
            *e = (0..n).map(|r| a[i * n + r].conj() * a[j * n + r]).sum();
        }
    });
    let (vals, _) = dense_hermitian_eigen(&ata, n)?;
    Ok(vals[n - 1].max(0.0).sqrt())
}

/// Operator norms of the off-diagonal block `Lambda R_T` and of the diagonal
/// contrast, on `H^s`-orthonormal coordinates, for each truncation.
pub fn smoothing_probe(
    m: &Manifold,
    b: &ObservationFunction,
    t: f64,
    s: f64,
    k_list: &[usize],
    tail_tol: f64,
    opts: &EigenOptions,
) -> Result<Vec<SmoothingRow>> {
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("truncation list must be increasing".into()));
    }
    let mut rows = Vec::new();
    for &k in k_list {
        let obs = Observation::new(m, b, k, s, tail_tol)?;
        let n = obs.len();
        let lam = obs.basis.lambda.clone();
        let (off, diag) = if n <= SMOOTHING_DENSE {
            let q = obs.dense();
            let build = |sign: f64| -> Vec<C64> {
                let mut a = vec![C64::new(0.0, 0.0); n * n];
                for j in 0..n {
                    for i in 0..n {
                        a[j * n + i] = lam[i] * q[j * n + i] * interval_integral(-lam[i] + sign * lam[j], t);
                    }
                }
                a
            };
            (dense_norm(&build(-1.0), n)?, dense_norm(&build(1.0), n)?)
        } else {
            let count = oscillatory_node_count(2.0 * obs.basis.lambda_max(), t);
            let (nodes, weights) = gauss_legendre_interval(count, t);
            // A x = Lambda int e^{-i lam t} Q e^{i sign lam t} x dt; the adjoint
            // is int e^{-i sign lam t} Q e^{i lam t} Lambda y dt.
            let apply = |x: &[C64], sign: f64, adjoint: bool| -> Vec<C64> {
                let input: Vec<C64> =
                    if adjoint { x.iter().zip(&lam).map(|(a, l)| a * l).collect() } else { x.to_vec() };
                let (pin, pout) = if adjoint { (1.0, -sign) } else { (sign, -1.0) };
                let mut out = super::node_sum(nodes.len(), n, |i, acc| {
                    let (tt, w) = (nodes[i], weights[i]);
                    let u: Vec<C64> =
                        input.iter().zip(&lam).map(|(a, l)| a * C64::from_polar(1.0, pin * l * tt)).collect();
                    let q = obs.apply(&u);
                    acc.iter_mut().zip(q).zip(&lam).for_each(|((o, v), l)| *o += v * C64::from_polar(w, pout * l * tt));
                });
                if !adjoint {
                    out.iter_mut().zip(&lam).for_each(|(a, l)| *a *= l);
                }
                out
            };
            let norm = |sign: f64| -> Result<f64> {
                let op = |x: &[C64]| apply(&apply(x, sign, false), sign, true);
                let start = super::eigen::default_start(n);
                let r = match lanczos(op, &start, Extreme::Largest, opts) {
                    Ok(p) => p.value,
                    Err(Error::Eigensolver { value, .. }) => value,
                    Err(e) => return Err(e),
                };
                Ok(r.max(0.0).sqrt())
            };
            (norm(-1.0)?, norm(1.0)?)
        };
        rows.push(SmoothingRow { k_max: k, lambda_max: obs.basis.lambda_max(), off_diagonal: off, diagonal: diag });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampedBeamReport {
    pub energy_ratio: f64,
    /// `int_0^T b0` along the geodesic carried by the beam.
    pub ray_integral: f64,
    pub sup_integral: f64,
    pub inf_integral: f64,
    /// `E_0(0) / E_1(0)`.
    pub low_frequency_residue: f64,
    pub lower: f64,
    pub upper: f64,
    pub inside: bool,
}

/// Damped Klein-Gordon evolution of a beam: `E_1(T)/E_1(0)` against
/// `[e^{-2 sup int b0} - eps, e^{-2 inf int b0} + eps]`, the extremes being
/// taken over the unit cosphere.
#[allow(clippy::too_many_arguments)]
pub fn damped_beam_probe(
    m: &Manifold,
    b0: &ObservationFunction,
    rho0: &PhasePoint,
    k: f64,
    k_max: usize,
    t: f64,
    dt: f64,
    nx: usize,
    na: usize,
) -> Result<DampedBeamReport> {
    let periods = torus_periods(m)?;
    b0.validate_for(m)?;
    let basis = SpectralBasis::new(k_max, periods)?;
    let grid = basis.collocation(0);
    let beam = gaussian_beam(&basis, &grid, rho0, k, 1.0)?;
    // v_+ travels along -eta under e^{it Lambda}.
    let data = basis.unsplit_sigma(&SplitPair { plus: beam, minus: basis.zeros() });
    let field = grid.sample(|x| b0.evaluate(m, x));
    let run = solve_damped(&basis, &grid, &data, &field, t, dt, usize::MAX)?;
    let e_start = basis.energy(&data, 1.0);
    let energy_ratio = basis.energy(run.last(), 1.0) / e_start;
    let integral = |p: &PhasePoint| path_integral(m, p, t, |q| b0.evaluate(m, q.x));
    let ray_integral = integral(&rho0.reflect())?;
    let inf_integral = minimize_over_cosphere(m, nx, na, integral)?.value;
    let sup_integral = -minimize_over_cosphere(m, nx, na, |p| integral(p).map(|v| -v))?.value;
    let eps = basis.energy(&data, 0.0) / e_start;
    let lower = (-2.0 * sup_integral).exp() - eps;
    let upper = (-2.0 * inf_integral).exp() + eps;
    Ok(DampedBeamReport {
        energy_ratio,
        ray_integral,
        sup_integral,
        inf_integral,
        low_frequency_residue: eps,
        lower,
        upper,
        inside: lower <= energy_ratio && energy_ratio <= upper,
    })
}
