use super::{CauchyPair, Collocation, SpectralBasis, C64};
use crate::error::{Error, Result};

/// Sampled trajectory of Cauchy data.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<CauchyPair>,
}

impl TimeSeries {
    pub fn last(&self) -> &CauchyPair {
        self.states.last().expect("time series is never empty")
    }
}

fn steps_for(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidInput(format!("final time {t_end} must be finite and nonnegative")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
    }
    let n = (t_end / dt).ceil().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if n == 0 { 0.0 } else { t_end / n as f64 };
    Ok((n, h))
}

fn check_grid_fn(basis: &SpectralBasis, grid: &Collocation, f: &[f64], name: &str) -> Result<()> {
    if grid.n < basis.dealiased_size() {
        return Err(Error::Aliasing { grid: grid.n, required: basis.dealiased_size() });
    }
    if f.len() != grid.n * grid.n {
        return Err(Error::InvalidInput(format!("{name} does not match the collocation grid")));
    }
    crate::error::ensure_finite(name, f)
}

fn finite(pair: &CauchyPair) -> bool {
    pair.v0.iter().chain(&pair.v1).all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Velocity-Verlet integration of `u_tt - Laplace u + c u = 0`, sampling the
/// state every `every` steps and at the final time.
///
/// Requires `dt * sqrt(kappa_max + max(sup c, 1)) <= 0.5`.
pub fn solve_potential(
    basis: &SpectralBasis,
    grid: &Collocation,
    init: &CauchyPair,
    c: &[f64],
    t_end: f64,
    dt: f64,
    every: usize,
) -> Result<TimeSeries> {
    check_grid_fn(basis, grid, c, "potential")?;
    let c_max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let omega = (basis.kappa_max() + c_max.max(1.0)).sqrt();
    if dt * omega > 0.5 + 1e-12 {
        return Err(Error::InvalidInput(format!("time step {dt} exceeds the stability bound {:.3e}", 0.5 / omega)));
    }
    let (n, h) = steps_for(t_end, dt)?;
    let every = every.max(1);
    let nonneg = c.iter().all(|v| *v >= 0.0);
    let e0 = basis.energy_c(grid, init, c);

    let accel = |u: &[C64]| -> Result<Vec<C64>> {
        let cu = basis.multiply_function(grid, u, c)?;
        Ok(u.iter().zip(&basis.kappa).zip(cu).map(|((a, k), b)| -a * k - b).collect())
    };

    let mut u = init.v0.clone();
    let mut v = init.v1.clone();
    let mut a = accel(&u)?;
    let mut out = TimeSeries { times: vec![0.0], states: vec![init.clone()] };
    for step in 1..=n {
        for ((vi, ai), ui) in v.iter_mut().zip(&a).zip(u.iter_mut()) {
            *vi += 0.5 * h * ai;
            *ui += h * *vi;
        }
        a = accel(&u)?;
        for (vi, ai) in v.iter_mut().zip(&a) {
            *vi += 0.5 * h * ai;
        }
        if step % every == 0 || step == n {
            let t = step as f64 * h;
            let pair = CauchyPair { v0: u.clone(), v1: v.clone() };
            if !finite(&pair) {
                return Err(Error::Stability { time: t, growth: f64::INFINITY });
            }
            if nonneg && e0 > 0.0 {
                let growth = basis.energy_c(grid, &pair, c) / e0;
                if growth > 10.0 {
                    return Err(Error::Stability { time: t, growth });
                }
            }
            out.times.push(t);
            out.states.push(pair);
        }
    }
    Ok(out)
}

/// Measured exponential growth rate of `sqrt(E_1)` under the constant
/// potential `c = -r`, starting from the zero mode. The rate is the slope of
/// `log sqrt(E_1)` fitted by least squares over the second half of
/// `[0, 10 / sqrt(r)]`, stepping with `dt = min(1e-3, 0.01 / sqrt(r))`.
pub fn potential_growth_rate(basis: &SpectralBasis, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidInput(format!("growth rate needs r > 0, got {r}")));
    }
    let grid = basis.collocation(basis.dealiased_size());
    let c = vec![-r; grid.n * grid.n];
    let mut init = CauchyPair::zeros(basis.len());
    let zero = basis.index([0, 0]).expect("zero mode is always present");
    init.v0[zero] = C64::new(1.0, 0.0);
    let root = r.sqrt();
    let t_end = 10.0 / root;
    let dt = (1e-3f64).min(0.01 / root);
    let steps = (t_end / dt).ceil() as usize;
    let run = solve_potential(basis, &grid, &init, &c, t_end, dt, (steps / 200).max(1))?;
    let pts: Vec<(f64, f64)> = run
        .times
        .iter()
        .zip(&run.states)
        .filter(|(t, _)| **t >= 0.5 * t_end)
        .map(|(t, st)| (*t, 0.5 * basis.energy(st, 1.0).ln()))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Strang splitting for `u_tt - Laplace u + u + b0 u_t = 0`: exact free
/// Klein-Gordon rotation between Crank-Nicolson damping half steps applied
/// pointwise on the collocation grid.
///
/// Requires `dt * sup|b0| <= 1`.
pub fn solve_damped(
    basis: &SpectralBasis,
    grid: &Collocation,
    init: &CauchyPair,
    b0: &[f64],
    t_end: f64,
    dt: f64,
    every: usize,
) -> Result<TimeSeries> {
    check_grid_fn(basis, grid, b0, "damping")?;
    let b_max = b0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if dt * b_max > 1.0 {
        return Err(Error::InvalidInput(format!("time step {dt} too large for damping of size {b_max}")));
    }
    let (n, h) = steps_for(t_end, dt)?;
    let every = every.max(1);
    let factor: Vec<f64> = b0.iter().map(|b| (1.0 - 0.25 * h * b) / (1.0 + 0.25 * h * b)).collect();
    let damp = |v: &[C64]| -> Result<Vec<C64>> { basis.multiply_function(grid, v, &factor) };
    let (cos, sin): (Vec<f64>, Vec<f64>) = basis.lambda.iter().map(|l| ((l * h).cos(), (l * h).sin())).unzip();

    let mut u = init.v0.clone();
    let mut v = init.v1.clone();
    let mut out = TimeSeries { times: vec![0.0], states: vec![init.clone()] };
    for step in 1..=n {
        v = damp(&v)?;
        for i in 0..u.len() {
            let l = basis.lambda[i];
            let (a, b) = (u[i], v[i]);
            u[i] = a * cos[i] + b * (sin[i] / l);
            v[i] = -a * (l * sin[i]) + b * cos[i];
        }
        v = damp(&v)?;
        if step % every == 0 || step == n {
            let t = step as f64 * h;
            let pair = CauchyPair { v0: u.clone(), v1: v.clone() };
            if !finite(&pair) {
                return Err(Error::Stability { time: t, growth: f64::INFINITY });
            }
            out.times.push(t);
            out.states.push(pair);
        }
    }
    Ok(out)
}
