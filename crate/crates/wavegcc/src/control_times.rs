//! Geodesic averages of `b^2`, the constant `K(T)`, the control times
//! `T_GCC` and `T_UC`, and the weighted averages `g_T^+-`.

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{FlowTrajectory, Manifold, PhasePoint, Point};
use crate::numerics::optimize::nelder_mead;
use crate::numerics::quadrature::{simpson, simpson_count};
use crate::numerics::TrigPoly;
use crate::regions::{cal_l, ObservationFunction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

const SAMPLE_SPACING: f64 = 0.005;
const NM_STARTS: usize = 5;
const NM_BUDGET: usize = 200;

/// `sum_p t^p f_p(x)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpaceTimeField {
    pub powers: Vec<TrigPoly>,
}

impl SpaceTimeField {
    pub fn zero() -> Self {
        Self { powers: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self { powers: vec![TrigPoly::constant(c)] }
    }

    pub fn eval(&self, t: f64, x: Point, periods: [f64; 2]) -> f64 {
        let mut acc = 0.0;
        let mut tp = 1.0;
        for f in &self.powers {
            acc += tp * f.eval(x, periods);
            tp *= t;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.powers.iter().all(TrigPoly::is_zero)
    }

    fn is_finite(&self) -> bool {
        self.powers.iter().all(TrigPoly::is_finite)
    }
}

/// Real parts of the damping `b0` and first-order coefficient `b1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerOrderData {
    #[serde(default)]
    pub b0: SpaceTimeField,
    #[serde(default)]
    pub b1: [SpaceTimeField; 2],
}

impl LowerOrderData {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.b0.is_finite() && self.b1.iter().all(SpaceTimeField::is_finite) {
            Ok(())
        } else {
            Err(Error::InvalidInput("lower-order coefficients must be finite".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

fn check_unit(m: &Manifold, rho: &PhasePoint) -> Result<()> {
    let l = m.lambda(rho)?;
    if (l - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("phase point must lie on the unit cosphere, lambda = {l}")));
    }
    Ok(())
}

fn sample_count(t: f64) -> usize {
    simpson_count(64usize.max((t / SAMPLE_SPACING).ceil() as usize))
}

fn trajectory_for(m: &Manifold, rho: &PhasePoint, t: f64, sign: Sign) -> Result<FlowTrajectory> {
    let n = sample_count(t);
    match sign {
        Sign::Plus => m.trajectory_signed(rho, t, n),
        Sign::Minus => m.trajectory_signed(rho, -t, n),
    }
}

/// `int_0^T f(phi_t(rho)) dt` by composite Simpson on the flow trajectory.
pub fn path_integral<F>(m: &Manifold, rho: &PhasePoint, t: f64, f: F) -> Result<f64>
where
    F: Fn(&PhasePoint) -> f64,
{
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let tr = trajectory_for(m, rho, t, Sign::Plus)?;
    let vals: Vec<f64> = tr.samples.iter().map(|(_, p)| f(p)).collect();
    Ok(simpson(&vals, t))
}

/// `int_0^T b^2(pi phi_t(rho)) dt`.
pub fn geodesic_average(m: &Manifold, b: &ObservationFunction, rho: &PhasePoint, t: f64) -> Result<f64> {
    check_unit(m, rho)?;
    path_integral(m, rho, t, |p| {
        let v = b.evaluate(m, p.x);
        v * v
    })
}

/// `g_T^+-(rho)`: the average of `b^2` along `phi_{+-t}` weighted by the
/// exponential of the accumulated `b0 +- <xi/|xi|, b1>`.
pub fn weighted_average(
    m: &Manifold,
    b: &ObservationFunction,
    lot: &LowerOrderData,
    rho: &PhasePoint,
    t: f64,
    sign: Sign,
) -> Result<f64> {
    check_unit(m, rho)?;
    lot.validate()?;
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let per = m.field_periods();
    let tr = trajectory_for(m, rho, t, sign)?;
    let s = match sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    };
    let h = t / (tr.samples.len() - 1) as f64;
    let mut inner = 0.0;
    let mut prev = None;
    let mut outer = Vec::with_capacity(tr.samples.len());
    for (i, (_, p)) in tr.samples.iter().enumerate() {
        let tau = i as f64 * h;
        let lam = m.lambda_unchecked(p);
        let v = [lot.b1[0].eval(tau, p.x, per), lot.b1[1].eval(tau, p.x, per)];
        let rate = lot.b0.eval(tau, p.x, per) + s * m.pairing(p, v) / lam;
        if let Some(r) = prev {
            inner += 0.5 * h * (r + rate);
        }
        prev = Some(rate);
        let bv = b.evaluate(m, p.x);
        outer.push(bv * bv * inner.exp());
    }
    Ok(simpson(&outer, t))
}

/// Minimum of an objective over the unit cosphere bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosphereMinimum {
    pub value: f64,
    pub minimizer: PhasePoint,
    pub evaluations: usize,
}

/// Grid search over `cosphere_sample(nx, na)` followed by Nelder-Mead in
/// `(x, angle)` from the best grid points.
pub fn minimize_over_cosphere<F>(m: &Manifold, nx: usize, na: usize, f: F) -> Result<CosphereMinimum>
where
    F: Fn(&PhasePoint) -> Result<f64> + Sync,
{
    if nx == 0 || na == 0 {
        return Err(Error::InvalidInput("cosphere grid sizes must be >= 1".into()));
    }
    let pts = m.cosphere_sample(nx, na);
    let vals: Vec<f64> = pts.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let ext = m.chart_extent();
    let step = [ext[0] / nx as f64, ext[1] / nx as f64, TAU / na as f64];
    let starts: Vec<usize> = order.iter().take(NM_STARTS).copied().collect();
    let refined: Vec<(f64, PhasePoint, usize)> = starts
        .par_iter()
        .map(|&idx| {
            let x0 = [pts[idx].x[0], pts[idx].x[1], TAU * (idx % na) as f64 / na as f64];
            let objective = |z: &[f64]| {
                let p = m.unit_covector([z[0], z[1]], z[2]);
                f(&p).unwrap_or(f64::INFINITY)
            };
            let r = nelder_mead(objective, &x0, &step, NM_BUDGET, 1e-12);
            (r.value, m.unit_covector([r.x[0], r.x[1]], r.x[2]), r.evaluations)
        })
        .collect();
    let mut best = CosphereMinimum { value: vals[order[0]], minimizer: pts[order[0]], evaluations: pts.len() };
    for (v, p, e) in refined {
        best.evaluations += e;
        if v < best.value {
            best.value = v;
            best.minimizer = p;
        }
    }
    Ok(best)
}

/// `K(T) = min over the unit cosphere of int_0^T b^2(pi phi_t(rho)) dt`.
pub fn k_of_t(m: &Manifold, b: &ObservationFunction, t: f64, nx: usize, na: usize) -> Result<CosphereMinimum> {
    b.validate_for(m)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be >= 0, got {t}")));
    }
    minimize_over_cosphere(m, nx, na, |p| geodesic_average(m, b, p, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Bisection on the positivity of `K(T)`.
    Bisection,
    /// A closed geodesic avoiding the support of `b` was found.
    ClosedOrbit,
    /// `K(t_max)` stayed below threshold with the angular grid doubled.
    GridStability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TgccResult {
    /// `+inf` in the trapped regime.
    pub value: f64,
    /// A unit geodesic of near-maximal length avoiding `omega`.
    pub ray: PhasePoint,
    pub certificate: Certificate,
}

/// Threshold under which `K(T)` is considered zero.
pub fn zero_threshold(b: &ObservationFunction, t: f64) -> f64 {
    1e-8 * b.amplitude * b.amplitude * t
}

/// Searches closed geodesics (rational directions on the flat torus, great
/// circles on the sphere) that stay at positive distance from `omega`.
pub fn find_closed_trapped_orbit(m: &Manifold, b: &ObservationFunction) -> Option<PhasePoint> {
    let avoids = |rho: &PhasePoint, length: f64| -> bool {
        let n = ((length / 0.002).ceil() as usize).max(64);
        let Ok(tr) = m.trajectory(rho, length, n) else { return false };
        let margin = 2.0 * tr.step;
        tr.samples.iter().all(|(_, p)| b.dist_unchecked(m, p.x) > margin)
    };
    match m {
        Manifold::FlatTorus { periods: l } => {
            let mut dirs = Vec::new();
            for p in 0..=3i32 {
                for q in -3..=3i32 {
                    if (p == 0 && q != 1) || gcd(p, q) != 1 {
                        continue;
                    }
                    dirs.push((p, q));
                }
            }
            dirs.sort_by_key(|&(p, q)| (p.abs() + q.abs(), p, q));
            for (p, q) in dirs {
                let v = [p as f64 * l[0], q as f64 * l[1]];
                let len = v[0].hypot(v[1]);
                let dir = [v[0] / len, v[1] / len];
                let normal = [-dir[1], dir[0]];
                let width = l[0] * l[1] / len;
                let count = ((width / 0.0025).ceil() as usize).max(16);
                for k in 0..count {
                    let s = width * k as f64 / count as f64;
                    let rho = PhasePoint::new(m.wrap([s * normal[0], s * normal[1]]), dir);
                    if avoids(&rho, len) {
                        return Some(rho);
                    }
                }
            }
            None
        }
        Manifold::RoundSphere => {
            let n = 96;
            for i in 0..=n / 2 {
                for j in 0..2 * n {
                    let pole = [PI * i as f64 / n as f64, PI * j as f64 / n as f64];
                    // A point on the great circle with this pole, and the
                    // circle's direction there.
                    let rho = m.unit_covector([pole[0] + 0.5 * PI, pole[1]], 0.5 * PI);
                    if avoids(&rho, TAU) {
                        return Some(rho);
                    }
                }
            }
            None
        }
        Manifold::PerturbedTorus(_) => None,
    }
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `T_GCC = inf { T > 0 : K(T) > 0 }` by bisection on `(0, t_max]`.
pub fn t_gcc(m: &Manifold, b: &ObservationFunction, t_max: f64, tol: f64, nx: usize, na: usize) -> Result<TgccResult> {
    b.validate_for(m)?;
    ensure_finite("t_max/tol", &[t_max, tol])?;
    if !(t_max > 0.0 && tol > 0.0) {
        return Err(Error::InvalidInput("t_max and tol must be positive".into()));
    }
    if let Some(ray) = find_closed_trapped_orbit(m, b) {
        return Ok(TgccResult { value: f64::INFINITY, ray, certificate: Certificate::ClosedOrbit });
    }
    let positive = |t: f64, na: usize| -> Result<(bool, PhasePoint)> {
        let k = k_of_t(m, b, t, nx, na)?;
        Ok((k.value > zero_threshold(b, t), k.minimizer))
    };
    let mut na_used = na;
    let (ok, ray) = positive(t_max, na)?;
    if !ok {
        let (ok2, ray2) = positive(t_max, 2 * na)?;
        if !ok2 {
            return Ok(TgccResult { value: f64::INFINITY, ray: ray2, certificate: Certificate::GridStability });
        }
        na_used = 2 * na;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    let mut best_ray = ray;
    let mut have_below = false;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (ok, ray) = positive(mid, na_used)?;
        if ok {
            hi = mid;
            if !have_below {
                best_ray = ray;
            }
        } else {
            lo = mid;
            best_ray = ray;
            have_below = true;
        }
    }
    Ok(TgccResult { value: 0.5 * (lo + hi), ray: best_ray, certificate: Certificate::Bisection })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonOptions {
    pub resolution: usize,
    pub t_max: f64,
    pub tol: f64,
    pub nx: usize,
    pub na: usize,
    /// Gap below which the two times are treated as equal.
    pub equality_tol: f64,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self { resolution: 256, t_max: 3.0, tol: 2e-3, nx: 32, na: 48, equality_tol: 0.03 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Equality,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeComparison {
    pub t_uc: f64,
    pub t_gcc: f64,
    pub regime: Regime,
    /// Tolerance of the check `t_uc <= t_gcc + tolerance`.
    pub tolerance: f64,
    /// Farthest point from `omega`.
    pub x_star: Point,
    pub ray: PhasePoint,
}

/// Computes both control times and checks `T_UC <= T_GCC`.
pub fn t_comparison(m: &Manifold, b: &ObservationFunction, opts: &ComparisonOptions) -> Result<TimeComparison> {
    let l = cal_l(b, m, opts.resolution)?;
    let g = t_gcc(m, b, opts.t_max, opts.tol, opts.nx, opts.na)?;
    let t_uc = 2.0 * l.value;
    let tolerance = 2.0 * l.error_bound + 2.0 * opts.tol;
    if t_uc > g.value + tolerance {
        return Err(Error::Inconsistency(format!(
            "T_UC = {t_uc} exceeds T_GCC = {} by more than {tolerance}",
            g.value
        )));
    }
    let regime = if (g.value - t_uc).abs() <= opts.equality_tol { Regime::Equality } else { Regime::Strict };
    Ok(TimeComparison { t_uc, t_gcc: g.value, regime, tolerance, x_star: l.argmax, ray: g.ray })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualityDiagnostic {
    /// `R0 = dist(x_star, omega)`.
    pub radius: f64,
    /// First time each ray of the fan reaches the closure of `omega`.
    pub exit_times: Vec<f64>,
    pub max_violation: f64,
}

impl EqualityDiagnostic {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Fires `na` unit rays from `x_star` and records when each reaches the
/// closure of `omega`; in the equality case every ray exits at `R0`.
pub fn equality_case_diagnostic(
    m: &Manifold,
    b: &ObservationFunction,
    x_star: Point,
    na: usize,
) -> Result<EqualityDiagnostic> {
    let radius = b.dist_to_omega(m, x_star)?;
    if na == 0 {
        return Err(Error::InvalidInput("need at least one direction".into()));
    }
    let horizon = 10.0 * radius + 1.0;
    let exit_times: Vec<f64> = (0..na)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let rho = m.unit_covector(x_star, TAU * j as f64 / na as f64);
            // The distance to omega is 1-Lipschitz along unit-speed rays, so
            // stepping by it never jumps over the first contact.
            let mut t = 0.0;
            for _ in 0..20_000 {
                let d = b.dist_unchecked(m, m.flow(&rho, t)?.x);
                if d < 1e-10 {
                    return Ok(t);
                }
                t += d.max(1e-10);
                if t > horizon {
                    break;
                }
            }
            Ok(f64::INFINITY)
        })
        .collect::<Result<_>>()?;
    let max_violation = exit_times.iter().map(|t| (t - radius).abs()).fold(0.0, f64::max);
    Ok(EqualityDiagnostic { radius, exit_times, max_violation })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGeneral {
    pub value: f64,
    pub plus: CosphereMinimum,
    pub minus: CosphereMinimum,
}

/// `min { min g_T^+, min g_T^- }`.
pub fn k_general(
    m: &Manifold,
    b: &ObservationFunction,
    lot: &LowerOrderData,
    t: f64,
    nx: usize,
    na: usize,
) -> Result<KGeneral> {
    b.validate_for(m)?;
    lot.validate()?;
    let plus = minimize_over_cosphere(m, nx, na, |p| weighted_average(m, b, lot, p, t, Sign::Plus))?;
    let minus = minimize_over_cosphere(m, nx, na, |p| weighted_average(m, b, lot, p, t, Sign::Minus))?;
    Ok(KGeneral { value: plus.value.min(minus.value), plus, minus })
}
