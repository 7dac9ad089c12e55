use super::matrix::{GramianHeader, GramianMatrix};
use super::observation::Observation;
use crate::error::{Error, Result};
use crate::numerics::quadrature::simpson_weights;
use crate::spectral::C64;
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use std::f64::consts::TAU;

/// Largest band size for the potential Gramian.
pub const POTENTIAL_LIMIT: usize = 400;

/// Gramian of `int_0^T ||b grad v||^2 + ||b v||^2 dt` for
/// `v_tt - Laplace v + c v = 0`, on split `H^1`-orthonormal coordinates. All
/// `2N` basis solutions are marched together by velocity Verlet, and the
/// time integral uses composite Simpson over the steps. `obs` must be the
/// `s = 0` form of `b`; `c` holds grid values on `obs.grid`.
pub fn assemble_gramian_potential(obs: &Observation, c: &[f64], t: f64, dt: f64) -> Result<GramianMatrix> {
    if obs.s != 0.0 {
        return Err(Error::InvalidInput("potential Gramian needs the s = 0 observation form".into()));
    }
    let basis = &obs.basis;
    let grid = &obs.grid;
    let n = basis.len();
    if n > POTENTIAL_LIMIT {
        return Err(Error::InvalidInput(format!("band of size {n} exceeds {POTENTIAL_LIMIT}")));
    }
    if c.len() != grid.n * grid.n {
        return Err(Error::InvalidInput("potential does not match the collocation grid".into()));
    }
    crate::error::ensure_finite("potential", c)?;
    if !(t.is_finite() && t > 0.0 && dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("need T > 0 and dt > 0, got {t}, {dt}")));
    }
    let c_max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let omega = (basis.kappa_max() + c_max.max(1.0)).sqrt();
    if dt * omega > 0.5 + 1e-12 {
        return Err(Error::InvalidInput(format!("time step {dt} exceeds the stability bound {:.3e}", 0.5 / omega)));
    }
    let mut steps = (t / dt).ceil() as usize;
    steps += steps % 2;
    let h = t / steps as f64;
    let w = simpson_weights(steps + 1, t);

    let mut cmat = Mat::<C64>::zeros(n, n);
    let mut e = basis.zeros();
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let col = basis.multiply_function(grid, &e, c)?;
        for i in 0..n {
            cmat[(i, j)] = col[i];
        }
        e[j] = C64::new(0.0, 0.0);
    }
    let q = obs.dense();
    let per = basis.periods;
    let omat = Mat::<C64>::from_fn(n, n, |i, j| {
        let (a, b) = (basis.modes[i], basis.modes[j]);
        let dot =
            TAU * TAU * (a[0] as f64 * b[0] as f64 / (per[0] * per[0]) + a[1] as f64 * b[1] as f64 / (per[1] * per[1]));
        q[j * n + i] * (1.0 + dot)
    });

    let dim = 2 * n;
    let zero = C64::new(0.0, 0.0);
    let i1 = C64::new(0.0, 1.0);
    // Columns: split unit vectors y, v_+ = Lambda^{-1} y_+, v_- = Lambda^{-1} y_-.
    let mut u =
        Mat::<C64>::from_fn(n, dim, |i, j| if i == j % n { C64::new(1.0 / basis.lambda[i], 0.0) } else { zero });
    let mut v = Mat::<C64>::from_fn(n, dim, |i, j| {
        if i != j % n {
            zero
        } else if j < n {
            i1
        } else {
            -i1
        }
    });
    let accel = |u: &Mat<C64>| -> Mat<C64> {
        let mut a = Mat::<C64>::from_fn(n, dim, |i, j| -u[(i, j)] * basis.kappa[i]);
        matmul(a.as_mut(), Accum::Add, cmat.as_ref(), u.as_ref(), -C64::new(1.0, 0.0), Par::rayon(0));
        a
    };
    let mut g = Mat::<C64>::zeros(dim, dim);
    let mut ou = Mat::<C64>::zeros(n, dim);
    let accumulate = |g: &mut Mat<C64>, ou: &mut Mat<C64>, u: &Mat<C64>, weight: f64| {
        matmul(ou.as_mut(), Accum::Replace, omat.as_ref(), u.as_ref(), C64::new(1.0, 0.0), Par::rayon(0));
        matmul(g.as_mut(), Accum::Add, u.adjoint(), ou.as_ref(), C64::new(weight, 0.0), Par::rayon(0));
    };
    accumulate(&mut g, &mut ou, &u, w[0]);
    let mut a = accel(&u);
    #[allow(clippy::needless_range_loop)]
    for step in 1..=steps {
        for j in 0..dim {
            for i in 0..n {
                v[(i, j)] += a[(i, j)] * (0.5 * h);
                u[(i, j)] += v[(i, j)] * h;
            }
        }
        a = accel(&u);
        for j in 0..dim {
            for i in 0..n {
                v[(i, j)] += a[(i, j)] * (0.5 * h);
            }
        }
        accumulate(&mut g, &mut ou, &u, w[step]);
        if step % 64 == 0 || step == steps {
            let finite = (0..dim).all(|j| (0..n).all(|i| u[(i, j)].re.is_finite() && u[(i, j)].im.is_finite()));
            if !finite {
                return Err(Error::Stability { time: step as f64 * h, growth: f64::INFINITY });
            }
        }
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            entries.push(0.5 * (g[(i, j)] + g[(j, i)].conj()));
        }
    }
    Ok(GramianMatrix {
        header: GramianHeader {
            k_max: basis.k_max,
            periods: basis.periods,
            s: 1.0,
            horizon: t,
            dim,
            time_integration: format!("verlet dt={h:e} simpson"),
            observation: format!("local H1 of {}", obs.description),
            observation_hash: format!("{:016x}", obs.fingerprint),
        },
        basis: basis.clone(),
        entries,
    })
}
