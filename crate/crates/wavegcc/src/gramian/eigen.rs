use super::matrix::{shell_indices, GramianApply};
use crate::error::{Error, Result};
use crate::spectral::C64;
use faer::{Mat, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    /// `||A v - value v||` for unit `v`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Relative residual tolerance for Lanczos.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations between Ritz checks.
    pub check_every: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 300, check_every: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Smallest,
    Largest,
}

/// All eigenpairs of a dense Hermitian matrix (column major), ascending.
pub fn dense_hermitian_eigen(a: &[C64], n: usize) -> Result<(Vec<f64>, Mat<C64>)> {
    let m = Mat::from_fn(n, n, |i, j| a[j * n + i]);
    let evd =
        m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Construction(format!("dense eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..n).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Eigenvalues of a real symmetric tridiagonal matrix with the eigenvector
/// of the requested extreme.
fn tridiagonal_extreme(alpha: &[f64], beta: &[f64], which: Extreme) -> Result<(f64, Vec<f64>)> {
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Construction(format!("tridiagonal eigensolver: {e:?}")))?;
    let idx = match which {
        Extreme::Smallest => 0,
        Extreme::Largest => m - 1,
    };
    let val = evd.S().column_vector()[idx];
    let u = evd.U();
    Ok((val, (0..m).map(|i| u[(i, idx)]).collect()))
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization for an extreme eigenpair of a
/// Hermitian operator. Returns the best Ritz pair; `Err` carries it when the
/// residual does not reach `tol * |largest Ritz value|` within the budget.
pub fn lanczos<F>(apply: F, start: &[C64], which: Extreme, opts: &EigenOptions) -> Result<Eigenpair>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let n = start.len();
    let s0 = norm(start);
    if n == 0 || !(s0 > 0.0) {
        return Err(Error::InvalidInput("Lanczos needs a nonzero start vector".into()));
    }
    let max_iter = opts.max_iter.min(n).max(1);
    let mut q: Vec<Vec<C64>> = vec![start.iter().map(|v| v / s0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = None;
    for j in 0..max_iter {
        let mut w = apply(&q[j]);
        let a = dot(&q[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                w.iter_mut().zip(qi).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        let last = j + 1 == max_iter;
        let exhausted = b <= 1e-14 * alpha.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        if (j + 1) % opts.check_every.max(1) == 0 || last || exhausted {
            let (theta, s) = tridiagonal_extreme(&alpha, &beta, which)?;
            let scale = alpha.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(theta.abs());
            let res = if exhausted { 0.0 } else { b * s[j].abs() };
            let converged = res <= opts.tol * scale.max(1e-300);
            if converged || last || exhausted {
                let mut v = vec![C64::new(0.0, 0.0); n];
                for (qi, si) in q.iter().zip(&s) {
                    v.iter_mut().zip(qi).for_each(|(x, y)| *x += y * si);
                }
                let vn = norm(&v);
                v.iter_mut().for_each(|x| *x /= vn);
                let av = apply(&v);
                let residual = av.iter().zip(&v).map(|(x, y)| (x - y * theta).norm_sqr()).sum::<f64>().sqrt();
                let pair = Eigenpair { value: theta, vector: v, residual, iterations: j + 1 };
                if converged || exhausted || residual <= opts.tol * scale {
                    return Ok(pair);
                }
                best = Some(pair);
                break;
            }
        }
        beta.push(b);
        q.push(w.iter().map(|x| x / b).collect());
    }
    let p = best.expect("Lanczos loop always records a Ritz pair");
    Err(Error::Eigensolver { iterations: p.iterations, value: p.value, residual: p.residual, vector: p.vector })
}

/// Deterministic start vector with every component populated.
pub fn default_start(n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let x = (i as f64 + 1.0) * 0.618_033_988_749_895;
            C64::new(1.0 + 0.5 * (x - x.floor()), 0.25 * (7.0 * x).sin())
        })
        .collect()
}

/// Smallest eigenpair of the Gramian, optionally restricted to the shell
/// `kappa_k > kappa`. Dense when an assembled matrix is available, Lanczos
/// otherwise (started from `start`, restricted to the shell).
pub fn min_eig(
    g: &dyn GramianApply,
    shell: Option<f64>,
    start: Option<&[C64]>,
    opts: &EigenOptions,
) -> Result<Eigenpair> {
    let idx = shell_indices(g.basis(), shell);
    let dim = g.dim();
    if idx.is_empty() {
        return Err(Error::InvalidInput("shell leaves no modes".into()));
    }
    if let Some(dense) = g.as_dense() {
        let sub = dense.submatrix(&idx);
        let m = idx.len();
        let (vals, u) = dense_hermitian_eigen(&sub, m)?;
        let mut vector = vec![C64::new(0.0, 0.0); dim];
        for (r, &i) in idx.iter().enumerate() {
            vector[i] = u[(r, 0)];
        }
        let av = g.apply(&vector);
        let residual = av
            .iter()
            .zip(&vector)
            .enumerate()
            .filter(|(i, _)| idx.binary_search(i).is_ok())
            .map(|(_, (a, v))| (a - v * vals[0]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        return Ok(Eigenpair { value: vals[0], vector, residual, iterations: 1 });
    }
    let mut mask = vec![false; dim];
    idx.iter().for_each(|&i| mask[i] = true);
    let restrict = |v: &mut Vec<C64>| {
        v.iter_mut().zip(&mask).for_each(|(x, m)| {
            if !m {
                *x = C64::new(0.0, 0.0)
            }
        })
    };
    let mut s0 = start.map(<[C64]>::to_vec).unwrap_or_else(|| default_start(dim));
    restrict(&mut s0);
    if norm(&s0) == 0.0 {
        s0 = default_start(dim);
        restrict(&mut s0);
    }
    let op = |x: &[C64]| {
        let mut y = g.apply(x);
        restrict(&mut y);
        y
    };
    lanczos(op, &s0, Extreme::Smallest, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<C64> = (0..n * n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                a[j * n + i] = (0..n).map(|k| b[k * n + i] * b[k * n + j].conj()).sum();
            }
        }
        a
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 60;
        let a = random_hermitian(n, 9);
        let (vals, _) = dense_hermitian_eigen(&a, n).unwrap();
        let apply = |x: &[C64]| -> Vec<C64> { (0..n).map(|i| (0..n).map(|j| a[j * n + i] * x[j]).sum()).collect() };
        let opts = EigenOptions { tol: 1e-10, max_iter: n, check_every: 5 };
        let lo = lanczos(apply, &default_start(n), Extreme::Smallest, &opts).unwrap();
        assert!((lo.value - vals[0]).abs() < 1e-8 * vals[n - 1]);
        let hi = lanczos(apply, &default_start(n), Extreme::Largest, &opts).unwrap();
        assert!((hi.value - vals[n - 1]).abs() < 1e-8 * vals[n - 1]);
    }

    #[test]
    fn lanczos_budget_error_carries_ritz_pair() {
        let n = 200;
        let d: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 1e-3).collect();
        let apply = |x: &[C64]| -> Vec<C64> { x.iter().zip(&d).map(|(a, b)| a * b).collect() };
        let opts = EigenOptions { tol: 1e-14, max_iter: 5, check_every: 5 };
        match lanczos(apply, &default_start(n), Extreme::Smallest, &opts) {
            Err(Error::Eigensolver { value, vector, .. }) => {
                assert!(value >= 1.0 && vector.len() == n);
            }
            other => panic!("{other:?}"),
        }
    }
}
