use super::*;
use crate::geometry::{Manifold, PhasePoint};
use crate::numerics::quadrature::simpson_weights;
use crate::regions::{Component, ObservationFunction};
use crate::spectral::{CauchyPair, Collocation, SpectralBasis, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn disk() -> ObservationFunction {
    ObservationFunction::single(Component::Hole { center: [0.5, 0.5], r0: 0.25, r1: 0.3 })
}

fn blob() -> ObservationFunction {
    ObservationFunction::single(Component::Ball { center: [0.3, 0.6], r0: 0.1, r1: 0.35 })
}

fn obs(b: &ObservationFunction, k: usize, s: f64) -> Observation {
    Observation::new(&Manifold::unit_torus(), b, k, s, 1e-6).unwrap()
}

fn random(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// `int_0^T ||b v(t)||_{H^s}^2 dt` by Simpson in time, the norm taken on an
/// independent fine grid.
fn direct_observation(b: &ObservationFunction, basis: &SpectralBasis, s: f64, y: &[C64], t: f64, nt: usize) -> f64 {
    let m = Manifold::unit_torus();
    let fine = Collocation::new(256, basis.periods);
    let bv = fine.sample(|x| b.evaluate(&m, x));
    let kappa = fine.full_kappa();
    let n = basis.len();
    let w = simpson_weights(nt, t);
    let mut total = 0.0;
    for (j, wj) in w.iter().enumerate() {
        let tj = t * j as f64 / (nt - 1) as f64;
        let v: Vec<C64> = (0..n)
            .map(|k| {
                let p = C64::from_polar(basis.lambda[k].powf(-s), basis.lambda[k] * tj);
                y[k] * p + y[n + k] * C64::from_polar(basis.lambda[k].powf(-s), -basis.lambda[k] * tj)
            })
            .collect();
        let mut vals = fine.to_values(basis, &v);
        vals.iter_mut().zip(&bv).for_each(|(a, c)| *a *= c);
        let full = fine.values_to_full(vals);
        let q: f64 = full.iter().zip(&kappa).map(|(a, k)| (1.0 + k).powf(s) * a.norm_sqr()).sum();
        total += wj * q;
    }
    total
}

#[test]
fn interval_integral_series_and_closed_form_agree() {
    for t in [0.3, 1.0, 2.5] {
        assert_eq!(interval_integral(0.0, t), C64::new(t, 0.0));
        for w in [1e-6, 1e-4, 0.3, 7.0] {
            let exact = if w * t < 1e-3 {
                C64::new(t - w * w * t.powi(3) / 6.0, w * t * t / 2.0 - w.powi(3) * t.powi(4) / 24.0)
            } else {
                C64::new((w * t).sin() / w, (1.0 - (w * t).cos()) / w)
            };
            assert!((interval_integral(w, t) - exact).norm() < 1e-12 * t, "{w} {t}");
        }
    }
}

#[test]
fn constant_observation_blocks() {
    let o = obs(&ObservationFunction::everywhere(1.0), 3, 1.0);
    let t = 1.3;
    let g = assemble_gramian(&o, t).unwrap();
    let n = o.len();
    let mut expected_min = f64::INFINITY;
    for i in 0..2 * n {
        for j in 0..2 * n {
            let (ki, kj) = (i % n, j % n);
            let l = o.basis.lambda[ki];
            let e = if ki != kj {
                C64::new(0.0, 0.0)
            } else if i == j {
                C64::new(t, 0.0)
            } else if i < n {
                interval_integral(-2.0 * l, t)
            } else {
                interval_integral(2.0 * l, t)
            };
            assert!((g.get(i, j) - e).norm() < 1e-12, "{i} {j}");
        }
    }
    for l in &o.basis.lambda {
        expected_min = expected_min.min(t - (t * l).sin().abs() / l);
    }
    let e = min_eig(&g, None, None, &EigenOptions::default()).unwrap();
    assert!((e.value - expected_min).abs() < 1e-12);
}

#[test]
fn zero_horizon_gives_zero() {
    let g = assemble_gramian(&obs(&disk(), 2, 0.0), 0.0).unwrap();
    assert!(g.entries.iter().all(|c| *c == C64::new(0.0, 0.0)));
}

#[test]
fn hermitian_psd_and_quadratic_identity() {
    for s in [0.0, 1.0] {
        let o = obs(&blob(), 3, s);
        let t = 0.8;
        let g = assemble_gramian(&o, t).unwrap();
        assert!(g.hermitian_defect() <= 1e-10 * g.norm());
        let (vals, _) = dense_hermitian_eigen(&g.entries, g.dim()).unwrap();
        assert!(vals[0] >= -1e-10 * g.norm());
        for seed in 0..5 {
            let y = random(g.dim(), 100 + seed);
            let form = g.quadratic(&y);
            let direct = direct_observation(&blob(), &o.basis, s, &y, t, 2049);
            assert!((form - direct).abs() <= 1e-6 * direct, "s={s} {form} {direct}");
        }
    }
}

#[test]
fn brute_force_time_quadrature_oracle() {
    let o = obs(&disk(), 2, 0.0);
    let t = 1.0;
    let g = assemble_gramian(&o, t).unwrap();
    let n = o.len();
    let nt = 4 * 256 + 1;
    let w = simpson_weights(nt, t);
    let q = o.dense();
    for i in 0..2 * n {
        for j in 0..2 * n {
            let (si, ki) = if i < n { (1.0, i) } else { (-1.0, i - n) };
            let (sj, kj) = if j < n { (1.0, j) } else { (-1.0, j - n) };
            let mut acc = C64::new(0.0, 0.0);
            for (r, wr) in w.iter().enumerate() {
                let tr = t * r as f64 / (nt - 1) as f64;
                acc += *wr * C64::from_polar(1.0, (sj * o.basis.lambda[kj] - si * o.basis.lambda[ki]) * tr);
            }
            assert!((g.get(i, j) - q[kj * n + ki] * acc).norm() < 1e-8);
        }
    }
}

#[test]
fn operator_matches_dense() {
    for s in [0.0, 0.5] {
        let o = Arc::new(obs(&blob(), 4, s));
        let g = assemble_gramian(&o, 0.9).unwrap();
        let op = GramianOperator::new(o.clone(), 0.9).unwrap();
        let x = random(g.dim(), 7);
        let a = g.apply(&x);
        let b = op.apply(&x);
        let na: f64 = a.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        let diff: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-11 * na, "{diff}");
        for (p, q) in g.diagonal().iter().zip(op.diagonal()) {
            assert!((p - q).abs() < 1e-11);
        }
    }
}

#[test]
fn eigen_paths_agree_and_shells_increase() {
    let o = Arc::new(obs(&disk(), 4, 0.0));
    let t = 0.8;
    let g = assemble_gramian(&o, t).unwrap();
    let op = GramianOperator::new(o, t).unwrap();
    let dense = min_eig(&g, None, None, &EigenOptions::default()).unwrap();
    let opts = EigenOptions { tol: 1e-9, max_iter: 162, check_every: 5 };
    let lz = min_eig(&op, None, None, &opts).unwrap();
    assert!((dense.value - lz.value).abs() < 1e-7 * g.norm(), "{} {}", dense.value, lz.value);
    let mut prev = dense.value;
    for kappa in [10.0, 50.0, 200.0, 400.0] {
        let e = min_eig(&g, Some(kappa), None, &EigenOptions::default()).unwrap();
        assert!(e.value >= prev - 1e-12);
        prev = e.value;
    }
}

#[test]
fn save_load_roundtrip() {
    let g = assemble_gramian(&obs(&disk(), 2, 0.0), 0.7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.bin");
    g.save(&p).unwrap();
    let h = GramianMatrix::load(&p).unwrap();
    assert_eq!(h.header, g.header);
    assert_eq!(h.entries, g.entries);
    std::fs::write(&p, b"nonsense").unwrap();
    assert!(GramianMatrix::load(&p).is_err());
}

fn smooth_data(basis: &SpectralBasis, seed: u64, modes: i32) -> CauchyPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = CauchyPair::zeros(basis.len());
    for (i, k) in basis.modes.iter().enumerate() {
        if k[0].abs() <= modes && k[1].abs() <= modes {
            d.v0[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            d.v1[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    d
}

#[test]
fn hum_zero_data() {
    let o = obs(&disk(), 3, 0.0);
    let g = assemble_gramian(&o, 1.1).unwrap();
    let r = hum_control(&g, &o, &CauchyPair::zeros(o.len()), &HumOptions::default()).unwrap();
    assert_eq!(r.control_cost, 0.0);
    assert_eq!(r.final_energy, 0.0);
    assert!(r.control_norms.iter().all(|p| p[1] == 0.0));
}

#[test]
fn hum_constant_observation_matches_modewise_solve() {
    for s in [0.0, 1.0] {
        let o = obs(&ObservationFunction::everywhere(1.0), 3, s);
        let t = 1.0;
        let g = assemble_gramian(&o, t).unwrap();
        let data = smooth_data(&o.basis, 3, 2);
        let r = hum_control(&g, &o, &data, &HumOptions::default()).unwrap();
        let d = hum_rhs(&o, &data);
        let n = o.len();
        let mut cost = 0.0;
        for k in 0..n {
            let l = o.basis.lambda[k];
            let (a, b) = (interval_integral(-2.0 * l, t), interval_integral(2.0 * l, t));
            let det = C64::new(t * t, 0.0) - a * b;
            let xp = (t * d[k] - a * d[n + k]) / det;
            let xm = (t * d[n + k] - b * d[k]) / det;
            cost += (xp.conj() * d[k] + xm.conj() * d[n + k]).re;
        }
        assert!((r.control_cost - cost).abs() <= 1e-6 * cost, "{} {cost}", r.control_cost);
        assert!(r.final_energy <= 1e-10 * r.initial_energy);
    }
}

#[test]
fn hum_drives_to_rest_and_scales_quadratically() {
    let o = obs(&disk(), 6, 0.0);
    let g = assemble_gramian(&o, 1.1).unwrap();
    let data = smooth_data(&o.basis, 5, 3);
    let r = hum_control(&g, &o, &data, &HumOptions::default()).unwrap();
    assert!(r.relative_residual <= 1e-8);
    assert!(r.final_energy <= 1e-6 * r.initial_energy, "{} {}", r.final_energy, r.initial_energy);
    let scaled =
        CauchyPair { v0: data.v0.iter().map(|c| c * 3.0).collect(), v1: data.v1.iter().map(|c| c * 3.0).collect() };
    let r3 = hum_control(&g, &o, &scaled, &HumOptions::default()).unwrap();
    assert!((r3.control_cost - 9.0 * r.control_cost).abs() <= 1e-7 * r3.control_cost);
}

#[test]
fn hum_reports_stall() {
    let o = obs(&disk(), 3, 0.0);
    let g = assemble_gramian(&o, 1.1).unwrap();
    let data = smooth_data(&o.basis, 5, 3);
    let opts = HumOptions { tol: 1e-14, max_iter: Some(2), samples: 3 };
    assert!(matches!(hum_control(&g, &o, &data, &opts), Err(crate::Error::IllConditioned { .. })));
}

#[test]
fn potential_gramian_matches_free_klein_gordon() {
    let m = Manifold::unit_torus();
    let one = ObservationFunction::everywhere(1.0);
    let o = obs(&one, 2, 0.0);
    let c = vec![1.0; o.grid.n * o.grid.n];
    let gp = assemble_gramian_potential(&o, &c, 0.7, 1e-3).unwrap();
    let gf = assemble_gramian(&Observation::new(&m, &one, 2, 1.0, 1e-6).unwrap(), 0.7).unwrap();
    let diff: f64 = gp.entries.iter().zip(&gf.entries).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert!(diff < 1e-4 * gf.norm(), "{diff}");
}

#[test]
fn potential_gramian_brute_force_and_psd() {
    let b = blob();
    let o = obs(&b, 2, 0.0);
    let grid = o.grid.clone();
    let basis = o.basis.clone();
    let c = grid.sample(|x| 2.0 + (std::f64::consts::TAU * x[0]).cos());
    let (t, dt) = (0.5, 2e-3);
    let g = assemble_gramian_potential(&o, &c, t, dt).unwrap();
    assert!(g.hermitian_defect() <= 1e-10 * g.norm());
    let (vals, _) = dense_hermitian_eigen(&g.entries, g.dim()).unwrap();
    assert!(vals[0] >= -1e-10 * g.norm());
    let zero = vec![0.0; c.len()];
    let g0 = assemble_gramian_potential(&o, &zero, t, dt).unwrap();
    let (v0, _) = dense_hermitian_eigen(&g0.entries, g0.dim()).unwrap();
    assert!(v0[0] >= -1e-10 * g0.norm());

    let m = Manifold::unit_torus();
    let fine = Collocation::new(128, basis.periods);
    let bv = fine.sample(|x| b.evaluate(&m, x));
    let n = basis.len();
    let y = random(2 * n, 11);
    let plus: Vec<C64> = (0..n).map(|k| y[k] / basis.lambda[k]).collect();
    let minus: Vec<C64> = (0..n).map(|k| y[n + k] / basis.lambda[k]).collect();
    let init = basis.unsplit_sigma(&crate::spectral::SplitPair { plus, minus });
    let run = crate::spectral::solve_potential(&basis, &grid, &init, &c, t, dt, 1).unwrap();
    let w = simpson_weights(run.states.len(), t);
    let mut direct = 0.0;
    for (st, wj) in run.states.iter().zip(&w) {
        let mut form = 0.0;
        let grads: Vec<Vec<C64>> = (0..2)
            .map(|d| {
                st.v0
                    .iter()
                    .zip(&basis.modes)
                    .map(|(a, k)| a * C64::new(0.0, std::f64::consts::TAU * k[d] as f64 / basis.periods[d]))
                    .collect()
            })
            .collect();
        for f in [&st.v0, &grads[0], &grads[1]] {
            let vals = fine.to_values(&basis, f);
            form += vals.iter().zip(&bv).map(|(a, c)| (a * c).norm_sqr()).sum::<f64>() * fine.area()
                / (fine.n * fine.n) as f64;
        }
        direct += wj * form;
    }
    let q = g.quadratic(&y);
    assert!((q - direct).abs() <= 1e-6 * direct, "{q} {direct}");
}

#[test]
fn egorov_constant_symbol_is_exact() {
    let m = Manifold::unit_torus();
    let rho = PhasePoint::new([0.2, 0.4], [0.6, 0.8]);
    let r = egorov_probe(&m, |_| 1.0, 0.3, &rho, 6.0, 16).unwrap();
    assert!(r.error < 1e-12);
    assert!(egorov_probe(&m, |_| 1.0, 0.3, &rho, 6.0, 8).is_err());
}

#[test]
fn smoothing_constant_observation_closed_form() {
    let m = Manifold::unit_torus();
    let t = 0.9;
    let rows =
        smoothing_probe(&m, &ObservationFunction::everywhere(1.0), t, 0.0, &[2, 4], 1e-9, &EigenOptions::default())
            .unwrap();
    for r in &rows {
        let basis = SpectralBasis::new(r.k_max, [1.0, 1.0]).unwrap();
        let off = basis.lambda.iter().map(|l| (t * l).sin().abs()).fold(0.0, f64::max);
        let diag = basis.lambda_max() * t;
        assert!((r.off_diagonal - off).abs() < 1e-10, "{} {off}", r.off_diagonal);
        assert!((r.diagonal - diag).abs() < 1e-9 * diag);
        assert!(r.off_diagonal <= 1.0);
    }
    assert!(rows[1].diagonal > rows[0].diagonal);
}
