use super::config::{ExperimentConfig, ExperimentKind, GramianMode};
use super::output::{Assertion, Cell, Table};
use crate::control_times::{
    equality_case_diagnostic, k_general, k_of_t, t_comparison, t_gcc, ComparisonOptions, Regime, SpaceTimeField,
};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, PhasePoint};
use crate::gramian::{
    assemble_gramian, assemble_gramian_potential, cost_scan, damped_beam_probe, dense_hermitian_eigen, egorov_probe,
    gramian_for, hum_control, observability_report, shell_scan, smoothing_probe, EigenOptions, GramianApply,
    GramianOperator, HumOptions, Observation, ReportOptions,
};
use crate::regions::{Component, ObservationFunction};
use crate::spectral::{potential_growth_rate, CauchyPair, SpectralBasis, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Tables, assertions and a JSON summary produced by one experiment.
pub struct Outcome {
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    pub summary: Value,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    m: Manifold,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = cfg.manifold.build()?;
    cfg.region.validate_for(&m)?;
    if cfg.experiment.needs_flat_torus() && !matches!(m, Manifold::FlatTorus { .. }) {
        return Err(Error::InvalidInput(format!(
            "{} runs the wave solvers and needs a flat torus, got {}",
            cfg.experiment.name(),
            m.name()
        )));
    }
    let ctx = Ctx { cfg, m };
    let out = match cfg.experiment {
        ExperimentKind::KofTScan => kof_t_scan(&ctx),
        ExperimentKind::Tgcc => tgcc(&ctx),
        ExperimentKind::TimesCompare => times_compare(&ctx),
        ExperimentKind::LowerBound => lower_bound(&ctx),
        ExperimentKind::Shell => shell(&ctx),
        ExperimentKind::BlowupScan => blowup_scan(&ctx),
        ExperimentKind::Hum => hum(&ctx),
        ExperimentKind::PotentialScan => potential_scan(&ctx),
        ExperimentKind::DampedBeam => damped_beam(&ctx),
        ExperimentKind::Egorov => egorov(&ctx),
        ExperimentKind::Smoothing => smoothing(&ctx),
    };
    out.map_err(|e| e.context(format!("experiment {}", cfg.experiment.name())))
}

fn rho_cells(p: &PhasePoint) -> Vec<Cell> {
    vec![p.x[0].into(), p.x[1].into(), p.xi[0].into(), p.xi[1].into()]
}

fn eig_options(ctx: &Ctx) -> EigenOptions {
    EigenOptions { tol: ctx.cfg.solver.eig_tol, max_iter: ctx.cfg.solver.eig_max_iter, check_every: 10 }
}

fn report_options(ctx: &Ctx) -> ReportOptions {
    ReportOptions {
        nx: ctx.cfg.solver.nx,
        na: ctx.cfg.solver.na,
        beam_k: ctx.cfg.solver.beam_k,
        tol_beam: ctx.cfg.params.tol_beam,
        eig: eig_options(ctx),
    }
}

fn observation(ctx: &Ctx, s: f64) -> Result<Arc<Observation>> {
    let sv = &ctx.cfg.solver;
    Ok(Arc::new(Observation::new(&ctx.m, &ctx.cfg.region, sv.k_max, s, sv.tail_tol)?))
}

fn gramian(ctx: &Ctx, obs: Arc<Observation>, t: f64) -> Result<Box<dyn GramianApply>> {
    match ctx.cfg.solver.gramian {
        GramianMode::Auto => gramian_for(obs, t),
        GramianMode::Dense => Ok(Box::new(assemble_gramian(&obs, t)?)),
        GramianMode::MatrixFree => Ok(Box::new(GramianOperator::new(obs, t)?)),
    }
}

fn gcc_time(ctx: &Ctx) -> Result<f64> {
    let p = &ctx.cfg.params;
    if let Some(t) = p.t_gcc {
        return Ok(t);
    }
    let sv = &ctx.cfg.solver;
    let r = t_gcc(&ctx.m, &ctx.cfg.region, p.t_max, p.t_tol, sv.nx, sv.na)?;
    if !r.value.is_finite() {
        return Err(Error::InvalidInput("T_GCC is infinite; horizons must be given explicitly".into()));
    }
    Ok(r.value)
}

/// Explicit horizons, or multiples of `T_GCC`; the second value is `T_GCC`
/// when it was needed.
fn horizons(ctx: &Ctx, default_factors: &[f64]) -> Result<(Vec<f64>, Option<f64>)> {
    let p = &ctx.cfg.params;
    if !p.horizons.is_empty() {
        return Ok((p.horizons.clone(), p.t_gcc));
    }
    let factors = if p.horizon_factors.is_empty() { default_factors } else { &p.horizon_factors };
    let tg = gcc_time(ctx)?;
    Ok((factors.iter().map(|f| f * tg).collect(), Some(tg)))
}

fn random_data(basis: &SpectralBasis, modes: i32, seed: u64) -> CauchyPair {
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

fn kof_t_scan(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let ts: Vec<f64> = if p.horizons.is_empty() {
        let n = sv.n_time.max(1);
        (1..=n).map(|i| p.t_max * i as f64 / n as f64).collect()
    } else {
        p.horizons.clone()
    };
    let mut table = Table::new("kofT", &["T", "K", "K_over_T", "x1", "x2", "xi1", "xi2"]);
    let mut values = Vec::new();
    for &t in &ts {
        let k = k_of_t(&ctx.m, &ctx.cfg.region, t, sv.nx, sv.na)?;
        let mut row = vec![t.into(), k.value.into(), (if t > 0.0 { k.value / t } else { 0.0 }).into()];
        row.extend(rho_cells(&k.minimizer));
        table.push(row);
        values.push(k.value);
    }
    let amp2 = ctx.cfg.region.amplitude.powi(2);
    let bounded = values.iter().zip(&ts).all(|(k, t)| *k >= -1e-12 && *k <= amp2 * t * (1.0 + 1e-9) + 1e-12);
    let monotone = values.windows(2).zip(ts.windows(2)).all(|(v, t)| t[1] < t[0] || v[1] >= v[0] - 1e-9 * t[1]);
    let mut tables = vec![table];
    let mut assertions = vec![
        Assertion::new("k_bounded", bounded, "0 <= K(T) <= amplitude^2 T"),
        Assertion::new("k_nondecreasing", monotone, "K nondecreasing along increasing horizons"),
    ];
    let lot = &ctx.cfg.lower_order;
    if !(lot.b0.is_zero() && lot.b1.iter().all(SpaceTimeField::is_zero)) {
        let mut weighted = Table::new("kofT_weighted", &["T", "K_general", "min_plus", "min_minus", "gap"]);
        let mut worst = 0.0f64;
        for &t in &ts {
            let g = k_general(&ctx.m, &ctx.cfg.region, lot, t, sv.nx, sv.na)?;
            let gap = (g.plus.value - g.minus.value).abs();
            worst = worst.max(gap);
            weighted.push(vec![t.into(), g.value.into(), g.plus.value.into(), g.minus.value.into(), gap.into()]);
        }
        assertions.push(Assertion::new("sign_minima_agree", worst <= 1e-4, format!("max |min g+ - min g-| = {worst}")));
        tables.push(weighted);
    }
    Ok(Outcome { tables, assertions, summary: json!({ "horizons": ts, "k": values }) })
}

fn expect(name: &str, value: f64, expected: Option<f64>, tol: f64, out: &mut Vec<Assertion>) {
    if let Some(e) = expected {
        out.push(Assertion::new(name, (value - e).abs() <= tol, format!("{value} vs expected {e} +/- {tol}")));
    }
}

fn tgcc(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let b = &ctx.cfg.region;
    let r = t_gcc(&ctx.m, b, p.t_max, p.t_tol, sv.nx, sv.na)?;
    let cert = serde_json::to_value(r.certificate).unwrap_or(Value::Null);
    let cert_name = cert.as_str().unwrap_or("").to_string();
    let mut table = Table::new("tgcc", &["T_GCC", "x1", "x2", "xi1", "xi2", "certificate"]);
    let mut row = vec![Cell::from(r.value)];
    row.extend(rho_cells(&r.ray));
    row.push(cert_name.clone().into());
    table.push(row);
    let mut assertions = Vec::new();
    expect("t_gcc_expected", r.value, p.expect_t_gcc, p.expect_tol, &mut assertions);
    let mut tables = vec![table];
    if r.value.is_infinite() {
        let mut kt = Table::new("trapped", &["T", "K", "ray_average", "threshold"]);
        let hs = if p.trapped_horizons.is_empty() { vec![p.t_max] } else { p.trapped_horizons.clone() };
        let mut all = true;
        for t in hs {
            let k = k_of_t(&ctx.m, b, t, sv.nx, sv.na)?.value;
            let along = crate::control_times::geodesic_average(&ctx.m, b, &r.ray, t)?;
            all &= k <= 1e-8 && along <= 1e-8;
            kt.push(vec![t.into(), k.into(), along.into(), 1e-8.into()]);
        }
        assertions.push(Assertion::new("trapped_k_vanishes", all, "K(T) and the ray average <= 1e-8"));
        tables.push(kt);
    } else {
        let above = k_of_t(&ctx.m, b, r.value + p.t_tol, sv.nx, sv.na)?.value;
        assertions.push(Assertion::new(
            "k_positive_above",
            above > crate::control_times::zero_threshold(b, r.value + p.t_tol),
            format!("K(T_GCC + tol) = {above}"),
        ));
    }
    Ok(Outcome {
        tables,
        assertions,
        summary: json!({
            "t_gcc": if r.value.is_finite() { json!(r.value) } else { json!("+inf") },
            "ray": [r.ray.x[0], r.ray.x[1], r.ray.xi[0], r.ray.xi[1]],
            "certificate": cert,
        }),
    })
}

/// A random unobserved disk, in half of the draws with an observed ball
/// inside it, so that `T_GCC` is finite and may exceed `T_UC`.
fn random_region(m: &Manifold, rng: &mut ChaCha8Rng) -> ObservationFunction {
    let center = m.random_point(rng);
    let r0 = rng.gen_range(0.1..0.3);
    let mut comps = vec![Component::Hole { center, r0, r1: r0 + rng.gen_range(0.03..0.08) }];
    if rng.gen_bool(0.5) {
        let rb = rng.gen_range(0.02..0.3 * r0);
        let off = rng.gen_range(0.0..0.6 * r0);
        let ang = rng.gen_range(0.0..TAU);
        comps.push(Component::Ball {
            center: m.wrap([center[0] + off * ang.cos(), center[1] + off * ang.sin()]),
            r0: rb,
            r1: rb + 0.02,
        });
    }
    ObservationFunction { components: comps, amplitude: 1.0 }
}

fn times_compare(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let opts = ComparisonOptions {
        resolution: sv.resolution,
        t_max: p.t_max,
        tol: p.t_tol,
        nx: sv.nx,
        na: sv.na,
        equality_tol: p.equality_tol,
    };
    let mut regions = vec![("configured".to_string(), ctx.cfg.region.clone())];
    if p.random_configs > 0 {
        if !ctx.m.is_torus() {
            return Err(Error::InvalidInput("random configurations are generated on tori".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
        regions = (0..p.random_configs).map(|i| (format!("random-{i}"), random_region(&ctx.m, &mut rng))).collect();
    }
    let mut table =
        Table::new("times", &["config", "T_UC", "T_GCC", "tolerance", "regime", "x_star1", "x_star2", "holds"]);
    let mut assertions = Vec::new();
    let mut summary = Vec::new();
    let mut fan = None;
    for (name, b) in &regions {
        match t_comparison(&ctx.m, b, &opts) {
            Ok(c) => {
                let regime = match c.regime {
                    Regime::Equality => "equality",
                    Regime::Strict => "strict",
                };
                table.push(vec![
                    name.as_str().into(),
                    c.t_uc.into(),
                    c.t_gcc.into(),
                    c.tolerance.into(),
                    regime.into(),
                    c.x_star[0].into(),
                    c.x_star[1].into(),
                    true.into(),
                ]);
                assertions.push(Assertion::new(
                    format!("t_uc_le_t_gcc[{name}]"),
                    true,
                    format!("T_UC = {} <= T_GCC = {} + {}", c.t_uc, c.t_gcc, c.tolerance),
                ));
                if p.random_configs == 0 {
                    expect("t_uc_expected", c.t_uc, p.expect_t_uc, p.expect_tol, &mut assertions);
                    expect("t_gcc_expected", c.t_gcc, p.expect_t_gcc, p.expect_tol, &mut assertions);
                    if c.regime == Regime::Equality {
                        let d = equality_case_diagnostic(&ctx.m, b, c.x_star, sv.na)?;
                        let mut t = Table::new("equality_fan", &["angle", "exit_time", "radius"]);
                        for (j, e) in d.exit_times.iter().enumerate() {
                            t.push(vec![(TAU * j as f64 / sv.na as f64).into(), (*e).into(), d.radius.into()]);
                        }
                        assertions.push(Assertion::new(
                            "equality_diagnostic",
                            d.passes(p.equality_diag_tol),
                            format!("max |exit - R0| = {} (tol {})", d.max_violation, p.equality_diag_tol),
                        ));
                        fan = Some(t);
                    }
                }
                summary.push(json!({ "config": name, "t_uc": c.t_uc, "t_gcc": finite_or_inf(c.t_gcc) }));
            }
            Err(Error::Inconsistency(msg)) => {
                table.push(vec![
                    name.as_str().into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    "violated".into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    false.into(),
                ]);
                assertions.push(Assertion::new(format!("t_uc_le_t_gcc[{name}]"), false, msg));
            }
            Err(e) => return Err(e.context(name.clone())),
        }
    }
    let mut tables = vec![table];
    tables.extend(fan);
    Ok(Outcome { tables, assertions, summary: Value::Array(summary) })
}

fn finite_or_inf(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("+inf")
    }
}

fn lower_bound(ctx: &Ctx) -> Result<Outcome> {
    let p = &ctx.cfg.params;
    let (ts, tg) = horizons(ctx, &[1.2, 1.5, 2.0])?;
    let obs = observation(ctx, ctx.cfg.solver.s)?;
    let opts = report_options(ctx);
    let mut table = Table::new(
        "lower_bound",
        &[
            "T",
            "K",
            "beam_average",
            "beam_rayleigh",
            "beam_relative_error",
            "lambda_min",
            "residual",
            "converged",
            "c_obs_discrete",
            "tol_beam",
            "bound_holds",
        ],
    );
    let mut assertions = Vec::new();
    let mut reports = Vec::new();
    for &t in &ts {
        let r = observability_report(&ctx.m, &ctx.cfg.region, obs.clone(), t, &opts)?;
        table.push(vec![
            t.into(),
            r.k_of_t.into(),
            r.beam_average.into(),
            r.beam_rayleigh.into(),
            r.beam_relative_error.into(),
            r.lambda_min.value.into(),
            r.lambda_min.residual.into(),
            r.lambda_min.converged.into(),
            r.c_obs_discrete.into(),
            r.tol_beam.into(),
            r.lower_bound_check.into(),
        ]);
        assertions.push(Assertion::new(
            format!("lower_bound[T={t:.6}]"),
            r.lower_bound_check,
            format!("lambda_min = {} vs K + tol = {}", r.lambda_min.value, r.k_of_t + r.tol_beam),
        ));
        assertions.push(Assertion::new(
            format!("beam_accuracy[T={t:.6}]"),
            r.beam_relative_error <= p.beam_rel_tol,
            format!("relative error {} (tol {})", r.beam_relative_error, p.beam_rel_tol),
        ));
        reports.push(serde_json::to_value(r).unwrap_or(Value::Null));
    }
    Ok(Outcome {
        tables: vec![table],
        assertions,
        summary: json!({ "t_gcc": tg, "tail": obs.tail, "reports": reports }),
    })
}

fn shell(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let (ts, tg) = horizons(ctx, &[1.5])?;
    let t = ts[0];
    let k = k_of_t(&ctx.m, &ctx.cfg.region, t, sv.nx, sv.na)?.value;
    let obs = observation(ctx, sv.s)?;
    let lmax = obs.basis.periods[0].max(obs.basis.periods[1]);
    let kappas: Vec<f64> = p.shell_modes.iter().map(|&m| (TAU * m as f64 / lmax).powi(2) * (1.0 - 1e-12)).collect();
    let g = gramian(ctx, obs, t)?;
    let scan = shell_scan(g.as_ref(), k, &kappas, p.shell_samples, ctx.cfg.seed, &eig_options(ctx))?;
    let mut table =
        Table::new("shell", &["level", "kappa", "lambda_min", "residual", "converged", "ratio", "c0_empirical"]);
    for (m, l) in p.shell_modes.iter().zip(&scan.levels) {
        table.push(vec![
            (*m as usize).into(),
            l.kappa.into(),
            l.lambda_min.value.into(),
            l.lambda_min.residual.into(),
            l.lambda_min.converged.into(),
            l.ratio.into(),
            l.c0_empirical.into(),
        ]);
    }
    let stabilized = scan.stabilized.map(|i| scan.levels[i].ratio);
    let assertions = vec![
        Assertion::new("shell_nondecreasing", scan.nondecreasing, "lambda_min nondecreasing in kappa"),
        Assertion::new(
            "shell_ratio_at_stabilized",
            stabilized.is_some_and(|r| r >= p.shell_ratio_min),
            format!("ratio at stabilized level {stabilized:?} (min {})", p.shell_ratio_min),
        ),
    ];
    Ok(Outcome {
        tables: vec![table],
        assertions,
        summary: json!({ "t_gcc": tg, "horizon": t, "k_of_t": k, "stabilized": scan.stabilized }),
    })
}

fn blowup_scan(ctx: &Ctx) -> Result<Outcome> {
    let p = &ctx.cfg.params;
    let (ts, tg) = horizons(ctx, &[1.1, 1.2, 1.5, 2.0, 3.0])?;
    let obs = observation(ctx, ctx.cfg.solver.s)?;
    let data = random_data(&obs.basis, p.data_modes, ctx.cfg.seed);
    let hum = HumOptions { tol: p.hum_tol, ..HumOptions::default() };
    let scan = cost_scan(&ctx.m, &ctx.cfg.region, obs, &ts, &data, &report_options(ctx), &hum)?;
    let mut table = Table::new(
        "blowup",
        &["T", "K", "lambda_min", "c_obs_discrete", "hum_cost", "tol", "bound_holds", "log_c_obs", "inverse_K"],
    );
    for r in &scan.rows {
        table.push(vec![
            r.horizon.into(),
            r.k_of_t.into(),
            r.lambda_min.into(),
            r.c_obs_discrete.into(),
            r.hum_cost.into(),
            r.tol.into(),
            r.bound_holds.into(),
            r.log_c_obs.into(),
            r.inverse_k.into(),
        ]);
    }
    Ok(Outcome {
        tables: vec![table],
        assertions: vec![
            Assertion::new("lambda_min_nondecreasing", scan.monotone, "lambda_min nondecreasing in T"),
            Assertion::new("lower_bound_all", scan.all_bounds, "lambda_min <= K(T) + tol at every T"),
        ],
        summary: json!({ "t_gcc": tg }),
    })
}

fn hum(ctx: &Ctx) -> Result<Outcome> {
    let p = &ctx.cfg.params;
    let (ts, tg) = horizons(ctx, &[2.0])?;
    let t = ts[0];
    let obs = observation(ctx, ctx.cfg.solver.s)?;
    let data = random_data(&obs.basis, p.data_modes, ctx.cfg.seed);
    let g = gramian(ctx, obs.clone(), t)?;
    let opts = HumOptions { tol: p.hum_tol, ..HumOptions::default() };
    let r = hum_control(g.as_ref(), &obs, &data, &opts)?;
    let ratio = r.final_energy / r.initial_energy;
    let mut table = Table::new(
        "hum",
        &["T", "iterations", "relative_residual", "control_cost", "initial_energy", "final_energy", "energy_ratio"],
    );
    table.push(vec![
        t.into(),
        r.iterations.into(),
        r.relative_residual.into(),
        r.control_cost.into(),
        r.initial_energy.into(),
        r.final_energy.into(),
        ratio.into(),
    ]);
    let mut norms = Table::new("control_norm", &["t", "norm"]);
    for n in &r.control_norms {
        norms.push(vec![n[0].into(), n[1].into()]);
    }
    Ok(Outcome {
        tables: vec![table, norms],
        assertions: vec![
            Assertion::new(
                "controlled_to_rest",
                ratio <= p.hum_energy_tol,
                format!("final/initial energy {ratio} (tol {})", p.hum_energy_tol),
            ),
            Assertion::new(
                "cg_converged",
                r.relative_residual <= p.hum_tol,
                format!("relative residual {}", r.relative_residual),
            ),
        ],
        summary: json!({ "t_gcc": tg, "horizon": t, "cost": r.control_cost }),
    })
}

fn potential_scan(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let periods = ctx.m.periods().unwrap_or([1.0, 1.0]);
    let growth_basis = SpectralBasis::new(p.growth_k, periods)?;
    let obs = Observation::new(&ctx.m, &ctx.cfg.region, p.potential_k, 0.0, sv.tail_tol)?;
    let omega_max = obs.basis.kappa_max().sqrt();
    let mut table = Table::new(
        "potential",
        &["r", "sqrt_r", "growth_rate", "relative_error", "lambda_min", "lambda_max", "resolved", "c_obs_discrete"],
    );
    let mut assertions = Vec::new();
    for &r in &p.depths {
        let rate = potential_growth_rate(&growth_basis, r)?;
        let rel = (rate / r.sqrt() - 1.0).abs();
        let dt = sv.dt.min(0.01 / r.sqrt()).min(0.5 / (omega_max * omega_max + 1.0).sqrt());
        let c = vec![-r; obs.grid.n * obs.grid.n];
        let g = assemble_gramian_potential(&obs, &c, p.potential_horizon, dt)?;
        let (vals, _) = dense_hermitian_eigen(&g.entries, g.dim())?;
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        // Below this the smallest eigenvalue is rounding noise.
        let resolved = lo > 1e-12 * hi;
        table.push(vec![
            r.into(),
            r.sqrt().into(),
            rate.into(),
            rel.into(),
            lo.into(),
            hi.into(),
            resolved.into(),
            (if resolved { 1.0 / lo } else { f64::INFINITY }).into(),
        ]);
        assertions.push(Assertion::new(
            format!("growth_rate[r={r}]"),
            rel <= p.growth_rel_tol,
            format!("rate {rate} vs sqrt(r) = {} (rel {rel})", r.sqrt()),
        ));
    }
    Ok(Outcome {
        tables: vec![table],
        assertions,
        summary: json!({ "horizon": p.potential_horizon, "k_max": p.potential_k }),
    })
}

fn damped_beam(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let rho = PhasePoint::new([p.rho[0], p.rho[1]], [p.rho[2], p.rho[3]]);
    let r = damped_beam_probe(&ctx.m, &ctx.cfg.region, &rho, sv.beam_k, sv.k_max, p.time, sv.dt, sv.nx, sv.na)?;
    let mut table = Table::new(
        "damped_beam",
        &["T", "energy_ratio", "ray_integral", "sup_integral", "inf_integral", "epsilon", "lower", "upper", "inside"],
    );
    table.push(vec![
        p.time.into(),
        r.energy_ratio.into(),
        r.ray_integral.into(),
        r.sup_integral.into(),
        r.inf_integral.into(),
        r.low_frequency_residue.into(),
        r.lower.into(),
        r.upper.into(),
        r.inside.into(),
    ]);
    Ok(Outcome {
        tables: vec![table],
        assertions: vec![Assertion::new(
            "damped_sandwich",
            r.inside,
            format!("{} in [{}, {}]", r.energy_ratio, r.lower, r.upper),
        )],
        summary: serde_json::to_value(r).unwrap_or(Value::Null),
    })
}

fn egorov(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let periods = ctx.m.field_periods();
    let rho = PhasePoint::new([p.rho[0], p.rho[1]], [p.rho[2], p.rho[3]]);
    let a = |x: [f64; 2]| p.symbol.eval(x, periods);
    let mut table = Table::new("egorov", &["k", "numeric", "transported", "error"]);
    let mut errors = Vec::new();
    for &k in &p.beam_ks {
        let r = egorov_probe(&ctx.m, a, p.time, &rho, k, sv.k_max)?;
        table.push(vec![k.into(), r.numeric.into(), r.transported.into(), r.error.into()]);
        errors.push(r.error);
    }
    let k0 = p.beam_ks.first().copied().unwrap_or(16.0);
    let one = egorov_probe(&ctx.m, |_| 1.0, p.time, &rho, k0, sv.k_max)?;
    let mut assertions =
        vec![Assertion::new("constant_symbol_exact", one.error <= 1e-12, format!("error {}", one.error))];
    if errors.len() >= 2 {
        let (first, last) = (errors[0], errors[errors.len() - 1]);
        assertions.push(Assertion::new(
            "error_decreases",
            last <= p.egorov_ratio * first,
            format!("error {last} at the largest k vs {first} at the smallest (ratio {})", p.egorov_ratio),
        ));
    }
    Ok(Outcome { tables: vec![table], assertions, summary: json!({ "errors": errors, "constant_error": one.error }) })
}

fn smoothing(ctx: &Ctx) -> Result<Outcome> {
    let (p, sv) = (&ctx.cfg.params, &ctx.cfg.solver);
    let t = p.horizons.first().copied().unwrap_or(p.time);
    let eig = eig_options(ctx);
    let rows = smoothing_probe(&ctx.m, &ctx.cfg.region, t, sv.s, &p.k_list, sv.tail_tol, &eig)?;
    let mut table = Table::new("smoothing", &["k_max", "lambda_max", "off_diagonal", "diagonal"]);
    for r in &rows {
        table.push(vec![r.k_max.into(), r.lambda_max.into(), r.off_diagonal.into(), r.diagonal.into()]);
    }
    let k0 = p.k_list.first().copied().unwrap_or(8);
    let one = smoothing_probe(&ctx.m, &ObservationFunction::everywhere(1.0), t, sv.s, &[k0], sv.tail_tol, &eig)?;
    let mut assertions = vec![Assertion::new(
        "constant_closed_form",
        one[0].off_diagonal <= 1.0 + 1e-10,
        format!("off-diagonal norm {} for b = 1", one[0].off_diagonal),
    )];
    if rows.len() >= 2 {
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        assertions.push(Assertion::new(
            "off_diagonal_bounded",
            last.off_diagonal <= p.smoothing_ratio * first.off_diagonal,
            format!("{} vs {} x {}", last.off_diagonal, p.smoothing_ratio, first.off_diagonal),
        ));
        assertions.push(Assertion::new(
            "diagonal_grows",
            rows.windows(2).all(|w| w[1].diagonal > w[0].diagonal),
            "diagonal contrast increases with lambda_max",
        ));
    }
    Ok(Outcome { tables: vec![table], assertions, summary: json!({ "horizon": t }) })
}
