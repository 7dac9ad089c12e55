//! Model surfaces, the geodesic flow of `lambda(x, xi) = |xi|_x` on the
//! cotangent bundle, Riemannian distances and cosphere sampling.

mod perturbed;
mod sphere;

pub use perturbed::{DistanceField, PerturbedTorus};

use crate::error::{ensure_finite, Error, Result};
use crate::numerics::TrigPoly;
use rand::Rng;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

/// A chart point. Torus kinds use `(x1, x2)` in `[0, L1) x [0, L2)`; the
/// sphere uses `(theta, phi)` with `theta` the polar angle from the north pole.
pub type Point = [f64; 2];

/// A cotangent vector `(x, xi)` in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: Point,
    pub xi: [f64; 2],
}

impl PhasePoint {
    pub fn new(x: Point, xi: [f64; 2]) -> Self {
        Self { x, xi }
    }

    /// The involution `(x, xi) -> (x, -xi)`.
    pub fn reflect(&self) -> Self {
        Self { x: self.x, xi: [-self.xi[0], -self.xi[1]] }
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub samples: Vec<(f64, PhasePoint)>,
    pub step: f64,
}

impl FlowTrajectory {
    pub fn positions(&self) -> impl Iterator<Item = Point> + '_ {
        self.samples.iter().map(|(_, p)| p.x)
    }
}

/// A compact model surface.
#[derive(Debug, Clone)]
pub enum Manifold {
    FlatTorus { periods: [f64; 2] },
    RoundSphere,
    PerturbedTorus(Arc<PerturbedTorus>),
}

pub const DEFAULT_DISTANCE_RESOLUTION: usize = 256;

impl Manifold {
    pub fn flat_torus(l1: f64, l2: f64) -> Result<Self> {
        ensure_finite("torus periods", &[l1, l2])?;
        if l1 <= 0.0 || l2 <= 0.0 {
            return Err(Error::InvalidInput(format!("torus periods must be positive, got ({l1}, {l2})")));
        }
        Ok(Manifold::FlatTorus { periods: [l1, l2] })
    }

    pub fn unit_torus() -> Self {
        Manifold::FlatTorus { periods: [1.0, 1.0] }
    }

    pub fn round_sphere() -> Self {
        Manifold::RoundSphere
    }

    /// Torus with metric `e^{2u} (dx1^2 + dx2^2)`. `resolution` is the grid
    /// size used for distances.
    pub fn perturbed_torus(periods: [f64; 2], u: TrigPoly, resolution: usize) -> Result<Self> {
        Ok(Manifold::PerturbedTorus(Arc::new(PerturbedTorus::new(periods, u, resolution)?)))
    }

    pub fn dimension(&self) -> usize {
        2
    }

    pub fn is_torus(&self) -> bool {
        !matches!(self, Manifold::RoundSphere)
    }

    /// Lattice periods for torus kinds.
    pub fn periods(&self) -> Option<[f64; 2]> {
        match self {
            Manifold::FlatTorus { periods } => Some(*periods),
            Manifold::PerturbedTorus(m) => Some(m.periods),
            Manifold::RoundSphere => None,
        }
    }

    /// Periods used to evaluate trigonometric fields in chart coordinates.
    pub fn field_periods(&self) -> [f64; 2] {
        self.periods().unwrap_or([TAU, TAU])
    }

    /// Chart extent, used for spatial sampling grids.
    pub fn chart_extent(&self) -> [f64; 2] {
        self.periods().unwrap_or([PI, TAU])
    }

    pub fn name(&self) -> &'static str {
        match self {
            Manifold::FlatTorus { .. } => "flat-torus",
            Manifold::RoundSphere => "round-sphere",
            Manifold::PerturbedTorus(_) => "perturbed-torus",
        }
    }

    /// Canonical chart representative of a point.
    pub fn wrap(&self, x: Point) -> Point {
        match self {
            Manifold::FlatTorus { periods } => wrap_torus(x, *periods),
            Manifold::PerturbedTorus(m) => wrap_torus(x, m.periods),
            Manifold::RoundSphere => sphere::wrap(x),
        }
    }

    /// Chart displacement `a - b`, reduced modulo periods where the chart is periodic.
    pub fn chart_difference(&self, a: Point, b: Point) -> [f64; 2] {
        let per = match self {
            Manifold::RoundSphere => [f64::INFINITY, TAU],
            _ => self.periods().unwrap(),
        };
        let mut d = [a[0] - b[0], a[1] - b[1]];
        for i in 0..2 {
            if per[i].is_finite() {
                d[i] -= per[i] * (d[i] / per[i]).round();
            }
        }
        d
    }

    /// Pairing `xi(v)` of a covector with a chart vector.
    pub fn pairing(&self, p: &PhasePoint, v: [f64; 2]) -> f64 {
        p.xi[0] * v[0] + p.xi[1] * v[1]
    }

    /// Conformal scale `e^{u(x)}` of the metric; 1 for the flat torus. Not
    /// defined for the sphere, where it returns 1.
    pub fn conformal_scale(&self, x: Point) -> f64 {
        match self {
            Manifold::PerturbedTorus(m) => m.u.eval(x, m.periods).exp(),
            _ => 1.0,
        }
    }

    /// `lambda(x, xi) = sqrt(g*_x(xi, xi))`.
    pub fn lambda(&self, p: &PhasePoint) -> Result<f64> {
        ensure_finite("phase point", &[p.x[0], p.x[1], p.xi[0], p.xi[1]])?;
        Ok(self.lambda_unchecked(p))
    }

    pub(crate) fn lambda_unchecked(&self, p: &PhasePoint) -> f64 {
        match self {
            Manifold::FlatTorus { .. } => p.xi[0].hypot(p.xi[1]),
            Manifold::PerturbedTorus(m) => (-m.u.eval(p.x, m.periods)).exp() * p.xi[0].hypot(p.xi[1]),
            Manifold::RoundSphere => sphere::lambda(p),
        }
    }

    fn check_flow_input(&self, p: &PhasePoint, t: f64) -> Result<()> {
        ensure_finite("flow input", &[p.x[0], p.x[1], p.xi[0], p.xi[1], t])?;
        if !(self.lambda_unchecked(p) > 0.0) {
            return Err(Error::InvalidInput("geodesic flow needs lambda(p) > 0".into()));
        }
        Ok(())
    }

    /// The Hamiltonian flow `phi_t(p)` of `lambda`; negative `t` flows backward.
    pub fn flow(&self, p: &PhasePoint, t: f64) -> Result<PhasePoint> {
        self.check_flow_input(p, t)?;
        match self {
            Manifold::FlatTorus { periods } => Ok(flat_flow(p, t, *periods)),
            Manifold::RoundSphere => Ok(sphere::flow(p, t)),
            Manifold::PerturbedTorus(m) => m.flow(p, t),
        }
    }

    /// `n` uniform samples of `phi_t(p)` for `t` in `[0, duration]`.
    pub fn trajectory(&self, p: &PhasePoint, duration: f64, n: usize) -> Result<FlowTrajectory> {
        if !(duration >= 0.0) {
            return Err(Error::InvalidInput(format!("trajectory duration must be >= 0, got {duration}")));
        }
        self.trajectory_signed(p, duration, n)
    }

    /// `n` uniform samples of `phi_t(p)` for `t` between 0 and `t_end`, where
    /// `t_end` may be negative (backward flow). Sample times are stored signed.
    pub fn trajectory_signed(&self, p: &PhasePoint, t_end: f64, n: usize) -> Result<FlowTrajectory> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("trajectory needs n >= 2 samples, got {n}")));
        }
        self.check_flow_input(p, t_end)?;
        let step = t_end / (n - 1) as f64;
        let samples = match self {
            Manifold::FlatTorus { periods } => (0..n)
                .map(|i| {
                    let t = i as f64 * step;
                    (t, flat_flow(p, t, *periods))
                })
                .collect(),
            Manifold::RoundSphere => (0..n)
                .map(|i| {
                    let t = i as f64 * step;
                    (t, sphere::flow(p, t))
                })
                .collect(),
            Manifold::PerturbedTorus(m) => m.trajectory(p, t_end, n)?,
        };
        Ok(FlowTrajectory { samples, step: step.abs() })
    }

    /// Riemannian distance between chart points.
    pub fn distance(&self, x: Point, y: Point) -> Result<f64> {
        ensure_finite("distance input", &[x[0], x[1], y[0], y[1]])?;
        Ok(match self {
            Manifold::FlatTorus { periods } => flat_distance(x, y, *periods),
            Manifold::RoundSphere => sphere::distance(x, y),
            Manifold::PerturbedTorus(m) => m.distance(x, y),
        })
    }

    /// Cotangent vector at `x` with `lambda = 1` pointing along the unit
    /// direction of angle `angle` (measured in an orthonormal frame; on the
    /// sphere the frame is `(e_theta, e_phi)`).
    pub fn unit_covector(&self, x: Point, angle: f64) -> PhasePoint {
        let x = self.wrap(x);
        let (s, c) = angle.sin_cos();
        match self {
            Manifold::FlatTorus { .. } => PhasePoint::new(x, [c, s]),
            Manifold::PerturbedTorus(m) => {
                let e = m.u.eval(x, m.periods).exp();
                PhasePoint::new(x, [e * c, e * s])
            }
            Manifold::RoundSphere => PhasePoint::new(x, [c, x[0].sin() * s]),
        }
    }

    /// Residual of the two flow identities `sigma o phi_t = phi_{-t} o sigma`
    /// and `phi_t o phi_{-t} = id`. Torus kinds measure it in chart
    /// coordinates modulo periods; the sphere measures it in its embedding,
    /// where the chart is singular at the poles.
    pub fn flow_involution_check(&self, p: &PhasePoint, t: f64) -> Result<f64> {
        let a = self.flow(p, t)?.reflect();
        let b = self.flow(&p.reflect(), -t)?;
        let c = self.flow(&self.flow(p, -t)?, t)?;
        Ok(self.phase_distance(&a, &b).max(self.phase_distance(&c, p)))
    }

    /// Max-norm discrepancy between two phase points.
    pub fn phase_distance(&self, a: &PhasePoint, b: &PhasePoint) -> f64 {
        match self {
            Manifold::RoundSphere => sphere::embedded_difference(a, b),
            _ => {
                let d = self.chart_difference(a.x, b.x);
                d[0].abs().max(d[1].abs()).max((a.xi[0] - b.xi[0]).abs()).max((a.xi[1] - b.xi[1]).abs())
            }
        }
    }

    /// Chart point of a uniform `n x n` spatial grid.
    pub fn grid_point(&self, i: usize, j: usize, n: usize) -> Point {
        match self {
            Manifold::RoundSphere => [PI * (i as f64 + 0.5) / n as f64, TAU * j as f64 / n as f64],
            _ => {
                let l = self.periods().unwrap();
                [l[0] * i as f64 / n as f64, l[1] * j as f64 / n as f64]
            }
        }
    }

    /// Deterministic product grid of `nx^2` points times `na` unit directions
    /// `theta_j = 2 pi j / na`, each normalized to `lambda = 1`.
    pub fn cosphere_sample(&self, nx: usize, na: usize) -> Vec<PhasePoint> {
        let mut out = Vec::with_capacity(nx * nx * na);
        for i in 0..nx {
            for j in 0..nx {
                let x = self.grid_point(i, j, nx);
                for a in 0..na {
                    out.push(self.unit_covector(x, TAU * a as f64 / na as f64));
                }
            }
        }
        out
    }

    /// Random point, uniform with respect to the chart measure on tori and the
    /// area measure on the sphere.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            Manifold::RoundSphere => {
                let z: f64 = rng.gen_range(-1.0..1.0);
                [z.acos(), rng.gen_range(0.0..TAU)]
            }
            _ => {
                let l = self.periods().unwrap();
                [rng.gen_range(0.0..l[0]), rng.gen_range(0.0..l[1])]
            }
        }
    }

    pub fn random_cosphere<R: Rng + ?Sized>(&self, rng: &mut R) -> PhasePoint {
        let x = self.random_point(rng);
        self.unit_covector(x, rng.gen_range(0.0..TAU))
    }
}

fn wrap_torus(x: Point, l: [f64; 2]) -> Point {
    let mut y = [x[0].rem_euclid(l[0]), x[1].rem_euclid(l[1])];
    for i in 0..2 {
        if y[i] >= l[i] {
            y[i] = 0.0;
        }
    }
    y
}

fn flat_flow(p: &PhasePoint, t: f64, periods: [f64; 2]) -> PhasePoint {
    let n = p.xi[0].hypot(p.xi[1]);
    let x = [p.x[0] + t * p.xi[0] / n, p.x[1] + t * p.xi[1] / n];
    PhasePoint::new(wrap_torus(x, periods), p.xi)
}

fn flat_distance(x: Point, y: Point, l: [f64; 2]) -> f64 {
    let d0 = (x[0] - y[0]).rem_euclid(l[0]);
    let d1 = (x[1] - y[1]).rem_euclid(l[1]);
    let mut best = f64::INFINITY;
    for a in [-1.0, 0.0, 1.0] {
        for b in [-1.0, 0.0, 1.0] {
            let d = (d0 + a * l[0]).hypot(d1 + b * l[1]);
            if d < best {
                best = d;
            }
        }
    }
    best
}
