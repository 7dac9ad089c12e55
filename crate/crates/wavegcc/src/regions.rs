//! Smooth observation functions `b`, their supports `omega = {b != 0}`,
//! distances to `omega` and the finite-cover shrinking construction.

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{Manifold, Point};
use crate::numerics::optimize::golden_max;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2, TAU};

/// One bump of an observation function.
///
/// * `Ball`: equal to one on `d(x, center) <= r0`, zero for `d >= r1`.
/// * `Strip`: band in the coordinate `x_axis`; support `(a, a + w1)`, plateau
///   of width `w0` centred in the support. Torus kinds only.
/// * `Hole`: complement of a ball; zero on `d(x, center) <= r0`, one for `d >= r1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Component {
    Ball { center: Point, r0: f64, r1: f64 },
    Strip { axis: u8, a: f64, w0: f64, w1: f64 },
    Hole { center: Point, r0: f64, r1: f64 },
}

/// `b(x) = amplitude * (1 - prod_i (1 - beta_i(x)))` over the bump components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationFunction {
    pub components: Vec<Component>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// Smooth step: 1 for `tau <= 0`, 0 for `tau >= 1`, and
/// `f(1 - tau) / (f(tau) + f(1 - tau))` with `f(s) = exp(-1/s)` in between.
pub fn cutoff(tau: f64) -> f64 {
    if tau <= 0.0 {
        1.0
    } else if tau >= 1.0 {
        0.0
    } else {
        let f = |s: f64| (-1.0 / s).exp();
        let a = f(1.0 - tau);
        a / (a + f(tau))
    }
}

fn periodic_gap(x: f64, c: f64, period: f64) -> f64 {
    let d = (x - c).rem_euclid(period);
    d.min(period - d)
}

impl Component {
    fn validate(&self, m: &Manifold) -> Result<()> {
        match *self {
            Component::Ball { center, r0, r1 } | Component::Hole { center, r0, r1 } => {
                ensure_finite("component", &[center[0], center[1], r0, r1])?;
                if !(r0 >= 0.0 && r0 < r1) {
                    return Err(Error::InvalidRegion(format!("radii must satisfy 0 <= r0 < r1, got r0={r0}, r1={r1}")));
                }
            }
            Component::Strip { axis, a, w0, w1 } => {
                ensure_finite("strip", &[a, w0, w1])?;
                if axis != 1 && axis != 2 {
                    return Err(Error::InvalidRegion(format!("strip axis must be 1 or 2, got {axis}")));
                }
                if !(w0 >= 0.0 && w0 < w1) {
                    return Err(Error::InvalidRegion(format!(
                        "strip widths must satisfy 0 <= w0 < w1, got w0={w0}, w1={w1}"
                    )));
                }
                match m.periods() {
                    None => return Err(Error::InvalidRegion("strips are only defined on torus kinds".into())),
                    Some(l) if w1 >= l[axis as usize - 1] => {
                        return Err(Error::InvalidRegion("strip wider than the torus".into()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn strip_gap(m: &Manifold, x: Point, axis: u8, a: f64, w1: f64) -> f64 {
        let k = axis as usize - 1;
        let period = m.chart_extent()[k];
        periodic_gap(x[k], a + 0.5 * w1, period)
    }

    /// Bump value in `[0, 1]`.
    pub fn value(&self, m: &Manifold, x: Point) -> f64 {
        match *self {
            Component::Ball { center, r0, r1 } => {
                let d = m.distance(x, center).unwrap_or(f64::NAN);
                cutoff((d - r0) / (r1 - r0))
            }
            Component::Hole { center, r0, r1 } => {
                let d = m.distance(x, center).unwrap_or(f64::NAN);
                1.0 - cutoff((d - r0) / (r1 - r0))
            }
            Component::Strip { axis, a, w0, w1 } => {
                let g = Self::strip_gap(m, x, axis, a, w1);
                cutoff((g - 0.5 * w0) / (0.5 * (w1 - w0)))
            }
        }
    }

    /// Distance from `x` to the open support of the component.
    pub fn distance_to_support(&self, m: &Manifold, x: Point) -> f64 {
        match *self {
            Component::Ball { center, r1, .. } => (m.distance(x, center).unwrap_or(f64::NAN) - r1).max(0.0),
            Component::Hole { center, r0, .. } => (r0 - m.distance(x, center).unwrap_or(f64::NAN)).max(0.0),
            Component::Strip { axis, a, w1, .. } => (Self::strip_gap(m, x, axis, a, w1) - 0.5 * w1).max(0.0),
        }
    }

    /// Distance from a point of the support to the complement of the support.
    fn depth(&self, m: &Manifold, y: Point) -> f64 {
        match *self {
            Component::Ball { center, r1, .. } => r1 - m.distance(y, center).unwrap_or(f64::NAN),
            Component::Hole { center, r0, .. } => m.distance(y, center).unwrap_or(f64::NAN) - r0,
            Component::Strip { axis, a, w1, .. } => 0.5 * w1 - Self::strip_gap(m, y, axis, a, w1),
        }
    }

    /// A point of the support within `dist(z, support) + delta` of `z`.
    fn point_inside_near(&self, m: &Manifold, z: Point, eps: f64) -> Point {
        match *self {
            Component::Ball { center, r1, .. } => {
                let delta = (eps / 8.0).min(0.5 * r1);
                let d = m.distance(z, center).unwrap_or(f64::NAN);
                if d < r1 - delta {
                    z
                } else {
                    point_at_radius(m, center, z, r1 - delta)
                }
            }
            Component::Hole { center, r0, .. } => {
                let delta = eps / 8.0;
                let d = m.distance(z, center).unwrap_or(f64::NAN);
                if d > r0 + delta {
                    z
                } else {
                    point_at_radius(m, center, z, r0 + delta)
                }
            }
            Component::Strip { axis, a, w1, .. } => {
                let delta = (eps / 8.0).min(0.25 * w1);
                let k = axis as usize - 1;
                let period = m.chart_extent()[k];
                let c = a + 0.5 * w1;
                let mut off = (z[k] - c).rem_euclid(period);
                if off > 0.5 * period {
                    off -= period;
                }
                let lim = 0.5 * w1 - delta;
                let mut y = z;
                y[k] = c + off.clamp(-lim, lim);
                m.wrap(y)
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Component::Ball { center, r0, r1 } => format!("ball(c=({},{}), r0={r0}, r1={r1})", center[0], center[1]),
            Component::Hole { center, r0, r1 } => format!("hole(c=({},{}), r0={r0}, r1={r1})", center[0], center[1]),
            Component::Strip { axis, a, w0, w1 } => format!("strip(axis={axis}, a={a}, w0={w0}, w1={w1})"),
        }
    }
}

/// Point on the minimizing path from `c` towards `z` at distance `r` from `c`.
fn point_at_radius(m: &Manifold, c: Point, z: Point, r: f64) -> Point {
    match m {
        Manifold::RoundSphere => {
            let d = m.distance(z, c).unwrap_or(0.0);
            let angle = if d > 1e-12 && d < PI - 1e-12 {
                let p = m.unit_covector(c, 0.0);
                // Direction from c to z found by scanning the cosphere fibre.
                let mut best = (f64::INFINITY, 0.0);
                for k in 0..720 {
                    let a = TAU * k as f64 / 720.0;
                    let q = m.flow(&m.unit_covector(c, a), d).map(|q| q.x).unwrap_or(p.x);
                    let e = m.distance(q, z).unwrap_or(f64::INFINITY);
                    if e < best.0 {
                        best = (e, a);
                    }
                }
                let (a, _) = golden_max(
                    |a| {
                        let q = m.flow(&m.unit_covector(c, a), d).map(|q| q.x).unwrap_or(p.x);
                        -m.distance(q, z).unwrap_or(f64::INFINITY)
                    },
                    best.1 - TAU / 720.0,
                    best.1 + TAU / 720.0,
                    60,
                );
                a
            } else {
                0.0
            };
            m.flow(&m.unit_covector(c, angle), r).map(|q| q.x).unwrap_or(c)
        }
        _ => {
            let mut dir = m.chart_difference(z, c);
            let len = dir[0].hypot(dir[1]);
            if len < 1e-14 {
                dir = [1.0, 0.0];
            } else {
                dir = [dir[0] / len, dir[1] / len];
            }
            let at = |s: f64| m.wrap([c[0] + s * dir[0], c[1] + s * dir[1]]);
            if let Manifold::FlatTorus { .. } = m {
                return at(r);
            }
            let (mut lo, mut hi) = (0.0, r);
            while m.distance(c, at(hi)).unwrap_or(0.0) < r && hi < 1e3 {
                hi *= 2.0;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if m.distance(c, at(mid)).unwrap_or(0.0) < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            at(0.5 * (lo + hi))
        }
    }
}

/// Result of the `sup_x dist(x, omega)` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargestDistance {
    pub value: f64,
    pub argmax: Point,
    /// Grid error bound `h * sqrt(2)`.
    pub error_bound: f64,
}

impl ObservationFunction {
    pub fn new(components: Vec<Component>, amplitude: f64) -> Result<Self> {
        let b = Self { components, amplitude };
        b.check()?;
        Ok(b)
    }

    pub fn single(component: Component) -> Self {
        Self { components: vec![component], amplitude: 1.0 }
    }

    /// `b` identically equal to `amplitude` on every model surface.
    pub fn everywhere(amplitude: f64) -> Self {
        Self { components: vec![Component::Ball { center: [0.0, 0.0], r0: 1e3, r1: 2e3 }], amplitude }
    }

    fn check(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidRegion("observation function has no components".into()));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidRegion(format!("amplitude must be positive, got {}", self.amplitude)));
        }
        Ok(())
    }

    /// Checks the components against a manifold.
    pub fn validate_for(&self, m: &Manifold) -> Result<()> {
        self.check()?;
        for c in &self.components {
            c.validate(m)?;
        }
        Ok(())
    }

    pub fn evaluate(&self, m: &Manifold, x: Point) -> f64 {
        let mut keep = 1.0;
        for c in &self.components {
            keep *= 1.0 - c.value(m, x);
            if keep == 0.0 {
                break;
            }
        }
        self.amplitude * (1.0 - keep)
    }

    pub fn dist_to_omega(&self, m: &Manifold, x: Point) -> Result<f64> {
        self.validate_for(m)?;
        ensure_finite("point", &x)?;
        Ok(self.dist_unchecked(m, x))
    }

    pub(crate) fn dist_unchecked(&self, m: &Manifold, x: Point) -> f64 {
        self.components.iter().map(|c| c.distance_to_support(m, x)).fold(f64::INFINITY, f64::min)
    }

    /// Lower bound for the distance from `y` to `M \ omega`.
    fn depth(&self, m: &Manifold, y: Point) -> f64 {
        self.components.iter().map(|c| c.depth(m, y)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(Component::describe).collect();
        format!("{} * [{}]", self.amplitude, parts.join(" + "))
    }

    /// Stable 64-bit FNV-1a hash of the canonical JSON form.
    pub fn fingerprint(&self) -> u64 {
        let s = serde_json::to_string(self).unwrap_or_default();
        s.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
    }
}

fn l_grid(m: &Manifold, res: usize) -> (Vec<Point>, f64) {
    match m {
        Manifold::RoundSphere => {
            let nt = res.max(2);
            let mut pts = Vec::with_capacity(nt * res);
            for i in 0..nt {
                for j in 0..res {
                    pts.push([PI * i as f64 / (nt - 1) as f64, TAU * j as f64 / res as f64]);
                }
            }
            (pts, (PI / (nt - 1) as f64).max(TAU / res as f64))
        }
        _ => {
            let l = m.periods().unwrap();
            let mut pts = Vec::with_capacity(res * res);
            for i in 0..res {
                for j in 0..res {
                    pts.push(m.grid_point(i, j, res));
                }
            }
            let scale = match m {
                Manifold::PerturbedTorus(p) => p.u.sup_bound().exp(),
                _ => 1.0,
            };
            (pts, scale * l[0].max(l[1]) / res as f64)
        }
    }
}

/// `L(M, omega) = sup_x dist(x, omega)` by a `resolution^2` grid search and
/// golden-section refinement along each chart axis.
pub fn cal_l(b: &ObservationFunction, m: &Manifold, resolution: usize) -> Result<LargestDistance> {
    b.validate_for(m)?;
    if resolution < 2 {
        return Err(Error::InvalidInput(format!("resolution must be >= 2, got {resolution}")));
    }
    let (pts, h) = l_grid(m, resolution);
    let values: Vec<f64> = pts.par_iter().map(|&x| b.dist_unchecked(m, x)).collect();
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let mut x = pts[best];
    let mut value = values[best];
    if value > 0.0 {
        let step = match m {
            Manifold::RoundSphere => [PI / (resolution - 1) as f64, TAU / resolution as f64],
            _ => {
                let l = m.periods().unwrap();
                [l[0] / resolution as f64, l[1] / resolution as f64]
            }
        };
        for _ in 0..3 {
            for k in 0..2 {
                let along = |s: f64| {
                    let mut y = x;
                    y[k] = s;
                    y
                };
                let (s, v) = golden_max(|s| b.dist_unchecked(m, along(s)), x[k] - step[k], x[k] + step[k], 40);
                if v > value {
                    value = v;
                    x = m.wrap(along(s));
                }
            }
        }
    }
    Ok(LargestDistance { value, argmax: x, error_bound: h * SQRT_2 })
}

/// Minimal unique-continuation time `2 L(M, omega)`.
pub fn t_uc(b: &ObservationFunction, m: &Manifold, resolution: usize) -> Result<f64> {
    Ok(2.0 * cal_l(b, m, resolution)?.value)
}

fn cover_centers(m: &Manifold, radius: f64) -> Vec<Point> {
    let spacing = radius * SQRT_2;
    match m {
        Manifold::RoundSphere => {
            let nt = (PI / spacing).ceil() as usize;
            let dt = PI / nt as f64;
            let mut out = Vec::new();
            for i in 0..nt {
                let theta = (i as f64 + 0.5) * dt;
                let band = (theta - 0.5 * dt).sin().max((theta + 0.5 * dt).sin());
                let band = if theta - 0.5 * dt < 0.5 * PI && theta + 0.5 * dt > 0.5 * PI { 1.0 } else { band };
                let np = ((TAU * band / spacing).ceil() as usize).max(1);
                for j in 0..np {
                    out.push([theta, TAU * (j as f64 + 0.5) / np as f64]);
                }
            }
            out
        }
        _ => {
            let l = m.periods().unwrap();
            let scale = match m {
                Manifold::PerturbedTorus(p) => p.u.sup_bound().exp(),
                _ => 1.0,
            };
            let n = [(l[0] * scale / spacing).ceil() as usize, (l[1] * scale / spacing).ceil() as usize];
            let mut out = Vec::with_capacity(n[0] * n[1]);
            for i in 0..n[0] {
                for j in 0..n[1] {
                    out.push([l[0] * (i as f64 + 0.5) / n[0] as f64, l[1] * (j as f64 + 0.5) / n[1] as f64]);
                }
            }
            out
        }
    }
}

/// Finite union of balls `omega_0` with closure inside `omega` and
/// `L(M, omega_0) <= L(M, omega) + eps`: cover `M` by balls of radius `eps/4`,
/// pick for each centre a point `y_i` of `omega` close to it, and keep the
/// ball around `y_i` of half its distance to `M \ omega`.
pub fn shrink_region(b: &ObservationFunction, m: &Manifold, eps: f64) -> Result<ObservationFunction> {
    b.validate_for(m)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let centers = cover_centers(m, eps / 4.0);
    let picks: Vec<Option<(Point, f64)>> = centers
        .par_iter()
        .map(|&z| {
            let mut best: Option<(f64, Point)> = None;
            for c in &b.components {
                let y = c.point_inside_near(m, z, eps);
                if b.evaluate(m, y) <= 0.0 {
                    continue;
                }
                let d = m.distance(z, y).unwrap_or(f64::INFINITY);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, y));
                }
            }
            best.and_then(|(_, y)| {
                let r = 0.5 * b.depth(m, y);
                (r > 0.0).then_some((y, r))
            })
        })
        .collect();
    let mut balls: Vec<(Point, f64)> = picks.into_iter().flatten().collect();
    if balls.is_empty() {
        return Err(Error::Construction("no interior point of omega found at the requested eps".into()));
    }
    balls.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<(Point, f64)> = Vec::new();
    let prune = !matches!(m, Manifold::PerturbedTorus(_));
    for (y, r) in balls {
        let inside = prune && kept.iter().any(|(c, rc)| m.distance(y, *c).unwrap_or(f64::INFINITY) + r <= *rc);
        if !inside {
            kept.push((y, r));
        }
    }
    let components = kept.into_iter().map(|(center, r)| Component::Ball { center, r0: 0.5 * r, r1: r }).collect();
    ObservationFunction::new(components, b.amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_complement() -> ObservationFunction {
        ObservationFunction::single(Component::Hole { center: [0.5, 0.5], r0: 0.25, r1: 0.3 })
    }

    #[test]
    fn cutoff_hand_values() {
        assert_eq!(cutoff(0.5), 0.5);
        let f75 = (-1.0f64 / 0.75).exp();
        let f25 = (-1.0f64 / 0.25).exp();
        assert!((f75 - 0.263597).abs() < 1e-6 && (f25 - 0.0183156).abs() < 1e-7);
        assert!((cutoff(0.25) - 0.935031).abs() < 1e-6);
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(1.0), 0.0);
    }

    #[test]
    fn ball_plateaus_and_transition() {
        let m = Manifold::unit_torus();
        let b = ObservationFunction::single(Component::Ball { center: [0.2, 0.2], r0: 0.1, r1: 0.2 });
        assert_eq!(b.evaluate(&m, [0.2, 0.2]), 1.0);
        assert_eq!(b.evaluate(&m, [0.5, 0.2]), 0.0);
        let v = b.evaluate(&m, [0.35, 0.2]);
        assert!(v > 0.0 && v < 1.0);
        assert!((v - 0.5).abs() < 1e-12);
        let v = b.evaluate(&m, [0.325, 0.2]);
        assert!((v - 0.935031).abs() < 1e-6);
    }

    #[test]
    fn strip_wraparound_distance() {
        let m = Manifold::unit_torus();
        let b = ObservationFunction::single(Component::Strip { axis: 1, a: 0.3, w0: 0.1, w1: 0.2 });
        assert!((b.dist_to_omega(&m, [0.9, 0.4]).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(b.dist_to_omega(&m, [0.4, 0.9]).unwrap(), 0.0);
        assert_eq!(b.evaluate(&m, [0.4, 0.0]), 1.0);
        assert_eq!(b.evaluate(&m, [0.6, 0.0]), 0.0);
    }

    #[test]
    fn union_distance_is_min() {
        let m = Manifold::unit_torus();
        let c1 = Component::Ball { center: [0.2, 0.2], r0: 0.05, r1: 0.1 };
        let c2 = Component::Ball { center: [0.7, 0.6], r0: 0.05, r1: 0.15 };
        let b = ObservationFunction::new(vec![c1, c2], 1.0).unwrap();
        let x = [0.45, 0.4];
        let d1 = ObservationFunction::single(c1).dist_to_omega(&m, x).unwrap();
        let d2 = ObservationFunction::single(c2).dist_to_omega(&m, x).unwrap();
        assert_eq!(b.dist_to_omega(&m, x).unwrap(), d1.min(d2));
    }

    #[test]
    fn empty_region_rejected() {
        let m = Manifold::unit_torus();
        let b = ObservationFunction { components: vec![], amplitude: 1.0 };
        assert!(matches!(b.dist_to_omega(&m, [0.0, 0.0]), Err(Error::InvalidRegion(_))));
        let s = ObservationFunction::single(Component::Strip { axis: 1, a: 0.0, w0: 0.1, w1: 0.2 });
        assert!(s.validate_for(&Manifold::round_sphere()).is_err());
    }

    #[test]
    fn cal_l_fixtures() {
        let m = Manifold::unit_torus();
        assert_eq!(cal_l(&ObservationFunction::everywhere(1.0), &m, 64).unwrap().value, 0.0);
        let l = cal_l(&disk_complement(), &m, 128).unwrap();
        assert!((l.value - 0.25).abs() < 0.01, "{l:?}");
        let s = Manifold::round_sphere();
        let cap = ObservationFunction::single(Component::Ball {
            center: [0.0, 0.0],
            r0: 2.0 * PI / 3.0 - 0.1,
            r1: 2.0 * PI / 3.0,
        });
        let l = cal_l(&cap, &s, 128).unwrap();
        assert!((l.value - PI / 3.0).abs() < 0.02, "{l:?}");
        assert!((t_uc(&cap, &s, 128).unwrap() - 2.0 * PI / 3.0).abs() < 0.04);
    }

    #[test]
    fn enlarging_radius_does_not_increase_l() {
        let m = Manifold::unit_torus();
        let small = ObservationFunction::single(Component::Ball { center: [0.3, 0.3], r0: 0.1, r1: 0.2 });
        let large = ObservationFunction::single(Component::Ball { center: [0.3, 0.3], r0: 0.1, r1: 0.3 });
        assert!(cal_l(&large, &m, 64).unwrap().value <= cal_l(&small, &m, 64).unwrap().value);
    }

    #[test]
    fn shrink_whole_manifold() {
        let m = Manifold::unit_torus();
        let w = shrink_region(&ObservationFunction::everywhere(1.0), &m, 0.1).unwrap();
        assert!(!w.components.is_empty());
        assert!(cal_l(&w, &m, 64).unwrap().value <= 0.1);
    }
}
