//! Conformally perturbed torus `g = e^{2u} (dx1^2 + dx2^2)`.

use super::{wrap_torus, PhasePoint, Point};
use crate::error::{Error, Result};
use crate::numerics::TrigPoly;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

const RK4_MAX_STEP: f64 = 1e-3;
const RK4_TOL: f64 = 1e-10;
const STENCIL: i32 = 4;

pub struct PerturbedTorus {
    pub periods: [f64; 2],
    pub u: TrigPoly,
    pub resolution: usize,
    fine_scale: OnceLock<Vec<f64>>,
    fields: Mutex<HashMap<[u64; 2], Arc<DistanceField>>>,
}

impl fmt::Debug for PerturbedTorus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbedTorus")
            .field("periods", &self.periods)
            .field("u", &self.u)
            .field("resolution", &self.resolution)
            .finish()
    }
}

type State = [f64; 4];

impl PerturbedTorus {
    pub fn new(periods: [f64; 2], u: TrigPoly, resolution: usize) -> Result<Self> {
        crate::error::ensure_finite("torus periods", &periods)?;
        if periods[0] <= 0.0 || periods[1] <= 0.0 {
            return Err(Error::InvalidInput("torus periods must be positive".into()));
        }
        if !u.is_finite() {
            return Err(Error::InvalidInput("conformal factor must be finite".into()));
        }
        if resolution < 8 {
            return Err(Error::InvalidInput(format!("distance resolution must be >= 8, got {resolution}")));
        }
        Ok(Self { periods, u, resolution, fine_scale: OnceLock::new(), fields: Mutex::new(HashMap::new()) })
    }

    fn rhs(&self, s: &State) -> State {
        let x = [s[0], s[1]];
        let e = (-self.u.eval(x, self.periods)).exp();
        let g = self.u.gradient(x, self.periods);
        let n = s[2].hypot(s[3]);
        [e * s[2] / n, e * s[3] / n, e * n * g[0], e * n * g[1]]
    }

    fn rk4_step(&self, s: &State, h: f64) -> State {
        let add = |a: &State, k: &State, c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2], a[3] + c * k[3]];
        let k1 = self.rhs(s);
        let k2 = self.rhs(&add(s, &k1, 0.5 * h));
        let k3 = self.rhs(&add(s, &k2, 0.5 * h));
        let k4 = self.rhs(&add(s, &k3, h));
        let mut out = *s;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// Fixed-step RK4 with `sub` steps between consecutive output samples.
    fn run(&self, p: &PhasePoint, duration: f64, n: usize, sub: usize) -> Result<Vec<State>> {
        let dt = duration / (n - 1) as f64;
        let h = dt / sub as f64;
        let mut s: State = [p.x[0], p.x[1], p.xi[0], p.xi[1]];
        let mut out = Vec::with_capacity(n);
        out.push(s);
        for k in 1..n {
            for _ in 0..sub {
                s = self.rk4_step(&s, h);
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationFailure {
                    last_time: (k - 1) as f64 * dt,
                    reason: "non-finite state".into(),
                });
            }
            out.push(s);
        }
        Ok(out)
    }

    /// RK4 with a Richardson self-check against half steps; refines until the
    /// two runs agree.
    fn integrate(&self, p: &PhasePoint, duration: f64, n: usize) -> Result<Vec<PhasePoint>> {
        if duration == 0.0 {
            return Ok(vec![*p; n]);
        }
        let h0 = RK4_MAX_STEP.min(duration.abs() / 1000.0);
        let dt = duration.abs() / (n - 1) as f64;
        let mut sub = ((dt / h0).ceil() as usize).max(1);
        loop {
            let coarse = self.run(p, duration, n, sub)?;
            let fine = self.run(p, duration, n, 2 * sub)?;
            let mut first_bad = None;
            for (k, (a, b)) in coarse.iter().zip(&fine).enumerate() {
                let scale = 1.0 + b[2].hypot(b[3]);
                let err = (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max) / scale;
                if err > RK4_TOL {
                    first_bad = Some(k);
                    break;
                }
            }
            match first_bad {
                None => {
                    return Ok(fine
                        .iter()
                        .map(|s| PhasePoint::new(wrap_torus([s[0], s[1]], self.periods), [s[2], s[3]]))
                        .collect())
                }
                Some(k) => {
                    let h = dt / (2 * sub) as f64;
                    if h < 1e-7 {
                        return Err(Error::IntegrationFailure {
                            last_time: (k.saturating_sub(1)) as f64 * duration / (n - 1) as f64,
                            reason: format!("step size {h:e} underflow in RK4 refinement"),
                        });
                    }
                    sub *= 2;
                }
            }
        }
    }

    pub(super) fn flow(&self, p: &PhasePoint, t: f64) -> Result<PhasePoint> {
        Ok(self.integrate(p, t, 2)?[1])
    }

    pub(super) fn trajectory(&self, p: &PhasePoint, duration: f64, n: usize) -> Result<Vec<(f64, PhasePoint)>> {
        let step = duration / (n - 1) as f64;
        Ok(self.integrate(p, duration, n)?.into_iter().enumerate().map(|(i, q)| (i as f64 * step, q)).collect())
    }

    fn spacing(&self) -> [f64; 2] {
        [self.periods[0] / self.resolution as f64, self.periods[1] / self.resolution as f64]
    }

    /// `e^u` on the grid refined by the stencil factor, so that every
    /// quadrature point of a stencil edge is a grid node.
    fn fine_scale(&self) -> &[f64] {
        self.fine_scale.get_or_init(|| {
            let m = self.resolution * STENCIL as usize;
            let h = [self.periods[0] / m as f64, self.periods[1] / m as f64];
            let mut out = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    out.push(self.u.eval([i as f64 * h[0], j as f64 * h[1]], self.periods).exp());
                }
            }
            out
        })
    }

    /// Metric length of the chart segment from `a` to `a + d`.
    fn segment_length(&self, a: Point, d: [f64; 2]) -> f64 {
        let w = [1.0, 4.0, 2.0, 4.0, 1.0];
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let f = k as f64 / 4.0;
            acc += wk * self.u.eval([a[0] + f * d[0], a[1] + f * d[1]], self.periods).exp();
        }
        d[0].hypot(d[1]) * acc / 12.0
    }

    fn field(&self, source: Point) -> Arc<DistanceField> {
        let source = wrap_torus(source, self.periods);
        let key = [source[0].to_bits(), source[1].to_bits()];
        if let Some(f) = self.fields.lock().unwrap().get(&key) {
            return f.clone();
        }
        let f = Arc::new(self.dijkstra(source));
        self.fields.lock().unwrap().insert(key, f.clone());
        f
    }

    fn dijkstra(&self, source: Point) -> DistanceField {
        let n = self.resolution;
        let h = self.spacing();
        let fine = self.fine_scale();
        let m = n * STENCIL as usize;
        let moves = stencil_moves();
        let weights: Vec<(i32, i32, f64)> =
            moves.iter().map(|&(p, q)| (p, q, (p as f64 * h[0]).hypot(q as f64 * h[1]))).collect();

        let mut dist = vec![f64::INFINITY; n * n];
        let mut heap = BinaryHeap::new();
        let i0 = (source[0] / h[0]).round() as i64;
        let j0 = (source[1] / h[1]).round() as i64;
        for di in -(STENCIL as i64)..=(STENCIL as i64) {
            for dj in -(STENCIL as i64)..=(STENCIL as i64) {
                let (i, j) = (i0 + di, j0 + dj);
                let node = [i as f64 * h[0], j as f64 * h[1]];
                let d = [node[0] - source[0], node[1] - source[1]];
                let len = self.segment_length(source, d);
                let idx = (i.rem_euclid(n as i64) as usize) * n + j.rem_euclid(n as i64) as usize;
                if len < dist[idx] {
                    dist[idx] = len;
                    heap.push(Entry(len, idx));
                }
            }
        }
        while let Some(Entry(d, idx)) = heap.pop() {
            if d > dist[idx] {
                continue;
            }
            let (i, j) = ((idx / n) as i64, (idx % n) as i64);
            for &(p, q, len) in &weights {
                let s = STENCIL as i64;
                let fi = |k: i64| ((i * s + k * p as i64).rem_euclid(m as i64)) as usize;
                let fj = |k: i64| ((j * s + k * q as i64).rem_euclid(m as i64)) as usize;
                let mut acc = 0.0;
                for (k, wk) in [1.0, 4.0, 2.0, 4.0, 1.0].iter().enumerate() {
                    acc += wk * fine[fi(k as i64) * m + fj(k as i64)];
                }
                let nd = d + len * acc / 12.0;
                let ni = (i + p as i64).rem_euclid(n as i64) as usize;
                let nj = (j + q as i64).rem_euclid(n as i64) as usize;
                let nidx = ni * n + nj;
                if nd < dist[nidx] {
                    dist[nidx] = nd;
                    heap.push(Entry(nd, nidx));
                }
            }
        }
        DistanceField { n, h, source, values: dist }
    }

    pub(super) fn distance(&self, x: Point, y: Point) -> f64 {
        let field = self.field(x);
        let y = wrap_torus(y, self.periods);
        let mut d = field.lookup(y);
        let mut off = [y[0] - field.source[0], y[1] - field.source[1]];
        for (o, l) in off.iter_mut().zip(self.periods) {
            *o -= l * (*o / l).round();
        }
        let h = field.h[0].max(field.h[1]);
        if off[0].hypot(off[1]) <= STENCIL as f64 * h {
            d = d.min(self.segment_length(field.source, off));
        }
        d
    }
}

/// Primitive lattice moves `(p, q)` with `max(|p|, |q|) <= STENCIL`.
fn stencil_moves() -> Vec<(i32, i32)> {
    fn gcd(a: i32, b: i32) -> i32 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let mut out = Vec::new();
    for p in -STENCIL..=STENCIL {
        for q in -STENCIL..=STENCIL {
            if (p, q) != (0, 0) && gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source distances on the periodic grid, bilinearly interpolated.
#[derive(Debug, Clone)]
pub struct DistanceField {
    n: usize,
    h: [f64; 2],
    source: Point,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn lookup(&self, y: Point) -> f64 {
        let n = self.n;
        let fx = y[0] / self.h[0];
        let fy = y[1] / self.h[1];
        let i = fx.floor();
        let j = fy.floor();
        let (a, b) = (fx - i, fy - j);
        let i = (i as i64).rem_euclid(n as i64) as usize;
        let j = (j as i64).rem_euclid(n as i64) as usize;
        let i1 = (i + 1) % n;
        let j1 = (j + 1) % n;
        let v = |i: usize, j: usize| self.values[i * n + j];
        (1.0 - a) * (1.0 - b) * v(i, j) + a * (1.0 - b) * v(i1, j) + (1.0 - a) * b * v(i, j1) + a * b * v(i1, j1)
    }
}

#[cfg(test)]
mod tests {
    use super::super::Manifold;
    use super::*;
    use crate::numerics::FourierTerm;

    fn bumpy() -> TrigPoly {
        TrigPoly {
            terms: vec![
                FourierTerm { freq: [1, 0], cos: 0.08, sin: 0.0 },
                FourierTerm { freq: [1, 1], cos: 0.0, sin: 0.05 },
            ],
        }
    }

    #[test]
    fn flat_case_distance_within_two_cells() {
        let n = 256;
        let m = Manifold::perturbed_torus([1.0, 1.0], TrigPoly::zero(), n).unwrap();
        let t = Manifold::unit_torus();
        let h = 1.0 / n as f64;
        let pts = [[0.1, 0.2], [0.5, 0.5], [0.93, 0.07], [0.31, 0.77], [0.66, 0.12]];
        for a in pts {
            for b in pts {
                let d = m.distance(a, b).unwrap();
                let e = t.distance(a, b).unwrap();
                assert!((d - e).abs() <= 2.0 * h, "{a:?} {b:?}: {d} vs {e}");
            }
        }
    }

    #[test]
    fn constant_factor_scales_distance() {
        let m = Manifold::perturbed_torus([1.0, 1.0], TrigPoly::constant(2f64.ln()), 128).unwrap();
        let d = m.distance([0.1, 0.1], [0.4, 0.3]).unwrap();
        let e = 2.0 * (0.3f64).hypot(0.2);
        assert!((d - e).abs() <= 4.0 / 128.0);
    }

    #[test]
    fn rk4_self_convergence() {
        let pt = PerturbedTorus::new([1.0, 1.0], bumpy(), 32).unwrap();
        let p = PhasePoint::new([0.2, 0.3], [0.6, 0.8]);
        let a = pt.flow(&p, 1.0).unwrap();
        let fine = pt.run(&p, 1.0, 2, 2000).unwrap()[1];
        for (x, y) in [a.x[0], a.x[1], a.xi[0], a.xi[1]].iter().zip(fine) {
            let y = if (x - y).abs() > 0.5 { y - (y - x).round() } else { y };
            assert!((x - y).abs() < 1e-7);
        }
    }
}
