//! Unit sphere in the `(theta, phi)` chart, flowed through its embedding in R^3.

use super::{PhasePoint, Point};
use std::f64::consts::{PI, TAU};

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

pub(super) fn wrap(x: Point) -> Point {
    let mut theta = x[0].rem_euclid(TAU);
    let mut phi = x[1];
    if theta > PI {
        theta = TAU - theta;
        phi += PI;
    }
    let mut phi = phi.rem_euclid(TAU);
    if phi >= TAU {
        phi = 0.0;
    }
    [theta, phi]
}

pub(super) fn embed(x: Point) -> V3 {
    let (st, ct) = x[0].sin_cos();
    let (sp, cp) = x[1].sin_cos();
    [st * cp, st * sp, ct]
}

fn frame(x: Point) -> (V3, V3) {
    let (st, ct) = x[0].sin_cos();
    let (sp, cp) = x[1].sin_cos();
    ([ct * cp, ct * sp, -st], [-sp, cp, 0.0])
}

/// Tangent vector `g^{-1} xi` in R^3.
fn tangent(p: &PhasePoint) -> V3 {
    let (e_t, e_p) = frame(p.x);
    let s = p.x[0].sin();
    let a = if s == 0.0 { 0.0 } else { p.xi[1] / s };
    [p.xi[0] * e_t[0] + a * e_p[0], p.xi[0] * e_t[1] + a * e_p[1], p.xi[0] * e_t[2] + a * e_p[2]]
}

fn to_chart(x: V3, v: V3) -> PhasePoint {
    let theta = x[0].hypot(x[1]).atan2(x[2]);
    let phi = x[1].atan2(x[0]).rem_euclid(TAU);
    let phi = if phi >= TAU { 0.0 } else { phi };
    let pt = [theta, phi];
    let (e_t, e_p) = frame(pt);
    PhasePoint::new(pt, [dot(v, e_t), theta.sin() * dot(v, e_p)])
}

pub(super) fn lambda(p: &PhasePoint) -> f64 {
    norm(tangent(p))
}

pub(super) fn flow(p: &PhasePoint, t: f64) -> PhasePoint {
    let x = embed(p.x);
    let v = tangent(p);
    let l = norm(v);
    let u = [v[0] / l, v[1] / l, v[2] / l];
    let (s, c) = t.sin_cos();
    let xt = [x[0] * c + u[0] * s, x[1] * c + u[1] * s, x[2] * c + u[2] * s];
    let vt = [l * (u[0] * c - x[0] * s), l * (u[1] * c - x[1] * s), l * (u[2] * c - x[2] * s)];
    to_chart(xt, vt)
}

pub(super) fn distance(a: Point, b: Point) -> f64 {
    let x = embed(a);
    let y = embed(b);
    norm(cross(x, y)).atan2(dot(x, y))
}

pub(super) fn embedded_difference(a: &PhasePoint, b: &PhasePoint) -> f64 {
    let (xa, xb) = (embed(a.x), embed(b.x));
    let (va, vb) = (tangent(a), tangent(b));
    (0..3).map(|i| (xa[i] - xb[i]).abs().max((va[i] - vb[i]).abs())).fold(0.0, f64::max)
}
