//! Real trigonometric polynomials on a periodic cell.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub freq: [i32; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// `sum_j cos_j cos(2 pi m_j . x / P) + sin_j sin(2 pi m_j . x / P)`, where the
/// division by the cell periods `P` is componentwise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrigPoly {
    pub terms: Vec<FourierTerm>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: vec![FourierTerm { freq: [0, 0], cos: c, sin: 0.0 }] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.cos.is_finite() && t.sin.is_finite())
    }

    fn phase(t: &FourierTerm, x: [f64; 2], periods: [f64; 2]) -> f64 {
        TAU * (t.freq[0] as f64 * x[0] / periods[0] + t.freq[1] as f64 * x[1] / periods[1])
    }

    pub fn eval(&self, x: [f64; 2], periods: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let (s, c) = Self::phase(t, x, periods).sin_cos();
                t.cos * c + t.sin * s
            })
            .sum()
    }

    pub fn gradient(&self, x: [f64; 2], periods: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for t in &self.terms {
            let (s, c) = Self::phase(t, x, periods).sin_cos();
            let d = -t.cos * s + t.sin * c;
            g[0] += d * TAU * t.freq[0] as f64 / periods[0];
            g[1] += d * TAU * t.freq[1] as f64 / periods[1];
        }
        g
    }

    /// Upper bound for `sup |p|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.cos.hypot(t.sin)).sum()
    }
}
