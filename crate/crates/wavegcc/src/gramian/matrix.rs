use super::observation::Observation;
use crate::error::{Error, Result};
use crate::numerics::quadrature::{gauss_legendre_interval, oscillatory_node_count};
use crate::spectral::{SpectralBasis, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Largest split dimension assembled densely.
pub const DENSE_LIMIT: usize = 5000;

/// `int_0^T e^{i omega t} dt`.
pub fn interval_integral(omega: f64, t: f64) -> C64 {
    let x = omega * t;
    if x.abs() < 1e-3 {
        let mut term = C64::new(t, 0.0);
        let mut sum = term;
        for n in 1..8 {
            term *= C64::new(0.0, x) / (n as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (C64::from_polar(1.0, x) - 1.0) / C64::new(0.0, omega)
    }
}

/// Operations shared by the dense and matrix-free Gramians. Vectors use split
/// `H^s`-orthonormal coordinates: entries `0..N` carry `Lambda^s v_+`,
/// entries `N..2N` carry `Lambda^s v_-`.
pub trait GramianApply: Sync {
    fn basis(&self) -> &SpectralBasis;
    fn horizon(&self) -> f64;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn diagonal(&self) -> Vec<f64>;
    fn as_dense(&self) -> Option<&GramianMatrix> {
        None
    }
    fn dim(&self) -> usize {
        2 * self.basis().len()
    }
    /// `<G x, x>`.
    fn quadratic(&self, x: &[C64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| (a * b.conj()).re).sum()
    }
}

/// Split index set of the shell `kappa_k > kappa`.
pub fn shell_indices(basis: &SpectralBasis, kappa: Option<f64>) -> Vec<usize> {
    let n = basis.len();
    (0..2 * n).filter(|i| kappa.is_none_or(|c| basis.kappa[i % n] > c)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GramianHeader {
    pub k_max: usize,
    pub periods: [f64; 2],
    pub s: f64,
    pub horizon: f64,
    pub dim: usize,
    pub time_integration: String,
    pub observation: String,
    pub observation_hash: String,
}

/// Dense Hermitian Gramian on the split basis, column major.
#[derive(Debug, Clone)]
pub struct GramianMatrix {
    pub header: GramianHeader,
    pub basis: SpectralBasis,
    pub entries: Vec<C64>,
}

fn entry(q: &[C64], lam: &[f64], t: f64, n: usize, i: usize, j: usize) -> C64 {
    let (si, ki) = if i < n { (1.0, i) } else { (-1.0, i - n) };
    let (sj, kj) = if j < n { (1.0, j) } else { (-1.0, j - n) };
    q[kj * n + ki] * interval_integral(sj * lam[kj] - si * lam[ki], t)
}

/// Dense Gramian with exact time integrals:
/// `G[(s,k),(s',k')] = Q[k,k'] int_0^T e^{i (s' lambda_k' - s lambda_k) t} dt`.
pub fn assemble_gramian(obs: &Observation, t: f64) -> Result<GramianMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput(format!("horizon {t} must be finite and nonnegative")));
    }
    let n = obs.len();
    let dim = 2 * n;
    if dim > DENSE_LIMIT {
        return Err(Error::InvalidInput(format!(
            "dense Gramian of dimension {dim} exceeds {DENSE_LIMIT}; use the matrix-free operator"
        )));
    }
    let q = obs.dense();
    let lam = &obs.basis.lambda;
    let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
    entries.par_chunks_mut(dim).enumerate().for_each(|(j, col)| {
        for (i, e) in col.iter_mut().enumerate() {
            *e = entry(&q, lam, t, n, i, j);
        }
    });
    Ok(GramianMatrix {
        header: GramianHeader {
            k_max: obs.basis.k_max,
            periods: obs.basis.periods,
            s: obs.s,
            horizon: t,
            dim,
            time_integration: "exact".into(),
            observation: obs.description.clone(),
            observation_hash: format!("{:016x}", obs.fingerprint),
        },
        basis: obs.basis.clone(),
        entries,
    })
}

impl GramianMatrix {
    pub fn dim(&self) -> usize {
        self.header.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[j * self.dim() + i]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    /// `||G - G^*||_F`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += (self.get(i, j) - self.get(j, i).conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Principal submatrix on `idx`, column major.
    pub fn submatrix(&self, idx: &[usize]) -> Vec<C64> {
        let m = idx.len();
        let mut out = Vec::with_capacity(m * m);
        for &j in idx {
            for &i in idx {
                out.push(self.get(i, j));
            }
        }
        out
    }

    fn header_json(&self) -> Result<String> {
        serde_json::to_string(&self.header).map_err(|e| Error::Io(std::io::Error::other(e)))
    }

    /// Writes `WGCCGRAM`, a little-endian `u64` header length, the JSON header,
    /// then `dim^2` column-major `(re, im)` pairs of little-endian `f64`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = self.header_json()?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"WGCCGRAM")?;
        f.write_all(&(header.len() as u64).to_le_bytes())?;
        f.write_all(header.as_bytes())?;
        for c in &self.entries {
            f.write_all(&c.re.to_le_bytes())?;
            f.write_all(&c.im.to_le_bytes())?;
        }
        Ok(f.flush()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = || Error::InvalidInput(format!("{} is not a Gramian file", path.display()));
        if bytes.len() < 16 || &bytes[..8] != b"WGCCGRAM" {
            return Err(bad());
        }
        let hl = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let body = 16 + hl;
        let header: GramianHeader = serde_json::from_slice(bytes.get(16..body).ok_or_else(bad)?)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        let dim = header.dim;
        if bytes.len() != body + dim * dim * 16 {
            return Err(bad());
        }
        let entries = bytes[body..]
            .chunks_exact(16)
            .map(|c| {
                C64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap()))
            })
            .collect();
        let basis = SpectralBasis::new(header.k_max, header.periods)?;
        if 2 * basis.len() != dim {
            return Err(bad());
        }
        Ok(Self { header, basis, entries })
    }
}

impl GramianApply for GramianMatrix {
    fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    fn horizon(&self) -> f64 {
        self.header.horizon
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (j, xj) in x.iter().enumerate() {
            if *xj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = &self.entries[j * n..(j + 1) * n];
            out.iter_mut().zip(col).for_each(|(o, c)| *o += c * xj);
        }
        out
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    fn as_dense(&self) -> Option<&GramianMatrix> {
        Some(self)
    }
}

/// Matrix-free Gramian: the time integral is evaluated by Gauss-Legendre
/// quadrature with enough nodes to resolve every frequency difference, and
/// each node costs one application of the observation form.
#[derive(Debug, Clone)]
pub struct GramianOperator {
    pub obs: Arc<Observation>,
    pub horizon: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GramianOperator {
    pub fn new(obs: Arc<Observation>, t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidInput(format!("horizon {t} must be finite and nonnegative")));
        }
        let count = oscillatory_node_count(2.0 * obs.basis.lambda_max(), t);
        let (nodes, weights) = gauss_legendre_interval(count, t);
        Ok(Self { obs, horizon: t, nodes, weights })
    }

    /// `sum_j w_j e^{i s lambda t_j} ...` building blocks: the solution
    /// `Lambda^s v(t_j)` for split data `x`.
    pub fn state_at(&self, x: &[C64], t: f64) -> Vec<C64> {
        let n = self.obs.len();
        let lam = &self.obs.basis.lambda;
        (0..n)
            .map(|k| {
                let p = C64::from_polar(1.0, lam[k] * t);
                x[k] * p + x[n + k] * p.conj()
            })
            .collect()
    }
}

impl GramianApply for GramianOperator {
    fn basis(&self) -> &SpectralBasis {
        &self.obs.basis
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.obs.len();
        let lam = &self.obs.basis.lambda;
        super::node_sum(self.nodes.len(), 2 * n, |i, acc| {
            let (t, w) = (self.nodes[i], self.weights[i]);
            let q = self.obs.apply(&self.state_at(x, t));
            for k in 0..n {
                let p = C64::from_polar(w, lam[k] * t);
                acc[k] += p.conj() * q[k];
                acc[n + k] += p * q[k];
            }
        })
    }

    fn diagonal(&self) -> Vec<f64> {
        let d = self.obs.diagonal();
        d.iter().chain(d.iter()).map(|v| v * self.horizon).collect()
    }
}
