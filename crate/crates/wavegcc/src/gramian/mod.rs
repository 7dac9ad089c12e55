//! Observability Gramian of the Klein-Gordon equation on the flat torus:
//! assembly (dense and matrix-free), smallest eigenvalues, lower-bound and
//! shell reports, HUM control, and Egorov / smoothing / damping probes.
//!
//! Split data `(v_+, v_-)` is written in `H^s`-orthonormal coordinates
//! `y = (Lambda^s v_+, Lambda^s v_-)`, so `|y|^2 = E_s` and the smallest
//! eigenvalue of `G` is the inverse of the discrete observability constant.

mod eigen;
mod hum;
mod matrix;
mod observation;
mod potential;
mod probes;
mod reports;

use crate::spectral::C64;
pub use eigen::{default_start, dense_hermitian_eigen, lanczos, min_eig, EigenOptions, Eigenpair, Extreme};
pub use hum::{conjugate_gradient, control_at, controlled_final_state, hum_control, hum_rhs, HumOptions, HumResult};
pub use matrix::{
    assemble_gramian, interval_integral, shell_indices, GramianApply, GramianHeader, GramianMatrix, GramianOperator,
    DENSE_LIMIT,
};
pub use observation::{Observation, DEFAULT_TAIL_TOL, MAX_GRID};
pub use potential::{assemble_gramian_potential, POTENTIAL_LIMIT};
pub use probes::{damped_beam_probe, egorov_probe, smoothing_probe, DampedBeamReport, EgorovResult, SmoothingRow};
use rayon::prelude::*;

/// Nodes per parallel task in time quadratures. Fixed so that sums do not
/// depend on the worker count.
const NODE_CHUNK: usize = 8;

/// `sum_i f(i, acc)` over quadrature nodes, each chunk accumulated in order
/// and chunk sums added in order.
pub(crate) fn node_sum<F>(nodes: usize, len: usize, f: F) -> Vec<C64>
where
    F: Fn(usize, &mut [C64]) + Sync,
{
    let starts: Vec<usize> = (0..nodes).step_by(NODE_CHUNK).collect();
    let parts: Vec<Vec<C64>> = starts
        .par_iter()
        .map(|&s| {
            let mut acc = vec![C64::new(0.0, 0.0); len];
            for i in s..(s + NODE_CHUNK).min(nodes) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); len];
    for p in parts {
        out.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    out
}

pub use reports::{
    beam_split_vector, cost_scan, gramian_for, observability_report, shell_observability, shell_scan, CostScan,
    MinEigSummary, ObservabilityReport, ReportOptions, ScanRow, ShellReport, ShellScan,
};

#[cfg(test)]
mod tests;
