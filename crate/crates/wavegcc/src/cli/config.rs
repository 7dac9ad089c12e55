//! TOML experiment configuration.

use crate::control_times::LowerOrderData;
use crate::error::{Error, Result};
use crate::geometry::{Manifold, DEFAULT_DISTANCE_RESOLUTION};
use crate::numerics::TrigPoly;
use crate::regions::ObservationFunction;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "kofT-scan")]
    KofTScan,
    #[serde(rename = "tgcc")]
    Tgcc,
    #[serde(rename = "times-compare")]
    TimesCompare,
    #[serde(rename = "lower-bound")]
    LowerBound,
    #[serde(rename = "shell")]
    Shell,
    #[serde(rename = "blowup-scan")]
    BlowupScan,
    #[serde(rename = "hum")]
    Hum,
    #[serde(rename = "potential-scan")]
    PotentialScan,
    #[serde(rename = "damped-beam")]
    DampedBeam,
    #[serde(rename = "egorov")]
    Egorov,
    #[serde(rename = "smoothing")]
    Smoothing,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::KofTScan,
        ExperimentKind::Tgcc,
        ExperimentKind::TimesCompare,
        ExperimentKind::LowerBound,
        ExperimentKind::Shell,
        ExperimentKind::BlowupScan,
        ExperimentKind::Hum,
        ExperimentKind::PotentialScan,
        ExperimentKind::DampedBeam,
        ExperimentKind::Egorov,
        ExperimentKind::Smoothing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::KofTScan => "kofT-scan",
            ExperimentKind::Tgcc => "tgcc",
            ExperimentKind::TimesCompare => "times-compare",
            ExperimentKind::LowerBound => "lower-bound",
            ExperimentKind::Shell => "shell",
            ExperimentKind::BlowupScan => "blowup-scan",
            ExperimentKind::Hum => "hum",
            ExperimentKind::PotentialScan => "potential-scan",
            ExperimentKind::DampedBeam => "damped-beam",
            ExperimentKind::Egorov => "egorov",
            ExperimentKind::Smoothing => "smoothing",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::KofTScan => "K(T) and its minimizing ray over a range of horizons",
            ExperimentKind::Tgcc => "T_GCC by bisection on K(T) > 0, or a certified trapped ray",
            ExperimentKind::TimesCompare => "T_UC against T_GCC, with the equality-case ray fan",
            ExperimentKind::LowerBound => "smallest Gramian eigenvalue and beam Rayleigh quotient against K(T)",
            ExperimentKind::Shell => "smallest Gramian eigenvalue on high-frequency shells relative to K(T)",
            ExperimentKind::BlowupScan => "discrete observability constant and HUM cost as T decreases towards T_GCC",
            ExperimentKind::Hum => "HUM control of random smooth data to rest",
            ExperimentKind::PotentialScan => {
                "energy growth rate under c = -r and the observability constant with potential"
            }
            ExperimentKind::DampedBeam => "damped energy decay of a beam against ray integrals of the damping",
            ExperimentKind::Egorov => "transport of a multiplication symbol by the half-wave group on beams",
            ExperimentKind::Smoothing => "norms of the oscillating and non-oscillating parts of the Gramian",
        }
    }

    /// Whether the experiment runs the wave solvers (flat torus only).
    pub fn needs_flat_torus(self) -> bool {
        !matches!(self, ExperimentKind::KofTScan | ExperimentKind::Tgcc | ExperimentKind::TimesCompare)
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

fn unit_periods() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_resolution() -> usize {
    DEFAULT_DISTANCE_RESOLUTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManifoldSpec {
    FlatTorus {
        #[serde(default = "unit_periods")]
        periods: [f64; 2],
    },
    RoundSphere,
    PerturbedTorus {
        #[serde(default = "unit_periods")]
        periods: [f64; 2],
        /// Conformal factor `u` of the metric `e^{2u} |dx|^2`.
        u: TrigPoly,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
}

impl Default for ManifoldSpec {
    fn default() -> Self {
        ManifoldSpec::FlatTorus { periods: unit_periods() }
    }
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<Manifold> {
        match self {
            ManifoldSpec::FlatTorus { periods } => Manifold::flat_torus(periods[0], periods[1]),
            ManifoldSpec::RoundSphere => Ok(Manifold::round_sphere()),
            ManifoldSpec::PerturbedTorus { periods, u, resolution } => {
                Manifold::perturbed_torus(*periods, u.clone(), *resolution)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GramianMode {
    /// Dense up to the dense limit, matrix-free above.
    #[default]
    Auto,
    Dense,
    MatrixFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub k_max: usize,
    pub s: f64,
    pub dt: f64,
    /// Number of horizons in scans without an explicit list.
    pub n_time: usize,
    pub nx: usize,
    pub na: usize,
    /// Grid for distance computations.
    pub resolution: usize,
    pub tail_tol: f64,
    pub gramian: GramianMode,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub beam_k: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            k_max: 32,
            s: 0.0,
            dt: 1e-3,
            n_time: 16,
            nx: 32,
            na: 48,
            resolution: DEFAULT_DISTANCE_RESOLUTION,
            tail_tol: 1e-6,
            gramian: GramianMode::Auto,
            eig_tol: 1e-8,
            eig_max_iter: 300,
            beam_k: 32.0,
        }
    }
}

/// Experiment parameters; each experiment reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Explicit horizons.
    pub horizons: Vec<f64>,
    /// Horizons as multiples of `T_GCC` (used when `horizons` is empty).
    pub horizon_factors: Vec<f64>,
    /// Known `T_GCC`; skips its computation.
    pub t_gcc: Option<f64>,
    pub t_max: f64,
    pub t_tol: f64,
    pub equality_tol: f64,
    pub equality_diag_tol: f64,
    pub expect_t_gcc: Option<f64>,
    pub expect_t_uc: Option<f64>,
    pub expect_tol: f64,
    /// Horizons at which `K(T)` must vanish when `T_GCC` is infinite.
    pub trapped_horizons: Vec<f64>,
    pub random_configs: usize,
    pub shell_modes: Vec<u32>,
    pub shell_samples: usize,
    pub shell_ratio_min: f64,
    pub data_modes: i32,
    pub hum_tol: f64,
    pub hum_energy_tol: f64,
    pub beam_rel_tol: f64,
    pub tol_beam: Option<f64>,
    pub depths: Vec<f64>,
    pub growth_k: usize,
    pub growth_rel_tol: f64,
    pub potential_k: usize,
    pub potential_horizon: f64,
    pub rho: [f64; 4],
    pub time: f64,
    pub beam_ks: Vec<f64>,
    pub symbol: TrigPoly,
    pub egorov_ratio: f64,
    pub k_list: Vec<usize>,
    pub smoothing_ratio: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            horizons: Vec::new(),
            horizon_factors: Vec::new(),
            t_gcc: None,
            t_max: 3.0,
            t_tol: 2e-3,
            equality_tol: 0.03,
            equality_diag_tol: 0.02,
            expect_t_gcc: None,
            expect_t_uc: None,
            expect_tol: 0.02,
            trapped_horizons: Vec::new(),
            random_configs: 0,
            shell_modes: vec![1, 2, 4, 8],
            shell_samples: 8,
            shell_ratio_min: 0.5,
            data_modes: 8,
            hum_tol: 1e-8,
            hum_energy_tol: 1e-6,
            beam_rel_tol: 0.1,
            tol_beam: None,
            depths: vec![1.0, 1e2, 1e4],
            growth_k: 4,
            growth_rel_tol: 0.02,
            potential_k: 4,
            potential_horizon: 1.0,
            rho: [0.0, 0.0, 1.0, 0.0],
            time: 1.0,
            beam_ks: vec![16.0, 64.0],
            symbol: TrigPoly::zero(),
            egorov_ratio: 0.7,
            k_list: vec![16, 64],
            smoothing_ratio: 2.0,
        }
    }
}

fn default_region() -> ObservationFunction {
    ObservationFunction::everywhere(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub manifold: ManifoldSpec,
    /// Observation function; for `damped-beam` it is the damping profile.
    #[serde(default = "default_region")]
    pub region: ObservationFunction,
    #[serde(default)]
    pub lower_order: LowerOrderData,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }
}
