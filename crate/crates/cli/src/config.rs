use crate::RunError;
use nematikin::equilibrium::EquilibriumParams;
use nematikin::hydro::{Preset, SolverConfig};
use nematikin::{MoleculeSpec, PeriodicGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SampleMoments,
    Collide,
    Dsmc,
    RelaxDirector,
    Solve,
    VerifyIdentities,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SampleMoments => "sample-moments",
            Mode::Collide => "collide",
            Mode::Dsmc => "dsmc",
            Mode::RelaxDirector => "relax-director",
            Mode::Solve => "solve",
            Mode::VerifyIdentities => "verify-identities",
        }
    }

    /// Modes whose output depends on random draws and therefore need a seed.
    pub fn needs_seed(self) -> bool {
        matches!(self, Mode::SampleMoments | Mode::Collide | Mode::Dsmc)
    }
}

/// Top-level scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Must agree with the mode given on the command line when present.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Mode-specific parameter block.
    #[serde(default)]
    pub params: serde_json::Value,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| RunError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    /// Parses the parameter block, reporting failures with their `params.` path.
    pub fn params<T: DeserializeOwned + Default>(&self) -> Result<T, RunError> {
        if self.params.is_null() {
            return Ok(T::default());
        }
        serde_path_to_error::deserialize(&self.params).map_err(|e| {
            let inner = e.path().to_string();
            RunError::Config {
                path: if inner == "." { "params".into() } else { format!("params.{inner}") },
                message: e.inner().to_string(),
            }
        })
    }
}

/// Periodic box discretised into `dims` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: [usize; 3],
    #[serde(default = "unit_box")]
    pub lengths: [f64; 3],
}

fn unit_box() -> [f64; 3] {
    [1.0; 3]
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { dims: [64, 1, 1], lengths: unit_box() }
    }
}

impl GridSpec {
    pub fn build(&self) -> nematikin::Result<PeriodicGrid> {
        let spacing = std::array::from_fn(|a| self.lengths[a] / self.dims[a].max(1) as f64);
        PeriodicGrid::new(self.dims, spacing)
    }
}

fn default_equilibrium() -> EquilibriumParams {
    EquilibriumParams::new(1.0, 2.5, MoleculeSpec::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleMomentsParams {
    pub equilibrium: EquilibriumParams,
    pub count: usize,
    pub resamples: usize,
    pub write_ensemble: bool,
}

impl Default for SampleMomentsParams {
    fn default() -> Self {
        Self { equilibrium: default_equilibrium(), count: 100_000, resamples: 200, write_ensemble: false }
    }
}

/// Largest accepted relative residuals of momentum, angular momentum and energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub momentum: f64,
    pub angular_momentum: f64,
    pub energy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { momentum: 1e-12, angular_momentum: 1e-12, energy: 1e-10 }
    }
}

impl Tolerances {
    pub fn admits(&self, residuals: &[f64; 4]) -> bool {
        residuals[0] == 0.0
            && residuals[1] <= self.momentum
            && residuals[2] <= self.angular_momentum
            && residuals[3] <= self.energy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollideParams {
    pub spec: MoleculeSpec,
    pub count: usize,
    /// Width of the uniform distribution of velocity and angular velocity components.
    pub velocity_scale: f64,
    pub tolerances: Tolerances,
    pub write_log: bool,
}

impl Default for CollideParams {
    fn default() -> Self {
        Self {
            spec: MoleculeSpec::default(),
            count: 10_000,
            velocity_scale: 4.0,
            tolerances: Tolerances::default(),
            write_log: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DsmcParams {
    pub equilibrium: EquilibriumParams,
    pub count: usize,
    /// Cell counts per axis; chosen from the bounding diameter when absent.
    pub cells: Option<[usize; 3]>,
    pub dt: f64,
    pub steps: usize,
    pub tolerances: Tolerances,
    pub log_collisions: bool,
    pub write_ensemble: bool,
}

impl Default for DsmcParams {
    fn default() -> Self {
        Self {
            equilibrium: EquilibriumParams { n: 0.05, ..default_equilibrium() },
            count: 2000,
            cells: None,
            dt: 0.05,
            steps: 100,
            tolerances: Tolerances::default(),
            log_collisions: false,
            write_ensemble: false,
        }
    }
}

/// Starting director field for `relax-director`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialDirector {
    /// `(cos kx, sin kx, 0)` with `k = 2π·turns/Lx`.
    Helix { turns: u32 },
    /// Smooth random tilt of the z axis by up to `amplitude` radians; needs a seed.
    Perturbed { amplitude: f64 },
    /// Grid text file written by an earlier run.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxParams {
    pub grid: GridSpec,
    pub initial: InitialDirector,
    pub p_k: f64,
    pub lambda1: f64,
    pub iterations: usize,
    /// Pseudo-time step; the stability bound when absent.
    pub step: Option<f64>,
}

impl Default for RelaxParams {
    fn default() -> Self {
        Self {
            grid: GridSpec { dims: [32, 32, 1], lengths: unit_box() },
            initial: InitialDirector::Perturbed { amplitude: 0.5 },
            p_k: 1.0,
            lambda1: 1.0,
            iterations: 500,
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveParams {
    pub grid: GridSpec,
    pub preset: Preset,
    /// Grid text file that replaces the preset.
    pub initial_state: Option<PathBuf>,
    pub solver: SolverConfig,
    /// Write a grid snapshot every this many steps.
    pub snapshot_every: Option<usize>,
    /// Abort with a runtime error when `t_end` is not reached within this many steps.
    pub max_steps: usize,
    /// Largest accepted relative drift of total mass.
    pub mass_tolerance: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            preset: Preset::default_for("uniform").expect("uniform preset"),
            initial_state: None,
            solver: SolverConfig::default(),
            snapshot_every: None,
            max_steps: 1_000_000,
            mass_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyParams {
    pub collisions: usize,
    pub samples: usize,
    pub fields: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self { collisions: 2000, samples: 50_000, fields: 20 }
    }
}
