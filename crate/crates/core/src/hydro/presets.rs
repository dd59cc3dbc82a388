use super::{closure_coefficient, FluidField};
use crate::grid::PeriodicGrid;
use crate::{Error, MoleculeSpec, Result, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

fn one() -> f64 {
    1.0
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn small() -> f64 {
    1e-3
}

fn pulse_amplitude() -> f64 {
    0.1
}

fn pulse_width() -> f64 {
    0.1
}

fn first_mode() -> u32 {
    1
}

/// Named initial conditions.
///
/// - `uniform`: constant `ρ`, `v`, `ψ0` and `ν`.
/// - `acoustic-1d`: standing wave along x, `ρ = ρ0 (1 + ε cos(2π m x/Lx))`, `v = 0`,
///   `ψ0 = ψ0₀ (ρ/ρ0)^A` so that only the acoustic modes are excited.
/// - `helix-director`: constant thermodynamic fields with `ν = (cos kx, sin kx, 0)`,
///   `k = 2π·turns/Lx`.
/// - `density-pulse-2d`: `ρ = ρ0 (1 + ε exp(−r²/2w²))` about the domain centre in the
///   x–y plane (minimum-image distance), constant `ψ0`, `v` and `ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    Uniform {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default)]
        velocity: [f64; 3],
        #[serde(default = "one")]
        psi0: f64,
        #[serde(default = "z_axis")]
        director: [f64; 3],
    },
    #[serde(rename = "acoustic-1d")]
    Acoustic1d {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "one")]
        psi0: f64,
        #[serde(default = "small")]
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: u32,
        #[serde(default = "z_axis")]
        director: [f64; 3],
    },
    HelixDirector {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "one")]
        psi0: f64,
        #[serde(default = "first_mode")]
        turns: u32,
        #[serde(default)]
        velocity: [f64; 3],
    },
    #[serde(rename = "density-pulse-2d")]
    DensityPulse2d {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "one")]
        psi0: f64,
        #[serde(default = "pulse_amplitude")]
        amplitude: f64,
        #[serde(default = "pulse_width")]
        width: f64,
        #[serde(default)]
        velocity: [f64; 3],
        #[serde(default = "z_axis")]
        director: [f64; 3],
    },
}

impl Preset {
    pub const NAMES: [&'static str; 4] = ["uniform", "acoustic-1d", "helix-director", "density-pulse-2d"];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Uniform { .. } => Self::NAMES[0],
            Preset::Acoustic1d { .. } => Self::NAMES[1],
            Preset::HelixDirector { .. } => Self::NAMES[2],
            Preset::DensityPulse2d { .. } => Self::NAMES[3],
        }
    }

    /// Preset with every parameter at its default.
    pub fn default_for(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::json!({ "name": name }))
            .map_err(|_| Error::invalid("preset", format!("unknown preset `{name}`")))
    }

    pub fn build(&self, grid: PeriodicGrid, spec: &MoleculeSpec) -> Result<FluidField> {
        let n = grid.len();
        let unit = |d: &[f64; 3]| -> Result<Vec3> {
            let v = Vec3::from(*d);
            let norm = v.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::invalid("director", "must be a non-zero vector"));
            }
            Ok(v / norm)
        };
        let [lx, ly, _] = grid.extent();
        match self {
            Preset::Uniform { rho, velocity, psi0, director } => {
                FluidField::uniform(grid, *rho, Vec3::from(*velocity), unit(director)?, *psi0)
            }
            Preset::Acoustic1d { rho, psi0, amplitude, mode, director } => {
                let a = closure_coefficient(spec);
                let k = TAU * f64::from(*mode) / lx;
                let density: Vec<f64> = (0..n)
                    .map(|i| rho * (1.0 + amplitude * (k * grid.position(i).x).cos()))
                    .collect();
                let energy = density.iter().map(|r| psi0 * (r / rho).powf(a)).collect();
                FluidField::new(grid, density, vec![Vec3::zeros(); n], vec![unit(director)?; n], energy)
            }
            Preset::HelixDirector { rho, psi0, turns, velocity } => {
                let k = TAU * f64::from(*turns) / lx;
                let nu = (0..n)
                    .map(|i| {
                        let (s, c) = (k * grid.position(i).x).sin_cos();
                        Vec3::new(c, s, 0.0)
                    })
                    .collect();
                FluidField::new(grid, vec![*rho; n], vec![Vec3::from(*velocity); n], nu, vec![*psi0; n])
            }
            Preset::DensityPulse2d { rho, psi0, amplitude, width, velocity, director } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::invalid("width", "must be positive"));
                }
                let centre = [0.5 * lx, 0.5 * ly];
                let min_image = |d: f64, l: f64| d - l * (d / l).round();
                let density = (0..n)
                    .map(|i| {
                        let x = grid.position(i);
                        let dx = min_image(x.x - centre[0], lx);
                        let dy = if grid.is_active(1) { min_image(x.y - centre[1], ly) } else { 0.0 };
                        rho * (1.0 + amplitude * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp())
                    })
                    .collect();
                FluidField::new(
                    grid,
                    density,
                    vec![Vec3::from(*velocity); n],
                    vec![unit(director)?; n],
                    vec![*psi0; n],
                )
            }
        }
    }
}
