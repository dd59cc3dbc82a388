//! Physical constants and the nondimensionalisation used at I/O boundaries.
//!
//! Everything inside the crate is nondimensional. A [`UnitSystem`] carries the mass,
//! length and time scales so that SI inputs can be converted once on the way in and
//! once on the way out.

use serde::{Deserialize, Serialize};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Avogadro constant in 1/mol.
pub const AVOGADRO: f64 = 6.02214076e23;
/// Universal gas constant in J/(mol K).
pub const GAS_CONSTANT: f64 = AVOGADRO * BOLTZMANN;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// s
    pub time: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            time: 1.0,
        }
    }
}

impl UnitSystem {
    /// Scales chosen so that one unit of energy equals `k_B * reference_temperature`
    /// for a molecule of mass `molecular_mass` and a length scale `length`.
    pub fn thermal(molecular_mass: f64, length: f64, reference_temperature: f64) -> Self {
        let energy = BOLTZMANN * reference_temperature;
        let speed = (energy / molecular_mass).sqrt();
        Self {
            mass: molecular_mass,
            length,
            time: length / speed,
        }
    }

    pub fn energy(&self) -> f64 {
        self.mass * self.length * self.length / (self.time * self.time)
    }

    pub fn energy_to_si(&self, e: f64) -> f64 {
        e * self.energy()
    }

    pub fn energy_from_si(&self, e: f64) -> f64 {
        e / self.energy()
    }

    /// Boltzmann constant expressed in this unit system (energy per kelvin).
    pub fn boltzmann(&self) -> f64 {
        BOLTZMANN / self.energy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_units_make_kt_unity() {
        let u = UnitSystem::thermal(4.65e-26, 1e-9, 300.0);
        assert!((u.energy_from_si(BOLTZMANN * 300.0) - 1.0).abs() < 1e-12);
        assert!((u.boltzmann() * 300.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gas_constant_value() {
        assert!((GAS_CONSTANT - 8.314462618).abs() < 1e-8);
    }
}
