//! Equilibrium statistics of a rigid-rotor gas.
//!
//! - [`EquilibriumParams`] describes the Maxwellian.
//! - [`Maxwellian`] evaluates its log-density and marginals.
//! - [`sample_equilibrium`] draws an [`Ensemble`] from it.
//! - [`estimate_moments`] computes empirical bracket averages, with bootstrap errors
//!   from [`bootstrap_standard_errors`].
//!
//! The analytic equilibrium moments are provided alongside a Gaussian-variance oracle.
//! The analytic pressure tensor carries a factor `(I1 I2 I3)^{1/2}` that the variance
//! of the Gaussian velocity marginal does not; [`pressure_prefactor_diagnostic`] reports
//! the mismatch without resolving it.

mod ensemble;
mod maxwellian;
mod moments;
mod sampling;

pub use ensemble::{CellGrid, Ensemble};
pub use maxwellian::{maxwellian_log_density, Maxwellian};
pub use moments::{
    bootstrap_standard_errors, estimate_moments, estimate_moments_from_kinematics, MomentSet,
    BOOTSTRAP_RESAMPLES,
};
pub use sampling::{sample_equilibrium, sample_particle};

use crate::units::BOLTZMANN;
use crate::{Error, Mat3, MoleculeSpec, Result, Vec3};
use serde::{Deserialize, Serialize};

fn default_dof() -> u8 {
    5
}

/// Parameters of the absolute Maxwellian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumParams {
    /// Number density.
    pub n: f64,
    /// Internal energy per particle `⟨θ⟩`.
    pub theta_bar: f64,
    #[serde(default)]
    pub omega0: Vec3,
    #[serde(default)]
    pub v0: Vec3,
    pub spec: MoleculeSpec,
    /// Degrees of freedom `𝒩` in the single-molecule Hamiltonian (5 or 6).
    #[serde(default = "default_dof")]
    pub dof: u8,
}

impl EquilibriumParams {
    pub fn new(n: f64, theta_bar: f64, spec: MoleculeSpec) -> Self {
        Self {
            n,
            theta_bar,
            omega0: Vec3::zeros(),
            v0: Vec3::zeros(),
            spec,
            dof: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(Error::invalid("n", "number density must be positive"));
        }
        if !(self.theta_bar.is_finite() && self.theta_bar > 0.0) {
            return Err(Error::invalid("theta_bar", "must be positive"));
        }
        if !matches!(self.dof, 5 | 6) {
            return Err(Error::invalid("dof", "must be 5 or 6"));
        }
        if !(self.omega0.iter().chain(self.v0.iter()).all(|x| x.is_finite())) {
            return Err(Error::invalid("omega0/v0", "must be finite"));
        }
        Ok(())
    }

    /// `(2/𝒩)⟨θ⟩`, the energy scale of each quadratic degree of freedom times two.
    pub fn energy_scale(&self) -> f64 {
        2.0 * self.theta_bar / f64::from(self.dof)
    }

    /// Per-component variance of the peculiar velocity.
    pub fn velocity_variance(&self) -> f64 {
        self.energy_scale() / self.spec.m
    }

    /// Body axes that carry rotational kinetic energy: the symmetry axis is frozen when
    /// `𝒩 = 5`.
    pub fn rotational_axes(&self) -> &'static [usize] {
        if self.dof == 5 {
            &[0, 1]
        } else {
            &[0, 1, 2]
        }
    }
}

/// Equilibrium pressure tensor `2 (I1 I2 I3)^{1/2} ⟨θ⟩ / (5m) · I` in its analytic form.
pub fn pressure_tensor_eq(params: &EquilibriumParams) -> Mat3 {
    let s = &params.spec;
    Mat3::identity() * (2.0 * s.inertia_root_product() * params.theta_bar / (5.0 * s.m))
}

/// Variance of the Gaussian velocity marginal, `(2/𝒩)⟨θ⟩/m · I`.
pub fn pressure_tensor_oracle(params: &EquilibriumParams) -> Mat3 {
    Mat3::identity() * params.velocity_variance()
}

/// Equilibrium couple stress, which vanishes identically.
pub fn couple_stress_eq() -> Mat3 {
    Mat3::zeros()
}

/// Kinetic pressure `p_K = (6/5)(ρ/m)(I1 I2 I3)^{1/2} ⟨θ⟩`.
pub fn kinetic_pressure(rho: f64, spec: &MoleculeSpec, theta_bar: f64) -> f64 {
    1.2 * rho / spec.m * spec.inertia_root_product() * theta_bar
}

/// Kinetic temperature `T = 2⟨θ⟩/(𝒩 k_B)` with `⟨θ⟩` in joules.
pub fn temperature_from_theta(theta_bar: f64, dof: u8) -> f64 {
    2.0 * theta_bar / (f64::from(dof) * BOLTZMANN)
}

/// `⟨θ⟩ = (𝒩/2) k_B T` in joules.
pub fn theta_from_temperature(temperature: f64, dof: u8) -> f64 {
    0.5 * f64::from(dof) * BOLTZMANN * temperature
}

/// Comparison of the analytic pressure prefactor with the Gaussian variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressurePrefactorDiagnostic {
    /// Diagonal entry of [`pressure_tensor_eq`].
    pub analytic: f64,
    /// Diagonal entry of [`pressure_tensor_oracle`].
    pub oracle: f64,
    /// `analytic / oracle`; equals `(I1 I2 I3)^{1/2}` when `𝒩 = 5`.
    pub ratio: f64,
    /// True when the two differ by more than one part in 10¹².
    pub flagged: bool,
}

pub fn pressure_prefactor_diagnostic(params: &EquilibriumParams) -> PressurePrefactorDiagnostic {
    let analytic = pressure_tensor_eq(params)[(0, 0)];
    let oracle = pressure_tensor_oracle(params)[(0, 0)];
    let ratio = analytic / oracle;
    PressurePrefactorDiagnostic {
        analytic,
        oracle,
        ratio,
        flagged: (ratio - 1.0).abs() > 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_params() -> EquilibriumParams {
        EquilibriumParams::new(1.0, 1.0, MoleculeSpec::default())
    }

    #[test]
    fn pressure_tensor_examples() {
        let p = pressure_tensor_eq(&unit_params());
        assert!((p - Mat3::identity() * 0.4).amax() < 1e-16);
        let zero = EquilibriumParams {
            theta_bar: 0.0,
            ..unit_params()
        };
        assert_eq!(pressure_tensor_eq(&zero), Mat3::zeros());
    }

    #[test]
    fn trace_of_density_weighted_pressure_is_kinetic_pressure() {
        for (i1, i2, i3, m, theta, rho) in [
            (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
            (2.0, 0.5, 4.0, 3.0, 0.7, 2.5),
            (1.3, 1.3, 0.2, 0.4, 11.0, 0.01),
        ] {
            let spec = MoleculeSpec {
                i1,
                i2,
                i3,
                m,
                ..MoleculeSpec::default()
            };
            let params = EquilibriumParams::new(rho / m, theta, spec);
            let tr = (rho * pressure_tensor_eq(&params)).trace();
            assert_relative_eq!(tr, kinetic_pressure(rho, &spec, theta), max_relative = 1e-14);
        }
    }

    #[test]
    fn kinetic_pressure_examples() {
        let spec = MoleculeSpec {
            i1: 1.0,
            i2: 2.0,
            i3: 2.0,
            ..MoleculeSpec::default()
        };
        assert_relative_eq!(kinetic_pressure(2.0, &spec, 5.0), 24.0, max_relative = 1e-15);
        assert_eq!(kinetic_pressure(0.0, &spec, 5.0), 0.0);
        assert_relative_eq!(
            kinetic_pressure(2.0, &spec, 10.0),
            2.0 * kinetic_pressure(2.0, &spec, 5.0)
        );
    }

    #[test]
    fn couple_stress_is_zero() {
        assert_eq!(couple_stress_eq(), Mat3::zeros());
    }

    #[test]
    fn temperature_examples() {
        let theta = 2.5 * BOLTZMANN * 300.0;
        assert_relative_eq!(temperature_from_theta(theta, 5), 300.0, max_relative = 1e-14);
        assert_eq!(temperature_from_theta(0.0, 5), 0.0);
        assert_relative_eq!(
            temperature_from_theta(theta, 6),
            theta / (3.0 * BOLTZMANN),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            temperature_from_theta(theta_from_temperature(412.0, 5), 5),
            412.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn prefactor_diagnostic_flags_non_unit_inertia() {
        let d = pressure_prefactor_diagnostic(&unit_params());
        assert!(!d.flagged);
        let spec = MoleculeSpec {
            i3: 0.5,
            ..MoleculeSpec::default()
        };
        let d = pressure_prefactor_diagnostic(&EquilibriumParams::new(1.0, 1.0, spec));
        assert!(d.flagged);
        assert_relative_eq!(d.ratio, 0.5f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn params_validation() {
        assert!(unit_params().validate().is_ok());
        assert!(EquilibriumParams { dof: 4, ..unit_params() }.validate().is_err());
        assert!(EquilibriumParams { n: 0.0, ..unit_params() }.validate().is_err());
        let json = r#"{"n":1,"theta_bar":2,"spec":{"m":1,"i1":1,"i2":1,"i3":1,"lambda1":1,"eps":0,"rod_halflength":0.5,"rod_radius":0.1}}"#;
        let p: EquilibriumParams = serde_json::from_str(json).unwrap();
        assert_eq!(p.dof, 5);
        assert_eq!(p.omega0, Vec3::zeros());
    }
}
