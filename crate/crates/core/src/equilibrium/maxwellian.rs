use super::EquilibriumParams;
use crate::quadrature::gauss_legendre;
use crate::rigidbody::EulerAngles;
use crate::{Mat3, Result, RigidState, Vec3};
use std::f64::consts::{PI, TAU};

const ORIENTATION_NODES: usize = 48;

/// The absolute Maxwellian
///
/// `f = n Q sin a2 / Z · m^{3/2} (I1 I2 I3)^{1/2} / ((4/𝒩) π ⟨θ⟩)³
///      · exp[−(m|V|² + Ω·𝕀Ω) / ((4/𝒩)⟨θ⟩)]`
///
/// with `Q = exp(ω0·𝕀ω0 / ((2/3)⟨θ⟩))` and `Z = ∫ Q sin a2 dα`.
#[derive(Debug, Clone)]
pub struct Maxwellian {
    params: EquilibriumParams,
    orientation_norm: f64,
    log_norm: f64,
}

impl Maxwellian {
    pub fn new(params: &EquilibriumParams) -> Result<Self> {
        params.validate()?;
        let z = orientation_normalization(params);
        let s = &params.spec;
        let width = 4.0 / f64::from(params.dof) * params.theta_bar;
        let log_norm = params.n.ln() - z.ln() + 1.5 * s.m.ln() + 0.5 * (s.i1 * s.i2 * s.i3).ln()
            - 3.0 * (PI * width).ln();
        Ok(Self {
            params: *params,
            orientation_norm: z,
            log_norm,
        })
    }

    pub fn params(&self) -> &EquilibriumParams {
        &self.params
    }

    /// `∫ Q sin a2 dα` over the full angle domain; `8π²` when `ω0 = 0`.
    pub fn orientation_normalization(&self) -> f64 {
        self.orientation_norm
    }

    fn width(&self) -> f64 {
        4.0 / f64::from(self.params.dof) * self.params.theta_bar
    }

    /// `ln Q(α)`.
    pub fn log_q(&self, alpha: &EulerAngles) -> f64 {
        log_q(&self.params, alpha)
    }

    /// Log-density at orientation `alpha`, peculiar velocity `v` and peculiar lab-frame
    /// angular velocity `omega`.
    pub fn log_density(&self, alpha: &EulerAngles, v: &Vec3, omega: &Vec3) -> f64 {
        let inertia = self.params.spec.lab_inertia(alpha);
        self.log_norm + self.log_q(alpha) + alpha.a2.sin().abs().ln()
            - (self.params.spec.m * v.norm_squared() + omega.dot(&(inertia * omega))) / self.width()
    }

    /// Normalized translational factor; integrates to 1 over ℝ³.
    pub fn velocity_marginal(&self, v: &Vec3) -> f64 {
        let m = self.params.spec.m;
        let w = self.width();
        (m / (PI * w)).powf(1.5) * (-m * v.norm_squared() / w).exp()
    }

    /// Normalized rotational factor at fixed orientation; integrates to 1 over ℝ³ in Ω.
    pub fn rotational_marginal(&self, alpha: &EulerAngles, omega: &Vec3) -> f64 {
        let s = &self.params.spec;
        let w = self.width();
        let inertia: Mat3 = s.lab_inertia(alpha);
        (s.i1 * s.i2 * s.i3).sqrt() / (PI * w).powf(1.5) * (-omega.dot(&(inertia * omega)) / w).exp()
    }

    /// Normalized orientational factor `Q sin a2 / Z`.
    pub fn orientation_density(&self, alpha: &EulerAngles) -> f64 {
        (self.log_q(alpha)).exp() * alpha.a2.sin().abs() / self.orientation_norm
    }
}

fn log_q(params: &EquilibriumParams, alpha: &EulerAngles) -> f64 {
    if params.omega0 == Vec3::zeros() {
        return 0.0;
    }
    let w = params.omega0;
    w.dot(&(params.spec.lab_inertia(alpha) * w)) / (2.0 / 3.0 * params.theta_bar)
}

fn orientation_normalization(params: &EquilibriumParams) -> f64 {
    if params.omega0 == Vec3::zeros() {
        return 8.0 * PI * PI;
    }
    // Gauss–Legendre in cos a2 absorbs the sin a2 weight; the integrand is periodic in
    // a1 and a3, where the trapezoid rule converges spectrally.
    let (x, w) = gauss_legendre(ORIENTATION_NODES);
    let n = ORIENTATION_NODES;
    let h = TAU / n as f64;
    let mut total = 0.0;
    for (xc, wc) in x.iter().zip(&w) {
        let a2 = xc.acos();
        for i in 0..n {
            for k in 0..n {
                let a = EulerAngles::new(i as f64 * h, a2, k as f64 * h);
                total += wc * h * h * log_q(params, &a).exp();
            }
        }
    }
    total
}

/// Log-density of the Maxwellian at a phase point.
///
/// Fails only when the state sits on the Euler chart singularity, where the angular
/// velocity cannot be recovered from the conjugate momentum.
pub fn maxwellian_log_density(state: &RigidState, params: &EquilibriumParams) -> Result<f64> {
    let mx = Maxwellian::new(params)?;
    let k = state.kinematics(&params.spec)?;
    Ok(mx.log_density(&state.alpha, &(k.v - params.v0), &(k.omega - params.omega0)))
}
