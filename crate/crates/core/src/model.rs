//! Conservation-law models: fluxes, equations of state, characteristic speeds
//! and the relaxation Maxwellians that close the kinetic system.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::velocity::VelocitySet;

/// Heat capacity ratio of a diatomic perfect gas.
pub const GAMMA_DIATOMIC: f64 = 1.4;

/// Gravity used by the shallow-water model unless overridden.
pub const DEFAULT_GRAVITY: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-physical state in {model}: {reason} (u = {state:?})")]
    NonPhysicalState {
        model: &'static str,
        reason: &'static str,
        state: Vec<f64>,
    },
    #[error("Maxwellian u + F(u)/v is undefined for v = 0")]
    DivisionByZeroVelocity,
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("moment condition violated for {model}: {detail}")]
    MomentMismatch { model: &'static str, detail: String },
}

/// The conservation laws the solver knows how to relax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FluxModel {
    /// `u_t + a u_x = 0`
    Advection1d { a: f64 },
    /// `u_t + (u^2/2)_x = 0`
    Burgers1d,
    /// Euler equations in `(rho, rho v, E)` with a gamma-law gas.
    Euler1d { gamma: f64 },
    /// `u_t + a u_x + b u_y = 0`
    Advection2d { a: f64, b: f64 },
    /// Shallow water in `(h, h vx, h vy)` with `p = g h^2 / 2`.
    ShallowWater2d { g: f64 },
    /// Euler equations in `(rho, rho vx, rho vy, E)`.
    Euler2d { gamma: f64 },
}

/// How the equilibrium distribution is built from the macroscopic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxwellianForm {
    /// `M_j = u + v_j F(u) / sigma^2`, the Gauss-Hermite lift (1D).
    Gaussian,
    /// `M_j = u + F(u) / v_j` (1D).
    Reciprocal,
    /// `M_j = u + v^x_j F^x(u) / a_x^2 + v^y_j F^y(u) / a_y^2` (2D).
    Orthogonal,
}

impl FluxModel {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "advection1d" => FluxModel::Advection1d { a: 1.0 },
            "burgers1d" => FluxModel::Burgers1d,
            "euler1d" => FluxModel::Euler1d {
                gamma: GAMMA_DIATOMIC,
            },
            "advection2d" => FluxModel::Advection2d { a: 1.0, b: 1.0 },
            "shallow_water2d" => FluxModel::ShallowWater2d { g: DEFAULT_GRAVITY },
            "euler2d" => FluxModel::Euler2d {
                gamma: GAMMA_DIATOMIC,
            },
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FluxModel::Advection1d { .. } => "advection1d",
            FluxModel::Burgers1d => "burgers1d",
            FluxModel::Euler1d { .. } => "euler1d",
            FluxModel::Advection2d { .. } => "advection2d",
            FluxModel::ShallowWater2d { .. } => "shallow_water2d",
            FluxModel::Euler2d { .. } => "euler2d",
        }
    }

    /// Number of conserved components `M`.
    pub fn components(&self) -> usize {
        match self {
            FluxModel::Advection1d { .. } | FluxModel::Burgers1d | FluxModel::Advection2d { .. } => 1,
            FluxModel::Euler1d { .. } | FluxModel::ShallowWater2d { .. } => 3,
            FluxModel::Euler2d { .. } => 4,
        }
    }

    /// Spatial dimension `D`.
    pub fn dim(&self) -> usize {
        match self {
            FluxModel::Advection1d { .. } | FluxModel::Burgers1d | FluxModel::Euler1d { .. } => 1,
            _ => 2,
        }
    }

    /// True when the flux is linear in `u`.
    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            FluxModel::Advection1d { .. } | FluxModel::Advection2d { .. }
        )
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParameter(msg));
        match *self {
            FluxModel::Advection1d { a } if !a.is_finite() => bad(format!("a = {a}")),
            FluxModel::Advection2d { a, b } if !(a.is_finite() && b.is_finite()) => {
                bad(format!("a = {a}, b = {b}"))
            }
            FluxModel::Euler1d { gamma } | FluxModel::Euler2d { gamma } if !(gamma > 1.0) => {
                bad(format!("gamma must exceed 1, got {gamma}"))
            }
            FluxModel::ShallowWater2d { g } if !(g > 0.0) => {
                bad(format!("g must be positive, got {g}"))
            }
            _ => Ok(()),
        }
    }

    /// The Maxwellian each experiment uses by default.
    pub fn default_maxwellian(&self) -> MaxwellianForm {
        match self {
            FluxModel::Advection1d { .. } | FluxModel::Burgers1d => MaxwellianForm::Reciprocal,
            FluxModel::Euler1d { .. } => MaxwellianForm::Gaussian,
            _ => MaxwellianForm::Orthogonal,
        }
    }

    fn non_physical(&self, reason: &'static str, u: &[f64]) -> ModelError {
        ModelError::NonPhysicalState {
            model: self.name(),
            reason,
            state: u.to_vec(),
        }
    }

    /// Pressure from the model's equation of state. Scalar models have none
    /// and report zero. Negative pressures are returned, not rejected.
    pub fn equation_of_state(&self, u: &[f64]) -> f64 {
        match *self {
            FluxModel::Euler1d { gamma } => {
                let (rho, mom, e) = (u[0], u[1], u[2]);
                (gamma - 1.0) * (e - 0.5 * mom * mom / rho)
            }
            FluxModel::Euler2d { gamma } => {
                let (rho, mx, my, e) = (u[0], u[1], u[2], u[3]);
                (gamma - 1.0) * (e - 0.5 * (mx * mx + my * my) / rho)
            }
            FluxModel::ShallowWater2d { g } => 0.5 * g * u[0] * u[0],
            _ => 0.0,
        }
    }

    fn check_density(&self, u: &[f64]) -> Result<(), ModelError> {
        match self {
            FluxModel::Euler1d { .. } | FluxModel::Euler2d { .. } if !(u[0] > 0.0) => {
                Err(self.non_physical("density must be positive", u))
            }
            FluxModel::ShallowWater2d { .. } if !(u[0] > 0.0) => {
                Err(self.non_physical("depth must be positive", u))
            }
            _ => Ok(()),
        }
    }

    /// Flux along one axis, written into `out` (length `M`).
    pub fn flux_axis(&self, u: &[f64], axis: usize, out: &mut [f64]) -> Result<(), ModelError> {
        debug_assert!(axis < self.dim());
        self.check_density(u)?;
        match *self {
            FluxModel::Advection1d { a } => out[0] = a * u[0],
            FluxModel::Burgers1d => out[0] = 0.5 * u[0] * u[0],
            FluxModel::Euler1d { .. } => {
                let p = self.equation_of_state(u);
                let v = u[1] / u[0];
                out[0] = u[1];
                out[1] = u[1] * v + p;
                out[2] = (u[2] + p) * v;
            }
            FluxModel::Advection2d { a, b } => out[0] = if axis == 0 { a } else { b } * u[0],
            FluxModel::ShallowWater2d { .. } | FluxModel::Euler2d { .. } => {
                let p = self.equation_of_state(u);
                let h = u[0];
                let vn = u[1 + axis] / h;
                out[0] = u[1 + axis];
                out[1] = u[1] * vn;
                out[2] = u[2] * vn;
                out[1 + axis] += p;
                if let FluxModel::Euler2d { .. } = self {
                    out[3] = (u[3] + p) * vn;
                }
            }
        }
        Ok(())
    }

    /// All fluxes as an `M x D` row-major array (`out[m * D + d]`).
    pub fn flux(&self, u: &[f64]) -> Result<Vec<f64>, ModelError> {
        let (m, d) = (self.components(), self.dim());
        let mut out = vec![0.0; m * d];
        let mut tmp = vec![0.0; m];
        for axis in 0..d {
            self.flux_axis(u, axis, &mut tmp)?;
            for c in 0..m {
                out[c * d + axis] = tmp[c];
            }
        }
        Ok(out)
    }

    /// Spectral radius of the flux Jacobian along `axis` at one state.
    pub fn wave_speed(&self, u: &[f64], axis: usize) -> Result<f64, ModelError> {
        match *self {
            FluxModel::Advection1d { a } => Ok(a.abs()),
            FluxModel::Burgers1d => Ok(u[0].abs()),
            FluxModel::Advection2d { a, b } => Ok(if axis == 0 { a.abs() } else { b.abs() }),
            FluxModel::Euler1d { gamma } | FluxModel::Euler2d { gamma } => {
                self.check_density(u)?;
                let p = self.equation_of_state(u);
                let c2 = gamma * p / u[0];
                if c2 < 0.0 {
                    return Err(self.non_physical("negative pressure in sound speed", u));
                }
                Ok((u[1 + axis] / u[0]).abs() + c2.sqrt())
            }
            FluxModel::ShallowWater2d { g } => {
                self.check_density(u)?;
                Ok((u[1 + axis] / u[0]).abs() + (g * u[0]).sqrt())
            }
        }
    }

    /// Largest characteristic speed per axis over a field of cells stored as
    /// consecutive `M`-vectors.
    pub fn max_wave_speed(&self, u_field: &[f64]) -> Result<Vec<f64>, ModelError> {
        let m = self.components();
        let mut out = vec![0.0f64; self.dim()];
        for u in u_field.chunks_exact(m) {
            for (axis, s) in out.iter_mut().enumerate() {
                *s = s.max(self.wave_speed(u, axis)?);
            }
        }
        Ok(out)
    }
}

/// Evaluates the Maxwellian `M_j(u)` for one velocity `v` (length `D`).
pub fn maxwellian(
    model: &FluxModel,
    form: MaxwellianForm,
    u: &[f64],
    v: &[f64],
    vset: &VelocitySet,
    out: &mut [f64],
) -> Result<(), ModelError> {
    let m = model.components();
    let mut flux = [0.0f64; 4];
    out[..m].copy_from_slice(&u[..m]);
    match form {
        MaxwellianForm::Gaussian | MaxwellianForm::Orthogonal => {
            for axis in 0..model.dim() {
                if v[axis] == 0.0 {
                    continue;
                }
                model.flux_axis(u, axis, &mut flux[..m])?;
                let scale = v[axis] / vset.a_sq[axis];
                for c in 0..m {
                    out[c] += scale * flux[c];
                }
            }
        }
        MaxwellianForm::Reciprocal => {
            if v[0] == 0.0 {
                return Err(ModelError::DivisionByZeroVelocity);
            }
            model.flux_axis(u, 0, &mut flux[..m])?;
            for c in 0..m {
                out[c] += flux[c] / v[0];
            }
        }
    }
    Ok(())
}

/// Checks `<M(u)> = u` and `<v^d M(u)> = F^d(u)` at one state, relative to
/// the size of `u` and `F(u)`.
pub fn moment_check(
    model: &FluxModel,
    form: MaxwellianForm,
    u: &[f64],
    vset: &VelocitySet,
    tol: f64,
) -> Result<(), ModelError> {
    let m = model.components();
    let d = model.dim();
    let mut zeroth = vec![0.0; m];
    let mut first = vec![0.0; m * d];
    let mut mj = vec![0.0; m];
    for j in 0..vset.len() {
        let v = vset.velocity(j);
        maxwellian(model, form, u, v, vset, &mut mj)?;
        let w = vset.w[j];
        for c in 0..m {
            zeroth[c] += w * mj[c];
            for axis in 0..d {
                first[c * d + axis] += w * v[axis] * mj[c];
            }
        }
    }
    let flux = model.flux(u)?;
    let scale_u = u.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let scale_f = flux.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    for c in 0..m {
        let err = (zeroth[c] - u[c]).abs() / scale_u;
        if err > tol {
            return Err(ModelError::MomentMismatch {
                model: model.name(),
                detail: format!("<M>_{c} - u_{c} = {err:e}"),
            });
        }
        for axis in 0..d {
            let err = (first[c * d + axis] - flux[c * d + axis]).abs() / scale_f;
            if err > tol {
                return Err(ModelError::MomentMismatch {
                    model: model.name(),
                    detail: format!("<v^{axis} M>_{c} - F^{axis}_{c} = {err:e}"),
                });
            }
        }
    }
    Ok(())
}
