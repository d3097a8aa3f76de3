//! Run driver: builds the kinetic system for a problem, lifts the initial
//! data, and advances it with a projective scheme to the requested times,
//! watching the subcharacteristic condition and conservation on the way.

use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{moment_check, FluxModel, MaxwellianForm, ModelError};
use crate::problems::Problem;
use crate::space::{KineticField, KineticSystem, SpaceError, SpatialScheme};
use crate::timeint::{outer_steps, projective_step, ProjectiveScheme, ProjectiveWork, StepError};
use crate::velocity::{gauss_hermite_pair, orthogonal_velocities, v_max_bound, v_max_squared_bound, VelocityError, VelocitySet};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Velocity(#[from] VelocityError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot run backwards from t = {from} to t = {to}")]
    BadTarget { from: f64, to: f64 },
}

/// Velocity-set choice; unset speeds are taken from the initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityOptions {
    pub sigma: Option<f64>,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub v_max: Option<f64>,
}

impl Default for VelocityOptions {
    fn default() -> Self {
        VelocityOptions {
            sigma: None,
            r: 1,
            s: 1,
            v_max: None,
        }
    }
}

/// What to do when the data outgrow the velocity set. By default the
/// violation is only logged; growing the speeds mid-run raises the kinetic
/// CFL number, which the outer step may not tolerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescalePolicy {
    pub enabled: bool,
    /// New speed = required speed x factor.
    pub factor: f64,
}

impl Default for RescalePolicy {
    fn default() -> Self {
        RescalePolicy {
            enabled: false,
            factor: 1.0,
        }
    }
}

/// Everything needed to build a [`Simulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSetup {
    pub problem: Problem,
    pub cells: [usize; 2],
    pub scheme: SpatialScheme,
    pub form: Option<MaxwellianForm>,
    pub velocities: VelocityOptions,
    pub time: ProjectiveScheme,
    pub rescale: RescalePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescaleEvent {
    pub time: f64,
    pub outer_step: u64,
    pub old_speed: f64,
    pub new_speed: f64,
}

/// Tolerance for the startup moment check.
const MOMENT_TOL: f64 = 1e-10;

pub struct Simulation {
    pub system: KineticSystem,
    pub scheme: ProjectiveScheme,
    pub f: KineticField,
    pub t: f64,
    pub outer_steps: u64,
    pub rescales: Vec<RescaleEvent>,
    /// Outer steps that ended with the subcharacteristic condition violated.
    pub violations: u64,
    rescale: RescalePolicy,
    r_count: usize,
    s_count: usize,
    initial_totals: Vec<f64>,
    initial_scale: Vec<f64>,
    work: ProjectiveWork<KineticField>,
}

/// Velocity set for `model` sized from the field `u`.
pub fn choose_velocities(model: &FluxModel, u: &[f64], opts: &VelocityOptions) -> Result<VelocitySet, SolverError> {
    if model.dim() == 1 {
        let sigma = match opts.sigma {
            Some(s) => s,
            None => {
                let s = model.max_wave_speed(u)?[0];
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            }
        };
        Ok(gauss_hermite_pair(sigma)?)
    } else {
        let v_max = match opts.v_max {
            Some(v) => v,
            None => v_max_bound(model, u, opts.r)?,
        };
        Ok(orthogonal_velocities(opts.r, opts.s, v_max)?)
    }
}

impl Simulation {
    pub fn new(setup: &RunSetup) -> Result<Self, SolverError> {
        let problem = &setup.problem;
        let mesh = problem
            .mesh(setup.cells)
            .map_err(|e| SpaceError::InvalidMesh(e.to_string()))?;
        let u0 = problem.initial_field(&mesh);
        Self::from_field(setup, mesh, &u0)
    }

    /// Builds the simulation from an explicit initial macroscopic field.
    pub fn from_field(setup: &RunSetup, mesh: crate::space::Mesh, u0: &[f64]) -> Result<Self, SolverError> {
        setup.time.validate()?;
        let model = setup.problem.model;
        let form = setup.form.unwrap_or_else(|| model.default_maxwellian());
        let vset = choose_velocities(&model, u0, &setup.velocities)?;
        for u in u0.chunks_exact(model.components()) {
            moment_check(&model, form, u, &vset, MOMENT_TOL)?;
        }
        let system = KineticSystem::new(model, form, vset, mesh, setup.scheme, setup.time.eps)?;
        let f = system.lift(u0)?;
        let work = ProjectiveWork::new(&f, setup.time.tableau.stages());
        let mut sim = Simulation {
            system,
            scheme: setup.time.clone(),
            f,
            t: 0.0,
            outer_steps: 0,
            rescales: Vec::new(),
            violations: 0,
            rescale: setup.rescale,
            r_count: setup.velocities.r,
            s_count: setup.velocities.s,
            initial_totals: Vec::new(),
            initial_scale: Vec::new(),
            work,
        };
        sim.initial_totals = sim.totals();
        let vol = sim.system.mesh.cell_volume();
        let m = model.components();
        sim.initial_scale = (0..m)
            .map(|c| u0.iter().skip(c).step_by(m).map(|v| v.abs()).sum::<f64>() * vol)
            .collect();
        Ok(sim)
    }

    pub fn macro_field(&self) -> Vec<f64> {
        self.system.macro_field(&self.f)
    }

    /// `sum_i u_i |cell| + outflow` per component.
    pub fn totals(&self) -> Vec<f64> {
        let m = self.system.model.components();
        let u = self.macro_field();
        let vol = self.system.mesh.cell_volume();
        let mut out = vec![0.0; m];
        for cell in u.chunks_exact(m) {
            for c in 0..m {
                out[c] += cell[c];
            }
        }
        for c in 0..m {
            out[c] = out[c] * vol + self.f.ledger[c];
        }
        out
    }

    /// Change of [`Simulation::totals`] since the start, relative to the
    /// initial L1 mass of each component (which covers zero-mean data).
    pub fn conservation_drift(&self) -> Vec<f64> {
        self.totals()
            .iter()
            .zip(&self.initial_totals)
            .zip(&self.initial_scale)
            .map(|((now, then), scale)| {
                let d = (now - then).abs();
                if *scale > 0.0 {
                    d / scale
                } else {
                    d
                }
            })
            .collect()
    }

    pub fn rhs_evaluations(&self) -> u64 {
        self.system.evaluations
    }

    /// Current characteristic demand and supplied speed, comparable units.
    fn speed_check(&self, u: &[f64]) -> Result<(f64, f64), SolverError> {
        let model = &self.system.model;
        let speeds = model.max_wave_speed(u)?;
        if model.dim() == 1 {
            Ok((speeds[0], self.system.vset.max_speed(0)))
        } else {
            let sum: f64 = speeds.iter().map(|s| s * s).sum();
            let need = v_max_squared_bound(sum, self.r_count).sqrt();
            Ok((need, self.system.vset.max_speed(0).max(self.system.vset.max_speed(1))))
        }
    }

    fn enforce_subcharacteristic(&mut self) -> Result<(), SolverError> {
        let u = self.macro_field();
        let (need, have) = self.speed_check(&u)?;
        if need <= have * (1.0 + 1e-12) {
            return Ok(());
        }
        if self.violations == 0 {
            warn!(
                "subcharacteristic condition violated at t = {:.6}: velocities {have} below {need}",
                self.t
            );
        } else {
            debug!("subcharacteristic condition still violated at t = {:.6} ({have} < {need})", self.t);
        }
        self.violations += 1;
        if !self.rescale.enabled {
            return Ok(());
        }
        let new_speed = need * self.rescale.factor;
        let vset = if self.system.model.dim() == 1 {
            gauss_hermite_pair(new_speed)?
        } else {
            orthogonal_velocities(self.r_count, self.s_count, new_speed)?
        };
        self.system.set_velocities(vset);
        let ledger = self.f.ledger.clone();
        self.f = self.system.lift(&u)?;
        self.f.ledger = ledger;
        self.rescales.push(RescaleEvent {
            time: self.t,
            outer_step: self.outer_steps,
            old_speed: have,
            new_speed,
        });
        Ok(())
    }

    /// One outer step of length `dt`.
    pub fn step(&mut self, dt: f64) -> Result<(), SolverError> {
        let evaluations = self.system.evaluations;
        projective_step(&mut self.f, &self.scheme, dt, &mut self.system, &mut self.work)?;
        self.outer_steps += 1;
        if !crate::timeint::StepState::all_finite(&self.f) {
            return Err(StepError::NonFinite {
                outer: self.outer_steps,
                step: self.system.evaluations - evaluations,
            }
            .into());
        }
        self.t += dt;
        self.enforce_subcharacteristic()?;
        Ok(())
    }

    /// Advances to `t_end`, shortening the last outer step to land on it.
    pub fn run_to(&mut self, t_end: f64) -> Result<(), SolverError> {
        if t_end < self.t {
            return Err(SolverError::BadTarget { from: self.t, to: t_end });
        }
        let start = self.t;
        let steps = outer_steps(t_end - start, self.scheme.big_dt);
        let n = steps.len();
        for (i, dt) in steps.into_iter().enumerate() {
            self.step(dt)?;
            if i + 1 == n {
                // remove accumulated rounding in t
                self.t = t_end;
            }
        }
        debug!("reached t = {} after {} outer steps", self.t, self.outer_steps);
        Ok(())
    }
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_time: f64,
    pub outer_steps: u64,
    pub rhs_evaluations: u64,
    pub wall_seconds: f64,
    pub conservation_drift: Vec<f64>,
    pub rescales: Vec<RescaleEvent>,
    pub subcharacteristic_violations: u64,
    pub final_speed: f64,
}

/// Builds and runs a simulation to `t_end`, returning the final macroscopic
/// field and a summary.
pub fn run_problem(setup: &RunSetup, t_end: f64) -> Result<(Vec<f64>, RunSummary), SolverError> {
    let clock = Instant::now();
    let mut sim = Simulation::new(setup)?;
    sim.run_to(t_end)?;
    let summary = sim.summary(clock.elapsed().as_secs_f64());
    Ok((sim.macro_field(), summary))
}

impl Simulation {
    pub fn summary(&self, wall_seconds: f64) -> RunSummary {
        RunSummary {
            final_time: self.t,
            outer_steps: self.outer_steps,
            rhs_evaluations: self.rhs_evaluations(),
            wall_seconds,
            conservation_drift: self.conservation_drift(),
            rescales: self.rescales.clone(),
            subcharacteristic_violations: self.violations,
            final_speed: self.system.vset.max_speed(0),
        }
    }
}
