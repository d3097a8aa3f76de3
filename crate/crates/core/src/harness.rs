//! Error measurement and convergence-order sweeps in space and time.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::problems::{exact_advection, exact_sod_field, Problem, ProblemError, ReferenceKind};
use crate::solver::{RescalePolicy, RunSetup, Simulation, SolverError, VelocityOptions};
use crate::space::{KineticField, KineticSystem, SpaceError, SpatialScheme};
use crate::spectrum::{exact_eigenvalues, Matrix2};
use crate::timeint::{InnerIntegrator, OuterMethod, ProjectiveScheme, StepError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("field sizes differ: {numeric} vs {reference}")]
    ShapeMismatch { numeric: usize, reference: usize },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("sweep point {value} failed: {source}")]
    Run {
        value: f64,
        #[source]
        source: SolverError,
    },
    #[error("problem {0} has no analytic reference")]
    NoReference(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Discrete L1 distance `sum_i |u_i - r_i| * vol`, summed over components.
pub fn error_1norm(numeric: &[f64], reference: &[f64], cell_volume: f64) -> Result<f64, HarnessError> {
    if numeric.len() != reference.len() {
        return Err(HarnessError::ShapeMismatch {
            numeric: numeric.len(),
            reference: reference.len(),
        });
    }
    Ok(numeric.iter().zip(reference).map(|(a, b)| (a - b).abs()).sum::<f64>() * cell_volume)
}

/// Total variation of component `c` along a 1D field.
pub fn total_variation(u: &[f64], components: usize, c: usize) -> f64 {
    let vals: Vec<f64> = u.iter().skip(c).step_by(components).copied().collect();
    vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// A point is plateau if its error is within this factor of the last one...
pub const PLATEAU_FACTOR: f64 = 3.0;
/// ...and its slope from the previous point is below this.
pub const PLATEAU_SLOPE: f64 = 0.3;
/// Points needed for a reported slope.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    /// Slope from each point to its predecessor (`None` for the first).
    pub local_slopes: Vec<Option<f64>>,
    pub plateau: Vec<bool>,
    pub slope: Option<f64>,
    /// Geometric mean of the plateau errors.
    pub plateau_floor: Option<f64>,
    pub insufficient_points: bool,
}

/// Fits the order of `errors` against a decreasing `sweep`, leaving out
/// plateau points. The plateau test uses the slope from a point towards
/// the next finer one (the last point looks back instead).
pub fn fit_slope(sweep: &[f64], errors: &[f64]) -> SlopeFit {
    let n = sweep.len();
    let last = errors.last().copied().unwrap_or(0.0);
    let slope_between = |a: usize, b: usize| -> Option<f64> {
        (errors[a] > 0.0 && errors[b] > 0.0).then(|| (errors[a] / errors[b]).ln() / (sweep[a] / sweep[b]).ln())
    };
    let local_slopes: Vec<Option<f64>> = (0..n).map(|k| if k == 0 { None } else { slope_between(k - 1, k) }).collect();
    let mut plateau = vec![false; n];
    for k in 0..n {
        if errors[k] <= 0.0 || !errors[k].is_finite() {
            plateau[k] = true;
            continue;
        }
        let onward = if k + 1 < n { slope_between(k, k + 1) } else { local_slopes[k] };
        if let Some(s) = onward {
            plateau[k] = errors[k] <= PLATEAU_FACTOR * last && s < PLATEAU_SLOPE;
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
        .filter(|&k| !plateau[k])
        .map(|k| (sweep[k], errors[k]))
        .unzip();
    let insufficient_points = xs.len() < MIN_FIT_POINTS;
    let slope = (!insufficient_points).then(|| log_log_slope(&xs, &ys));
    let floor: Vec<f64> = (0..n).filter(|&k| plateau[k] && errors[k] > 0.0).map(|k| errors[k].ln()).collect();
    let plateau_floor = (!floor.is_empty()).then(|| (floor.iter().sum::<f64>() / floor.len() as f64).exp());
    SlopeFit {
        local_slopes,
        plateau,
        slope,
        plateau_floor,
        insufficient_points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Dx,
    Dt,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub value: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub variable: SweepVariable,
    pub sweep: Vec<f64>,
    pub errors: Vec<f64>,
    /// Outer step used at each point.
    pub outer_dt: Vec<f64>,
    pub rhs_evaluations: Vec<u64>,
    pub wall_seconds: Vec<f64>,
    pub fit: SlopeFit,
    pub skipped: Vec<SkippedPoint>,
}

impl ErrorReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.slope
    }

    /// CSV table: sweep value, error, local slope, plateau flag.
    pub fn to_csv(&self) -> String {
        let name = match self.variable {
            SweepVariable::Dx => "dx",
            SweepVariable::Dt => "dt",
        };
        let mut s = format!("{name},error,local_slope,plateau\n");
        for k in 0..self.sweep.len() {
            let local = self.fit.local_slopes[k].map(crate::problems::format_sig).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{}\n",
                crate::problems::format_sig(self.sweep[k]),
                crate::problems::format_sig(self.errors[k]),
                local,
                self.fit.plateau[k]
            ));
        }
        s
    }
}

/// `Dt = c * dx^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling {
    pub c: f64,
    pub power: f64,
}

impl Coupling {
    pub fn dt(&self, dx: f64) -> f64 {
        self.c * dx.powf(self.power)
    }

    /// Outer step coupling for a method of order `q` over a spatial scheme
    /// of order `p`: `Dt ~ dx^(p/q)`, CFL-limited once that drops below 1.
    pub fn standard(outer: OuterMethod, order: u8) -> Coupling {
        match (outer, order) {
            (OuterMethod::Pfe, 1) => Coupling { c: 0.8, power: 1.0 },
            (OuterMethod::Pfe, 2) => Coupling { c: 20.0, power: 2.0 },
            (OuterMethod::Pfe, _) => Coupling { c: 100.0, power: 3.0 },
            (OuterMethod::Prk2, 1 | 2) => Coupling { c: 0.5, power: 1.0 },
            (OuterMethod::Prk2, _) => Coupling { c: 5.0, power: 1.5 },
            (OuterMethod::Prk4, _) => Coupling { c: 0.4, power: 1.0 },
        }
    }
}

/// Solver settings shared by all points of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTemplate {
    pub scheme: SpatialScheme,
    pub inner: InnerIntegrator,
    pub outer: OuterMethod,
    pub eps: f64,
    pub delta_t: f64,
    pub k: usize,
    pub velocities: VelocityOptions,
    pub rescale: RescalePolicy,
}

impl SweepTemplate {
    /// Template with `delta_t = eps` and `K = 2`.
    pub fn new(scheme: SpatialScheme, outer: OuterMethod, eps: f64) -> Self {
        SweepTemplate {
            scheme,
            inner: InnerIntegrator::Fe,
            outer,
            eps,
            delta_t: eps,
            k: 2,
            velocities: VelocityOptions::default(),
            rescale: RescalePolicy::default(),
        }
    }

    /// Whether `big_dt` leaves room for the `K + 1` inner steps.
    pub fn feasible(&self, big_dt: f64) -> bool {
        big_dt >= (self.k + 1) as f64 * self.delta_t
    }

    /// Why a sweep point with outer step `big_dt` over `[0, horizon]` cannot
    /// be run as coupled: too short for the inner steps, or longer than the
    /// whole run (a single truncated step would not sample the coupling).
    pub fn infeasibility(&self, big_dt: f64, horizon: f64) -> Option<String> {
        if !self.feasible(big_dt) {
            Some(format!(
                "outer step {big_dt:e} shorter than {} inner steps of {:e}",
                self.k + 1,
                self.delta_t
            ))
        } else if big_dt > horizon * (1.0 + 1e-12) {
            Some(format!("outer step {big_dt:e} longer than the final time {horizon:e}"))
        } else {
            None
        }
    }

    pub fn setup(&self, problem: &Problem, cells: [usize; 2], big_dt: f64) -> Result<RunSetup, SolverError> {
        Ok(RunSetup {
            problem: problem.clone(),
            cells,
            scheme: self.scheme,
            form: None,
            velocities: self.velocities.clone(),
            time: ProjectiveScheme::new(self.inner, self.outer, self.eps, self.delta_t, self.k, big_dt)?,
            rescale: self.rescale,
        })
    }
}

/// Analytic reference of `problem` on `cells` at `t`.
pub fn analytic_reference(problem: &Problem, cells: [usize; 2], t: f64) -> Result<Vec<f64>, HarnessError> {
    let mesh = problem.mesh(cells)?;
    match problem.reference {
        ReferenceKind::Exact => Ok(exact_advection(problem, &mesh, t)?),
        ReferenceKind::RiemannExact => Ok(exact_sod_field(problem, &mesh, t)?),
        _ => Err(HarnessError::NoReference(problem.name.clone())),
    }
}

struct PointResult {
    error: f64,
    evaluations: u64,
    wall: f64,
}

fn run_point(setup: &RunSetup, t: f64, reference: &[f64], value: f64) -> Result<PointResult, HarnessError> {
    let clock = Instant::now();
    let wrap = |source: SolverError| HarnessError::Run { value, source };
    let mut sim = Simulation::new(setup).map_err(wrap)?;
    sim.run_to(t).map_err(wrap)?;
    let error = error_1norm(&sim.macro_field(), reference, sim.system.mesh.cell_volume())?;
    Ok(PointResult {
        error,
        evaluations: sim.rhs_evaluations(),
        wall: clock.elapsed().as_secs_f64(),
    })
}

fn check_decreasing(values: &[f64]) -> Result<(), HarnessError> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) || values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::InvalidSweep(format!(
            "sweep values must be positive and strictly decreasing: {values:?}"
        )));
    }
    Ok(())
}

fn assemble(
    variable: SweepVariable,
    values: &[f64],
    outer_dt: &[f64],
    results: Vec<Result<Result<PointResult, HarnessError>, String>>,
) -> Result<ErrorReport, HarnessError> {
    let mut report = ErrorReport {
        variable,
        sweep: Vec::new(),
        errors: Vec::new(),
        outer_dt: Vec::new(),
        rhs_evaluations: Vec::new(),
        wall_seconds: Vec::new(),
        fit: fit_slope(&[], &[]),
        skipped: Vec::new(),
    };
    for ((value, dt), r) in values.iter().zip(outer_dt).zip(results) {
        match r {
            Err(reason) => report.skipped.push(SkippedPoint { value: *value, reason }),
            Ok(r) => {
                let p = r?;
                report.sweep.push(*value);
                report.errors.push(p.error);
                report.outer_dt.push(*dt);
                report.rhs_evaluations.push(p.evaluations);
                report.wall_seconds.push(p.wall);
            }
        }
    }
    report.fit = fit_slope(&report.sweep, &report.errors);
    Ok(report)
}

/// Runs `problem` to its final time at each spacing in `dx_list` with the
/// coupled outer step and measures the error against the analytic solution.
/// Points whose outer step cannot hold `K + 1` inner steps, or exceeds the
/// final time, are skipped.
pub fn spatial_order_sweep(
    problem: &Problem,
    template: &SweepTemplate,
    dx_list: &[f64],
    coupling: Coupling,
) -> Result<ErrorReport, HarnessError> {
    check_decreasing(dx_list)?;
    let t = problem.t_final;
    let dts: Vec<f64> = dx_list.iter().map(|&dx| coupling.dt(dx)).collect();
    let results: Vec<_> = dx_list
        .par_iter()
        .zip(&dts)
        .map(|(&dx, &dt)| {
            if let Some(reason) = template.infeasibility(dt, t) {
                return Err(reason);
            }
            let cells = problem.cells_for_spacing(dx);
            Ok((|| {
                let reference = analytic_reference(problem, cells, t)?;
                let setup = template.setup(problem, cells, dt).map_err(|source| HarnessError::Run { value: dx, source })?;
                run_point(&setup, t, &reference, dx)
            })())
        })
        .collect();
    assemble(SweepVariable::Dx, dx_list, &dts, results)
}

/// Reference for a temporal sweep.
#[derive(Debug, Clone, Copy)]
pub enum TemporalReference<'a> {
    /// Exact solution of the linear semi-discrete system.
    MatrixExponential,
    /// A stored macroscopic field on the sweep grid.
    Field(&'a [f64]),
}

/// Runs `problem` on a fixed grid to time `t` with each outer step in
/// `dt_list` and measures the error against `reference`.
pub fn temporal_order_sweep(
    problem: &Problem,
    template: &SweepTemplate,
    dx: f64,
    t: f64,
    dt_list: &[f64],
    reference: TemporalReference,
) -> Result<ErrorReport, HarnessError> {
    check_decreasing(dt_list)?;
    let cells = problem.cells_for_spacing(dx);
    let reference: Vec<f64> = match reference {
        TemporalReference::Field(u) => u.to_vec(),
        TemporalReference::MatrixExponential => {
            if !problem.model.is_linear() {
                return Err(HarnessError::InvalidSweep(format!(
                    "{} is nonlinear; a stored reference is required",
                    problem.name
                )));
            }
            let sim = Simulation::new(&template.setup(problem, cells, dt_list[0])?)?;
            let mut system = sim.system;
            let f_t = expm_solution(&mut system, &sim.f, t)?;
            system.macro_field(&f_t)
        }
    };
    let results: Vec<_> = dt_list
        .par_iter()
        .map(|&dt| {
            if let Some(reason) = template.infeasibility(dt, t) {
                return Err(reason);
            }
            Ok((|| {
                let setup = template.setup(problem, cells, dt).map_err(|source| HarnessError::Run { value: dt, source })?;
                run_point(&setup, t, &reference, dt)
            })())
        })
        .collect();
    assemble(SweepVariable::Dt, dt_list, dt_list, results)
}

/// Dense matrix of the (linear) kinetic right-hand side, column by column.
pub fn assemble_operator(system: &mut KineticSystem) -> Result<DMatrix<f64>, HarnessError> {
    let n = system.field_len();
    let mut a = DMatrix::zeros(n, n);
    let mut e = system.zeros();
    let mut out = system.zeros();
    for col in 0..n {
        e.data[col] = 1.0;
        system.rhs(&e, &mut out).map_err(|e| SolverError::Step(StepError::from(e)))?;
        a.set_column(col, &DVector::from_column_slice(&out.data));
        e.data[col] = 0.0;
    }
    Ok(a)
}

/// `exp(t A) f0` for the assembled operator `A`.
pub fn expm_solution(system: &mut KineticSystem, f0: &KineticField, t: f64) -> Result<KineticField, HarnessError> {
    let a = assemble_operator(system)? * t;
    let f = a.exp() * DVector::from_column_slice(&f0.data);
    let mut out = f0.clone();
    out.data.copy_from_slice(f.as_slice());
    Ok(out)
}

/// `exp(t B)` for a 2x2 complex matrix with distinct eigenvalues.
pub fn mode_exponential(b: &Matrix2, t: f64) -> Matrix2 {
    let (l1, l2) = exact_eigenvalues(b);
    let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
    let d = l1 - l2;
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let id = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            out[r][c] = (e1 * (b[r][c] - l2 * id) - e2 * (b[r][c] - l1 * id)) / d;
        }
    }
    out
}
