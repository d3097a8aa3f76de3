//! Built-in benchmark problems, their exact solutions where known, and
//! persisted fine-grid reference fields.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FluxModel, GAMMA_DIATOMIC, DEFAULT_GRAVITY};
use sha2::{Digest, Sha256};

use crate::solver::{run_problem, RescalePolicy, RunSetup, VelocityOptions};
use crate::space::{Boundary, Mesh, SpaceError, SpatialScheme};
use crate::timeint::{InnerIntegrator, OuterMethod, ProjectiveScheme};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem {0:?}")]
    UnknownProblem(String),
    #[error("problem {problem} does not use the {expected} model")]
    WrongModel { problem: String, expected: &'static str },
    #[error("Riemann pressure iteration did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid Riemann data: {0}")]
    InvalidRiemannData(String),
    #[error("reference file {path}: {reason}")]
    Reference { path: PathBuf, reason: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("reference run failed: {0}")]
    Solver(#[source] Box<crate::solver::SolverError>),
}

/// Names accepted by [`builtin_problem`].
pub const BUILTIN_NAMES: [&str; 8] = [
    "advection1d",
    "burgers1d",
    "burgers1d_sinc",
    "burgers1d_sine",
    "sod1d",
    "advection2d",
    "dambreak2d",
    "dsod2d",
];

/// Primitive state of a gamma-law gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub rho: f64,
    pub v: f64,
    pub p: f64,
}

impl Primitive {
    pub fn conserved(&self, gamma: f64) -> [f64; 3] {
        [self.rho, self.rho * self.v, self.p / (gamma - 1.0) + 0.5 * self.rho * self.v * self.v]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `exp(-k (x - c)^2)`
    Gaussian1d { center: f64, k: f64 },
    /// `sin(5 (x - 1)) / (5 (x - 1))`
    Sinc1d { center: f64, scale: f64 },
    /// `sin(pi x)`
    Sine1d,
    /// Two constant gas states split at `x0`.
    Riemann1d { x0: f64, left: Primitive, right: Primitive },
    /// `exp(-k (x - cx)^2) exp(-k (y - cy)^2)`
    Gaussian2d { center: [f64; 2], k: f64 },
    /// Depth `inner` where `x^2 + y^2 <= r2`, `outer` elsewhere, at rest.
    DamBreak { r2: f64, inner: f64, outer: f64 },
    /// `rho = p = low` where `x y <= 0`, `high` elsewhere, at rest.
    DoubleSod { low: f64, high: f64 },
}

/// How a problem's error is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Exact,
    RiemannExact,
    FineGrid,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub model: FluxModel,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Default cells per axis (1 for the unused axis in 1D).
    pub cells: [usize; 2],
    pub bc: Boundary,
    pub t_final: f64,
    pub initial: InitialCondition,
    pub reference: ReferenceKind,
}

pub fn builtin_problem(name: &str) -> Result<Problem, ProblemError> {
    let gas = FluxModel::Euler1d { gamma: GAMMA_DIATOMIC };
    let p = match name {
        "advection1d" => Problem {
            name: name.into(),
            model: FluxModel::Advection1d { a: 1.0 },
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            cells: [100, 1],
            bc: Boundary::Periodic,
            t_final: 0.02,
            initial: InitialCondition::Gaussian1d { center: 0.5, k: 100.0 },
            reference: ReferenceKind::Exact,
        },
        "burgers1d" | "burgers1d_sinc" | "burgers1d_sine" => Problem {
            name: name.into(),
            model: FluxModel::Burgers1d,
            lo: [0.0, 0.0],
            hi: [2.0, 1.0],
            cells: [200, 1],
            bc: Boundary::Periodic,
            t_final: if name == "burgers1d_sine" { 1.0 } else { 0.04 },
            initial: match name {
                "burgers1d" => InitialCondition::Gaussian1d { center: 1.0, k: 25.0 },
                "burgers1d_sinc" => InitialCondition::Sinc1d { center: 1.0, scale: 5.0 },
                _ => InitialCondition::Sine1d,
            },
            reference: ReferenceKind::FineGrid,
        },
        "sod1d" => Problem {
            name: name.into(),
            model: gas,
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            cells: [200, 1],
            bc: Boundary::Outflow,
            t_final: 0.22,
            initial: InitialCondition::Riemann1d {
                x0: 0.5,
                left: Primitive { rho: 1.0, v: 0.0, p: 1.0 },
                right: Primitive { rho: 0.125, v: 0.0, p: 0.1 },
            },
            reference: ReferenceKind::RiemannExact,
        },
        "advection2d" => Problem {
            name: name.into(),
            model: FluxModel::Advection2d { a: 1.0, b: 1.0 },
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            cells: [25, 25],
            bc: Boundary::Periodic,
            t_final: 1.0,
            initial: InitialCondition::Gaussian2d { center: [0.5, 0.5], k: 50.0 },
            reference: ReferenceKind::Exact,
        },
        "dambreak2d" => Problem {
            name: name.into(),
            model: FluxModel::ShallowWater2d { g: DEFAULT_GRAVITY },
            lo: [-2.5, -2.5],
            hi: [2.5, 2.5],
            cells: [200, 200],
            bc: Boundary::Outflow,
            t_final: 1.5,
            initial: InitialCondition::DamBreak { r2: 0.5, inner: 2.0, outer: 1.0 },
            reference: ReferenceKind::None,
        },
        "dsod2d" => Problem {
            name: name.into(),
            model: FluxModel::Euler2d { gamma: GAMMA_DIATOMIC },
            lo: [-0.5, -0.5],
            hi: [0.5, 0.5],
            cells: [100, 100],
            bc: Boundary::Outflow,
            t_final: 0.18,
            initial: InitialCondition::DoubleSod { low: 0.1, high: 1.0 },
            reference: ReferenceKind::None,
        },
        other => return Err(ProblemError::UnknownProblem(other.to_string())),
    };
    Ok(p)
}

/// `sin(z) / z` with the removable singularity filled in.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Mesh with the problem's domain and boundary and the given cell counts.
    pub fn mesh(&self, cells: [usize; 2]) -> Result<Mesh, ProblemError> {
        Ok(if self.dim() == 1 {
            Mesh::new_1d(self.lo[0], self.hi[0], cells[0], self.bc)?
        } else {
            Mesh::new_2d(self.lo, self.hi, cells, self.bc)?
        })
    }

    /// Cells per axis giving spacing `dx` on each axis.
    pub fn cells_for_spacing(&self, dx: f64) -> [usize; 2] {
        let nx = Mesh::cells_for_spacing(self.lo[0], self.hi[0], dx);
        let ny = if self.dim() == 2 { Mesh::cells_for_spacing(self.lo[1], self.hi[1], dx) } else { 1 };
        [nx, ny]
    }

    /// Conserved state at a point.
    pub fn initial_state(&self, x: f64, y: f64) -> Vec<f64> {
        match &self.initial {
            InitialCondition::Gaussian1d { center, k } => vec![(-k * (x - center).powi(2)).exp()],
            InitialCondition::Sinc1d { center, scale } => vec![sinc(scale * (x - center))],
            InitialCondition::Sine1d => vec![(PI * x).sin()],
            InitialCondition::Riemann1d { x0, left, right } => {
                let gamma = self.gamma();
                let s = if x <= *x0 { left } else { right };
                s.conserved(gamma).to_vec()
            }
            InitialCondition::Gaussian2d { center, k } => {
                vec![(-k * (x - center[0]).powi(2)).exp() * (-k * (y - center[1]).powi(2)).exp()]
            }
            InitialCondition::DamBreak { r2, inner, outer } => {
                let h = if x * x + y * y <= *r2 { *inner } else { *outer };
                vec![h, 0.0, 0.0]
            }
            InitialCondition::DoubleSod { low, high } => {
                let s = if x * y <= 0.0 { *low } else { *high };
                vec![s, 0.0, 0.0, s / (self.gamma() - 1.0)]
            }
        }
    }

    fn gamma(&self) -> f64 {
        match self.model {
            FluxModel::Euler1d { gamma } | FluxModel::Euler2d { gamma } => gamma,
            _ => GAMMA_DIATOMIC,
        }
    }

    /// Initial field `[cell][m]` sampled at cell centres.
    pub fn initial_field(&self, mesh: &Mesh) -> Vec<f64> {
        let mut u = Vec::with_capacity(mesh.cells() * self.model.components());
        for iy in 0..mesh.n[1] {
            let y = if mesh.dim == 2 { mesh.center(1, iy) } else { 0.0 };
            for ix in 0..mesh.n[0] {
                u.extend(self.initial_state(mesh.center(0, ix), y));
            }
        }
        u
    }
}

/// Translated initial profile `u0(x - a t)` with periodic wrap.
pub fn exact_advection(problem: &Problem, mesh: &Mesh, t: f64) -> Result<Vec<f64>, ProblemError> {
    let (a, b) = match problem.model {
        FluxModel::Advection1d { a } => (a, 0.0),
        FluxModel::Advection2d { a, b } => (a, b),
        _ => {
            return Err(ProblemError::WrongModel {
                problem: problem.name.clone(),
                expected: "advection",
            })
        }
    };
    let wrap = |x: f64, axis: usize| {
        let l = problem.hi[axis] - problem.lo[axis];
        problem.lo[axis] + (x - problem.lo[axis]).rem_euclid(l)
    };
    let mut u = Vec::with_capacity(mesh.cells());
    for iy in 0..mesh.n[1] {
        for ix in 0..mesh.n[0] {
            let x = wrap(mesh.center(0, ix) - a * t, 0);
            let y = if mesh.dim == 2 { wrap(mesh.center(1, iy) - b * t, 1) } else { 0.0 };
            u.extend(problem.initial_state(x, y));
        }
    }
    Ok(u)
}

/// Exact solution of the 1D gamma-law Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannSolution {
    pub left: Primitive,
    pub right: Primitive,
    pub gamma: f64,
    pub p_star: f64,
    pub v_star: f64,
    pub iterations: usize,
}

fn sound_speed(s: &Primitive, gamma: f64) -> f64 {
    (gamma * s.p / s.rho).sqrt()
}

/// Pressure function of one side and its derivative: shock branch for
/// `p > p_k`, rarefaction branch otherwise.
fn side_function(p: f64, s: &Primitive, gamma: f64) -> (f64, f64) {
    let c = sound_speed(s, gamma);
    if p > s.p {
        let a = 2.0 / ((gamma + 1.0) * s.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * s.p;
        let q = (a / (p + b)).sqrt();
        let f = (p - s.p) * q;
        (f, q * (1.0 - 0.5 * (p - s.p) / (b + p)))
    } else {
        let e = (gamma - 1.0) / (2.0 * gamma);
        let r = p / s.p;
        let f = 2.0 * c / (gamma - 1.0) * (r.powf(e) - 1.0);
        (f, 1.0 / (s.rho * c) * r.powf(-(gamma + 1.0) / (2.0 * gamma)))
    }
}

/// Solves for the star state by Newton iteration on the pressure function
/// (relative change below `1e-12`, at most 100 iterations).
pub fn solve_riemann(left: Primitive, right: Primitive, gamma: f64) -> Result<RiemannSolution, ProblemError> {
    if !(left.rho > 0.0 && right.rho > 0.0 && left.p > 0.0 && right.p > 0.0 && gamma > 1.0) {
        return Err(ProblemError::InvalidRiemannData(format!("{left:?} | {right:?}, gamma = {gamma}")));
    }
    let (cl, cr) = (sound_speed(&left, gamma), sound_speed(&right, gamma));
    let du = right.v - left.v;
    if 2.0 * (cl + cr) / (gamma - 1.0) <= du {
        return Err(ProblemError::InvalidRiemannData("vacuum is generated".into()));
    }
    // two-rarefaction estimate as the starting guess
    let e = (gamma - 1.0) / (2.0 * gamma);
    let guess = ((cl + cr - 0.5 * (gamma - 1.0) * du) / (cl / left.p.powf(e) + cr / right.p.powf(e))).powf(1.0 / e);
    let mut p = guess.max(1e-14);
    const MAX_ITER: usize = 100;
    const TOL: f64 = 1e-12;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let (fl, dl) = side_function(p, &left, gamma);
        let (fr, dr) = side_function(p, &right, gamma);
        residual = fl + fr + du;
        let mut next = p - residual / (dl + dr);
        if next <= 0.0 {
            next = 0.5 * p;
        }
        let change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < TOL {
            let (fl, _) = side_function(p, &left, gamma);
            let (fr, _) = side_function(p, &right, gamma);
            let v = 0.5 * (left.v + right.v) + 0.5 * (fr - fl);
            return Ok(RiemannSolution {
                left,
                right,
                gamma,
                p_star: p,
                v_star: v,
                iterations: it,
            });
        }
    }
    Err(ProblemError::NoConvergence {
        iterations: MAX_ITER,
        residual,
    })
}

impl RiemannSolution {
    /// Density behind the left / right wave.
    pub fn star_densities(&self) -> (f64, f64) {
        let g = self.gamma;
        let star = |s: &Primitive| {
            let r = self.p_star / s.p;
            if self.p_star > s.p {
                let k = (g - 1.0) / (g + 1.0);
                s.rho * (r + k) / (k * r + 1.0)
            } else {
                s.rho * r.powf(1.0 / g)
            }
        };
        (star(&self.left), star(&self.right))
    }

    /// Speed of the right-moving shock, when the right wave is a shock.
    pub fn right_shock_speed(&self) -> Option<f64> {
        let g = self.gamma;
        let s = &self.right;
        (self.p_star > s.p).then(|| {
            s.v + sound_speed(s, g) * ((g + 1.0) / (2.0 * g) * self.p_star / s.p + (g - 1.0) / (2.0 * g)).sqrt()
        })
    }

    /// Samples the self-similar solution at `xi = (x - x0) / t`.
    pub fn sample(&self, xi: f64) -> Primitive {
        let g = self.gamma;
        let (rho_l_star, rho_r_star) = self.star_densities();
        if xi <= self.v_star {
            let s = &self.left;
            let c = sound_speed(s, g);
            if self.p_star > s.p {
                let shock = s.v - c * ((g + 1.0) / (2.0 * g) * self.p_star / s.p + (g - 1.0) / (2.0 * g)).sqrt();
                if xi <= shock {
                    *s
                } else {
                    Primitive { rho: rho_l_star, v: self.v_star, p: self.p_star }
                }
            } else {
                let head = s.v - c;
                let c_star = c * (self.p_star / s.p).powf((g - 1.0) / (2.0 * g));
                let tail = self.v_star - c_star;
                if xi <= head {
                    *s
                } else if xi >= tail {
                    Primitive { rho: rho_l_star, v: self.v_star, p: self.p_star }
                } else {
                    let k = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (s.v - xi);
                    Primitive {
                        rho: s.rho * k.powf(2.0 / (g - 1.0)),
                        v: 2.0 / (g + 1.0) * (c + (g - 1.0) / 2.0 * s.v + xi),
                        p: s.p * k.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        } else {
            let s = &self.right;
            let c = sound_speed(s, g);
            if self.p_star > s.p {
                let shock = self.right_shock_speed().unwrap();
                if xi >= shock {
                    *s
                } else {
                    Primitive { rho: rho_r_star, v: self.v_star, p: self.p_star }
                }
            } else {
                let head = s.v + c;
                let c_star = c * (self.p_star / s.p).powf((g - 1.0) / (2.0 * g));
                let tail = self.v_star + c_star;
                if xi >= head {
                    *s
                } else if xi <= tail {
                    Primitive { rho: rho_r_star, v: self.v_star, p: self.p_star }
                } else {
                    let k = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * c) * (s.v - xi);
                    Primitive {
                        rho: s.rho * k.powf(2.0 / (g - 1.0)),
                        v: 2.0 / (g + 1.0) * (-c + (g - 1.0) / 2.0 * s.v + xi),
                        p: s.p * k.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        }
    }
}

/// Exact Riemann solution of a 1D gas problem at `(x, t)`, in primitive form.
pub fn exact_sod(problem: &Problem, x: f64, t: f64) -> Result<Primitive, ProblemError> {
    let (gamma, x0, left, right) = match (&problem.model, &problem.initial) {
        (FluxModel::Euler1d { gamma }, InitialCondition::Riemann1d { x0, left, right }) => (*gamma, *x0, *left, *right),
        _ => {
            return Err(ProblemError::WrongModel {
                problem: problem.name.clone(),
                expected: "euler1d Riemann",
            })
        }
    };
    if t <= 0.0 {
        return Ok(if x <= x0 { left } else { right });
    }
    let sol = solve_riemann(left, right, gamma)?;
    Ok(sol.sample((x - x0) / t))
}

/// Exact conserved field `[cell][3]` at time `t` on `mesh`.
pub fn exact_sod_field(problem: &Problem, mesh: &Mesh, t: f64) -> Result<Vec<f64>, ProblemError> {
    let gamma = match problem.model {
        FluxModel::Euler1d { gamma } => gamma,
        _ => {
            return Err(ProblemError::WrongModel {
                problem: problem.name.clone(),
                expected: "euler1d",
            })
        }
    };
    let mut u = Vec::with_capacity(3 * mesh.cells());
    for i in 0..mesh.n[0] {
        u.extend(exact_sod(problem, mesh.center(0, i), t)?.conserved(gamma));
    }
    Ok(u)
}

/// Metadata stored next to a reference field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub problem: String,
    pub config_hash: String,
    pub cells: [usize; 2],
    pub components: usize,
    pub time: f64,
    /// Free-form notes, e.g. a relaxed outer step.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// A stored reference: cell-centre coordinates and conserved values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceField {
    pub meta: ReferenceMeta,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `<path>` (CSV) and `<path>.json` (metadata).
pub fn save_reference(path: &Path, reference: &ReferenceField) -> Result<(), ProblemError> {
    let m = reference.meta.components;
    let mut text = String::from("x");
    for c in 0..m {
        text.push_str(&format!(",u{c}"));
    }
    text.push('\n');
    for (i, x) in reference.x.iter().enumerate() {
        text.push_str(&format_sig(*x));
        for c in 0..m {
            text.push(',');
            text.push_str(&format_sig(reference.u[i * m + c]));
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    let meta = serde_json::to_string_pretty(&reference.meta).map_err(|e| ProblemError::Reference {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    fs::write(sidecar_path(path), meta)?;
    Ok(())
}

pub fn load_reference(path: &Path) -> Result<ReferenceField, ProblemError> {
    let bad = |reason: String| ProblemError::Reference {
        path: path.to_path_buf(),
        reason,
    };
    let meta: ReferenceMeta =
        serde_json::from_str(&fs::read_to_string(sidecar_path(path))?).map_err(|e| bad(e.to_string()))?;
    let text = fs::read_to_string(path)?;
    let mut x = Vec::new();
    let mut u = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
        if vals.len() != meta.components + 1 {
            return Err(bad(format!("line {} has {} columns", ln + 1, vals.len())));
        }
        x.push(vals[0]);
        u.extend_from_slice(&vals[1..]);
    }
    Ok(ReferenceField { meta, x, u })
}

/// Solver configuration used to build a fine-grid reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineGridSpec {
    pub dx: f64,
    pub scheme: SpatialScheme,
    pub inner: InnerIntegrator,
    pub outer: OuterMethod,
    pub eps: f64,
    pub delta_t: f64,
    pub k: usize,
    pub big_dt: f64,
    pub time: f64,
}

impl FineGridSpec {
    /// High-order reference setup: PRK4 over third-order upwinding on a
    /// 0.01 grid with eps = inner step = 1e-8 and outer step 1e-6.
    pub fn high_order(time: f64) -> Self {
        FineGridSpec {
            dx: 1e-2,
            scheme: SpatialScheme::Upwind(3),
            inner: InnerIntegrator::Fe,
            outer: OuterMethod::Prk4,
            eps: 1e-8,
            delta_t: 1e-8,
            k: 2,
            big_dt: 1e-6,
            time,
        }
    }

    /// Hex SHA-256 of the problem and this spec.
    pub fn config_hash(&self, problem: &Problem) -> String {
        let text = serde_json::to_string(&(problem, self)).expect("plain data serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Runs the solver at `spec` and returns the final macroscopic field.
pub fn fine_grid_reference(problem: &Problem, spec: &FineGridSpec) -> Result<ReferenceField, ProblemError> {
    let cells = problem.cells_for_spacing(spec.dx);
    let time = ProjectiveScheme::new(spec.inner, spec.outer, spec.eps, spec.delta_t, spec.k, spec.big_dt)
        .map_err(|e| ProblemError::Solver(Box::new(e.into())))?;
    let setup = RunSetup {
        problem: problem.clone(),
        cells,
        scheme: spec.scheme,
        form: None,
        velocities: VelocityOptions::default(),
        time,
        rescale: RescalePolicy::default(),
    };
    let mut notes = Vec::new();
    let u = if spec.time == 0.0 {
        problem.initial_field(&problem.mesh(cells)?)
    } else {
        let (u, summary) = run_problem(&setup, spec.time).map_err(|e| ProblemError::Solver(Box::new(e)))?;
        notes.push(format!(
            "{} outer steps, {} rhs evaluations, {:.1} s",
            summary.outer_steps, summary.rhs_evaluations, summary.wall_seconds
        ));
        for r in &summary.rescales {
            notes.push(format!("velocities rescaled at t = {} to {}", r.time, r.new_speed));
        }
        u
    };
    let mesh = problem.mesh(cells)?;
    Ok(ReferenceField {
        meta: ReferenceMeta {
            problem: problem.name.clone(),
            config_hash: spec.config_hash(problem),
            cells,
            components: problem.model.components(),
            time: spec.time,
            notes,
        },
        x: (0..cells[0]).map(|i| mesh.center(0, i)).collect(),
        u,
    })
}

/// Decimal with 17 significant digits, which round-trips any `f64`.
pub fn format_sig(v: f64) -> String {
    format!("{v:.16e}")
}
