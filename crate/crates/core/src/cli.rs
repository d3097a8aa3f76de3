//! Command-line front end: configuration files, run orchestration and the
//! convergence, spectrum, params and reference subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error as ThisError;

use crate::harness::{spatial_order_sweep, temporal_order_sweep, Coupling, ErrorReport, SweepTemplate, TemporalReference};
use crate::model::{FluxModel, MaxwellianForm};
use crate::problems::{
    builtin_problem, fine_grid_reference, format_sig, load_reference, save_reference, FineGridSpec, Problem,
};
use crate::solver::{choose_velocities, RescalePolicy, RunSetup, RunSummary, Simulation, VelocityOptions};
use crate::space::{Boundary, Mesh, SpatialScheme};
use crate::spectrum::{advise_parameters, analyze_modes, spectrum_csv_row, AnalysisSetup, SPECTRUM_CSV_HEADER};
use crate::timeint::{InnerIntegrator, OuterMethod, ProjectiveScheme};
use crate::Error;

/// Prefix of environment variables that override configuration keys.
pub const ENV_PREFIX: &str = "KINPROJ_";

#[derive(Debug, ThisError)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}{}: {message}", key.as_ref().map(|k| format!(" (key `{k}`)")).unwrap_or_default())]
    Parse {
        line: usize,
        column: usize,
        key: Option<String>,
        message: String,
    },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SpatialScheme>,
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(rename = "I_y", default, skip_serializing_if = "Option::is_none")]
    pub cells_y: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc: Option<Boundary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxwellian: Option<MaxwellianForm>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<OuterMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerIntegrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_inner: Option<f64>,
    #[serde(rename = "Dt", default, skip_serializing_if = "Option::is_none")]
    pub big_dt: Option<f64>,
    /// `Dt = cfl * dx`; resolved into `Dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

/// A run configuration. After [`parse_config`] every key except the
/// velocity speeds (which default to the initial data) is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub velocities: VelocityConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub rescale: RescaleConfig,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
    let message = e.message().to_string();
    let key = message.split('`').nth(1).map(str::to_string);
    ConfigError::Parse {
        line,
        column,
        key,
        message,
    }
}

/// Parses TOML text, applies defaults and validates.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RunConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    raw.resolve()
}

/// Like [`parse_config`] with environment overrides applied on top of the
/// file; returns the overridden keys too.
pub fn parse_config_with_env(
    text: &str,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<(RunConfig, Vec<String>), ConfigError> {
    // checked alone first so errors in the file keep their positions
    let _: RunConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let mut table: toml::Table = text.parse().map_err(|e| parse_error(text, &e))?;
    let applied = apply_env_overrides(&mut table, vars)?;
    let raw: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Validation(vec![format!("environment override: {}", e.message())]))?;
    Ok((raw.resolve()?, applied))
}

/// Overrides `section.key` (or a top-level key) from `KINPROJ_SECTION_KEY`
/// variables, matching keys case-insensitively.
pub fn apply_env_overrides(
    table: &mut toml::Table,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<Vec<String>, ConfigError> {
    const KEYS: &[(&str, &[&str])] = &[
        ("", &["problem"]),
        ("model", &["a", "b", "gamma", "g"]),
        ("space", &["scheme", "I", "I_y", "bc", "maxwellian"]),
        ("velocities", &["sigma", "R", "S", "v_max"]),
        ("time", &["outer", "inner", "eps", "K", "dt_inner", "Dt", "cfl", "T"]),
        ("output", &["dir", "prefix", "snapshots"]),
        ("rescale", &["enabled", "factor"]),
    ];
    let mut applied = Vec::new();
    for (name, value) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        if rest == "LOG" || rest == "ACCEPTANCE" {
            continue;
        }
        let found = KEYS.iter().find_map(|(section, keys)| {
            keys.iter().find_map(|k| {
                let full = if section.is_empty() {
                    k.to_string()
                } else {
                    format!("{section}_{k}")
                };
                full.eq_ignore_ascii_case(rest).then_some((*section, *k))
            })
        });
        let Some((section, key)) = found else {
            return Err(ConfigError::Validation(vec![format!("{name} does not name a configuration key")]));
        };
        // numbers, booleans and arrays parse as TOML; anything else is a string
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.clone()));
        let target = if section.is_empty() {
            &mut *table
        } else {
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => t,
                _ => return Err(ConfigError::Validation(vec![format!("[{section}] is not a table")])),
            }
        };
        target.insert(key.to_string(), parsed);
        applied.push(if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        });
    }
    Ok(applied)
}

/// Spatial scheme used when the configuration names none.
pub fn default_scheme(problem: &str) -> SpatialScheme {
    match problem {
        "sod1d" | "dsod2d" => SpatialScheme::Eno(3),
        _ => SpatialScheme::Upwind(3),
    }
}

impl RunConfig {
    /// Minimal configuration for a built-in problem.
    pub fn for_problem(problem: &str) -> Self {
        RunConfig {
            problem: problem.to_string(),
            model: ModelConfig::default(),
            space: SpaceConfig::default(),
            velocities: VelocityConfig::default(),
            time: TimeConfig::default(),
            output: OutputConfig::default(),
            rescale: RescaleConfig::default(),
        }
    }

    /// Fills defaults and checks every constraint, reporting all violations.
    pub fn resolve(mut self) -> Result<RunConfig, ConfigError> {
        let mut errs = Vec::new();
        let base = match builtin_problem(&self.problem) {
            Ok(p) => p,
            Err(e) => return Err(ConfigError::Validation(vec![e.to_string()])),
        };
        let dim = base.dim();

        let m = &mut self.model;
        match base.model {
            FluxModel::Advection1d { a } => {
                m.a.get_or_insert(a);
                if m.b.is_some() {
                    errs.push("model.b applies to 2D advection only".into());
                }
            }
            FluxModel::Advection2d { a, b } => {
                m.a.get_or_insert(a);
                m.b.get_or_insert(b);
            }
            FluxModel::Euler1d { gamma } | FluxModel::Euler2d { gamma } => {
                m.gamma.get_or_insert(gamma);
            }
            FluxModel::ShallowWater2d { g } => {
                m.g.get_or_insert(g);
            }
            FluxModel::Burgers1d => {}
        }
        let uses = |key: &str| match base.model {
            FluxModel::Advection1d { .. } => key == "a",
            FluxModel::Advection2d { .. } => key == "a" || key == "b",
            FluxModel::Euler1d { .. } | FluxModel::Euler2d { .. } => key == "gamma",
            FluxModel::ShallowWater2d { .. } => key == "g",
            FluxModel::Burgers1d => false,
        };
        for (key, set) in [("a", m.a.is_some()), ("gamma", m.gamma.is_some()), ("g", m.g.is_some())] {
            if set && !uses(key) {
                errs.push(format!("model.{key} does not apply to {}", self.problem));
            }
        }

        let scheme = *self.space.scheme.get_or_insert(default_scheme(&self.problem));
        if let Err(e) = scheme.validate() {
            errs.push(format!("space.scheme: {e}"));
        }
        let cells = *self.space.cells.get_or_insert(base.cells[0]);
        if dim == 2 {
            self.space.cells_y.get_or_insert(base.cells[1]);
        } else if self.space.cells_y.is_some() {
            errs.push("space.I_y applies to 2D problems only".into());
        }
        self.space.bc.get_or_insert(base.bc);
        let model = self.flux_model(&base);
        let form = *self.space.maxwellian.get_or_insert(model.default_maxwellian());
        if (form == MaxwellianForm::Orthogonal) != (dim == 2) {
            errs.push(format!("space.maxwellian {form:?} does not fit a {dim}D problem"));
        }
        if let Err(e) = model.validate() {
            errs.push(format!("model: {e}"));
        }

        if dim == 1 && (self.velocities.r.is_some() || self.velocities.s.is_some() || self.velocities.v_max.is_some()) {
            errs.push("velocities.R, S and v_max apply to 2D problems only".into());
        }
        if dim == 2 && self.velocities.sigma.is_some() {
            errs.push("velocities.sigma applies to 1D problems only".into());
        }
        if dim == 2 {
            self.velocities.r.get_or_insert(1);
            self.velocities.s.get_or_insert(1);
        }
        for (key, v) in [("sigma", self.velocities.sigma), ("v_max", self.velocities.v_max)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    errs.push(format!("velocities.{key} = {v} must be positive"));
                }
            }
        }

        let t = &mut self.time;
        t.outer.get_or_insert(OuterMethod::Prk4);
        t.inner.get_or_insert(InnerIntegrator::Fe);
        let eps = *t.eps.get_or_insert(1e-8);
        let k = *t.k.get_or_insert(2);
        let delta_t = *t.dt_inner.get_or_insert(eps);
        let t_final = *t.t_final.get_or_insert(base.t_final);
        let dx = (base.hi[0] - base.lo[0]) / cells.max(1) as f64;
        let dx = match (dim, self.space.cells_y) {
            (2, Some(ny)) => dx.min((base.hi[1] - base.lo[1]) / ny.max(1) as f64),
            _ => dx,
        };
        let big_dt = match (t.big_dt, t.cfl) {
            (Some(_), Some(_)) => {
                errs.push("set only one of time.Dt and time.cfl".into());
                f64::NAN
            }
            (Some(d), None) => d,
            (None, c) => {
                let c = c.unwrap_or(if dim == 2 { 0.3 } else { 0.5 });
                if !(c > 0.0) {
                    errs.push(format!("time.cfl = {c} must be positive"));
                }
                c * dx
            }
        };
        t.cfl = None;
        t.big_dt = Some(big_dt);
        if !(eps > 0.0) {
            errs.push(format!("time.eps = {eps} must be positive"));
        }
        if !(delta_t > 0.0) {
            errs.push(format!("time.dt_inner = {delta_t} must be positive"));
        }
        if !(t_final > 0.0) {
            errs.push(format!("time.T = {t_final} must be positive"));
        }
        if !(big_dt > 0.0) {
            errs.push(format!("time.Dt = {big_dt} must be positive"));
        }
        if !(big_dt >= (k as f64 + 1.0) * delta_t) {
            errs.push(format!(
                "time.Dt = {big_dt} is shorter than the K + 1 = {} inner steps of {delta_t}",
                k + 1
            ));
        }

        let o = &mut self.output;
        o.dir.get_or_insert_with(|| "output".into());
        o.prefix.get_or_insert_with(|| self.problem.clone());
        let snaps = o.snapshots.get_or_insert_with(|| vec![t_final]);
        if snaps.is_empty() || snaps.iter().any(|s| !(*s > 0.0 && *s <= t_final)) {
            errs.push(format!("output.snapshots must lie in (0, T = {t_final}]"));
        }
        if snaps.windows(2).any(|w| w[1] <= w[0]) {
            errs.push("output.snapshots must be increasing".into());
        }

        let defaults = RescalePolicy::default();
        self.rescale.enabled.get_or_insert(defaults.enabled);
        let factor = *self.rescale.factor.get_or_insert(defaults.factor);
        if !(factor >= 1.0) {
            errs.push(format!("rescale.factor = {factor} must be at least 1"));
        }

        if errs.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Validation(errs))
        }
    }

    fn flux_model(&self, base: &Problem) -> FluxModel {
        let m = &self.model;
        match base.model {
            FluxModel::Advection1d { a } => FluxModel::Advection1d { a: m.a.unwrap_or(a) },
            FluxModel::Advection2d { a, b } => FluxModel::Advection2d {
                a: m.a.unwrap_or(a),
                b: m.b.unwrap_or(b),
            },
            FluxModel::Euler1d { gamma } => FluxModel::Euler1d {
                gamma: m.gamma.unwrap_or(gamma),
            },
            FluxModel::Euler2d { gamma } => FluxModel::Euler2d {
                gamma: m.gamma.unwrap_or(gamma),
            },
            FluxModel::ShallowWater2d { g } => FluxModel::ShallowWater2d { g: m.g.unwrap_or(g) },
            FluxModel::Burgers1d => FluxModel::Burgers1d,
        }
    }

    /// The built-in problem with this configuration's overrides.
    pub fn problem(&self) -> Result<Problem, Error> {
        let mut p = builtin_problem(&self.problem)?;
        p.model = self.flux_model(&p);
        if let Some(bc) = self.space.bc {
            p.bc = bc;
        }
        if let Some(t) = self.time.t_final {
            p.t_final = t;
        }
        Ok(p)
    }

    /// Solver setup of a resolved configuration.
    pub fn setup(&self) -> Result<RunSetup, Error> {
        let problem = self.problem()?;
        let t = &self.time;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| ConfigError::Validation(vec![format!("{key} unresolved")]));
        let cells = [
            self.space.cells.unwrap_or(problem.cells[0]),
            if problem.dim() == 2 {
                self.space.cells_y.unwrap_or(problem.cells[1])
            } else {
                1
            },
        ];
        let time = ProjectiveScheme::new(
            t.inner.unwrap_or(InnerIntegrator::Fe),
            t.outer.unwrap_or(OuterMethod::Prk4),
            need(t.eps, "time.eps")?,
            need(t.dt_inner, "time.dt_inner")?,
            t.k.unwrap_or(2),
            need(t.big_dt, "time.Dt")?,
        )
        .map_err(crate::solver::SolverError::from)?;
        let defaults = RescalePolicy::default();
        Ok(RunSetup {
            cells,
            scheme: self.space.scheme.unwrap_or_else(|| default_scheme(&self.problem)),
            form: self.space.maxwellian,
            velocities: VelocityOptions {
                sigma: self.velocities.sigma,
                r: self.velocities.r.unwrap_or(1),
                s: self.velocities.s.unwrap_or(1),
                v_max: self.velocities.v_max,
            },
            time,
            rescale: RescalePolicy {
                enabled: self.rescale.enabled.unwrap_or(defaults.enabled),
                factor: self.rescale.factor.unwrap_or(defaults.factor),
            },
            problem,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the serialized configuration.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// Column names of the conserved variables and of the derived ones.
pub fn field_columns(model: &FluxModel) -> (Vec<&'static str>, Vec<&'static str>) {
    match model {
        FluxModel::Advection1d { .. } | FluxModel::Burgers1d | FluxModel::Advection2d { .. } => (vec!["u"], vec![]),
        FluxModel::Euler1d { .. } => (vec!["rho", "rho_v", "E"], vec!["p", "v"]),
        FluxModel::Euler2d { .. } => (vec!["rho", "rho_vx", "rho_vy", "E"], vec!["p", "vx", "vy"]),
        FluxModel::ShallowWater2d { .. } => (vec!["h", "hu", "hv"], vec!["p", "vx", "vy"]),
    }
}

/// CSV of a macroscopic field: coordinates, conserved values, derived
/// pressure and velocity where the model has them. 17 significant digits.
pub fn field_csv(model: &FluxModel, mesh: &Mesh, u: &[f64]) -> String {
    let (cons, derived) = field_columns(model);
    let m = cons.len();
    let mut head: Vec<&str> = if mesh.dim == 2 { vec!["x", "y"] } else { vec!["x"] };
    head.extend(&cons);
    head.extend(&derived);
    let mut s = head.join(",");
    s.push('\n');
    for iy in 0..mesh.n[1] {
        for ix in 0..mesh.n[0] {
            let cell = &u[(iy * mesh.n[0] + ix) * m..(iy * mesh.n[0] + ix + 1) * m];
            let mut row = vec![format_sig(mesh.center(0, ix))];
            if mesh.dim == 2 {
                row.push(format_sig(mesh.center(1, iy)));
            }
            row.extend(cell.iter().map(|v| format_sig(*v)));
            if !derived.is_empty() {
                row.push(format_sig(model.equation_of_state(cell)));
                for c in 1..=mesh.dim {
                    row.push(format_sig(cell[c] / cell[0]));
                }
            }
            s.push_str(&row.join(","));
            s.push('\n');
        }
    }
    s
}

/// JSON record written next to the snapshots.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub problem: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub velocity_speed: f64,
    pub snapshots: Vec<Snapshot>,
    pub summary: RunSummary,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub file: String,
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs a resolved configuration, writing one CSV per snapshot and a JSON
/// manifest into the output directory.
pub fn run(config: &RunConfig) -> Result<RunManifest, Error> {
    let clock = Instant::now();
    let setup = config.setup()?;
    let dir = PathBuf::from(config.output.dir.clone().unwrap_or_else(|| "output".into()));
    let prefix = config.output.prefix.clone().unwrap_or_else(|| config.problem.clone());
    let mut sim = Simulation::new(&setup)?;
    let speed = sim.system.vset.max_speed(0);
    let mut snapshots = Vec::new();
    let times = config.output.snapshots.clone().unwrap_or_else(|| vec![setup.problem.t_final]);
    for (k, &t) in times.iter().enumerate() {
        sim.run_to(t)?;
        let file = format!("{prefix}_{k:03}.csv");
        write(&dir.join(&file), &field_csv(&sim.system.model, &sim.system.mesh, &sim.macro_field()))?;
        info!("t = {t}: wrote {file}");
        snapshots.push(Snapshot { time: t, file });
    }
    let mut notes = Vec::new();
    if sim.violations > 0 {
        notes.push(format!(
            "subcharacteristic condition violated after {} of {} outer steps",
            sim.violations, sim.outer_steps
        ));
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        problem: config.problem.clone(),
        config_hash: config.hash(),
        config: config.clone(),
        velocity_speed: speed,
        snapshots,
        summary: sim.summary(clock.elapsed().as_secs_f64()),
        notes,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&dir.join(format!("{prefix}_manifest.json")), &json)?;
    Ok(manifest)
}

#[derive(Debug, Parser)]
#[command(name = "kinproj", version, about = "Kinetic relaxation solver with projective time integration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure convergence orders in space or time.
    Convergence(ConvergenceArgs),
    /// Fourier-symbol eigenvalues and amplification factors per mode (CSV).
    Spectrum(SpectrumArgs),
    /// Suggest inner step, K and outer step for a problem.
    Params(ParamsArgs),
    /// Build and store a fine-grid reference solution.
    Reference(ReferenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Space,
    Time,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum)]
    pub sweep: SweepKind,
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value = "pfe")]
    pub outer: OuterMethod,
    #[arg(long, default_value = "fe")]
    pub inner: InnerIntegrator,
    /// Spatial scheme, e.g. upwind3 or eno2.
    #[arg(long, default_value = "upwind3")]
    pub scheme: SpatialScheme,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    /// Spacings of a space sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005])]
    pub dx: Vec<f64>,
    /// Outer steps of a time sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [0.04, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005, 0.0002, 0.0001])]
    pub dt: Vec<f64>,
    /// Fixed spacing of a time sweep.
    #[arg(long, default_value_t = 1e-2)]
    pub grid: f64,
    /// Final time (defaults to the problem's).
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// Coupling `Dt = C dx^power` of a space sweep (defaults by method and order).
    #[arg(long = "C")]
    pub c: Option<f64>,
    #[arg(long)]
    pub power: Option<f64>,
    /// Reference for nonlinear time sweeps: a stored CSV or `builtin`.
    #[arg(long)]
    pub reference: Option<String>,
    /// Write the CSV table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub dx: f64,
    #[arg(long)]
    pub order: u8,
    #[arg(long, default_value_t = 1.0)]
    pub vstar: f64,
    /// Number of modes (defaults to 1/dx).
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long, default_value = "fe")]
    pub inner: InnerIntegrator,
    #[arg(long, default_value = "pfe")]
    pub outer: OuterMethod,
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    /// Inner step (defaults to eps).
    #[arg(long)]
    pub dt_inner: Option<f64>,
    /// Outer step (defaults to dx / vstar).
    #[arg(long = "Dt")]
    pub big_dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value = "upwind1")]
    pub scheme: SpatialScheme,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value = "fe")]
    pub inner: InnerIntegrator,
    #[arg(long, default_value = "pfe")]
    pub outer: OuterMethod,
    /// Cell size (defaults to the problem's grid).
    #[arg(long)]
    pub dx: Option<f64>,
    /// 1D velocity scale (defaults to the maximal wave speed).
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    #[arg(long = "Dt", default_value_t = 1e-6)]
    pub big_dt: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dx: f64,
}

/// Dispatches a parsed command line; returns what to print on stdout.
pub fn execute(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Run { config, out } => {
            let text = fs::read_to_string(&config).map_err(|e| Error::io(&config, e))?;
            let (mut cfg, applied) = parse_config_with_env(&text, std::env::vars())?;
            for key in applied {
                info!("{key} overridden from the environment");
            }
            if let Some(out) = out {
                cfg.output.dir = Some(out.to_string_lossy().into_owned());
            }
            let manifest = run(&cfg)?;
            Ok(serde_json::to_string_pretty(&manifest.summary).expect("summary serializes"))
        }
        Command::Convergence(args) => convergence(&args),
        Command::Spectrum(args) => spectrum(&args),
        Command::Params(args) => params(&args),
        Command::Reference(args) => {
            let mut problem = builtin_problem(&args.problem)?;
            let t = args.t_final.unwrap_or(problem.t_final);
            problem.t_final = t;
            let spec = FineGridSpec {
                big_dt: args.big_dt,
                dx: args.dx,
                ..FineGridSpec::high_order(t)
            };
            let mut reference = fine_grid_reference(&problem, &spec)?;
            if args.big_dt != FineGridSpec::high_order(t).big_dt {
                reference.meta.notes.push(format!("outer step relaxed to {}", args.big_dt));
            }
            save_reference(&args.out, &reference)?;
            Ok(serde_json::to_string_pretty(&reference.meta).expect("metadata serializes"))
        }
    }
}

fn convergence(args: &ConvergenceArgs) -> Result<String, Error> {
    let mut problem = builtin_problem(&args.problem)?;
    if let Some(t) = args.t_final {
        problem.t_final = t;
    }
    let mut tpl = SweepTemplate::new(args.scheme, args.outer, args.eps);
    tpl.inner = args.inner;
    tpl.k = args.k;
    let report: ErrorReport = match args.sweep {
        SweepKind::Space => {
            let std = Coupling::standard(args.outer, args.scheme.order());
            let coupling = Coupling {
                c: args.c.unwrap_or(std.c),
                power: args.power.unwrap_or(std.power),
            };
            spatial_order_sweep(&problem, &tpl, &args.dx, coupling)?
        }
        SweepKind::Time => {
            let t = problem.t_final;
            let stored;
            let reference = match args.reference.as_deref() {
                None => TemporalReference::MatrixExponential,
                Some("builtin") => {
                    let spec = FineGridSpec {
                        dx: args.grid,
                        ..FineGridSpec::high_order(t)
                    };
                    stored = fine_grid_reference(&problem, &spec)?.u;
                    TemporalReference::Field(&stored)
                }
                Some(path) => {
                    stored = load_reference(Path::new(path))?.u;
                    TemporalReference::Field(&stored)
                }
            };
            temporal_order_sweep(&problem, &tpl, args.grid, t, &args.dt, reference)?
        }
    };
    let csv = report.to_csv();
    let summary = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.out {
        Some(path) => {
            write(path, &csv)?;
            write(&path.with_extension("json"), &summary)?;
            Ok(summary)
        }
        None => Ok(format!("{csv}\n{summary}")),
    }
}

fn spectrum(args: &SpectrumArgs) -> Result<String, Error> {
    let cells = args.cells.unwrap_or_else(|| (1.0 / args.dx).round().max(1.0) as usize);
    let setup = AnalysisSetup {
        cells,
        dx: args.dx,
        vstar: args.vstar,
        order: args.order,
        eps: args.eps,
        inner: args.inner,
        outer: args.outer,
        delta_t: args.dt_inner.unwrap_or(args.eps),
        k: args.k,
        big_dt: args.big_dt.unwrap_or(args.dx / args.vstar),
    };
    let modes = analyze_modes(&setup)?;
    let mut s = String::from(SPECTRUM_CSV_HEADER);
    s.push('\n');
    for m in &modes {
        s.push_str(&spectrum_csv_row(m));
        s.push('\n');
    }
    Ok(s)
}

fn params(args: &ParamsArgs) -> Result<String, Error> {
    let problem = builtin_problem(&args.problem)?;
    let cells = match args.dx {
        Some(dx) => problem.cells_for_spacing(dx),
        None => problem.cells,
    };
    let mesh = problem.mesh(cells)?;
    let u0 = problem.initial_field(&mesh);
    let opts = VelocityOptions {
        sigma: args.sigma,
        ..VelocityOptions::default()
    };
    let vset = choose_velocities(&problem.model, &u0, &opts)?;
    let advice = advise_parameters(&problem.model, &mesh, &vset, &u0, args.eps, args.scheme, args.inner, args.outer)?;
    let mut s = format!(
        "problem = {}\nscheme = {}\nv* = {}\ndx = {}\ndt_inner = {:e}\nK = {}\ndt_max = {}\nDt = {}\nfast_radius = {}\n",
        problem.name,
        args.scheme,
        advice.vstar,
        advice.dx,
        advice.delta_t,
        advice.k,
        advice.dt_bound,
        advice.big_dt,
        advice.fast_radius
    );
    for w in &advice.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    Ok(s)
}
