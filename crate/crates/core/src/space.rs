//! Structured meshes, ghost-cell boundary handling and the flux-form upwind /
//! ENO discretization of `v . grad f`, assembled into the semi-discrete
//! kinetic right-hand side `-D_{x,v}(f) + (M(u) - f) / eps`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{maxwellian, FluxModel, MaxwellianForm, ModelError};
use crate::velocity::VelocitySet;

/// Ghost cells needed on each side by the widest stencil.
pub const GHOST_WIDTH: usize = 3;

/// Rows with fewer cells than this are not worth a rayon task each.
const PAR_MIN_CELLS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("unsupported spatial scheme {0:?}")]
    UnsupportedOrder(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("relaxation time must be positive, got {0}")]
    InvalidEps(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Outflow,
}

impl FromStr for Boundary {
    type Err = SpaceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "outflow" => Ok(Boundary::Outflow),
            other => Err(SpaceError::InvalidMesh(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Maps a (possibly ghost) index onto the interior `0..n`.
#[inline]
pub fn ghost_index(i: isize, n: usize, bc: Boundary) -> usize {
    let n_i = n as isize;
    match bc {
        Boundary::Periodic => i.rem_euclid(n_i) as usize,
        Boundary::Outflow => i.clamp(0, n_i - 1) as usize,
    }
}

/// Fills `out` (length `n + 2 * GHOST_WIDTH`) with `interior` plus ghosts.
pub fn apply_bc(interior: &[f64], bc: Boundary, out: &mut [f64]) {
    let n = interior.len();
    debug_assert_eq!(out.len(), n + 2 * GHOST_WIDTH);
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = interior[ghost_index(k as isize - GHOST_WIDTH as isize, n, bc)];
    }
}

/// Uniform cell-centred mesh in one or two dimensions. A 1D mesh has
/// `n[1] == 1`. Storage is row-major with `y` outer and `x` inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub dim: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
    pub dx: [f64; 2],
    pub bc: [Boundary; 2],
}

impl Mesh {
    pub fn new_1d(lo: f64, hi: f64, n: usize, bc: Boundary) -> Result<Self, SpaceError> {
        Self::build(1, [lo, 0.0], [hi, 1.0], [n, 1], [bc, bc])
    }

    pub fn new_2d(lo: [f64; 2], hi: [f64; 2], n: [usize; 2], bc: Boundary) -> Result<Self, SpaceError> {
        Self::build(2, lo, hi, n, [bc, bc])
    }

    fn build(dim: usize, lo: [f64; 2], hi: [f64; 2], n: [usize; 2], bc: [Boundary; 2]) -> Result<Self, SpaceError> {
        for axis in 0..dim {
            if n[axis] == 0 || !(hi[axis] > lo[axis]) {
                return Err(SpaceError::InvalidMesh(format!(
                    "axis {axis}: [{}, {}] with {} cells",
                    lo[axis], hi[axis], n[axis]
                )));
            }
        }
        let dx = [
            (hi[0] - lo[0]) / n[0] as f64,
            if dim == 2 { (hi[1] - lo[1]) / n[1] as f64 } else { 1.0 },
        ];
        Ok(Mesh { dim, lo, hi, n, dx, bc })
    }

    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (i as f64 + 0.5) * self.dx[axis]
    }

    /// Cell length (1D) or area (2D).
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.dx[0]
        } else {
            self.dx[0] * self.dx[1]
        }
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Number of cells giving spacing `dx` on `[lo, hi]`, rounded to nearest.
    pub fn cells_for_spacing(lo: f64, hi: f64, dx: f64) -> usize {
        ((hi - lo) / dx).round().max(1.0) as usize
    }
}

/// Spatial discretization of the transport term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SpatialScheme {
    Upwind(u8),
    Eno(u8),
}

impl SpatialScheme {
    pub fn order(&self) -> u8 {
        match *self {
            SpatialScheme::Upwind(p) | SpatialScheme::Eno(p) => p,
        }
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        if (1..=3).contains(&self.order()) {
            Ok(())
        } else {
            Err(SpaceError::UnsupportedOrder(self.to_string()))
        }
    }

    /// Fixed-stencil coefficients `c_s` of `df/dx ~ (1/dx) sum_s c_s f_{i+s}`
    /// for positive velocity, as `(offset, coefficient)` pairs.
    pub fn upwind_stencil(order: u8) -> Result<&'static [(isize, f64)], SpaceError> {
        const O1: [(isize, f64); 2] = [(-1, -1.0), (0, 1.0)];
        const O2: [(isize, f64); 3] = [(-2, 0.5), (-1, -2.0), (0, 1.5)];
        const O3: [(isize, f64); 4] = [(-2, 1.0 / 6.0), (-1, -1.0), (0, 0.5), (1, 1.0 / 3.0)];
        match order {
            1 => Ok(&O1),
            2 => Ok(&O2),
            3 => Ok(&O3),
            p => Err(SpaceError::UnsupportedOrder(format!("upwind{p}"))),
        }
    }
}

impl fmt::Display for SpatialScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialScheme::Upwind(p) => write!(f, "upwind{p}"),
            SpatialScheme::Eno(p) => write!(f, "eno{p}"),
        }
    }
}

impl FromStr for SpatialScheme {
    type Err = SpaceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let scheme = if let Some(p) = s.strip_prefix("upwind") {
            p.parse().ok().map(SpatialScheme::Upwind)
        } else if let Some(p) = s.strip_prefix("eno") {
            p.parse().ok().map(SpatialScheme::Eno)
        } else {
            None
        };
        let scheme = scheme.ok_or_else(|| SpaceError::UnsupportedOrder(s.to_string()))?;
        scheme.validate()?;
        Ok(scheme)
    }
}

impl TryFrom<String> for SpatialScheme {
    type Error = SpaceError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SpatialScheme> for String {
    fn from(s: SpatialScheme) -> String {
        s.to_string()
    }
}

/// Preference factor for the upwind-central stencil at the third ENO level.
pub const ENO_BIAS: f64 = 2.0;

// Reconstruction of the interface value f_{i+1/2} from the stencil starting
// r cells left of i, indexed [order - 1][r].
const ENO_COEFFS: [[[f64; 3]; 3]; 3] = [
    [[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]],
    [[0.5, 0.5, 0.0], [-0.5, 1.5, 0.0], [0.0; 3]],
    [
        [1.0 / 3.0, 5.0 / 6.0, -1.0 / 6.0],
        [-1.0 / 6.0, 5.0 / 6.0, 1.0 / 3.0],
        [1.0 / 3.0, -7.0 / 6.0, 11.0 / 6.0],
    ],
];

/// Upwind-biased interface value for positive velocity. `w` holds
/// `f_{i-2} .. f_{i+3}` around the interface `i + 1/2` (so `w[2] = f_i`).
#[inline]
fn reconstruct_left_biased(w: &[f64; 6], scheme: SpatialScheme) -> f64 {
    match scheme {
        SpatialScheme::Upwind(1) | SpatialScheme::Eno(1) => w[2],
        SpatialScheme::Upwind(2) => (3.0 * w[2] - w[1]) * 0.5,
        SpatialScheme::Upwind(3) => (2.0 * w[3] + 5.0 * w[2] - w[1]) / 6.0,
        SpatialScheme::Eno(k) => {
            let k = k as usize;
            // leftmost stencil index in w; the stencil is w[left..left + len]
            let mut left = 2usize;
            if k >= 2 {
                // ties keep the upwind (left) stencil
                if (w[2] - w[1]).abs() <= (w[3] - w[2]).abs() {
                    left = 1;
                }
            }
            if k >= 3 {
                // the upwind-central stencil (left = 1) wins unless the other
                // candidate is smoother by ENO_BIAS; plain comparison flips
                // stencils near zeros of f''' and stalls convergence
                let dd = |l: usize| (w[l + 2] - 2.0 * w[l + 1] + w[l]).abs();
                left = if left == 1 {
                    if ENO_BIAS * dd(0) < dd(1) {
                        0
                    } else {
                        1
                    }
                } else if dd(1) <= ENO_BIAS * dd(2) {
                    1
                } else {
                    2
                };
            }
            let r = 2 - left;
            let c = &ENO_COEFFS[k - 1][r];
            let mut acc = 0.0;
            for q in 0..k {
                acc += c[q] * w[left + q];
            }
            acc
        }
        _ => unreachable!("scheme validated on construction"),
    }
}

/// Interface value `f_{i+1/2}` upwinded by the sign of `v`.
#[inline]
pub fn reconstruct_interface(w: &[f64; 6], v: f64, scheme: SpatialScheme) -> f64 {
    if v > 0.0 {
        reconstruct_left_biased(w, scheme)
    } else {
        let m = [w[5], w[4], w[3], w[2], w[1], w[0]];
        reconstruct_left_biased(&m, scheme)
    }
}

/// `v df/dx` at the `n` interior points of a ghost-extended line
/// (`line.len() == n + 2 * GHOST_WIDTH`).
pub fn transport_derivative(line: &[f64], v: f64, scheme: SpatialScheme, dx: f64) -> Result<Vec<f64>, SpaceError> {
    scheme.validate()?;
    let g = GHOST_WIDTH;
    if line.len() < 2 * g + 1 {
        return Err(SpaceError::ShapeMismatch {
            expected: 2 * g + 1,
            got: line.len(),
        });
    }
    let n = line.len() - 2 * g;
    let mut face = vec![0.0; n + 1];
    interface_values(line, v, scheme, &mut face);
    Ok((0..n).map(|i| v * (face[i + 1] - face[i]) / dx).collect())
}

/// Fixed-stencil upwind derivative `v df/dx` on a ghost-extended line.
pub fn upwind_derivative(line: &[f64], v: f64, order: u8, dx: f64) -> Result<Vec<f64>, SpaceError> {
    transport_derivative(line, v, SpatialScheme::Upwind(order), dx)
}

/// ENO derivative `v df/dx` on a ghost-extended line.
pub fn eno_derivative(line: &[f64], v: f64, order: u8, dx: f64) -> Result<Vec<f64>, SpaceError> {
    transport_derivative(line, v, SpatialScheme::Eno(order), dx)
}

/// Reconstructed values at the `n + 1` interfaces of a ghost-extended line;
/// `face[k]` sits between interior cells `k - 1` and `k`.
fn interface_values(line: &[f64], v: f64, scheme: SpatialScheme, face: &mut [f64]) {
    let g = GHOST_WIDTH;
    for (k, slot) in face.iter_mut().enumerate() {
        // interface between line[g + k - 1] and line[g + k]
        let base = g + k - 3;
        let w: [f64; 6] = line[base..base + 6].try_into().unwrap();
        *slot = reconstruct_interface(&w, v, scheme);
    }
}

/// Distribution values laid out `[cell][j][m]`, plus the time-integrated
/// amount of each conserved component that has left through the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    pub data: Vec<f64>,
    pub ledger: Vec<f64>,
    pub cells: usize,
    pub velocities: usize,
    pub components: usize,
}

impl KineticField {
    pub fn zeros(cells: usize, velocities: usize, components: usize) -> Self {
        KineticField {
            data: vec![0.0; cells * velocities * components],
            ledger: vec![0.0; components],
            cells,
            velocities,
            components,
        }
    }

    /// Equilibrium lift `f_j = M_j(u)` of a macroscopic field `[cell][m]`.
    pub fn from_macro(
        u: &[f64],
        model: &FluxModel,
        form: MaxwellianForm,
        vset: &VelocitySet,
    ) -> Result<Self, SpaceError> {
        let m = model.components();
        if !u.len().is_multiple_of(m) {
            return Err(SpaceError::ShapeMismatch {
                expected: m,
                got: u.len(),
            });
        }
        let cells = u.len() / m;
        let jn = vset.len();
        let mut f = KineticField::zeros(cells, jn, m);
        for (cell, uc) in u.chunks_exact(m).enumerate() {
            for j in 0..jn {
                let off = (cell * jn + j) * m;
                maxwellian(model, form, uc, vset.velocity(j), vset, &mut f.data[off..off + m])?;
            }
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |s, x| s.max(x.abs()))
    }
}

/// Macroscopic field `u = <f>` as `[cell][m]`.
pub fn macro_field(f: &KineticField, vset: &VelocitySet) -> Vec<f64> {
    let mut u = vec![0.0; f.cells * f.components];
    zeroth_moment(&f.data, vset, f.components, &mut u);
    u
}

/// Zeroth moment with a summation order that is invariant under the
/// `x <-> y` relabelling of the four-velocity set (opposite velocities are
/// paired first), so mirror-symmetric data stays bitwise symmetric.
fn zeroth_moment(f: &[f64], vset: &VelocitySet, m: usize, u: &mut [f64]) {
    let jn = vset.len();
    let jm = jn * m;
    let uniform4 = jn == 4 && vset.w.iter().all(|&w| w == vset.w[0]);
    for (cell, uc) in u.chunks_exact_mut(m).enumerate() {
        let fc = &f[cell * jm..(cell + 1) * jm];
        if uniform4 {
            let w = vset.w[0];
            for c in 0..m {
                let a = fc[c] + fc[2 * m + c];
                let b = fc[m + c] + fc[3 * m + c];
                uc[c] = w * (a + b);
            }
        } else {
            for c in 0..m {
                let mut acc = 0.0;
                for j in 0..jn {
                    acc += vset.w[j] * fc[j * m + c];
                }
                uc[c] = acc;
            }
        }
    }
}

/// The semi-discrete kinetic system `df/dt = D_t(f)` on a fixed mesh and
/// velocity set. Counts its own right-hand-side evaluations.
#[derive(Debug, Clone)]
pub struct KineticSystem {
    pub model: FluxModel,
    pub form: MaxwellianForm,
    pub vset: VelocitySet,
    pub mesh: Mesh,
    pub scheme: SpatialScheme,
    pub eps: f64,
    pub evaluations: u64,
    u: Vec<f64>,
    transport: Vec<f64>,
    y_faces: Vec<f64>,
}

impl KineticSystem {
    pub fn new(
        model: FluxModel,
        form: MaxwellianForm,
        vset: VelocitySet,
        mesh: Mesh,
        scheme: SpatialScheme,
        eps: f64,
    ) -> Result<Self, SpaceError> {
        scheme.validate()?;
        model.validate()?;
        if !(eps > 0.0) {
            return Err(SpaceError::InvalidEps(eps));
        }
        if mesh.dim != model.dim() || vset.dim != model.dim() {
            return Err(SpaceError::InvalidMesh(format!(
                "model {} is {}D but mesh is {}D and velocities {}D",
                model.name(),
                model.dim(),
                mesh.dim,
                vset.dim
            )));
        }
        let m = model.components();
        let size = mesh.cells() * vset.len() * m;
        let u = vec![0.0; mesh.cells() * m];
        let y_faces = if mesh.dim == 2 {
            vec![0.0; (mesh.n[1] + 1) * mesh.n[0] * vset.len() * m]
        } else {
            Vec::new()
        };
        Ok(KineticSystem {
            model,
            form,
            vset,
            mesh,
            scheme,
            eps,
            evaluations: 0,
            u,
            transport: vec![0.0; size],
            y_faces,
        })
    }

    pub fn field_len(&self) -> usize {
        self.mesh.cells() * self.vset.len() * self.model.components()
    }

    pub fn zeros(&self) -> KineticField {
        KineticField::zeros(self.mesh.cells(), self.vset.len(), self.model.components())
    }

    pub fn lift(&self, u: &[f64]) -> Result<KineticField, SpaceError> {
        KineticField::from_macro(u, &self.model, self.form, &self.vset)
    }

    pub fn macro_field(&self, f: &KineticField) -> Vec<f64> {
        macro_field(f, &self.vset)
    }

    /// Replaces the velocity set (e.g. after a subcharacteristic rescale).
    pub fn set_velocities(&mut self, vset: VelocitySet) {
        debug_assert_eq!(vset.len(), self.vset.len());
        self.vset = vset;
    }

    /// Evaluates `D_t(f)` into `out`, including the boundary ledger rate.
    pub fn rhs(&mut self, f: &KineticField, out: &mut KineticField) -> Result<(), SpaceError> {
        let size = self.field_len();
        if f.data.len() != size || out.data.len() != size {
            return Err(SpaceError::ShapeMismatch {
                expected: size,
                got: f.data.len().min(out.data.len()),
            });
        }
        self.evaluations += 1;
        let m = self.model.components();
        let jn = self.vset.len();
        let jm = jn * m;

        zeroth_moment(&f.data, &self.vset, m, &mut self.u);
        let ledger_rate = self.transport_term(&f.data)?;

        let inv_eps = 1.0 / self.eps;
        let (model, form, vset) = (&self.model, self.form, &self.vset);
        let u = &self.u;
        let transport = &self.transport;
        let relax = |(cell, oc): (usize, &mut [f64])| -> Result<(), SpaceError> {
            let uc = &u[cell * m..(cell + 1) * m];
            let fc = &f.data[cell * jm..(cell + 1) * jm];
            let tc = &transport[cell * jm..(cell + 1) * jm];
            let mut mj = [0.0f64; 4];
            for j in 0..jn {
                maxwellian(model, form, uc, vset.velocity(j), vset, &mut mj[..m])?;
                for c in 0..m {
                    let k = j * m + c;
                    oc[k] = inv_eps * (mj[c] - fc[k]) - tc[k];
                }
            }
            Ok(())
        };
        if self.mesh.cells() >= PAR_MIN_CELLS {
            out.data.par_chunks_mut(jm).enumerate().try_for_each(relax)?;
        } else {
            out.data.chunks_mut(jm).enumerate().try_for_each(relax)?;
        }
        out.ledger.copy_from_slice(&ledger_rate);
        Ok(())
    }

    /// Fills `self.transport` with `sum_d v^d d_d f` and returns the rate at
    /// which each conserved component leaves through the boundary.
    fn transport_term(&mut self, f: &[f64]) -> Result<Vec<f64>, SpaceError> {
        let m = self.model.components();
        let jn = self.vset.len();
        let jm = jn * m;
        let [nx, ny] = self.mesh.n;
        let [dx, dy] = self.mesh.dx;
        let scheme = self.scheme;
        let vset = &self.vset;
        let bcx = self.mesh.bc[0];
        let g = GHOST_WIDTH;
        let row_len = nx * jm;

        // x sweep: one task per row, each returns its boundary outflow
        let x_pass = |(iy, trow): (usize, &mut [f64])| -> Vec<f64> {
            let frow = &f[iy * row_len..(iy + 1) * row_len];
            let mut line = vec![0.0; nx + 2 * g];
            let mut face = vec![0.0; nx + 1];
            let mut outflow = vec![0.0; m];
            for j in 0..jn {
                let v = vset.velocity(j)[0];
                for c in 0..m {
                    let k = j * m + c;
                    if v == 0.0 {
                        for i in 0..nx {
                            trow[i * jm + k] = 0.0;
                        }
                        continue;
                    }
                    for (p, slot) in line.iter_mut().enumerate() {
                        *slot = frow[ghost_index(p as isize - g as isize, nx, bcx) * jm + k];
                    }
                    interface_values(&line, v, scheme, &mut face);
                    for i in 0..nx {
                        trow[i * jm + k] = v * (face[i + 1] - face[i]) / dx;
                    }
                    outflow[c] += vset.w[j] * v * (face[nx] - face[0]);
                }
            }
            outflow
        };
        let rows: Vec<Vec<f64>> = if self.mesh.cells() >= PAR_MIN_CELLS {
            self.transport.par_chunks_mut(row_len).enumerate().map(x_pass).collect()
        } else {
            self.transport.chunks_mut(row_len).enumerate().map(x_pass).collect()
        };
        let face_area_x = if self.mesh.dim == 2 { dy } else { 1.0 };
        let mut ledger = vec![0.0; m];
        for r in &rows {
            for c in 0..m {
                ledger[c] += face_area_x * r[c];
            }
        }

        if self.mesh.dim == 2 {
            let bcy = self.mesh.bc[1];
            // y interface values: interface row r sits between rows r-1 and r
            let y_face = |(r, frow): (usize, &mut [f64])| {
                let rows_idx: [usize; 6] =
                    std::array::from_fn(|q| ghost_index(r as isize - 3 + q as isize, ny, bcy));
                for ix in 0..nx {
                    for j in 0..jn {
                        let v = vset.velocity(j)[1];
                        for c in 0..m {
                            let k = ix * jm + j * m + c;
                            frow[k] = if v == 0.0 {
                                0.0
                            } else {
                                let w: [f64; 6] = std::array::from_fn(|q| f[rows_idx[q] * row_len + k]);
                                reconstruct_interface(&w, v, scheme)
                            };
                        }
                    }
                }
            };
            if self.mesh.cells() >= PAR_MIN_CELLS {
                self.y_faces.par_chunks_mut(row_len).enumerate().for_each(y_face);
            } else {
                self.y_faces.chunks_mut(row_len).enumerate().for_each(y_face);
            }
            let faces = &self.y_faces;
            let add_y = |(iy, trow): (usize, &mut [f64])| {
                let below = &faces[iy * row_len..(iy + 1) * row_len];
                let above = &faces[(iy + 1) * row_len..(iy + 2) * row_len];
                for ix in 0..nx {
                    for j in 0..jn {
                        let v = vset.velocity(j)[1];
                        if v == 0.0 {
                            continue;
                        }
                        for c in 0..m {
                            let k = ix * jm + j * m + c;
                            trow[k] += v * (above[k] - below[k]) / dy;
                        }
                    }
                }
            };
            if self.mesh.cells() >= PAR_MIN_CELLS {
                self.transport.par_chunks_mut(row_len).enumerate().for_each(add_y);
            } else {
                self.transport.chunks_mut(row_len).enumerate().for_each(add_y);
            }
            let top = &faces[ny * row_len..(ny + 1) * row_len];
            let bottom = &faces[..row_len];
            for ix in 0..nx {
                for j in 0..jn {
                    let v = vset.velocity(j)[1];
                    for c in 0..m {
                        let k = ix * jm + j * m + c;
                        ledger[c] += dx * vset.w[j] * v * (top[k] - bottom[k]);
                    }
                }
            }
        }
        Ok(ledger)
    }
}
