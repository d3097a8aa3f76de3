//! Fourier-symbol stability analysis of the two-velocity scalar kinetic
//! system: symbol matrices, exact and asymptotic eigenvalues, inner and
//! projective amplification factors, and the `(dt, K, Dt)` advisor.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FluxModel, ModelError};
use crate::space::{Mesh, SpaceError, SpatialScheme};
use crate::timeint::{projective_amplification, ButcherTableau, InnerIntegrator, OuterMethod};
use crate::velocity::VelocitySet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("velocity {speed} is below the characteristic speed {required} (subcharacteristic condition)")]
    SubcharacteristicViolation { speed: f64, required: f64 },
    #[error("invalid analysis input: {0}")]
    InvalidInput(String),
    #[error("no K <= {max_k} stabilizes the projective step")]
    NoStableK { max_k: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Real and imaginary parts `alpha +- i beta` of the transport symbol of the
/// positive / negative velocity at one Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolCoefficients {
    pub alpha: f64,
    pub beta: f64,
    /// Mode angle `zeta` (radians per cell).
    pub zeta: f64,
    pub vstar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        (z - self.center).norm() <= self.radius + slack
    }
}

/// Slow and fast stability disks of projective forward Euler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityDisks {
    pub slow: Disk,
    pub fast: Disk,
}

pub fn stability_disks(delta_t: f64, big_dt: f64, k: usize) -> StabilityDisks {
    let r = delta_t / big_dt;
    StabilityDisks {
        slow: Disk {
            center: Complex64::new(1.0 - r, 0.0),
            radius: r,
        },
        fast: Disk {
            center: Complex64::new(0.0, 0.0),
            radius: r.powf(1.0 / k as f64),
        },
    }
}

/// The discrete mode angles `2 pi i / I`, `i = 1..=I`.
pub fn mode_angles(cells: usize) -> Vec<f64> {
    (1..=cells).map(|i| 2.0 * PI * i as f64 / cells as f64).collect()
}

/// Symbol of `v* d/dx` for the upwind stencil of `order` at mode angle `zeta`.
pub fn symbol_coefficients(zeta: f64, vstar: f64, dx: f64, order: u8) -> Result<SymbolCoefficients, SpectrumError> {
    if !(vstar > 0.0 && dx > 0.0) {
        return Err(SpectrumError::InvalidInput(format!("v* = {vstar}, dx = {dx}")));
    }
    let stencil = SpatialScheme::upwind_stencil(order)?;
    let mut d = Complex64::new(0.0, 0.0);
    for &(s, c) in stencil {
        d += c * Complex64::from_polar(1.0, s as f64 * zeta);
    }
    d *= vstar / dx;
    Ok(SymbolCoefficients {
        alpha: d.re,
        beta: d.im,
        zeta,
        vstar,
    })
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// `B = (1/eps)(MP - I) - diag(alpha + i beta, alpha - i beta)`, indexed
/// with the positive velocity first.
pub fn symbol_matrix(sym: &SymbolCoefficients, eps: f64) -> Matrix2 {
    let inv = 1.0 / sym.vstar;
    let mp = [[0.5 * (1.0 + inv), 0.5 * (1.0 + inv)], [0.5 * (1.0 - inv), 0.5 * (1.0 - inv)]];
    let d = [Complex64::new(sym.alpha, sym.beta), Complex64::new(sym.alpha, -sym.beta)];
    let mut b = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let id = if r == c { 1.0 } else { 0.0 };
            b[r][c] = Complex64::new((mp[r][c] - id) / eps, 0.0);
        }
        b[r][r] -= d[r];
    }
    b
}

/// Roots of `x^2 + b x + c`, the larger-magnitude one first, computed
/// without cancellation.
fn quadratic_roots(b: Complex64, c: Complex64) -> (Complex64, Complex64) {
    let sq = (b * b - 4.0 * c).sqrt();
    let q = if (b.conj() * sq).re >= 0.0 { -0.5 * (b + sq) } else { -0.5 * (b - sq) };
    if q.norm() == 0.0 {
        return (q, q);
    }
    (q, c / q)
}

/// Eigenvalues of a 2x2 matrix as `(slow, fast)`: the slow one has the
/// larger real part.
pub fn exact_eigenvalues(b: &Matrix2) -> (Complex64, Complex64) {
    let tr = b[0][0] + b[1][1];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let (x, y) = quadratic_roots(-tr, det);
    if x.re >= y.re {
        (x, y)
    } else {
        (y, x)
    }
}

/// Truncated small-`eps` expansions of the slow and fast eigenvalues.
pub fn asymptotic_eigenvalues(alpha: f64, beta: f64, vstar: f64, eps: f64) -> (Complex64, Complex64) {
    let g = (1.0 - vstar * vstar) / (vstar * vstar);
    let re1 = -alpha + beta * beta * g * eps;
    let im1 = -beta / vstar + 2.0 * beta.powi(3) / vstar * g * eps * eps;
    let re2 = -1.0 / eps - alpha - beta * beta * g * eps;
    let im2 = beta / vstar - 2.0 * beta.powi(3) / vstar * g * eps * eps;
    (Complex64::new(re1, im1), Complex64::new(re2, im2))
}

/// Amplification factor of one inner step on `y' = lambda y`.
pub fn amplification(lambda: Complex64, inner: InnerIntegrator, delta_t: f64) -> Complex64 {
    inner.amplification(lambda * delta_t)
}

/// Closed-form projective forward Euler amplification for inner factor `tau`.
pub fn pfe_amplification(tau: Complex64, k: usize, delta_t: f64, big_dt: f64) -> Complex64 {
    let m = (big_dt - (k as f64 + 1.0) * delta_t) / delta_t;
    ((m + 1.0) * tau - m) * tau.powi(k as i32)
}

pub fn pfe_stable(tau: Complex64, k: usize, delta_t: f64, big_dt: f64) -> bool {
    pfe_amplification(tau, k, delta_t, big_dt).norm() <= 1.0
}

/// Projective amplification for any tableau: closed form for one stage,
/// otherwise by running the projective step on the scalar test equation.
pub fn projective_factor(tableau: &ButcherTableau, tau: Complex64, k: usize, delta_t: f64, big_dt: f64) -> Complex64 {
    if tableau.stages() == 1 {
        pfe_amplification(tau, k, delta_t, big_dt)
    } else {
        projective_amplification(tableau, tau, k, big_dt / delta_t)
    }
}

/// Per-mode analysis row as written by the `spectrum` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeAnalysis {
    pub zeta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_slow: Complex64,
    pub lambda_fast: Complex64,
    pub lambda_slow_asym: Complex64,
    pub lambda_fast_asym: Complex64,
    pub tau_slow: Complex64,
    pub tau_fast: Complex64,
    pub amp_slow: f64,
    pub amp_fast: f64,
    pub stable: bool,
}

/// Setting for [`analyze_modes`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSetup {
    pub cells: usize,
    pub dx: f64,
    pub vstar: f64,
    pub order: u8,
    pub eps: f64,
    pub inner: InnerIntegrator,
    pub outer: OuterMethod,
    pub delta_t: f64,
    pub k: usize,
    pub big_dt: f64,
}

pub fn analyze_modes(setup: &AnalysisSetup) -> Result<Vec<ModeAnalysis>, SpectrumError> {
    let tableau = setup.outer.tableau();
    mode_angles(setup.cells)
        .into_par_iter()
        .map(|zeta| {
            let sym = symbol_coefficients(zeta, setup.vstar, setup.dx, setup.order)?;
            let b = symbol_matrix(&sym, setup.eps);
            let (l1, l2) = exact_eigenvalues(&b);
            let (a1, a2) = asymptotic_eigenvalues(sym.alpha, sym.beta, sym.vstar, setup.eps);
            let t1 = amplification(l1, setup.inner, setup.delta_t);
            let t2 = amplification(l2, setup.inner, setup.delta_t);
            let p1 = projective_factor(&tableau, t1, setup.k, setup.delta_t, setup.big_dt).norm();
            let p2 = projective_factor(&tableau, t2, setup.k, setup.delta_t, setup.big_dt).norm();
            Ok(ModeAnalysis {
                zeta,
                alpha: sym.alpha,
                beta: sym.beta,
                lambda_slow: l1,
                lambda_fast: l2,
                lambda_slow_asym: a1,
                lambda_fast_asym: a2,
                tau_slow: t1,
                tau_fast: t2,
                amp_slow: p1,
                amp_fast: p2,
                stable: p1 <= 1.0 + STABILITY_SLACK && p2 <= 1.0 + STABILITY_SLACK,
            })
        })
        .collect()
}

/// Rounding allowance on `|amplification| <= 1` for numerically composed
/// projective steps.
pub const STABILITY_SLACK: f64 = 1e-12;

/// Whether every mode is stable for the given setup.
pub fn all_modes_stable(setup: &AnalysisSetup) -> Result<bool, SpectrumError> {
    Ok(analyze_modes(setup)?.iter().all(|m| m.stable))
}

/// Smallest `K` in `k_min..=k_max` making every mode stable with the other
/// parameters fixed (`Dt` is raised to `(K+1) dt` if needed).
pub fn search_stable_k(setup: &AnalysisSetup, k_min: usize, k_max: usize) -> Result<usize, SpectrumError> {
    for k in k_min..=k_max {
        let mut s = setup.clone();
        s.k = k;
        s.big_dt = s.big_dt.max((k as f64 + 1.0) * s.delta_t);
        if all_modes_stable(&s)? {
            return Ok(k);
        }
    }
    Err(SpectrumError::NoStableK { max_k: k_max })
}

/// `max_zeta sqrt(alpha^2 + beta^2 / v*^2)`: radius of the fast eigenvalue
/// cluster around `-1/eps`.
pub fn fast_radius(cells: usize, vstar: f64, dx: f64, order: u8) -> Result<f64, SpectrumError> {
    let mut c = 0.0f64;
    for zeta in mode_angles(cells) {
        let s = symbol_coefficients(zeta, vstar, dx, order)?;
        c = c.max((s.alpha * s.alpha + s.beta * s.beta / (vstar * vstar)).sqrt());
    }
    Ok(c)
}

/// `min_zeta 2 alpha v*^2 / (alpha^2 v*^2 + beta^2)` over modes with
/// `alpha > 0`: the outer step keeping the slow factor in the PFE slow disk.
pub fn pfe_outer_bound(cells: usize, vstar: f64, dx: f64, order: u8) -> Result<f64, SpectrumError> {
    let mut bound = f64::INFINITY;
    for zeta in mode_angles(cells) {
        let s = symbol_coefficients(zeta, vstar, dx, order)?;
        let v2 = vstar * vstar;
        let den = s.alpha * s.alpha * v2 + s.beta * s.beta;
        if den > 0.0 && s.alpha > 1e-14 * vstar / dx {
            bound = bound.min(2.0 * s.alpha * v2 / den);
        }
    }
    Ok(bound)
}

/// Smallest `K >= 2` with `c eps <= (eps / Dt)^(1/K)`.
pub fn k_bound(c: f64, eps: f64, big_dt: f64) -> Option<usize> {
    let ce = c * eps;
    if ce >= 1.0 {
        return None;
    }
    if ce <= 0.0 {
        return Some(2);
    }
    let ratio = (eps / big_dt).ln();
    let k = if ratio >= 0.0 { 0.0 } else { (ratio / ce.ln()).ceil() };
    Some((k as usize).max(2))
}

/// Largest stable outer step for a multi-stage method by bisection on the
/// slow-mode projective amplification (inner factors taken at `dt = eps`).
pub fn prk_outer_bound(setup: &AnalysisSetup) -> Result<f64, SpectrumError> {
    let tableau = setup.outer.tableau();
    let slow_taus: Vec<Complex64> = mode_angles(setup.cells)
        .into_iter()
        .map(|zeta| {
            let sym = symbol_coefficients(zeta, setup.vstar, setup.dx, setup.order)?;
            let (l1, _) = exact_eigenvalues(&symbol_matrix(&sym, setup.eps));
            Ok(amplification(l1, setup.inner, setup.delta_t))
        })
        .collect::<Result<_, SpectrumError>>()?;
    let stable = |big: f64| {
        slow_taus
            .par_iter()
            .all(|&t| projective_factor(&tableau, t, setup.k, setup.delta_t, big).norm() <= 1.0 + STABILITY_SLACK)
    };
    let mut lo = (setup.k as f64 + 1.0) * setup.delta_t;
    if !stable(lo) {
        return Ok(lo);
    }
    let mut hi = lo.max(setup.dx);
    while stable(hi) && hi < 1e3 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Advisor output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterAdvice {
    pub delta_t: f64,
    pub k: usize,
    pub big_dt: f64,
    /// The outer-step bound before any safety choice; never involves `eps`.
    pub dt_bound: f64,
    pub fast_radius: f64,
    pub vstar: f64,
    pub dx: f64,
    /// The symbol analysis is only exact for 1D scalar two-velocity upwind
    /// schemes; anything else is extrapolated.
    pub heuristic: bool,
    pub warnings: Vec<String>,
}

/// Suggests `(dt, K, Dt)` from the Fourier-symbol analysis.
#[allow(clippy::too_many_arguments)]
pub fn advise_parameters(
    model: &FluxModel,
    mesh: &Mesh,
    vset: &VelocitySet,
    u0: &[f64],
    eps: f64,
    scheme: SpatialScheme,
    inner: InnerIntegrator,
    outer: OuterMethod,
) -> Result<ParameterAdvice, SpectrumError> {
    if !(eps > 0.0) {
        return Err(SpectrumError::InvalidInput(format!("eps {eps} must be positive")));
    }
    let mut warnings = Vec::new();
    let speeds = model.max_wave_speed(u0)?;
    for (axis, &need) in speeds.iter().enumerate() {
        let have = vset.max_speed(axis);
        if have < need {
            return Err(SpectrumError::SubcharacteristicViolation { speed: have, required: need });
        }
    }
    let heuristic = mesh.dim != 1 || vset.len() != 2 || model.components() != 1 || matches!(scheme, SpatialScheme::Eno(_));
    if heuristic {
        warnings.push("heuristic: symbol analysis assumes a 1D scalar two-velocity upwind scheme".into());
    }
    let vstar = vset.max_speed(0);
    let dx = mesh.dx[0];
    let cells = mesh.n[0];
    let order = scheme.order();
    let delta_t = eps;
    let c = fast_radius(cells, vstar, dx, order)?;

    let dt_bound = if outer == OuterMethod::Pfe {
        pfe_outer_bound(cells, vstar, dx, order)?
    } else {
        let setup = AnalysisSetup {
            cells,
            dx,
            vstar,
            order,
            eps,
            inner,
            outer,
            delta_t,
            k: 2,
            big_dt: 3.0 * delta_t,
        };
        prk_outer_bound(&setup)?
    };
    let big_dt = dt_bound.max(3.0 * delta_t);
    let mut k = match k_bound(c, eps, big_dt) {
        Some(k) => k,
        None => {
            warnings.push(format!("c eps = {} >= 1: the fast cluster is not separated", c * eps));
            2
        }
    };
    if inner == InnerIntegrator::Rk2 {
        warnings.push("inner rk2 cannot centre fast modes at 0; K grows like log(1/eps)".into());
        let setup = AnalysisSetup {
            cells,
            dx,
            vstar,
            order,
            eps,
            inner,
            outer,
            delta_t,
            k,
            big_dt,
        };
        if let Ok(found) = search_stable_k(&setup, k, 200) {
            k = found;
        }
    }
    let big_dt = big_dt.max((k as f64 + 1.0) * delta_t);
    Ok(ParameterAdvice {
        delta_t,
        k,
        big_dt,
        dt_bound,
        fast_radius: c,
        vstar,
        dx,
        heuristic,
        warnings,
    })
}

/// CSV header for [`ModeAnalysis`] rows.
pub const SPECTRUM_CSV_HEADER: &str = "zeta,alpha,beta,lambda1_re,lambda1_im,lambda2_re,lambda2_im,\
lambda1_asym_re,lambda1_asym_im,lambda2_asym_re,lambda2_asym_im,tau1_re,tau1_im,tau2_re,tau2_im,amp1,amp2,stable";

pub fn spectrum_csv_row(m: &ModeAnalysis) -> String {
    let vals = [
        m.zeta,
        m.alpha,
        m.beta,
        m.lambda_slow.re,
        m.lambda_slow.im,
        m.lambda_fast.re,
        m.lambda_fast.im,
        m.lambda_slow_asym.re,
        m.lambda_slow_asym.im,
        m.lambda_fast_asym.re,
        m.lambda_fast_asym.im,
        m.tau_slow.re,
        m.tau_slow.im,
        m.tau_fast.re,
        m.tau_fast.im,
        m.amp_slow,
        m.amp_fast,
    ];
    let mut row: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
    row.push(m.stable.to_string());
    row.join(",")
}
