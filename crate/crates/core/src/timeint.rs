//! Inner integrators (forward Euler, RK2) and the projective outer
//! integrators built on them: projective forward Euler and projective
//! Runge-Kutta for any explicit Butcher tableau.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{KineticField, KineticSystem, SpaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("non-finite state after inner step {step} (outer step {outer})")]
    NonFinite { outer: u64, step: u64 },
    #[error("invalid projective scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid Butcher tableau: {0:?}")]
    InvalidTableau(Vec<TableauViolation>),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Vector-space operations the integrators need from a state.
pub trait StepState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);
    fn copy_from(&mut self, other: &Self);
    fn set_zero(&mut self);
    fn all_finite(&self) -> bool;
}

/// A right-hand side `dy/dt = g(y)`.
pub trait Rhs<S> {
    fn eval(&mut self, y: &S, out: &mut S) -> Result<(), StepError>;
}

impl StepState for KineticField {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += a * x;
        }
        for (y, x) in self.ledger.iter_mut().zip(&x.ledger) {
            *y += a * x;
        }
    }
    fn scale(&mut self, a: f64) {
        self.data.iter_mut().chain(self.ledger.iter_mut()).for_each(|x| *x *= a);
    }
    fn copy_from(&mut self, other: &Self) {
        self.data.copy_from_slice(&other.data);
        self.ledger.copy_from_slice(&other.ledger);
    }
    fn set_zero(&mut self) {
        self.data.fill(0.0);
        self.ledger.fill(0.0);
    }
    fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl StepState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, x) in self.iter_mut().zip(x) {
            *y += a * x;
        }
    }
    fn scale(&mut self, a: f64) {
        self.iter_mut().for_each(|x| *x *= a);
    }
    fn copy_from(&mut self, other: &Self) {
        self.copy_from_slice(other);
    }
    fn set_zero(&mut self) {
        self.fill(0.0);
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

impl StepState for Complex64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn copy_from(&mut self, other: &Self) {
        *self = *other;
    }
    fn set_zero(&mut self) {
        *self = Complex64::new(0.0, 0.0);
    }
    fn all_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Rhs<KineticField> for KineticSystem {
    fn eval(&mut self, y: &KineticField, out: &mut KineticField) -> Result<(), StepError> {
        Ok(self.rhs(y, out)?)
    }
}

/// Scalar linear test equation `y' = lambda y`.
#[derive(Debug, Clone, Copy)]
pub struct LinearTest(pub Complex64);

impl Rhs<Complex64> for LinearTest {
    fn eval(&mut self, y: &Complex64, out: &mut Complex64) -> Result<(), StepError> {
        *out = self.0 * y;
        Ok(())
    }
}

/// Adapts a closure `g(y, out)` into an [`Rhs`].
pub struct FnRhs<F>(pub F);

impl<S, F: FnMut(&S, &mut S)> Rhs<S> for FnRhs<F> {
    fn eval(&mut self, y: &S, out: &mut S) -> Result<(), StepError> {
        (self.0)(y, out);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerIntegrator {
    Fe,
    Rk2,
}

impl FromStr for InnerIntegrator {
    type Err = StepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fe" => Ok(InnerIntegrator::Fe),
            "rk2" => Ok(InnerIntegrator::Rk2),
            other => Err(StepError::InvalidScheme(format!("unknown inner integrator {other:?}"))),
        }
    }
}

impl fmt::Display for InnerIntegrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerIntegrator::Fe => "fe",
            InnerIntegrator::Rk2 => "rk2",
        })
    }
}

impl InnerIntegrator {
    /// Right-hand-side evaluations per inner step.
    pub fn stages(&self) -> u64 {
        match self {
            InnerIntegrator::Fe => 1,
            InnerIntegrator::Rk2 => 2,
        }
    }

    /// Amplification factor on `y' = lambda y` for `z = lambda dt`.
    pub fn amplification(&self, z: Complex64) -> Complex64 {
        match self {
            InnerIntegrator::Fe => 1.0 + z,
            InnerIntegrator::Rk2 => 1.0 + z + 0.5 * z * z,
        }
    }
}

/// Scratch buffers for inner steps, reused across calls.
#[derive(Debug, Clone)]
pub struct InnerWork<S> {
    k1: S,
    k2: S,
    tmp: S,
}

impl<S: StepState> InnerWork<S> {
    pub fn new(template: &S) -> Self {
        InnerWork {
            k1: template.clone(),
            k2: template.clone(),
            tmp: template.clone(),
        }
    }
}

/// `f <- f + dt D_t(f)`
pub fn inner_step_fe<S: StepState, R: Rhs<S>>(
    f: &mut S,
    rhs: &mut R,
    dt: f64,
    work: &mut InnerWork<S>,
) -> Result<(), StepError> {
    rhs.eval(f, &mut work.k1)?;
    f.axpy(dt, &work.k1);
    Ok(())
}

/// Midpoint rule: `k1 = D_t(f)`, `k2 = D_t(f + dt/2 k1)`, `f <- f + dt k2`.
pub fn inner_step_rk2<S: StepState, R: Rhs<S>>(
    f: &mut S,
    rhs: &mut R,
    dt: f64,
    work: &mut InnerWork<S>,
) -> Result<(), StepError> {
    rhs.eval(f, &mut work.k1)?;
    work.tmp.copy_from(f);
    work.tmp.axpy(0.5 * dt, &work.k1);
    rhs.eval(&work.tmp, &mut work.k2)?;
    f.axpy(dt, &work.k2);
    Ok(())
}

fn inner_step<S: StepState, R: Rhs<S>>(
    inner: InnerIntegrator,
    f: &mut S,
    rhs: &mut R,
    dt: f64,
    work: &mut InnerWork<S>,
) -> Result<(), StepError> {
    match inner {
        InnerIntegrator::Fe => inner_step_fe(f, rhs, dt, work),
        InnerIntegrator::Rk2 => inner_step_rk2(f, rhs, dt, work),
    }
}

/// A condition of the projective Runge-Kutta consistency/convexity checks
/// that a tableau violates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TableauViolation {
    Shape(String),
    WeightsSum(f64),
    WeightRange { stage: usize, value: f64 },
    NodeRange { stage: usize, value: f64 },
    RowSum { stage: usize, row_sum: f64, node: f64 },
    NotExplicit { stage: usize, col: usize },
    FirstNodeNonzero(f64),
    Convexity { stage: usize, col: usize, value: f64 },
}

impl fmt::Display for TableauViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableauViolation::Shape(s) => write!(f, "shape: {s}"),
            TableauViolation::WeightsSum(s) => write!(f, "Σb ≠ 1 (Σb = {s})"),
            TableauViolation::WeightRange { stage, value } => write!(f, "b_{stage} = {value} outside [0, 1]"),
            TableauViolation::NodeRange { stage, value } => write!(f, "c_{stage} = {value} outside [0, 1]"),
            TableauViolation::RowSum { stage, row_sum, node } => {
                write!(f, "Σ_l a_{stage},l = {row_sum} ≠ c_{stage} = {node}")
            }
            TableauViolation::NotExplicit { stage, col } => write!(f, "a_{stage},{col} ≠ 0 on or above the diagonal"),
            TableauViolation::FirstNodeNonzero(c) => write!(f, "c_1 = {c} ≠ 0"),
            TableauViolation::Convexity { stage, col, value } => {
                write!(f, "a_{stage},{col} = {value} outside [0, c_{stage}]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButcherTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: u32,
}

impl ButcherTableau {
    /// One-stage tableau; as an outer method this is projective forward Euler.
    pub fn forward_euler() -> Self {
        ButcherTableau {
            a: vec![vec![0.0]],
            b: vec![1.0],
            c: vec![0.0],
            order: 1,
        }
    }

    /// Explicit midpoint rule.
    pub fn rk2() -> Self {
        ButcherTableau {
            a: vec![vec![0.0, 0.0], vec![0.5, 0.0]],
            b: vec![0.0, 1.0],
            c: vec![0.0, 0.5],
            order: 2,
        }
    }

    /// Classical fourth-order Runge-Kutta.
    pub fn rk4() -> Self {
        ButcherTableau {
            a: vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
            order: 4,
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Every violated consistency or convexity condition; empty means valid.
    pub fn validate(&self) -> Vec<TableauViolation> {
        const TOL: f64 = 1e-14;
        let s = self.b.len();
        let mut out = Vec::new();
        if self.c.len() != s || self.a.len() != s || self.a.iter().any(|row| row.len() != s) || s == 0 {
            out.push(TableauViolation::Shape(format!(
                "b has {} entries, c has {}, a has {} rows",
                s,
                self.c.len(),
                self.a.len()
            )));
            return out;
        }
        let sum_b: f64 = self.b.iter().sum();
        if (sum_b - 1.0).abs() > TOL {
            out.push(TableauViolation::WeightsSum(sum_b));
        }
        for (stage, &b) in self.b.iter().enumerate() {
            if !(-TOL..=1.0 + TOL).contains(&b) {
                out.push(TableauViolation::WeightRange { stage: stage + 1, value: b });
            }
        }
        if self.c[0].abs() > TOL {
            out.push(TableauViolation::FirstNodeNonzero(self.c[0]));
        }
        for stage in 0..s {
            let c = self.c[stage];
            if !(-TOL..=1.0 + TOL).contains(&c) {
                out.push(TableauViolation::NodeRange { stage: stage + 1, value: c });
            }
            let row_sum: f64 = self.a[stage].iter().sum();
            if (row_sum - c).abs() > TOL {
                out.push(TableauViolation::RowSum {
                    stage: stage + 1,
                    row_sum,
                    node: c,
                });
            }
            for col in 0..s {
                let a = self.a[stage][col];
                if col >= stage && a != 0.0 {
                    out.push(TableauViolation::NotExplicit {
                        stage: stage + 1,
                        col: col + 1,
                    });
                } else if !(-TOL..=c + TOL).contains(&a) {
                    out.push(TableauViolation::Convexity {
                        stage: stage + 1,
                        col: col + 1,
                        value: a,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterMethod {
    Pfe,
    Prk2,
    Prk4,
}

impl OuterMethod {
    pub fn tableau(&self) -> ButcherTableau {
        match self {
            OuterMethod::Pfe => ButcherTableau::forward_euler(),
            OuterMethod::Prk2 => ButcherTableau::rk2(),
            OuterMethod::Prk4 => ButcherTableau::rk4(),
        }
    }

    pub fn order(&self) -> u32 {
        self.tableau().order
    }
}

impl FromStr for OuterMethod {
    type Err = StepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pfe" => Ok(OuterMethod::Pfe),
            "prk2" => Ok(OuterMethod::Prk2),
            "prk4" => Ok(OuterMethod::Prk4),
            other => Err(StepError::InvalidScheme(format!("unknown outer method {other:?}"))),
        }
    }
}

impl fmt::Display for OuterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OuterMethod::Pfe => "pfe",
            OuterMethod::Prk2 => "prk2",
            OuterMethod::Prk4 => "prk4",
        })
    }
}

/// Inner integrator, tableau and the `(eps, dt, K, Dt)` step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveScheme {
    pub inner: InnerIntegrator,
    pub eps: f64,
    pub delta_t: f64,
    pub k: usize,
    pub big_dt: f64,
    pub tableau: ButcherTableau,
}

impl ProjectiveScheme {
    pub fn new(
        inner: InnerIntegrator,
        outer: OuterMethod,
        eps: f64,
        delta_t: f64,
        k: usize,
        big_dt: f64,
    ) -> Result<Self, StepError> {
        let scheme = ProjectiveScheme {
            inner,
            eps,
            delta_t,
            k,
            big_dt,
            tableau: outer.tableau(),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return Err(StepError::InvalidScheme(format!("inner step {} must be positive", self.delta_t)));
        }
        if !(self.eps > 0.0) {
            return Err(StepError::InvalidScheme(format!("eps {} must be positive", self.eps)));
        }
        if !(self.big_dt >= (self.k as f64 + 1.0) * self.delta_t) {
            return Err(StepError::InvalidScheme(format!(
                "outer step {} is shorter than (K+1) inner steps = {}",
                self.big_dt,
                (self.k as f64 + 1.0) * self.delta_t
            )));
        }
        let violations = self.tableau.validate();
        if !violations.is_empty() {
            return Err(StepError::InvalidTableau(violations));
        }
        Ok(())
    }

    /// Right-hand-side evaluations per (full or shortened) outer step.
    pub fn evaluations_per_step(&self) -> u64 {
        self.tableau.stages() as u64 * (self.k as u64 + 1) * self.inner.stages()
    }
}

/// Reusable buffers for [`projective_step`].
#[derive(Debug, Clone)]
pub struct ProjectiveWork<S> {
    inner: InnerWork<S>,
    base: S,
    stage: S,
    prev: S,
    acc: S,
    ks: Vec<S>,
}

impl<S: StepState> ProjectiveWork<S> {
    pub fn new(template: &S, stages: usize) -> Self {
        ProjectiveWork {
            inner: InnerWork::new(template),
            base: template.clone(),
            stage: template.clone(),
            prev: template.clone(),
            acc: template.clone(),
            ks: vec![template.clone(); stages],
        }
    }
}

/// Runs `K + 1` inner steps on `state`, leaving the last two iterates in
/// `state` (`f^{K+1}`) and `prev` (`f^K`).
fn inner_burst<S: StepState, R: Rhs<S>>(
    scheme: &ProjectiveScheme,
    state: &mut S,
    prev: &mut S,
    rhs: &mut R,
    work: &mut InnerWork<S>,
) -> Result<(), StepError> {
    for _ in 0..=scheme.k {
        prev.copy_from(state);
        inner_step(scheme.inner, state, rhs, scheme.delta_t, work)?;
    }
    Ok(())
}

/// `out = (a - b) / dt`
fn difference_quotient<S: StepState>(a: &S, b: &S, dt: f64, out: &mut S) {
    out.copy_from(a);
    out.axpy(-1.0, b);
    out.scale(1.0 / dt);
}

/// One projective step of length `step` (normally `scheme.big_dt`; shorter
/// for the final landing step) applied in place to `f`.
pub fn projective_step<S: StepState, R: Rhs<S>>(
    f: &mut S,
    scheme: &ProjectiveScheme,
    step: f64,
    rhs: &mut R,
    work: &mut ProjectiveWork<S>,
) -> Result<(), StepError> {
    let tab = &scheme.tableau;
    let stages = tab.stages();
    let burst = (scheme.k as f64 + 1.0) * scheme.delta_t;
    let dt = scheme.delta_t;

    // stage 1 from f^n
    inner_burst(scheme, f, &mut work.prev, rhs, &mut work.inner)?;
    work.base.copy_from(f);
    difference_quotient(f, &work.prev, dt, &mut work.ks[0]);

    for s in 1..stages {
        let c = tab.c[s];
        work.stage.copy_from(&work.base);
        if c != 0.0 {
            let coef = c * step - burst;
            for l in 0..s {
                let a = tab.a[s][l];
                if a != 0.0 {
                    work.stage.axpy(coef * a / c, &work.ks[l]);
                }
            }
        }
        inner_burst(scheme, &mut work.stage, &mut work.prev, rhs, &mut work.inner)?;
        difference_quotient(&work.stage, &work.prev, dt, &mut work.ks[s]);
    }

    work.acc.set_zero();
    for s in 0..stages {
        if tab.b[s] != 0.0 {
            work.acc.axpy(tab.b[s], &work.ks[s]);
        }
    }
    f.copy_from(&work.base);
    f.axpy(step - burst, &work.acc);
    Ok(())
}

/// Splits `[0, T]` into outer steps of `big_dt`, shortening the last one so
/// the sum lands on `T` exactly.
pub fn outer_steps(total: f64, big_dt: f64) -> Vec<f64> {
    if total <= 0.0 {
        return Vec::new();
    }
    let n = ((total / big_dt) - 1e-9).ceil().max(1.0) as usize;
    let mut steps = vec![big_dt; n];
    steps[n - 1] = total - (n as f64 - 1.0) * big_dt;
    steps
}

/// Amplification of one projective step on `y' = lambda y` when the inner
/// integrator multiplies by `tau` each step.
pub fn projective_amplification(
    tableau: &ButcherTableau,
    tau: Complex64,
    k: usize,
    ratio: f64,
) -> Complex64 {
    // with dt = 1, forward Euler reproduces tau exactly for lambda = tau - 1
    let scheme = ProjectiveScheme {
        inner: InnerIntegrator::Fe,
        eps: 1.0,
        delta_t: 1.0,
        k,
        big_dt: ratio,
        tableau: tableau.clone(),
    };
    let mut y = Complex64::new(1.0, 0.0);
    let mut rhs = LinearTest(tau - 1.0);
    let mut work = ProjectiveWork::new(&y, tableau.stages());
    projective_step(&mut y, &scheme, ratio, &mut rhs, &mut work).expect("scalar step cannot fail");
    y
}
