//! Discrete velocity sets and the moment bracket `<phi(v) f> = sum_j w_j phi(v_j) f_j`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FluxModel, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VelocityError {
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("orthogonal velocities need R, S >= 1 and v_max > 0 (R = {r}, S = {s}, v_max = {v_max})")]
    InvalidGrid { r: usize, s: usize, v_max: f64 },
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Velocities `v_j` (`J x D`, row-major) with quadrature weights `w_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySet {
    pub dim: usize,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// Second moments `<(v^d)^2>` per axis.
    pub a_sq: [f64; 2],
    /// Gauss-Hermite scale (1D sets only).
    pub sigma: Option<f64>,
}

/// Which velocity weight the bracket applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    Zeroth,
    First(usize),
    Second(usize, usize),
}

impl VelocitySet {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn velocity(&self, j: usize) -> &[f64] {
        &self.v[j * self.dim..(j + 1) * self.dim]
    }

    /// Largest speed `|v_j|` along one axis.
    pub fn max_speed(&self, axis: usize) -> f64 {
        (0..self.len()).fold(0.0f64, |s, j| s.max(self.velocity(j)[axis].abs()))
    }

    fn weight(&self, j: usize, moment: Moment) -> f64 {
        let v = self.velocity(j);
        match moment {
            Moment::Zeroth => self.w[j],
            Moment::First(d) => self.w[j] * v[d],
            Moment::Second(d, e) => self.w[j] * v[d] * v[e],
        }
    }

    /// Applies the bracket cell by cell to `f` laid out as `[cell][j][m]`,
    /// returning `[cell][m]`.
    pub fn bracket(&self, f: &[f64], m: usize, moment: Moment) -> Result<Vec<f64>, VelocityError> {
        let jm = self.len() * m;
        if jm == 0 || !f.len().is_multiple_of(jm) {
            return Err(VelocityError::ShapeMismatch {
                expected: jm,
                got: f.len(),
            });
        }
        let cells = f.len() / jm;
        let weights: Vec<f64> = (0..self.len()).map(|j| self.weight(j, moment)).collect();
        let mut out = vec![0.0; cells * m];
        for (cell, u) in out.chunks_exact_mut(m).enumerate() {
            let fc = &f[cell * jm..(cell + 1) * jm];
            for (j, w) in weights.iter().enumerate() {
                for c in 0..m {
                    u[c] += w * fc[j * m + c];
                }
            }
        }
        Ok(out)
    }

    fn check(&self) {
        let total: f64 = self.w.iter().sum();
        debug_assert!((total - 1.0).abs() < 1e-14, "weights sum to {total}");
        if self.dim == 1 {
            let n = self.len();
            for j in 0..n {
                debug_assert_eq!(self.v[j], -self.v[n - 1 - j]);
            }
        }
    }
}

/// The two-point Gauss-Hermite set `{(-sigma, 1/2), (+sigma, 1/2)}`.
pub fn gauss_hermite_pair(sigma: f64) -> Result<VelocitySet, VelocityError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(VelocityError::InvalidSigma(sigma));
    }
    let set = VelocitySet {
        dim: 1,
        v: vec![-sigma, sigma],
        w: vec![0.5, 0.5],
        a_sq: [sigma * sigma, 0.0],
        sigma: Some(sigma),
    };
    set.check();
    Ok(set)
}

/// Orthogonal-velocities set: `R` radii `r v_max / R` times `4S` directions
/// `s pi / (2S)`, all with weight `1/J`. Index `j = (r-1) 4S + s`.
pub fn orthogonal_velocities(r_count: usize, s_count: usize, v_max: f64) -> Result<VelocitySet, VelocityError> {
    if r_count == 0 || s_count == 0 || !(v_max > 0.0 && v_max.is_finite()) {
        return Err(VelocityError::InvalidGrid {
            r: r_count,
            s: s_count,
            v_max,
        });
    }
    let j_count = 4 * r_count * s_count;
    let mut v = Vec::with_capacity(2 * j_count);
    for r in 1..=r_count {
        let radius = r as f64 / r_count as f64 * v_max;
        for s in 1..=4 * s_count {
            let theta = s as f64 / s_count as f64 * FRAC_PI_2;
            let (sin, cos) = theta.sin_cos();
            // snap the rounding residue of cos(pi/2) etc. so axis-aligned
            // velocities are exactly axis-aligned
            let snap = |x: f64| if x.abs() < 1e-14 { 0.0 } else { x };
            v.push(radius * snap(cos));
            v.push(radius * snap(sin));
        }
    }
    let w = vec![1.0 / j_count as f64; j_count];
    let second = |axis: usize| (0..j_count).map(|j| w[j] * v[2 * j + axis] * v[2 * j + axis]).sum::<f64>();
    let a_sq = [second(0), second(1)];
    let set = VelocitySet {
        dim: 2,
        v,
        w,
        a_sq,
        sigma: None,
    };
    set.check();
    Ok(set)
}

/// Minimum `v_max^2` for the orthogonal set given the summed squared Jacobian
/// norms `|dF^x/du|^2 + |dF^y/du|^2`.
pub fn v_max_squared_bound(norm_sq_sum: f64, r_count: usize) -> f64 {
    let r = r_count as f64;
    12.0 * r * r * norm_sq_sum / ((r + 1.0) * (2.0 * r + 1.0))
}

/// Smallest integer `v_max` admissible for the field `u_field` (`[cell][m]`).
pub fn v_max_bound(model: &FluxModel, u_field: &[f64], r_count: usize) -> Result<f64, VelocityError> {
    let speeds = model.max_wave_speed(u_field)?;
    let norm_sq_sum: f64 = speeds.iter().map(|s| s * s).sum();
    // guard against 2.0000000000000004 rounding up to 3
    let bound = v_max_squared_bound(norm_sq_sum, r_count).sqrt();
    Ok((bound - 1e-12).ceil().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pair_values_and_moments() {
        let v = gauss_hermite_pair(1.0).unwrap();
        assert_eq!(v.v, vec![-1.0, 1.0]);
        assert_eq!(v.w, vec![0.5, 0.5]);
        let v = gauss_hermite_pair(2.0).unwrap();
        assert_eq!(v.v, vec![-2.0, 2.0]);
        let ones = [1.0, 1.0];
        assert_eq!(v.bracket(&ones, 1, Moment::Zeroth).unwrap(), vec![1.0]);
        assert_eq!(v.bracket(&ones, 1, Moment::First(0)).unwrap(), vec![0.0]);
        assert_eq!(v.bracket(&ones, 1, Moment::Second(0, 0)).unwrap(), vec![4.0]);
        assert!(gauss_hermite_pair(0.0).is_err());
        assert!(gauss_hermite_pair(-1.0).is_err());
    }

    #[test]
    fn bracket_of_simple_fields() {
        let sigma = 3.0;
        let v = gauss_hermite_pair(sigma).unwrap();
        assert_eq!(v.bracket(&[0.0, 1.0], 1, Moment::Zeroth).unwrap(), vec![0.5]);
        assert_eq!(v.bracket(&[0.0, 1.0], 1, Moment::First(0)).unwrap(), vec![sigma / 2.0]);
        assert_eq!(v.bracket(&[7.0, 7.0, 7.0, 7.0], 1, Moment::Zeroth).unwrap(), vec![7.0, 7.0]);
        assert!(matches!(
            v.bracket(&[1.0, 2.0, 3.0], 1, Moment::Zeroth),
            Err(VelocityError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn four_velocity_set() {
        let v = orthogonal_velocities(1, 1, 2.0).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.v, vec![0.0, 2.0, -2.0, 0.0, 0.0, -2.0, 2.0, 0.0]);
        assert_eq!(v.a_sq, [2.0, 2.0]);
        assert!(orthogonal_velocities(0, 1, 1.0).is_err());
        assert!(orthogonal_velocities(1, 1, 0.0).is_err());
    }

    #[test]
    fn v_max_examples() {
        let adv = FluxModel::Advection2d { a: 1.0, b: 1.0 };
        assert_eq!(v_max_bound(&adv, &[0.3], 1).unwrap(), 2.0);
        // unit Jacobian norms in both directions
        assert_eq!((v_max_squared_bound(2.0, 1).sqrt()).ceil(), 2.0);
        // large-R limit approaches 6 (|F^x|^2 + |F^y|^2)
        let lim = v_max_squared_bound(2.0, 100_000);
        assert!((lim - 12.0).abs() < 1e-3);
        let mut prev = 0.0;
        for r in 1..50 {
            let b = v_max_squared_bound(2.0, r);
            assert!(b > prev);
            prev = b;
        }
    }

    proptest! {
        #[test]
        fn orthogonal_sets_are_symmetric(r in 1usize..4, s in 1usize..4, vmax in 0.1f64..10.0) {
            let v = orthogonal_velocities(r, s, vmax).unwrap();
            prop_assert_eq!(v.len(), 4 * r * s);
            let total: f64 = v.w.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-14);
            let mean_x: f64 = (0..v.len()).map(|j| v.w[j] * v.velocity(j)[0]).sum();
            let mean_y: f64 = (0..v.len()).map(|j| v.w[j] * v.velocity(j)[1]).sum();
            prop_assert!(mean_x.abs() < 1e-13 * vmax && mean_y.abs() < 1e-13 * vmax);
            prop_assert!((v.a_sq[0] - v.a_sq[1]).abs() < 1e-13 * vmax * vmax);
        }

        #[test]
        fn bracket_is_linear(f in proptest::collection::vec(-5.0f64..5.0, 12),
                             g in proptest::collection::vec(-5.0f64..5.0, 12),
                             a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let v = orthogonal_velocities(1, 1, 2.0).unwrap();
            let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            for moment in [Moment::Zeroth, Moment::First(0), Moment::First(1), Moment::Second(0, 1)] {
                let lhs = v.bracket(&combo, 3, moment).unwrap();
                let bf = v.bracket(&f, 3, moment).unwrap();
                let bg = v.bracket(&g, 3, moment).unwrap();
                for k in 0..lhs.len() {
                    prop_assert!((lhs[k] - (a * bf[k] + b * bg[k])).abs() < 1e-12);
                }
            }
        }
    }
}
