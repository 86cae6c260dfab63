//! The Lorenz-96 vector field and its two-parameter diffusion extension.
//!
//! The model couples `n` variables on a ring,
//!
//! ```text
//! dx_j/dt = x_{j-1} (x_{j+1} - x_{j-2}) - x_j + G (x_{j-1} - 2 x_j + x_{j+1}) + F,
//! ```
//!
//! with indices taken modulo `n`. `G = 0` recovers the original model
//! term-for-term. All functions here are pure; internal indexing is 0-based
//! with modular wrap.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in model-family space: dimension, forcing and diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of sectors on the ring (>= 1).
    pub n: usize,
    /// External forcing F.
    pub forcing: f64,
    /// Diffusion coefficient G of the Laplace-like term; 0 for the original model.
    pub diffusion: f64,
}

impl SystemConfig {
    /// Original model: diffusion is zero.
    pub fn new(n: usize, forcing: f64) -> Self {
        Self { n, forcing, diffusion: 0.0 }
    }

    pub fn with_diffusion(n: usize, forcing: f64, diffusion: f64) -> Self {
        Self { n, forcing, diffusion }
    }

    pub(crate) fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }
}

#[inline]
fn wrap(j: isize, n: usize) -> usize {
    j.rem_euclid(n as isize) as usize
}

/// Evaluates the vector field into a preallocated buffer. Hot path for the
/// integrator; `out` must have length `cfg.n`.
#[inline]
pub(crate) fn vector_field_into(cfg: &SystemConfig, x: &[f64], out: &mut [f64]) {
    let n = cfg.n;
    let f = cfg.forcing;
    let g = cfg.diffusion;
    for j in 0..n {
        let jm1 = x[wrap(j as isize - 1, n)];
        let jm2 = x[wrap(j as isize - 2, n)];
        let jp1 = x[wrap(j as isize + 1, n)];
        out[j] = jm1 * (jp1 - jm2) - x[j] + g * (jm1 - 2.0 * x[j] + jp1) + f;
    }
}

/// Directional derivative of the vector field: `J(x) v` evaluated without
/// materialising the Jacobian. Backs the variational flow.
#[inline]
pub(crate) fn tangent_field_into(cfg: &SystemConfig, x: &[f64], v: &[f64], out: &mut [f64]) {
    let n = cfg.n;
    let g = cfg.diffusion;
    for j in 0..n {
        let xm1 = x[wrap(j as isize - 1, n)];
        let xm2 = x[wrap(j as isize - 2, n)];
        let xp1 = x[wrap(j as isize + 1, n)];
        let vm1 = v[wrap(j as isize - 1, n)];
        let vm2 = v[wrap(j as isize - 2, n)];
        let vp1 = v[wrap(j as isize + 1, n)];
        out[j] = xm1 * (vp1 - vm2) + vm1 * (xp1 - xm2) - v[j] + g * (vm1 - 2.0 * v[j] + vp1);
    }
}

/// Right-hand side of the model at state `x`.
pub fn vector_field(cfg: &SystemConfig, x: &[f64]) -> Result<Vec<f64>> {
    cfg.check_state(x)?;
    let mut out = vec![0.0; cfg.n];
    vector_field_into(cfg, x, &mut out);
    Ok(out)
}

/// Dense Jacobian of the vector field at `x`.
///
/// Entries are accumulated over the wrapped index positions, so coincidences
/// for n < 4 (for example `j+1 = j-2` when n = 3) are handled correctly. At
/// the trivial equilibrium the matrix is circulant with first row
/// `(-1-2G, F+G, 0, ..., 0, -F, G)`.
pub fn jacobian(cfg: &SystemConfig, x: &[f64]) -> Result<DMatrix<f64>> {
    cfg.check_state(x)?;
    let n = cfg.n;
    let g = cfg.diffusion;
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let jm1 = wrap(j as isize - 1, n);
        let jm2 = wrap(j as isize - 2, n);
        let jp1 = wrap(j as isize + 1, n);
        jac[(j, jm1)] += x[jp1] - x[jm2] + g;
        jac[(j, jp1)] += x[jm1] + g;
        jac[(j, jm2)] += -x[jm1];
        jac[(j, j)] += -1.0 - 2.0 * g;
    }
    Ok(jac)
}

/// The trivial equilibrium `x_F = (F, ..., F)`; a fixed point for every n, F
/// and G (the diffusion term vanishes on constant states).
pub fn equilibrium(cfg: &SystemConfig) -> Vec<f64> {
    vec![cfg.forcing; cfg.n]
}

/// Total energy `E = 1/2 sum_j x_j^2`. The advection terms leave it invariant.
pub fn energy(x: &[f64]) -> f64 {
    0.5 * x.iter().map(|v| v * v).sum::<f64>()
}

/// Largest eigenvalue of the symmetric part used in the trapping estimate,
/// from the closed form `lambda^A_j = -1 - 2G (1 - cos(2 pi j / n))`.
pub(crate) fn dissipation_eigenvalue_max(n: usize, g: f64) -> f64 {
    (0..n)
        .map(|j| {
            let laplace = 1.0 - crate::trig::cos_pi_ratio(2 * j as i64, n as i64);
            -1.0 - 2.0 * g * laplace
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Radius of the trapping region: every sphere of radius `r > R` traps the
/// flow. `R = -sqrt(n) |F| / lambda^A_max`; for G >= 0 this is `sqrt(n) |F|`.
///
/// Fails for `G <= -1/4`, where `lambda^A_max` may reach zero and no trapping
/// region is guaranteed.
pub fn trapping_radius(cfg: &SystemConfig) -> Result<f64> {
    if cfg.diffusion <= -0.25 {
        return Err(Error::NoTrappingGuarantee(cfg.diffusion));
    }
    let lambda_max = dissipation_eigenvalue_max(cfg.n, cfg.diffusion);
    debug_assert!(lambda_max < 0.0);
    Ok(-(cfg.n as f64).sqrt() * cfg.forcing.abs() / lambda_max)
}
