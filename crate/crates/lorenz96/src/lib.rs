//! Bifurcation analysis of the monoscale Lorenz-96 model and its
//! two-parameter diffusion unfolding.
//!
//! The crate pairs the closed-form spectral theory of the trivial equilibrium
//! (circulant eigenvalues, Hopf values and lines, Hopf-Hopf coincidences, the
//! first Lyapunov coefficient, travelling-wave predictors, trapping radius)
//! with the numerical machinery needed to follow the dynamics beyond the
//! first bifurcation: fixed-step integration with tangent flow, Lyapunov
//! spectra and attractor classification, parameter scans, Poincare return
//! maps with Newton-refined periodic orbits and Floquet multipliers, and
//! travelling-wave diagnostics.

pub mod attractor;
pub mod error;
pub mod integrator;
pub mod model;
pub mod poincare;
pub mod spectral;
mod trig;
pub mod waves;

pub use error::{Error, Result};
pub use model::SystemConfig;
