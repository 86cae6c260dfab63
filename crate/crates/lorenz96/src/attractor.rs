//! Lyapunov-exponent estimation, attractor classification, and one- and
//! two-parameter scans.
//!
//! Exponents come from the standard tangent-space QR method: a frame of k
//! tangent vectors is co-integrated with the flow and re-orthonormalised at a
//! fixed interval; the averaged logs of the triangular diagonal converge to
//! the k largest exponents. Scans sweep the forcing (and optionally the
//! diffusion) and classify each point by its exponent signature, warm-starting
//! each point from its predecessor's final state to follow attractor branches
//! through multistable regions.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate_with_tangent, IntegrationSpec, DEFAULT_DT};
use crate::model::{equilibrium, SystemConfig};
use crate::waves::wave_number;

/// Exponents within this band of zero count as neutral directions.
pub const DEFAULT_TOL_ZERO: f64 = 5e-3;

/// Averaging schedule for the exponent estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    pub dt: f64,
    /// Discarded before averaging starts (the frame is still renormalised).
    pub transient: f64,
    /// Averaging time after the transient.
    pub horizon: f64,
    /// Time between QR renormalisations.
    pub renorm_interval: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, transient: 500.0, horizon: 5000.0, renorm_interval: 0.5 }
    }
}

impl LyapunovOptions {
    pub fn with_horizon(horizon: f64, transient: f64) -> Self {
        Self { horizon, transient, ..Self::default() }
    }
}

/// Ordered exponent estimates per unit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// Sorted descending.
    pub exponents: Vec<f64>,
    pub horizon: f64,
    pub renorm_interval: f64,
    /// False when the running estimates still moved appreciably between the
    /// half and full horizon.
    pub converged: bool,
}

/// Attractor category derived from an exponent signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorKind {
    Equilibrium,
    Periodic,
    /// Torus of the given dimension (2 or 3).
    QuasiPeriodic(usize),
    Chaotic,
    Unclassified,
}

impl AttractorKind {
    /// Single-letter raster code: E, P, Q2, Q3, C or U.
    pub fn code(&self) -> String {
        match self {
            AttractorKind::Equilibrium => "E".into(),
            AttractorKind::Periodic => "P".into(),
            AttractorKind::QuasiPeriodic(d) => format!("Q{d}"),
            AttractorKind::Chaotic => "C".into(),
            AttractorKind::Unclassified => "U".into(),
        }
    }
}

/// Classification together with the spectrum it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorClass {
    pub kind: AttractorKind,
    pub evidence: LyapunovSpectrum,
}

/// Estimates the k largest Lyapunov exponents from `x0`.
pub fn lyapunov_spectrum(
    cfg: &SystemConfig,
    x0: &[f64],
    k: usize,
    opts: &LyapunovOptions,
) -> Result<LyapunovSpectrum> {
    lyapunov_with_final(cfg, x0, k, opts).map(|(spectrum, _)| spectrum)
}

/// As [`lyapunov_spectrum`], additionally returning the final state of the
/// underlying trajectory (used to chain warm-started scans).
pub fn lyapunov_with_final(
    cfg: &SystemConfig,
    x0: &[f64],
    k: usize,
    opts: &LyapunovOptions,
) -> Result<(LyapunovSpectrum, Vec<f64>)> {
    if k == 0 || k > cfg.n {
        return Err(Error::InvalidSpec(format!(
            "need 1 <= k <= n tangent vectors, got k = {k} for n = {}",
            cfg.n
        )));
    }
    let checkpoint_every = (opts.renorm_interval / opts.dt).round().max(1.0) as usize;
    let block = checkpoint_every as f64 * opts.dt;
    let total_steps = ((opts.transient + opts.horizon) / opts.dt).round() as usize;
    let transient_steps = (opts.transient / opts.dt).round() as usize;
    let spec = IntegrationSpec {
        dt: opts.dt,
        t_end: total_steps as f64 * opts.dt,
        transient: opts.transient,
        sample_every: (total_steps - transient_steps).max(1),
    };

    let total_blocks = total_steps / checkpoint_every;
    let accumulated_blocks = (1..=total_blocks)
        .filter(|m| m * checkpoint_every > transient_steps)
        .count();
    let half_mark = accumulated_blocks / 2;

    let q0 = DMatrix::identity(cfg.n, k);
    let mut sums = vec![0.0; k];
    let mut seen = 0usize;
    let mut half_estimate = vec![f64::NAN; k];

    let trajectory = integrate_with_tangent(cfg, x0, &q0, &spec, checkpoint_every, |t, _, q| {
        let qr = q.clone().qr();
        let r = qr.r();
        if t > opts.transient + 1e-9 {
            for i in 0..k {
                sums[i] += r[(i, i)].abs().max(f64::MIN_POSITIVE).ln();
            }
            seen += 1;
            if seen == half_mark {
                for i in 0..k {
                    half_estimate[i] = sums[i] / (seen as f64 * block);
                }
            }
        }
        q.copy_from(&qr.q());
    })?;

    let averaged_time = seen as f64 * block;
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / averaged_time.max(1e-300)).collect();
    exponents.sort_by(|a, b| b.partial_cmp(a).expect("finite exponents"));

    let converged = if seen < 4 || half_estimate[0].is_nan() {
        false
    } else {
        let mut half_sorted = half_estimate.clone();
        half_sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite exponents"));
        let scale = exponents.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = (0.1 * scale).max(0.02);
        exponents.iter().zip(&half_sorted).all(|(a, b)| (a - b).abs() <= tol)
    };

    Ok((
        LyapunovSpectrum {
            exponents,
            horizon: opts.horizon,
            renorm_interval: block,
            converged,
        },
        trajectory.last_state().to_vec(),
    ))
}

/// Classifies an attractor from its exponent signature.
///
/// Chaotic when the leading exponent exceeds `tol_zero`; otherwise the number
/// of exponents inside `[-tol_zero, tol_zero]` decides: none is an
/// equilibrium, one a periodic orbit, two or three a torus of that dimension.
/// Non-converged spectra and deeper tori come back unclassified.
pub fn classify(spectrum: &LyapunovSpectrum, tol_zero: f64) -> AttractorClass {
    let kind = if !spectrum.converged || spectrum.exponents.is_empty() {
        AttractorKind::Unclassified
    } else if spectrum.exponents[0] > tol_zero {
        AttractorKind::Chaotic
    } else {
        let neutral = spectrum.exponents.iter().filter(|l| l.abs() <= tol_zero).count();
        match neutral {
            0 => AttractorKind::Equilibrium,
            1 => AttractorKind::Periodic,
            2 | 3 => AttractorKind::QuasiPeriodic(neutral),
            _ => AttractorKind::Unclassified,
        }
    };
    AttractorClass { kind, evidence: spectrum.clone() }
}

/// Sweep direction of the dependent parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    Up,
    Down,
}

/// Per-point settings of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Number of exponents per point.
    pub k: usize,
    /// Neutral band used for classification.
    pub tol_zero: f64,
    pub lyapunov: LyapunovOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { k: 3, tol_zero: DEFAULT_TOL_ZERO, lyapunov: LyapunovOptions::default() }
    }
}

impl ScanOptions {
    /// Desk-scale raster settings: short averaging with a correspondingly
    /// wider neutral band. Region structure survives; per-pixel exponent
    /// accuracy does not.
    pub fn raster() -> Self {
        Self {
            k: 3,
            tol_zero: 2e-2,
            lyapunov: LyapunovOptions {
                dt: DEFAULT_DT,
                transient: 120.0,
                horizon: 250.0,
                renorm_interval: 0.5,
            },
        }
    }
}

/// One grid point of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub f: f64,
    pub g: f64,
    pub kind: AttractorKind,
    /// Leading exponents, descending; empty when the point failed.
    pub exponents: Vec<f64>,
    /// Dominant spatial wave number of the final state, for non-equilibrium
    /// points.
    pub wave: Option<usize>,
}

/// Result of a one- or two-parameter scan. Points are in canonical order
/// (F outer, G inner, both ascending) regardless of sweep direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub n: usize,
    pub warm_start: bool,
    /// G-sweep direction for two-parameter scans.
    pub direction: Option<SweepDirection>,
    /// Smallest F classified chaotic.
    pub chaos_onset: Option<f64>,
    pub points: Vec<ScanPoint>,
}

/// Deterministic cold-start seed: the equilibrium nudged in the first
/// coordinate.
pub fn cold_seed(cfg: &SystemConfig) -> Vec<f64> {
    let mut x = equilibrium(cfg);
    x[0] += 1e-3;
    x
}

fn scan_point(
    cfg: &SystemConfig,
    seed: &[f64],
    opts: &ScanOptions,
    carry: &mut Option<Vec<f64>>,
) -> ScanPoint {
    match lyapunov_with_final(cfg, seed, opts.k.min(cfg.n), &opts.lyapunov) {
        Ok((spectrum, final_state)) => {
            let class = classify(&spectrum, opts.tol_zero);
            let wave = match class.kind {
                AttractorKind::Equilibrium | AttractorKind::Unclassified => None,
                _ => wave_number(&final_state).ok(),
            };
            *carry = Some(final_state);
            ScanPoint {
                f: cfg.forcing,
                g: cfg.diffusion,
                kind: class.kind,
                exponents: spectrum.exponents,
                wave,
            }
        }
        // Failures stay in place as unclassified cells; the sweep restarts
        // cold at the next point.
        Err(_) => {
            *carry = None;
            ScanPoint {
                f: cfg.forcing,
                g: cfg.diffusion,
                kind: AttractorKind::Unclassified,
                exponents: Vec::new(),
                wave: None,
            }
        }
    }
}

fn grid_value(range: (f64, f64), index: usize, steps: usize) -> f64 {
    range.0 + (range.1 - range.0) * index as f64 / (steps - 1) as f64
}

fn onset_of_chaos(points: &[ScanPoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.kind == AttractorKind::Chaotic)
        .map(|p| p.f)
        .min_by(|a, b| a.partial_cmp(b).expect("finite F"))
}

/// Sweeps the forcing over `steps` points of `f_range`.
///
/// With `warm_start` each point is seeded from its predecessor's final state
/// (following the attractor branch); otherwise every point starts from the
/// perturbed equilibrium.
pub fn scan_f(
    template: &SystemConfig,
    f_range: (f64, f64),
    steps: usize,
    warm_start: bool,
    opts: &ScanOptions,
) -> Result<ScanResult> {
    if steps < 2 {
        return Err(Error::InvalidSpec(format!("scan needs at least 2 steps, got {steps}")));
    }
    let mut carry: Option<Vec<f64>> = None;
    let mut points = Vec::with_capacity(steps);
    for i in 0..steps {
        let f = grid_value(f_range, i, steps);
        let cfg = SystemConfig::with_diffusion(template.n, f, template.diffusion);
        let seed = match (&carry, warm_start) {
            (Some(state), true) => state.clone(),
            _ => cold_seed(&cfg),
        };
        points.push(scan_point(&cfg, &seed, opts, &mut carry));
    }
    Ok(ScanResult {
        n: template.n,
        warm_start,
        direction: None,
        chaos_onset: onset_of_chaos(&points),
        points,
    })
}

/// Rasterises the (F, G)-plane on an `nf x ng` grid.
///
/// Each fixed-F column is swept along G in the requested direction with warm
/// starts, so hysteresis between up- and down-sweeps exposes multistable
/// regions. Columns are independent and run in parallel; the output order is
/// canonical either way.
pub fn scan_fg(
    template: &SystemConfig,
    f_range: (f64, f64),
    g_range: (f64, f64),
    grid: (usize, usize),
    direction: SweepDirection,
    opts: &ScanOptions,
) -> Result<ScanResult> {
    let (nf, ng) = grid;
    if nf < 2 || ng < 2 {
        return Err(Error::InvalidSpec(format!("grid must be at least 2x2, got {nf}x{ng}")));
    }
    let columns: Vec<Vec<ScanPoint>> = (0..nf)
        .into_par_iter()
        .map(|i| {
            let f = grid_value(f_range, i, nf);
            let order: Vec<usize> = match direction {
                SweepDirection::Up => (0..ng).collect(),
                SweepDirection::Down => (0..ng).rev().collect(),
            };
            let mut carry: Option<Vec<f64>> = None;
            let mut column = Vec::with_capacity(ng);
            for j in order {
                let g = grid_value(g_range, j, ng);
                let cfg = SystemConfig::with_diffusion(template.n, f, g);
                let seed = carry.clone().unwrap_or_else(|| cold_seed(&cfg));
                column.push(scan_point(&cfg, &seed, opts, &mut carry));
            }
            if direction == SweepDirection::Down {
                column.reverse();
            }
            column
        })
        .collect();

    let points: Vec<ScanPoint> = columns.into_iter().flatten().collect();
    Ok(ScanResult {
        n: template.n,
        warm_start: true,
        direction: Some(direction),
        chaos_onset: onset_of_chaos(&points),
        points,
    })
}
