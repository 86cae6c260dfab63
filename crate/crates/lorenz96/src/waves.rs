//! Travelling-wave diagnostics: wave-number extraction, empirical period
//! measurement, the linearised wave predictor, and Hovmoller export.
//!
//! The periodic orbit born at the first Hopf bifurcation is a travelling wave
//! `x_F + sqrt((F - F_H)/n) cos(omega_0 t + 2 pi j l / n)`: `l` counts the
//! crests around the ring and the crests move towards decreasing `j`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::spectral::{hopf_value, omega0};

/// Direction the wave pattern drifts along the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drift {
    DecreasingJ,
    IncreasingJ,
    None,
}

/// Summary of a (near-)periodic attractor: wave number, temporal period,
/// oscillation amplitude and drift direction. Fields that are undefined for
/// the signal at hand (aperiodic, spatially constant) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveDiagnostics {
    #[serde(rename = "l")]
    pub wave_number: Option<usize>,
    #[serde(rename = "T")]
    pub period: Option<f64>,
    pub amplitude: f64,
    pub drift: Drift,
}

/// Complex amplitude of spatial mode `m` after mean removal.
fn spatial_mode(x: &[f64], mean: f64, m: usize) -> Complex64 {
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(j, &v)| Complex64::from_polar(v - mean, -2.0 * PI * m as f64 * j as f64 / n))
        .sum()
}

/// Dominant spatial wave number of a snapshot: the argmax over
/// `1 <= m <= n/2` of the discrete Fourier magnitude after mean removal.
/// Ties resolve to the smaller mode index.
pub fn wave_number(x: &[f64]) -> Result<usize> {
    let n = x.len();
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if x.iter().all(|v| (v - mean).abs() <= 1e-9 * scale) {
        return Err(Error::UndefinedWave);
    }
    let mut best = 1;
    let mut best_mag = f64::NEG_INFINITY;
    for m in 1..=n / 2 {
        let mag = spatial_mode(x, mean, m).norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best_mag = mag;
            best = m;
        }
    }
    Ok(best)
}

/// Linear interpolation of a uniformly sampled signal at fractional index `s`.
fn sample_at(y: &[f64], s: f64) -> f64 {
    let i = s.floor() as usize;
    let frac = s - i as f64;
    if i + 1 >= y.len() {
        y[y.len() - 1]
    } else {
        y[i] * (1.0 - frac) + y[i + 1] * frac
    }
}

/// Normalised autocorrelation of `y` at a real lag of `shift` samples.
fn autocorrelation(y: &[f64], shift: f64) -> f64 {
    let m = y.len() - shift.ceil() as usize - 1;
    let mut num = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for i in 0..m {
        let a = y[i];
        let b = sample_at(y, i as f64 + shift);
        num += a * b;
        s0 += a * a;
        s1 += b * b;
    }
    num / (s0 * s1).sqrt().max(f64::MIN_POSITIVE)
}

/// Locates the autocorrelation peak near `guess` (in samples) by golden
/// section on `[0.9 guess, 1.1 guess]`.
fn refine_peak(y: &[f64], guess: f64) -> (f64, f64) {
    let inv_phi = 0.5 * ((5.0f64).sqrt() - 1.0);
    let (mut a, mut b) = (0.9 * guess, 1.1 * guess);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = autocorrelation(y, c);
    let mut fd = autocorrelation(y, d);
    while b - a > 1e-7 * guess {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = autocorrelation(y, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = autocorrelation(y, d);
        }
    }
    let peak = 0.5 * (a + b);
    (peak, autocorrelation(y, peak))
}

/// Measures the period of a (near-)periodic signal from the first coordinate.
///
/// Same-direction crossings of the time mean give a coarse spacing; an
/// autocorrelation peak refines it to sub-step resolution. Crossing counting
/// alone is ambiguous when the waveform crosses its mean more than once per
/// period, so candidate multiples of the coarse spacing are compared on their
/// autocorrelation before refinement.
pub fn measure_period(traj: &Trajectory) -> Result<f64> {
    let y_raw = traj.coordinate(0);
    if y_raw.len() < 16 {
        return Err(Error::NotPeriodic("trajectory too short".into()));
    }
    let mean = y_raw.iter().sum::<f64>() / y_raw.len() as f64;
    let y: Vec<f64> = y_raw.iter().map(|v| v - mean).collect();
    let amp = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if amp < 1e-9 * mean.abs().max(1.0) {
        return Err(Error::NotPeriodic("signal is constant".into()));
    }

    // Upward mean-crossing times by linear interpolation, in samples.
    let mut crossings = Vec::new();
    for i in 1..y.len() {
        if y[i - 1] < 0.0 && y[i] >= 0.0 {
            crossings.push((i - 1) as f64 + y[i - 1] / (y[i - 1] - y[i]));
        }
    }
    if crossings.len() < 3 {
        return Err(Error::NotPeriodic("fewer than three mean crossings".into()));
    }
    let spacings: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();

    // A stable spacing may only appear after grouping m consecutive crossings
    // (several crossings per period).
    let mut coarse = None;
    for group in 1..=4usize {
        let sums: Vec<f64> = spacings.chunks_exact(group).map(|c| c.iter().sum()).collect();
        if sums.len() < 2 {
            break;
        }
        let mean_s = sums.iter().sum::<f64>() / sums.len() as f64;
        let var = sums.iter().map(|s| (s - mean_s) * (s - mean_s)).sum::<f64>() / sums.len() as f64;
        if var.sqrt() / mean_s < 0.01 {
            coarse = Some(mean_s);
            break;
        }
    }
    let coarse = coarse
        .ok_or_else(|| Error::NotPeriodic("no stable crossing spacing within 1% jitter".into()))?;

    // The coarse spacing may be a fraction of the true period; prefer the
    // smallest multiple whose autocorrelation is compatible with periodicity.
    let max_lag = (y.len() / 2) as f64;
    let mut chosen = None;
    for k in 1..=4 {
        let guess = coarse * k as f64;
        if guess > max_lag {
            break;
        }
        let (peak, value) = refine_peak(&y, guess);
        if value >= 0.95 {
            chosen = Some(peak);
            break;
        }
    }
    let period_samples =
        chosen.ok_or_else(|| Error::NotPeriodic("autocorrelation shows no clean repeat".into()))?;
    Ok(period_samples * traj.sample_dt)
}

/// The linearised travelling wave at time `t`, as an offset from `x_F`:
/// component `j` is `sqrt((F - F_H)/n) cos(omega_0 t + 2 pi j l / n)`.
///
/// The phase advances so that crests move towards decreasing `j`, matching
/// the integrated dynamics.
pub fn linearized_wave(l: usize, n: usize, f: f64, t: f64) -> Result<Vec<f64>> {
    let f_h = hopf_value(l, n)?;
    if f < f_h {
        return Err(Error::PreOnset { f, f_h });
    }
    let amplitude = ((f - f_h) / n as f64).sqrt();
    let omega = omega0(l, n)?;
    Ok((0..n)
        .map(|j| amplitude * (omega * t + 2.0 * PI * (j * l) as f64 / n as f64).cos())
        .collect())
}

/// One cell of the space-time raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HovmollerRow {
    pub t: f64,
    /// Fractional when interpolation is requested.
    pub j: f64,
    pub x: f64,
}

/// Space-time raster of a trajectory plus the inferred drift direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Hovmoller {
    pub rows: Vec<HovmollerRow>,
    pub drift: Drift,
}

/// Long-format space-time table of `x_j(t)`. With `interp > 1` each cell is
/// subdivided by linear interpolation between `x_j` and `x_{j+1}` for
/// continuous-j rendering.
pub fn hovmoller(traj: &Trajectory, interp: usize) -> Hovmoller {
    let interp = interp.max(1);
    let n = traj.cfg.n;
    let mut rows = Vec::with_capacity(traj.len() * n * interp);
    for (idx, x) in traj.states.iter().enumerate() {
        let t = traj.times[idx];
        for j in 0..n {
            for s in 0..interp {
                let frac = s as f64 / interp as f64;
                let value = x[j] * (1.0 - frac) + x[(j + 1) % n] * frac;
                rows.push(HovmollerRow { t, j: j as f64 + frac, x: value });
            }
        }
    }
    Hovmoller { rows, drift: drift_direction(traj) }
}

/// Drift direction from the sign of the cross-correlation lag between
/// neighbouring coordinates: the derivative of the correlation at zero lag
/// tells on which side its peak lies. A pattern moving towards decreasing `j`
/// means `x_{j+1}` leads `x_j`, putting the peak at negative lag.
pub fn drift_direction(traj: &Trajectory) -> Drift {
    if traj.len() < 4 || traj.cfg.n < 2 {
        return Drift::None;
    }
    let y0 = traj.coordinate(0);
    let y1 = traj.coordinate(1);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m0, m1) = (mean(&y0), mean(&y1));
    let mut slope = 0.0;
    let mut scale = 0.0;
    for i in 1..y0.len() - 1 {
        slope += (y0[i] - m0) * ((y1[i + 1] - m1) - (y1[i - 1] - m1));
        scale += (y0[i] - m0).powi(2) + (y1[i] - m1).powi(2);
    }
    if slope.abs() <= 1e-9 * scale.max(1e-300) {
        return Drift::None;
    }
    if slope < 0.0 {
        Drift::DecreasingJ
    } else {
        Drift::IncreasingJ
    }
}

/// RMS-based amplitude of the oscillation of the first coordinate; for a pure
/// harmonic this recovers the cosine amplitude.
pub fn oscillation_amplitude(traj: &Trajectory) -> f64 {
    let y = traj.coordinate(0);
    if y.is_empty() {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64;
    (2.0 * var).sqrt()
}

/// Combined wave diagnostics of a post-transient trajectory.
pub fn diagnostics(traj: &Trajectory) -> WaveDiagnostics {
    let snapshot = traj.last_state();
    WaveDiagnostics {
        wave_number: wave_number(snapshot).ok(),
        period: measure_period(traj).ok(),
        amplitude: oscillation_amplitude(traj),
        drift: drift_direction(traj),
    }
}
