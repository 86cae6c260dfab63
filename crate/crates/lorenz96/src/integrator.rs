//! Fixed-step RK4 integration of trajectories and of the coupled tangent flow.
//!
//! A fixed step keeps parameter sweeps bit-stable and makes the tangent-frame
//! renormalisation schedule exact, which matters more here than adaptive
//! efficiency. The default step of 1/64 resolves the fastest linear frequency
//! `omega_0 <= cot(pi/n)` comfortably for n up to ~100.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, SystemConfig};

/// Default integration step.
pub const DEFAULT_DT: f64 = 1.0 / 64.0;

/// How to integrate and what to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    /// Step size (time units).
    pub dt: f64,
    /// Final time.
    pub t_end: f64,
    /// Initial interval to discard; the first sample is taken at `t = transient`.
    pub transient: f64,
    /// Keep every `sample_every`-th step after the transient.
    pub sample_every: usize,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, t_end: 1000.0, transient: 500.0, sample_every: 1 }
    }
}

impl IntegrationSpec {
    pub fn new(t_end: f64, transient: f64) -> Self {
        Self { t_end, transient, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidSpec(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.transient >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "transient = {} must be non-negative",
                self.transient
            )));
        }
        if !(self.t_end > self.transient) {
            return Err(Error::InvalidSpec(format!(
                "t_end = {} must exceed the transient {}",
                self.t_end, self.transient
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidSpec("sample_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// A sampled solution. States and their time derivatives are kept together so
/// that section crossings can be interpolated with cubic Hermite accuracy
/// without re-touching the vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub cfg: SystemConfig,
    /// Uniform spacing `dt * sample_every` between consecutive samples.
    pub sample_dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Time series of a single coordinate.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[j]).collect()
    }
}

/// Reusable RK4 work buffers for one system.
pub(crate) struct Stepper {
    cfg: SystemConfig,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: SystemConfig) -> Self {
        let n = cfg.n;
        Self {
            cfg,
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            stage: vec![0.0; n],
        }
    }

    pub fn cfg(&self) -> &SystemConfig {
        &self.cfg
    }

    /// One RK4 update of `x` in place.
    pub fn step(&mut self, x: &mut [f64], dt: f64) {
        let n = self.cfg.n;
        model::vector_field_into(&self.cfg, x, &mut self.k1);
        for j in 0..n {
            self.stage[j] = x[j] + 0.5 * dt * self.k1[j];
        }
        model::vector_field_into(&self.cfg, &self.stage, &mut self.k2);
        for j in 0..n {
            self.stage[j] = x[j] + 0.5 * dt * self.k2[j];
        }
        model::vector_field_into(&self.cfg, &self.stage, &mut self.k3);
        for j in 0..n {
            self.stage[j] = x[j] + dt * self.k3[j];
        }
        model::vector_field_into(&self.cfg, &self.stage, &mut self.k4);
        for j in 0..n {
            x[j] += dt / 6.0 * (self.k1[j] + 2.0 * self.k2[j] + 2.0 * self.k3[j] + self.k4[j]);
        }
    }
}

/// One explicit RK4 update of the vector field.
pub fn rk4_step(cfg: &SystemConfig, x: &[f64], dt: f64) -> Result<Vec<f64>> {
    cfg.check_state(x)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidSpec(format!("dt = {dt} must be positive")));
    }
    let mut out = x.to_vec();
    Stepper::new(*cfg).step(&mut out, dt);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { t: dt });
    }
    Ok(out)
}

/// Bound used by the divergence guard. The trapping estimate makes anything
/// beyond `10 max(R, ||x0||)` unreachable; when no trapping region is
/// guaranteed (G <= -1/4) only non-finite values abort.
fn divergence_bound(cfg: &SystemConfig, x0: &[f64]) -> f64 {
    match model::trapping_radius(cfg) {
        Ok(radius) => {
            let norm0 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
            10.0 * radius.max(norm0).max(1.0)
        }
        Err(_) => f64::INFINITY,
    }
}

#[inline]
fn state_ok(x: &[f64], bound: f64) -> bool {
    x.iter().all(|v| v.is_finite() && v.abs() <= bound)
}

/// Integrates the flow and collects samples after the transient.
pub fn integrate(cfg: &SystemConfig, x0: &[f64], spec: &IntegrationSpec) -> Result<Trajectory> {
    cfg.check_state(x0)?;
    spec.validate()?;

    let transient_steps = (spec.transient / spec.dt).round() as usize;
    let total_steps = (spec.t_end / spec.dt).round() as usize;
    let bound = divergence_bound(cfg, x0);

    let mut stepper = Stepper::new(*cfg);
    let mut x = x0.to_vec();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut derivs = Vec::new();

    let mut sample = |step: usize, x: &[f64]| {
        times.push(step as f64 * spec.dt);
        states.push(x.to_vec());
        let mut d = vec![0.0; cfg.n];
        model::vector_field_into(cfg, x, &mut d);
        derivs.push(d);
    };

    for step in 0..=total_steps {
        if step >= transient_steps && (step - transient_steps) % spec.sample_every == 0 {
            sample(step, &x);
        }
        if step < total_steps {
            stepper.step(&mut x, spec.dt);
            if !state_ok(&x, bound) {
                return Err(Error::Divergence { t: (step + 1) as f64 * spec.dt });
            }
        }
    }

    Ok(Trajectory {
        cfg: *cfg,
        sample_dt: spec.dt * spec.sample_every as f64,
        times,
        states,
        derivs,
    })
}

/// Stage derivatives of the coupled system: the flow and `dQ/dt = J(x) Q`,
/// computed column-wise from the analytic directional derivative. Frames are
/// column-major, so each tangent vector is a contiguous slice.
fn frame_derivatives(
    cfg: &SystemConfig,
    x: &[f64],
    q: &DMatrix<f64>,
    kx: &mut [f64],
    kq: &mut DMatrix<f64>,
) {
    model::vector_field_into(cfg, x, kx);
    let n = cfg.n;
    let src = q.as_slice();
    let dst = kq.as_mut_slice();
    for col in 0..q.ncols() {
        let v = &src[col * n..(col + 1) * n];
        let out = &mut dst[col * n..(col + 1) * n];
        model::tangent_field_into(cfg, x, v, out);
    }
}

/// `y += alpha * x`, element-wise over whole frames.
#[inline]
fn frame_axpy(y: &mut DMatrix<f64>, alpha: f64, x: &DMatrix<f64>) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += alpha * xi;
    }
}

/// RK4 work buffers for the flow coupled with a tangent frame, sharing the
/// flow's stages.
pub(crate) struct TangentStepper {
    cfg: SystemConfig,
    kx: [Vec<f64>; 4],
    kq: [DMatrix<f64>; 4],
    stage_x: Vec<f64>,
    stage_q: DMatrix<f64>,
}

impl TangentStepper {
    pub fn new(cfg: SystemConfig, k: usize) -> Self {
        let n = cfg.n;
        Self {
            cfg,
            kx: std::array::from_fn(|_| vec![0.0; n]),
            kq: std::array::from_fn(|_| DMatrix::zeros(n, k)),
            stage_x: vec![0.0; n],
            stage_q: DMatrix::zeros(n, k),
        }
    }

    /// One coupled RK4 update of `(x, q)` in place.
    pub fn step(&mut self, x: &mut [f64], q: &mut DMatrix<f64>, dt: f64) {
        let n = self.cfg.n;
        let weights = [0.5 * dt, 0.5 * dt, dt];

        frame_derivatives(&self.cfg, x, q, &mut self.kx[0], &mut self.kq[0]);
        for s in 0..3 {
            let w = weights[s];
            for j in 0..n {
                self.stage_x[j] = x[j] + w * self.kx[s][j];
            }
            self.stage_q.copy_from(q);
            frame_axpy(&mut self.stage_q, w, &self.kq[s]);
            frame_derivatives(
                &self.cfg,
                &self.stage_x,
                &self.stage_q,
                &mut self.kx[s + 1],
                &mut self.kq[s + 1],
            );
        }

        for j in 0..n {
            x[j] += dt / 6.0
                * (self.kx[0][j] + 2.0 * self.kx[1][j] + 2.0 * self.kx[2][j] + self.kx[3][j]);
        }
        frame_axpy(q, dt / 6.0, &self.kq[0]);
        frame_axpy(q, dt / 3.0, &self.kq[1]);
        frame_axpy(q, dt / 3.0, &self.kq[2]);
        frame_axpy(q, dt / 6.0, &self.kq[3]);
    }
}

/// Co-integrates `k` tangent vectors with the flow. The hook fires every
/// `checkpoint_every` steps (transient included) and may rescale the frame in
/// place; Lyapunov estimation hangs its QR renormalisation on it.
///
/// `q0` is expected to have orthonormal columns when growth rates are to be
/// read off; the frame itself is propagated as given.
pub fn integrate_with_tangent<F>(
    cfg: &SystemConfig,
    x0: &[f64],
    q0: &DMatrix<f64>,
    spec: &IntegrationSpec,
    checkpoint_every: usize,
    mut on_checkpoint: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut DMatrix<f64>),
{
    cfg.check_state(x0)?;
    spec.validate()?;
    if q0.nrows() != cfg.n || q0.ncols() == 0 || q0.ncols() > cfg.n {
        return Err(Error::InvalidSpec(format!(
            "tangent frame must be n x k with 1 <= k <= n, got {} x {}",
            q0.nrows(),
            q0.ncols()
        )));
    }
    if checkpoint_every == 0 {
        return Err(Error::InvalidSpec("checkpoint_every must be at least 1".into()));
    }

    let transient_steps = (spec.transient / spec.dt).round() as usize;
    let total_steps = (spec.t_end / spec.dt).round() as usize;
    let bound = divergence_bound(cfg, x0);

    let mut stepper = TangentStepper::new(*cfg, q0.ncols());
    let mut x = x0.to_vec();
    let mut q = q0.clone();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut derivs = Vec::new();

    for step in 0..=total_steps {
        if step > 0 && step % checkpoint_every == 0 {
            on_checkpoint(step as f64 * spec.dt, &x, &mut q);
        }
        if step >= transient_steps && (step - transient_steps) % spec.sample_every == 0 {
            times.push(step as f64 * spec.dt);
            states.push(x.clone());
            let mut d = vec![0.0; cfg.n];
            model::vector_field_into(cfg, &x, &mut d);
            derivs.push(d);
        }
        if step < total_steps {
            stepper.step(&mut x, &mut q, spec.dt);
            if !state_ok(&x, bound) {
                return Err(Error::Divergence { t: (step + 1) as f64 * spec.dt });
            }
        }
    }

    Ok(Trajectory {
        cfg: *cfg,
        sample_dt: spec.dt * spec.sample_every as f64,
        times,
        states,
        derivs,
    })
}
