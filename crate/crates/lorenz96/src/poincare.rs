//! Poincare sections, return maps, Newton-refined periodic orbits, Floquet
//! multipliers, and cycle-bifurcation detection along the forcing.
//!
//! Periodic orbits are located as fixed points of a section return map. The
//! map is evaluated by shooting: integrate from a section point, find the
//! directed crossing whose time is nearest a reference period, and Newton-fix
//! the section coordinates with a finite-difference Jacobian. Selecting the
//! return by time rather than by crossing count keeps the continuation robust
//! when a deforming waveform gains extra section crossings per period.
//! Multipliers come from the monodromy matrix integrated over one period.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Stepper, TangentStepper, Trajectory, DEFAULT_DT};
use crate::model::{self, SystemConfig};
use crate::waves::wave_number;

/// Which way the trajectory must pierce the section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingDirection {
    Up,
    Down,
    Both,
}

/// Hyperplane section `{x_k = level}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    /// 0-based coordinate index.
    pub index: usize,
    pub level: f64,
    pub direction: CrossingDirection,
}

impl Section {
    /// Default cycle-work section: `x_1 = 0.9 F` cuts the travelling wave
    /// transversally near onset, where the orbit oscillates around `x_F`.
    pub fn default_for(cfg: &SystemConfig) -> Self {
        Self { index: 0, level: 0.9 * cfg.forcing, direction: CrossingDirection::Up }
    }

    fn matches(&self, before: f64, after: f64) -> bool {
        match self.direction {
            CrossingDirection::Up => before < 0.0 && after >= 0.0,
            CrossingDirection::Down => before > 0.0 && after <= 0.0,
            CrossingDirection::Both => {
                (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0)
            }
        }
    }
}

/// A refined section crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionEvent {
    pub t: f64,
    pub state: Vec<f64>,
}

/// A closed orbit anchored on a section.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// Point on the section.
    pub anchor: Vec<f64>,
    pub period: f64,
    /// All n Floquet multipliers, |mu| descending; one is the trivial unit
    /// multiplier along the flow.
    pub multipliers: Vec<Complex64>,
    pub wave_number: Option<usize>,
    /// Directed section crossings per period.
    pub returns: usize,
}

impl PeriodicOrbit {
    fn trivial_index(&self) -> usize {
        self.multipliers
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (*a - Complex64::new(1.0, 0.0)).norm();
                let db = (*b - Complex64::new(1.0, 0.0)).norm();
                da.partial_cmp(&db).expect("finite multipliers")
            })
            .map(|(i, _)| i)
            .expect("orbit has multipliers")
    }

    /// Multipliers without the trivial one.
    pub fn nontrivial_multipliers(&self) -> Vec<Complex64> {
        let skip = self.trivial_index();
        self.multipliers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, m)| *m)
            .collect()
    }

    /// Largest nontrivial multiplier modulus.
    pub fn dominant_modulus(&self) -> f64 {
        self.nontrivial_multipliers().iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.dominant_modulus() < 1.0
    }
}

/// How a cycle loses (or gains) stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleBifurcationKind {
    Fold,
    PeriodDoubling,
    NeimarkSacker,
}

/// A unit-circle crossing (or branch termination) found along a continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleBifurcation {
    pub kind: CycleBifurcationKind,
    pub f: f64,
    /// The multiplier responsible, evaluated on the unstable side.
    pub multiplier: Complex64,
}

/// One converged point of a continuation branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub f: f64,
    pub period: f64,
    pub stable: bool,
    pub multipliers: Vec<Complex64>,
    pub returns: usize,
}

/// A continued cycle branch with its bifurcation events, ordered in F.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub events: Vec<CycleBifurcation>,
}

/// Shooting and Newton settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    pub dt: f64,
    /// Residual bound on the return-map fixed point.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Relative finite-difference step for the return-map Jacobian.
    pub fd_step: f64,
    /// Crossings ignored right after leaving the section.
    pub refractory: f64,
    /// Give up if no crossing appears within this time.
    pub max_return_time: f64,
    /// Returns collected when detecting the closure multiple.
    pub max_returns: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            newton_tol: 1e-9,
            max_newton: 14,
            fd_step: 1e-6,
            refractory: 0.25,
            max_return_time: 250.0,
            max_returns: 8,
        }
    }
}

/// Cubic Hermite interpolation between two samples with known derivatives.
fn hermite_eval(x0: &[f64], f0: &[f64], x1: &[f64], f1: &[f64], h: f64, s: f64, out: &mut [f64]) {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    for j in 0..out.len() {
        out[j] = h00 * x0[j] + h10 * h * f0[j] + h01 * x1[j] + h11 * h * f1[j];
    }
}

/// Solves `x_k(s) = level` on a Hermite segment bracketing a sign change and
/// returns the interpolated event.
fn refine_crossing(
    x0: &[f64],
    f0: &[f64],
    x1: &[f64],
    f1: &[f64],
    h: f64,
    section: &Section,
) -> (f64, Vec<f64>) {
    let k = section.index;
    let scalar = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * x0[k]
            + (s3 - 2.0 * s2 + s) * h * f0[k]
            + (-2.0 * s3 + 3.0 * s2) * x1[k]
            + (s3 - s2) * h * f1[k]
            - section.level
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let rising = scalar(hi) >= scalar(lo);
    let mut mid = 0.5;
    for _ in 0..80 {
        mid = 0.5 * (lo + hi);
        let value = scalar(mid);
        if value.abs() <= 1e-10 || hi - lo < 1e-15 {
            break;
        }
        if (value > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut state = vec![0.0; x0.len()];
    hermite_eval(x0, f0, x1, f1, h, mid, &mut state);
    state[k] = section.level;
    (mid, state)
}

/// Every directed crossing of a sampled trajectory, Hermite-interpolated from
/// the stored states and derivatives and refined to `|x_k - level| <= 1e-10`.
pub fn detect_crossings(traj: &Trajectory, section: &Section) -> Vec<SectionEvent> {
    let mut events = Vec::new();
    for i in 1..traj.len() {
        let before = traj.states[i - 1][section.index] - section.level;
        let after = traj.states[i][section.index] - section.level;
        if section.matches(before, after) {
            let h = traj.times[i] - traj.times[i - 1];
            let (s, state) = refine_crossing(
                &traj.states[i - 1],
                &traj.derivs[i - 1],
                &traj.states[i],
                &traj.derivs[i],
                h,
                section,
            );
            events.push(SectionEvent { t: traj.times[i - 1] + s * h, state });
        }
    }
    events
}

/// Steps the flow and reports refined section crossings as they occur.
struct SectionFlow {
    stepper: Stepper,
    section: Section,
    dt: f64,
    x_prev: Vec<f64>,
    f_prev: Vec<f64>,
    f_cur: Vec<f64>,
}

impl SectionFlow {
    fn new(cfg: SystemConfig, section: Section, dt: f64) -> Self {
        let n = cfg.n;
        Self {
            stepper: Stepper::new(cfg),
            section,
            dt,
            x_prev: vec![0.0; n],
            f_prev: vec![0.0; n],
            f_cur: vec![0.0; n],
        }
    }

    /// Advances `x` (and `t`) until the next accepted crossing; crossings
    /// before `not_before` are skipped. Returns the refined event.
    fn next_crossing(&mut self, x: &mut [f64], t: &mut f64, not_before: f64, deadline: f64) -> Result<SectionEvent> {
        let cfg = *self.stepper.cfg();
        model::vector_field_into(&cfg, x, &mut self.f_prev);
        let mut s_prev = x[self.section.index] - self.section.level;
        loop {
            self.x_prev.copy_from_slice(x);
            let t_prev = *t;
            self.stepper.step(x, self.dt);
            *t += self.dt;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { t: *t });
            }
            model::vector_field_into(&cfg, x, &mut self.f_cur);
            let s_cur = x[self.section.index] - self.section.level;
            if self.section.matches(s_prev, s_cur) {
                let (s, state) = refine_crossing(
                    &self.x_prev,
                    &self.f_prev,
                    x,
                    &self.f_cur,
                    self.dt,
                    &self.section,
                );
                let t_cross = t_prev + s * self.dt;
                if t_cross >= not_before {
                    return Ok(SectionEvent { t: t_cross, state });
                }
            }
            s_prev = s_cur;
            std::mem::swap(&mut self.f_prev, &mut self.f_cur);
            if *t > deadline {
                return Err(Error::NoCycle(format!(
                    "no section crossing within {deadline} time units"
                )));
            }
        }
    }
}

fn embed(u: &[f64], section: &Section) -> Vec<f64> {
    let n = u.len() + 1;
    let mut x = Vec::with_capacity(n);
    x.extend_from_slice(&u[..section.index]);
    x.push(section.level);
    x.extend_from_slice(&u[section.index..]);
    x
}

fn project(x: &[f64], section: &Section) -> Vec<f64> {
    let mut u = Vec::with_capacity(x.len() - 1);
    u.extend_from_slice(&x[..section.index]);
    u.extend_from_slice(&x[section.index + 1..]);
    u
}

/// The return nearest in time to `t_ref`: integrates from a section point,
/// collecting crossings until `1.35 t_ref`, and picks the closest one.
/// Also reports how many crossings occurred up to (and including) it.
fn timed_return(
    cfg: &SystemConfig,
    u: &[f64],
    section: &Section,
    t_ref: f64,
    opts: &OrbitOptions,
) -> Result<(f64, Vec<f64>, usize)> {
    let mut flow = SectionFlow::new(*cfg, *section, opts.dt);
    let mut x = embed(u, section);
    let mut t = 0.0;
    let deadline = (1.35 * t_ref).min(opts.max_return_time).max(2.0 * opts.refractory);
    let mut crossings: Vec<SectionEvent> = Vec::new();
    loop {
        match flow.next_crossing(&mut x, &mut t, opts.refractory, deadline) {
            Ok(event) => crossings.push(event),
            Err(Error::NoCycle(_)) => break,
            Err(other) => return Err(other),
        }
    }
    let best = crossings
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (a.t - t_ref).abs();
            let db = (b.t - t_ref).abs();
            da.partial_cmp(&db).expect("finite times")
        })
        .map(|(i, e)| (i, e.clone()));
    match best {
        Some((i, event)) => Ok((event.t, event.state, i + 1)),
        None => Err(Error::NoCycle("trajectory never returns to the section".into())),
    }
}

/// Newton iteration on `P(u) - u` with a finite-difference Jacobian, keeping
/// the return selection anchored at `t_ref`.
fn newton_orbit(
    cfg: &SystemConfig,
    u0: &[f64],
    section: &Section,
    t_ref: f64,
    opts: &OrbitOptions,
) -> Result<(Vec<f64>, f64, usize)> {
    let dim = u0.len();
    let mut u = u0.to_vec();
    let mut t_current = t_ref;
    let mut best_residual = f64::INFINITY;
    let mut stalled = 0usize;

    for _ in 0..opts.max_newton {
        let (t_m, state, count) = timed_return(cfg, &u, section, t_current, opts)?;
        let p_u = project(&state, section);
        let residual: Vec<f64> = p_u.iter().zip(&u).map(|(a, b)| a - b).collect();
        let norm = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm <= opts.newton_tol {
            return Ok((u, t_m, count));
        }
        if norm >= best_residual {
            stalled += 1;
            if stalled >= 3 {
                return Err(Error::NoCycle(format!(
                    "Newton stalled at residual {norm:.3e}"
                )));
            }
        } else {
            best_residual = norm;
            stalled = 0;
        }

        // Finite-difference Jacobian of the return map.
        let mut jac = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let h = opts.fd_step * u[col].abs().max(1.0);
            let mut u_pert = u.clone();
            u_pert[col] += h;
            let (_, state_pert, _) = timed_return(cfg, &u_pert, section, t_current, opts)?;
            let p_pert = project(&state_pert, section);
            for row in 0..dim {
                jac[(row, col)] = (p_pert[row] - p_u[row]) / h;
            }
        }
        for d in 0..dim {
            jac[(d, d)] -= 1.0;
        }
        let rhs = DVector::from_iterator(dim, residual.iter().map(|v| -v));
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NoCycle("singular return-map Jacobian".into()))?;
        for d in 0..dim {
            u[d] += delta[d];
        }
        t_current = t_m;
    }
    Err(Error::NoCycle(format!(
        "Newton did not reach {:.1e} within {} iterations",
        opts.newton_tol, opts.max_newton
    )))
}

/// Monodromy matrix: the tangent flow of the full identity frame over one
/// period, including the fractional final step.
fn monodromy(cfg: &SystemConfig, x0: &[f64], period: f64, dt: f64) -> DMatrix<f64> {
    let n = cfg.n;
    let mut stepper = TangentStepper::new(*cfg, n);
    let mut x = x0.to_vec();
    let mut q = DMatrix::identity(n, n);
    let steps = (period / dt).floor() as usize;
    for _ in 0..steps {
        stepper.step(&mut x, &mut q, dt);
    }
    let remainder = period - steps as f64 * dt;
    if remainder > 1e-12 {
        stepper.step(&mut x, &mut q, remainder);
    }
    q
}

fn sorted_multipliers(m: &DMatrix<f64>) -> Vec<Complex64> {
    let mut eigs: Vec<Complex64> = m.clone().complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).expect("finite eigenvalues"));
    eigs
}

fn build_orbit(
    cfg: &SystemConfig,
    u: &[f64],
    section: &Section,
    period: f64,
    returns: usize,
    opts: &OrbitOptions,
) -> PeriodicOrbit {
    let anchor = embed(u, section);
    let multipliers = sorted_multipliers(&monodromy(cfg, &anchor, period, opts.dt));
    let wave = wave_number(&anchor).ok();
    PeriodicOrbit { anchor, period, multipliers, wave_number: wave, returns }
}

/// Finds a periodic orbit near `guess` as a fixed point of the section
/// return map.
///
/// The closure multiple m (smallest number of returns after which the orbit
/// repeats) is detected from the free-running returns of the guess, the fixed
/// point is Newton-refined to `newton_tol`, and a converged orbit whose
/// sub-returns already close is reduced to its true period.
pub fn find_periodic_orbit(
    cfg: &SystemConfig,
    guess: &[f64],
    section: &Section,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    cfg.check_state(guess)?;

    // Land on the section and collect free-running returns.
    let mut flow = SectionFlow::new(*cfg, *section, opts.dt);
    let mut x = guess.to_vec();
    let mut t = 0.0;
    let first = flow.next_crossing(&mut x, &mut t, 0.0, opts.max_return_time)?;
    let u0 = project(&first.state, section);
    let mut returns = Vec::with_capacity(opts.max_returns);
    for _ in 0..opts.max_returns {
        match flow.next_crossing(&mut x, &mut t, first.t + opts.refractory, first.t + opts.max_return_time) {
            Ok(event) => returns.push(event),
            Err(Error::NoCycle(_)) => break,
            Err(other) => return Err(other),
        }
    }
    if returns.is_empty() {
        return Err(Error::NoCycle("trajectory never returns to the section".into()));
    }

    let distances: Vec<f64> = returns
        .iter()
        .map(|e| {
            project(&e.state, section)
                .iter()
                .zip(&u0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    let scale = u0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let spread = distances.iter().fold(0.0f64, |m, v| m.max(*v));
    let m = if spread <= 1e-3 * scale {
        1
    } else {
        // Prefer the smallest clearly-closing multiple; a guess near an
        // unstable cycle drifts away monotonically instead, in which case the
        // closest return seeds Newton and Newton gets to decide.
        distances
            .iter()
            .position(|d| *d <= 0.1 * spread)
            .unwrap_or_else(|| {
                distances
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("finite distances"))
                    .map(|(i, _)| i)
                    .expect("at least one return")
            })
            + 1
    };
    let t_ref = returns[m - 1].t - first.t;

    let (mut u, mut period, mut count) = newton_orbit(cfg, &u0, section, t_ref, opts)?;

    // A fixed point of the m-th return may already close after a sub-multiple
    // of m (a transient split can masquerade as a longer period).
    for p in 1..count {
        if count % p != 0 {
            continue;
        }
        let t_sub = period * p as f64 / count as f64;
        if let Ok((_, state, _)) = timed_return(cfg, &u, section, t_sub, opts) {
            let sub = project(&state, section);
            let gap = sub.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            // Genuine splits are macroscopic; a ghost of the shorter period
            // shows up at interpolation-noise level.
            if gap <= 1e-3 * scale {
                let (u_red, t_red, c_red) = newton_orbit(cfg, &u, section, t_sub, opts)?;
                u = u_red;
                period = t_red;
                count = c_red;
                break;
            }
        }
    }

    Ok(build_orbit(cfg, &u, section, period, count, opts))
}

/// Continuation settings for [`track_cycle_bifurcations`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    pub orbit: OrbitOptions,
    /// Continuation step in F; halved adaptively on Newton failure.
    pub f_step: f64,
    /// Smallest step before the branch is declared lost.
    pub min_step: f64,
    /// Bisection width for locating events in F.
    pub bracket_width: f64,
    /// How far past a period doubling the doubled branch is re-acquired.
    pub switch_offset: f64,
    /// Simulation time used to settle onto an attractor when (re-)acquiring.
    pub acquire_transient: f64,
    /// Fixed section; when absent each F uses [`Section::default_for`].
    pub section: Option<Section>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            orbit: OrbitOptions::default(),
            f_step: 1e-2,
            min_step: 1e-5,
            bracket_width: 1e-3,
            switch_offset: 0.05,
            acquire_transient: 300.0,
            section: None,
        }
    }
}

fn section_at(opts: &TrackOptions, cfg: &SystemConfig) -> Section {
    opts.section.unwrap_or_else(|| Section::default_for(cfg))
}

fn acquire_orbit(
    cfg: &SystemConfig,
    seed: Option<&[f64]>,
    opts: &TrackOptions,
) -> Result<PeriodicOrbit> {
    let start = match seed {
        Some(state) => state.to_vec(),
        None => crate::attractor::cold_seed(cfg),
    };
    let spec = crate::integrator::IntegrationSpec {
        dt: opts.orbit.dt,
        t_end: opts.acquire_transient + opts.orbit.dt,
        transient: opts.acquire_transient,
        sample_every: 1,
    };
    let traj = crate::integrator::integrate(cfg, &start, &spec)?;
    find_periodic_orbit(cfg, traj.last_state(), &section_at(opts, cfg), &opts.orbit)
}

/// Warm-start continuation of `prev` to a new forcing value.
fn continue_orbit(
    cfg: &SystemConfig,
    prev: &PeriodicOrbit,
    opts: &TrackOptions,
) -> Result<PeriodicOrbit> {
    let section = section_at(opts, cfg);
    let mut anchor = prev.anchor.clone();
    anchor[section.index] = section.level;
    let u0 = project(&anchor, &section);
    let (u, period, count) = newton_orbit(cfg, &u0, &section, prev.period, &opts.orbit)?;
    if (period - prev.period).abs() > 0.3 * prev.period {
        return Err(Error::NoCycle(format!(
            "period jumped from {} to {period}; refusing the branch hop",
            prev.period
        )));
    }
    Ok(build_orbit(cfg, &u, &section, period, count, &opts.orbit))
}

fn classify_crossing(orbit: &PeriodicOrbit) -> (CycleBifurcationKind, Complex64) {
    let mu = orbit
        .nontrivial_multipliers()
        .into_iter()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).expect("finite multipliers"))
        .expect("nontrivial multipliers");
    let arg = mu.arg().abs();
    let kind = if arg < 0.1 {
        CycleBifurcationKind::Fold
    } else if (arg - std::f64::consts::PI).abs() < 0.1 {
        CycleBifurcationKind::PeriodDoubling
    } else {
        CycleBifurcationKind::NeimarkSacker
    };
    (kind, mu)
}

fn branch_point(f: f64, orbit: &PeriodicOrbit) -> BranchPoint {
    BranchPoint {
        f,
        period: orbit.period,
        stable: orbit.is_stable(),
        multipliers: orbit.multipliers.clone(),
        returns: orbit.returns,
    }
}

/// Bisects a stability change between two converged orbits down to
/// `bracket_width` and classifies the responsible multiplier.
fn bisect_crossing(
    template: &SystemConfig,
    lo: (f64, PeriodicOrbit),
    hi: (f64, PeriodicOrbit),
    opts: &TrackOptions,
) -> CycleBifurcation {
    let (mut f_lo, mut orbit_lo) = lo;
    let (mut f_hi, mut orbit_hi) = hi;
    let lo_stable = orbit_lo.is_stable();
    while f_hi - f_lo > opts.bracket_width {
        let f_mid = 0.5 * (f_lo + f_hi);
        let cfg = SystemConfig::with_diffusion(template.n, f_mid, template.diffusion);
        match continue_orbit(&cfg, &orbit_lo, opts) {
            Ok(orbit_mid) => {
                if orbit_mid.is_stable() == lo_stable {
                    f_lo = f_mid;
                    orbit_lo = orbit_mid;
                } else {
                    f_hi = f_mid;
                    orbit_hi = orbit_mid;
                }
            }
            Err(_) => break,
        }
    }
    let unstable = if orbit_hi.is_stable() { &orbit_lo } else { &orbit_hi };
    let (kind, multiplier) = classify_crossing(unstable);
    CycleBifurcation { kind, f: 0.5 * (f_lo + f_hi), multiplier }
}

/// Narrows a Newton-failure interval and emits the fold candidate that
/// terminates the branch.
fn bisect_fold(
    template: &SystemConfig,
    lo: (f64, PeriodicOrbit),
    f_bad: f64,
    opts: &TrackOptions,
) -> CycleBifurcation {
    let (mut f_lo, mut orbit_lo) = lo;
    let mut f_hi = f_bad;
    while f_hi - f_lo > opts.bracket_width {
        let f_mid = 0.5 * (f_lo + f_hi);
        let cfg = SystemConfig::with_diffusion(template.n, f_mid, template.diffusion);
        match continue_orbit(&cfg, &orbit_lo, opts) {
            Ok(orbit_mid) => {
                f_lo = f_mid;
                orbit_lo = orbit_mid;
            }
            Err(_) => f_hi = f_mid,
        }
    }
    // Evidence: the real multiplier that approached +1 from inside.
    let multiplier = orbit_lo
        .nontrivial_multipliers()
        .into_iter()
        .min_by(|a, b| {
            let da = (*a - Complex64::new(1.0, 0.0)).norm();
            let db = (*b - Complex64::new(1.0, 0.0)).norm();
            da.partial_cmp(&db).expect("finite multipliers")
        })
        .expect("nontrivial multipliers");
    CycleBifurcation {
        kind: CycleBifurcationKind::Fold,
        f: 0.5 * (f_lo + f_hi),
        multiplier,
    }
}

/// Continues the stable cycle found at the start of `f_range` and records
/// every stability change along the way.
///
/// Unit-circle crossings are bisected in F to `bracket_width` and labelled by
/// the crossing multiplier's argument. After a period doubling the doubled
/// attractor is re-acquired slightly past the event and the continuation
/// follows it, so a cascade is traversed in order. Loss of the cycle (Newton
/// failure at the minimal step) emits a terminal fold candidate.
pub fn track_cycle_bifurcations(
    template: &SystemConfig,
    f_range: (f64, f64),
    opts: &TrackOptions,
) -> Result<Branch> {
    let (f_start, f_end) = f_range;
    if f_end <= f_start {
        return Err(Error::InvalidSpec("track range must be increasing in F".into()));
    }

    let mut f = f_start;
    let cfg0 = SystemConfig::with_diffusion(template.n, f, template.diffusion);
    let mut orbit = acquire_orbit(&cfg0, None, opts)?;

    let mut points = vec![branch_point(f, &orbit)];
    let mut events = Vec::new();
    let mut step = opts.f_step;
    let mut successes = 0usize;

    while f < f_end - 1e-12 {
        let f_next = (f + step).min(f_end);
        let cfg = SystemConfig::with_diffusion(template.n, f_next, template.diffusion);
        match continue_orbit(&cfg, &orbit, opts) {
            Ok(next) => {
                if next.is_stable() != orbit.is_stable() {
                    let event = bisect_crossing(
                        template,
                        (f, orbit.clone()),
                        (f_next, next.clone()),
                        opts,
                    );
                    let is_pd = event.kind == CycleBifurcationKind::PeriodDoubling;
                    let losing_stability = orbit.is_stable() && !next.is_stable();
                    events.push(event);
                    if is_pd && losing_stability {
                        // Follow the doubled attractor from just past the event.
                        let f_switch = (event.f + opts.switch_offset).min(f_end);
                        if f_switch >= f_end - 1e-12 {
                            points.push(branch_point(f_next, &next));
                            break;
                        }
                        let cfg_switch =
                            SystemConfig::with_diffusion(template.n, f_switch, template.diffusion);
                        let mut seed = next.anchor.clone();
                        // Nudge off the now-unstable orbit.
                        for (j, v) in seed.iter_mut().enumerate() {
                            *v += 1e-3 * ((j % 3) as f64 - 1.0);
                        }
                        match acquire_orbit(&cfg_switch, Some(&seed), opts) {
                            Ok(doubled) => {
                                f = f_switch;
                                orbit = doubled;
                                points.push(branch_point(f, &orbit));
                                continue;
                            }
                            Err(_) => {
                                // Cascade beyond resolution; stop the branch.
                                points.push(branch_point(f_next, &next));
                                break;
                            }
                        }
                    }
                }
                f = f_next;
                orbit = next;
                points.push(branch_point(f, &orbit));
                successes += 1;
                if successes >= 3 && step < opts.f_step {
                    step = (step * 2.0).min(opts.f_step);
                    successes = 0;
                }
            }
            Err(_) if step > opts.min_step => {
                step = (step * 0.5).max(opts.min_step);
                successes = 0;
            }
            Err(_) => {
                events.push(bisect_fold(template, (f, orbit.clone()), f_next, opts));
                break;
            }
        }
    }

    Ok(Branch { points, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegrationSpec};
    use crate::model::equilibrium;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Harmonic test trajectory with exact derivatives.
    fn circle_trajectory(dt: f64, len: usize) -> Trajectory {
        let cfg = SystemConfig::new(2, 0.0);
        let times: Vec<f64> = (0..len).map(|i| i as f64 * dt).collect();
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![t.cos(), t.sin()]).collect();
        let derivs: Vec<Vec<f64>> = times.iter().map(|&t| vec![-t.sin(), t.cos()]).collect();
        Trajectory { cfg, sample_dt: dt, times, states, derivs }
    }

    #[test]
    fn crossings_of_a_circle_hit_analytic_times() {
        let traj = circle_trajectory(0.05, 400);
        let section = Section { index: 0, level: 0.0, direction: CrossingDirection::Up };
        let events = detect_crossings(&traj, &section);
        // cos crosses zero upward at 3 pi/2 + 2 pi k.
        assert_eq!(events.len(), 3);
        for (k, event) in events.iter().enumerate() {
            let expected = 1.5 * PI + 2.0 * PI * k as f64;
            assert_abs_diff_eq!(event.t, expected, epsilon = 1e-8);
            assert!(event.state[0].abs() <= 1e-10);
            assert_abs_diff_eq!(event.state[1], -1.0, epsilon = 1e-7);
        }

        let down = Section { index: 0, level: 0.0, direction: CrossingDirection::Down };
        let down_events = detect_crossings(&traj, &down);
        assert_abs_diff_eq!(down_events[0].t, 0.5 * PI, epsilon = 1e-8);

        let both = Section { index: 0, level: 0.0, direction: CrossingDirection::Both };
        assert_eq!(detect_crossings(&traj, &both).len(), events.len() + down_events.len());
    }

    #[test]
    fn invariant_circle_fills_out_on_the_torus() {
        // (n, F) = (6, 5.6) sits past the Neimark-Sacker bifurcation.
        let cfg = SystemConfig::new(6, 5.6);
        let mut x0 = equilibrium(&cfg);
        x0[0] += 1e-3;
        let spec = IntegrationSpec { dt: DEFAULT_DT, t_end: 1100.0, transient: 500.0, sample_every: 1 };
        let traj = integrate(&cfg, &x0, &spec).unwrap();
        let section = Section { index: 0, level: 0.0, direction: CrossingDirection::Up };
        let events = detect_crossings(&traj, &section);
        assert!(events.len() >= 100, "only {} crossings", events.len());

        // The events trace a closed curve in the section: macroscopic
        // diameter, but every point has a close neighbour.
        let pts: Vec<(f64, f64)> = events.iter().map(|e| (e.state[1], e.state[2])).collect();
        let mut diameter: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                diameter = diameter.max(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt());
            }
        }
        assert!(diameter > 0.5, "section cloud collapsed: diameter {diameter}");
        let mut worst_gap: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            let mut nearest = f64::INFINITY;
            for (j, b) in pts.iter().enumerate() {
                if i != j {
                    nearest =
                        nearest.min(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt());
                }
            }
            worst_gap = worst_gap.max(nearest);
        }
        assert!(
            worst_gap < 0.2 * diameter,
            "isolated section points (gap {worst_gap}, diameter {diameter})"
        );
    }

    #[test]
    fn chaotic_section_traces_a_fattened_curve() {
        let cfg = SystemConfig::new(5, 6.72);
        let mut x0 = equilibrium(&cfg);
        x0[0] += 1e-3;
        let spec = IntegrationSpec { dt: DEFAULT_DT, t_end: 900.0, transient: 500.0, sample_every: 1 };
        let traj = integrate(&cfg, &x0, &spec).unwrap();
        let section = Section { index: 0, level: 5.0, direction: CrossingDirection::Up };
        let events = detect_crossings(&traj, &section);
        assert!(events.len() >= 50, "only {} crossings", events.len());
        let spread = |k: usize| {
            let vals: Vec<f64> = events.iter().map(|e| e.state[k]).collect();
            vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
                - vals.iter().fold(f64::INFINITY, |m, v| m.min(*v))
        };
        assert!(spread(1) > 0.5 && spread(2) > 0.5, "section cloud too tight");
    }

    #[test]
    fn finds_the_travelling_wave_orbit_near_onset() {
        // T ~ 2 pi tan(pi/4) = 2 pi within 2% just past the Hopf value.
        let cfg = SystemConfig::new(4, 1.05);
        let mut x0 = equilibrium(&cfg);
        x0[0] += 1e-3;
        let spec = IntegrationSpec { dt: DEFAULT_DT, t_end: 401.0, transient: 400.0, sample_every: 64 };
        let traj = integrate(&cfg, &x0, &spec).unwrap();
        let section = Section::default_for(&cfg);
        let orbit =
            find_periodic_orbit(&cfg, traj.last_state(), &section, &OrbitOptions::default())
                .unwrap();
        assert!((orbit.period - 2.0 * PI).abs() / (2.0 * PI) < 0.02, "T = {}", orbit.period);
        assert_eq!(orbit.returns, 1);
        assert_eq!(orbit.wave_number, Some(1));
        assert!(orbit.is_stable());

        // The trivial multiplier sits at unity.
        let trivial = orbit.multipliers[orbit.trivial_index()];
        assert!((trivial - Complex64::new(1.0, 0.0)).norm() < 1e-3);

        // |prod mu| = exp(-n (1+2G) T) for the full multiplier set.
        let product: f64 = orbit.multipliers.iter().map(|m| m.norm()).product();
        let expected = (-4.0 * orbit.period).exp();
        assert!((product - expected).abs() / expected < 0.01, "{product} vs {expected}");
    }

    #[test]
    fn stable_orbit_between_hopf_and_first_pd() {
        let cfg = SystemConfig::new(5, 3.5);
        let mut x0 = equilibrium(&cfg);
        x0[0] += 1e-3;
        let spec = IntegrationSpec { dt: DEFAULT_DT, t_end: 401.0, transient: 400.0, sample_every: 64 };
        let traj = integrate(&cfg, &x0, &spec).unwrap();
        let orbit = find_periodic_orbit(
            &cfg,
            traj.last_state(),
            &Section::default_for(&cfg),
            &OrbitOptions::default(),
        )
        .unwrap();
        assert!(orbit.is_stable());
        assert!(orbit.dominant_modulus() < 1.0);
        let trivial = orbit.multipliers[orbit.trivial_index()];
        assert!((trivial - Complex64::new(1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn doubled_orbit_closes_after_two_returns_only() {
        // F = 4.0 lies between the first and second period doublings; the
        // doubled waveform pierces the default section twice per period.
        let cfg = SystemConfig::new(5, 4.0);
        let mut x0 = equilibrium(&cfg);
        x0[0] += 1e-3;
        let spec = IntegrationSpec { dt: DEFAULT_DT, t_end: 601.0, transient: 600.0, sample_every: 64 };
        let traj = integrate(&cfg, &x0, &spec).unwrap();
        let section = Section::default_for(&cfg);
        let opts = OrbitOptions::default();
        let orbit = find_periodic_orbit(&cfg, traj.last_state(), &section, &opts).unwrap();
        assert_eq!(orbit.returns, 2, "expected a period-doubled orbit");

        // m-th return closes to Newton tolerance; the intermediate one does not.
        let u = project(&orbit.anchor, &section);
        let (_, full, _) = timed_return(&cfg, &u, &section, orbit.period, &opts).unwrap();
        let full_gap: f64 = project(&full, &section)
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(full_gap <= 1e-7, "orbit does not close: {full_gap}");
        let (_, halfway, _) = timed_return(&cfg, &u, &section, 0.5 * orbit.period, &opts).unwrap();
        let half_gap: f64 = project(&halfway, &section)
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(half_gap > 1e-2, "intermediate return should not close: {half_gap}");
    }

    #[test]
    fn no_cycle_below_onset() {
        let cfg = SystemConfig::new(4, 0.5);
        let mut guess = equilibrium(&cfg);
        guess[0] += 0.05;
        let section = Section::default_for(&cfg);
        match find_periodic_orbit(&cfg, &guess, &section, &OrbitOptions::default()) {
            Err(Error::NoCycle(_)) => {}
            other => panic!("expected NoCycle, got {other:?}"),
        }
    }
}

