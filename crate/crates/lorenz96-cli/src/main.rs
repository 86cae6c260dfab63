//! Command-line surface: reproducible, file-based runs of the analysis
//! library. Every command writes its outputs plus a manifest into `--out`.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 trajectory divergence,
//! 4 no periodic orbit found.

mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use lorenz96::attractor::{
    scan_f, scan_fg, classify, lyapunov_spectrum, LyapunovOptions, ScanOptions, ScanResult,
    SweepDirection,
};
use lorenz96::integrator::{integrate, IntegrationSpec, Trajectory, DEFAULT_DT};
use lorenz96::model::equilibrium;
use lorenz96::poincare::{
    track_cycle_bifurcations, CrossingDirection, Section, TrackOptions,
};
use lorenz96::spectral::{enumerate_bifurcations, Bifurcation};
use lorenz96::waves::{diagnostics, hovmoller, linearized_wave};
use lorenz96::SystemConfig;

use manifest::{fmt_f64, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "lorenz96",
    version,
    about = "Bifurcation analysis of the monoscale Lorenz-96 model and its diffusion unfolding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate every Hopf and Hopf-Hopf bifurcation of the trivial equilibrium.
    HopfTable(HopfTableArgs),
    /// Integrate one trajectory and write it with its wave diagnostics.
    Simulate(SimulateArgs),
    /// Classify attractors over an F range or an (F, G) grid.
    Scan(ScanArgs),
    /// Continue a periodic orbit in F and report its bifurcations.
    PeriodicOrbit(PeriodicOrbitArgs),
    /// Export the space-time raster of a trajectory.
    Hovmoller(HovmollerArgs),
    /// Estimate a Lyapunov spectrum at one parameter point.
    Lyapunov(LyapunovArgs),
}

/// Shared integration flags.
#[derive(Debug, Clone, Args, Serialize)]
struct IntegrationArgs {
    /// Integration step.
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Final time.
    #[arg(long = "t-end", default_value_t = 1000.0)]
    t_end: f64,
    /// Discarded initial interval.
    #[arg(long, default_value_t = 500.0)]
    transient: f64,
    /// Output stride in steps.
    #[arg(long = "sample-every", default_value_t = 1)]
    sample_every: usize,
}

impl IntegrationArgs {
    fn spec(&self) -> IntegrationSpec {
        IntegrationSpec {
            dt: self.dt,
            t_end: self.t_end,
            transient: self.transient,
            sample_every: self.sample_every,
        }
    }
}

#[derive(Debug, Args)]
struct HopfTableArgs {
    /// Dimensions: a value, list or range ("12", "4,10,12", "4..100").
    #[arg(long)]
    n: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    /// Forcing parameter.
    #[arg(long = "F", alias = "f", allow_negative_numbers = true)]
    forcing: f64,
    /// Diffusion parameter.
    #[arg(long = "G", alias = "g", default_value_t = 0.0, allow_negative_numbers = true)]
    diffusion: f64,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Initial state: "equilibrium" (perturbed x_F), "random", or "wave:L"
    /// (x_F plus the linearised wave-L profile).
    #[arg(long, default_value = "equilibrium")]
    init: String,
    /// Seed for random initial states.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Dimensions: a value, list or range.
    #[arg(long)]
    n: String,
    #[arg(long = "f-min", allow_negative_numbers = true)]
    f_min: f64,
    #[arg(long = "f-max", allow_negative_numbers = true)]
    f_max: f64,
    /// Grid points along F.
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Enable a 2D grid by giving a G range.
    #[arg(long = "g-min", allow_negative_numbers = true)]
    g_min: Option<f64>,
    #[arg(long = "g-max", allow_negative_numbers = true)]
    g_max: Option<f64>,
    #[arg(long = "g-steps", default_value_t = 51)]
    g_steps: usize,
    /// G-sweep direction for 2D grids: "up" or "down".
    #[arg(long, default_value = "up")]
    direction: String,
    /// Fixed G for 1D scans.
    #[arg(long = "G", alias = "g", default_value_t = 0.0, allow_negative_numbers = true)]
    diffusion: f64,
    /// Seed every point from the equilibrium instead of the previous point.
    #[arg(long)]
    cold: bool,
    /// Exponents per point.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Averaging horizon per point.
    #[arg(long, default_value_t = 250.0)]
    horizon: f64,
    /// Transient per point.
    #[arg(long, default_value_t = 120.0)]
    transient: f64,
    /// Neutral band for classification.
    #[arg(long = "tol-zero", default_value_t = 2e-2)]
    tol_zero: f64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PeriodicOrbitArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "f-min", allow_negative_numbers = true)]
    f_min: f64,
    #[arg(long = "f-max", allow_negative_numbers = true)]
    f_max: f64,
    /// Continuation step in F.
    #[arg(long = "f-step", default_value_t = 1e-2)]
    f_step: f64,
    #[arg(long = "G", alias = "g", default_value_t = 0.0, allow_negative_numbers = true)]
    diffusion: f64,
    /// 1-based section coordinate.
    #[arg(long = "section-coord", default_value_t = 1)]
    section_coord: usize,
    /// Section level; defaults to 0.9 F at each point.
    #[arg(long = "section-level", allow_negative_numbers = true)]
    section_level: Option<f64>,
    /// Crossing direction: "up", "down" or "both".
    #[arg(long = "section-dir", default_value = "up")]
    section_dir: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HovmollerArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "F", alias = "f", allow_negative_numbers = true)]
    forcing: f64,
    #[arg(long = "G", alias = "g", default_value_t = 0.0, allow_negative_numbers = true)]
    diffusion: f64,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[arg(long, default_value = "equilibrium")]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Subdivisions per sector for continuous-j rendering.
    #[arg(long, default_value_t = 1)]
    interp: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LyapunovArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "F", alias = "f", allow_negative_numbers = true)]
    forcing: f64,
    #[arg(long = "G", alias = "g", default_value_t = 0.0, allow_negative_numbers = true)]
    diffusion: f64,
    /// Number of exponents.
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 5000.0)]
    horizon: f64,
    #[arg(long, default_value_t = 500.0)]
    transient: f64,
    /// Time between QR renormalisations.
    #[arg(long, default_value_t = 0.5)]
    renorm: f64,
    #[arg(long = "tol-zero", default_value_t = 5e-3)]
    tol_zero: f64,
    #[arg(long)]
    out: PathBuf,
}

/// "12", "4,7,10" or "4..100" (inclusive).
fn parse_dimensions(text: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().context("range start")?;
        let hi: usize = hi.trim().parse().context("range end")?;
        if hi < lo {
            bail!("empty dimension range {text}");
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| part.trim().parse::<usize>().map_err(|e| anyhow!("bad dimension {part}: {e}")))
        .collect()
}

fn initial_state(cfg: &SystemConfig, init: &str, seed: u64) -> Result<Vec<f64>> {
    match init {
        "equilibrium" => {
            let mut x = equilibrium(cfg);
            x[0] += 1e-3;
            Ok(x)
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = cfg.forcing.abs().max(1.0);
            Ok((0..cfg.n).map(|_| rng.gen_range(-scale..scale)).collect())
        }
        other => {
            let l: usize = other
                .strip_prefix("wave:")
                .ok_or_else(|| anyhow!("unknown init {other} (use equilibrium, random or wave:L)"))?
                .parse()
                .context("wave index")?;
            let offset = linearized_wave(l, cfg.n, cfg.forcing, 0.0)?;
            Ok(equilibrium(cfg).iter().zip(&offset).map(|(a, b)| a + b).collect())
        }
    }
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.cfg.n;
    let mut out = String::from("t");
    for j in 1..=n {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for (idx, state) in traj.states.iter().enumerate() {
        out.push_str(&fmt_f64(traj.times[idx]));
        for value in state {
            out.push(',');
            out.push_str(&fmt_f64(*value));
        }
        out.push('\n');
    }
    out
}

fn cmd_hopf_table(args: &HopfTableArgs) -> Result<()> {
    let dims = parse_dimensions(&args.n)?;
    if dims.iter().any(|&n| n < 4) {
        bail!("hopf-table needs n >= 4 (got {:?})", dims.iter().min());
    }
    let mut manifest = RunManifest::new(
        &args.out,
        "hopf-table",
        serde_json::json!({ "n": args.n }),
    )?;

    let mut csv = String::from("l,n,F_H,omega0,ell1,criticality,first\n");
    let mut rows = 0usize;
    for &n in &dims {
        let records = enumerate_bifurcations(n)?;
        let first_f = records
            .iter()
            .map(|r| r.f_value())
            .filter(|f| *f > 0.0)
            .fold(f64::INFINITY, f64::min);
        for record in &records {
            let first = if record.f_value() > 0.0 && (record.f_value() - first_f).abs() < 1e-12 {
                "1"
            } else {
                "0"
            };
            match record {
                Bifurcation::Hopf(h) => {
                    let crit = match h.criticality {
                        lorenz96::spectral::Criticality::Subcritical => "subcritical",
                        lorenz96::spectral::Criticality::Supercritical => "supercritical",
                    };
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        h.l,
                        n,
                        fmt_f64(h.f_h),
                        fmt_f64(h.omega0),
                        fmt_f64(h.ell1),
                        crit,
                        first
                    ));
                }
                Bifurcation::HopfHopf(hh) => {
                    csv.push_str(&format!(
                        "{};{},{},{},,,,{}\n",
                        hh.l1,
                        hh.l2,
                        n,
                        fmt_f64(hh.f_hh),
                        first
                    ));
                }
            }
            rows += 1;
        }
    }
    manifest.write_file("hopf_table.csv", &csv)?;
    manifest.finish()?;
    println!("hopf-table: {rows} rows for {} dimension(s)", dims.len());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = SystemConfig::with_diffusion(args.n, args.forcing, args.diffusion);
    let x0 = initial_state(&cfg, &args.init, args.seed)?;
    let traj = integrate(&cfg, &x0, &args.integration.spec())?;
    let diag = diagnostics(&traj);

    let mut manifest = RunManifest::new(
        &args.out,
        "simulate",
        serde_json::json!({
            "n": args.n, "F": args.forcing, "G": args.diffusion,
            "integration": args.integration, "init": args.init, "seed": args.seed,
        }),
    )?;
    manifest.write_file("trajectory.csv", &trajectory_csv(&traj))?;
    manifest.write_file("diagnostics.json", &serde_json::to_string_pretty(&diag)?)?;
    manifest.finish()?;
    println!(
        "simulate: n={} F={} wave={:?} period={:?}",
        args.n, args.forcing, diag.wave_number, diag.period
    );
    Ok(())
}

fn scan_csv(result: &ScanResult) -> String {
    let mut csv = String::from("F,G,class,lambda1,lambda2,lambda3,wave\n");
    for p in &result.points {
        let mut lambdas = [String::new(), String::new(), String::new()];
        for (slot, value) in lambdas.iter_mut().zip(&p.exponents) {
            *slot = fmt_f64(*value);
        }
        let wave = p.wave.map_or(String::new(), |w| w.to_string());
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(p.f),
            fmt_f64(p.g),
            p.kind.code(),
            lambdas[0],
            lambdas[1],
            lambdas[2],
            wave
        ));
    }
    csv
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let dims = parse_dimensions(&args.n)?;
    if args.steps < 2 {
        bail!("scan needs at least 2 steps");
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let opts = ScanOptions {
        k: args.k,
        tol_zero: args.tol_zero,
        lyapunov: LyapunovOptions {
            dt: DEFAULT_DT,
            transient: args.transient,
            horizon: args.horizon,
            renorm_interval: 0.5,
        },
    };
    let direction = match args.direction.as_str() {
        "up" => SweepDirection::Up,
        "down" => SweepDirection::Down,
        other => bail!("unknown sweep direction {other}"),
    };

    let mut manifest = RunManifest::new(
        &args.out,
        "scan",
        serde_json::json!({
            "n": args.n, "f_min": args.f_min, "f_max": args.f_max, "steps": args.steps,
            "g_min": args.g_min, "g_max": args.g_max, "g_steps": args.g_steps,
            "direction": args.direction, "G": args.diffusion, "cold": args.cold,
            "k": args.k, "horizon": args.horizon, "transient": args.transient,
            "tol_zero": args.tol_zero,
        }),
    )?;

    #[derive(Serialize)]
    struct OnsetEntry {
        n: usize,
        onset_f: Option<f64>,
    }
    let mut onsets = Vec::new();
    for &n in &dims {
        let template = SystemConfig::with_diffusion(n, 0.0, args.diffusion);
        let result = match (args.g_min, args.g_max) {
            (Some(g_min), Some(g_max)) => scan_fg(
                &template,
                (args.f_min, args.f_max),
                (g_min, g_max),
                (args.steps, args.g_steps),
                direction,
                &opts,
            )?,
            (None, None) => {
                scan_f(&template, (args.f_min, args.f_max), args.steps, !args.cold, &opts)?
            }
            _ => bail!("give both --g-min and --g-max for a 2D scan"),
        };
        manifest.write_file(&format!("raster_n{n}.csv"), &scan_csv(&result))?;
        println!("scan: n={n} chaos onset {:?}", result.chaos_onset);
        onsets.push(OnsetEntry { n, onset_f: result.chaos_onset });
    }
    manifest.write_file("onset.json", &serde_json::to_string_pretty(&onsets)?)?;
    manifest.finish()?;
    Ok(())
}

fn cmd_periodic_orbit(args: &PeriodicOrbitArgs) -> Result<()> {
    if args.section_coord == 0 || args.section_coord > args.n {
        bail!("--section-coord must be between 1 and n");
    }
    let direction = match args.section_dir.as_str() {
        "up" => CrossingDirection::Up,
        "down" => CrossingDirection::Down,
        "both" => CrossingDirection::Both,
        other => bail!("unknown section direction {other}"),
    };
    let section = args.section_level.map(|level| Section {
        index: args.section_coord - 1,
        level,
        direction,
    });
    let opts = TrackOptions { f_step: args.f_step, section, ..TrackOptions::default() };
    let template = SystemConfig::with_diffusion(args.n, args.f_min, args.diffusion);
    let branch = track_cycle_bifurcations(&template, (args.f_min, args.f_max), &opts)?;

    let mut manifest = RunManifest::new(
        &args.out,
        "periodic-orbit",
        serde_json::json!({
            "n": args.n, "f_min": args.f_min, "f_max": args.f_max, "f_step": args.f_step,
            "G": args.diffusion, "section_coord": args.section_coord,
            "section_level": args.section_level, "section_dir": args.section_dir,
        }),
    )?;

    let mut csv = String::from("F,T,stable");
    for i in 1..=args.n {
        csv.push_str(&format!(",mu{i}_re,mu{i}_im"));
    }
    csv.push('\n');
    for p in &branch.points {
        csv.push_str(&format!(
            "{},{},{}",
            fmt_f64(p.f),
            fmt_f64(p.period),
            u8::from(p.stable)
        ));
        for mu in &p.multipliers {
            csv.push_str(&format!(",{},{}", fmt_f64(mu.re), fmt_f64(mu.im)));
        }
        csv.push('\n');
    }
    manifest.write_file("branch.csv", &csv)?;

    #[derive(Serialize)]
    struct EventEntry {
        kind: lorenz96::poincare::CycleBifurcationKind,
        #[serde(rename = "F")]
        f: f64,
        multiplier: [f64; 2],
    }
    let events: Vec<EventEntry> = branch
        .events
        .iter()
        .map(|e| EventEntry { kind: e.kind, f: e.f, multiplier: [e.multiplier.re, e.multiplier.im] })
        .collect();
    manifest.write_file("events.json", &serde_json::to_string_pretty(&events)?)?;
    manifest.finish()?;
    for e in &branch.events {
        println!("periodic-orbit: {:?} at F = {:.6}", e.kind, e.f);
    }
    println!("periodic-orbit: {} branch points written", branch.points.len());
    Ok(())
}

fn cmd_hovmoller(args: &HovmollerArgs) -> Result<()> {
    let cfg = SystemConfig::with_diffusion(args.n, args.forcing, args.diffusion);
    let x0 = initial_state(&cfg, &args.init, args.seed)?;
    let traj = integrate(&cfg, &x0, &args.integration.spec())?;
    let hov = hovmoller(&traj, args.interp);
    let diag = diagnostics(&traj);

    let mut manifest = RunManifest::new(
        &args.out,
        "hovmoller",
        serde_json::json!({
            "n": args.n, "F": args.forcing, "G": args.diffusion,
            "integration": args.integration, "init": args.init, "seed": args.seed,
            "interp": args.interp,
        }),
    )?;
    let mut csv = String::from("t,j,x\n");
    for row in &hov.rows {
        csv.push_str(&format!("{},{},{}\n", fmt_f64(row.t), row.j, fmt_f64(row.x)));
    }
    manifest.write_file("hovmoller.csv", &csv)?;
    manifest.write_file("diagnostics.json", &serde_json::to_string_pretty(&diag)?)?;
    manifest.finish()?;
    println!("hovmoller: {} rows, drift {:?}", hov.rows.len(), hov.drift);
    Ok(())
}

fn cmd_lyapunov(args: &LyapunovArgs) -> Result<()> {
    let cfg = SystemConfig::with_diffusion(args.n, args.forcing, args.diffusion);
    let mut x0 = equilibrium(&cfg);
    x0[0] += 1e-3;
    let opts = LyapunovOptions {
        dt: args.dt,
        transient: args.transient,
        horizon: args.horizon,
        renorm_interval: args.renorm,
    };
    let spectrum = lyapunov_spectrum(&cfg, &x0, args.k, &opts)?;
    let class = classify(&spectrum, args.tol_zero);

    #[derive(Serialize)]
    struct SpectrumReport {
        n: usize,
        #[serde(rename = "F")]
        f: f64,
        #[serde(rename = "G")]
        g: f64,
        k: usize,
        exponents: Vec<f64>,
        horizon: f64,
        renorm_interval: f64,
        converged: bool,
        class: String,
    }
    let report = SpectrumReport {
        n: args.n,
        f: args.forcing,
        g: args.diffusion,
        k: args.k,
        exponents: spectrum.exponents.clone(),
        horizon: spectrum.horizon,
        renorm_interval: spectrum.renorm_interval,
        converged: spectrum.converged,
        class: class.kind.code(),
    };
    let mut manifest = RunManifest::new(
        &args.out,
        "lyapunov",
        serde_json::json!({
            "n": args.n, "F": args.forcing, "G": args.diffusion, "k": args.k,
            "dt": args.dt, "horizon": args.horizon, "transient": args.transient,
            "renorm": args.renorm, "tol_zero": args.tol_zero,
        }),
    )?;
    manifest.write_file("spectrum.json", &serde_json::to_string_pretty(&report)?)?;
    manifest.finish()?;
    println!(
        "lyapunov: class {} exponents {:?}",
        report.class,
        &report.exponents
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::HopfTable(args) => cmd_hopf_table(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Scan(args) => cmd_scan(args),
        Command::PeriodicOrbit(args) => cmd_periodic_orbit(args),
        Command::Hovmoller(args) => cmd_hovmoller(args),
        Command::Lyapunov(args) => cmd_lyapunov(args),
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<lorenz96::Error>() {
        Some(lorenz96::Error::Divergence { .. }) => 3,
        Some(lorenz96::Error::NoCycle(_)) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
