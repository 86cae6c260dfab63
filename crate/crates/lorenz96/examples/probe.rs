// probe: n=36 wave-8 branch continuation to its period doubling
use lorenz96::poincare::{track_cycle_bifurcations, CrossingDirection, Section, TrackOptions};
use lorenz96::SystemConfig;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let template = SystemConfig::new(36, 0.95);
    let opts = TrackOptions {
        section: Some(Section { index: 0, level: 0.9, direction: CrossingDirection::Up }),
        ..TrackOptions::default()
    };
    match track_cycle_bifurcations(&template, (0.95, 3.17), &opts) {
        Ok(branch) => {
            println!("{} points, {} events in {:.1}s", branch.points.len(), branch.events.len(), t0.elapsed().as_secs_f64());
            for e in &branch.events {
                println!("  {:?} at F={:.6} mu=({:.4},{:.4})", e.kind, e.f, e.multiplier.re, e.multiplier.im);
            }
            if let Some(p) = branch.points.first() {
                println!("  start: wave from anchor, T={:.4}", p.period);
            }
            if let Some(p) = branch.points.last() {
                println!("  end: F={:.4} T={:.4} stable={}", p.f, p.period, p.stable);
            }
        }
        Err(e) => println!("error: {e}"),
    }
}
