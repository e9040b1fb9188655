//! Single horizontal cough from 1.64 m with the built-in reference
//! distributions; prints the radial deposition profile.
//!
//! cargo run --release -p aerocomm --example reference_cough -- [seed]

use std::time::Instant;

use aerocomm::emission::{EmissionProfile, EventModel, RespiratoryEventKind, ScheduledEvent};
use aerocomm::scenario::{run, Agent, RunSettings, Scenario};
use aerocomm::transport::Environment;
use aerocomm::Vec3;

fn env_or(key: &str, default: f64) -> f64 {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let mut emitter = Agent::new(0, Vec3::ZERO, Vec3::Y);
    emitter.infected = true;
    emitter.apertures.clear();
    emitter.events = EventModel::scripted(vec![ScheduledEvent {
        t: 0.0,
        kind: RespiratoryEventKind::Cough,
    }]);
    let scenario = Scenario {
        environment: Environment {
            eddy_diffusivity_scale: env_or("EDDY", 0.1),
            ..Environment::default()
        },
        agents: vec![emitter],
        profile: {
            let mut p = EmissionProfile::default();
            p.jet_shape.half_angle_deg = env_or("HALF", p.jet_shape.half_angle_deg);
            p.jet_shape.buoyant_rise_rate = env_or("RISE", p.jet_shape.buoyant_rise_rate);
            p.jet_shape.mouth_diameter = env_or("MOUTH", p.jet_shape.mouth_diameter);
            p.particles_per_event.cough = env_or("COUNT", p.particles_per_event.cough as f64) as _;
            p
        },
        run: RunSettings {
            duration: 600.0,
            seed: Some(seed),
            ..RunSettings::default()
        },
    };
    let start = Instant::now();
    let result = run(&scenario).expect("run failed");
    let elapsed = start.elapsed();

    let mut edges = vec![0.0];
    edges.extend((1..=16).map(|k| k as f64 * 0.5));
    let mut counts = vec![0usize; edges.len()];
    for d in &result.depositions {
        let r = d.x.hypot(d.y);
        let i = edges.partition_point(|e| *e <= r) - 1;
        counts[i] += 1;
    }
    println!(
        "seed {seed}: {} deposited, {} airborne, end {:.2} s, {:.2?}",
        result.depositions.len(),
        result.airborne_at_end(),
        result.end_time,
        elapsed
    );
    for (i, c) in counts.iter().enumerate() {
        println!("  r >= {:4.1} m: {c}", edges[i]);
    }
}
