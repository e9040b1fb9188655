//! Multiuser scenario: agents, emission scheduling, transport stepping,
//! aperture absorption, dose accumulation and the conservation ledger.

mod agent;
mod engine;
mod geometry;
mod ledger;

use serde::{Deserialize, Serialize};

use crate::emission::{prefix_path, EmissionProfile, MovcskSymbol, RespiratoryEventKind};
use crate::error::{Error, Result};
use crate::transport::{Environment, DEFAULT_DT_MIN};
use crate::vec3::Vec3;

pub use agent::{
    accumulate_dose, infection_decision, receiver_position, Agent, Aperture, ApertureKind,
    DoseState, Waypoint,
};
pub use engine::{run, run_with};
pub use geometry::{absorb_check, segment_sphere_entry, PlacedAperture, Segment};
pub use ledger::{ledger_check, EventLedger, LedgerReport};

/// Time-stepping and randomness settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Simulated time span, s.
    pub duration: f64,
    /// Global step coupling agent motion, emission and absorption tests, s.
    pub dt_global: f64,
    /// Required before running; there is no wall-clock seeding.
    pub seed: Option<u64>,
    /// Per-step position error tolerance of the integrator, m.
    pub tol: f64,
    /// Largest integrator step, s.
    pub dt_max: f64,
    /// Smallest integrator step before a stiffness error, s.
    pub dt_min: f64,
    /// Virion concentration of infected respiratory fluid, 1/m³.
    pub virion_concentration: f64,
    /// Particle-count thresholds separating symbol concentration levels.
    pub symbol_thresholds: Vec<u64>,
    /// Skip receivers whose bounding sphere a path cannot reach.
    pub absorption_prefilter: bool,
    /// Where the command-line front end writes its output bundle when no
    /// directory is given on the command line.
    pub output_dir: Option<String>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            duration: 60.0,
            dt_global: 0.01,
            seed: None,
            tol: 1e-6,
            dt_max: 0.01,
            dt_min: DEFAULT_DT_MIN,
            virion_concentration: 1e12,
            symbol_thresholds: vec![15, 100, 10_000],
            absorption_prefilter: true,
            output_dir: None,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("duration", self.duration),
            ("dt_global", self.dt_global),
            ("tol", self.tol),
            ("dt_max", self.dt_max),
            ("dt_min", self.dt_min),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(Error::config("dt_min", "must not exceed dt_max"));
        }
        if !(self.virion_concentration >= 0.0 && self.virion_concentration.is_finite()) {
            return Err(Error::config(
                "virion_concentration",
                "must be non-negative",
            ));
        }
        if self.symbol_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "symbol_thresholds",
                "must be strictly increasing",
            ));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::config("run.seed", "a seed is required; no wall-clock seeding"))
    }
}

/// A fully resolved scenario, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub environment: Environment,
    pub agents: Vec<Agent>,
    pub profile: EmissionProfile,
    pub run: RunSettings,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.environment
            .validate()
            .map_err(|e| prefix_path(e, "environment"))?;
        self.profile
            .validate()
            .map_err(|e| prefix_path(e, "emission"))?;
        self.run.validate().map_err(|e| prefix_path(e, "run"))?;
        let mut ids: Vec<u32> = self.agents.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("agents", "agent ids must be unique"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            a.validate()
                .map_err(|e| prefix_path(e, &format!("agents[{i}]")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepositionRecord {
    pub particle_id: u64,
    pub event_id: u64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub diameter: f64,
    pub infectious: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionRecord {
    pub particle_id: u64,
    pub event_id: u64,
    pub receiver_id: u32,
    pub aperture: ApertureKind,
    pub position: Vec3,
    pub t: f64,
    pub diameter: f64,
    pub infectious: bool,
}

/// One respiratory event and the fate of its particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: u64,
    pub agent_id: u32,
    pub kind: RespiratoryEventKind,
    pub t: f64,
    /// Floor position of the emitter at emission time.
    pub emitter_position: Vec3,
    pub first_particle_id: u64,
    pub emitted: u64,
    pub infectious: u64,
    pub blocked: u64,
    pub deposited: u64,
    pub absorbed: u64,
    pub airborne_at_end: u64,
    /// Sub-cutoff diameter draws discarded while sampling the batch.
    pub omitted_draws: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosePoint {
    pub t: f64,
    pub dose: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub agent_id: u32,
    pub initially_infected: bool,
    pub threshold: f64,
    pub dose: u64,
    pub infected: bool,
    /// Time the threshold was crossed, for agents infected during the run.
    pub infected_at: Option<f64>,
    pub dose_trace: Vec<DosePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// Floor depositions in (time, particle id) order.
    pub depositions: Vec<DepositionRecord>,
    /// Absorptions in (time, particle id) order.
    pub absorptions: Vec<AbsorptionRecord>,
    pub events: Vec<EventRecord>,
    pub outcomes: Vec<AgentOutcome>,
    pub symbols: Vec<MovcskSymbol>,
    /// Simulated time at which the run stopped, s.
    pub end_time: f64,
}

impl SimulationResult {
    pub fn emitted(&self) -> u64 {
        self.events.iter().map(|e| e.emitted).sum()
    }

    pub fn blocked(&self) -> u64 {
        self.events.iter().map(|e| e.blocked).sum()
    }

    pub fn airborne_at_end(&self) -> u64 {
        self.events.iter().map(|e| e.airborne_at_end).sum()
    }

    pub fn event(&self, event_id: u64) -> Option<&EventRecord> {
        self.events
            .get(event_id as usize)
            .filter(|e| e.event_id == event_id)
    }
}
