//! Particle kinematics: forces, the exhaled-jet air field, eddy diffusion,
//! evaporation and the adaptive integrator that ties them together.

mod eddy;
mod evaporation;
mod forces;
mod integrator;
mod jet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

pub use eddy::eddy_displacement;
pub use evaporation::evaporate;
pub use forces::{
    acceleration, buoyancy_force, drag_correction, drag_force, gravity_force, net_force,
    relaxation_time, reynolds_number, ForceVector, STOKES_REGIME_RE,
};
pub use integrator::{
    step_adaptive, AdaptiveStepper, Landing, StepReport, WindowOutcome, DEFAULT_DT_MIN,
};
pub use jet::{jet_velocity, JetField, JetShape};

/// Density of water, kg/m³.
pub const WATER_DENSITY: f64 = 997.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleState {
    Airborne,
    Deposited,
    Absorbed,
    Blocked,
}

impl ParticleState {
    pub fn is_terminal(self) -> bool {
        self != ParticleState::Airborne
    }
}

/// One airborne droplet or aerosol.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: u64,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Current diameter, m. Only evaporation changes it.
    pub diameter: f64,
    /// Diameter at emission, m; sets the evaporation residue.
    pub initial_diameter: f64,
    pub mass_density: f64,
    pub infectious: bool,
    pub emitted_at: f64,
    state: ParticleState,
}

impl Particle {
    pub fn new(id: u64, position: Vec3, velocity: Vec3, diameter: f64, mass_density: f64) -> Self {
        Particle {
            id,
            position,
            velocity,
            diameter,
            initial_diameter: diameter,
            mass_density,
            infectious: false,
            emitted_at: 0.0,
            state: ParticleState::Airborne,
        }
    }

    pub fn state(&self) -> ParticleState {
        self.state
    }

    pub fn is_airborne(&self) -> bool {
        self.state == ParticleState::Airborne
    }

    /// Moves the particle into a terminal state. Terminal states are final;
    /// a second transition is rejected.
    pub fn transition(&mut self, to: ParticleState) -> Result<()> {
        if self.state.is_terminal() || !to.is_terminal() {
            return Err(Error::invalid(format!(
                "particle {}: illegal transition {:?} -> {:?}",
                self.id, self.state, to
            )));
        }
        self.state = to;
        Ok(())
    }

    /// Marks the particle deposited at `point` on the floor.
    pub fn deposit_at(&mut self, point: Vec3) -> Result<()> {
        self.transition(ParticleState::Deposited)?;
        self.position = Vec3::new(point.x, point.y, 0.0);
        self.velocity = Vec3::ZERO;
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        std::f64::consts::PI / 6.0 * self.diameter.powi(3)
    }

    pub fn mass(&self) -> f64 {
        self.mass_density * self.volume()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(Error::invalid(format!(
                "particle {}: diameter must be positive and finite",
                self.id
            )));
        }
        if !(self.mass_density > 0.0 && self.mass_density.is_finite()) {
            return Err(Error::invalid(format!(
                "particle {}: mass density must be positive",
                self.id
            )));
        }
        if !self.position.is_finite() || !self.velocity.is_finite() {
            return Err(Error::invalid(format!(
                "particle {}: non-finite kinematic state",
                self.id
            )));
        }
        Ok(())
    }
}

/// Individual force terms, for oracle runs that isolate one mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceToggles {
    pub gravity: bool,
    pub buoyancy: bool,
    pub drag: bool,
    pub advection: bool,
    pub eddy: bool,
}

impl Default for ForceToggles {
    fn default() -> Self {
        ForceToggles {
            gravity: true,
            buoyancy: true,
            drag: true,
            advection: true,
            eddy: true,
        }
    }
}

impl ForceToggles {
    pub fn gravity_only() -> Self {
        ForceToggles {
            gravity: true,
            buoyancy: false,
            drag: false,
            advection: false,
            eddy: false,
        }
    }
}

/// Ambient air and physical constants. Defaults are the room-air values used
/// for the reference cough simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Environment {
    /// kg/m³
    pub air_density: f64,
    /// N·s/m²
    pub air_viscosity: f64,
    /// m/s²
    pub gravity: f64,
    /// Ambient air temperature, °C.
    pub t_min: f64,
    /// Oral cavity temperature, °C.
    pub t_max: f64,
    pub eddy_diffusivity_scale: f64,
    /// Mixing length of the eddy-diffusivity model, m.
    pub mixing_length: f64,
    pub evaporation_enabled: bool,
    /// d²-law rate constant, m²/s.
    pub evaporation_rate: f64,
    /// Residue diameter as a fraction of the emitted diameter.
    pub residue_fraction: f64,
    pub forces: ForceToggles,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            air_density: 1.2041,
            air_viscosity: 18.13e-6,
            gravity: 9.81,
            t_min: 20.1,
            t_max: 36.0,
            eddy_diffusivity_scale: 0.1,
            mixing_length: 0.05,
            evaporation_enabled: false,
            evaporation_rate: 1e-9,
            residue_fraction: 0.3,
            forces: ForceToggles::default(),
        }
    }
}

impl Environment {
    /// Checks every field, reporting the first violation with its field name.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("air_density", self.air_density),
            ("air_viscosity", self.air_viscosity),
            ("gravity", self.gravity),
            ("mixing_length", self.mixing_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("t_min", self.t_min), ("t_max", self.t_max)] {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if self.t_max < self.t_min {
            return Err(Error::config("t_max", "must not be below t_min"));
        }
        if !(self.eddy_diffusivity_scale >= 0.0 && self.eddy_diffusivity_scale.is_finite()) {
            return Err(Error::config(
                "eddy_diffusivity_scale",
                "must be non-negative",
            ));
        }
        if !(self.evaporation_rate >= 0.0 && self.evaporation_rate.is_finite()) {
            return Err(Error::config("evaporation_rate", "must be non-negative"));
        }
        if !(self.residue_fraction > 0.0 && self.residue_fraction <= 1.0) {
            return Err(Error::config("residue_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Environment with every force but gravity disabled.
    pub fn ballistic() -> Self {
        Environment {
            forces: ForceToggles::gravity_only(),
            ..Environment::default()
        }
    }
}

/// Range of a frictionless horizontal throw from height `h0`.
pub fn max_throw_distance(v: f64, h0: f64, g: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::invalid(format!("gravity must be positive, got {g}")));
    }
    if !(v >= 0.0 && v.is_finite()) || !(h0 >= 0.0 && h0.is_finite()) {
        return Err(Error::invalid("speed and height must be non-negative"));
    }
    Ok(v * (2.0 * h0 / g).sqrt())
}
