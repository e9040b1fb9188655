use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::transport::{jet_velocity, Environment, JetField, Particle};
use crate::vec3::Vec3;

/// Below this particle Reynolds number drag is pure Stokes drag.
pub const STOKES_REGIME_RE: f64 = 0.1;

/// Upper validity limit of the Schiller-Naumann correlation.
const SCHILLER_NAUMANN_MAX_RE: f64 = 1000.0;

/// A force in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceVector(pub Vec3);

impl ForceVector {
    pub fn magnitude(self) -> f64 {
        self.0.norm()
    }
}

impl std::ops::Add for ForceVector {
    type Output = ForceVector;
    fn add(self, o: ForceVector) -> ForceVector {
        ForceVector(self.0 + o.0)
    }
}

pub fn reynolds_number(relative_speed: f64, diameter: f64, env: &Environment) -> f64 {
    env.air_density * relative_speed * diameter / env.air_viscosity
}

/// Multiplier on Stokes drag as a function of particle Reynolds number.
///
/// Pure Stokes below [`STOKES_REGIME_RE`], Schiller-Naumann
/// `1 + 0.15 Re^0.687` up to Re = 1000 and a constant drag coefficient of
/// 0.44 above.
pub fn drag_correction(re: f64) -> f64 {
    if re < STOKES_REGIME_RE {
        1.0
    } else if re <= SCHILLER_NAUMANN_MAX_RE {
        1.0 + 0.15 * re.powf(0.687)
    } else {
        0.44 * re / 24.0
    }
}

/// Drag coefficient per unit relative velocity: `F = -k * v_rel`.
fn drag_coefficient(relative_speed: f64, diameter: f64, env: &Environment) -> f64 {
    let re = reynolds_number(relative_speed, diameter, env);
    3.0 * PI * env.air_viscosity * diameter * drag_correction(re)
}

/// Momentum relaxation time `m / k` of a sphere under drag at the given
/// relative speed, s.
pub fn relaxation_time(
    relative_speed: f64,
    diameter: f64,
    mass_density: f64,
    env: &Environment,
) -> f64 {
    let mass = mass_density * PI / 6.0 * diameter.powi(3);
    mass / drag_coefficient(relative_speed, diameter, env)
}

/// Drag on `p` moving through air with local velocity `air_velocity`.
pub fn drag_force(p: &Particle, air_velocity: Vec3, env: &Environment) -> Result<ForceVector> {
    if !air_velocity.is_finite() || !p.velocity.is_finite() || !p.diameter.is_finite() {
        return Err(Error::invalid(format!(
            "particle {}: non-finite drag input",
            p.id
        )));
    }
    if !(p.diameter > 0.0) {
        return Err(Error::invalid(format!(
            "particle {}: diameter must be positive",
            p.id
        )));
    }
    let v_rel = p.velocity - air_velocity;
    let speed = v_rel.norm();
    if speed == 0.0 {
        return Ok(ForceVector::default());
    }
    Ok(ForceVector(
        v_rel * -drag_coefficient(speed, p.diameter, env),
    ))
}

pub fn gravity_force(p: &Particle, env: &Environment) -> ForceVector {
    ForceVector(Vec3::Z * (-p.mass() * env.gravity))
}

/// Archimedes buoyancy of the displaced air.
pub fn buoyancy_force(p: &Particle, env: &Environment) -> ForceVector {
    ForceVector(Vec3::Z * (env.air_density * p.volume() * env.gravity))
}

/// Sum of the enabled force terms on an airborne particle at time `t`.
pub fn net_force(p: &Particle, env: &Environment, jet: &JetField, t: f64) -> Result<ForceVector> {
    if !p.is_airborne() {
        return Err(Error::invalid(format!("particle {} is not airborne", p.id)));
    }
    p.validate()?;
    let mut total = ForceVector::default();
    if env.forces.gravity {
        total = total + gravity_force(p, env);
    }
    if env.forces.buoyancy {
        total = total + buoyancy_force(p, env);
    }
    if env.forces.drag {
        let air = if env.forces.advection {
            jet_velocity(jet, p.position, t)
        } else {
            Vec3::ZERO
        };
        total = total + drag_force(p, air, env)?;
    }
    Ok(total)
}

/// Acceleration of a sphere with the given kinematic state; the integrator's
/// right-hand side. Agrees with `net_force / mass`.
pub fn acceleration(
    position: Vec3,
    velocity: Vec3,
    diameter: f64,
    mass_density: f64,
    env: &Environment,
    jet: &JetField,
    t: f64,
) -> Vec3 {
    let mut a = Vec3::ZERO;
    let f = &env.forces;
    if f.gravity {
        a.z -= env.gravity;
    }
    if f.buoyancy {
        a.z += env.air_density / mass_density * env.gravity;
    }
    if f.drag {
        let air = if f.advection {
            jet_velocity(jet, position, t)
        } else {
            Vec3::ZERO
        };
        let v_rel = velocity - air;
        let speed = v_rel.norm();
        if speed > 0.0 {
            let mass = mass_density * PI / 6.0 * diameter.powi(3);
            a -= v_rel * (drag_coefficient(speed, diameter, env) / mass);
        }
    }
    a
}
