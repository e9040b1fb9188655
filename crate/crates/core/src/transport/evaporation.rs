use crate::transport::{Environment, Particle};

/// d²-law shrinkage over `dt`, clamped at the residue diameter.
///
/// Returns the particle unchanged when evaporation is disabled or the
/// particle is no longer airborne.
pub fn evaporate(p: &Particle, env: &Environment, dt: f64) -> Particle {
    let mut out = p.clone();
    if !env.evaporation_enabled || !p.is_airborne() || !(dt > 0.0) {
        return out;
    }
    let residue = env.residue_fraction * p.initial_diameter;
    let d2 = (p.diameter * p.diameter - env.evaporation_rate * dt).max(residue * residue);
    // never grow, even if the residue exceeds the current diameter
    out.diameter = d2.sqrt().min(p.diameter);
    out
}
