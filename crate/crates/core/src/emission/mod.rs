//! Respiratory emission: event processes, particle batch sampling,
//! infectiousness tagging, mask filtering and symbol mapping.

mod cdf;
mod events;
pub mod reference;
mod symbols;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::{JetField, JetShape, Particle, ParticleState, WATER_DENSITY};
use crate::vec3::Vec3;

pub use cdf::{
    empirical_cdf_from_distances, sample_from_cdf, speed_cdf_from_distance_sample, EmpiricalCdf,
    WeightedSample,
};
pub(crate) use events::{check_probability, prefix_path};
pub use events::{
    speaking_transition, EventGenerator, EventModel, ScheduledEvent, SpeakingMarkov, SpeechState,
    TimedEvent, COUGH_PROBABILITY_HEALTHY, COUGH_PROBABILITY_INFECTED, SNEEZE_PROBABILITY_HEALTHY,
    SNEEZE_PROBABILITY_INFECTED,
};
pub use symbols::{concentration_level, to_symbols, EventCounts, MovcskSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RespiratoryEventKind {
    Breath,
    SpeechFrame,
    Cough,
    Sneeze,
}

impl RespiratoryEventKind {
    pub const ALL: [RespiratoryEventKind; 4] = [
        RespiratoryEventKind::Breath,
        RespiratoryEventKind::SpeechFrame,
        RespiratoryEventKind::Cough,
        RespiratoryEventKind::Sneeze,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RespiratoryEventKind::Breath => "breath",
            RespiratoryEventKind::SpeechFrame => "speech_frame",
            RespiratoryEventKind::Cough => "cough",
            RespiratoryEventKind::Sneeze => "sneeze",
        }
    }
}

/// One value per event kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindMap<T> {
    pub breath: T,
    pub speech_frame: T,
    pub cough: T,
    pub sneeze: T,
}

impl<T: Copy> KindMap<T> {
    pub fn get(&self, kind: RespiratoryEventKind) -> T {
        match kind {
            RespiratoryEventKind::Breath => self.breath,
            RespiratoryEventKind::SpeechFrame => self.speech_frame,
            RespiratoryEventKind::Cough => self.cough,
            RespiratoryEventKind::Sneeze => self.sneeze,
        }
    }

    pub fn values(&self) -> [T; 4] {
        [self.breath, self.speech_frame, self.cough, self.sneeze]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiameterSource {
    Empirical(EmpiricalCdf),
    /// Log-normal with the given median (m) and log-space standard deviation.
    LogNormal {
        median: f64,
        sigma: f64,
    },
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeedSource {
    Empirical(EmpiricalCdf),
    /// Cloud/droplet split: particles below `split_diameter` leave at
    /// `cloud_speed`, larger ones at `droplet_speed`, each with a relative
    /// Gaussian spread.
    Bimodal {
        cloud_speed: f64,
        droplet_speed: f64,
        split_diameter: f64,
        relative_spread: f64,
    },
    Fixed(f64),
}

impl SpeedSource {
    pub fn bimodal_default() -> Self {
        SpeedSource::Bimodal {
            cloud_speed: 8.0,
            droplet_speed: 5.0,
            split_diameter: 100e-6,
            relative_spread: 0.1,
        }
    }
}

/// Everything needed to turn an event into a particle batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionProfile {
    pub diameter: DiameterSource,
    pub speed: SpeedSource,
    /// Standard deviation of each of the two direction angles, degrees.
    pub opening_angle_std_deg: f64,
    pub particles_per_event: KindMap<u64>,
    /// Multiplier on particle and jet speeds per event kind.
    pub speed_scale: KindMap<f64>,
    /// Diameters below this are redrawn, m.
    pub min_diameter_cutoff: f64,
    pub mass_density: f64,
    /// Exit speed of the exhaled air stream (the aerosol cloud), m/s.
    pub jet_exit_speed: f64,
    pub jet_shape: JetShape,
}

pub const DEFAULT_PARTICLES_PER_EVENT: KindMap<u64> = KindMap {
    breath: 10,
    speech_frame: 20,
    cough: 5000,
    sneeze: 15000,
};

pub const DEFAULT_SPEED_SCALE: KindMap<f64> = KindMap {
    breath: 0.2,
    speech_frame: 0.5,
    cough: 1.0,
    sneeze: 1.0,
};

impl Default for EmissionProfile {
    fn default() -> Self {
        let diameters = EmpiricalCdf::from_weighted(&reference::cough_diameters())
            .expect("reference diameters are valid");
        let speeds = speed_cdf_from_distance_sample(
            &reference::cough_distances(),
            reference::EMISSION_HEIGHT,
            9.81,
        )
        .expect("reference distances are valid");
        EmissionProfile {
            diameter: DiameterSource::Empirical(diameters),
            speed: SpeedSource::Empirical(speeds),
            opening_angle_std_deg: 6.25,
            particles_per_event: DEFAULT_PARTICLES_PER_EVENT,
            speed_scale: DEFAULT_SPEED_SCALE,
            min_diameter_cutoff: 50e-6,
            mass_density: WATER_DENSITY,
            jet_exit_speed: 8.0,
            jet_shape: JetShape::default(),
        }
    }
}

/// Consecutive sub-cutoff draws tolerated before giving up on a source.
const MAX_REDRAWS: u64 = 1_000_000;

impl EmissionProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.opening_angle_std_deg >= 0.0 && self.opening_angle_std_deg.is_finite()) {
            return Err(Error::config(
                "opening_angle_std_deg",
                "must be non-negative",
            ));
        }
        if !(self.min_diameter_cutoff >= 0.0 && self.min_diameter_cutoff.is_finite()) {
            return Err(Error::config("min_diameter_cutoff", "must be non-negative"));
        }
        if !(self.mass_density > 0.0 && self.mass_density.is_finite()) {
            return Err(Error::config("mass_density", "must be positive"));
        }
        if !(self.jet_exit_speed >= 0.0 && self.jet_exit_speed.is_finite()) {
            return Err(Error::config("jet_exit_speed", "must be non-negative"));
        }
        if self
            .speed_scale
            .values()
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(Error::config("speed_scale", "must be non-negative"));
        }
        self.jet_shape
            .validate()
            .map_err(|e| prefix_path(e, "jet"))?;
        let cutoff = self.min_diameter_cutoff;
        match &self.diameter {
            DiameterSource::Empirical(c) => {
                if c.min() <= 0.0 {
                    return Err(Error::config("diameter", "diameters must be positive"));
                }
                if c.max() < cutoff {
                    return Err(Error::config(
                        "diameter",
                        "no diameter at or above the cutoff",
                    ));
                }
            }
            DiameterSource::LogNormal { median, sigma } => {
                if !(*median > 0.0 && *sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::config("diameter", "invalid log-normal parameters"));
                }
                if *sigma == 0.0 && *median < cutoff {
                    return Err(Error::config(
                        "diameter",
                        "median below cutoff with zero spread",
                    ));
                }
            }
            DiameterSource::Fixed(d) => {
                if !(*d > 0.0 && *d >= cutoff) {
                    return Err(Error::config(
                        "diameter",
                        "fixed diameter must be positive and at least the cutoff",
                    ));
                }
            }
        }
        match &self.speed {
            SpeedSource::Empirical(c) => {
                if c.min() < 0.0 {
                    return Err(Error::config("speed", "speeds must be non-negative"));
                }
            }
            SpeedSource::Bimodal {
                cloud_speed,
                droplet_speed,
                split_diameter,
                relative_spread,
            } => {
                if ![cloud_speed, droplet_speed, split_diameter, relative_spread]
                    .iter()
                    .all(|v| **v >= 0.0 && v.is_finite())
                {
                    return Err(Error::config(
                        "speed",
                        "bimodal parameters must be non-negative",
                    ));
                }
            }
            SpeedSource::Fixed(v) => {
                if !(*v >= 0.0 && v.is_finite()) {
                    return Err(Error::config("speed", "fixed speed must be non-negative"));
                }
            }
        }
        Ok(())
    }

    fn draw_diameter<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, u64)> {
        let mut omitted = 0;
        loop {
            let d = match &self.diameter {
                DiameterSource::Empirical(c) => c.sample(rng),
                DiameterSource::LogNormal { median, sigma } => LogNormal::new(median.ln(), *sigma)
                    .map_err(|e| Error::config("diameter", e.to_string()))?
                    .sample(rng),
                DiameterSource::Fixed(d) => *d,
            };
            if d >= self.min_diameter_cutoff {
                return Ok((d, omitted));
            }
            omitted += 1;
            if omitted >= MAX_REDRAWS {
                return Err(Error::config(
                    "diameter",
                    "diameter source almost never exceeds the cutoff",
                ));
            }
        }
    }

    fn draw_speed<R: Rng + ?Sized>(&self, diameter: f64, rng: &mut R) -> f64 {
        match &self.speed {
            SpeedSource::Empirical(c) => c.sample(rng),
            SpeedSource::Bimodal {
                cloud_speed,
                droplet_speed,
                split_diameter,
                relative_spread,
            } => {
                let mean = if diameter < *split_diameter {
                    *cloud_speed
                } else {
                    *droplet_speed
                };
                let z: f64 = rng.sample(StandardNormal);
                (mean * (1.0 + relative_spread * z)).max(0.0)
            }
            SpeedSource::Fixed(v) => *v,
        }
    }
}

/// Particles of one event with their carrier jet.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionBatch {
    pub kind: RespiratoryEventKind,
    pub particles: Vec<Particle>,
    pub jet: JetField,
    /// Sub-cutoff diameter draws that were discarded and redrawn.
    pub omitted_draws: u64,
}

/// Orthonormal frame `(axis, side, up)` with `side` horizontal when possible.
fn frame(axis: Vec3) -> (Vec3, Vec3, Vec3) {
    let side = axis.cross(Vec3::Z).normalized().unwrap_or_else(|| {
        axis.cross(Vec3::X)
            .normalized()
            .expect("axis is a unit vector")
    });
    let up = side.cross(axis);
    (axis, side, up)
}

/// Draws the particles of one `kind` event emitted from `origin` along `axis`.
///
/// Particle ids are batch-local (`0..n`); `emitted_at` is left at 0.
pub fn sample_emission<R: Rng + ?Sized>(
    kind: RespiratoryEventKind,
    profile: &EmissionProfile,
    origin: Vec3,
    axis: Vec3,
    rng: &mut R,
) -> Result<EmissionBatch> {
    let axis = axis
        .normalized()
        .ok_or_else(|| Error::invalid("emission axis must be non-zero"))?;
    let scale = profile.speed_scale.get(kind);
    let jet = JetField::new(
        origin,
        axis,
        profile.jet_exit_speed * scale,
        profile.jet_shape,
    )?;
    let n = profile.particles_per_event.get(kind);
    let angle = Normal::new(0.0, profile.opening_angle_std_deg.to_radians())
        .map_err(|e| Error::config("opening_angle_std_deg", e.to_string()))?;
    let (a, side, up) = frame(axis);

    let mut particles = Vec::with_capacity(n as usize);
    let mut omitted_draws = 0;
    for id in 0..n {
        let (d, omitted) = profile.draw_diameter(rng)?;
        omitted_draws += omitted;
        let azimuth = angle.sample(rng);
        let elevation = angle.sample(rng);
        let direction =
            (a * azimuth.cos() + side * azimuth.sin()) * elevation.cos() + up * elevation.sin();
        let speed = profile.draw_speed(d, rng) * scale;
        particles.push(Particle::new(
            id,
            origin,
            direction * speed,
            d,
            profile.mass_density,
        ));
    }
    Ok(EmissionBatch {
        kind,
        particles,
        jet,
        omitted_draws,
    })
}

/// Probability that a droplet of diameter `d` carries at least one virion at
/// concentration `c_v` (virions/m³), under Poisson loading.
pub fn infection_probability(c_v: f64, d: f64) -> f64 {
    -(-c_v * PI / 6.0 * d.powi(3)).exp_m1()
}

/// Flags each particle infectious with Poisson-loading probability. A healthy
/// emitter or zero concentration yields no infectious particles.
pub fn tag_infectious<R: Rng + ?Sized>(
    batch: &mut [Particle],
    c_v: f64,
    emitter_infected: bool,
    rng: &mut R,
) -> Result<()> {
    if !(c_v >= 0.0 && c_v.is_finite()) {
        return Err(Error::config(
            "virion_concentration",
            "must be non-negative",
        ));
    }
    for p in batch.iter_mut() {
        p.infectious = emitter_infected && c_v > 0.0 && {
            let prob = infection_probability(c_v, p.diameter);
            rng.random::<f64>() < prob
        };
    }
    Ok(())
}

/// Face mask worn by an emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mask {
    /// Probability that a particle is caught by the mask.
    pub efficiency: f64,
    /// Fractional reduction of the jet exit speed.
    pub jet_attenuation: f64,
}

impl Default for Mask {
    fn default() -> Self {
        Mask {
            efficiency: 0.8,
            jet_attenuation: 0.9,
        }
    }
}

impl Mask {
    pub fn validate(&self) -> Result<()> {
        check_probability("efficiency", self.efficiency)?;
        check_probability("jet_attenuation", self.jet_attenuation)
    }
}

/// Blocks each particle independently with probability `mask.efficiency`
/// and slows the jet. Returns the number of particles blocked.
pub fn apply_mask<R: Rng + ?Sized>(
    batch: &mut [Particle],
    jet: &mut JetField,
    mask: &Mask,
    rng: &mut R,
) -> Result<u64> {
    mask.validate()?;
    let mut blocked = 0;
    for p in batch.iter_mut().filter(|p| p.is_airborne()) {
        if rng.random::<f64>() < mask.efficiency {
            p.transition(ParticleState::Blocked)?;
            blocked += 1;
        }
    }
    jet.exit_speed *= 1.0 - mask.jet_attenuation;
    Ok(blocked)
}
