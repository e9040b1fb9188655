use serde::{Deserialize, Serialize};

use crate::emission::{prefix_path, EventModel, Mask};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApertureKind {
    Face,
    Hand,
}

impl ApertureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ApertureKind::Face => "face",
            ApertureKind::Hand => "hand",
        }
    }
}

/// Body region through which a receiver takes up particles: a sphere around
/// `offset` from the agent's floor position, with an absorption gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aperture {
    pub kind: ApertureKind,
    pub offset: Vec3,
    pub radius: f64,
    pub gain: f64,
}

impl Aperture {
    pub fn face() -> Self {
        Aperture {
            kind: ApertureKind::Face,
            offset: Vec3::new(0.0, 0.0, 1.6),
            radius: 0.1,
            gain: 1.0,
        }
    }

    pub fn hand() -> Self {
        Aperture {
            kind: ApertureKind::Hand,
            offset: Vec3::new(0.0, 0.0, 1.0),
            radius: 0.08,
            gain: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::config("radius", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gain) {
            return Err(Error::config("gain", "must lie in [0, 1]"));
        }
        if !self.offset.is_finite() {
            return Err(Error::config("offset", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: Vec3,
}

fn default_waypoints() -> Vec<Waypoint> {
    vec![Waypoint {
        t: 0.0,
        position: Vec3::ZERO,
    }]
}

fn default_facing() -> Vec3 {
    Vec3::Y
}

fn default_mouth_height() -> f64 {
    1.64
}

fn default_apertures() -> Vec<Aperture> {
    vec![Aperture::face(), Aperture::hand()]
}

fn default_threshold() -> f64 {
    100.0
}

/// A human in the scene. Every agent emits through its event model and
/// receives through its apertures; infected agents emit infectious particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agent {
    pub id: u32,
    #[serde(default)]
    pub infected: bool,
    /// Floor positions over time; linearly interpolated and clamped.
    #[serde(default = "default_waypoints")]
    pub waypoints: Vec<Waypoint>,
    #[serde(default = "default_facing")]
    pub facing: Vec3,
    /// Height of the mouth above the floor position, m.
    #[serde(default = "default_mouth_height")]
    pub mouth_height: f64,
    #[serde(default = "default_apertures")]
    pub apertures: Vec<Aperture>,
    /// Infection threshold on the absorbed infectious-particle count.
    #[serde(default = "default_threshold")]
    pub detection_threshold: f64,
    #[serde(default)]
    pub mask: Option<Mask>,
    #[serde(default)]
    pub events: EventModel,
}

impl Agent {
    pub fn new(id: u32, position: Vec3, facing: Vec3) -> Self {
        Agent {
            id,
            infected: false,
            waypoints: vec![Waypoint { t: 0.0, position }],
            facing,
            mouth_height: default_mouth_height(),
            apertures: default_apertures(),
            detection_threshold: default_threshold(),
            mask: None,
            events: EventModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::config("waypoints", "at least one waypoint required"));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !w.t.is_finite() || !w.position.is_finite() {
                return Err(Error::config(format!("waypoints[{i}]"), "must be finite"));
            }
        }
        if self.waypoints.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(Error::config(
                "waypoints",
                "times must be strictly increasing",
            ));
        }
        if self.facing.normalized().is_none() {
            return Err(Error::config("facing", "must be a non-zero vector"));
        }
        if !(self.mouth_height > 0.0 && self.mouth_height.is_finite()) {
            return Err(Error::config("mouth_height", "must be positive"));
        }
        for (i, ap) in self.apertures.iter().enumerate() {
            ap.validate()
                .map_err(|e| prefix_path(e, &format!("apertures[{i}]")))?;
        }
        if !(self.detection_threshold > 0.0 && self.detection_threshold.is_finite()) {
            return Err(Error::config("detection_threshold", "must be positive"));
        }
        if let Some(mask) = &self.mask {
            mask.validate().map_err(|e| prefix_path(e, "mask"))?;
        }
        self.events.validate().map_err(|e| prefix_path(e, "events"))
    }

    pub fn facing_unit(&self) -> Vec3 {
        self.facing.normalized().unwrap_or(Vec3::Y)
    }

    pub fn mouth(&self, t: f64) -> Vec3 {
        receiver_position(self, t) + Vec3::Z * self.mouth_height
    }
}

/// Floor position of `a` at time `t`: piecewise-linear between waypoints,
/// clamped to the first/last waypoint outside their time span.
pub fn receiver_position(a: &Agent, t: f64) -> Vec3 {
    let wps = &a.waypoints;
    let first = wps[0];
    let last = wps[wps.len() - 1];
    if t <= first.t {
        return first.position;
    }
    if t >= last.t {
        return last.position;
    }
    let i = wps.partition_point(|w| w.t <= t);
    let (w0, w1) = (wps[i - 1], wps[i]);
    w0.position.lerp(w1.position, (t - w0.t) / (w1.t - w0.t))
}

/// Positive-dose bookkeeping for one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseState {
    pub dose: u64,
    pub threshold: f64,
    pub infected: bool,
}

impl DoseState {
    pub fn new(threshold: f64, initially_infected: bool) -> Self {
        DoseState {
            dose: 0,
            threshold,
            infected: initially_infected,
        }
    }
}

/// Adds one absorbed particle to the receiver's dose. Only infectious
/// particles count.
pub fn accumulate_dose(receiver: &mut DoseState, infectious: bool) {
    if infectious {
        receiver.dose += 1;
    }
}

/// Threshold decision (inclusive). Once infected, always infected.
pub fn infection_decision(receiver: &mut DoseState) -> bool {
    if receiver.dose as f64 >= receiver.threshold {
        receiver.infected = true;
    }
    receiver.infected
}
