use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Shape parameters of an exhaled round jet, shared by all jets of a
/// scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JetShape {
    /// Mouth opening diameter, m.
    pub mouth_diameter: f64,
    /// Centerline decay constant of `u_c = u0 * min(1, K * D0 / s)`.
    pub decay_constant: f64,
    /// Cone half angle, degrees.
    pub half_angle_deg: f64,
    /// Upward tilt of the flow direction per metre of axial travel.
    pub buoyant_rise_rate: f64,
}

impl Default for JetShape {
    fn default() -> Self {
        JetShape {
            mouth_diameter: 0.01,
            decay_constant: 6.0,
            half_angle_deg: 40.0,
            buoyant_rise_rate: 0.05,
        }
    }
}

impl JetShape {
    pub fn validate(&self) -> Result<()> {
        if !(self.mouth_diameter > 0.0 && self.mouth_diameter.is_finite()) {
            return Err(Error::config("mouth_diameter", "must be positive"));
        }
        if !(self.decay_constant > 0.0 && self.decay_constant.is_finite()) {
            return Err(Error::config("decay_constant", "must be positive"));
        }
        if !(self.half_angle_deg > 0.0 && self.half_angle_deg < 90.0) {
            return Err(Error::config(
                "half_angle_deg",
                "must lie in (0, 90) degrees",
            ));
        }
        if !(self.buoyant_rise_rate >= 0.0 && self.buoyant_rise_rate.is_finite()) {
            return Err(Error::config("buoyant_rise_rate", "must be non-negative"));
        }
        Ok(())
    }
}

/// Steady air velocity field of the exhaled stream of one respiratory event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JetField {
    pub origin: Vec3,
    /// Unit vector along the jet axis.
    pub axis: Vec3,
    /// Exit speed u0, m/s.
    pub exit_speed: f64,
    shape: JetShape,
    #[serde(skip)]
    cone_tan: f64,
}

impl JetField {
    pub fn new(origin: Vec3, axis: Vec3, exit_speed: f64, shape: JetShape) -> Result<Self> {
        let axis = axis
            .normalized()
            .ok_or_else(|| Error::invalid("jet axis must be a non-zero vector"))?;
        if !(exit_speed >= 0.0 && exit_speed.is_finite()) {
            return Err(Error::invalid("jet exit speed must be non-negative"));
        }
        shape.validate()?;
        Ok(JetField {
            origin,
            axis,
            exit_speed,
            shape,
            cone_tan: shape.half_angle_deg.to_radians().tan(),
        })
    }

    /// Still air: the field is zero everywhere.
    pub fn still() -> Self {
        JetField::new(Vec3::ZERO, Vec3::Y, 0.0, JetShape::default())
            .expect("default jet shape is valid")
    }

    /// Jet with default shape parameters.
    pub fn cough(origin: Vec3, axis: Vec3, exit_speed: f64) -> Self {
        JetField::new(origin, axis, exit_speed, JetShape::default())
            .expect("default jet shape is valid")
    }

    pub fn shape(&self) -> &JetShape {
        &self.shape
    }

    pub fn is_still(&self) -> bool {
        self.exit_speed == 0.0
    }

    /// Centerline speed at axial distance `s > 0`.
    pub fn centerline_speed(&self, s: f64) -> f64 {
        let core = self.shape.decay_constant * self.shape.mouth_diameter;
        self.exit_speed * (core / s).min(1.0)
    }
}

/// Air velocity of `jet` at point `x`.
///
/// Zero behind the mouth and outside the cone; inside, the centerline speed
/// decays as `1/s` beyond the potential core, falls off radially as a
/// Gaussian of width `s * tan(half_angle)`, and the flow direction tilts
/// upward linearly with axial distance. The field is steady, so `t` is
/// accepted for interface symmetry only.
pub fn jet_velocity(jet: &JetField, x: Vec3, _t: f64) -> Vec3 {
    if jet.exit_speed == 0.0 {
        return Vec3::ZERO;
    }
    let r = x - jet.origin;
    let s = r.dot(jet.axis);
    if s <= 0.0 {
        return Vec3::ZERO;
    }
    let radial = (r - jet.axis * s).norm();
    let sigma = s * jet.cone_tan;
    if radial > sigma {
        return Vec3::ZERO;
    }
    let profile = (-0.5 * (radial / sigma).powi(2)).exp();
    let speed = jet.centerline_speed(s) * profile;
    let direction = (jet.axis + Vec3::Z * (jet.shape.buoyant_rise_rate * s))
        .normalized()
        .unwrap_or(jet.axis);
    direction * speed
}
