use rand::Rng;

use crate::scenario::ApertureKind;
use crate::vec3::Vec3;

/// Straight particle path from `start` to `end` over `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Vec3,
    pub end: Vec3,
    pub t_start: f64,
    pub t_end: f64,
}

impl Segment {
    pub fn point(&self, s: f64) -> Vec3 {
        self.start.lerp(self.end, s)
    }

    pub fn time(&self, s: f64) -> f64 {
        self.t_start + (self.t_end - self.t_start) * s
    }
}

/// An aperture placed in the world at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedAperture {
    pub center: Vec3,
    pub radius: f64,
    pub gain: f64,
    pub kind: ApertureKind,
}

/// Parameter in `[0, 1]` at which the segment first touches the sphere, if it
/// does. A segment starting inside the sphere enters at 0.
pub fn segment_sphere_entry(start: Vec3, end: Vec3, center: Vec3, radius: f64) -> Option<f64> {
    let d = end - start;
    let f = start - center;
    let c = f.dot(f) - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let a = d.dot(d);
    if a == 0.0 {
        return None;
    }
    let b = f.dot(d);
    if b >= 0.0 {
        // moving away from the center while outside
        return None;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let s = (-b - disc.sqrt()) / a;
    (s <= 1.0).then_some(s.max(0.0))
}

/// Geometric intersection followed by a Bernoulli draw with the aperture
/// gain. Returns the entry parameter on absorption. Gains of exactly 0 or 1
/// consume no randomness.
pub fn absorb_check<R: Rng + ?Sized>(
    segment: &Segment,
    ap: &PlacedAperture,
    rng: &mut R,
) -> Option<f64> {
    let s = segment_sphere_entry(segment.start, segment.end, ap.center, ap.radius)?;
    let absorbed = if ap.gain <= 0.0 {
        false
    } else if ap.gain >= 1.0 {
        true
    } else {
        rng.random::<f64>() < ap.gain
    };
    absorbed.then_some(s)
}
