use rand::Rng;
use rand_distr::StandardNormal;

use crate::transport::Environment;
use crate::vec3::Vec3;

/// Random-walk displacement from turbulent mixing over `dt`.
///
/// Isotropic Gaussian with per-axis standard deviation `sqrt(2 D_e dt)`,
/// where `D_e = scale * |u_air| * mixing_length`. Still air has no eddies;
/// no random numbers are drawn when the displacement is identically zero.
pub fn eddy_displacement<R: Rng + ?Sized>(
    rng: &mut R,
    local_air_speed: f64,
    env: &Environment,
    dt: f64,
) -> Vec3 {
    let diffusivity = env.eddy_diffusivity_scale * local_air_speed * env.mixing_length;
    if !env.forces.eddy || !(diffusivity > 0.0) || !(dt > 0.0) {
        return Vec3::ZERO;
    }
    let std = (2.0 * diffusivity * dt).sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vec3::new(x, y, z) * std
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn disabled_or_still_air_gives_zero() {
        let mut rng = stream(1, Domain::Transport, 0);
        let env = Environment {
            eddy_diffusivity_scale: 0.0,
            ..Environment::default()
        };
        assert_eq!(eddy_displacement(&mut rng, 3.0, &env, 0.01), Vec3::ZERO);
        let env = Environment::default();
        assert_eq!(eddy_displacement(&mut rng, 0.0, &env, 0.01), Vec3::ZERO);
    }

    #[test]
    fn per_axis_standard_deviation() {
        let env = Environment {
            eddy_diffusivity_scale: 0.1,
            mixing_length: 0.05,
            ..Environment::default()
        };
        let mut rng = stream(42, Domain::Transport, 9);
        let n = 100_000;
        let mut sum = Vec3::ZERO;
        let mut sq = Vec3::ZERO;
        for _ in 0..n {
            let d = eddy_displacement(&mut rng, 1.0, &env, 0.01);
            sum += d;
            sq += Vec3::new(d.x * d.x, d.y * d.y, d.z * d.z);
        }
        let n = n as f64;
        for (s, q) in [(sum.x, sq.x), (sum.y, sq.y), (sum.z, sq.z)] {
            let mean = s / n;
            let std = (q / n - mean * mean).sqrt();
            assert!((std - 0.01).abs() < 0.02 * 0.01, "std {std}");
        }
    }
}
