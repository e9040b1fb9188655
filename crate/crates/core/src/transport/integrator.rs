//! Dormand-Prince 5(4) integration of particle position and velocity with
//! per-step position-error control and floor-crossing detection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::transport::{
    acceleration, eddy_displacement, evaporate, jet_velocity, relaxation_time, Environment,
    JetField, Particle,
};
use crate::vec3::Vec3;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (equal to the last stage row).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Steps are capped at this many drag relaxation times. Near 3.3 the
/// scheme's stability function reaches +1 on the negative real axis and a
/// velocity offset from terminal speed would persist undetected by the
/// embedded error estimate.
const STABILITY_LIMIT: f64 = 2.0;

const SAFETY: f64 = 0.9;
const MIN_SHRINK: f64 = 0.2;
const MAX_GROWTH: f64 = 5.0;

/// Smallest step the integrator may take before reporting stiffness.
pub const DEFAULT_DT_MIN: f64 = 1e-7;

/// Point and time at which a trajectory meets the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landing {
    pub point: Vec3,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Time actually advanced (up to the landing time if the floor was hit).
    pub dt_used: f64,
    /// Suggested size of the next step.
    pub dt_next: f64,
    pub landing: Option<Landing>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowOutcome {
    Airborne,
    Landed(Landing),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveStepper {
    /// Position error tolerance per step, m.
    pub tol: f64,
    pub dt_max: f64,
    pub dt_min: f64,
}

struct Trial {
    position: Vec3,
    velocity: Vec3,
    error: f64,
}

fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * h * m1
}

impl AdaptiveStepper {
    pub fn new(tol: f64, dt_max: f64) -> Result<Self> {
        let s = AdaptiveStepper {
            tol,
            dt_max,
            dt_min: DEFAULT_DT_MIN,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("tol", "must be positive"));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::config("dt_max", "must be positive"));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return Err(Error::config(
                "dt_min",
                "must be positive and at most dt_max",
            ));
        }
        Ok(())
    }

    fn trial(&self, p: &Particle, env: &Environment, jet: &JetField, t: f64, h: f64) -> Trial {
        let (x0, v0) = (p.position, p.velocity);
        let mut kx = [Vec3::ZERO; 7];
        let mut kv = [Vec3::ZERO; 7];
        for stage in 0..7 {
            let mut x = x0;
            let mut v = v0;
            for j in 0..stage {
                let a = A[stage][j];
                if a != 0.0 {
                    x += kx[j] * (h * a);
                    v += kv[j] * (h * a);
                }
            }
            kx[stage] = v;
            kv[stage] = acceleration(x, v, p.diameter, p.mass_density, env, jet, t + C[stage] * h);
        }
        let mut x5 = x0;
        let mut v5 = v0;
        let mut ex = Vec3::ZERO;
        let mut ev = Vec3::ZERO;
        for i in 0..7 {
            x5 += kx[i] * (h * B[i]);
            v5 += kv[i] * (h * B[i]);
            ex += kx[i] * (h * E[i]);
            ev += kv[i] * (h * E[i]);
        }
        Trial {
            position: x5,
            velocity: v5,
            error: ex.norm_max().max(h * ev.norm_max()),
        }
    }

    /// Largest step the explicit scheme can take stably from `p`'s state.
    fn stability_cap(p: &Particle, env: &Environment, jet: &JetField, t: f64) -> f64 {
        if !env.forces.drag {
            return f64::INFINITY;
        }
        let air = if env.forces.advection {
            jet_velocity(jet, p.position, t)
        } else {
            Vec3::ZERO
        };
        let speed = (p.velocity - air).norm();
        STABILITY_LIMIT * relaxation_time(speed, p.diameter, p.mass_density, env)
    }

    fn growth(&self, error: f64) -> f64 {
        if error == 0.0 {
            MAX_GROWTH
        } else {
            (SAFETY * (self.tol / error).powf(0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
        }
    }

    /// Takes one accepted step of at most `dt_try` from time `t`.
    ///
    /// The particle's state is left `Airborne`; if the floor is reached the
    /// particle sits at the crossing point with `z = 0` and the report
    /// carries the landing. Rejected trials shrink the step; shrinking below
    /// `dt_min` is a stiffness error.
    pub fn step<R: Rng + ?Sized>(
        &self,
        p: &mut Particle,
        env: &Environment,
        jet: &JetField,
        t: f64,
        dt_try: f64,
        rng: &mut R,
    ) -> Result<StepReport> {
        if !p.is_airborne() {
            return Err(Error::invalid(format!("particle {} is not airborne", p.id)));
        }
        if !(dt_try > 0.0) {
            return Err(Error::invalid("step size must be positive"));
        }
        let cap = Self::stability_cap(p, env, jet, t);
        let mut h = dt_try.min(self.dt_max).min(cap);
        let trial = loop {
            let trial = self.trial(p, env, jet, t, h);
            let finite = trial.position.is_finite() && trial.velocity.is_finite();
            if finite && trial.error <= self.tol {
                break trial;
            }
            h *= if finite {
                self.growth(trial.error)
            } else {
                MIN_SHRINK
            };
            if h < self.dt_min {
                return Err(Error::Stiffness {
                    particle_id: p.id,
                    diameter: p.diameter,
                    time: t,
                    dt: h,
                });
            }
        };
        let dt_next = (h * self.growth(trial.error)).min(self.dt_max).min(cap);
        let (x0, v0) = (p.position, p.velocity);

        if trial.position.z < 0.0 {
            // bisect the cubic Hermite interpolant of z on [0, 1]
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let z = |s: f64| hermite(x0.z, v0.z, trial.position.z, trial.velocity.z, h, s);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if z(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON {
                    break;
                }
            }
            let s = 0.5 * (lo + hi);
            let point = Vec3::new(
                hermite(x0.x, v0.x, trial.position.x, trial.velocity.x, h, s),
                hermite(x0.y, v0.y, trial.position.y, trial.velocity.y, h, s),
                0.0,
            );
            p.position = point;
            let dt_used = s * h;
            *p = evaporate(p, env, dt_used);
            return Ok(StepReport {
                dt_used,
                dt_next,
                landing: Some(Landing {
                    point,
                    time: t + dt_used,
                }),
            });
        }

        p.position = trial.position;
        p.velocity = trial.velocity;
        let air_speed = if env.forces.advection {
            jet_velocity(jet, x0, t).norm()
        } else {
            0.0
        };
        p.position += eddy_displacement(rng, air_speed, env, h);
        *p = evaporate(p, env, h);

        let landing = (p.position.z < 0.0).then(|| {
            p.position.z = 0.0;
            Landing {
                point: p.position,
                time: t + h,
            }
        });
        Ok(StepReport {
            dt_used: h,
            dt_next,
            landing,
        })
    }

    /// Advances `p` from `t0` to `t1`, stopping early if it lands.
    ///
    /// `hint` carries the step-size suggestion between calls.
    #[allow(clippy::too_many_arguments)]
    pub fn advance<R: Rng + ?Sized>(
        &self,
        p: &mut Particle,
        env: &Environment,
        jet: &JetField,
        t0: f64,
        t1: f64,
        hint: &mut f64,
        rng: &mut R,
    ) -> Result<WindowOutcome> {
        let mut t = t0;
        while t < t1 {
            let remaining = t1 - t;
            let h = hint.min(remaining);
            let report = self.step(p, env, jet, t, h, rng)?;
            *hint = report.dt_next;
            if let Some(landing) = report.landing {
                return Ok(WindowOutcome::Landed(landing));
            }
            t = if report.dt_used >= remaining {
                t1
            } else {
                t + report.dt_used
            };
        }
        Ok(WindowOutcome::Airborne)
    }
}

/// Single adaptive step from time `t` with step ceiling `dt_max`.
///
/// Returns the advanced particle and the time step used. A particle whose
/// trajectory meets the floor is returned `Deposited` at the interpolated
/// crossing point, with `dt_used` ending at the crossing time.
pub fn step_adaptive<R: Rng + ?Sized>(
    p: &Particle,
    env: &Environment,
    jet: &JetField,
    t: f64,
    dt_max: f64,
    tol: f64,
    rng: &mut R,
) -> Result<(Particle, f64)> {
    let stepper = AdaptiveStepper::new(tol, dt_max)?;
    let mut out = p.clone();
    let report = stepper.step(&mut out, env, jet, t, dt_max, rng)?;
    if let Some(landing) = report.landing {
        out.deposit_at(landing.point)?;
    }
    Ok((out, report.dt_used))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::rng::{stream, Domain};
    use crate::transport::{ParticleState, WATER_DENSITY};

    fn projectile(v: f64, h0: f64) -> Particle {
        Particle::new(
            1,
            Vec3::new(0.0, 0.0, h0),
            Vec3::new(v, 0.0, 0.0),
            1e-4,
            WATER_DENSITY,
        )
    }

    fn fly(mut p: Particle, env: &Environment, jet: &JetField, tol: f64) -> (Particle, f64) {
        let mut rng = stream(0, Domain::Transport, p.id);
        let mut t = 0.0;
        while p.is_airborne() {
            let (q, dt) = step_adaptive(&p, env, jet, t, 0.01, tol, &mut rng).unwrap();
            p = q;
            t += dt;
        }
        (p, t)
    }

    #[test]
    fn ballistic_landing_matches_closed_form() {
        let env = Environment::ballistic();
        let (p, t) = fly(projectile(5.0, 1.64), &env, &JetField::still(), 1e-6);
        // closed form: t = sqrt(2 h0 / g), x = v t
        let t_exact = (2.0 * 1.64 / 9.81f64).sqrt();
        assert_abs_diff_eq!(t_exact, 0.57823, epsilon = 1e-5);
        assert_abs_diff_eq!(p.position.x, 5.0 * t_exact, epsilon = 1e-4);
        assert_abs_diff_eq!(p.position.x, 2.8911, epsilon = 1e-4);
        assert_abs_diff_eq!(t, t_exact, epsilon = 1e-5);
        assert_eq!(p.position.z, 0.0);
        assert_eq!(p.state(), ParticleState::Deposited);
    }

    #[test]
    fn deposited_particle_cannot_step() {
        let env = Environment::ballistic();
        let (p, t) = fly(projectile(1.0, 0.1), &env, &JetField::still(), 1e-6);
        let mut rng = stream(0, Domain::Transport, 1);
        assert!(step_adaptive(&p, &env, &JetField::still(), t, 0.01, 1e-6, &mut rng).is_err());
    }

    #[test]
    fn step_never_exceeds_dt_max() {
        let env = Environment::default();
        let jet = JetField::cough(Vec3::new(0.0, 0.0, 1.64), Vec3::X, 8.0);
        let mut p = projectile(5.0, 1.64);
        p.diameter = 6e-5;
        p.initial_diameter = 6e-5;
        let mut rng = stream(3, Domain::Transport, 1);
        let mut t = 0.0;
        for _ in 0..200 {
            let (q, dt) = step_adaptive(&p, &env, &jet, t, 0.004, 1e-6, &mut rng).unwrap();
            assert!(dt <= 0.004 && dt > 0.0);
            t += dt;
            p = q;
            if !p.is_airborne() {
                break;
            }
        }
    }

    #[test]
    fn underflow_reports_particle() {
        let env = Environment::default();
        let stepper = AdaptiveStepper {
            tol: 1e-30,
            dt_max: 0.01,
            dt_min: 1e-3,
        };
        let mut p = projectile(5.0, 1.64);
        p.id = 77;
        let mut rng = stream(0, Domain::Transport, 77);
        match stepper.step(&mut p, &env, &JetField::still(), 0.0, 0.01, &mut rng) {
            Err(Error::Stiffness {
                particle_id,
                diameter,
                ..
            }) => {
                assert_eq!(particle_id, 77);
                assert_eq!(diameter, 1e-4);
            }
            other => panic!("expected stiffness error, got {other:?}"),
        }
    }

    #[test]
    fn identical_seeds_identical_trajectories() {
        let env = Environment::default();
        let jet = JetField::cough(Vec3::new(0.0, 0.0, 1.64), Vec3::Y, 8.0);
        let mut p = Particle::new(
            4,
            Vec3::new(0.0, 0.0, 1.64),
            Vec3::new(0.0, 3.0, 0.0),
            6e-5,
            997.0,
        );
        p.initial_diameter = 6e-5;
        let run = || {
            let stepper = AdaptiveStepper::new(1e-6, 0.01).unwrap();
            let mut q = p.clone();
            let mut rng = stream(11, Domain::Transport, q.id);
            let mut hint = 0.01;
            let mut trace = Vec::new();
            for k in 0..300 {
                let t0 = k as f64 * 0.01;
                let out = stepper
                    .advance(&mut q, &env, &jet, t0, t0 + 0.01, &mut hint, &mut rng)
                    .unwrap();
                trace.push((
                    q.position.x.to_bits(),
                    q.position.y.to_bits(),
                    q.position.z.to_bits(),
                ));
                if matches!(out, WindowOutcome::Landed(_)) {
                    break;
                }
            }
            trace
        };
        assert_eq!(run(), run());
    }
}
