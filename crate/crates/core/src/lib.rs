//! Lagrangian Monte Carlo simulation of airborne droplet and aerosol
//! transmission, modelled as a multiuser molecular communication channel.
//!
//! Infected transmitters emit particle batches through stochastic
//! respiratory events ([`emission`]); particles are advanced under gravity,
//! drag, buoyancy, jet advection and eddy diffusion by an adaptive
//! Runge-Kutta integrator ([`transport`]); receivers absorb particles through
//! effective apertures and accumulate infectious doses ([`scenario`]).
//! Results are reduced to heat maps and range metrics by [`analysis`] and
//! serialized by [`io`].
//!
//! Particle stepping is data-parallel. With the default `parallel` feature
//! the engine uses rayon; without it every [`Execution`] mode runs
//! sequentially. Each particle owns a random stream derived from the global
//! seed and its id, so results do not depend on the degree of parallelism.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod emission;
pub mod error;
pub mod exec;
pub mod io;
pub mod rng;
pub mod scenario;
pub mod transport;
pub mod vec3;

pub use error::{Error, Result};
pub use exec::Execution;
pub use vec3::Vec3;
