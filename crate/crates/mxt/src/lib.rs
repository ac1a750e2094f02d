//! Geometric-optics inverse problems for isotropic Maxwell media.
//!
//! The chain runs from boundary symbols to boundary jets of (eps, mu, sigma),
//! from lens data to the wave speed, from attenuation to sigma/eps through a
//! geodesic X-ray transform, and from transverse ray data to eps.

pub mod amplitude;
pub mod eikonal;
pub mod error;
pub mod geometry;
pub mod io;
pub mod media;
pub mod reconstruct;
pub mod transforms;

pub use error::{MxtError, Result};
