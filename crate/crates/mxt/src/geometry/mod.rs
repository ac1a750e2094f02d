//! Geodesics of the conformal metric g = c^-2 g_E, the lens relation, parallel
//! polarization frames and geometric spreading.

pub mod ode;
mod ray;
mod transport;

pub use ode::Method;
pub use ray::{check_entry, ray_rhs_jet, replay, trace_geodesic, trace_segment, Ray, RayStatus, Sample, TraceConfig};
pub use transport::{
    frame_seed, g_dot, integrate_along, jacobi_fields, jacobi_rhs, parallel_transport, signed_area, spreading_j,
    transport_rhs, zeta_from, FrameTransport, JacobiInit,
};
pub(crate) use ray::{head, put, split6};
pub(crate) use transport::{area_rate, jacobi_full_rhs, jacobi_state, JAC_N};

use crate::error::{MxtError, Result};
use crate::media::{Domain, SpeedModel, V3};

/// Entry and exit data of one ray; directions are g-unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LensRecord {
    pub x_in: V3,
    pub v_in: V3,
    pub x_out: V3,
    pub v_out: V3,
    pub tau: f64,
}

impl LensRecord {
    pub fn from_ray(ray: &Ray) -> Result<Self> {
        match (ray.status, ray.exit) {
            (RayStatus::Exited, Some((x_out, v_out))) => {
                Ok(LensRecord { x_in: ray.entry.0, v_in: ray.entry.1, x_out, v_out, tau: ray.length() })
            }
            _ => Err(MxtError::Trapped),
        }
    }
}

/// Exit time and scattering relation for an inward boundary direction.
pub fn lens_relation(speed: &dyn SpeedModel, domain: &Domain, x: &V3, v: &V3, cfg: &TraceConfig) -> Result<LensRecord> {
    LensRecord::from_ray(&trace_geodesic(speed, domain, x, v, cfg)?)
}
