use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{trace_geodesic, Ray, TraceConfig};
use crate::media::{tangent_frame, Domain, SpeedModel, V3};

/// Per-ray measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct RayDatum {
    pub id: usize,
    pub tau: f64,
    /// -2 log I, the X-ray datum of sigma/eps.
    pub log_attenuation: f64,
    /// Differential transverse data for eta, zeta and the mixed polarization.
    pub trt: [f64; 3],
    pub seed: V3,
}

/// Entry points and directions of a ray family with frame seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionSet {
    pub entries: Vec<(V3, V3)>,
    pub seeds: Vec<V3>,
}

impl AcquisitionSet {
    /// Planar fan in the x3 = center plane: `nsrc` sources equally spaced on
    /// the boundary circle, `ndir` directions within `max_angle` of the
    /// inward normal. Seeds point along e3, which stays parallel for media
    /// independent of x3.
    pub fn fan_2d(domain: &Domain, nsrc: usize, ndir: usize, max_angle: f64) -> Self {
        let (c, r) = (domain.center(), domain.radius());
        let mut entries = Vec::with_capacity(nsrc * ndir);
        for i in 0..nsrc {
            let th = 2.0 * PI * (i as f64 + 0.5) / nsrc as f64;
            let n = V3::new(th.cos(), th.sin(), 0.0);
            let t = V3::new(-th.sin(), th.cos(), 0.0);
            for j in 0..ndir {
                let a = max_angle * (-1.0 + (2 * j + 1) as f64 / ndir as f64);
                entries.push((c + n * r, -n * a.cos() + t * a.sin()));
            }
        }
        let seeds = vec![V3::z(); entries.len()];
        AcquisitionSet { entries, seeds }
    }

    /// Sources on a Fibonacci sphere, each with `ndir` directions spread over
    /// the cap of half-angle `max_angle` around the inward normal.
    pub fn fan_3d(domain: &Domain, nsrc: usize, ndir: usize, max_angle: f64) -> Self {
        let (c, r) = (domain.center(), domain.radius());
        let golden = PI * (3.0 - 5f64.sqrt());
        let mut entries = Vec::with_capacity(nsrc * ndir);
        let mut seeds = Vec::with_capacity(nsrc * ndir);
        for i in 0..nsrc {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / nsrc as f64;
            let rho = (1.0 - z * z).sqrt();
            let ph = golden * i as f64;
            let n = V3::new(rho * ph.cos(), rho * ph.sin(), z);
            let (t1, t2) = tangent_frame(&n);
            let cmin = max_angle.cos();
            for j in 0..ndir {
                let cz = 1.0 - (1.0 - cmin) * (j as f64 + 0.5) / ndir as f64;
                let sz = (1.0 - cz * cz).sqrt();
                let az = golden * j as f64;
                let d = -n * cz + (t1 * az.cos() + t2 * az.sin()) * sz;
                entries.push((c + n * r, d));
                seeds.push(t1 * (-az.sin()) + t2 * az.cos());
            }
        }
        AcquisitionSet { entries, seeds }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Traces every ray of an acquisition in parallel; order is preserved.
pub fn trace_all(speed: &dyn SpeedModel, domain: &Domain, acq: &AcquisitionSet, cfg: &TraceConfig) -> Vec<Result<Ray>> {
    acq.entries.par_iter().map(|(x, d)| trace_geodesic(speed, domain, x, d, cfg)).collect()
}
