use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::{Mode, RunConfig};
use super::dataset::{Dataset, Metadata, FORMAT_VERSION};
use crate::amplitude::{boundary_symbol_s0, boundary_symbol_s1};
use crate::error::{MxtError, Result};
use crate::geometry::{frame_seed, integrate_along, parallel_transport, LensRecord, Ray, RayStatus};
use crate::media::{check_foliation_convexity, Domain, Field, FoliationDesc, MediumSpec, ScalarField, SpeedModel, V3};
use crate::reconstruct::{chebyshev_rho, BoundarySymbolSample};
use crate::transforms::{trace_all, trt_differential, AcquisitionSet, NodeSet, NodeSpec};

/// Boundary sample points: a circle in x3 = 0 or a Fibonacci sphere.
pub fn boundary_points(domain: &Domain, mode: Mode, n: usize) -> Vec<V3> {
    let (c, r) = (domain.center(), domain.radius());
    (0..n)
        .map(|k| match mode {
            Mode::Slice => {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
                c + V3::new(t.cos(), t.sin(), 0.0) * r
            }
            Mode::Volume => {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                let rho = (1.0 - z * z).sqrt();
                let ph = std::f64::consts::PI * (3.0 - 5f64.sqrt()) * k as f64;
                c + V3::new(rho * ph.cos(), rho * ph.sin(), z) * r
            }
        })
        .collect()
}

pub fn acquisition(domain: &Domain, cfg: &RunConfig) -> AcquisitionSet {
    match cfg.mode {
        Mode::Slice => AcquisitionSet::fan_2d(domain, cfg.sources, cfg.directions, cfg.max_angle),
        Mode::Volume => AcquisitionSet::fan_3d(domain, cfg.sources, cfg.directions, cfg.max_angle),
    }
}

fn add_noise(rng: &mut ChaCha8Rng, v: &mut [f64], level: f64, multiplicative: bool) {
    if level == 0.0 {
        return;
    }
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt();
    for x in v.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        if multiplicative {
            *x *= 1.0 + level * z;
        } else {
            *x += level * rms * z;
        }
    }
}

/// Traces the acquisition through the ground truth `m` and fills every
/// table: closed-form boundary symbols from the true boundary jets, lens
/// records, -2 log I and differential transverse data relative to the
/// constant reference permittivity. Noise is Gaussian, multiplicative on
/// travel times and attenuation, additive (scaled by the table RMS) on
/// symbols and transverse data.
pub fn gen_synthetic(m: &MediumSpec, cfg: &RunConfig) -> Result<Dataset> {
    cfg.validate()?;
    let domain = Domain::unit_ball();
    let mut warnings = Vec::new();
    let fol = FoliationDesc::radial(domain.clone(), 2);
    for &q in cfg.shells.iter().filter(|&&q| q < 1.0) {
        let rep = check_foliation_convexity(m, &fol, q, 8)?;
        if rep.min_eigenvalue.is_some_and(|v| v <= 0.0) {
            warnings.push(format!("level {q} is not strictly convex"));
        }
    }

    let acq = acquisition(&domain, cfg);
    let traced = trace_all(m, &domain, &acq, &cfg.trace);
    let ok: Vec<(usize, Ray)> = traced.into_iter().enumerate().filter_map(|(k, r)| r.ok().filter(|r| r.status == RayStatus::Exited).map(|r| (k, r))).collect();
    let lost = acq.len() - ok.len();
    if lost * 10 > acq.len() {
        return Err(MxtError::Acquisition(format!("{lost} of {} rays trapped or grazing", acq.len())));
    }
    if lost > 0 {
        warnings.push(format!("{lost} rays trapped or grazing"));
    }
    let rays: Vec<Ray> = ok.iter().map(|r| r.1.clone()).collect();
    let mut lens: Vec<LensRecord> = rays.iter().map(LensRecord::from_ray).collect::<Result<_>>()?;
    let mut att: Vec<f64> = rays
        .par_iter()
        .map(|r| integrate_along(m, r, |x| m.sigma_over_eps(x)).last().copied().unwrap_or(0.0))
        .collect();
    let frames = ok
        .par_iter()
        .map(|(k, r)| {
            let c = m.speed(&r.first().x).v;
            parallel_transport(m, r, &frame_seed(c, &r.first().v, &acq.seeds[*k]))
        })
        .collect::<Result<Vec<_>>>()?;
    let nodes = NodeSet::build(m, &rays, Some(&frames), &NodeSpec { max_len: 0.5 * cfg.node_len, gauss: 3 });
    let u = Field::Ln(Box::new(m.epsilon.clone())).scaled(0.5);
    let uref = Field::Constant(0.5 * cfg.eps_ref.ln());
    let mut trt = trt_differential(m, &u, &uref, &nodes)?;

    let mut symbols = Vec::new();
    for y in boundary_points(&domain, cfg.mode, cfg.boundary_points) {
        let nu = domain.outward_normal(&y);
        let (e, mu) = (m.epsilon.jet(&y), m.mu.jet(&y));
        let sigma = m.sigma.value(&y);
        for rho in chebyshev_rho(e.v, mu.v, cfg.rho_samples) {
            symbols.push(BoundarySymbolSample {
                x0: y,
                rho,
                s0: boundary_symbol_s0(e.v, mu.v, rho)?,
                s1: boundary_symbol_s1(e.v, mu.v, sigma, e.g.dot(&nu), mu.g.dot(&nu), rho)?,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tau: Vec<f64> = lens.iter().map(|l| l.tau).collect();
    add_noise(&mut rng, &mut tau, cfg.noise, true);
    for (l, t) in lens.iter_mut().zip(&tau) {
        l.tau = *t;
    }
    add_noise(&mut rng, &mut att, cfg.noise, true);
    let mut s0: Vec<f64> = symbols.iter().map(|s| s.s0).collect();
    let mut s1: Vec<f64> = symbols.iter().map(|s| s.s1).collect();
    add_noise(&mut rng, &mut s0, cfg.noise, false);
    add_noise(&mut rng, &mut s1, cfg.noise, false);
    for (k, s) in symbols.iter_mut().enumerate() {
        s.s0 = s0[k];
        s.s1 = s1[k];
    }
    let mut flat: Vec<f64> = trt.iter().flatten().copied().collect();
    add_noise(&mut rng, &mut flat, cfg.noise, false);
    for (k, d) in trt.iter_mut().enumerate() {
        d.copy_from_slice(&flat[3 * k..3 * k + 3]);
    }

    let ids: Vec<usize> = ok.iter().map(|r| r.0).collect();
    let max_time = rays.iter().map(|r| r.length()).fold(0.0, f64::max);
    Ok(Dataset {
        acquisition: acq,
        symbols,
        lens: ids.iter().copied().zip(lens).collect(),
        attenuation: ids.iter().copied().zip(att).collect(),
        trt: ids.iter().copied().zip(trt).collect(),
        meta: Metadata {
            version: FORMAT_VERSION.into(),
            phantom: if cfg.field_files.is_some() { "custom".into() } else { cfg.phantom.clone() },
            mode: cfg.mode,
            noise: cfg.noise,
            seed: cfg.seed,
            max_time,
            levels: cfg.shells.clone(),
            eps_ref: cfg.eps_ref,
            warnings,
        },
    })
}
