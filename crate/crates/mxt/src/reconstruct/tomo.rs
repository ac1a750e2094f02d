use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{MxtError, Result};
use crate::geometry::{jacobi_fields, trace_geodesic, JacobiInit, LensRecord, Ray, TraceConfig};
use crate::media::{tangent_frame, Domain, Field, Slowness, SpeedModel, SplineBasis, SplineField, V3};
use crate::transforms::{absolute_weight, cgls_tikhonov, LinearMap, NodeSet, NodeSpec, Regularizer, SparseRows};

/// Two-point ray bending settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootConfig {
    pub trace: TraceConfig,
    /// Exit-point tolerance (Euclidean).
    pub tol: f64,
    /// Looser tolerance accepted once Newton stalls on integrator noise.
    pub accept: f64,
    pub max_iter: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig { trace: TraceConfig::default(), tol: 1e-9, accept: 1e-6, max_iter: 16 }
    }
}

/// Finds the geodesic from boundary point `x_in` to boundary point `x_out`
/// by Newton iteration on the launch direction, starting from `d0`. Exit
/// derivatives come from Jacobi fields projected along the ray onto the
/// boundary.
pub fn shoot(speed: &dyn SpeedModel, domain: &Domain, x_in: &V3, x_out: &V3, d0: &V3, cfg: &ShootConfig) -> Result<Ray> {
    let mut d = d0.normalize();
    let mut best: Option<(f64, Ray)> = None;
    let mut stall = 0;
    for _ in 0..cfg.max_iter {
        let ray = trace_geodesic(speed, domain, x_in, &d, &cfg.trace)?;
        let (xe, ve) = ray.exit.ok_or(MxtError::Trapped)?;
        let res = xe - x_out;
        let r = res.norm();
        if r < cfg.tol {
            return Ok(ray);
        }
        if best.as_ref().is_none_or(|b| r < b.0) {
            best = Some((r, ray.clone()));
            stall = 0;
        } else {
            stall += 1;
            if stall >= 3 {
                break;
            }
        }
        let c0 = speed.speed(x_in).v;
        let (e1, e2) = tangent_frame(&d);
        let init = JacobiInit { dx: [V3::zeros(); 2], dp: [e1 / c0, e2 / c0] };
        let jf = jacobi_fields(speed, &ray, &init);
        let last = jf.last().expect("ray has samples");
        let nu = domain.outward_normal(&xe);
        let proj = |dx: &V3| dx - ve * (nu.dot(dx) / nu.dot(&ve));
        let (j1, j2) = (proj(&last[0]), proj(&last[2]));
        // 3x2 least squares through the normal equations
        let (a11, a12, a22) = (j1.dot(&j1), j1.dot(&j2), j2.dot(&j2));
        let (b1, b2) = (-j1.dot(&res), -j2.dot(&res));
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 1e-300) {
            return Err(MxtError::Caustic(ray.length()));
        }
        let (mut s1, mut s2) = ((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
        let step = (s1 * s1 + s2 * s2).sqrt();
        if step > 0.2 {
            s1 *= 0.2 / step;
            s2 *= 0.2 / step;
        }
        d = (d + e1 * s1 + e2 * s2).normalize();
    }
    match best {
        Some((r, ray)) if r < cfg.accept => Ok(ray),
        _ => Err(MxtError::Inconsistent(format!("two-point shooting did not reach {x_out:?}"))),
    }
}

/// Gauss-Newton travel-time tomography settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TomoConfig {
    /// Outer iterations per shell.
    pub outer: usize,
    /// Scale-free gradient-Tikhonov weight.
    pub reg: f64,
    pub inner_iters: usize,
    pub inner_tol: f64,
    /// Shell depths (in the radial foliation parameter), outside in.
    pub shells: Vec<f64>,
    /// Stop a shell once an accepted step keeps more than this fraction of
    /// the objective.
    pub min_gain: f64,
    pub nodes: NodeSpec,
    pub shoot: ShootConfig,
}

impl Default for TomoConfig {
    fn default() -> Self {
        TomoConfig {
            outer: 6,
            reg: 1e-3,
            inner_iters: 100,
            inner_tol: 1e-6,
            shells: vec![1.0],
            min_gain: 0.9,
            nodes: NodeSpec { max_len: 0.04, gauss: 2 },
            shoot: ShootConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TomoReport {
    /// Regularized objective after every accepted step (first entry: start).
    pub objective: Vec<f64>,
    /// RMS travel-time misfit at the same points.
    pub rms: Vec<f64>,
    /// Rays that could not be connected in the final model.
    pub dropped: usize,
    /// RMS mismatch of predicted and measured exit directions (diagnostic).
    pub exit_direction_rms: f64,
    pub iterations: usize,
    /// Index into `objective` where each shell starts.
    pub shell_starts: Vec<usize>,
    /// Rays used by each shell.
    pub shell_rays: Vec<usize>,
    pub warnings: Vec<String>,
}

struct Eval {
    rays: Vec<Option<Ray>>,
    misfit: Vec<f64>,
    rms: f64,
    objective: f64,
}

/// Rays lying entirely in |x - center| >= `rmin` (missing rays excluded).
pub fn shell_members(rays: &[Option<Ray>], center: &V3, rmin: f64) -> Vec<bool> {
    rays.iter()
        .map(|r| r.as_ref().is_some_and(|r| r.samples.iter().all(|s| (s.x - center).norm() >= rmin - 1e-12)))
        .collect()
}

fn slowness_model(basis: &SplineBasis, n: &[f64]) -> Slowness {
    Slowness(Field::Spline(Arc::new(SplineField { basis: basis.clone(), coefs: n.to_vec() })))
}

/// Recovers the slowness n = 1/c from lens records (entry point and
/// direction, exit point and direction, travel time).
///
/// Each record is reconnected by two-point shooting in the current model;
/// travel-time residuals are linearized with Fermat's principle
/// (d tau = int dn dl) and solved with CGLS under a gradient penalty,
/// followed by a backtracking line search on the regularized objective.
/// Shells restrict, outside in, the rays to those staying within the shell
/// depth and the unknowns to coefficients reachable by them.
pub fn traveltime_tomography(
    lens: &[LensRecord],
    domain: &Domain,
    basis: &SplineBasis,
    n0: &[f64],
    pinned: Option<&[bool]>,
    cfg: &TomoConfig,
) -> Result<(SplineField, Vec<Option<Ray>>, TomoReport)> {
    let reg = Regularizer::from_basis(basis);
    let meas: Vec<f64> = lens.iter().map(|r| r.tau).collect();
    let (center, radius) = (domain.center(), domain.radius());
    let mut report = TomoReport::default();
    let mut n = n0.to_vec();
    let mut dirs: Vec<V3> = lens.iter().map(|r| r.v_in).collect();
    let h = basis.axes.iter().filter(|a| a.n > 1).map(|a| a.spacing).fold(0.0, f64::max);

    let objective = |rays: &[Option<Ray>], misfit: &[f64], n: &[f64], lam: f64| -> (f64, f64) {
        let count = rays.iter().filter(|r| r.is_some()).count().max(1) as f64;
        let ss: f64 = misfit.iter().map(|v| v * v).sum();
        let dn: f64 = reg.apply(n).iter().map(|v| v * v).sum();
        ((ss + lam * dn) / count, (ss / count).sqrt())
    };
    let evaluate = |n: &[f64], dirs: &[V3], active: &[bool], lam: f64| -> Eval {
        let speed = slowness_model(basis, n);
        let rays: Vec<Option<Ray>> = (0..lens.len())
            .into_par_iter()
            .map(|k| {
                if !active[k] {
                    return None;
                }
                shoot(&speed, domain, &lens[k].x_in, &lens[k].x_out, &dirs[k], &cfg.shoot).ok()
            })
            .collect();
        let misfit: Vec<f64> = rays
            .iter()
            .enumerate()
            .map(|(k, r)| r.as_ref().map_or(0.0, |r| r.length() - meas[k]))
            .collect();
        let (objective, rms) = objective(&rays, &misfit, n, lam);
        Eval { rays, misfit, rms, objective }
    };

    let all = vec![true; lens.len()];
    let mut lam = None;
    for (si, &q) in cfg.shells.iter().enumerate() {
        let rmin = radius * (1.0 - q);
        // rays are assigned to a shell by their path in the current model
        let mut cur = evaluate(&n, &dirs, &all, 0.0);
        let active = shell_members(&cur.rays, &center, rmin);
        report.shell_rays.push(active.iter().filter(|&&a| a).count());
        let free: Vec<bool> = (0..basis.ncoef())
            .map(|k| pinned.is_none_or(|p| p[k]) && (basis.coef_position(k) - center).norm() >= rmin - 2.0 * h)
            .collect();
        if !active.iter().any(|&a| a) {
            report.warnings.push(format!("shell {si} (depth {q}) has no rays"));
            continue;
        }
        for k in 0..lens.len() {
            if !active[k] {
                cur.rays[k] = None;
                cur.misfit[k] = 0.0;
            }
        }
        report.shell_starts.push(report.objective.len());
        let mut started = false;
        for _ in 0..cfg.outer {
            let speed = slowness_model(basis, &n);
            let rays: Vec<Ray> = cur.rays.iter().map(|r| r.clone().unwrap_or_else(empty_ray)).collect();
            let nodes = NodeSet::build(&speed, &rays, None, &cfg.nodes);
            // Fermat rows: dl = c ds
            let g = SparseRows::assemble(nodes.nrays(), 1, basis.ncoef(), |r, rows| {
                for i in nodes.range(r) {
                    let st = basis.stencil(&nodes.x[i]);
                    let w = nodes.w[i] * speed.speed(&nodes.x[i]).v;
                    basis.visit_value(&st, |k, b| rows[0].push((k as u32, w * b)));
                }
            });
            let apply = |x: &[f64]| g.apply(x);
            let adjoint = |y: &[f64]| g.adjoint(y);
            let map = LinearMap { ncols: basis.ncoef(), apply: &apply, adjoint: &adjoint };
            let l = *lam.get_or_insert_with(|| absolute_weight(&map, &reg, Some(&free), cfg.reg));
            if !started {
                let (o, rms) = objective(&cur.rays, &cur.misfit, &n, l);
                report.objective.push(o);
                report.rms.push(rms);
                started = true;
            }
            let gn = g.apply(&n);
            let b: Vec<f64> = (0..lens.len()).map(|k| if cur.rays[k].is_some() { gn[k] - cur.misfit[k] } else { 0.0 }).collect();
            let (x, _) = cgls_tikhonov(&map, &b, &reg, l, &n, Some(&free), cfg.inner_iters, cfg.inner_tol);
            let base = *report.objective.last().expect("start recorded");
            let mut accepted = None;
            let mut alpha = 1.0;
            for _ in 0..4 {
                let trial: Vec<f64> = n.iter().zip(&x).map(|(a, b)| a + alpha * (b - a)).collect();
                if trial.iter().zip(&free).any(|(v, &f)| f && *v <= 0.0) {
                    alpha *= 0.5;
                    continue;
                }
                let e = evaluate(&trial, &dirs, &active, l);
                if e.objective < base {
                    accepted = Some((trial, e));
                    break;
                }
                alpha *= 0.5;
            }
            report.iterations += 1;
            let Some((trial, e)) = accepted else {
                break;
            };
            n = trial;
            for (k, r) in e.rays.iter().enumerate() {
                if let Some(r) = r {
                    dirs[k] = r.first().v;
                }
            }
            report.objective.push(e.objective);
            report.rms.push(e.rms);
            let gain = e.objective / base;
            cur = e;
            if gain > cfg.min_gain {
                break;
            }
        }
    }
    let fin = evaluate(&n, &dirs, &all, 0.0);
    report.dropped = fin.rays.iter().filter(|r| r.is_none()).count();
    let mut ss = 0.0;
    let mut cnt = 0;
    for (k, r) in fin.rays.iter().enumerate() {
        if let Some(r) = r {
            let (_, v) = r.exit.expect("shot rays exit");
            ss += (v.normalize() - lens[k].v_out.normalize()).norm_squared();
            cnt += 1;
        }
    }
    report.exit_direction_rms = (ss / cnt.max(1) as f64).sqrt();
    if report.dropped > 0 {
        report.warnings.push(format!("{} rays could not be connected", report.dropped));
    }
    Ok((SplineField { basis: basis.clone(), coefs: n }, fin.rays, report))
}

fn empty_ray() -> Ray {
    use crate::geometry::{RayStatus, Sample};
    let s = Sample { s: 0.0, x: V3::zeros(), v: V3::x(), p: V3::x() };
    Ray { samples: vec![s], steps: vec![], method: crate::geometry::Method::Dp45, entry: (V3::zeros(), V3::x()), exit: None, status: RayStatus::Truncated }
}

