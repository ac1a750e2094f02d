use super::ode::{error_norm, rk_step, Method};
use crate::error::{MxtError, Result};
use crate::media::{Domain, Jet, SpeedModel, V3};

/// Integrator settings for ray tracing.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    /// Step for `Method::Rk4`.
    pub h_fixed: f64,
    pub max_steps: usize,
    /// Metric-length budget; rays still inside beyond it are trapped.
    pub s_max: f64,
    pub grazing: f64,
    pub exit_tol: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            method: Method::Dp45,
            rtol: 1e-9,
            atol: 1e-9,
            h_init: 1e-2,
            h_max: 0.1,
            h_fixed: 1e-2,
            max_steps: 100_000,
            s_max: 50.0,
            grazing: 1e-3,
            exit_tol: 1e-10,
        }
    }
}

impl TraceConfig {
    pub fn rk4(h: f64) -> Self {
        TraceConfig { method: Method::Rk4, h_fixed: h, ..Default::default() }
    }
}

/// One point of a traced ray. `v = dx/ds` is g-unit (Euclidean length c),
/// `p` is the momentum covector with c |p| = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub s: f64,
    pub x: V3,
    pub v: V3,
    pub p: V3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayStatus {
    Exited,
    Trapped,
    Truncated,
}

/// A sampled geodesic of g = c^-2 g_E parameterized by g-arclength.
#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    pub samples: Vec<Sample>,
    /// Step sizes; `samples[k + 1].s = samples[k].s + steps[k]`.
    pub steps: Vec<f64>,
    pub method: Method,
    pub entry: (V3, V3),
    pub exit: Option<(V3, V3)>,
    pub status: RayStatus,
}

impl Ray {
    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.s)
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("ray has at least one sample")
    }
}

/// Hamiltonian flow of H = c^2 |p|^2 / 2 given the speed jet at x.
#[inline]
pub fn ray_rhs_jet(c: &Jet, p: &V3) -> (V3, V3) {
    let p2 = p.norm_squared();
    (p * (c.v * c.v), c.g * (-c.v * p2))
}

#[inline]
pub(crate) fn split6(y: &[f64]) -> (V3, V3) {
    (V3::new(y[0], y[1], y[2]), V3::new(y[3], y[4], y[5]))
}

#[inline]
pub(crate) fn put(y: &mut [f64], at: usize, v: &V3) {
    y[at] = v.x;
    y[at + 1] = v.y;
    y[at + 2] = v.z;
}

pub(crate) fn ray_rhs(speed: &dyn SpeedModel, y: &[f64; 6]) -> [f64; 6] {
    let (x, p) = split6(y);
    let (dx, dp) = ray_rhs_jet(&speed.speed(&x), &p);
    let mut out = [0.0; 6];
    put(&mut out, 0, &dx);
    put(&mut out, 3, &dp);
    out
}

fn sample_at(speed: &dyn SpeedModel, s: f64, y: &[f64; 6]) -> Sample {
    let (x, p) = split6(y);
    let c = speed.speed(&x).v;
    Sample { s, x, v: p * (c * c), p }
}

/// Checks that (x0, dir) is an admissible start; returns the unit direction.
pub fn check_entry(domain: &Domain, x0: &V3, dir: &V3, grazing: f64) -> Result<V3> {
    let n = dir.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(MxtError::Precondition("zero launch direction".into()));
    }
    let d = dir / n;
    let sd = domain.signed_distance(x0);
    if sd > 1e-8 {
        return Err(MxtError::Precondition(format!("start point outside the domain (distance {sd:.3e})")));
    }
    if sd.abs() <= 1e-8 {
        let cosang = d.dot(&domain.outward_normal(x0));
        if cosang.abs() < grazing {
            return Err(MxtError::Grazing(cosang.abs()));
        }
        if cosang > 0.0 {
            return Err(MxtError::Precondition("launch direction points out of the domain".into()));
        }
    }
    Ok(d)
}

/// Traces the geodesic through x0 in direction `dir` until it leaves the
/// domain, locating the exit by bisection on the final step size.
pub fn trace_geodesic(speed: &dyn SpeedModel, domain: &Domain, x0: &V3, dir: &V3, cfg: &TraceConfig) -> Result<Ray> {
    let d = check_entry(domain, x0, dir, cfg.grazing)?;
    let c0 = speed.speed(x0).v;
    let p0 = d / c0;
    let f = |y: &[f64; 6]| ray_rhs(speed, y);
    let mut y = [x0.x, x0.y, x0.z, p0.x, p0.y, p0.z];
    let mut samples = vec![sample_at(speed, 0.0, &y)];
    let mut steps = Vec::new();
    let mut s = 0.0;
    let mut h = match cfg.method {
        Method::Dp45 => cfg.h_init,
        Method::Rk4 => cfg.h_fixed,
    };
    let mut status = RayStatus::Truncated;
    let mut exit = None;
    let mut attempts = 0;
    while attempts < cfg.max_steps {
        attempts += 1;
        if s > cfg.s_max {
            status = RayStatus::Trapped;
            break;
        }
        let (yn, factor) = match cfg.method {
            Method::Rk4 => (rk_step(&f, &y, h, Method::Rk4, false).0, 1.0),
            Method::Dp45 => {
                h = h.min(cfg.h_max);
                let (yn, err) = rk_step(&f, &y, h, Method::Dp45, true);
                let en = error_norm(&err.unwrap(), &y, &yn, 6, cfg.rtol, cfg.atol);
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                if en > 1.0 {
                    h *= fac;
                    continue;
                }
                (yn, fac)
            }
        };
        let xn = V3::new(yn[0], yn[1], yn[2]);
        if domain.signed_distance(&xn) > 0.0 {
            let (mut lo, mut hi) = (0.0, h);
            let mut yhi = yn;
            while hi - lo > cfg.exit_tol {
                let mid = 0.5 * (lo + hi);
                let ym = rk_step(&f, &y, mid, cfg.method, false).0;
                if domain.signed_distance(&V3::new(ym[0], ym[1], ym[2])) > 0.0 {
                    hi = mid;
                    yhi = ym;
                } else {
                    lo = mid;
                }
            }
            s += hi;
            steps.push(hi);
            let smp = sample_at(speed, s, &yhi);
            exit = Some((smp.x, smp.v));
            samples.push(smp);
            status = RayStatus::Exited;
            break;
        }
        s += h;
        steps.push(h);
        y = yn;
        samples.push(sample_at(speed, s, &y));
        h *= factor;
    }
    Ok(Ray { samples, steps, method: cfg.method, entry: (*x0, d * c0), exit, status })
}

/// Integrates the ray ODE over a fixed metric length without boundary checks.
pub fn trace_segment(speed: &dyn SpeedModel, x0: &V3, dir: &V3, length: f64, nsteps: usize, method: Method) -> Ray {
    let d = dir.normalize();
    let c0 = speed.speed(x0).v;
    let p0 = d / c0;
    let f = |y: &[f64; 6]| ray_rhs(speed, y);
    let mut y = [x0.x, x0.y, x0.z, p0.x, p0.y, p0.z];
    let h = length / nsteps as f64;
    let mut samples = vec![sample_at(speed, 0.0, &y)];
    for k in 0..nsteps {
        y = rk_step(&f, &y, h, method, false).0;
        samples.push(sample_at(speed, h * (k + 1) as f64, &y));
    }
    Ray {
        samples,
        steps: vec![h; nsteps],
        method,
        entry: (*x0, d * c0),
        exit: None,
        status: RayStatus::Truncated,
    }
}

/// Replays an augmented system along the step sequence of `ray`. The first six
/// state components must be (x, p) of the ray start. `visit` receives the
/// sample index and state at every sample.
pub fn replay<const N: usize, F>(ray: &Ray, y0: [f64; N], f: F, mut visit: impl FnMut(usize, &[f64; N]))
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut y = y0;
    visit(0, &y);
    for (k, h) in ray.steps.iter().enumerate() {
        y = rk_step(&f, &y, *h, ray.method, false).0;
        visit(k + 1, &y);
    }
}

/// Initial (x, p) block of a ray as a state prefix.
pub(crate) fn head(ray: &Ray) -> [f64; 6] {
    let s = ray.first();
    [s.x.x, s.x.y, s.x.z, s.p.x, s.p.y, s.p.z]
}
