//! Quantities carried along a traced ray: the parallel polarization frame,
//! Jacobi fields with the spreading factor J, and cumulative line integrals.

use super::ray::{head, put, ray_rhs_jet, replay, split6, Ray, Sample};
use crate::error::{MxtError, Result};
use crate::media::{Jet, M3, SpeedModel, V3};

/// Parallel frame along a ray: `eta` and `zeta` are g-unit vectors
/// (Euclidean length c) orthogonal to the tangent and to each other, with
/// (tangent, eta, zeta) right-handed.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTransport {
    pub eta: Vec<V3>,
    pub zeta: Vec<V3>,
}

#[inline]
fn v3(y: &[f64], at: usize) -> V3 {
    V3::new(y[at], y[at + 1], y[at + 2])
}

/// Levi-Civita transport of a vector W in g = e^{2f} g_E, f = -log c, along
/// velocity `xd`.
#[inline]
pub fn transport_rhs(c: &Jet, xd: &V3, w: &V3) -> V3 {
    let gf = -c.g / c.v;
    -(xd * w.dot(&gf) + w * xd.dot(&gf) - gf * xd.dot(w))
}

/// g-inner product c^-2 <a, b>.
#[inline]
pub fn g_dot(c: f64, a: &V3, b: &V3) -> f64 {
    a.dot(b) / (c * c)
}

/// Second frame vector c (t x eta) / |t x eta| completing (t, eta).
pub fn zeta_from(c: f64, v: &V3, eta: &V3) -> V3 {
    v.normalize().cross(&eta.normalize()) * c
}

/// A g-unit vector orthogonal to `v` built from a seed direction.
pub fn frame_seed(c: f64, v: &V3, seed: &V3) -> V3 {
    let t = v.normalize();
    let mut e = seed - t * t.dot(seed);
    if e.norm() < 1e-6 {
        let alt = if t.x.abs() < 0.9 { V3::x() } else { V3::y() };
        e = alt - t * t.dot(&alt);
    }
    e.normalize() * c
}

pub fn parallel_transport(speed: &dyn SpeedModel, ray: &Ray, eta0: &V3) -> Result<FrameTransport> {
    let s0 = ray.first();
    let c0 = speed.speed(&s0.x).v;
    let norm_err = (g_dot(c0, eta0, eta0) - 1.0).abs();
    let orth_err = g_dot(c0, eta0, &s0.v).abs();
    if norm_err > 1e-8 || orth_err > 1e-8 {
        return Err(MxtError::Precondition(format!(
            "initial polarization must be g-unit and g-orthogonal to the tangent (norm err {norm_err:.2e}, orth err {orth_err:.2e})"
        )));
    }
    let zeta0 = zeta_from(c0, &s0.v, eta0);
    let mut y0 = [0.0; 12];
    y0[..6].copy_from_slice(&head(ray));
    put(&mut y0, 6, eta0);
    put(&mut y0, 9, &zeta0);
    let f = |y: &[f64; 12]| {
        let (x, p) = split6(y);
        let c = speed.speed(&x);
        let (dx, dp) = ray_rhs_jet(&c, &p);
        let mut out = [0.0; 12];
        put(&mut out, 0, &dx);
        put(&mut out, 3, &dp);
        put(&mut out, 6, &transport_rhs(&c, &dx, &v3(y, 6)));
        put(&mut out, 9, &transport_rhs(&c, &dx, &v3(y, 9)));
        out
    };
    let n = ray.samples.len();
    let mut eta = Vec::with_capacity(n);
    let mut zeta = Vec::with_capacity(n);
    replay(ray, y0, f, |_, y| {
        eta.push(v3(y, 6));
        zeta.push(v3(y, 9));
    });
    Ok(FrameTransport { eta, zeta })
}

/// Initial data of two Jacobi fields (variations of x and p).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiInit {
    pub dx: [V3; 2],
    pub dp: [V3; 2],
}

impl JacobiInit {
    /// Wavefront data of a phase with Hessian `hess` at the ray start:
    /// Euclidean-unit transverse displacements, dp = hess dx.
    pub fn plane_wave(start: &Sample, hess: &M3) -> Self {
        let t = start.v.normalize();
        let (e1, e2) = crate::media::tangent_frame(&t);
        JacobiInit { dx: [e1, e2], dp: [hess * e1, hess * e2] }
    }

    /// Point source at the ray start with unit angular spread.
    pub fn point_source(start: &Sample, c0: f64) -> Self {
        let t = start.v.normalize();
        let (e1, e2) = crate::media::tangent_frame(&t);
        JacobiInit { dx: [V3::zeros(); 2], dp: [e1 / c0, e2 / c0] }
    }
}

/// Linearized ray equations.
#[inline]
pub fn jacobi_rhs(c: &Jet, p: &V3, dx: &V3, dp: &V3) -> (V3, V3) {
    let gc = c.g.dot(dx);
    let ddx = p * (2.0 * c.v * gc) + dp * (c.v * c.v);
    let ddp = -(c.g * gc + c.h * dx * c.v) * p.norm_squared() - c.g * (2.0 * c.v * p.dot(dp));
    (ddx, ddp)
}

pub(crate) const JAC_N: usize = 18;

pub(crate) fn jacobi_state(ray: &Ray, init: &JacobiInit) -> [f64; JAC_N] {
    let mut y = [0.0; JAC_N];
    y[..6].copy_from_slice(&head(ray));
    for a in 0..2 {
        put(&mut y, 6 + 6 * a, &init.dx[a]);
        put(&mut y, 9 + 6 * a, &init.dp[a]);
    }
    y
}

pub(crate) fn jacobi_full_rhs(c: &Jet, y: &[f64]) -> ([f64; JAC_N], V3, V3) {
    let (_, p) = split6(y);
    let (dx, dp) = ray_rhs_jet(c, &p);
    let mut out = [0.0; JAC_N];
    put(&mut out, 0, &dx);
    put(&mut out, 3, &dp);
    for a in 0..2 {
        let (ddx, ddp) = jacobi_rhs(c, &p, &v3(y, 6 + 6 * a), &v3(y, 9 + 6 * a));
        put(&mut out, 6 + 6 * a, &ddx);
        put(&mut out, 9 + 6 * a, &ddp);
    }
    (out, dx, dp)
}

/// Signed transverse area t . (J1 x J2) with t the unit tangent.
#[inline]
pub fn signed_area(v: &V3, j1: &V3, j2: &V3) -> f64 {
    v.normalize().dot(&j1.cross(j2))
}

/// d/ds of the signed area given the state derivative.
pub(crate) fn area_rate(c: &Jet, y: &[f64], dy: &[f64], dpdt: &V3) -> f64 {
    let p = v3(y, 3);
    let v = p * (c.v * c.v);
    let vn = v.norm();
    let t = v / vn;
    let xd = v3(dy, 0);
    let vd = p * (2.0 * c.v * c.g.dot(&xd)) + dpdt * (c.v * c.v);
    let td = (vd - t * t.dot(&vd)) / vn;
    let (j1, j2) = (v3(y, 6), v3(y, 12));
    let (j1d, j2d) = (v3(dy, 6), v3(dy, 12));
    td.dot(&j1.cross(&j2)) + t.dot(&(j1d.cross(&j2) + j1.cross(&j2d)))
}

/// Jacobi fields (dx1, dp1, dx2, dp2) at every sample.
pub fn jacobi_fields(speed: &dyn SpeedModel, ray: &Ray, init: &JacobiInit) -> Vec<[V3; 4]> {
    let mut out = Vec::with_capacity(ray.samples.len());
    let f = |y: &[f64; JAC_N]| jacobi_full_rhs(&speed.speed(&v3(y, 0)), y).0;
    replay(ray, jacobi_state(ray, init), f, |_, y| {
        out.push([v3(y, 6), v3(y, 9), v3(y, 12), v3(y, 15)]);
    });
    out
}

/// Transverse spreading J(s) of the ray family encoded by `init`. Fails with a
/// caustic error when J vanishes or changes sign after the first sample.
pub fn spreading_j(speed: &dyn SpeedModel, ray: &Ray, init: &JacobiInit) -> Result<Vec<f64>> {
    let fields = jacobi_fields(speed, ray, init);
    let j: Vec<f64> = ray.samples.iter().zip(&fields).map(|(s, f)| signed_area(&s.v, &f[0], &f[2])).collect();
    let jmax = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sign = j.iter().skip(1).find(|v| v.abs() > 0.0).map_or(1.0, |v| v.signum());
    for (k, v) in j.iter().enumerate().skip(1) {
        if v * sign <= 1e-12 * jmax {
            return Err(MxtError::Caustic(ray.samples[k].s));
        }
    }
    Ok(j.into_iter().map(|v| v * sign).collect())
}

/// Cumulative integral of `g(x)` with respect to g-arclength at every sample.
pub fn integrate_along(speed: &dyn SpeedModel, ray: &Ray, g: impl Fn(&V3) -> f64) -> Vec<f64> {
    let mut y0 = [0.0; 7];
    y0[..6].copy_from_slice(&head(ray));
    let f = |y: &[f64; 7]| {
        let (x, p) = split6(y);
        let (dx, dp) = ray_rhs_jet(&speed.speed(&x), &p);
        let mut out = [0.0; 7];
        put(&mut out, 0, &dx);
        put(&mut out, 3, &dp);
        out[6] = g(&x);
        out
    };
    let mut acc = Vec::with_capacity(ray.samples.len());
    replay(ray, y0, f, |_, y| acc.push(y[6]));
    acc
}
