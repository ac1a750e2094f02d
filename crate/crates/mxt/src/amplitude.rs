//! Amplitude transport along rays, the polarization fields H0 and E0, the
//! boundary symbols of order 0 and 1, and incident/reflected splitting.

use crate::eikonal::{boundary_phase_hessian, launch_momentum, xi3};
use crate::error::{MxtError, Result};
use crate::geometry::{
    area_rate, integrate_along, jacobi_full_rhs, jacobi_state, put, replay, signed_area, split6, trace_segment,
    transport_rhs, zeta_from, FrameTransport, JacobiInit, Method, Ray, JAC_N,
};
use crate::media::{Domain, MediumSpec, ScalarField, SpeedModel, V3};

/// I(s) = exp(-int_0^s sigma/(2 eps) dtau) at every ray sample.
pub fn attenuation_i(m: &MediumSpec, ray: &Ray) -> Vec<f64> {
    integrate_along(m, ray, |x| m.sigma_over_eps(x)).into_iter().map(|l| (-0.5 * l).exp()).collect()
}

/// A = C J^-1/2 c^1/2 I.
pub fn amplitude_closed_form(scale: f64, j: f64, c: f64, i: f64) -> f64 {
    scale * c.sqrt() * i / j.sqrt()
}

/// Amplitude, spreading, attenuation and polarization frame sampled along a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeProfile {
    pub s: Vec<f64>,
    /// ODE-transported amplitude.
    pub a: Vec<f64>,
    pub j: Vec<f64>,
    pub i: Vec<f64>,
    pub c: Vec<f64>,
    pub frame: FrameTransport,
    /// The constant C in A = C J^-1/2 c^1/2 I.
    pub scale: f64,
}

impl AmplitudeProfile {
    pub fn closed_form(&self, k: usize) -> f64 {
        amplitude_closed_form(self.scale, self.j[k], self.c[k], self.i[k])
    }
}

const N_AMP: usize = JAC_N + 8;

/// Integrates 2A' + (J'/J) A - (c'/c) A + (sigma/eps) A = 0 together with the
/// Jacobi fields encoded by `init`, the attenuation integral and the parallel
/// frame seeded by `eta0`. A(0) = scale * J(0)^-1/2 c(0)^1/2.
pub fn transport_amplitude_ode(m: &MediumSpec, ray: &Ray, init: &JacobiInit, eta0: &V3, scale: f64) -> Result<AmplitudeProfile> {
    let s0 = ray.first();
    let c0 = m.speed(&s0.x).v;
    let j0 = signed_area(&s0.v, &init.dx[0], &init.dx[1]);
    if j0 <= 0.0 {
        return Err(MxtError::Precondition(format!("initial spreading J(0) = {j0:.3e} must be positive")));
    }
    let mut y0 = [0.0; N_AMP];
    y0[..JAC_N].copy_from_slice(&jacobi_state(ray, init));
    y0[JAC_N] = amplitude_closed_form(scale, j0, c0, 1.0);
    put(&mut y0, JAC_N + 2, eta0);
    put(&mut y0, JAC_N + 5, &zeta_from(c0, &s0.v, eta0));
    let f = |y: &[f64; N_AMP]| {
        let (x, p) = split6(y);
        let c = m.speed(&x);
        let (jac, dx, dp) = jacobi_full_rhs(&c, y);
        let mut out = [0.0; N_AMP];
        out[..JAC_N].copy_from_slice(&jac);
        let v = p * (c.v * c.v);
        let jj = signed_area(&v, &V3::new(y[6], y[7], y[8]), &V3::new(y[12], y[13], y[14]));
        let jd = area_rate(&c, y, &jac, &dp);
        let soe = m.sigma_over_eps(&x);
        let cd = c.g.dot(&dx) / c.v;
        out[JAC_N] = -0.5 * y[JAC_N] * (jd / jj - cd + soe);
        out[JAC_N + 1] = soe;
        let eta = V3::new(y[JAC_N + 2], y[JAC_N + 3], y[JAC_N + 4]);
        let zeta = V3::new(y[JAC_N + 5], y[JAC_N + 6], y[JAC_N + 7]);
        put(&mut out, JAC_N + 2, &transport_rhs(&c, &dx, &eta));
        put(&mut out, JAC_N + 5, &transport_rhs(&c, &dx, &zeta));
        out
    };
    let n = ray.samples.len();
    let mut prof = AmplitudeProfile {
        s: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        j: Vec::with_capacity(n),
        i: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        frame: FrameTransport { eta: Vec::with_capacity(n), zeta: Vec::with_capacity(n) },
        scale,
    };
    replay(ray, y0, f, |k, y| {
        let smp = &ray.samples[k];
        prof.s.push(smp.s);
        prof.a.push(y[JAC_N]);
        prof.j.push(signed_area(&smp.v, &V3::new(y[6], y[7], y[8]), &V3::new(y[12], y[13], y[14])));
        prof.i.push((-0.5 * y[JAC_N + 1]).exp());
        prof.c.push(m.speed(&smp.x).v);
        prof.frame.eta.push(V3::new(y[JAC_N + 2], y[JAC_N + 3], y[JAC_N + 4]));
        prof.frame.zeta.push(V3::new(y[JAC_N + 5], y[JAC_N + 6], y[JAC_N + 7]));
    });
    // a simple zero of J flips its sign; a double zero (isotropic focus)
    // leaves J positive but flips the sign of the transported A
    let bad = |k: usize| !(prof.j[k] > 0.0) || !(prof.a[k] * prof.a[0] > 0.0) || !prof.a[k].is_finite();
    if let Some(k) = (0..n).find(|&k| bad(k)) {
        return Err(MxtError::Caustic(prof.s[k]));
    }
    Ok(prof)
}

/// Principal amplitudes and fields along a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeTrace {
    pub a: Vec<f64>,
    pub i: Vec<f64>,
    pub h0: Vec<V3>,
    pub e0: Vec<V3>,
}

/// H0 = A eps^1/2 c eta and E0 = -A mu^1/2 c zeta at every sample, with eta
/// and zeta the g-unit transported vectors (so |H0| = A eps^1/2 c^2). The
/// Maxwell fields use the index-lowered frame and are these divided by c^2.
pub fn assemble_h0_e0(m: &MediumSpec, ray: &Ray, frame: &FrameTransport, a: &[f64], i: &[f64]) -> AmplitudeTrace {
    let mut h0 = Vec::with_capacity(a.len());
    let mut e0 = Vec::with_capacity(a.len());
    for (k, smp) in ray.samples.iter().enumerate() {
        let (eps, mu) = (m.epsilon.value(&smp.x), m.mu.value(&smp.x));
        let c = 1.0 / (eps * mu).sqrt();
        h0.push(frame.eta[k] * (a[k] * eps.sqrt() * c));
        e0.push(-frame.zeta[k] * (a[k] * mu.sqrt() * c));
    }
    AmplitudeTrace { a: a.to_vec(), i: i.to_vec(), h0, e0 }
}

/// Order-0 symbol -(1/mu) sqrt(eps mu - rho^2) rho^2.
pub fn boundary_symbol_s0(eps: f64, mu: f64, rho: f64) -> Result<f64> {
    Ok(-xi3(eps, mu, rho * rho)? * rho * rho / mu)
}

/// Coefficients (alpha, beta, gamma) of S1 = alpha + beta rho^2 + gamma sqrt(eps mu - rho^2)
/// in terms of inward normal derivatives d3 = -d/dnu.
pub fn s1_coefficients(eps: f64, mu: f64, sigma: f64, d3_eps: f64, d3_mu: f64) -> (f64, f64, f64) {
    (0.5 * (eps * d3_mu - mu * d3_eps), -d3_mu / mu, sigma * mu)
}

/// Order-1 symbol
/// (eps mu - rho^2) d3mu/mu - (eps mu d3mu/mu + mu d3eps)/2 + sigma mu sqrt(eps mu - rho^2),
/// taking outward normal derivatives; the inward derivative is d3 = -d/dnu.
pub fn boundary_symbol_s1(eps: f64, mu: f64, sigma: f64, dnu_eps: f64, dnu_mu: f64, rho: f64) -> Result<f64> {
    let x3 = xi3(eps, mu, rho * rho)?;
    let (a, b, g) = s1_coefficients(eps, mu, sigma, -dnu_eps, -dnu_mu);
    Ok(a + b * rho * rho + g * x3)
}

/// Incident tangential H0 from the total trace at a reflection point: the
/// tangential parts of incident and reflected waves agree, and the normal
/// component of the total trace must vanish.
pub fn split_incident(total_tangential: [f64; 2], total_normal: f64) -> Result<[f64; 2]> {
    let scale = total_tangential[0].abs().max(total_tangential[1].abs()).max(1.0);
    if total_normal.abs() > 1e-10 * scale {
        return Err(MxtError::Inconsistent(format!("normal component of the total H0 trace is {total_normal:.3e}")));
    }
    Ok([0.5 * total_tangential[0], 0.5 * total_tangential[1]])
}

/// Boundary value of H0 for tangential frequency `xi_t` at a point with
/// outward normal `nu`: H0 = -(xi3/mu) xi' - (rho^2/mu) nu.
pub fn boundary_h0(eps: f64, mu: f64, nu: &V3, xi_t: &V3) -> Result<V3> {
    let rho2 = xi_t.norm_squared();
    let x3 = xi3(eps, mu, rho2)?;
    Ok(-xi_t * (x3 / mu) - nu * (rho2 / mu))
}

/// Ray-level symbol values at one boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySymbols {
    pub s0: f64,
    /// (2 mu xi3 / rho^2) xi' . d3 H0 with d3 = -d/dnu, including the terms
    /// that depend only on boundary values.
    pub s1: f64,
    /// dH0/ds at the boundary along the launched ray.
    pub dh0_ds: V3,
}

fn h0_after(m: &MediumSpec, domain: &Domain, x0: &V3, xi_t: &V3, h: f64) -> Result<(V3, V3, V3)> {
    let c = m.speed(x0);
    let nu = domain.outward_normal(x0);
    let (eps, mu) = (m.epsilon.value(x0), m.mu.value(x0));
    let p = launch_momentum(c.v, &nu, xi_t)?;
    let hb = boundary_h0(eps, mu, &nu, xi_t)?;
    let hess = boundary_phase_hessian(&c, domain, x0, xi_t)?;
    let ray = trace_segment(m, x0, &p, h, 1, Method::Dp45);
    let init = JacobiInit::plane_wave(ray.first(), &hess);
    let eta0 = hb.normalize() * c.v;
    let a0 = hb.norm() / eps.sqrt();
    let prof = transport_amplitude_ode(m, &ray, &init, &eta0, a0 / c.v.sqrt())?;
    let tr = assemble_h0_e0(m, &ray, &prof.frame, &prof.a, &prof.i);
    let h = |k: usize| tr.h0[k] / (prof.c[k] * prof.c[k]);
    Ok((h(0), h(1), ray.first().v))
}

/// Synthesizes S0 and S1 by launching the boundary phase with tangential
/// frequency `xi_t` at `x0`, transporting H0 over short steps, and forming
/// the normal derivative by Richardson-extrapolated forward differences.
pub fn ray_level_symbols(m: &MediumSpec, domain: &Domain, x0: &V3, xi_t: &V3, h: f64) -> Result<RaySymbols> {
    let nu = domain.outward_normal(x0);
    let xi = xi_t - nu * nu.dot(xi_t);
    let rho2 = xi.norm_squared();
    let (eps, mu) = (m.epsilon.value(x0), m.mu.value(x0));
    let x3 = xi3(eps, mu, rho2)?;
    let d = |h: f64| -> Result<(V3, V3, V3)> {
        let (a, b, v) = h0_after(m, domain, x0, &xi, h)?;
        Ok(((b - a) / h, a, v))
    };
    let (d1, h0, v) = d(h)?;
    let (d2, _, _) = d(h / 2.0)?;
    let (d4, _, _) = d(h / 4.0)?;
    let dh0_ds = (d4 * 8.0 - d2 * 6.0 + d1) / 3.0;
    // tangential derivative of the boundary trace of H0 along the launch
    // direction's tangential part, by centered differences along the boundary
    let vt = v - nu * nu.dot(&v);
    let v3 = -nu.dot(&v);
    let trace_h0 = |y: &V3| -> Result<V3> {
        let yb = domain.project(y);
        let n = domain.outward_normal(&yb);
        boundary_h0(m.epsilon.value(&yb), m.mu.value(&yb), &n, &(xi - n * n.dot(&xi)))
    };
    let tangential = if vt.norm() > 0.0 {
        let dt = 1e-5;
        let e = vt.normalize();
        (trace_h0(&(x0 + e * dt))? - trace_h0(&(x0 - e * dt))?) * (vt.norm() / (2.0 * dt))
    } else {
        V3::zeros()
    };
    let d3h0 = (dh0_ds - tangential) / v3;
    Ok(RaySymbols { s0: xi.dot(&h0), s1: 2.0 * mu * x3 / rho2 * xi.dot(&d3h0), dh0_ds })
}
