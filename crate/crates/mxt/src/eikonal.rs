//! Boundary-launched phases by characteristics, the normal frequency xi_3,
//! boundary phase Hessians, and a first-order fast-marching travel-time oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{MxtError, Result};
use crate::geometry::{head, put, ray_rhs_jet, replay, split6, trace_geodesic, Ray, TraceConfig};
use crate::media::{tangent_frame, Domain, GridField, Jet, SpeedModel, M3, V3};

/// Positive root xi_3 = sqrt(eps mu - |xi'|^2).
pub fn xi3(eps: f64, mu: f64, rho2: f64) -> Result<f64> {
    let d = eps * mu - rho2;
    if d <= 0.0 {
        return Err(MxtError::Evanescent(d));
    }
    Ok(d.sqrt())
}

/// Inward momentum p = xi' - xi_3 nu of the phase with tangential covector
/// `xi_t` at a boundary point with outward normal `nu`.
pub fn launch_momentum(c: f64, nu: &V3, xi_t: &V3) -> Result<V3> {
    let xt = xi_t - nu * nu.dot(xi_t);
    let x3 = xi3(1.0 / (c * c), 1.0, xt.norm_squared())?;
    Ok(xt - nu * x3)
}

/// Hessian of the phase solving |grad phi|^2 = c^-2 with phi = xi' . (y - x0)
/// on the boundary, at the boundary point x0.
pub fn boundary_phase_hessian(c: &Jet, domain: &Domain, x0: &V3, xi_t: &V3) -> Result<M3> {
    let nu = domain.outward_normal(x0);
    let p = launch_momentum(c.v, &nu, xi_t)?;
    let xi3 = -p.dot(&nu);
    let xt = p + nu * xi3;
    // n = c^-2
    let grad_n = c.g * (-2.0 / c.v.powi(3));
    let (t1, t2) = tangent_frame(&nu);
    let ii = domain.shape(x0);
    let ts = [t1, t2];
    let mut htt = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            htt[a][b] = -xi3 * ts[a].dot(&(ii * ts[b]));
        }
    }
    let xi_ab = [xt.dot(&t1), xt.dot(&t2)];
    let mut htn = [0.0; 2];
    for a in 0..2 {
        htn[a] = (htt[a][0] * xi_ab[0] + htt[a][1] * xi_ab[1] - 0.5 * grad_n.dot(&ts[a])) / xi3;
    }
    let hnn = (htn[0] * xi_ab[0] + htn[1] * xi_ab[1] - 0.5 * grad_n.dot(&nu)) / xi3;
    let basis = [t1, t2, nu];
    let comp = |a: usize, b: usize| match (a, b) {
        (2, 2) => hnn,
        (2, k) | (k, 2) => htn[k],
        (i, j) => htt[i][j],
    };
    let mut h = M3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            h += basis[a] * basis[b].transpose() * comp(a, b);
        }
    }
    Ok(h)
}

/// Hessian of a locally plane wavefront through x with momentum `p`: zero on
/// the wavefront plane, completed so that Hess(phi) p = grad(c^-2) / 2.
pub fn plane_wave_hessian(c: &Jet, p: &V3) -> M3 {
    let t = p.normalize();
    let grad_n = c.g * (-2.0 / c.v.powi(3));
    let a = grad_n * (0.5 * c.v);
    a * t.transpose() + t * a.transpose() - t * t.transpose() * t.dot(&a)
}

/// Matrix Riccati equation for the phase Hessian along the characteristic.
pub fn riccati_rhs(c: &Jet, p: &V3, h: &M3) -> M3 {
    let b = -(c.g * c.g.transpose() + c.h * c.v) * p.norm_squared();
    let hp = h * p;
    b - (c.g * hp.transpose() + hp * c.g.transpose()) * (2.0 * c.v) - h * h * (c.v * c.v)
}

/// One characteristic sample of a boundary-launched phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSample {
    pub s: f64,
    pub x: V3,
    pub phi: f64,
    pub grad: V3,
    pub hess: M3,
}

/// Boundary points with their tangential frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPatch {
    pub points: Vec<V3>,
    pub xi: Vec<V3>,
}

impl BoundaryPatch {
    /// A patch with the same tangential covector at every point.
    pub fn uniform(points: Vec<V3>, xi: V3) -> Self {
        let n = points.len();
        BoundaryPatch { points, xi: vec![xi; n] }
    }
}

/// Lagrangian phase: characteristics launched from the patch.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseField {
    pub patch: BoundaryPatch,
    pub rays: Vec<Vec<PhaseSample>>,
}

/// Carries (phi, grad phi, Hess phi) along one traced characteristic starting
/// from `phi0` and Hessian `h0`.
pub fn carry_phase(speed: &dyn SpeedModel, ray: &Ray, phi0: f64, h0: &M3) -> Result<Vec<PhaseSample>> {
    let mut y0 = [0.0; 16];
    y0[..6].copy_from_slice(&head(ray));
    y0[6] = phi0;
    for i in 0..9 {
        y0[7 + i] = h0[(i / 3, i % 3)];
    }
    let f = |y: &[f64; 16]| {
        let (x, p) = split6(y);
        let c = speed.speed(&x);
        let (dx, dp) = ray_rhs_jet(&c, &p);
        let mut out = [0.0; 16];
        put(&mut out, 0, &dx);
        put(&mut out, 3, &dp);
        out[6] = p.dot(&dx);
        let h = M3::from_fn(|i, j| y[7 + 3 * i + j]);
        let dh = riccati_rhs(&c, &p, &h);
        for i in 0..9 {
            out[7 + i] = dh[(i / 3, i % 3)];
        }
        out
    };
    let mut out = Vec::with_capacity(ray.samples.len());
    let mut blowup = None;
    replay(ray, y0, f, |k, y| {
        let (x, p) = split6(y);
        let hess = M3::from_fn(|i, j| y[7 + 3 * i + j]);
        if blowup.is_none() && !(hess.norm() < 1e8) {
            blowup = Some(ray.samples[k].s);
        }
        out.push(PhaseSample { s: ray.samples[k].s, x, phi: y[6], grad: p, hess });
    });
    if let Some(s) = blowup {
        return Err(MxtError::Caustic(s));
    }
    Ok(out)
}

/// Solves the eikonal equation by characteristics from every patch point up to
/// metric depth `depth`.
pub fn boundary_phase(speed: &dyn SpeedModel, domain: &Domain, patch: &BoundaryPatch, depth: f64) -> Result<PhaseField> {
    let cfg = TraceConfig { s_max: depth, h_max: depth.min(0.1), ..Default::default() };
    let mut rays = Vec::with_capacity(patch.points.len());
    for (x0, xi) in patch.points.iter().zip(&patch.xi) {
        let c = speed.speed(x0);
        let nu = domain.outward_normal(x0);
        let p = launch_momentum(c.v, &nu, xi)?;
        let h0 = boundary_phase_hessian(&c, domain, x0, xi)?;
        let ray = trace_geodesic(speed, domain, x0, &p, &cfg)?;
        rays.push(carry_phase(speed, &ray, xi.dot(x0), &h0)?);
    }
    Ok(PhaseField { patch: patch.clone(), rays })
}

#[derive(PartialEq)]
struct Front(f64, usize);

impl Eq for Front {}

impl PartialOrd for Front {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Front {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// Regular grid description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub dims: [usize; 3],
}

/// First-arrival travel time in g = c^-2 g_E by first-order upwind fast
/// marching. Nodes within two cells of a source are initialized with
/// straight-ray times.
pub fn fast_march_travel_time(speed: &dyn SpeedModel, sources: &[V3], grid: &GridSpec) -> Result<GridField> {
    let [nx, ny, nz] = grid.dims;
    let n = nx * ny * nz;
    if n == 0 || sources.is_empty() {
        return Err(MxtError::Config("fast marching needs a non-empty grid and sources".into()));
    }
    let h = grid.spacing;
    let node = |i: usize| {
        V3::new(
            grid.origin[0] + h[0] * (i / (ny * nz)) as f64,
            grid.origin[1] + h[1] * ((i / nz) % ny) as f64,
            grid.origin[2] + h[2] * (i % nz) as f64,
        )
    };
    let slow: Vec<f64> = (0..n).map(|i| 1.0 / speed.speed(&node(i)).v).collect();
    let mut t = vec![f64::INFINITY; n];
    let mut frozen = vec![false; n];
    let mut heap = BinaryHeap::new();
    let active: Vec<usize> = (0..3).filter(|&a| grid.dims[a] > 1).collect();
    let hmax = active.iter().map(|&a| h[a]).fold(0.0, f64::max);
    for src in sources {
        let s_src = 1.0 / speed.speed(src).v;
        for i in 0..n {
            let d = (node(i) - src).norm();
            if d <= 2.0 * hmax {
                let ti = d * 0.5 * (s_src + slow[i]);
                if ti < t[i] {
                    t[i] = ti;
                    frozen[i] = true;
                }
            }
        }
    }
    let strides = [ny * nz, nz, 1];
    let coords = |i: usize| [i / (ny * nz), (i / nz) % ny, i % nz];
    let neighbors = |i: usize| {
        let c = coords(i);
        let mut out = Vec::with_capacity(6);
        for &a in &active {
            if c[a] > 0 {
                out.push(i - strides[a]);
            }
            if c[a] + 1 < grid.dims[a] {
                out.push(i + strides[a]);
            }
        }
        out
    };
    let update = |i: usize, t: &[f64], frozen: &[bool]| -> f64 {
        let c = coords(i);
        let mut terms: Vec<(f64, f64)> = Vec::with_capacity(3);
        for &a in &active {
            let mut best = f64::INFINITY;
            if c[a] > 0 && frozen[i - strides[a]] {
                best = best.min(t[i - strides[a]]);
            }
            if c[a] + 1 < grid.dims[a] && frozen[i + strides[a]] {
                best = best.min(t[i + strides[a]]);
            }
            if best.is_finite() {
                terms.push((best, h[a]));
            }
        }
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let f = slow[i];
        let mut sol = f64::INFINITY;
        for m in 1..=terms.len() {
            // solve sum_k ((T - a_k)/h_k)^2 = f^2 over the m smallest
            let (mut aa, mut bb, mut cc) = (0.0, 0.0, -f * f);
            for &(ak, hk) in &terms[..m] {
                let w = 1.0 / (hk * hk);
                aa += w;
                bb -= 2.0 * ak * w;
                cc += ak * ak * w;
            }
            let disc = bb * bb - 4.0 * aa * cc;
            if disc < 0.0 {
                break;
            }
            let cand = (-bb + disc.sqrt()) / (2.0 * aa);
            if m < terms.len() && cand > terms[m].0 {
                sol = cand;
                continue;
            }
            sol = cand;
            break;
        }
        sol
    };
    for i in 0..n {
        if frozen[i] {
            for j in neighbors(i) {
                if !frozen[j] {
                    let v = update(j, &t, &frozen);
                    if v < t[j] {
                        t[j] = v;
                        heap.push(Front(v, j));
                    }
                }
            }
        }
    }
    while let Some(Front(v, i)) = heap.pop() {
        if frozen[i] || v > t[i] {
            continue;
        }
        frozen[i] = true;
        for j in neighbors(i) {
            if !frozen[j] {
                let v = update(j, &t, &frozen);
                if v < t[j] {
                    t[j] = v;
                    heap.push(Front(v, j));
                }
            }
        }
    }
    GridField::new(grid.origin, grid.spacing, grid.dims, 1, t)
}
