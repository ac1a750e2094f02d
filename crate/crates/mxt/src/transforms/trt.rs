use rayon::prelude::*;

use super::nodes::{NodeSet, SparseRows};
use super::solve::{absolute_weight, cgls_tikhonov, LinearMap, Regularizer, SolveReport};
use super::xray::InvertConfig;
use crate::error::{MxtError, Result};
use crate::geometry::{g_dot, put, replay, split6, transport_rhs, zeta_from, FrameTransport, Ray, ray_rhs_jet};
use crate::media::{tensor_a_quad, Domain, GridField, Jet, ScalarField, SplineBasis, SplineField, SpeedModel, SymTensor3, M3, V3};

/// Polarizations recorded per ray: eta, zeta and (eta + zeta)/sqrt 2.
pub const NPOL: usize = 3;

#[inline]
pub fn polarization(eta: &V3, zeta: &V3, k: usize) -> V3 {
    match k {
        0 => *eta,
        1 => *zeta,
        _ => (eta + zeta) * std::f64::consts::FRAC_1_SQRT_2,
    }
}

fn need_frames(nodes: &NodeSet) -> Result<()> {
    if nodes.has_frames() {
        Ok(())
    } else {
        Err(MxtError::Precondition("transverse transform needs nodes built with frames".into()))
    }
}

/// Per-ray, per-polarization integral of T(e, e).
pub fn trt_forward(t: &(dyn Fn(&V3) -> SymTensor3 + Sync), nodes: &NodeSet) -> Result<Vec<[f64; NPOL]>> {
    need_frames(nodes)?;
    Ok((0..nodes.nrays())
        .into_par_iter()
        .map(|r| {
            let mut acc = [0.0; NPOL];
            for i in nodes.range(r) {
                let ti = t(&nodes.x[i]);
                for (k, a) in acc.iter_mut().enumerate() {
                    *a += nodes.w[i] * ti.quad(&polarization(&nodes.eta[i], &nodes.zeta[i], k));
                }
            }
            acc
        })
        .collect())
}

/// `trt_forward` of a six-component grid tensor, with coverage checks.
pub fn trt_forward_grid(t: &GridField, nodes: &NodeSet) -> Result<Vec<[f64; NPOL]>> {
    if t.ncomp != 6 {
        return Err(MxtError::Precondition(format!("tensor grid needs 6 components, got {}", t.ncomp)));
    }
    nodes.check_coverage(t.basis())?;
    trt_forward(&|x| t.tensor(x), nodes)
}

/// Differential data 1/2 int (A(u1) - A(u2))(e, e) ds for two media sharing
/// the wave speed.
pub fn trt_differential(speed: &dyn SpeedModel, u1: &dyn ScalarField, u2: &dyn ScalarField, nodes: &NodeSet) -> Result<Vec<[f64; NPOL]>> {
    need_frames(nodes)?;
    Ok((0..nodes.nrays())
        .into_par_iter()
        .map(|r| {
            let mut acc = [0.0; NPOL];
            for i in nodes.range(r) {
                let x = &nodes.x[i];
                let (c, j1, j2) = (speed.speed(x), u1.jet(x), u2.jet(x));
                for (k, a) in acc.iter_mut().enumerate() {
                    let e = polarization(&nodes.eta[i], &nodes.zeta[i], k);
                    *a += 0.5 * nodes.w[i] * (tensor_a_quad(&c, &j1, &e) - tensor_a_quad(&c, &j2, &e));
                }
            }
            acc
        })
        .collect())
}

/// The endpoint quantity c^-2 <xi, e>(b) - c^-2 <xi, e>(a) for polarization
/// `pol` of the frame, given the coefficient covectors at both ends.
pub fn trt_endpoint_extract(speed: &dyn SpeedModel, ray: &Ray, frame: &FrameTransport, pol: usize, xi_a: &V3, xi_b: &V3) -> Result<f64> {
    let n = ray.samples.len();
    if frame.eta.len() != n || frame.zeta.len() != n {
        return Err(MxtError::Inconsistent(format!("frame has {} samples, ray has {n}", frame.eta.len())));
    }
    let mut out = 0.0;
    for (k, sign) in [(0, -1.0), (n - 1, 1.0)] {
        let smp = &ray.samples[k];
        let c = speed.speed(&smp.x).v;
        let e = polarization(&frame.eta[k], &frame.zeta[k], pol);
        let (norm, orth) = ((g_dot(c, &e, &e) - 1.0).abs(), g_dot(c, &e, &smp.v).abs());
        if norm > 1e-6 || orth > 1e-6 {
            return Err(MxtError::Inconsistent(format!("frame at sample {k} is not g-orthonormal (norm {norm:.1e}, orth {orth:.1e})")));
        }
        let xi = if k == 0 { xi_a } else { xi_b };
        out += sign * xi.dot(&e) / (c * c);
    }
    Ok(out)
}

/// Coefficient covectors at both ends of a ray obtained by integrating
/// dQ/ds = (A(u)(e, e) + extra)/2 with the transported frame, xi = Q e and
/// Q(a) = q0. `extra` stands for terms that do not depend on the
/// permittivity.
pub fn endpoint_covectors(
    speed: &dyn SpeedModel,
    u: &dyn ScalarField,
    extra: &dyn Fn(&V3) -> f64,
    ray: &Ray,
    eta0: &V3,
    pol: usize,
    q0: f64,
) -> (V3, V3) {
    let s0 = ray.first();
    let c0 = speed.speed(&s0.x).v;
    let mut y0 = [0.0; 13];
    y0[..3].copy_from_slice(s0.x.as_slice());
    y0[3..6].copy_from_slice(s0.p.as_slice());
    put(&mut y0, 6, eta0);
    y0[12] = q0;
    let zeta0 = zeta_from(c0, &s0.v, eta0);
    let f = |y: &[f64; 13]| {
        let (x, p) = split6(y);
        let c = speed.speed(&x);
        let (dx, dp) = ray_rhs_jet(&c, &p);
        let mut out = [0.0; 13];
        put(&mut out, 0, &dx);
        put(&mut out, 3, &dp);
        let eta = V3::new(y[6], y[7], y[8]);
        let zeta = V3::new(y[9], y[10], y[11]);
        put(&mut out, 6, &transport_rhs(&c, &dx, &eta));
        put(&mut out, 9, &transport_rhs(&c, &dx, &zeta));
        let e = polarization(&eta, &zeta, pol);
        out[12] = 0.5 * (tensor_a_quad(&c, &u.jet(&x), &e) + extra(&x));
        out
    };
    put(&mut y0, 9, &zeta0);
    let mut first = V3::zeros();
    let mut last = V3::zeros();
    let n = ray.samples.len();
    replay(ray, y0, f, |k, y| {
        if k == 0 || k + 1 == n {
            let e = polarization(&V3::new(y[6], y[7], y[8]), &V3::new(y[9], y[10], y[11]), pol);
            let xi = e * y[12];
            if k == 0 {
                first = xi;
            } else {
                last = xi;
            }
        }
    });
    (first, last)
}

/// Linearization of w -> 1/2 int (A(u_ref + w) - A(u_ref))(e, e) ds in spline
/// coefficients, for data differential against a reference u_ref.
pub struct TrtOperator<'a> {
    pub basis: &'a SplineBasis,
    pub nodes: &'a NodeSet,
    grad_lnc: Vec<V3>,
    grad_uref: Vec<V3>,
    /// grad w at the linearization point.
    grad_w: Vec<V3>,
    matrix: SparseRows,
}

struct Row {
    e: V3,
    e2: f64,
    b: V3,
}

impl<'a> TrtOperator<'a> {
    pub fn new(basis: &'a SplineBasis, nodes: &'a NodeSet, speed: &dyn SpeedModel, uref: &dyn ScalarField) -> Result<Self> {
        need_frames(nodes)?;
        nodes.check_coverage(basis)?;
        let grad_lnc = nodes.x.par_iter().map(|x| {
            let c = speed.speed(x);
            c.g / c.v
        }).collect();
        let grad_uref = nodes.x.par_iter().map(|x| uref.jet(x).g).collect();
        let mut op = TrtOperator {
            basis,
            nodes,
            grad_lnc,
            grad_uref,
            grad_w: vec![V3::zeros(); nodes.x.len()],
            matrix: SparseRows::default(),
        };
        op.assemble();
        Ok(op)
    }

    pub fn nrows(&self) -> usize {
        self.nodes.nrays() * NPOL
    }

    fn rows(&self, i: usize) -> [Row; NPOL] {
        let g = self.grad_uref[i] + self.grad_w[i];
        std::array::from_fn(|k| {
            let e = polarization(&self.nodes.eta[i], &self.nodes.zeta[i], k);
            let e2 = e.norm_squared();
            Row { e, e2, b: g * (2.0 * e2) + e * (4.0 * self.grad_lnc[i].dot(&e)) }
        })
    }

    #[inline]
    fn functional(row: &Row, g: &V3, h: &M3) -> f64 {
        -h.trace() * row.e2 + 2.0 * row.e.dot(&(h * row.e)) + row.b.dot(g)
    }

    fn assemble(&mut self) {
        let (basis, nodes) = (self.basis, self.nodes);
        let this = &*self;
        let matrix = SparseRows::assemble(nodes.nrays(), NPOL, basis.ncoef(), |r, rows| {
            for i in nodes.range(r) {
                let st = basis.stencil(&nodes.x[i]);
                let fr = this.rows(i);
                let hw = 0.5 * nodes.w[i];
                basis.visit(&st, |k, _, bg, bh| {
                    for (row, out) in fr.iter().zip(rows.iter_mut()) {
                        out.push((k as u32, hw * Self::functional(row, &bg, &bh)));
                    }
                });
            }
        });
        self.matrix = matrix;
    }

    /// Moves the linearization point to the spline with coefficients `w`.
    pub fn relinearize(&mut self, w: &[f64]) {
        let (basis, nodes) = (self.basis, self.nodes);
        self.grad_w = nodes.x.par_iter().map(|x| basis.eval(w, x).g).collect();
        self.assemble();
    }

    /// Nonlinear forward map at coefficients `w`.
    pub fn forward(&self, w: &[f64]) -> Vec<f64> {
        let per_ray: Vec<[f64; NPOL]> = (0..self.nodes.nrays())
            .into_par_iter()
            .map(|r| {
                let mut acc = [0.0; NPOL];
                for i in self.nodes.range(r) {
                    let j: Jet = self.basis.eval(w, &self.nodes.x[i]);
                    let gu = self.grad_uref[i];
                    let iso = -j.laplacian() + 2.0 * gu.dot(&j.g) + j.g.norm_squared();
                    for (k, a) in acc.iter_mut().enumerate() {
                        let e = polarization(&self.nodes.eta[i], &self.nodes.zeta[i], k);
                        let q = iso * e.norm_squared() + 2.0 * e.dot(&(j.h * e)) + 4.0 * self.grad_lnc[i].dot(&e) * j.g.dot(&e);
                        *a += 0.5 * self.nodes.w[i] * q;
                    }
                }
                acc
            })
            .collect();
        per_ray.into_iter().flatten().collect()
    }

    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        self.matrix.apply(d)
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.matrix.adjoint(y)
    }
}

/// Gauss-Newton settings for the permittivity inversion.
#[derive(Clone, Debug, PartialEq)]
pub struct TrtInvertConfig {
    pub outer: usize,
    pub inner: InvertConfig,
}

impl Default for TrtInvertConfig {
    fn default() -> Self {
        TrtInvertConfig { outer: 4, inner: InvertConfig { reg: 1e-5, iters: 150, tol: 1e-6, noise: None } }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrtReport {
    /// Data misfit before each Gauss-Newton step and after the last one.
    pub misfit: Vec<f64>,
    pub inner: Vec<SolveReport>,
}

/// Recovers w = u - u_ref from differential transverse data (rows ordered
/// ray-major, polarization-minor). Coefficients not free keep `pinned`
/// values, typically the boundary-jet extension outside the domain.
pub fn trt_invert_for_u(
    data: &[f64],
    nodes: &NodeSet,
    basis: &SplineBasis,
    speed: &dyn SpeedModel,
    uref: &dyn ScalarField,
    pinned: Option<(&[bool], &[f64])>,
    cfg: &TrtInvertConfig,
) -> Result<(SplineField, TrtReport)> {
    let mut op = TrtOperator::new(basis, nodes, speed, uref)?;
    if data.len() != op.nrows() {
        return Err(MxtError::Precondition(format!("expected {} data, got {}", op.nrows(), data.len())));
    }
    let reg = Regularizer::from_basis(basis);
    let (free, mut w) = match pinned {
        Some((f, v)) => (Some(f), v.to_vec()),
        None => (None, vec![0.0; basis.ncoef()]),
    };
    let mut report = TrtReport { misfit: Vec::new(), inner: Vec::new() };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut lam = None;
    for _ in 0..cfg.outer {
        op.relinearize(&w);
        let fw = op.forward(&w);
        let res: Vec<f64> = data.iter().zip(&fw).map(|(d, f)| d - f).collect();
        report.misfit.push(norm(&res));
        let jw = op.apply(&w);
        let rhs: Vec<f64> = res.iter().zip(&jw).map(|(r, j)| r + j).collect();
        let apply = |x: &[f64]| op.apply(x);
        let adjoint = |y: &[f64]| op.adjoint(y);
        let map = LinearMap { ncols: basis.ncoef(), apply: &apply, adjoint: &adjoint };
        let l = *lam.get_or_insert_with(|| absolute_weight(&map, &reg, free, cfg.inner.reg));
        let (x, rep) = cgls_tikhonov(&map, &rhs, &reg, l, &w, free, cfg.inner.iters, cfg.inner.tol);
        w = x;
        report.inner.push(rep);
    }
    op.relinearize(&w);
    let fw = op.forward(&w);
    report.misfit.push(norm(&data.iter().zip(&fw).map(|(d, f)| d - f).collect::<Vec<_>>()));
    Ok((SplineField { basis: basis.clone(), coefs: w }, report))
}

/// Pins every coefficient located outside the domain to the first-order
/// Taylor extension value(y) + dnu(y) * dist, with y the boundary projection.
pub fn boundary_pins(basis: &SplineBasis, domain: &Domain, jet: impl Fn(&V3) -> (f64, f64)) -> (Vec<bool>, Vec<f64>) {
    let n = basis.ncoef();
    let mut free = vec![true; n];
    let mut vals = vec![0.0; n];
    for k in 0..n {
        let p = basis.coef_position(k);
        let d = domain.signed_distance(&p);
        if d > 0.0 {
            let y = domain.project(&p);
            let (v, dn) = jet(&y);
            free[k] = false;
            vals[k] = v + dn * d;
        }
    }
    (free, vals)
}
