use rayon::prelude::*;

use crate::error::{MxtError, Result};
use crate::geometry::{ray_rhs_jet, transport_rhs, FrameTransport, Ray};
use crate::media::{Jet, SplineBasis, SpeedModel, V3};

/// Quadrature density along rays.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeSpec {
    /// Largest Euclidean length of a quadrature panel.
    pub max_len: f64,
    /// Gauss-Legendre points per panel (1 to 3).
    pub gauss: usize,
}

impl Default for NodeSpec {
    fn default() -> Self {
        NodeSpec { max_len: 0.05, gauss: 3 }
    }
}

/// Quadrature nodes of a ray family, flattened. Weights are in g-arclength.
/// `eta`/`zeta` are empty unless frames were supplied.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeSet {
    pub offsets: Vec<usize>,
    pub x: Vec<V3>,
    pub w: Vec<f64>,
    pub eta: Vec<V3>,
    pub zeta: Vec<V3>,
}

fn gauss(n: usize) -> (&'static [f64], &'static [f64]) {
    const X1: [f64; 1] = [0.5];
    const W1: [f64; 1] = [1.0];
    const X2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
    const W2: [f64; 2] = [0.5, 0.5];
    const X3: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
    const W3: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
    match n {
        1 => (&X1, &W1),
        2 => (&X2, &W2),
        _ => (&X3, &W3),
    }
}

/// d^2x/ds^2 of the ray at (x, p).
fn accel(c: &Jet, p: &V3) -> (V3, V3) {
    let (dx, dp) = ray_rhs_jet(c, p);
    (dx, p * (2.0 * c.v * c.g.dot(&dx)) + dp * (c.v * c.v))
}

fn quintic(t: f64) -> [f64; 6] {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * (t3 - 2.0 * t4 + t5),
    ]
}

fn quintic_dt(t: f64) -> [f64; 6] {
    let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
    [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
    ]
}

fn cubic(t: f64) -> [f64; 4] {
    let (t2, t3) = (t * t, t * t * t);
    [2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2]
}

/// Nodes of a single ray: quintic Hermite positions between samples (from
/// position, velocity and acceleration) and cubic Hermite frames.
pub fn ray_nodes(speed: &dyn SpeedModel, ray: &Ray, frame: Option<&FrameTransport>, spec: &NodeSpec) -> NodeSet {
    let (gx, gw) = gauss(spec.gauss);
    let mut out = NodeSet { offsets: vec![0], ..Default::default() };
    let n = ray.samples.len();
    let jets: Vec<Jet> = ray.samples.iter().map(|s| speed.speed(&s.x)).collect();
    let acc: Vec<(V3, V3)> = ray.samples.iter().zip(&jets).map(|(s, c)| accel(c, &s.p)).collect();
    let fdot = |k: usize, w: &V3| transport_rhs(&jets[k], &acc[k].0, w);
    for k in 0..n.saturating_sub(1) {
        let (a, b) = (&ray.samples[k], &ray.samples[k + 1]);
        let h = b.s - a.s;
        if h <= 0.0 {
            continue;
        }
        let panels = (((b.x - a.x).norm() / spec.max_len).ceil() as usize).max(1);
        for q in 0..panels {
            for (&xi, &wi) in gx.iter().zip(gw) {
                let t = (q as f64 + xi) / panels as f64;
                let hq = quintic(t);
                let x = a.x * hq[0] + acc[k].0 * (h * hq[1]) + acc[k].1 * (h * h * hq[2])
                    + b.x * hq[3] + acc[k + 1].0 * (h * hq[4]) + acc[k + 1].1 * (h * h * hq[5]);
                out.x.push(x);
                out.w.push(wi * h / panels as f64);
                if let Some(fr) = frame {
                    let hc = cubic(t);
                    let herm = |w: &[V3]| {
                        w[k] * hc[0] + fdot(k, &w[k]) * (h * hc[1]) + w[k + 1] * hc[2] + fdot(k + 1, &w[k + 1]) * (h * hc[3])
                    };
                    // interpolation leaves O(h^4) drift; restore g-orthonormality
                    let hd = quintic_dt(t);
                    let tan = (a.x * hd[0] + acc[k].0 * (h * hd[1]) + acc[k].1 * (h * h * hd[2])
                        + b.x * hd[3] + acc[k + 1].0 * (h * hd[4]) + acc[k + 1].1 * (h * h * hd[5]))
                        .normalize();
                    let c = speed.speed(&x).v;
                    let eta = herm(&fr.eta);
                    let eta = (eta - tan * tan.dot(&eta)).normalize();
                    out.eta.push(eta * c);
                    out.zeta.push(tan.cross(&eta) * c);
                }
            }
        }
    }
    out.offsets.push(out.x.len());
    out
}

impl NodeSet {
    /// Nodes of many rays, built in parallel and concatenated in ray order.
    pub fn build(speed: &dyn SpeedModel, rays: &[Ray], frames: Option<&[FrameTransport]>, spec: &NodeSpec) -> Self {
        let parts: Vec<NodeSet> = rays
            .par_iter()
            .enumerate()
            .map(|(i, r)| ray_nodes(speed, r, frames.map(|f| &f[i]), spec))
            .collect();
        let mut out = NodeSet { offsets: vec![0], ..Default::default() };
        for p in parts {
            out.x.extend(p.x);
            out.w.extend(p.w);
            out.eta.extend(p.eta);
            out.zeta.extend(p.zeta);
            out.offsets.push(out.x.len());
        }
        out
    }

    pub fn nrays(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn range(&self, r: usize) -> std::ops::Range<usize> {
        self.offsets[r]..self.offsets[r + 1]
    }

    pub fn has_frames(&self) -> bool {
        self.eta.len() == self.x.len() && !self.x.is_empty()
    }

    /// Fails with a coverage error naming the first ray with a node outside
    /// the basis support.
    pub fn check_coverage(&self, basis: &SplineBasis) -> Result<()> {
        for r in 0..self.nrays() {
            if self.range(r).any(|i| !basis.stencil(&self.x[i]).inside) {
                return Err(MxtError::Coverage(r));
            }
        }
        Ok(())
    }

    /// Restriction to a subset of rays.
    pub fn select(&self, keep: &[usize]) -> NodeSet {
        let mut out = NodeSet { offsets: vec![0], ..Default::default() };
        let frames = self.has_frames();
        for &r in keep {
            let rg = self.range(r);
            out.x.extend_from_slice(&self.x[rg.clone()]);
            out.w.extend_from_slice(&self.w[rg.clone()]);
            if frames {
                out.eta.extend_from_slice(&self.eta[rg.clone()]);
                out.zeta.extend_from_slice(&self.zeta[rg]);
            }
            out.offsets.push(out.x.len());
        }
        out
    }
}

/// Number of contiguous ray chunks used by adjoint reductions. Fixed so that
/// the summation order, and hence every bit of the result, does not depend
/// on the thread count.
pub const REDUCE_CHUNKS: usize = 64;

/// Sums per-ray contributions into a vector of length `n` deterministically.
pub fn reduce_rays(nrays: usize, n: usize, f: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
    let chunk = nrays.div_ceil(REDUCE_CHUNKS).max(1);
    let parts: Vec<Vec<f64>> = (0..nrays.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; n];
            for r in c * chunk..((c + 1) * chunk).min(nrays) {
                f(r, &mut acc);
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; n];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// Row-compressed sparse matrix; rows are grouped per ray.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRows {
    pub ptr: Vec<usize>,
    pub idx: Vec<u32>,
    pub val: Vec<f64>,
    pub ncols: usize,
    pub rows_per_ray: usize,
}

impl SparseRows {
    /// Assembles `rows_per_ray` rows per ray from unsorted (column, value)
    /// contributions pushed by `f(ray, rows)`.
    pub fn assemble(nrays: usize, rows_per_ray: usize, ncols: usize, f: impl Fn(usize, &mut [Vec<(u32, f64)>]) + Sync) -> Self {
        let per_ray: Vec<Vec<Vec<(u32, f64)>>> = (0..nrays)
            .into_par_iter()
            .map(|r| {
                let mut rows = vec![Vec::new(); rows_per_ray];
                f(r, &mut rows);
                for row in rows.iter_mut() {
                    row.sort_unstable_by_key(|e| e.0);
                    let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len() / 4 + 1);
                    for &(k, v) in row.iter() {
                        match merged.last_mut() {
                            Some(last) if last.0 == k => last.1 += v,
                            _ => merged.push((k, v)),
                        }
                    }
                    *row = merged;
                }
                rows
            })
            .collect();
        let mut out = SparseRows { ptr: vec![0], ncols, rows_per_ray, ..Default::default() };
        let nnz = per_ray.iter().flatten().map(|r| r.len()).sum();
        out.idx.reserve(nnz);
        out.val.reserve(nnz);
        for row in per_ray.into_iter().flatten() {
            for (k, v) in row {
                out.idx.push(k);
                out.val.push(v);
            }
            out.ptr.push(out.idx.len());
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .into_par_iter()
            .map(|r| (self.ptr[r]..self.ptr[r + 1]).map(|j| self.val[j] * x[self.idx[j] as usize]).sum())
            .collect()
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let rpr = self.rows_per_ray.max(1);
        reduce_rays(self.nrows() / rpr, self.ncols, |ray, acc| {
            for r in ray * rpr..(ray + 1) * rpr {
                for j in self.ptr[r]..self.ptr[r + 1] {
                    acc[self.idx[j] as usize] += self.val[j] * y[r];
                }
            }
        })
    }
}
