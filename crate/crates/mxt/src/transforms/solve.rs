use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::media::SplineBasis;

/// Discrete gradient on the coefficient grid, scaled so that |D x|^2
/// approximates the integral of |grad f|^2.
#[derive(Clone, Debug, PartialEq)]
pub struct Regularizer {
    dims: [usize; 3],
    inv_h: [f64; 3],
    weight: f64,
}

impl Regularizer {
    pub fn from_basis(b: &SplineBasis) -> Self {
        let dims = b.coef_dims();
        let mut inv_h = [0.0; 3];
        let mut vol = 1.0;
        for a in 0..3 {
            if dims[a] > 1 {
                inv_h[a] = 1.0 / b.axes[a].spacing;
                vol *= b.axes[a].spacing;
            }
        }
        Regularizer { dims, inv_h, weight: vol.sqrt() }
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    fn edges(&self, mut f: impl FnMut(usize, usize, usize, f64)) {
        let d = self.dims;
        let mut row = 0;
        for a in 0..3 {
            if d[a] < 2 {
                continue;
            }
            let s = self.inv_h[a] * self.weight;
            for i in 0..d[0] - usize::from(a == 0) {
                for j in 0..d[1] - usize::from(a == 1) {
                    for k in 0..d[2] - usize::from(a == 2) {
                        let lo = self.idx(i, j, k);
                        let hi = self.idx(i + usize::from(a == 0), j + usize::from(a == 1), k + usize::from(a == 2));
                        f(row, lo, hi, s);
                        row += 1;
                    }
                }
            }
        }
    }

    pub fn nrows(&self) -> usize {
        let mut n = 0;
        self.edges(|_, _, _, _| n += 1);
        n
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.edges(|r, lo, hi, s| out[r] = s * (x[hi] - x[lo]));
        out
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.iter().product()];
        self.edges(|r, lo, hi, s| {
            out[hi] += s * y[r];
            out[lo] -= s * y[r];
        });
        out
    }
}

/// Outcome of a regularized least-squares solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Data misfit |A x - b|.
    pub residual: f64,
    /// Absolute Tikhonov weight used.
    pub reg_weight: f64,
    pub converged: bool,
    /// Relative normal-equation residual per iteration.
    pub history: Vec<f64>,
}

/// A linear map given by its action and adjoint.
pub struct LinearMap<'a> {
    pub ncols: usize,
    pub apply: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub adjoint: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn masked(x: &[f64], free: Option<&[bool]>) -> Vec<f64> {
    match free {
        Some(m) => x.iter().zip(m).map(|(v, &f)| if f { *v } else { 0.0 }).collect(),
        None => x.to_vec(),
    }
}

/// Estimates the largest eigenvalue of K^T K restricted to the free set.
pub fn power_estimate(k: &dyn Fn(&[f64]) -> Vec<f64>, kt: &dyn Fn(&[f64]) -> Vec<f64>, n: usize, free: Option<&[bool]>, iters: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = masked(&(0..n).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<_>>(), free);
    let mut lam = 0.0;
    for _ in 0..iters {
        let nx = dot(&x, &x).sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = masked(&kt(&k(&x)), free);
        lam = dot(&x, &y);
        x = y;
    }
    lam
}

/// Tikhonov weight `rel` made scale free: rel * |A|^2 / |D|^2.
pub fn absolute_weight(a: &LinearMap, reg: &Regularizer, free: Option<&[bool]>, rel: f64) -> f64 {
    if rel == 0.0 {
        return 0.0;
    }
    let sa = power_estimate(a.apply, a.adjoint, a.ncols, free, 12);
    let sd = power_estimate(&|x| reg.apply(x), &|y| reg.adjoint(y), a.ncols, free, 12);
    if sd > 0.0 {
        rel * sa / sd
    } else {
        0.0
    }
}

/// CGLS for min |A x - b|^2 + lambda |D x|^2 over the free entries of x,
/// starting from `x0` (fixed entries keep their values).
pub fn cgls_tikhonov(
    a: &LinearMap,
    b: &[f64],
    reg: &Regularizer,
    lambda: f64,
    x0: &[f64],
    free: Option<&[bool]>,
    iters: usize,
    tol: f64,
) -> (Vec<f64>, SolveReport) {
    let sl = lambda.sqrt();
    let m = b.len();
    let k = |d: &[f64]| -> Vec<f64> {
        let mut out = (a.apply)(d);
        if sl > 0.0 {
            out.extend(reg.apply(d).into_iter().map(|v| v * sl));
        }
        out
    };
    let kt = |r: &[f64]| -> Vec<f64> {
        let mut out = (a.adjoint)(&r[..m]);
        if sl > 0.0 {
            for (o, v) in out.iter_mut().zip(reg.adjoint(&r[m..])) {
                *o += sl * v;
            }
        }
        masked(&out, free)
    };
    let mut r: Vec<f64> = b.to_vec();
    for (ri, ai) in r.iter_mut().zip((a.apply)(x0)) {
        *ri -= ai;
    }
    if sl > 0.0 {
        r.extend(reg.apply(x0).into_iter().map(|v| -sl * v));
    }
    let mut x = x0.to_vec();
    let mut s = kt(&r);
    let mut p = s.clone();
    let g0 = dot(&s, &s);
    let mut gamma = g0;
    let mut history = Vec::new();
    let mut converged = g0 == 0.0;
    let mut it = 0;
    while it < iters && !converged {
        let q = k(&p);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            converged = true;
            break;
        }
        let alpha = gamma / qq;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        s = kt(&r);
        let gn = dot(&s, &s);
        it += 1;
        history.push((gn / g0).sqrt());
        if (gn / g0).sqrt() <= tol {
            converged = true;
            break;
        }
        let beta = gn / gamma;
        gamma = gn;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
    }
    let residual = dot(&r[..m], &r[..m]).sqrt();
    (x, SolveReport { iterations: it, residual, reg_weight: lambda, converged, history })
}

/// Discrepancy principle: scans relative weights downward from `rel_max` by
/// factors of 4 and keeps the first solution whose misfit is at most
/// `target`. Falls back to the smallest weight tried.
#[allow(clippy::too_many_arguments)]
pub fn morozov(
    a: &LinearMap,
    b: &[f64],
    reg: &Regularizer,
    x0: &[f64],
    free: Option<&[bool]>,
    target: f64,
    rel_max: f64,
    iters: usize,
    tol: f64,
) -> (Vec<f64>, SolveReport) {
    let unit = absolute_weight(a, reg, free, 1.0);
    let mut rel = rel_max;
    let mut start = x0.to_vec();
    let mut best = None;
    for _ in 0..16 {
        let (x, rep) = cgls_tikhonov(a, b, reg, rel * unit, &start, free, iters, tol);
        let ok = rep.residual <= target;
        start = x.clone();
        best = Some((x, rep));
        if ok {
            break;
        }
        rel /= 4.0;
    }
    best.expect("at least one weight is tried")
}
