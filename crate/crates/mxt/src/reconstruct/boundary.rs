use nalgebra::{DMatrix, DVector};

use crate::amplitude::{boundary_symbol_s0, boundary_symbol_s1};
use crate::error::{MxtError, Result};
use crate::media::V3;

/// Fitted order-0 boundary values.
#[derive(Clone, Debug, PartialEq)]
pub struct Order0Fit {
    pub eps: f64,
    pub mu: f64,
    /// 2-norm condition number of the design matrix.
    pub cond: f64,
    pub warning: Option<String>,
}

/// Fitted order-1 boundary values with outward normal derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Order1Fit {
    pub dnu_eps: f64,
    pub dnu_mu: f64,
    pub sigma: f64,
    pub cond: f64,
}

const COND_WARN: f64 = 1e8;
const COND_FAIL: f64 = 1e13;

pub(super) fn lsq(a: DMatrix<f64>, b: DVector<f64>) -> Result<(DVector<f64>, f64)> {
    // column scaling keeps the condition estimate meaningful
    let scale: Vec<f64> = a.column_iter().map(|c| c.norm().max(f64::MIN_POSITIVE)).collect();
    let mut s = a.clone();
    for (j, mut c) in s.column_iter_mut().enumerate() {
        c /= scale[j];
    }
    let svd = s.svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < COND_FAIL) {
        return Err(MxtError::IllConditioned(cond));
    }
    let mut x = svd.solve(&b, 0.0).map_err(|_| MxtError::IllConditioned(cond))?;
    for (j, v) in x.iter_mut().enumerate() {
        *v /= scale[j];
    }
    Ok((x, cond))
}

/// Fits (S0/rho^2)^2 = eps/mu - rho^2/mu^2 by least squares.
pub fn recover_boundary_order0(samples: &[(f64, f64)]) -> Result<Order0Fit> {
    if samples.len() < 2 {
        return Err(MxtError::IllConditioned(f64::INFINITY));
    }
    let n = samples.len();
    let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { -samples[i].0 * samples[i].0 });
    let b = DVector::from_fn(n, |i, _| {
        let (rho, s0) = samples[i];
        (s0 / (rho * rho)).powi(2)
    });
    let (x, cond) = lsq(a, b)?;
    let (ca, cb) = (x[0], x[1]);
    if !(ca > 0.0 && cb > 0.0) {
        return Err(MxtError::Inconsistent(format!("order-0 fit gives a = {ca:.3e}, b = {cb:.3e}")));
    }
    let mu = 1.0 / cb.sqrt();
    let mut r2: Vec<f64> = samples.iter().map(|s| s.0 * s.0).collect();
    r2.sort_by(f64::total_cmp);
    let gap = r2.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let warning = (cond > COND_WARN || gap < 1e-6 * r2[n - 1])
        .then(|| format!("near-duplicate rho values, condition {cond:.2e}"));
    Ok(Order0Fit { eps: ca * mu, mu, cond, warning })
}

/// Fits S1 = alpha + beta rho^2 + gamma sqrt(eps mu - rho^2) and converts
/// to outward derivatives: d3 mu = -beta mu, d3 eps = (eps d3 mu - 2 alpha)/mu,
/// sigma = gamma/mu, d/dnu = -d3.
pub fn recover_boundary_order1(samples: &[(f64, f64)], eps: f64, mu: f64) -> Result<Order1Fit> {
    if samples.len() < 3 {
        return Err(MxtError::IllConditioned(f64::INFINITY));
    }
    let n = samples.len();
    let mut rows = Vec::with_capacity(3 * n);
    for &(rho, _) in samples {
        let r2 = rho * rho;
        if r2 >= eps * mu {
            return Err(MxtError::Evanescent(rho));
        }
        rows.extend([1.0, r2, (eps * mu - r2).sqrt()]);
    }
    let a = DMatrix::from_row_slice(n, 3, &rows);
    let b = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let (x, cond) = lsq(a, b)?;
    let (alpha, beta, gamma) = (x[0], x[1], x[2]);
    let d3_mu = -beta * mu;
    let d3_eps = (eps * d3_mu - 2.0 * alpha) / mu;
    Ok(Order1Fit { dnu_eps: -d3_eps, dnu_mu: -d3_mu, sigma: gamma / mu, cond })
}

/// Chebyshev-spaced rho^2 values in (0.1 eps mu, 0.9 eps mu); returns rho.
pub fn chebyshev_rho(eps: f64, mu: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (0.1 * eps * mu, 0.9 * eps * mu);
    (0..n)
        .map(|k| {
            let t = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos();
            (0.5 * (lo + hi) + 0.5 * (hi - lo) * t).sqrt()
        })
        .collect()
}

/// Boundary symbol table at one point: rho with S0 and S1.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySymbolSample {
    pub x0: V3,
    pub rho: f64,
    pub s0: f64,
    pub s1: f64,
}

impl BoundarySymbolSample {
    pub fn from_medium(x0: V3, rho: f64, eps: f64, mu: f64, sigma: f64, dnu_eps: f64, dnu_mu: f64) -> Result<Self> {
        Ok(BoundarySymbolSample {
            x0,
            rho,
            s0: boundary_symbol_s0(eps, mu, rho)?,
            s1: boundary_symbol_s1(eps, mu, sigma, dnu_eps, dnu_mu, rho)?,
        })
    }
}

/// Recovered values and outward normal derivatives at boundary points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryJets {
    pub points: Vec<V3>,
    pub eps: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub dnu_eps: Vec<f64>,
    pub dnu_mu: Vec<f64>,
}

impl BoundaryJets {
    /// Inverts symbol tables grouped by boundary point (consecutive samples
    /// sharing x0 form one group).
    pub fn identify(samples: &[BoundarySymbolSample]) -> Result<Self> {
        let mut jets = BoundaryJets::default();
        let mut start = 0;
        while start < samples.len() {
            let x0 = samples[start].x0;
            let mut end = start;
            while end < samples.len() && samples[end].x0 == x0 {
                end += 1;
            }
            let group = &samples[start..end];
            let o0 = recover_boundary_order0(&group.iter().map(|s| (s.rho, s.s0)).collect::<Vec<_>>())?;
            let o1 = recover_boundary_order1(&group.iter().map(|s| (s.rho, s.s1)).collect::<Vec<_>>(), o0.eps, o0.mu)?;
            jets.points.push(x0);
            jets.eps.push(o0.eps);
            jets.mu.push(o0.mu);
            jets.sigma.push(o1.sigma);
            jets.dnu_eps.push(o1.dnu_eps);
            jets.dnu_mu.push(o1.dnu_mu);
            start = end;
        }
        if jets.points.is_empty() {
            return Err(MxtError::Precondition("no boundary symbol samples".into()));
        }
        if let Some(k) = (0..jets.points.len()).find(|&k| !(jets.eps[k] > 0.0 && jets.mu[k] > 0.0)) {
            return Err(MxtError::Inconsistent(format!("non-positive coefficients at boundary point {k}")));
        }
        Ok(jets)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Inverse-distance weighted value of a per-point quantity near `y`,
    /// using the nearest few points.
    pub fn interpolate(&self, y: &V3, q: &[f64]) -> f64 {
        let mut near: Vec<(f64, f64)> = self.points.iter().zip(q).map(|(p, v)| ((p - y).norm(), *v)).collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        if near[0].0 < 1e-12 {
            return near[0].1;
        }
        let k = near.len().min(4);
        let (mut num, mut den) = (0.0, 0.0);
        for &(d, v) in &near[..k] {
            let w = 1.0 / (d * d);
            num += w * v;
            den += w;
        }
        num / den
    }

    /// Wave speed c = (eps mu)^-1/2 and its outward normal derivative.
    pub fn speed_jet(&self, k: usize) -> (f64, f64) {
        let c = 1.0 / (self.eps[k] * self.mu[k]).sqrt();
        (c, -0.5 * c * (self.dnu_eps[k] / self.eps[k] + self.dnu_mu[k] / self.mu[k]))
    }
}
