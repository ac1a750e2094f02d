use nalgebra::{DMatrix, DVector};

use super::boundary::lsq;
use crate::error::{MxtError, Result};
use crate::geometry::LensRecord;
use crate::media::V3;

/// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes),
/// linear beyond the end knots.
#[derive(Clone, Debug, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two knots.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![del[0]; 2];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let (w1, w2) = (2.0 * h[k] + h[k - 1], h[k] + 2.0 * h[k - 1]);
                    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
                let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
                if s * d0 <= 0.0 {
                    0.0
                } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
                    3.0 * d0
                } else {
                    s
                }
            };
            d[0] = end(h[0], h[1], del[0], del[1]);
            d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Pchip { x, y, d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let k = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        self.y[k] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + self.d[k] * h * (s3 - 2.0 * s2 + s)
            + self.y[k + 1] * (-2.0 * s3 + 3.0 * s2)
            + self.d[k + 1] * h * (s3 - s2)
    }
}

fn gauss_panels(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let m = a + h * (k as f64 + 0.5);
        for (x, w) in X.iter().zip(&W) {
            s += w * f(m + 0.5 * h * x);
        }
    }
    s * 0.5 * h
}

/// h(p) = T(p) / sqrt(pmax^2 - p^2), even in p: interpolated for short
/// records, least-squares Chebyshev fit in p^2 otherwise (which also smooths
/// noisy times while keeping T'(0) = 0).
enum Quotient {
    Interp(Pchip),
    Cheb { lo: f64, hi: f64, coef: Vec<f64> },
}

const FIT_MIN: usize = 16;
const FIT_DEGREE: usize = 6;

fn chebyshev(t: f64, n: usize) -> Vec<f64> {
    let mut v = vec![1.0; n];
    if n > 1 {
        v[1] = t;
    }
    for k in 2..n {
        v[k] = 2.0 * t * v[k - 1] - v[k - 2];
    }
    v
}

impl Quotient {
    fn fit(s: &[(f64, f64)], pmax: f64) -> Result<Self> {
        let q: Vec<f64> = s.iter().map(|v| v.1 / (pmax * pmax - v.0 * v.0).sqrt()).collect();
        if s.len() < FIT_MIN {
            return Ok(Quotient::Interp(Pchip::new(s.iter().map(|v| v.0).collect(), q)));
        }
        let (lo, hi) = (0.0, pmax * pmax);
        let m = (FIT_DEGREE + 1).min(s.len() / 2);
        let rows: Vec<Vec<f64>> = s.iter().map(|v| chebyshev((2.0 * v.0 * v.0 - lo - hi) / (hi - lo), m)).collect();
        let a = DMatrix::from_fn(s.len(), m, |i, j| rows[i][j]);
        let (coef, _) = lsq(a, DVector::from_vec(q))?;
        Ok(Quotient::Cheb { lo, hi, coef: coef.iter().copied().collect() })
    }

    fn eval(&self, p: f64) -> f64 {
        match self {
            Quotient::Interp(pc) => pc.eval(p),
            Quotient::Cheb { lo, hi, coef } => {
                let t = ((2.0 * p * p - lo - hi) / (hi - lo)).clamp(-1.0, 1.0);
                chebyshev(t, coef.len()).iter().zip(coef).map(|(a, b)| a * b).sum()
            }
        }
    }
}

/// Wave speed on turning radii.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    /// Increasing radii.
    pub r: Vec<f64>,
    pub c: Vec<f64>,
}

impl RadialProfile {
    /// Linear interpolation; `None` outside the sampled radii.
    pub fn eval(&self, r: f64) -> Option<f64> {
        let n = self.r.len();
        if n == 0 || r < self.r[0] || r > self.r[n - 1] {
            return None;
        }
        let k = self.r.partition_point(|&v| v <= r).min(n - 1).max(1);
        let t = (r - self.r[k - 1]) / (self.r[k] - self.r[k - 1]);
        Some(self.c[k - 1] + t * (self.c[k] - self.c[k - 1]))
    }
}

/// Ray parameter p = b / c(R) and travel time of lens records in a ball,
/// b the Euclidean impact parameter of the entry line.
pub fn ray_parameter_samples(records: &[LensRecord], center: &V3, c_boundary: f64) -> Vec<(f64, f64)> {
    records
        .iter()
        .map(|r| {
            let b = (r.x_in - center).cross(&r.v_in.normalize()).norm();
            (b / c_boundary, r.tau)
        })
        .collect()
}

/// Travel-time inversion for a radial medium on a ball of radius `radius`.
///
/// From samples (p, T(p)) the epicentral distance follows without
/// differentiating the data, Delta(p) = T(p)/p - int_p^pmax T(q)/q^2 dq with
/// pmax = R/c(R); turning radii then follow from
/// r(p) = R exp(-(1/pi) int_0^Delta(p) acosh(P(D)/p) dD).
pub fn herglotz_invert(samples: &[(f64, f64)], radius: f64, c_boundary: f64) -> Result<RadialProfile> {
    let pmax = radius / c_boundary;
    let mut s: Vec<(f64, f64)> = samples.iter().copied().filter(|(p, _)| *p > 0.0 && *p < pmax).collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    if s.len() < 3 {
        return Err(MxtError::Precondition("need at least three ray parameters below R/c(R)".into()));
    }
    if let Some(k) = s.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(MxtError::Herglotz(k + 1));
    }
    // T vanishes like sqrt(pmax - p); model the smooth quotient
    let g = Quotient::fit(&s, pmax)?;
    let s: Vec<(f64, f64)> = s.iter().map(|&(p, _)| (p, g.eval(p) * (pmax * pmax - p * p).sqrt())).collect();
    let delta: Vec<f64> = s
        .iter()
        .map(|&(p, t)| {
            // near pmax the square-root substitution, below pmax/2 a log
            // variable for the 1/q^2 growth
            let mid = p.max(0.5 * pmax);
            let umax = (pmax - mid).sqrt();
            let mut tail = gauss_panels(0.0, umax, 64, |u| {
                let q = pmax - u * u;
                2.0 * u * u * g.eval(q) * (pmax + q).sqrt() / (q * q)
            });
            if p < mid {
                tail += gauss_panels(p.ln(), mid.ln(), 64, |l| {
                    let q = l.exp();
                    g.eval(q) * (pmax * pmax - q * q).sqrt() / q
                });
            }
            t / p - tail
        })
        .collect();
    // P(Delta) must decrease strictly (Herglotz condition)
    let mut dp: Vec<(f64, f64)> = delta.iter().copied().zip(s.iter().map(|v| v.0)).collect();
    dp.reverse();
    if let Some(k) = dp.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(MxtError::Herglotz(s.len() - 1 - k));
    }
    let mut kx = vec![0.0];
    let mut ky = vec![pmax];
    kx.extend(dp.iter().map(|v| v.0 * v.0));
    ky.extend(dp.iter().map(|v| v.1));
    let pd = Pchip::new(kx, ky);
    let mut r = Vec::with_capacity(dp.len());
    let mut c = Vec::with_capacity(dp.len());
    for &(dk, pk) in &dp {
        let umax = dk.sqrt();
        let integral = gauss_panels(0.0, umax, 64, |u| {
            let d = dk - u * u;
            let ratio = (pd.eval(d * d) / pk).max(1.0);
            2.0 * u * ratio.acosh()
        });
        let rk = radius * (-integral / std::f64::consts::PI).exp();
        r.push(rk);
        c.push(rk / pk);
    }
    r.reverse();
    c.reverse();
    Ok(RadialProfile { r, c })
}
