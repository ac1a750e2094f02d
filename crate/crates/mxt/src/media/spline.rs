//! Tensor-product cubic B-splines on regular grids.
//!
//! A grid with `n` nodes on an axis carries `n + 2` coefficients. Interpolation
//! uses not-a-knot end conditions so cubics are reproduced exactly. An axis
//! with a single node is treated as constant along that direction.

use nalgebra::{DMatrix, DVector};

use super::jet::{Jet, M3, V3};

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub origin: f64,
    pub spacing: f64,
}

impl Axis {
    pub fn ncoef(&self) -> usize {
        if self.n == 1 {
            1
        } else {
            self.n + 2
        }
    }

    pub fn node(&self, k: usize) -> f64 {
        self.origin + self.spacing * k as f64
    }

    /// First stored coefficient index and basis values `[w, w', w'']` for the
    /// cell containing `x`; the flag is false when `x` lies outside the nodes.
    fn locate(&self, x: f64) -> (usize, [[f64; 4]; 3], bool) {
        if self.n == 1 {
            return (0, [[1.0, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4]], true);
        }
        let u = (x - self.origin) / self.spacing;
        let last = (self.n - 1) as f64;
        let inside = u >= -1e-12 && u <= last + 1e-12;
        let i = (u.floor().max(0.0) as usize).min(self.n - 2);
        let t = u - i as f64;
        let s = 1.0 - t;
        let h = self.spacing;
        let w = [
            s * s * s / 6.0,
            (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
            (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0,
            t * t * t / 6.0,
        ];
        let d = [
            -0.5 * s * s / h,
            (1.5 * t * t - 2.0 * t) / h,
            (-1.5 * t * t + t + 0.5) / h,
            0.5 * t * t / h,
        ];
        let h2 = h * h;
        let dd = [s / h2, (3.0 * t - 2.0) / h2, (1.0 - 3.0 * t) / h2, t / h2];
        (i, [w, d, dd], inside)
    }

    /// Matrix mapping node values to coefficients (not-a-knot interpolation).
    fn prefilter(&self) -> DMatrix<f64> {
        let n = self.n;
        let m = n + 2;
        let mut a = DMatrix::zeros(m, m);
        for k in 0..n {
            a[(k, k)] = 1.0 / 6.0;
            a[(k, k + 1)] = 4.0 / 6.0;
            a[(k, k + 2)] = 1.0 / 6.0;
        }
        let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
        for (j, s) in stencil.iter().enumerate() {
            a[(n, j)] = *s;
            a[(n + 1, m - 5 + j)] = *s;
        }
        let mut rhs = DMatrix::zeros(m, n);
        for k in 0..n {
            rhs[(k, k)] = 1.0;
        }
        a.lu().solve(&rhs).expect("not-a-knot system is nonsingular for n >= 4")
    }
}

/// Evaluation stencil of the tensor basis at one point.
#[derive(Clone, Debug)]
pub struct Stencil {
    base: [usize; 3],
    len: [usize; 3],
    w: [[[f64; 4]; 3]; 3],
    pub inside: bool,
}

/// Three-axis cubic B-spline basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineBasis {
    pub axes: [Axis; 3],
}

impl SplineBasis {
    pub fn new(origin: [f64; 3], spacing: [f64; 3], dims: [usize; 3]) -> Self {
        let mk = |a: usize| Axis { n: dims[a], origin: origin[a], spacing: spacing[a] };
        SplineBasis { axes: [mk(0), mk(1), mk(2)] }
    }

    pub fn coef_dims(&self) -> [usize; 3] {
        [self.axes[0].ncoef(), self.axes[1].ncoef(), self.axes[2].ncoef()]
    }

    pub fn ncoef(&self) -> usize {
        let d = self.coef_dims();
        d[0] * d[1] * d[2]
    }

    pub fn coef_index(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.coef_dims();
        (i * d[1] + j) * d[2] + k
    }

    /// Approximate spatial location associated with a coefficient.
    pub fn coef_position(&self, idx: usize) -> V3 {
        let d = self.coef_dims();
        let ijk = [idx / (d[1] * d[2]), (idx / d[2]) % d[1], idx % d[2]];
        let mut p = V3::zeros();
        for a in 0..3 {
            let ax = &self.axes[a];
            p[a] = if ax.n == 1 { ax.origin } else { ax.origin + ax.spacing * (ijk[a] as f64 - 1.0) };
        }
        p
    }

    pub fn stencil(&self, x: &V3) -> Stencil {
        let mut base = [0; 3];
        let mut len = [0; 3];
        let mut w = [[[0.0; 4]; 3]; 3];
        let mut inside = true;
        for a in 0..3 {
            let (i, ws, ins) = self.axes[a].locate(x[a]);
            base[a] = i;
            len[a] = if self.axes[a].n == 1 { 1 } else { 4 };
            w[a] = ws;
            inside &= ins;
        }
        Stencil { base, len, w, inside }
    }

    /// Visits every coefficient in the stencil with the value, gradient and
    /// Hessian of its basis function at the stencil point.
    pub fn visit(&self, st: &Stencil, mut f: impl FnMut(usize, f64, V3, M3)) {
        let d = self.coef_dims();
        for a in 0..st.len[0] {
            let (xa, xd, xdd) = (st.w[0][0][a], st.w[0][1][a], st.w[0][2][a]);
            for b in 0..st.len[1] {
                let (ya, yd, ydd) = (st.w[1][0][b], st.w[1][1][b], st.w[1][2][b]);
                for c in 0..st.len[2] {
                    let (za, zd, zdd) = (st.w[2][0][c], st.w[2][1][c], st.w[2][2][c]);
                    let idx = ((st.base[0] + a) * d[1] + st.base[1] + b) * d[2] + st.base[2] + c;
                    let v = xa * ya * za;
                    let g = V3::new(xd * ya * za, xa * yd * za, xa * ya * zd);
                    let hxy = xd * yd * za;
                    let hxz = xd * ya * zd;
                    let hyz = xa * yd * zd;
                    let h = M3::new(
                        xdd * ya * za, hxy, hxz,
                        hxy, xa * ydd * za, hyz,
                        hxz, hyz, xa * ya * zdd,
                    );
                    f(idx, v, g, h);
                }
            }
        }
    }

    /// Visits coefficients with basis values only.
    pub fn visit_value(&self, st: &Stencil, mut f: impl FnMut(usize, f64)) {
        let d = self.coef_dims();
        for a in 0..st.len[0] {
            for b in 0..st.len[1] {
                let wab = st.w[0][0][a] * st.w[1][0][b];
                let row = ((st.base[0] + a) * d[1] + st.base[1] + b) * d[2] + st.base[2];
                for c in 0..st.len[2] {
                    f(row + c, wab * st.w[2][0][c]);
                }
            }
        }
    }

    pub fn eval(&self, coefs: &[f64], x: &V3) -> Jet {
        let st = self.stencil(x);
        let mut j = Jet::constant(0.0);
        self.visit(&st, |idx, v, g, h| {
            let c = coefs[idx];
            j.v += c * v;
            j.g += g * c;
            j.h += h * c;
        });
        j
    }

    pub fn eval_value(&self, coefs: &[f64], x: &V3) -> f64 {
        let st = self.stencil(x);
        let mut s = 0.0;
        self.visit_value(&st, |idx, w| s += coefs[idx] * w);
        s
    }

    /// Converts node values (row-major, z fastest) into spline coefficients.
    pub fn interpolate(&self, values: &[f64]) -> Vec<f64> {
        let nd = [self.axes[0].n, self.axes[1].n, self.axes[2].n];
        assert_eq!(values.len(), nd[0] * nd[1] * nd[2]);
        let mut cur = values.to_vec();
        let mut cd = nd;
        for a in 0..3 {
            if nd[a] == 1 {
                continue;
            }
            let p = self.axes[a].prefilter();
            let mut nd2 = cd;
            nd2[a] = cd[a] + 2;
            let mut out = vec![0.0; nd2[0] * nd2[1] * nd2[2]];
            let stride = |d: [usize; 3], ax: usize| match ax {
                0 => d[1] * d[2],
                1 => d[2],
                _ => 1,
            };
            let (si, so) = (stride(cd, a), stride(nd2, a));
            let others: Vec<usize> = (0..3).filter(|&b| b != a).collect();
            let mut line = DVector::zeros(cd[a]);
            for u in 0..cd[others[0]] {
                for v in 0..cd[others[1]] {
                    let mut ii = [0; 3];
                    ii[others[0]] = u;
                    ii[others[1]] = v;
                    let b_in = (ii[0] * cd[1] + ii[1]) * cd[2] + ii[2];
                    let b_out = (ii[0] * nd2[1] + ii[1]) * nd2[2] + ii[2];
                    for k in 0..cd[a] {
                        line[k] = cur[b_in + k * si];
                    }
                    let c = &p * &line;
                    for k in 0..nd2[a] {
                        out[b_out + k * so] = c[k];
                    }
                }
            }
            cur = out;
            cd = nd2;
        }
        cur
    }
}
