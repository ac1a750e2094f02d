//! Explicit Runge-Kutta steps for autonomous systems on fixed-size states.
//!
//! Augmented systems (frames, Jacobi fields, amplitudes) are replayed with the
//! step sequence of the traced ray; because every component is advanced by the
//! same arithmetic, the position and momentum parts reproduce the trace bit
//! for bit.

/// Integration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Dormand-Prince 5(4), adaptive, propagating the fifth-order solution.
    Dp45,
    /// Classical fixed-step RK4.
    Rk4,
}

const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const DP_BSTAR: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const RK4_A: [[f64; 6]; 3] = [
    [0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.5, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
];
const RK4_B: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

fn stage<const N: usize>(y: &[f64; N], h: f64, a: &[f64; 6], k: &[[f64; N]], n: usize) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[j] * k[j][i];
        }
        *o += h * acc;
    }
    out
}

/// One step of size `h`. With `want_error` the embedded error estimate is
/// returned for adaptive methods (costs one extra evaluation for DP45).
pub fn rk_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64, method: Method, want_error: bool) -> ([f64; N], Option<[f64; N]>)
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    match method {
        Method::Rk4 => {
            let mut k = [[0.0; N]; 4];
            k[0] = f(y);
            for s in 1..4 {
                k[s] = f(&stage(y, h, &RK4_A[s - 1], &k, s));
            }
            let mut b = [0.0; 6];
            b[..4].copy_from_slice(&RK4_B);
            (stage(y, h, &b, &k, 4), None)
        }
        Method::Dp45 => {
            let mut k = [[0.0; N]; 7];
            k[0] = f(y);
            for s in 1..6 {
                k[s] = f(&stage(y, h, &DP_A[s - 1], &k, s));
            }
            let ynew = stage(y, h, &DP_B, &k, 6);
            if !want_error {
                return (ynew, None);
            }
            k[6] = f(&ynew);
            let mut err = [0.0; N];
            for (i, e) in err.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..7 {
                    let b = if j < 6 { DP_B[j] } else { 0.0 };
                    acc += (b - DP_BSTAR[j]) * k[j][i];
                }
                *e = h * acc;
            }
            (ynew, Some(err))
        }
    }
}

/// Scaled RMS norm of an error estimate over the first `m` components.
pub fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], m: usize, rtol: f64, atol: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..m {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / m as f64).sqrt()
}
