use std::sync::Arc;

use super::grid::{GridField, SplineField};
use super::jet::{Jet, M3, V3};

/// Anything that can report value, gradient and Hessian at a point.
pub trait ScalarField: Send + Sync {
    fn jet(&self, x: &V3) -> Jet;

    fn value(&self, x: &V3) -> f64 {
        self.jet(x).v
    }
}

/// Closed-form scalar fields and their compositions. Every variant supplies
/// exact derivatives through the chain rule.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Constant(f64),
    /// c0 + a . x
    Affine { c0: f64, a: V3 },
    /// amp * exp(-rho^2 / 2), rho^2 = sum_i (w_i (x_i - center_i))^2.
    /// A zero inverse width makes the field constant along that axis.
    Gaussian { amp: f64, center: V3, inv_width: V3 },
    /// amp * (1 - rho^2)^4 inside rho < 1, zero outside (C^3).
    CompactBump { amp: f64, center: V3, inv_width: V3 },
    /// Polynomial in r^2 = |x - center|^2 with coefficients of r^0, r^2, r^4, ...
    RadialPoly { center: V3, coeffs: Vec<f64> },
    /// |x - center|
    Norm { center: V3 },
    Sum(Vec<Field>),
    Product(Vec<Field>),
    Exp(Box<Field>),
    Ln(Box<Field>),
    Pow(Box<Field>, f64),
    Grid(Arc<GridField>),
    Spline(Arc<SplineField>),
}

impl Field {
    pub fn gaussian(amp: f64, center: [f64; 3], width: f64) -> Field {
        Field::Gaussian { amp, center: V3::from(center), inv_width: V3::repeat(1.0 / width) }
    }

    /// Gaussian independent of x3 (for planar slice experiments).
    pub fn gaussian_2d(amp: f64, center: [f64; 2], width: f64) -> Field {
        Field::Gaussian {
            amp,
            center: V3::new(center[0], center[1], 0.0),
            inv_width: V3::new(1.0 / width, 1.0 / width, 0.0),
        }
    }

    pub fn bump(amp: f64, center: [f64; 3], radius: f64) -> Field {
        Field::CompactBump { amp, center: V3::from(center), inv_width: V3::repeat(1.0 / radius) }
    }

    pub fn bump_2d(amp: f64, center: [f64; 2], radius: f64) -> Field {
        Field::CompactBump {
            amp,
            center: V3::new(center[0], center[1], 0.0),
            inv_width: V3::new(1.0 / radius, 1.0 / radius, 0.0),
        }
    }

    pub fn plus(self, o: Field) -> Field {
        Field::Sum(vec![self, o])
    }

    pub fn times(self, o: Field) -> Field {
        Field::Product(vec![self, o])
    }

    pub fn scaled(self, k: f64) -> Field {
        Field::Product(vec![Field::Constant(k), self])
    }

    pub fn exp(self) -> Field {
        Field::Exp(Box::new(self))
    }

    pub fn powf(self, p: f64) -> Field {
        Field::Pow(Box::new(self), p)
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            Field::Constant(v) => Some(*v),
            _ => None,
        }
    }
}

fn weighted_rho2(x: &V3, center: &V3, w: &V3) -> Jet {
    let d = (x - center).component_mul(w);
    let w2 = w.component_mul(w);
    Jet {
        v: d.norm_squared(),
        g: (x - center).component_mul(&w2) * 2.0,
        h: M3::from_diagonal(&(w2 * 2.0)),
    }
}

impl ScalarField for Field {
    fn jet(&self, x: &V3) -> Jet {
        match self {
            Field::Constant(v) => Jet::constant(*v),
            Field::Affine { c0, a } => Jet { v: c0 + a.dot(x), g: *a, h: M3::zeros() },
            Field::Gaussian { amp, center, inv_width } => {
                let r = weighted_rho2(x, center, inv_width);
                let e = (-0.5 * r.v).exp();
                r.compose(amp * e, -0.5 * amp * e, 0.25 * amp * e)
            }
            Field::CompactBump { amp, center, inv_width } => {
                let r = weighted_rho2(x, center, inv_width);
                if r.v >= 1.0 {
                    return Jet::constant(0.0);
                }
                let s = 1.0 - r.v;
                r.compose(amp * s.powi(4), -4.0 * amp * s.powi(3), 12.0 * amp * s * s)
            }
            Field::RadialPoly { center, coeffs } => {
                let r = weighted_rho2(x, center, &V3::repeat(1.0));
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for (k, a) in coeffs.iter().enumerate().rev() {
                    let kf = k as f64;
                    p = p * r.v + a;
                    if k >= 1 {
                        dp = dp * r.v + kf * a;
                    }
                    if k >= 2 {
                        ddp = ddp * r.v + kf * (kf - 1.0) * a;
                    }
                }
                r.compose(p, dp, ddp)
            }
            Field::Norm { center } => {
                let d = x - center;
                let r = d.norm();
                if r < 1e-300 {
                    return Jet::constant(0.0);
                }
                let n = d / r;
                Jet { v: r, g: n, h: (M3::identity() - n * n.transpose()) / r }
            }
            Field::Sum(fs) => fs.iter().fold(Jet::constant(0.0), |acc, f| acc.add(&f.jet(x))),
            Field::Product(fs) => fs.iter().fold(Jet::constant(1.0), |acc, f| acc.mul(&f.jet(x))),
            Field::Exp(f) => f.jet(x).exp(),
            Field::Ln(f) => f.jet(x).ln(),
            Field::Pow(f, p) => f.jet(x).powf(*p),
            Field::Grid(g) => g.component_jet(0, x),
            Field::Spline(s) => s.jet(x),
        }
    }

    fn value(&self, x: &V3) -> f64 {
        match self {
            Field::Constant(v) => *v,
            Field::Sum(fs) => fs.iter().map(|f| f.value(x)).sum(),
            Field::Product(fs) => fs.iter().map(|f| f.value(x)).product(),
            Field::Exp(f) => f.value(x).exp(),
            Field::Grid(g) => g.value(x),
            Field::Spline(s) => s.basis.eval_value(&s.coefs, x),
            _ => self.jet(x).v,
        }
    }
}
