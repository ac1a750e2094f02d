use nalgebra::{Matrix3, Vector3};

pub type V3 = Vector3<f64>;
pub type M3 = Matrix3<f64>;

/// Second-order jet of a scalar field: value, gradient and Hessian at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: V3,
    pub h: M3,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, g: V3::zeros(), h: M3::zeros() }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { v: self.v + o.v, g: self.g + o.g, h: self.h + o.h }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet { v: k * self.v, g: self.g * k, h: self.h * k }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            g: o.g * self.v + self.g * o.v,
            h: o.h * self.v + self.h * o.v + self.g * o.g.transpose() + o.g * self.g.transpose(),
        }
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        Jet { v: f0, g: self.g * f1, h: self.g * self.g.transpose() * f2 + self.h * f1 }
    }

    pub fn exp(&self) -> Jet {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn ln(&self) -> Jet {
        let v = self.v;
        self.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn powf(&self, p: f64) -> Jet {
        let v = self.v;
        self.compose(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0))
    }

    pub fn recip(&self) -> Jet {
        let v = self.v;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn laplacian(&self) -> f64 {
        self.h.trace()
    }
}
