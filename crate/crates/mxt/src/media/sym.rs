use super::jet::{Jet, M3, V3};

/// Symmetric 3x3 tensor stored as (xx, yy, zz, xy, xz, yz).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SymTensor3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl SymTensor3 {
    pub fn from_components(c: [f64; 6]) -> Self {
        SymTensor3 { xx: c[0], yy: c[1], zz: c[2], xy: c[3], xz: c[4], yz: c[5] }
    }

    pub fn components(&self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
    }

    /// Symmetric part of a general matrix.
    pub fn from_matrix(m: &M3) -> Self {
        SymTensor3 {
            xx: m[(0, 0)],
            yy: m[(1, 1)],
            zz: m[(2, 2)],
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            xz: 0.5 * (m[(0, 2)] + m[(2, 0)]),
            yz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
        }
    }

    pub fn to_matrix(&self) -> M3 {
        M3::new(self.xx, self.xy, self.xz, self.xy, self.yy, self.yz, self.xz, self.yz, self.zz)
    }

    pub fn identity() -> Self {
        SymTensor3 { xx: 1.0, yy: 1.0, zz: 1.0, ..Default::default() }
    }

    pub fn scale(&self, k: f64) -> Self {
        let c = self.components();
        SymTensor3::from_components(c.map(|v| v * k))
    }

    pub fn add(&self, o: &SymTensor3) -> Self {
        let (a, b) = (self.components(), o.components());
        SymTensor3::from_components(std::array::from_fn(|i| a[i] + b[i]))
    }

    pub fn sub(&self, o: &SymTensor3) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// q(v) = sum_ij T_ij v_i v_j.
    pub fn quad(&self, v: &V3) -> f64 {
        self.xx * v.x * v.x
            + self.yy * v.y * v.y
            + self.zz * v.z * v.z
            + 2.0 * (self.xy * v.x * v.y + self.xz * v.x * v.z + self.yz * v.y * v.z)
    }

    /// Symmetrized product a (x)s b = (a b^T + b a^T) / 2.
    pub fn sym_product(a: &V3, b: &V3) -> Self {
        SymTensor3::from_matrix(&(a * b.transpose()))
    }
}

/// A(u) = -Lap(u) g + 2 Hess(u) + |grad u|^2 g + 4 c^-1 grad c (x)s grad u,
/// given jets of c and u at a point.
pub fn tensor_a(c: &Jet, u: &Jet) -> SymTensor3 {
    let iso = -u.laplacian() + u.g.norm_squared();
    SymTensor3::from_matrix(&(u.h * 2.0))
        .add(&SymTensor3::identity().scale(iso))
        .add(&SymTensor3::sym_product(&c.g, &u.g).scale(4.0 / c.v))
}

/// Gateaux derivative of u -> A(u) at u in the direction w.
pub fn tensor_a_derivative(c: &Jet, u: &Jet, w: &Jet) -> SymTensor3 {
    let iso = -w.laplacian() + 2.0 * u.g.dot(&w.g);
    SymTensor3::from_matrix(&(w.h * 2.0))
        .add(&SymTensor3::identity().scale(iso))
        .add(&SymTensor3::sym_product(&c.g, &w.g).scale(4.0 / c.v))
}

/// A(u)(e, e) for a single direction without forming the tensor.
pub fn tensor_a_quad(c: &Jet, u: &Jet, e: &V3) -> f64 {
    let e2 = e.norm_squared();
    (-u.laplacian() + u.g.norm_squared()) * e2
        + 2.0 * e.dot(&(u.h * e))
        + 4.0 / c.v * c.g.dot(e) * u.g.dot(e)
}
