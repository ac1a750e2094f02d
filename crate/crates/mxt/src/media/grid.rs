use std::sync::Arc;

use super::jet::{Jet, V3};
use super::spline::SplineBasis;
use super::sym::SymTensor3;
use crate::error::{MxtError, Result};

/// Regular-grid field with scalar (`ncomp = 1`) or symmetric-tensor
/// (`ncomp = 6`, order xx yy zz xy xz yz) node values and cubic-spline
/// interpolation that passes through every node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub dims: [usize; 3],
    pub ncomp: usize,
    pub values: Vec<f64>,
    basis: SplineBasis,
    coefs: Vec<Vec<f64>>,
}

impl GridField {
    pub fn new(origin: [f64; 3], spacing: [f64; 3], dims: [usize; 3], ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if ncomp != 1 && ncomp != 6 {
            return Err(MxtError::Format(format!("component count {ncomp} not in {{1, 6}}")));
        }
        for a in 0..3 {
            if !(spacing[a] > 0.0) {
                return Err(MxtError::Format(format!("spacing on axis {a} must be positive")));
            }
            if dims[a] == 0 || (dims[a] > 1 && dims[a] < 4) {
                return Err(MxtError::Format(format!("axis {a} needs 1 or at least 4 nodes, got {}", dims[a])));
            }
        }
        let nn = dims[0] * dims[1] * dims[2];
        if values.len() != nn * ncomp {
            return Err(MxtError::Format(format!("expected {} values, got {}", nn * ncomp, values.len())));
        }
        let basis = SplineBasis::new(origin, spacing, dims);
        let coefs = (0..ncomp)
            .map(|c| {
                let comp: Vec<f64> = (0..nn).map(|i| values[i * ncomp + c]).collect();
                basis.interpolate(&comp)
            })
            .collect();
        Ok(GridField { origin, spacing, dims, ncomp, values, basis, coefs })
    }

    /// Samples a function at every node.
    pub fn from_fn(origin: [f64; 3], spacing: [f64; 3], dims: [usize; 3], f: impl Fn(&V3) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    values.push(f(&node_point(origin, spacing, [i, j, k])));
                }
            }
        }
        GridField::new(origin, spacing, dims, 1, values)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> V3 {
        node_point(self.origin, self.spacing, [i, j, k])
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Node position of the flat node index.
    pub fn node_at(&self, idx: usize) -> V3 {
        let (ny, nz) = (self.dims[1], self.dims[2]);
        self.node(idx / (ny * nz), (idx / nz) % ny, idx % nz)
    }

    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    /// Flat node index when `x` coincides with a grid node.
    fn node_hit(&self, x: &V3) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            if self.dims[a] == 1 {
                continue;
            }
            let u = (x[a] - self.origin[a]) / self.spacing[a];
            let r = u.round();
            if (u - r).abs() > 1e-12 || r < 0.0 || r > (self.dims[a] - 1) as f64 {
                return None;
            }
            ijk[a] = r as usize;
        }
        Some((ijk[0] * self.dims[1] + ijk[1]) * self.dims[2] + ijk[2])
    }

    /// Spline jet of one component; at grid nodes the value is the stored one.
    pub fn component_jet(&self, comp: usize, x: &V3) -> Jet {
        let mut j = self.basis.eval(&self.coefs[comp], x);
        if let Some(i) = self.node_hit(x) {
            j.v = self.values[i * self.ncomp + comp];
        }
        j
    }

    pub fn value(&self, x: &V3) -> f64 {
        match self.node_hit(x) {
            Some(i) => self.values[i * self.ncomp],
            None => self.basis.eval_value(&self.coefs[0], x),
        }
    }

    pub fn tensor(&self, x: &V3) -> SymTensor3 {
        assert_eq!(self.ncomp, 6);
        let mut c = [0.0; 6];
        let hit = self.node_hit(x);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = match hit {
                Some(i) => self.values[i * 6 + k],
                None => self.basis.eval_value(&self.coefs[k], x),
            };
        }
        SymTensor3::from_components(c)
    }

    pub fn contains(&self, x: &V3) -> bool {
        self.basis.stencil(x).inside
    }

    pub fn into_arc(self) -> Arc<GridField> {
        Arc::new(self)
    }
}

fn node_point(origin: [f64; 3], spacing: [f64; 3], ijk: [usize; 3]) -> V3 {
    V3::new(
        origin[0] + spacing[0] * ijk[0] as f64,
        origin[1] + spacing[1] * ijk[1] as f64,
        origin[2] + spacing[2] * ijk[2] as f64,
    )
}

/// Scalar field stored directly as B-spline coefficients; the unknown of the
/// inversions.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineField {
    pub basis: SplineBasis,
    pub coefs: Vec<f64>,
}

impl SplineField {
    pub fn zeros(basis: SplineBasis) -> Self {
        let n = basis.ncoef();
        SplineField { basis, coefs: vec![0.0; n] }
    }

    pub fn jet(&self, x: &V3) -> Jet {
        self.basis.eval(&self.coefs, x)
    }

    /// Node values on the grid underlying the basis.
    pub fn to_grid(&self) -> Result<GridField> {
        let ax = &self.basis.axes;
        let origin = [ax[0].origin, ax[1].origin, ax[2].origin];
        let spacing = [ax[0].spacing, ax[1].spacing, ax[2].spacing];
        let dims = [ax[0].n, ax[1].n, ax[2].n];
        GridField::from_fn(origin, spacing, dims, |x| self.basis.eval_value(&self.coefs, x))
    }

    /// Spline interpolating the node values of `g`.
    pub fn from_grid(g: &GridField) -> Self {
        SplineField { basis: g.basis.clone(), coefs: g.coefs[0].clone() }
    }
}
