use rayon::prelude::*;

use super::nodes::{NodeSet, SparseRows};
use super::solve::{absolute_weight, cgls_tikhonov, morozov, LinearMap, Regularizer, SolveReport};
use crate::error::Result;
use crate::media::{ScalarField, SplineBasis, SplineField};

/// Per-ray integral of an arbitrary scalar field.
pub fn xray_forward(f: &dyn ScalarField, nodes: &NodeSet) -> Vec<f64> {
    (0..nodes.nrays())
        .into_par_iter()
        .map(|r| nodes.range(r).map(|i| nodes.w[i] * f.value(&nodes.x[i])).sum())
        .collect()
}


/// The X-ray transform acting on B-spline coefficients, assembled as one
/// sparse row per ray.
pub struct XrayOperator {
    pub matrix: SparseRows,
}

impl XrayOperator {
    pub fn new(basis: &SplineBasis, nodes: &NodeSet) -> Result<Self> {
        nodes.check_coverage(basis)?;
        let matrix = SparseRows::assemble(nodes.nrays(), 1, basis.ncoef(), |r, rows| {
            for i in nodes.range(r) {
                let st = basis.stencil(&nodes.x[i]);
                let w = nodes.w[i];
                basis.visit_value(&st, |k, b| rows[0].push((k as u32, w * b)));
            }
        });
        Ok(XrayOperator { matrix })
    }

    pub fn apply(&self, coefs: &[f64]) -> Vec<f64> {
        self.matrix.apply(coefs)
    }

    pub fn adjoint(&self, data: &[f64]) -> Vec<f64> {
        self.matrix.adjoint(data)
    }

    /// Ray-length density per coefficient (the adjoint of all-ones data).
    pub fn density(&self) -> Vec<f64> {
        self.adjoint(&vec![1.0; self.matrix.nrows()])
    }
}

/// Settings for regularized inversions.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertConfig {
    /// Scale-free Tikhonov weight on |grad f|^2.
    pub reg: f64,
    pub iters: usize,
    pub tol: f64,
    /// Per-datum noise level; when set the weight follows the discrepancy
    /// principle instead of `reg`.
    pub noise: Option<f64>,
}

impl Default for InvertConfig {
    fn default() -> Self {
        InvertConfig { reg: 1e-4, iters: 200, tol: 1e-7, noise: None }
    }
}

/// Regularized least-squares inversion of X-ray data into spline
/// coefficients on `basis`. Coefficients flagged not free keep the values of
/// `pinned` (zero when absent).
pub fn xray_invert(
    data: &[f64],
    nodes: &NodeSet,
    basis: &SplineBasis,
    cfg: &InvertConfig,
    pinned: Option<(&[bool], &[f64])>,
) -> Result<(SplineField, SolveReport)> {
    let op = XrayOperator::new(basis, nodes)?;
    let apply = |x: &[f64]| op.apply(x);
    let adjoint = |y: &[f64]| op.adjoint(y);
    let map = LinearMap { ncols: basis.ncoef(), apply: &apply, adjoint: &adjoint };
    let reg = Regularizer::from_basis(basis);
    let (free, x0) = match pinned {
        Some((f, v)) => (Some(f), v.to_vec()),
        None => (None, vec![0.0; basis.ncoef()]),
    };
    let (x, rep) = match cfg.noise {
        Some(delta) => {
            let target = 1.02 * delta * (data.len() as f64).sqrt();
            morozov(&map, data, &reg, &x0, free, target, 1e-1, cfg.iters, cfg.tol)
        }
        None => {
            let lam = absolute_weight(&map, &reg, free, cfg.reg);
            cgls_tikhonov(&map, data, &reg, lam, &x0, free, cfg.iters, cfg.tol)
        }
    };
    Ok((SplineField { basis: basis.clone(), coefs: x }, rep))
}
