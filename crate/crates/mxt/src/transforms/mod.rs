//! Geodesic X-ray transform of scalars and transverse ray transform of
//! symmetric 2-tensors along traced rays, with matrix-free adjoints and
//! regularized inversions in B-spline coefficient space.

mod acquisition;
mod nodes;
mod solve;
mod trt;
mod xray;

pub use acquisition::{trace_all, AcquisitionSet, RayDatum};
pub use nodes::{ray_nodes, reduce_rays, NodeSet, NodeSpec, SparseRows, REDUCE_CHUNKS};
pub use solve::{absolute_weight, cgls_tikhonov, morozov, power_estimate, LinearMap, Regularizer, SolveReport};
pub use trt::{
    boundary_pins, endpoint_covectors, polarization, trt_differential, trt_endpoint_extract, trt_forward, trt_forward_grid,
    trt_invert_for_u, TrtInvertConfig, TrtOperator, TrtReport, NPOL,
};
pub use xray::{xray_forward, xray_invert, InvertConfig, XrayOperator};
