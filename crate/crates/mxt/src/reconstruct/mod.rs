//! Layer-stripping recovery of (eps, mu, sigma) from boundary symbols and
//! ray data.

mod boundary;
mod radial;
mod stages;
mod tomo;

pub use boundary::{
    chebyshev_rho, recover_boundary_order0, recover_boundary_order1, BoundaryJets, BoundarySymbolSample, Order0Fit,
    Order1Fit,
};
pub use radial::{herglotz_invert, ray_parameter_samples, Pchip, RadialProfile};
pub use tomo::{shell_members, shoot, traveltime_tomography, ShootConfig, TomoConfig, TomoReport};
pub use stages::{
    pipeline, recover_epsilon, recover_sigma_over_eps, relative_l2, EpsilonResult, PipelineConfig, PipelineData,
    ReconstructionReport, SigmaOverEps, StageReport,
};
