//! Configuration, dataset synthesis and serialization.

mod config;
mod dataset;
mod field;
mod phantom;
mod report;
mod synth;

pub use config::{Mode, RunConfig};
pub use dataset::{fmt_f64, Dataset, Metadata, FORMAT_VERSION};
pub use field::{field_from_reader, field_to_bytes, read_field, write_field};
pub use phantom::{lens_speed, loss_profile, medium_for, permittivity_bump, phantom, PHANTOMS};
pub use report::{grid_basis, pipeline_config, write_report};
pub use synth::{acquisition, boundary_points, gen_synthetic};
