use std::path::Path;
use std::sync::Arc;

use super::config::{Mode, RunConfig};
use super::field::read_field;
use crate::error::{MxtError, Result};
use crate::media::{Field, MediumSpec, V3};

pub const PHANTOMS: [&str; 6] = ["vacuum", "lossy", "lens", "radial", "permittivity", "flagship"];

fn gauss(mode: Mode, amp: f64, c: [f64; 2], w: f64) -> Field {
    match mode {
        Mode::Slice => Field::gaussian_2d(amp, c, w),
        Mode::Volume => Field::gaussian(amp, [c[0], c[1], 0.0], w),
    }
}

fn bump(mode: Mode, amp: f64, c: [f64; 2], r: f64) -> Field {
    match mode {
        Mode::Slice => Field::bump_2d(amp, c, r),
        Mode::Volume => Field::bump(amp, [c[0], c[1], 0.0], r),
    }
}

/// Wave speed of the lens phantoms: a 10% slow Gaussian.
pub fn lens_speed(mode: Mode) -> Field {
    Field::Constant(1.0).plus(gauss(mode, -0.1, [0.1, -0.1], 0.3))
}

/// sigma/eps of the lossy phantoms.
pub fn loss_profile(mode: Mode) -> Field {
    gauss(mode, 0.5, [-0.2, 0.25], 0.25)
}

/// log sqrt(eps) perturbation; compactly supported inside the ball, so it
/// vanishes with all derivatives on the boundary.
pub fn permittivity_bump(mode: Mode) -> Field {
    bump(mode, 0.15, [0.1, -0.05], 0.6)
}

/// Named ground-truth media on the unit ball.
pub fn phantom(name: &str, mode: Mode) -> Result<MediumSpec> {
    let one = || Field::Constant(1.0);
    let zero = || Field::Constant(0.0);
    Ok(match name {
        "vacuum" => MediumSpec::vacuum(),
        "lossy" => MediumSpec::constant(1.0, 1.0, 0.5),
        "lens" => MediumSpec::from_speed(lens_speed(mode), one(), zero()),
        "radial" => {
            let c = Field::RadialPoly { center: V3::zeros(), coeffs: vec![1.2, -0.2] };
            MediumSpec::from_speed(c, one(), zero())
        }
        "permittivity" => {
            let eps = permittivity_bump(mode).scaled(2.0).exp();
            MediumSpec::from_speed(one(), eps, zero())
        }
        "flagship" => {
            let eps = permittivity_bump(mode).scaled(2.0).exp();
            let sigma = loss_profile(mode).times(eps.clone());
            MediumSpec::from_speed(lens_speed(mode), eps, sigma)
        }
        o => return Err(MxtError::Config(format!("unknown phantom `{o}` (known: {})", PHANTOMS.join(", ")))),
    })
}

/// Ground truth selected by a run configuration; field files take precedence
/// over the phantom name and are resolved relative to `base`.
pub fn medium_for(cfg: &RunConfig, base: &Path) -> Result<MediumSpec> {
    match &cfg.field_files {
        Some(files) => {
            let load = |f: &str| -> Result<Field> { Ok(Field::Grid(Arc::new(read_field(&base.join(f))?))) };
            Ok(MediumSpec::new(load(&files[0])?, load(&files[1])?, load(&files[2])?))
        }
        None => phantom(&cfg.phantom, cfg.mode),
    }
}
