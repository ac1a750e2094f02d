use std::path::Path;

use ini::Ini;

use crate::error::{MxtError, Result};
use crate::geometry::TraceConfig;

/// Acquisition geometry: a planar fan in x3 = 0 or sources over the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Slice,
    Volume,
}

/// Run parameters, read from flat key=value text with [sections].
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub phantom: String,
    /// Optional MXT-FIELD files for a custom medium (eps, mu, sigma).
    pub field_files: Option<[String; 3]>,
    /// Constant reference permittivity of the differential transverse data.
    pub eps_ref: f64,
    pub mode: Mode,
    pub sources: usize,
    pub directions: usize,
    pub max_angle: f64,
    pub boundary_points: usize,
    pub rho_samples: usize,
    pub trace: TraceConfig,
    pub grid: usize,
    pub tomo_reg: f64,
    pub tomo_outer: usize,
    pub xray_reg: f64,
    pub xray_iters: usize,
    pub trt_reg: f64,
    pub trt_outer: usize,
    pub trt_iters: usize,
    pub node_len: f64,
    pub shells: Vec<f64>,
    pub seed: u64,
    pub noise: f64,
    /// Tolerance overrides for `verify` suites, by check name.
    pub verify: Vec<(String, f64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phantom: "vacuum".into(),
            field_files: None,
            eps_ref: 1.0,
            mode: Mode::Slice,
            sources: 60,
            directions: 40,
            max_angle: 1.45,
            boundary_points: 16,
            rho_samples: 8,
            trace: TraceConfig::default(),
            grid: 36,
            tomo_reg: 1e-3,
            tomo_outer: 6,
            xray_reg: 1e-4,
            xray_iters: 200,
            trt_reg: 1e-5,
            trt_outer: 4,
            trt_iters: 150,
            node_len: 0.04,
            shells: vec![1.0],
            seed: 0,
            noise: 0.0,
            verify: Vec::new(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| MxtError::Config(format!("{key} = {v}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| MxtError::Config(e.to_string()))?;
        let mut c = RunConfig::default();
        let mut files: [Option<String>; 3] = [None, None, None];
        for (sec, props) in ini.iter() {
            let sec = sec.unwrap_or("");
            for (k, v) in props.iter() {
                let key = format!("{sec}.{k}");
                match (sec, k) {
                    ("phantom", "name") => c.phantom = v.trim().to_string(),
                    ("phantom", "eps_ref") => c.eps_ref = num(&key, v)?,
                    ("phantom", "eps_file") => files[0] = Some(v.trim().into()),
                    ("phantom", "mu_file") => files[1] = Some(v.trim().into()),
                    ("phantom", "sigma_file") => files[2] = Some(v.trim().into()),
                    ("acquisition", "mode") => {
                        c.mode = match v.trim() {
                            "slice" => Mode::Slice,
                            "volume" => Mode::Volume,
                            o => return Err(MxtError::Config(format!("{key}: unknown mode `{o}`"))),
                        }
                    }
                    ("acquisition", "sources") => c.sources = num(&key, v)?,
                    ("acquisition", "directions") => c.directions = num(&key, v)?,
                    ("acquisition", "max_angle") => c.max_angle = num(&key, v)?,
                    ("acquisition", "boundary_points") => c.boundary_points = num(&key, v)?,
                    ("acquisition", "rho_samples") => c.rho_samples = num(&key, v)?,
                    ("trace", "rtol") => c.trace.rtol = num(&key, v)?,
                    ("trace", "atol") => c.trace.atol = num(&key, v)?,
                    ("trace", "h_max") => c.trace.h_max = num(&key, v)?,
                    ("trace", "max_steps") => c.trace.max_steps = num(&key, v)?,
                    ("grid", "n") => c.grid = num(&key, v)?,
                    ("inversion", "tomo_reg") => c.tomo_reg = num(&key, v)?,
                    ("inversion", "tomo_outer") => c.tomo_outer = num(&key, v)?,
                    ("inversion", "xray_reg") => c.xray_reg = num(&key, v)?,
                    ("inversion", "xray_iters") => c.xray_iters = num(&key, v)?,
                    ("inversion", "trt_reg") => c.trt_reg = num(&key, v)?,
                    ("inversion", "trt_outer") => c.trt_outer = num(&key, v)?,
                    ("inversion", "trt_iters") => c.trt_iters = num(&key, v)?,
                    ("inversion", "node_len") => c.node_len = num(&key, v)?,
                    ("inversion", "shells") => {
                        c.shells = v.split(',').map(|s| num(&key, s)).collect::<Result<_>>()?;
                    }
                    ("noise", "seed") => c.seed = num(&key, v)?,
                    ("noise", "level") => c.noise = num(&key, v)?,
                    ("verify", name) => c.verify.push((name.to_string(), num(&key, v)?)),
                    _ => return Err(MxtError::Config(format!("unknown key `{key}`"))),
                }
            }
        }
        if files.iter().any(|f| f.is_some()) {
            match files {
                [Some(e), Some(m), Some(s)] => c.field_files = Some([e, m, s]),
                _ => return Err(MxtError::Config("eps_file, mu_file and sigma_file go together".into())),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("trace.rtol", self.trace.rtol),
            ("trace.atol", self.trace.atol),
            ("trace.h_max", self.trace.h_max),
            ("acquisition.max_angle", self.max_angle),
            ("inversion.node_len", self.node_len),
            ("phantom.eps_ref", self.eps_ref),
        ];
        if let Some((k, _)) = pos.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(MxtError::Config(format!("{k} must be positive")));
        }
        let counts = [
            ("acquisition.sources", self.sources),
            ("acquisition.directions", self.directions),
            ("acquisition.boundary_points", self.boundary_points),
            ("trace.max_steps", self.trace.max_steps),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v < 1) {
            return Err(MxtError::Config(format!("{k} must be at least 1")));
        }
        if self.rho_samples < 3 {
            return Err(MxtError::Config("acquisition.rho_samples must be at least 3".into()));
        }
        if self.grid < 4 {
            return Err(MxtError::Config("grid.n must be at least 4".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(MxtError::Config("noise.level must be non-negative".into()));
        }
        if self.shells.is_empty() || self.shells.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
            return Err(MxtError::Config("inversion.shells must lie in (0, 1]".into()));
        }
        if self.tomo_reg < 0.0 || self.xray_reg < 0.0 || self.trt_reg < 0.0 {
            return Err(MxtError::Config("regularization weights must be non-negative".into()));
        }
        Ok(())
    }

    /// Tolerance override for a verify check.
    pub fn verify_tol(&self, name: &str, default: f64) -> f64 {
        self.verify.iter().rev().find(|(k, _)| k == name).map_or(default, |(_, v)| *v)
    }
}
