use std::path::Path;

use super::config::{Mode, RunConfig};
use super::dataset::fmt_f64;
use super::field::write_field;
use crate::error::Result;
use crate::media::{Domain, SplineBasis};
use crate::reconstruct::{PipelineConfig, ReconstructionReport};
use crate::transforms::{InvertConfig, NodeSpec, TrtInvertConfig};

/// Reconstruction grid over [-1, 1]^2 (slice) or [-1, 1]^3 with `n` nodes
/// per axis.
pub fn grid_basis(mode: Mode, n: usize) -> SplineBasis {
    let h = 2.0 / (n - 1) as f64;
    match mode {
        Mode::Slice => SplineBasis::new([-1.0, -1.0, 0.0], [h; 3], [n, n, 1]),
        Mode::Volume => SplineBasis::new([-1.0; 3], [h; 3], [n; 3]),
    }
}

pub fn pipeline_config(cfg: &RunConfig) -> PipelineConfig {
    let mut p = PipelineConfig::new(Domain::unit_ball(), grid_basis(cfg.mode, cfg.grid));
    p.tomo.reg = cfg.tomo_reg;
    p.tomo.outer = cfg.tomo_outer;
    p.tomo.shells = cfg.shells.clone();
    p.tomo.shoot.trace = cfg.trace.clone();
    p.nodes = NodeSpec { max_len: cfg.node_len, gauss: 2 };
    p.tomo.nodes = p.nodes;
    p.xray = InvertConfig { reg: cfg.xray_reg, iters: cfg.xray_iters, ..InvertConfig::default() };
    let inner = InvertConfig { reg: cfg.trt_reg, iters: cfg.trt_iters, ..TrtInvertConfig::default().inner };
    p.trt = TrtInvertConfig { outer: cfg.trt_outer, inner };
    p.trace = cfg.trace.clone();
    p
}

/// Writes fields, a key=value summary and residual tables. Wall-clock
/// timings go to `timing.txt` only, so every other file is reproducible
/// byte for byte.
pub fn write_report(dir: &Path, r: &ReconstructionReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, g) in [("c", &r.c), ("sigma_over_eps", &r.sigma_over_eps), ("eps", &r.eps), ("mu", &r.mu), ("sigma", &r.sigma)] {
        write_field(&dir.join(format!("{name}.mxf")), g)?;
    }
    let mut s = String::new();
    s += &format!("stages = {}\n", r.stages.iter().map(|st| st.name.as_str()).collect::<Vec<_>>().join(","));
    for st in &r.stages {
        s += &format!("{}.residual = {}\n", st.name, fmt_f64(st.residual));
        if let Some(e) = st.error {
            s += &format!("{}.error = {}\n", st.name, fmt_f64(e));
        }
        for n in &st.notes {
            s += &format!("{}.note = {n}\n", st.name);
        }
    }
    s += &format!("boundary_points = {}\n", r.jets.len());
    s += &format!("tomography.iterations = {}\n", r.tomography.iterations);
    s += &format!("tomography.dropped = {}\n", r.tomography.dropped);
    s += &format!("tomography.exit_direction_rms = {}\n", fmt_f64(r.tomography.exit_direction_rms));
    s += &format!("clamped_nodes = {}\n", r.clamped);
    for a in &r.anomalies {
        s += &format!("anomaly = {a}\n");
    }
    std::fs::write(dir.join("summary.txt"), s)?;

    let mut t = String::from("stage,r_lo,r_hi,error\n");
    for st in &r.stages {
        for (a, b, e) in &st.shell_errors {
            t += &format!("{},{},{},{}\n", st.name, fmt_f64(*a), fmt_f64(*b), fmt_f64(*e));
        }
    }
    std::fs::write(dir.join("shell_errors.csv"), t)?;

    let mut t = String::from("step,objective,rms\n");
    for (k, (o, m)) in r.tomography.objective.iter().zip(&r.tomography.rms).enumerate() {
        t += &format!("{k},{},{}\n", fmt_f64(*o), fmt_f64(*m));
    }
    std::fs::write(dir.join("tomography.csv"), t)?;

    let mut t = String::from("x,y,z,eps,mu,sigma,dnu_eps,dnu_mu\n");
    let j = &r.jets;
    for k in 0..j.len() {
        let p = j.points[k];
        let row = [p.x, p.y, p.z, j.eps[k], j.mu[k], j.sigma[k], j.dnu_eps[k], j.dnu_mu[k]];
        t += &row.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",");
        t += "\n";
    }
    std::fs::write(dir.join("jets.csv"), t)?;

    let mut t = String::new();
    for st in &r.stages {
        t += &format!("{} = {:.3}\n", st.name, st.seconds);
    }
    std::fs::write(dir.join("timing.txt"), t)?;
    Ok(())
}
