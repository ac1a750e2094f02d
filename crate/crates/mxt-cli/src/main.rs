//! `mxt`: synthesize datasets, run the reconstruction chain and check
//! invariants from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mxt::geometry::RayStatus;
use mxt::io::{self, fmt_f64, Dataset, RunConfig};
use mxt::media::Domain;
use mxt::reconstruct::{pipeline, BoundaryJets};
use mxt::transforms::trace_all;
use mxt::MxtError;

mod verify;

#[derive(Parser)]
#[command(name = "mxt", version, about = "Geometric-optics inverse problems for isotropic Maxwell media")]
struct Cli {
    /// Worker threads (falls back to MXT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Forward {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trace the acquisition fan and write ray summaries.
    Trace(Forward),
    /// Write lens records (entry, exit, travel time).
    Lens(Forward),
    /// Write the X-ray data -2 log I of every ray.
    Xray(Forward),
    /// Write differential transverse ray data.
    Trt(Forward),
    /// Recover boundary jets from the symbols of a dataset.
    BoundaryId {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset directory.
    Synth(Forward),
    /// Run the full reconstruction chain on a dataset.
    Reconstruct {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an invariant suite and print a pass/fail table.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> mxt::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn synth(f: &Forward) -> mxt::Result<Dataset> {
    let cfg = load_config(&f.config, f.seed)?;
    let m = io::medium_for(&cfg, &base_dir(&f.config))?;
    io::gen_synthetic(&m, &cfg)
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> mxt::Result<()> {
    let mut s = format!("{header}\n");
    for r in rows {
        s += &r;
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn run(cmd: Cmd) -> mxt::Result<bool> {
    match cmd {
        Cmd::Trace(f) => {
            let cfg = load_config(&f.config, f.seed)?;
            let m = io::medium_for(&cfg, &base_dir(&f.config))?;
            let d = Domain::unit_ball();
            let acq = io::acquisition(&d, &cfg);
            let rays = trace_all(&m, &d, &acq, &cfg.trace);
            std::fs::create_dir_all(&f.out)?;
            write_rows(
                &f.out.join("rays.csv"),
                "id,status,length,samples",
                rays.iter().enumerate().map(|(k, r)| match r {
                    Ok(r) => {
                        let st = match r.status {
                            RayStatus::Exited => "exited",
                            RayStatus::Trapped => "trapped",
                            RayStatus::Truncated => "truncated",
                        };
                        format!("{k},{st},{},{}", fmt_f64(r.length()), r.samples.len())
                    }
                    Err(e) => format!("{k},failed: {},,", e.to_string().replace(',', ";")),
                }),
            )?;
        }
        Cmd::Lens(f) => {
            let ds = synth(&f)?;
            std::fs::create_dir_all(&f.out)?;
            write_rows(
                &f.out.join("lens.csv"),
                "id,x_in,y_in,z_in,x_out,y_out,z_out,tau",
                ds.lens.iter().map(|(id, l)| {
                    let v = [l.x_in.x, l.x_in.y, l.x_in.z, l.x_out.x, l.x_out.y, l.x_out.z, l.tau];
                    format!("{id},{}", v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","))
                }),
            )?;
        }
        Cmd::Xray(f) => {
            let ds = synth(&f)?;
            std::fs::create_dir_all(&f.out)?;
            write_rows(&f.out.join("xray.csv"), "id,minus_2_log_i", ds.attenuation.iter().map(|(id, v)| format!("{id},{}", fmt_f64(*v))))?;
        }
        Cmd::Trt(f) => {
            let ds = synth(&f)?;
            std::fs::create_dir_all(&f.out)?;
            write_rows(
                &f.out.join("trt.csv"),
                "id,eta,zeta,diag",
                ds.trt.iter().map(|(id, d)| format!("{id},{},{},{}", fmt_f64(d[0]), fmt_f64(d[1]), fmt_f64(d[2]))),
            )?;
        }
        Cmd::BoundaryId { data, out } => {
            let ds = Dataset::load(&data)?;
            let j = BoundaryJets::identify(&ds.symbols)?;
            std::fs::create_dir_all(&out)?;
            write_rows(
                &out.join("jets.csv"),
                "x,y,z,eps,mu,sigma,dnu_eps,dnu_mu",
                (0..j.len()).map(|k| {
                    let p = j.points[k];
                    let v = [p.x, p.y, p.z, j.eps[k], j.mu[k], j.sigma[k], j.dnu_eps[k], j.dnu_mu[k]];
                    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
                }),
            )?;
        }
        Cmd::Synth(f) => {
            let ds = synth(&f)?;
            ds.save(&f.out)?;
            println!("wrote {} rays, {} symbol samples to {}", ds.lens.len(), ds.symbols.len(), f.out.display());
        }
        Cmd::Reconstruct { data, out, config } => {
            let ds = Dataset::load(&data)?;
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            cfg.mode = ds.meta.mode;
            let truth = io::phantom(&ds.meta.phantom, ds.meta.mode).ok();
            let rep = pipeline(&ds.pipeline_data(), &io::pipeline_config(&cfg), truth.as_ref())?;
            io::write_report(&out, &rep)?;
            for st in &rep.stages {
                match st.error {
                    Some(e) => println!("{:<16} residual {:.3e}  error {:.3e}", st.name, st.residual, e),
                    None => println!("{:<16} residual {:.3e}", st.name, st.residual),
                }
            }
            for a in &rep.anomalies {
                println!("anomaly: {a}");
            }
        }
        Cmd::Verify { suite, config } => {
            let cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            let checks = verify::run_suite(&suite, &cfg)?;
            let mut ok = true;
            for c in &checks {
                println!("{:<6} {:<34} {:>12.3e}  tol {:.1e}", if c.pass() { "PASS" } else { "FAIL" }, c.name, c.value, c.tol);
                ok &= c.pass();
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn threads(cli: Option<usize>) -> Result<Option<usize>, String> {
    match cli {
        Some(n) => Ok(Some(n)),
        None => match std::env::var("MXT_THREADS") {
            Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("MXT_THREADS={v} is not a thread count")),
            Err(_) => Ok(None),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads(cli.threads) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ MxtError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
