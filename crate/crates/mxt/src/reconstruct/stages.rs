use std::time::Instant;

use crate::error::{MxtError, Result};
use crate::geometry::{frame_seed, parallel_transport, LensRecord, Ray, TraceConfig};
use crate::media::{Domain, Field, GridField, MediumSpec, ScalarField, Slowness, SpeedModel, SplineBasis, SplineField, V3};
use crate::transforms::{
    boundary_pins, trt_invert_for_u, xray_invert, InvertConfig, NodeSet, NodeSpec, SolveReport, TrtInvertConfig, TrtReport,
    NPOL,
};

use super::boundary::{BoundaryJets, BoundarySymbolSample};
use super::tomo::{traveltime_tomography, TomoConfig, TomoReport};

/// Relative L2 error of `f` against `truth` over |x - center| <= `r_max` on
/// an 81 x 81 sample lattice in the plane x3 = center3.
pub fn relative_l2(f: &dyn Fn(&V3) -> f64, truth: &dyn Fn(&V3) -> f64, center: &V3, r_max: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..81 {
        for j in 0..81 {
            let d = V3::new(r_max * (i as f64 / 40.0 - 1.0), r_max * (j as f64 / 40.0 - 1.0), 0.0);
            if d.norm() <= r_max {
                let x = center + d;
                let t = truth(&x);
                num += (f(&x) - t).powi(2);
                den += t * t;
            }
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn grid_of(basis: &SplineBasis, f: impl Fn(&V3) -> f64) -> Result<GridField> {
    let ax = &basis.axes;
    GridField::from_fn(
        [ax[0].origin, ax[1].origin, ax[2].origin],
        [ax[0].spacing, ax[1].spacing, ax[2].spacing],
        [ax[0].n, ax[1].n, ax[2].n],
        f,
    )
}

fn map_grid(g: &GridField, f: impl Fn(usize, f64) -> f64) -> Result<GridField> {
    let v = g.values.iter().enumerate().map(|(i, &x)| f(i, x)).collect();
    GridField::new(g.origin, g.spacing, g.dims, 1, v)
}

#[derive(Clone, Debug)]
pub struct SigmaOverEps {
    /// Clamped node values.
    pub field: GridField,
    pub clamped: usize,
    pub solve: SolveReport,
}

/// Inverts -2 log I data (one value per ray, rays already traced in the
/// recovered speed) with the X-ray transform and clamps negative node
/// values to zero.
pub fn recover_sigma_over_eps(
    rays: &[Ray],
    data: &[f64],
    speed: &dyn SpeedModel,
    basis: &SplineBasis,
    nodes: &NodeSpec,
    cfg: &InvertConfig,
) -> Result<SigmaOverEps> {
    if rays.len() != data.len() {
        return Err(MxtError::Precondition(format!("{} rays but {} attenuation data", rays.len(), data.len())));
    }
    let ns = NodeSet::build(speed, rays, None, nodes);
    let (f, solve) = xray_invert(data, &ns, basis, cfg, None)?;
    let raw = f.to_grid()?;
    let clamped = raw.values.iter().filter(|&&v| v < 0.0).count();
    let field = map_grid(&raw, |_, v| v.max(0.0))?;
    Ok(SigmaOverEps { field, clamped, solve })
}

#[derive(Clone, Debug)]
pub struct EpsilonResult {
    pub eps: GridField,
    /// Recovered perturbation w = u - u_ref as spline coefficients.
    pub w: SplineField,
    pub report: TrtReport,
}

/// Recovers eps = exp(2u) from transverse differential data relative to
/// `eps_ref`, with u = u_ref + w and w pinned outside the domain to the
/// Taylor extension of its boundary jet.
#[allow(clippy::too_many_arguments)]
pub fn recover_epsilon(
    data: &[[f64; NPOL]],
    rays: &[Ray],
    seeds: &[V3],
    speed: &dyn SpeedModel,
    jets: &BoundaryJets,
    eps_ref: &Field,
    domain: &Domain,
    basis: &SplineBasis,
    nodes: &NodeSpec,
    cfg: &TrtInvertConfig,
) -> Result<EpsilonResult> {
    if rays.len() != data.len() || rays.len() != seeds.len() {
        return Err(MxtError::Precondition("rays, seeds and transverse data differ in length".into()));
    }
    let frames = rays
        .iter()
        .zip(seeds)
        .map(|(r, s)| {
            let c = speed.speed(&r.first().x).v;
            parallel_transport(speed, r, &frame_seed(c, &r.first().v, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let ns = NodeSet::build(speed, rays, Some(&frames), nodes);
    let uref = Field::Ln(Box::new(eps_ref.clone())).scaled(0.5);
    let weps: Vec<f64> = (0..jets.len()).map(|k| 0.5 * (jets.eps[k]).ln()).collect();
    let wdn: Vec<f64> = (0..jets.len()).map(|k| 0.5 * jets.dnu_eps[k] / jets.eps[k]).collect();
    let (free, vals) = boundary_pins(basis, domain, |y| {
        let r = eps_ref.jet(y);
        let nu = domain.outward_normal(y);
        (jets.interpolate(y, &weps) - 0.5 * r.v.ln(), jets.interpolate(y, &wdn) - 0.5 * r.g.dot(&nu) / r.v)
    });
    let flat: Vec<f64> = data.iter().flatten().copied().collect();
    let (w, report) = trt_invert_for_u(&flat, &ns, basis, speed, &uref, Some((&free, &vals)), cfg)?;
    let eps = grid_of(basis, |x| (2.0 * (uref.value(x) + w.basis.eval_value(&w.coefs, x))).exp())?;
    Ok(EpsilonResult { eps, w, report })
}

/// Everything the pipeline consumes. Row k of `attenuation` and `trt`
/// belongs to `lens[k]`; `seeds[k]` starts its polarization frame.
#[derive(Clone, Debug)]
pub struct PipelineData {
    pub symbols: Vec<BoundarySymbolSample>,
    pub lens: Vec<LensRecord>,
    /// -2 log I per ray.
    pub attenuation: Vec<f64>,
    pub trt: Vec<[f64; NPOL]>,
    pub seeds: Vec<V3>,
    /// Reference permittivity of the differential transverse data.
    pub eps_ref: Field,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub domain: Domain,
    pub basis: SplineBasis,
    pub tomo: TomoConfig,
    pub xray: InvertConfig,
    pub trt: TrtInvertConfig,
    pub nodes: NodeSpec,
    pub trace: TraceConfig,
    /// Radius of the error disc (relative to the domain radius).
    pub error_radius: f64,
}

impl PipelineConfig {
    pub fn new(domain: Domain, basis: SplineBasis) -> Self {
        PipelineConfig {
            domain,
            basis,
            tomo: TomoConfig::default(),
            xray: InvertConfig::default(),
            trt: TrtInvertConfig::default(),
            nodes: NodeSpec { max_len: 0.04, gauss: 2 },
            trace: TraceConfig::default(),
            error_radius: 0.8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageReport {
    pub name: String,
    /// Final data residual of the stage (2-norm, or RMS for the speed).
    pub residual: f64,
    pub seconds: f64,
    /// Relative L2 error against the ground truth, when supplied.
    pub error: Option<f64>,
    /// Relative errors on radial bands [r_k, r_{k+1}] (ground truth only).
    pub shell_errors: Vec<(f64, f64, f64)>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub c: GridField,
    pub sigma_over_eps: GridField,
    pub eps: GridField,
    pub mu: GridField,
    pub sigma: GridField,
    pub jets: BoundaryJets,
    pub stages: Vec<StageReport>,
    pub tomography: TomoReport,
    pub clamped: usize,
    pub anomalies: Vec<String>,
}

fn tag<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| MxtError::Stage { stage: stage.into(), source: Box::new(e) })
}

fn shell_errors(f: &dyn Fn(&V3) -> f64, truth: &dyn Fn(&V3) -> f64, center: &V3, radius: f64) -> Vec<(f64, f64, f64)> {
    let bands = [0.0, 0.2, 0.4, 0.6, 0.8];
    bands
        .windows(2)
        .map(|b| {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..81 {
                for j in 0..81 {
                    let d = V3::new(radius * (i as f64 / 40.0 - 1.0), radius * (j as f64 / 40.0 - 1.0), 0.0);
                    let r = d.norm() / radius;
                    if r >= b[0] && r <= b[1] {
                        let x = center + d;
                        let t = truth(&x);
                        num += (f(&x) - t).powi(2);
                        den += t * t;
                    }
                }
            }
            (b[0], b[1], if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
        })
        .collect()
}

/// Boundary jets, then the wave speed, then sigma/eps, then eps; mu and
/// sigma are assembled node-wise from c, eps and sigma/eps. A failing stage
/// aborts with a stage-tagged error.
pub fn pipeline(data: &PipelineData, cfg: &PipelineConfig, truth: Option<&MediumSpec>) -> Result<ReconstructionReport> {
    let n = data.lens.len();
    if data.attenuation.len() != n || data.trt.len() != n || data.seeds.len() != n {
        return Err(MxtError::Precondition("per-ray tables differ in length".into()));
    }
    let (domain, basis) = (&cfg.domain, &cfg.basis);
    let (center, radius) = (domain.center(), domain.radius());
    let r_err = cfg.error_radius * radius;
    let mut stages = Vec::new();
    let mut anomalies = Vec::new();

    let t0 = Instant::now();
    let jets = tag("boundary", BoundaryJets::identify(&data.symbols))?;
    stages.push(StageReport { name: "boundary".into(), seconds: t0.elapsed().as_secs_f64(), ..Default::default() });

    // slowness n = (eps mu)^1/2 pinned outside the domain from the jets
    let t0 = Instant::now();
    let ns: Vec<f64> = (0..jets.len()).map(|k| 1.0 / jets.speed_jet(k).0).collect();
    let dns: Vec<f64> = (0..jets.len())
        .map(|k| 0.5 * ns[k] * (jets.dnu_eps[k] / jets.eps[k] + jets.dnu_mu[k] / jets.mu[k]))
        .collect();
    let (free, vals) = boundary_pins(basis, domain, |y| (jets.interpolate(y, &ns), jets.interpolate(y, &dns)));
    let mean = ns.iter().sum::<f64>() / ns.len() as f64;
    let n0: Vec<f64> = free.iter().zip(&vals).map(|(&f, &v)| if f { mean } else { v }).collect();
    let (nfield, rays, tomo) = tag("speed", traveltime_tomography(&data.lens, domain, basis, &n0, Some(&free), &cfg.tomo))?;
    let speed = Slowness(Field::Spline(std::sync::Arc::new(nfield.clone())));
    let c = tag("speed", grid_of(basis, |x| 1.0 / nfield.basis.eval_value(&nfield.coefs, x)))?;
    let keep: Vec<usize> = (0..n).filter(|&k| rays[k].is_some()).collect();
    let kept: Vec<Ray> = keep.iter().map(|&k| rays[k].clone().expect("kept")).collect();
    let mut st = StageReport {
        name: "speed".into(),
        residual: tomo.rms.last().copied().unwrap_or(0.0),
        notes: tomo.warnings.clone(),
        ..Default::default()
    };
    if let Some(m) = truth {
        let f = |x: &V3| 1.0 / nfield.basis.eval_value(&nfield.coefs, x);
        let t = |x: &V3| m.speed(x).v;
        st.error = Some(relative_l2(&f, &t, &center, r_err));
        st.shell_errors = shell_errors(&f, &t, &center, radius);
    }
    st.seconds = t0.elapsed().as_secs_f64();
    stages.push(st);

    let t0 = Instant::now();
    let att: Vec<f64> = keep.iter().map(|&k| data.attenuation[k]).collect();
    if att.iter().all(|&v| v == 0.0) {
        anomalies.push("attenuation data identically zero: sigma/eps set to zero".into());
    }
    let soe = tag("sigma_over_eps", recover_sigma_over_eps(&kept, &att, &speed, basis, &cfg.nodes, &cfg.xray))?;
    let mut st = StageReport {
        name: "sigma_over_eps".into(),
        residual: soe.solve.residual,
        notes: if soe.clamped > 0 { vec![format!("{} nodes clamped to zero", soe.clamped)] } else { vec![] },
        ..Default::default()
    };
    if let Some(m) = truth {
        let f = |x: &V3| soe.field.value(x);
        let t = |x: &V3| m.sigma_over_eps(x);
        st.error = Some(relative_l2(&f, &t, &center, r_err));
        st.shell_errors = shell_errors(&f, &t, &center, radius);
    }
    st.seconds = t0.elapsed().as_secs_f64();
    stages.push(st);

    let t0 = Instant::now();
    let trt: Vec<[f64; NPOL]> = keep.iter().map(|&k| data.trt[k]).collect();
    let seeds: Vec<V3> = keep.iter().map(|&k| data.seeds[k]).collect();
    let er = tag(
        "epsilon",
        recover_epsilon(&trt, &kept, &seeds, &speed, &jets, &data.eps_ref, domain, basis, &cfg.nodes, &cfg.trt),
    )?;
    let mut st = StageReport {
        name: "epsilon".into(),
        residual: er.report.misfit.last().copied().unwrap_or(0.0),
        ..Default::default()
    };
    if let Some(m) = truth {
        let f = |x: &V3| er.eps.value(x);
        let t = |x: &V3| m.epsilon.value(x);
        st.error = Some(relative_l2(&f, &t, &center, r_err));
        st.shell_errors = shell_errors(&f, &t, &center, radius);
    }
    st.seconds = t0.elapsed().as_secs_f64();
    stages.push(st);

    let mu = tag("assemble", map_grid(&er.eps, |i, e| 1.0 / (c.values[i] * c.values[i] * e)))?;
    let sigma = tag("assemble", map_grid(&er.eps, |i, e| soe.field.values[i] * e))?;
    Ok(ReconstructionReport {
        c,
        sigma_over_eps: soe.field,
        eps: er.eps,
        mu,
        sigma,
        jets,
        stages,
        tomography: tomo,
        clamped: soe.clamped,
        anomalies,
    })
}
