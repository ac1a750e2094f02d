//! Invariant suites for `mxt verify`. Each check reports a measured value
//! against a tolerance that the config `[verify]` section may override.

use mxt::amplitude::{assemble_h0_e0, transport_amplitude_ode};
use mxt::eikonal::plane_wave_hessian;
use mxt::geometry::{frame_seed, g_dot, JacobiInit, lens_relation, parallel_transport, trace_geodesic, LensRecord, Ray, TraceConfig};
use mxt::io::{field_from_reader, field_to_bytes, RunConfig};
use mxt::media::{Domain, Field, GridField, MediumSpec, SpeedField, SpeedModel, SplineBasis, V3};
use mxt::reconstruct::{chebyshev_rho, BoundaryJets, BoundarySymbolSample};
use mxt::transforms::{trace_all, AcquisitionSet, NodeSet, NodeSpec, XrayOperator};
use mxt::{MxtError, Result};

pub const SUITES: [&str; 6] = ["media", "geometry", "amplitude", "transforms", "reconstruct", "io"];

pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.value.is_finite() && self.value <= self.tol
    }
}

struct Sink<'a> {
    cfg: &'a RunConfig,
    out: Vec<Check>,
}

impl Sink<'_> {
    fn push(&mut self, name: &str, value: f64, default: f64) {
        let tol = self.cfg.verify_tol(name, default);
        self.out.push(Check { name: name.into(), value, tol });
    }
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Sink { cfg, out: Vec::new() };
    let names: Vec<&str> = if name == "all" { SUITES.to_vec() } else { vec![name] };
    for n in names {
        match n {
            "media" => media(&mut s)?,
            "geometry" => geometry(&mut s)?,
            "amplitude" => amplitude(&mut s)?,
            "transforms" => transforms(&mut s)?,
            "reconstruct" => reconstruct(&mut s)?,
            "io" => io(&mut s)?,
            _ => return Err(MxtError::Config(format!("unknown suite `{n}` (expected one of {} or all)", SUITES.join(", ")))),
        }
    }
    Ok(s.out)
}

fn cubic(x: &V3) -> f64 {
    0.5 + x.x - 0.3 * x.y * x.y + 0.2 * x.x * x.y * x.z + 0.7 * x.z.powi(3)
}

fn media(s: &mut Sink) -> Result<()> {
    let g = GridField::from_fn([-1.0; 3], [0.25, 0.2, 0.3], [9, 11, 8], cubic)?;
    let node = (0..g.node_count()).map(|i| (g.value(&g.node_at(i)) - g.values[i]).abs()).fold(0.0, f64::max);
    let pts = [V3::new(0.13, -0.41, 0.27), V3::new(-0.77, 0.52, 0.6), V3::new(0.9, 0.9, 0.9)];
    let off = pts.iter().map(|x| (g.value(x) - cubic(x)).abs()).fold(0.0, f64::max);
    s.push("media.node_reproduction", node, 0.0);
    s.push("media.cubic_reproduction", off, 1e-12);
    Ok(())
}

fn lens() -> SpeedField {
    SpeedField(Field::Constant(1.0).plus(Field::gaussian(0.1, [0.15, -0.1, 0.05], 0.3)))
}

fn geometry(s: &mut Sink) -> Result<()> {
    let (m, d, cfg) = (lens(), Domain::unit_ball(), TraceConfig::default());
    let acq = AcquisitionSet::fan_3d(&d, 8, 8, 1.3);
    let (mut ham, mut rev, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    for r in trace_all(&m, &d, &acq, &cfg) {
        let r = r?;
        for smp in &r.samples {
            let c = m.speed(&smp.x).v;
            ham = ham.max((c * c * smp.p.norm_squared() - 1.0).abs());
        }
        let rec = LensRecord::from_ray(&r)?;
        let back = lens_relation(&m, &d, &rec.x_out, &(-rec.v_out), &cfg)?;
        rev = rev.max((back.x_out - rec.x_in).norm()).max((back.v_out + rec.v_in).norm()).max((back.tau - rec.tau).abs());
        let c0 = m.speed(&r.first().x).v;
        let fr = parallel_transport(&m, &r, &frame_seed(c0, &r.first().v, &V3::z()))?;
        for (k, smp) in r.samples.iter().enumerate() {
            let c = m.speed(&smp.x).v;
            let (e, z) = (fr.eta[k], fr.zeta[k]);
            for v in [g_dot(c, &e, &e) - 1.0, g_dot(c, &z, &z) - 1.0, g_dot(c, &e, &smp.v), g_dot(c, &z, &smp.v), g_dot(c, &e, &z)] {
                drift = drift.max(v.abs());
            }
        }
    }
    s.push("geometry.hamiltonian", ham, 1e-8);
    s.push("geometry.time_reversal", rev, 1e-6);
    s.push("geometry.frame_drift", drift, 1e-8);
    Ok(())
}

fn lossy_lens() -> MediumSpec {
    let c = Field::Constant(1.0).plus(Field::gaussian(0.12, [0.1, -0.15, 0.05], 0.35));
    let eps = Field::Constant(1.5).plus(Field::gaussian(0.3, [-0.2, 0.1, 0.0], 0.4));
    MediumSpec::from_speed(c, eps, Field::gaussian(0.8, [0.05, 0.1, -0.1], 0.3))
}

fn amplitude(s: &mut Sink) -> Result<()> {
    let (m, d) = (lossy_lens(), Domain::unit_ball());
    let (mut closed, mut orth) = (0.0f64, 0.0f64);
    for dir in [V3::new(1.0, 0.2, 0.0), V3::new(1.0, -0.3, 0.3), V3::new(1.0, 0.0, -0.4)] {
        let r: Ray = trace_geodesic(&m, &d, &V3::new(-1.0, 0.0, 0.0), &dir, &TraceConfig::default())?;
        let c = m.speed(&r.first().x);
        let init = JacobiInit::plane_wave(r.first(), &plane_wave_hessian(&c, &r.first().p));
        let p = transport_amplitude_ode(&m, &r, &init, &frame_seed(c.v, &r.first().v, &V3::z()), 1.0)?;
        for k in 0..p.a.len() {
            let cf = p.closed_form(k);
            closed = closed.max(((p.a[k] - cf) / cf).abs());
        }
        let tr = assemble_h0_e0(&m, &r, &p.frame, &p.a, &p.i);
        for (k, smp) in r.samples.iter().enumerate() {
            let (h, e, np) = (tr.h0[k], tr.e0[k], smp.p.norm());
            orth = orth
                .max((smp.p.dot(&h) / (np * h.norm())).abs())
                .max((smp.p.dot(&e) / (np * e.norm())).abs())
                .max((e.dot(&h) / (e.norm() * h.norm())).abs());
        }
    }
    s.push("amplitude.closed_form", closed, 1e-6);
    s.push("amplitude.orthogonality", orth, 1e-8);
    Ok(())
}

// deterministic zero-mean test vector
fn probe(n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|k| ((k as f64 + phase) * 0.618_033_988_749_895).fract() - 0.5).collect()
}

fn transforms(s: &mut Sink) -> Result<()> {
    let m = SpeedField(Field::Constant(1.0).plus(Field::gaussian_2d(0.1, [0.2, -0.1], 0.3)));
    let d = Domain::unit_ball();
    let acq = AcquisitionSet::fan_2d(&d, 24, 16, 1.45);
    let rays = trace_all(&m, &d, &acq, &TraceConfig::default()).into_iter().collect::<Result<Vec<_>>>()?;
    let nodes = NodeSet::build(&m, &rays, None, &NodeSpec { max_len: 0.05, gauss: 2 });
    let n = 24;
    let basis = SplineBasis::new([-1.0, -1.0, 0.0], [2.0 / (n - 1) as f64; 3], [n, n, 1]);
    let op = XrayOperator::new(&basis, &nodes)?;
    let (f, y) = (probe(basis.ncoef(), 0.3), probe(nodes.nrays(), 0.7));
    let lhs: f64 = op.apply(&f).iter().zip(&y).map(|(a, b)| a * b).sum();
    let rhs: f64 = f.iter().zip(op.adjoint(&y)).map(|(a, b)| a * b).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    s.push("transforms.adjointness", (lhs - rhs).abs() / (norm(&f) * norm(&y)), 1e-6);
    Ok(())
}

fn reconstruct(s: &mut Sink) -> Result<()> {
    let mut samples = Vec::new();
    let mut truth = Vec::new();
    for k in 0..12 {
        let t = k as f64 * std::f64::consts::FRAC_PI_6;
        let x0 = V3::new(t.cos(), t.sin(), 0.0);
        let (eps, mu, sigma, de, dm) = (1.0 + 0.1 * k as f64, 1.2 - 0.03 * k as f64, 0.05 * k as f64, 0.2 * t.sin(), -0.1 * t.cos());
        for rho in chebyshev_rho(eps, mu, 8) {
            samples.push(BoundarySymbolSample::from_medium(x0, rho, eps, mu, sigma, de, dm)?);
        }
        truth.push([eps, mu, sigma, de, dm]);
    }
    let j = BoundaryJets::identify(&samples)?;
    let mut err = 0.0f64;
    for (k, t) in truth.iter().enumerate() {
        let got = [j.eps[k], j.mu[k], j.sigma[k], j.dnu_eps[k], j.dnu_mu[k]];
        for (a, b) in got.iter().zip(t) {
            err = err.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    s.push("reconstruct.boundary_round_trip", err, 1e-10);
    Ok(())
}

fn io(s: &mut Sink) -> Result<()> {
    let g = GridField::from_fn([-1.0, -0.5, 0.0], [0.1, 0.2, 1.0], [7, 5, 1], |x| (3.0 * x.x).sin() + x.y.exp())?;
    let back = field_from_reader(field_to_bytes(&g).as_slice())?;
    let same = back.values.len() == g.values.len() && back.values.iter().zip(&g.values).all(|(a, b)| a.to_bits() == b.to_bits());
    s.push("io.field_round_trip", if same { 0.0 } else { 1.0 }, 0.0);
    Ok(())
}
