use mxt::amplitude::{boundary_symbol_s0, boundary_symbol_s1};
use mxt::geometry::*;
use mxt::media::*;
use mxt::reconstruct::*;
use mxt::MxtError;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn order0_samples(eps: f64, mu: f64, rho2: &[f64]) -> Vec<(f64, f64)> {
    rho2.iter().map(|&r2| (r2.sqrt(), boundary_symbol_s0(eps, mu, r2.sqrt()).unwrap())).collect()
}

#[test]
fn order0_vacuum() {
    let f = recover_boundary_order0(&order0_samples(1.0, 1.0, &[0.25, 0.5])).unwrap();
    assert!((f.eps - 1.0).abs() < 1e-12 && (f.mu - 1.0).abs() < 1e-12, "{f:?}");
}

#[test]
fn order0_dielectric() {
    let f = recover_boundary_order0(&order0_samples(2.0, 1.0, &[0.5, 1.0])).unwrap();
    assert!((f.eps - 2.0).abs() < 1e-12 && (f.mu - 1.0).abs() < 1e-12, "{f:?}");
}

#[test]
fn order0_noise_monte_carlo() {
    let (eps, mu) = (1.7, 1.3);
    let rho = chebyshev_rho(eps, mu, 8);
    let clean: Vec<(f64, f64)> = rho.iter().map(|&r| (r, boundary_symbol_s0(eps, mu, r).unwrap())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let noisy: Vec<(f64, f64)> = clean
            .iter()
            .map(|&(r, s)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (r, s * (1.0 + 1e-3 * z))
            })
            .collect();
        let f = recover_boundary_order0(&noisy).unwrap();
        worst = worst.max(((f.eps - eps) / eps).abs()).max(((f.mu - mu) / mu).abs());
    }
    assert!(worst < 0.01, "worst relative error {worst}");
}

#[test]
fn order0_rejects_inconsistent_and_duplicates() {
    // S0 growing with rho cannot come from positive eps, mu
    let bad = vec![(0.3, 0.01), (0.6, 1.0), (0.8, 3.0)];
    assert!(matches!(recover_boundary_order0(&bad), Err(MxtError::Inconsistent(_))));
    let s = boundary_symbol_s0(1.0, 1.0, 0.5).unwrap();
    assert!(recover_boundary_order0(&[(0.5, s), (0.5, s)]).is_err());
    let near = order0_samples(1.0, 1.0, &[0.25, 0.25 + 1e-7]);
    let f = recover_boundary_order0(&near).unwrap();
    assert!(f.warning.is_some());
}

#[test]
fn order1_examples() {
    let rho: Vec<f64> = [0.2f64, 0.5, 0.8].iter().map(|r| r.sqrt()).collect();
    let s: Vec<(f64, f64)> = rho.iter().map(|&r| (r, boundary_symbol_s1(1.0, 1.0, 1.0, 0.0, 0.0, r).unwrap())).collect();
    let f = recover_boundary_order1(&s, 1.0, 1.0).unwrap();
    assert!((f.sigma - 1.0).abs() < 1e-12 && f.dnu_eps.abs() < 1e-12 && f.dnu_mu.abs() < 1e-12, "{f:?}");

    // d3 eps = 2 means dnu eps = -2; the symbol is the constant -1
    let s: Vec<(f64, f64)> = rho.iter().map(|&r| (r, boundary_symbol_s1(1.0, 1.0, 0.0, -2.0, 0.0, r).unwrap())).collect();
    assert!(s.iter().all(|v| (v.1 + 1.0).abs() < 1e-14));
    let f = recover_boundary_order1(&s, 1.0, 1.0).unwrap();
    assert!((f.dnu_eps + 2.0).abs() < 1e-12, "{f:?}");

    let z: Vec<(f64, f64)> = rho.iter().map(|&r| (r, 0.0)).collect();
    let f = recover_boundary_order1(&z, 1.0, 1.0).unwrap();
    assert_eq!((f.sigma, f.dnu_eps, f.dnu_mu), (0.0, 0.0, 0.0));
}

#[test]
fn order1_singular_system() {
    let s = boundary_symbol_s1(1.0, 1.0, 1.0, 0.0, 0.0, 0.5).unwrap();
    assert!(matches!(recover_boundary_order1(&[(0.5, s), (0.5, s), (0.5, s)], 1.0, 1.0), Err(MxtError::IllConditioned(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn boundary_round_trip(eps in 0.5f64..4.0, mu in 0.5f64..4.0, de in -2.0f64..2.0, dm in -2.0f64..2.0,
                           sigma in 0.0f64..2.0, n in 3usize..9) {
        let rho = chebyshev_rho(eps, mu, n);
        let s0: Vec<(f64, f64)> = rho.iter().map(|&r| (r, boundary_symbol_s0(eps, mu, r).unwrap())).collect();
        let f0 = recover_boundary_order0(&s0).unwrap();
        prop_assert!((f0.eps - eps).abs() < 1e-10 * eps && (f0.mu - mu).abs() < 1e-10 * mu);
        let s1: Vec<(f64, f64)> = rho.iter().map(|&r| (r, boundary_symbol_s1(eps, mu, sigma, de, dm, r).unwrap())).collect();
        let f1 = recover_boundary_order1(&s1, f0.eps, f0.mu).unwrap();
        prop_assert!((f1.dnu_eps - de).abs() < 1e-10, "{} vs {}", f1.dnu_eps, de);
        prop_assert!((f1.dnu_mu - dm).abs() < 1e-10, "{} vs {}", f1.dnu_mu, dm);
        prop_assert!((f1.sigma - sigma).abs() < 1e-10, "{} vs {}", f1.sigma, sigma);
    }
}

#[test]
fn jets_from_symbol_samples() {
    let pts = [V3::x(), V3::y(), -V3::x()];
    let mut samples = Vec::new();
    for (k, p) in pts.iter().enumerate() {
        let e = 1.0 + 0.1 * k as f64;
        for r in chebyshev_rho(e, 1.0, 5) {
            samples.push(BoundarySymbolSample::from_medium(*p, r, e, 1.0, 0.3, 0.2, -0.1, ).unwrap());
        }
    }
    let j = BoundaryJets::identify(&samples).unwrap();
    assert_eq!(j.len(), 3);
    for k in 0..3 {
        assert!((j.eps[k] - (1.0 + 0.1 * k as f64)).abs() < 1e-10);
        assert!((j.sigma[k] - 0.3).abs() < 1e-10 && (j.dnu_mu[k] + 0.1).abs() < 1e-10);
    }
    assert_eq!(j.interpolate(&V3::y(), &j.eps), j.eps[1]);
}

// ---- radial profiles ----

fn radial_records(c: &Field, nrays: usize) -> Vec<LensRecord> {
    let m = SpeedField(c.clone());
    let d = Domain::unit_ball();
    let cfg = TraceConfig { rtol: 1e-11, atol: 1e-13, ..TraceConfig::default() };
    (0..nrays)
        .map(|k| {
            let a = 1.5 * (k as f64 + 0.5) / nrays as f64;
            let dir = V3::new(-a.cos(), a.sin(), 0.0);
            lens_relation(&m, &d, &V3::x(), &dir, &cfg).unwrap()
        })
        .collect()
}

fn max_rel(p: &RadialProfile, c: &dyn Fn(f64) -> f64, rmin: f64) -> f64 {
    p.r.iter().zip(&p.c).filter(|(r, _)| **r >= rmin).map(|(r, v)| ((v - c(*r)) / c(*r)).abs()).fold(0.0, f64::max)
}

#[test]
fn herglotz_constant_profile() {
    let s: Vec<(f64, f64)> = (1..200).map(|k| {
        let b = k as f64 / 200.0;
        (b, 2.0 * (1.0 - b * b).sqrt())
    }).collect();
    let p = herglotz_invert(&s, 1.0, 1.0).unwrap();
    assert!(max_rel(&p, &|_| 1.0, 0.0) < 1e-4, "{}", max_rel(&p, &|_| 1.0, 0.0));
    // the deepest ray turns at r = b_min
    assert!((p.r[0] - 0.005).abs() < 1e-3);
}

fn quad_profile() -> (Field, impl Fn(f64) -> f64) {
    (Field::RadialPoly { center: V3::zeros(), coeffs: vec![1.2, -0.2] }, |r: f64| 1.0 + 0.2 * (1.0 - r * r))
}

#[test]
fn herglotz_ray_traced_profile() {
    let (c, cr) = quad_profile();
    let rec = radial_records(&c, 120);
    let s = ray_parameter_samples(&rec, &V3::zeros(), 1.0);
    let p = herglotz_invert(&s, 1.0, 1.0).unwrap();
    let err = max_rel(&p, &cr, 0.0);
    assert!(err < 0.01, "max relative error {err}");
}

#[test]
fn herglotz_noisy_times() {
    let (c, cr) = quad_profile();
    let rec = radial_records(&c, 120);
    let clean = ray_parameter_samples(&rec, &V3::zeros(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s: Vec<(f64, f64)> = clean
            .iter()
            .map(|&(p, t)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (p, t * (1.0 + 1e-3 * z))
            })
            .collect();
        match herglotz_invert(&s, 1.0, 1.0) {
            Ok(p) => worst = worst.max(max_rel(&p, &cr, 0.0)),
            Err(e) => panic!("{e}"),
        }
    }
    assert!(worst < 0.03, "worst max relative error {worst}");
}

#[test]
fn herglotz_rejects_non_monotone() {
    let s = vec![(0.2, 1.8), (0.4, 1.9), (0.6, 1.5)];
    assert!(matches!(herglotz_invert(&s, 1.0, 1.0), Err(MxtError::Herglotz(_))));
    // a travel-time bulge no smoothing can remove
    let s: Vec<(f64, f64)> = (1..60)
        .map(|k| {
            let b = k as f64 / 60.0;
            (b, 2.0 * (1.0 - b * b).sqrt() + 0.6 * (-((b - 0.5) / 0.08).powi(2)).exp())
        })
        .collect();
    assert!(matches!(herglotz_invert(&s, 1.0, 1.0), Err(MxtError::Herglotz(_))));
}

// ---- travel-time tomography and the later stages (planar slice) ----

use mxt::io::{self, Mode, RunConfig};
use mxt::transforms::*;

fn ball() -> Domain {
    Domain::unit_ball()
}

fn small(name: &str) -> RunConfig {
    RunConfig { phantom: name.into(), grid: 36, sources: 60, directions: 40, ..RunConfig::default() }
}

fn lens_of(m: &dyn SpeedModel, cfg: &RunConfig) -> (Vec<Ray>, Vec<LensRecord>, AcquisitionSet) {
    let acq = io::acquisition(&ball(), cfg);
    let rays: Vec<Ray> = trace_all(m, &ball(), &acq, &TraceConfig::default()).into_iter().map(|r| r.unwrap()).collect();
    let lens = rays.iter().map(|r| LensRecord::from_ray(r).unwrap()).collect();
    (rays, lens, acq)
}

// slowness pinned outside the ball to the exact boundary jet
fn exact_pins(c: &Field, basis: &SplineBasis) -> (Vec<bool>, Vec<f64>) {
    boundary_pins(basis, &ball(), |y| {
        let j = c.jet(y);
        (1.0 / j.v, -j.g.dot(&y.normalize()) / (j.v * j.v))
    })
}

fn start_model(free: &[bool], vals: &[f64], n0: f64) -> Vec<f64> {
    free.iter().zip(vals).map(|(&f, &v)| if f { n0 } else { v }).collect()
}

fn err_disc(f: &dyn Fn(&V3) -> f64, t: &dyn Fn(&V3) -> f64) -> f64 {
    relative_l2(f, t, &V3::zeros(), 0.8)
}

#[test]
fn relative_l2_oracle() {
    // |f - t| = 0.1 t everywhere gives 0.1; zero truth falls back to the absolute norm
    let e = err_disc(&|x| 1.1 * (1.0 + x.x * x.x), &|x| 1.0 + x.x * x.x);
    assert!((e - 0.1).abs() < 1e-12, "{e}");
    assert_eq!(err_disc(&|_| 0.0, &|_| 0.0), 0.0);
}

#[test]
fn shooting_connects_endpoints() {
    let m = SpeedField(io::lens_speed(Mode::Slice));
    let x_in = V3::new(-1.0, 0.0, 0.0);
    let ray = trace_geodesic(&m, &ball(), &x_in, &V3::new(1.0, 0.3, 0.0), &TraceConfig::default()).unwrap();
    let (x_out, _) = ray.exit.unwrap();
    let shot = shoot(&m, &ball(), &x_in, &x_out, &V3::x(), &ShootConfig::default()).unwrap();
    assert!((shot.exit.unwrap().0 - x_out).norm() < 1e-6);
    assert!((shot.length() - ray.length()).abs() < 1e-6);
}

#[test]
fn tomography_fixed_point() {
    let cfg = small("vacuum");
    let (_, lens, _) = lens_of(&MediumSpec::vacuum(), &cfg);
    let basis = io::grid_basis(Mode::Slice, 24);
    let (free, vals) = exact_pins(&Field::Constant(1.0), &basis);
    let n0 = start_model(&free, &vals, 1.0);
    let tc = TomoConfig { outer: 2, ..TomoConfig::default() };
    let (n, _, rep) = traveltime_tomography(&lens, &ball(), &basis, &n0, Some(&free), &tc).unwrap();
    assert!(rep.rms[0] < 1e-8, "{:?}", rep.rms);
    assert!(n.coefs.iter().all(|v| (v - 1.0).abs() < 1e-6));
}

fn monotone(rep: &TomoReport) {
    let mut bounds = rep.shell_starts.clone();
    bounds.push(rep.objective.len());
    for w in bounds.windows(2) {
        let seg = &rep.objective[w[0]..w[1]];
        assert!(seg.windows(2).all(|p| p[1] <= p[0]), "{:?}", rep.objective);
    }
}

#[test]
fn tomography_lens() {
    let cfg = small("lens");
    let c = io::lens_speed(Mode::Slice);
    let (_, lens, _) = lens_of(&SpeedField(c.clone()), &cfg);
    let basis = io::grid_basis(Mode::Slice, 36);
    let (free, vals) = exact_pins(&c, &basis);
    let n0 = start_model(&free, &vals, 1.0);
    let (n, _, rep) = traveltime_tomography(&lens, &ball(), &basis, &n0, Some(&free), &TomoConfig::default()).unwrap();
    monotone(&rep);
    assert_eq!(rep.dropped, 0);
    let err = err_disc(&|x| 1.0 / n.jet(x).v, &|x| c.value(x));
    assert!(err < 0.03, "relative error {err}");
    assert!(rep.rms.last().unwrap() < &(1e-2 * rep.rms[0]));
}

#[test]
fn tomography_shells_use_contained_rays() {
    let cfg = small("lens");
    let c = io::lens_speed(Mode::Slice);
    let m = SpeedField(c.clone());
    let (rays, lens, _) = lens_of(&m, &cfg);
    let basis = io::grid_basis(Mode::Slice, 36);
    let (free, vals) = exact_pins(&c, &basis);
    let n0 = start_model(&free, &vals, 1.0);
    let tc = TomoConfig { shells: vec![0.3, 0.6, 1.0], ..TomoConfig::default() };
    let (n, _, rep) = traveltime_tomography(&lens, &ball(), &basis, &n0, Some(&free), &tc).unwrap();
    monotone(&rep);
    assert_eq!(rep.shell_rays.len(), 3);
    assert!(rep.shell_rays.windows(2).all(|w| w[0] < w[1]), "{:?}", rep.shell_rays);
    assert_eq!(rep.shell_rays[2], lens.len());
    // the filter keeps exactly the rays whose samples stay outside radius 1 - q
    let all: Vec<Option<Ray>> = rays.into_iter().map(Some).collect();
    for q in [0.3, 0.6] {
        let keep = shell_members(&all, &V3::zeros(), 1.0 - q);
        for (k, r) in all.iter().enumerate() {
            let rmin = r.as_ref().unwrap().samples.iter().map(|s| s.x.norm()).fold(f64::INFINITY, f64::min);
            assert_eq!(keep[k], rmin >= 1.0 - q - 1e-12);
        }
    }
    let err = err_disc(&|x| 1.0 / n.jet(x).v, &|x| c.value(x));
    assert!(err < 0.03, "relative error {err}");
}

#[test]
fn tomography_agrees_with_herglotz() {
    let (c, cr) = quad_profile();
    let cfg = small("radial");
    let (_, lens, _) = lens_of(&SpeedField(c.clone()), &cfg);
    let basis = io::grid_basis(Mode::Slice, 36);
    let (free, vals) = exact_pins(&c, &basis);
    let n0 = start_model(&free, &vals, 1.0);
    let (n, _, _) = traveltime_tomography(&lens, &ball(), &basis, &n0, Some(&free), &TomoConfig::default()).unwrap();
    let prof = herglotz_invert(&ray_parameter_samples(&radial_records(&c, 120), &V3::zeros(), 1.0), 1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..=16 {
        let r = 0.05 + 0.05 * k as f64;
        let h = prof.eval(r).unwrap();
        // angular average of the tomographic speed on the circle of radius r
        let t: f64 = (0..32)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / 32.0;
                1.0 / n.jet(&V3::new(r * a.cos(), r * a.sin(), 0.0)).v
            })
            .sum::<f64>()
            / 32.0;
        worst = worst.max(((t - h) / h).abs());
        assert!(((h - cr(r)) / cr(r)).abs() < 1e-3);
    }
    assert!(worst < 0.01, "max relative disagreement {worst}");
}

#[test]
fn sigma_over_eps_stage() {
    let cfg = small("lens");
    let c = io::lens_speed(Mode::Slice);
    let m = SpeedField(c.clone());
    let (rays, _, _) = lens_of(&m, &cfg);
    let basis = io::grid_basis(Mode::Slice, 36);
    let nodes = NodeSpec { max_len: 0.04, gauss: 2 };
    let zero = recover_sigma_over_eps(&rays, &vec![0.0; rays.len()], &m, &basis, &nodes, &InvertConfig::default()).unwrap();
    assert!(zero.field.values.iter().all(|&v| v == 0.0));
    assert_eq!(zero.clamped, 0);

    let f = io::loss_profile(Mode::Slice);
    let data: Vec<f64> = rays.iter().map(|r| *integrate_along(&m, r, |x| f.value(x)).last().unwrap()).collect();
    let got = recover_sigma_over_eps(&rays, &data, &m, &basis, &nodes, &InvertConfig::default()).unwrap();
    assert!(got.field.values.iter().all(|&v| v >= 0.0));
    let err = err_disc(&|x| got.field.value(x), &|x| f.value(x));
    assert!(err < 0.05, "relative error {err}");

    // the same data with a speed recovered by tomography
    let lens: Vec<LensRecord> = rays.iter().map(|r| LensRecord::from_ray(r).unwrap()).collect();
    let (free, vals) = exact_pins(&c, &basis);
    let n0 = start_model(&free, &vals, 1.0);
    let (n, shot, _) = traveltime_tomography(&lens, &ball(), &basis, &n0, Some(&free), &TomoConfig::default()).unwrap();
    let rec = Slowness(Field::Spline(std::sync::Arc::new(n)));
    let shot: Vec<Ray> = shot.into_iter().map(|r| r.unwrap()).collect();
    let got = recover_sigma_over_eps(&shot, &data, &rec, &basis, &nodes, &InvertConfig::default()).unwrap();
    let err = err_disc(&|x| got.field.value(x), &|x| f.value(x));
    assert!(err < 0.10, "relative error {err}");
}

fn jets_of(m: &MediumSpec, n: usize) -> BoundaryJets {
    let mut s = Vec::new();
    for y in io::boundary_points(&ball(), Mode::Slice, n) {
        let nu = y.normalize();
        let (e, mu) = (m.epsilon.jet(&y), m.mu.jet(&y));
        for rho in chebyshev_rho(e.v, mu.v, 6) {
            s.push(BoundarySymbolSample::from_medium(y, rho, e.v, mu.v, m.sigma.value(&y), e.g.dot(&nu), mu.g.dot(&nu)).unwrap());
        }
    }
    BoundaryJets::identify(&s).unwrap()
}

#[test]
fn epsilon_stage() {
    let cfg = small("permittivity");
    let m = io::phantom("permittivity", Mode::Slice).unwrap();
    let (rays, _, acq) = lens_of(&m, &cfg);
    let basis = io::grid_basis(Mode::Slice, 36);
    let nodes = NodeSpec { max_len: 0.04, gauss: 2 };
    let jets = jets_of(&m, 16);
    let eps_ref = Field::Constant(1.0);
    let tc = TrtInvertConfig::default();
    let zero = vec![[0.0; NPOL]; rays.len()];
    let pts = io::boundary_points(&ball(), Mode::Slice, 16);
    let flat = BoundaryJets {
        eps: vec![1.0; 16],
        mu: vec![1.0; 16],
        sigma: vec![0.0; 16],
        dnu_eps: vec![0.0; 16],
        dnu_mu: vec![0.0; 16],
        points: pts,
    };
    let got = recover_epsilon(&zero, &rays, &acq.seeds, &m, &flat, &eps_ref, &ball(), &basis, &nodes, &tc).unwrap();
    assert!(got.eps.values.iter().all(|&v| v == 1.0));

    let frames: Vec<FrameTransport> = rays
        .iter()
        .zip(&acq.seeds)
        .map(|(r, s)| parallel_transport(&m, r, &frame_seed(m.speed(&r.first().x).v, &r.first().v, s)).unwrap())
        .collect();
    let fine = NodeSet::build(&m, &rays, Some(&frames), &NodeSpec { max_len: 0.02, gauss: 3 });
    let u = Field::Ln(Box::new(m.epsilon.clone())).scaled(0.5);
    let data = trt_differential(&m, &u, &Field::Constant(0.0), &fine).unwrap();
    let got = recover_epsilon(&data, &rays, &acq.seeds, &m, &jets, &eps_ref, &ball(), &basis, &nodes, &tc).unwrap();
    let err = err_disc(&|x| got.eps.value(x), &|x| m.epsilon.value(x));
    assert!(err < 0.06, "relative error {err}");
}

fn identities(r: &ReconstructionReport) {
    for i in 0..r.eps.values.len() {
        let (c, e) = (r.c.values[i], r.eps.values[i]);
        assert!((r.mu.values[i] * c * c * e - 1.0).abs() <= 4.0 * f64::EPSILON);
        assert_eq!(r.sigma.values[i], r.sigma_over_eps.values[i] * e);
    }
}

#[test]
fn pipeline_vacuum() {
    let cfg = RunConfig { grid: 24, sources: 30, directions: 20, ..small("vacuum") };
    let m = MediumSpec::vacuum();
    let ds = io::gen_synthetic(&m, &cfg).unwrap();
    let r = pipeline(&ds.pipeline_data(), &io::pipeline_config(&cfg), Some(&m)).unwrap();
    identities(&r);
    for (g, v) in [(&r.c, 1.0), (&r.eps, 1.0), (&r.mu, 1.0), (&r.sigma_over_eps, 0.0), (&r.sigma, 0.0)] {
        assert!(g.values.iter().all(|x| (x - v).abs() < 1e-6));
    }
    assert!(r.stages.iter().all(|s| s.error.unwrap_or(0.0) < 1e-6));
    assert_eq!(r.stages.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), ["boundary", "speed", "sigma_over_eps", "epsilon"]);
}

#[test]
fn pipeline_survives_zeroed_attenuation() {
    let cfg = small("flagship");
    let m = io::phantom("flagship", Mode::Slice).unwrap();
    let mut ds = io::gen_synthetic(&m, &cfg).unwrap();
    for a in &mut ds.attenuation {
        a.1 = 0.0;
    }
    let r = pipeline(&ds.pipeline_data(), &io::pipeline_config(&cfg), Some(&m)).unwrap();
    identities(&r);
    assert!(r.sigma_over_eps.values.iter().all(|&v| v == 0.0));
    assert!(r.anomalies.iter().any(|a| a.contains("attenuation")));
    let eps = r.stages.iter().find(|s| s.name == "epsilon").unwrap();
    assert!(eps.error.unwrap() < 0.15);
}

#[test]
fn pipeline_tags_failing_stage() {
    let cfg = RunConfig { grid: 24, sources: 20, directions: 10, ..small("vacuum") };
    let mut ds = io::gen_synthetic(&MediumSpec::vacuum(), &cfg).unwrap();
    ds.symbols.clear();
    match pipeline(&ds.pipeline_data(), &io::pipeline_config(&cfg), None) {
        Err(MxtError::Stage { stage, .. }) => assert_eq!(stage, "boundary"),
        other => panic!("expected a boundary stage failure, got {other:?}"),
    }
}
