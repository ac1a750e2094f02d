use mxt::geometry::*;
use mxt::media::*;
use mxt::transforms::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ball() -> Domain {
    Domain::unit_ball()
}

fn diametral(m: &dyn SpeedModel) -> Ray {
    trace_geodesic(m, &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap()
}

fn framed(m: &dyn SpeedModel, rays: &[Ray], seeds: &[V3]) -> Vec<FrameTransport> {
    rays.iter()
        .zip(seeds)
        .map(|(r, s)| {
            let c = m.speed(&r.first().x).v;
            parallel_transport(m, r, &frame_seed(c, &r.first().v, s)).unwrap()
        })
        .collect()
}

fn slice_basis(n: usize) -> SplineBasis {
    SplineBasis::new([-1.0, -1.0, 0.0], [2.0 / (n - 1) as f64; 3], [n, n, 1])
}

fn fan(m: &dyn SpeedModel, nsrc: usize, ndir: usize) -> (Vec<Ray>, AcquisitionSet) {
    let acq = AcquisitionSet::fan_2d(&ball(), nsrc, ndir, 1.45);
    let rays: Vec<Ray> = trace_all(m, &ball(), &acq, &TraceConfig::default()).into_iter().map(|r| r.unwrap()).collect();
    (rays, acq)
}

// relative L2 error on r <= 0.8 in the plane x3 = 0
fn rel_err(f: &dyn Fn(&V3) -> f64, truth: &dyn Fn(&V3) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..81 {
        for j in 0..81 {
            let x = V3::new(-0.8 + 0.02 * i as f64, -0.8 + 0.02 * j as f64, 0.0);
            if x.norm() <= 0.8 {
                let t = truth(&x);
                num += (f(&x) - t).powi(2);
                den += t * t;
            }
        }
    }
    (num / den).sqrt()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn unit_and_zero_integrands() {
    let spec = NodeSpec::default();
    for (m, len) in [(MediumSpec::vacuum(), 2.0), (MediumSpec::constant(4.0, 1.0, 0.0), 4.0)] {
        let nodes = NodeSet::build(&m, &[diametral(&m)], None, &spec);
        assert!((xray_forward(&Field::Constant(1.0), &nodes)[0] - len).abs() < 1e-9);
        assert_eq!(xray_forward(&Field::Constant(0.0), &nodes)[0], 0.0);
    }
}

#[test]
fn gaussian_on_diametral_ray_matches_reference() {
    let m = MediumSpec::vacuum();
    let f = Field::gaussian(1.3, [0.2, 0.1, -0.05], 0.3);
    let nodes = NodeSet::build(&m, &[diametral(&m)], None, &NodeSpec::default());
    let oracle = simpson(&|t| f.value(&V3::new(t, 0.0, 0.0)), -1.0, 1.0, 20_000);
    assert!((xray_forward(&f, &nodes)[0] - oracle).abs() < 1e-8);
}

#[test]
fn operator_is_linear_and_adjoint_consistent() {
    let lens = SpeedField(Field::Constant(1.0).plus(Field::gaussian_2d(0.1, [0.2, -0.1], 0.3)));
    let (rays, _) = fan(&lens, 24, 16);
    let nodes = NodeSet::build(&lens, &rays, None, &NodeSpec { max_len: 0.05, gauss: 2 });
    let basis = slice_basis(24);
    let op = XrayOperator::new(&basis, &nodes).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rand_vec = |n: usize| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<f64>>();
    let (f, g, d) = (rand_vec(basis.ncoef()), rand_vec(basis.ncoef()), rand_vec(nodes.nrays()));
    let (xf, xg) = (op.apply(&f), op.apply(&g));
    let comb: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    for (k, v) in op.apply(&comb).iter().enumerate() {
        assert!((v - (2.0 * xf[k] - 3.0 * xg[k])).abs() < 1e-12 * (1.0 + v.abs()));
    }
    let lhs: f64 = xf.iter().zip(&d).map(|(a, b)| a * b).sum();
    let rhs: f64 = f.iter().zip(op.adjoint(&d)).map(|(a, b)| a * b).sum();
    let nf = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nd = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((lhs - rhs).abs() / (nf * nd) < 1e-6);
}

#[test]
fn adjoint_is_bitwise_independent_of_thread_count() {
    let m = MediumSpec::vacuum();
    let (rays, _) = fan(&m, 20, 12);
    let nodes = NodeSet::build(&m, &rays, None, &NodeSpec::default());
    let basis = slice_basis(20);
    let op = XrayOperator::new(&basis, &nodes).unwrap();
    let d: Vec<f64> = (0..nodes.nrays()).map(|k| (k as f64 * 0.37).sin()).collect();
    let run = |t: usize| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| op.adjoint(&d));
    assert_eq!(run(1), run(3));
}

#[test]
fn nodes_outside_the_grid_are_a_coverage_error() {
    let m = MediumSpec::vacuum();
    let nodes = NodeSet::build(&m, &[diametral(&m)], None, &NodeSpec::default());
    let small = SplineBasis::new([-0.5, -0.5, 0.0], [0.1; 3], [11, 11, 1]);
    assert!(matches!(XrayOperator::new(&small, &nodes), Err(mxt::MxtError::Coverage(0))));
}

#[test]
fn tensor_transform_examples() {
    let m = MediumSpec::vacuum();
    let r = diametral(&m);
    let frames = framed(&m, std::slice::from_ref(&r), &[V3::z()]);
    let nodes = NodeSet::build(&m, std::slice::from_ref(&r), Some(&frames), &NodeSpec::default());
    let zero = trt_forward(&|_| SymTensor3::from_components([0.0; 6]), &nodes).unwrap();
    assert_eq!(zero[0], [0.0; 3]);
    // u = |x|^2 / 2, c = 1 gives A(u) = (|x|^2 - 1) g_E
    let u = Field::RadialPoly { center: V3::zeros(), coeffs: vec![0.0, 0.5] };
    let a = trt_forward(&|x| tensor_a(&Jet::constant(1.0), &u.jet(x)), &nodes).unwrap();
    assert!((a[0][0] + 4.0 / 3.0).abs() < 1e-12);
    let id = trt_forward(&|_| SymTensor3::identity(), &nodes).unwrap();
    for k in 0..3 {
        assert!((id[0][k] - 2.0).abs() < 1e-9);
    }
    let slow = MediumSpec::constant(4.0, 1.0, 0.0);
    let rs = diametral(&slow);
    let fs = framed(&slow, std::slice::from_ref(&rs), &[V3::z()]);
    let ns = NodeSet::build(&slow, std::slice::from_ref(&rs), Some(&fs), &NodeSpec::default());
    assert!((trt_forward(&|_| SymTensor3::identity(), &ns).unwrap()[0][0] - 1.0).abs() < 1e-9);
}

#[test]
fn isotropic_tensor_reduces_to_scalar_transform() {
    let lens = SpeedField(Field::Constant(1.0).plus(Field::gaussian(0.15, [0.1, 0.2, -0.1], 0.3)));
    let acq = AcquisitionSet::fan_3d(&ball(), 6, 5, 1.2);
    let rays: Vec<Ray> = trace_all(&lens, &ball(), &acq, &TraceConfig::default()).into_iter().map(|r| r.unwrap()).collect();
    let frames = framed(&lens, &rays, &acq.seeds);
    let nodes = NodeSet::build(&lens, &rays, Some(&frames), &NodeSpec::default());
    let w = Field::gaussian(0.7, [-0.2, 0.0, 0.1], 0.4);
    let t = trt_forward(&|x| SymTensor3::identity().scale(w.value(x)), &nodes).unwrap();
    let wc2 = Field::Product(vec![w.clone(), lens.0.clone().powf(2.0)]);
    let s = xray_forward(&wc2, &nodes);
    for (a, b) in t.iter().zip(&s) {
        for k in 0..3 {
            assert!((a[k] - b).abs() < 1e-8 * b.abs().max(1.0), "{} vs {b}", a[k]);
        }
    }
}

#[test]
fn endpoint_identity_holds_differentially() {
    let c = Field::Constant(1.0).plus(Field::gaussian(0.1, [0.1, -0.2, 0.05], 0.35));
    let lens = SpeedField(c.clone());
    let u1 = Field::bump(0.2, [0.1, 0.1, 0.0], 0.6);
    let u2 = Field::gaussian(0.05, [-0.2, 0.1, 0.1], 0.5);
    let extra = |x: &V3| {
        let j = lens.speed(x);
        (j.g / j.v).norm_squared() + 0.3 * x.x
    };
    let cfg = TraceConfig { h_max: 0.01, ..Default::default() };
    let acq = AcquisitionSet::fan_3d(&ball(), 10, 10, 1.3);
    let rays: Vec<Ray> = trace_all(&lens, &ball(), &acq, &cfg).into_iter().map(|r| r.unwrap()).collect();
    let frames = framed(&lens, &rays, &acq.seeds);
    let nodes = NodeSet::build(&lens, &rays, Some(&frames), &NodeSpec { max_len: 0.01, gauss: 3 });
    let direct = trt_differential(&lens, &u1, &u2, &nodes).unwrap();
    let mut worst = 0.0f64;
    for (r, ray) in rays.iter().enumerate() {
        for pol in 0..NPOL {
            let eta0 = frames[r].eta[0];
            let (a1, b1) = endpoint_covectors(&lens, &u1, &extra, ray, &eta0, pol, 0.25);
            let (a2, b2) = endpoint_covectors(&lens, &u2, &extra, ray, &eta0, pol, -0.1);
            let d1 = trt_endpoint_extract(&lens, ray, &frames[r], pol, &a1, &b1).unwrap();
            let d2 = trt_endpoint_extract(&lens, ray, &frames[r], pol, &a2, &b2).unwrap();
            worst = worst.max(((d1 - d2) - direct[r][pol]).abs());
        }
    }
    assert!(worst < 1e-6, "worst mismatch {worst:.3e}");
}

#[test]
fn endpoint_extract_trivial_cases() {
    let m = MediumSpec::vacuum();
    let r = diametral(&m);
    let fr = framed(&m, std::slice::from_ref(&r), &[V3::z()]);
    assert_eq!(trt_endpoint_extract(&m, &r, &fr[0], 0, &V3::zeros(), &V3::zeros()).unwrap(), 0.0);
    let bad = FrameTransport { eta: fr[0].eta[..2].to_vec(), zeta: fr[0].zeta[..2].to_vec() };
    assert!(trt_endpoint_extract(&m, &r, &bad, 0, &V3::zeros(), &V3::zeros()).is_err());
    let u = Field::bump(0.2, [0.0, 0.0, 0.0], 0.5);
    let e = |_: &V3| 0.0;
    let (a1, b1) = endpoint_covectors(&m, &u, &e, &r, &fr[0].eta[0], 0, 0.0);
    let (a2, b2) = endpoint_covectors(&m, &u, &e, &r, &fr[0].eta[0], 0, 0.0);
    let d = trt_endpoint_extract(&m, &r, &fr[0], 0, &a1, &b1).unwrap() - trt_endpoint_extract(&m, &r, &fr[0], 0, &a2, &b2).unwrap();
    assert_eq!(d, 0.0);
}

fn phantom() -> Field {
    Field::gaussian_2d(1.0, [0.15, -0.1], 0.25).plus(Field::gaussian_2d(-0.5, [-0.3, 0.25], 0.2))
}

#[test]
fn xray_inversion_zero_and_bump() {
    let m = MediumSpec::vacuum();
    let (rays, _) = fan(&m, 72, 48);
    let nodes = NodeSet::build(&m, &rays, None, &NodeSpec { max_len: 0.04, gauss: 2 });
    let basis = slice_basis(40);
    let cfg = InvertConfig { reg: 1e-6, iters: 300, tol: 1e-8, noise: None };
    let (z, _) = xray_invert(&vec![0.0; nodes.nrays()], &nodes, &basis, &cfg, None).unwrap();
    assert!(z.coefs.iter().all(|&v| v == 0.0));
    let f = phantom();
    let data = xray_forward(&f, &nodes);
    let (rec, rep) = xray_invert(&data, &nodes, &basis, &cfg, None).unwrap();
    let err = rel_err(&|x| rec.jet(x).v, &|x| f.value(x));
    assert!(err < 0.05, "relative error {err:.4} after {} iterations", rep.iterations);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let scale = data.iter().map(|v| v * v).sum::<f64>().sqrt() / (data.len() as f64).sqrt();
    let sigma = 0.01 * scale;
    let noisy: Vec<f64> = data.iter().map(|v| v + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let cfg = InvertConfig { noise: Some(sigma), ..cfg };
    let (rec, rep) = xray_invert(&noisy, &nodes, &basis, &cfg, None).unwrap();
    let err = rel_err(&|x| rec.jet(x).v, &|x| f.value(x));
    assert!(err < 0.08, "noisy relative error {err:.4}, weight {:.2e}", rep.reg_weight);
}

#[test]
fn xray_inversion_error_decreases_under_refinement() {
    let m = MediumSpec::vacuum();
    let (rays, _) = fan(&m, 72, 48);
    let nodes = NodeSet::build(&m, &rays, None, &NodeSpec { max_len: 0.04, gauss: 2 });
    let f = phantom();
    let data = xray_forward(&f, &nodes);
    let cfg = InvertConfig { reg: 1e-7, iters: 400, tol: 1e-9, noise: None };
    let errs: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| {
            let (rec, _) = xray_invert(&data, &nodes, &slice_basis(n), &cfg, None).unwrap();
            rel_err(&|x| rec.jet(x).v, &|x| f.value(x))
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

fn trt_case(c: Field, tol: f64) {
    let speed = SpeedField(c);
    let (rays, acq) = fan(&speed, 60, 40);
    let frames = framed(&speed, &rays, &acq.seeds);
    let nodes = NodeSet::build(&speed, &rays, Some(&frames), &NodeSpec { max_len: 0.04, gauss: 2 });
    let basis = slice_basis(36);
    let zero = Field::Constant(0.0);
    let w = Field::bump_2d(0.2, [0.1, -0.05], 0.7);
    let data: Vec<f64> = trt_differential(&speed, &w, &zero, &nodes).unwrap().into_iter().flatten().collect();
    let pins = boundary_pins(&basis, &ball(), |_| (0.0, 0.0));
    let cfg = TrtInvertConfig::default();
    let (rec, rep) = trt_invert_for_u(&data, &nodes, &basis, &speed, &zero, Some((&pins.0, &pins.1)), &cfg).unwrap();
    let err = rel_err(&|x| rec.jet(x).v, &|x| w.value(x));
    assert!(err < tol, "relative error {err:.4}, misfit {:?}", rep.misfit);
    let zero_data = vec![0.0; data.len()];
    let (z, _) = trt_invert_for_u(&zero_data, &nodes, &basis, &speed, &zero, Some((&pins.0, &pins.1)), &cfg).unwrap();
    assert!(z.coefs.iter().all(|&v| v == 0.0));
}

#[test]
fn permittivity_inversion_straight_rays() {
    trt_case(Field::Constant(1.0), 0.05);
}

#[test]
fn permittivity_inversion_curved_rays() {
    trt_case(Field::Constant(1.0).plus(Field::gaussian_2d(0.1, [-0.1, 0.2], 0.3)), 0.08);
}
