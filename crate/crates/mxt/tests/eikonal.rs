use mxt::eikonal::*;
use mxt::geometry::*;
use mxt::media::*;

#[test]
fn xi3_examples() {
    assert!((xi3(1.0, 1.0, 0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((xi3(2.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!(matches!(xi3(1.0, 1.0, 1.0), Err(mxt::MxtError::Evanescent(_))));
}

fn flat() -> Domain {
    // x3 = depth below the plane x3 = 0, outward normal -e3
    Domain::HalfSpace { point: V3::zeros(), normal: -V3::z() }
}

fn patch(xi: V3) -> BoundaryPatch {
    BoundaryPatch::uniform(vec![V3::zeros(), V3::new(0.2, -0.1, 0.0), V3::new(-0.3, 0.4, 0.0)], xi)
}

#[test]
fn normal_plane_wave_phase_is_depth() {
    let pf = boundary_phase(&MediumSpec::vacuum(), &flat(), &patch(V3::zeros()), 0.5).unwrap();
    for ray in &pf.rays {
        for s in ray {
            assert!((s.phi - s.x.z).abs() < 1e-12);
            assert!((s.grad - V3::z()).norm() < 1e-12);
            assert!(s.hess.norm() < 1e-12);
        }
    }
    let slow = MediumSpec::constant(4.0, 1.0, 0.0);
    let pf = boundary_phase(&slow, &flat(), &patch(V3::zeros()), 0.5).unwrap();
    for s in pf.rays.iter().flatten() {
        assert!((s.phi - 2.0 * s.x.z).abs() < 1e-12);
    }
}

#[test]
fn oblique_plane_wave_phase() {
    let pf = boundary_phase(&MediumSpec::vacuum(), &flat(), &patch(V3::new(0.5, 0.0, 0.0)), 0.5).unwrap();
    for s in pf.rays.iter().flatten() {
        let want = 0.5 * s.x.x + 0.75f64.sqrt() * s.x.z;
        assert!((s.phi - want).abs() < 1e-12);
        assert!((s.grad.norm_squared() - 1.0).abs() < 1e-12);
    }
}

fn lens() -> MediumSpec {
    let c = Field::Constant(1.0).plus(Field::gaussian(0.15, [0.2, 0.1, -0.1], 0.35));
    let eps = Field::Constant(1.3).plus(Field::gaussian(0.2, [0.5, 0.5, 0.2], 0.5));
    MediumSpec::from_speed(c, eps, Field::Constant(0.0))
}

#[test]
fn eikonal_residual_along_characteristics() {
    let m = lens();
    let ball = Domain::unit_ball();
    let pts: Vec<V3> = [[0.6, 0.8, 0.0], [-0.48, 0.6, 0.64], [0.0, -1.0, 0.0]].iter().map(|p| V3::from(*p)).collect();
    let xis: Vec<V3> = pts
        .iter()
        .map(|x| {
            let (t1, t2) = tangent_frame(&x.normalize());
            t1 * 0.4 - t2 * 0.3
        })
        .collect();
    // a boundary phase that is linear on a sphere focuses, so stay short of the caustic
    let pf = boundary_phase(&m, &ball, &BoundaryPatch { points: pts, xi: xis }, 0.4).unwrap();
    for s in pf.rays.iter().flatten() {
        let c = m.speed(&s.x).v;
        assert!((c * c * s.grad.norm_squared() - 1.0).abs() < 1e-7);
    }
}

#[test]
fn boundary_hessian_matches_launch_family() {
    // finite differences of the launch map y -> p(y) on the sphere, with the
    // boundary phase xi' . (y - x0) whose tangential gradient at y is the
    // projection of xi'
    let m = lens();
    let ball = Domain::unit_ball();
    let x0 = V3::new(0.36, 0.48, 0.8);
    let nu = x0.normalize();
    let (t1, t2) = tangent_frame(&nu);
    let xi = t1 * 0.5 + t2 * 0.2;
    let c0 = m.speed(&x0);
    let h = boundary_phase_hessian(&c0, &ball, &x0, &xi).unwrap();
    let p_at = |y: &V3| {
        let n = y.normalize();
        let c = m.speed(y).v;
        launch_momentum(c, &n, &(xi - n * n.dot(&xi))).unwrap()
    };
    let d = 1e-5;
    for t in [t1, t2] {
        // move along the great circle through x0 in direction t
        let yp = (x0 + t * d).normalize();
        let ym = (x0 - t * d).normalize();
        let dp = (p_at(&yp) - p_at(&ym)) / (2.0 * d);
        assert!((h * t - dp).norm() < 1e-7, "{}", (h * t - dp).norm());
    }
    // along the characteristic: H xdot = pdot
    let p0 = p_at(&x0);
    let (xd, pd) = ray_rhs_jet(&c0, &p0);
    assert!((h * xd - pd).norm() < 1e-12);
    assert!((h - h.transpose()).norm() < 1e-14);
}

#[test]
fn riccati_hessian_matches_jacobi_fields() {
    let m = lens();
    let ball = Domain::unit_ball();
    let x0 = V3::new(-0.6, 0.0, 0.8);
    let nu = x0.normalize();
    let (t1, _) = tangent_frame(&nu);
    let xi = t1 * 0.3;
    let c0 = m.speed(&x0);
    let p0 = launch_momentum(c0.v, &nu, &xi).unwrap();
    let h0 = plane_wave_hessian(&c0, &p0);
    let ray = trace_geodesic(&m, &ball, &x0, &p0, &TraceConfig::default()).unwrap();
    let ph = carry_phase(&m, &ray, 0.0, &h0).unwrap();
    let init = JacobiInit::plane_wave(&ray.samples[0], &h0);
    let jf = jacobi_fields(&m, &ray, &init);
    for (k, f) in jf.iter().enumerate() {
        let hh = ph[k].hess;
        assert!((hh * f[0] - f[1]).norm() < 1e-7 * (1.0 + f[1].norm()));
        assert!((hh * f[2] - f[3]).norm() < 1e-7 * (1.0 + f[3].norm()));
    }
    // the phase gradient at re-intersection is the exit momentum
    let last = ph.last().unwrap();
    let (_, vout) = ray.exit.unwrap();
    let c1 = m.speed(&last.x).v;
    assert!((last.grad * (c1 * c1) - vout).norm() < 1e-6);
}

#[test]
fn plane_wave_hessian_is_consistent_with_the_eikonal() {
    let m = lens();
    let x = V3::new(0.1, -0.2, 0.3);
    let c = m.speed(&x);
    let p = V3::new(0.3, 0.5, -0.2).normalize() / c.v;
    let h = plane_wave_hessian(&c, &p);
    let (xd, pd) = ray_rhs_jet(&c, &p);
    assert!((h * xd - pd).norm() < 1e-12);
    let (e1, e2) = tangent_frame(&p.normalize());
    assert!(e1.dot(&(h * e2)).abs() < 1e-15 && e1.dot(&(h * e1)).abs() < 1e-15);
}

#[test]
fn curved_boundary_phase_focuses_into_a_caustic() {
    let m = MediumSpec::vacuum();
    let ball = Domain::unit_ball();
    let patch = BoundaryPatch::uniform(vec![V3::new(-1.0, 0.0, 0.0)], V3::zeros());
    assert!(matches!(boundary_phase(&m, &ball, &patch, 3.0), Err(mxt::MxtError::Caustic(_))));
}

#[test]
fn caustic_is_detected() {
    // strongly converging phase: large negative curvature of the wavefront
    let m = MediumSpec::vacuum();
    let ball = Domain::unit_ball();
    let x0 = V3::new(-1.0, 0.0, 0.0);
    let ray = trace_geodesic(&m, &ball, &x0, &V3::x(), &TraceConfig::default()).unwrap();
    let h0 = M3::from_diagonal(&V3::new(0.0, -2.0, -2.0));
    assert!(matches!(carry_phase(&m, &ray, 0.0, &h0), Err(mxt::MxtError::Caustic(_))));
}

fn grid(n: usize) -> GridSpec {
    let h = 2.0 / (n - 1) as f64;
    GridSpec { origin: [-1.0, -1.0, 0.0], spacing: [h, h, 1.0], dims: [n, n, 1] }
}

#[test]
fn fast_marching_distance_fields() {
    let src = [V3::new(-0.5, 0.1, 0.0)];
    let mut errs = vec![];
    for n in [41, 81] {
        let g = grid(n);
        let t = fast_march_travel_time(&MediumSpec::vacuum(), &src, &g).unwrap();
        let t2 = fast_march_travel_time(&MediumSpec::constant(0.25, 1.0, 0.0), &src, &g).unwrap();
        let mut e: f64 = 0.0;
        for i in 0..t.node_count() {
            let d = (t.node_at(i) - src[0]).norm();
            e = e.max((t.values[i] - d).abs());
            assert!((t2.values[i] - t.values[i] / 2.0).abs() < 1e-12);
        }
        errs.push(e);
    }
    assert!(errs[0] < 0.1 && errs[1] < errs[0] * 0.75, "{errs:?}");
}

#[test]
fn fast_marching_matches_ray_time_on_fast_lens() {
    let s = SpeedField(Field::Constant(1.0).plus(Field::gaussian_2d(0.2, [0.0, 0.0], 0.3)));
    let ball = Domain::unit_ball();
    let src = V3::new(-1.0, 0.0, 0.0);
    let tau = lens_relation(&s, &ball, &src, &V3::x(), &TraceConfig::default()).unwrap().tau;
    let mut errs = vec![];
    for n in [51, 101, 201] {
        let t = fast_march_travel_time(&s, &[src], &grid(n)).unwrap();
        errs.push((t.value(&V3::new(1.0, 0.0, 0.0)) - tau).abs());
    }
    assert!(errs[2] < errs[0] && errs[2] < 0.02, "{errs:?}");
}
