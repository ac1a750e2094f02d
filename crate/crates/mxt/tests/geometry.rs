use mxt::geometry::*;
use mxt::media::*;

fn gaussian_lens() -> SpeedField {
    SpeedField(Field::Constant(1.0).plus(Field::gaussian(0.1, [0.15, -0.1, 0.05], 0.3)))
}

fn ball() -> Domain {
    Domain::unit_ball()
}

#[test]
fn vacuum_diametral_ray_is_a_straight_segment() {
    let r = trace_geodesic(&MediumSpec::vacuum(), &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap();
    assert_eq!(r.status, RayStatus::Exited);
    let (xo, vo) = r.exit.unwrap();
    assert!((xo - V3::x()).norm() < 1e-9);
    assert!((vo - V3::x()).norm() < 1e-12);
    assert!((r.length() - 2.0).abs() < 1e-9);
    for s in &r.samples {
        assert!(s.x.y.abs() < 1e-15 && s.x.z.abs() < 1e-15);
    }
}

#[test]
fn constant_slow_medium_rescales_length() {
    let m = MediumSpec::constant(4.0, 1.0, 0.0);
    let r = trace_geodesic(&m, &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap();
    assert!((r.length() - 4.0).abs() < 1e-9);
    assert!((r.exit.unwrap().0 - V3::x()).norm() < 1e-9);
}

#[test]
fn chord_lengths_match_impact_parameter() {
    for b in [0.0, 0.3, 0.6, 0.9] {
        let x = V3::new(-(1.0f64 - b * b).sqrt(), b, 0.0);
        let rec = lens_relation(&MediumSpec::vacuum(), &ball(), &x, &V3::x(), &TraceConfig::default()).unwrap();
        assert!((rec.tau - 2.0 * (1.0f64 - b * b).sqrt()).abs() < 1e-9, "b = {b}");
        assert!((rec.v_out - rec.v_in).norm() < 1e-12);
    }
}

#[test]
fn grazing_and_outward_entries_are_rejected() {
    let x = V3::new(-1.0, 0.0, 0.0);
    let cfg = TraceConfig::default();
    let e = trace_geodesic(&MediumSpec::vacuum(), &ball(), &x, &V3::new(1e-4, 1.0, 0.0), &cfg);
    assert!(matches!(e, Err(mxt::MxtError::Grazing(_))));
    let e = trace_geodesic(&MediumSpec::vacuum(), &ball(), &x, &V3::new(-1.0, 0.2, 0.0), &cfg);
    assert!(matches!(e, Err(mxt::MxtError::Precondition(_))));
}

#[test]
fn step_budget_gives_truncated_status() {
    let cfg = TraceConfig { max_steps: 3, ..Default::default() };
    let r = trace_geodesic(&MediumSpec::vacuum(), &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &cfg).unwrap();
    assert_eq!(r.status, RayStatus::Truncated);
    assert!(LensRecord::from_ray(&r).is_err());
}

fn radial_quadratic() -> SpeedField {
    SpeedField(Field::RadialPoly { center: V3::zeros(), coeffs: vec![1.0, 0.2] })
}

#[test]
fn radial_medium_diametral_ray_stays_straight_and_off_axis_bends_inward() {
    let s = radial_quadratic();
    let r = trace_geodesic(&s, &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap();
    assert!(r.samples.iter().all(|p| p.x.y.abs() < 1e-14));
    // off-axis: rays bend toward lower c, i.e. toward the center
    let x = V3::new(-(1.0f64 - 0.25).sqrt(), 0.5, 0.0);
    let r = trace_geodesic(&s, &ball(), &x, &V3::x(), &TraceConfig::default()).unwrap();
    let ymin = r.samples.iter().map(|p| p.x.y).fold(f64::INFINITY, f64::min);
    assert!(ymin < 0.5 - 1e-3);
    // self-convergence oracle: RK4 at h and h/16 agree with the adaptive result
    let a = trace_geodesic(&s, &ball(), &x, &V3::x(), &TraceConfig::rk4(0.02)).unwrap();
    let b = trace_geodesic(&s, &ball(), &x, &V3::x(), &TraceConfig::rk4(0.02 / 16.0)).unwrap();
    let (xa, xb, xr) = (a.exit.unwrap().0, b.exit.unwrap().0, r.exit.unwrap().0);
    assert!((xb - xr).norm() < 1e-8, "{}", (xb - xr).norm());
    assert!((xa - xb).norm() < 1e-6);
}

#[test]
fn rk4_exit_error_shrinks_at_fourth_order() {
    let s = gaussian_lens();
    let x = V3::new(-(1.0f64 - 0.09).sqrt(), 0.3, 0.0);
    let d = V3::new(1.0, -0.2, 0.1);
    let reference = trace_geodesic(&s, &ball(), &x, &d, &TraceConfig::rk4(0.1 / 64.0)).unwrap().exit.unwrap().0;
    let e = |h: f64| (trace_geodesic(&s, &ball(), &x, &d, &TraceConfig::rk4(h)).unwrap().exit.unwrap().0 - reference).norm();
    let (e1, e2) = (e(0.1), e(0.05));
    assert!(e1 / e2 >= 16.0 * 0.9, "ratio {}", e1 / e2);
}

/// Abel-type turning-point integral for tau(P) in a radial medium.
fn radial_tau(c: &dyn Fn(f64) -> f64, p: f64) -> f64 {
    let eta = |r: f64| r / c(r);
    // turning point eta(r_t) = p
    let (mut lo, mut hi) = (1e-12, 1.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if eta(m) < p {
            lo = m
        } else {
            hi = m
        }
    }
    let rt = 0.5 * (lo + hi);
    // r = rt + u^2 removes the inverse square-root singularity
    let umax = (1.0 - rt).sqrt();
    let n = 20000;
    let f = |u: f64| {
        let r = rt + u * u;
        let e = eta(r);
        let d = (e * e - p * p).max(0.0).sqrt();
        if u == 0.0 {
            let de = (eta(rt + 1e-7) - eta(rt)) / 1e-7;
            return e * e / rt * 2.0 / (2.0 * e * de).sqrt();
        }
        e * e / (r * d) * 2.0 * u
    };
    let h = umax / n as f64;
    let mut s = f(0.0) + f(umax);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * h / 3.0
}

#[test]
fn exponential_radial_medium_matches_turning_point_integral() {
    let a = 0.4;
    let speed = SpeedField(Field::Norm { center: V3::zeros() }.scaled(a).exp());
    let c = |r: f64| (a * r).exp();
    for b in [0.2, 0.5, 0.8] {
        let x = V3::new(-(1.0f64 - b * b).sqrt(), b, 0.0);
        let rec = lens_relation(&speed, &ball(), &x, &V3::x(), &TraceConfig::default()).unwrap();
        let p = b / c(1.0);
        let want = radial_tau(&c, p);
        assert!((rec.tau - want).abs() < 1e-6, "b={b}: {} vs {}", rec.tau, want);
    }
}

#[test]
fn hamiltonian_unit_speed_and_time_reversal_on_lens() {
    let s = gaussian_lens();
    let cfg = TraceConfig::default();
    let x = V3::new(-0.8, 0.6, 0.0);
    let d = V3::new(1.0, -0.4, 0.2);
    let r = trace_geodesic(&s, &ball(), &x, &d, &cfg).unwrap();
    for smp in &r.samples {
        let c = s.speed(&smp.x).v;
        assert!((c * c * smp.p.norm_squared() - 1.0).abs() < 1e-8);
        assert!((smp.v.norm_squared() / (c * c) - 1.0).abs() < 1e-8);
    }
    let rec = LensRecord::from_ray(&r).unwrap();
    let back = lens_relation(&s, &ball(), &rec.x_out, &(-rec.v_out), &cfg).unwrap();
    assert!((back.x_out - rec.x_in).norm() < 1e-6);
    assert!((back.v_out + rec.v_in).norm() < 1e-6);
    assert!((back.tau - rec.tau).abs() < 1e-6);
}

#[test]
fn transport_in_vacuum_and_constant_media_keeps_eta_fixed() {
    for (m, c) in [(MediumSpec::vacuum(), 1.0), (MediumSpec::constant(0.25, 1.0, 0.0), 2.0)] {
        let r = trace_geodesic(&m, &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::new(1.0, 0.3, 0.0), &TraceConfig::default()).unwrap();
        let eta0 = V3::new(0.0, 0.0, c);
        let fr = parallel_transport(&m, &r, &eta0).unwrap();
        for e in &fr.eta {
            assert!((e - eta0).norm() < 1e-13);
        }
    }
}

#[test]
fn vacuum_frame_orientation() {
    let r = trace_geodesic(&MediumSpec::vacuum(), &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap();
    let fr = parallel_transport(&MediumSpec::vacuum(), &r, &V3::z()).unwrap();
    assert!((fr.zeta[0] + V3::y()).norm() < 1e-15);
}

#[test]
fn transport_rejects_bad_initial_polarization() {
    let r = trace_geodesic(&MediumSpec::vacuum(), &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap();
    assert!(parallel_transport(&MediumSpec::vacuum(), &r, &V3::new(0.1, 0.0, 1.0).normalize()).is_err());
    assert!(parallel_transport(&MediumSpec::vacuum(), &r, &V3::new(0.0, 0.0, 2.0)).is_err());
}

#[test]
fn transport_preserves_g_inner_products_on_lens() {
    let s = gaussian_lens();
    let r = trace_geodesic(&s, &ball(), &V3::new(-0.6, -0.8, 0.0), &V3::new(0.7, 1.0, -0.2), &TraceConfig::default()).unwrap();
    let c0 = s.speed(&r.samples[0].x).v;
    let eta0 = frame_seed(c0, &r.samples[0].v, &V3::z());
    let fr = parallel_transport(&s, &r, &eta0).unwrap();
    for (k, smp) in r.samples.iter().enumerate() {
        let c = s.speed(&smp.x).v;
        let (e, z, v) = (fr.eta[k], fr.zeta[k], smp.v);
        for val in [g_dot(c, &e, &e) - 1.0, g_dot(c, &z, &z) - 1.0, g_dot(c, &e, &v), g_dot(c, &z, &v), g_dot(c, &e, &z)] {
            assert!(val.abs() < 1e-8);
        }
    }
}

#[test]
fn there_and_back_transport_returns_initial_polarization() {
    let s = gaussian_lens();
    let cfg = TraceConfig::default();
    let r = trace_geodesic(&s, &ball(), &V3::new(-0.6, -0.8, 0.0), &V3::new(0.7, 1.0, -0.2), &cfg).unwrap();
    let c0 = s.speed(&r.samples[0].x).v;
    let eta0 = frame_seed(c0, &r.samples[0].v, &V3::new(0.3, 0.1, 1.0));
    let fr = parallel_transport(&s, &r, &eta0).unwrap();
    let (xo, vo) = r.exit.unwrap();
    let back = trace_geodesic(&s, &ball(), &xo, &(-vo), &cfg).unwrap();
    let eta_end = *fr.eta.last().unwrap();
    let c1 = s.speed(&back.samples[0].x).v;
    // re-impose exact g-orthogonality at the restart
    let eta_start = eta_end - back.samples[0].v * (g_dot(c1, &eta_end, &back.samples[0].v));
    let eta_start = eta_start * (c1 / eta_start.norm());
    let fb = parallel_transport(&s, &back, &eta_start).unwrap();
    assert!((fb.eta.last().unwrap() - eta0).norm() < 1e-8, "{}", (fb.eta.last().unwrap() - eta0).norm());
}

#[test]
fn straight_ray_transport_matches_ray_coordinate_equation() {
    // on a ray parallel to grad c the ray-coordinate equation integrates to
    // eta = (c / c0) eta0
    let speed = SpeedField(Field::Affine { c0: 1.0, a: V3::new(0.3, 0.0, 0.0) });
    let r = trace_geodesic(&speed, &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap();
    let c0 = speed.speed(&r.samples[0].x).v;
    let fr = parallel_transport(&speed, &r, &V3::new(0.0, 0.0, c0)).unwrap();
    for (k, smp) in r.samples.iter().enumerate() {
        let c = speed.speed(&smp.x).v;
        assert!((fr.eta[k] - V3::new(0.0, 0.0, c)).norm() < 1e-10);
    }
}

#[test]
fn plane_wave_spreading_is_one_in_vacuum() {
    let m = MediumSpec::vacuum();
    let r = trace_geodesic(&m, &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::new(1.0, 0.2, 0.1), &TraceConfig::default()).unwrap();
    let j = spreading_j(&m, &r, &JacobiInit::plane_wave(&r.samples[0], &M3::zeros())).unwrap();
    assert!(j.iter().all(|v| (v - 1.0).abs() < 1e-13));
}

#[test]
fn point_source_spreading_grows_quadratically() {
    let m = MediumSpec::vacuum();
    let r = trace_geodesic(&m, &ball(), &V3::new(-1.0, 0.0, 0.0), &V3::x(), &TraceConfig::default()).unwrap();
    let j = spreading_j(&m, &r, &JacobiInit::point_source(&r.samples[0], 1.0)).unwrap();
    for k in 2..r.samples.len() {
        let (s1, s2) = (r.samples[1].s, r.samples[k].s);
        assert!((j[k] / j[1] - (s2 / s1).powi(2)).abs() < 1e-9 * (s2 / s1).powi(2));
    }
}

#[test]
fn jacobi_spreading_matches_ray_family() {
    // weak lens, plane wave launched at an interior point with zero phase Hessian
    let s = SpeedField(Field::Constant(1.0).plus(Field::gaussian(0.05, [0.1, 0.1, 0.0], 0.4)));
    let x0 = V3::new(-0.7, 0.05, 0.02);
    let d0 = V3::x();
    let len = 1.2;
    let n = 2000;
    let base = trace_segment(&s, &x0, &d0, len, n, Method::Rk4);
    let j = spreading_j(&s, &base, &JacobiInit::plane_wave(&base.samples[0], &M3::zeros())).unwrap();
    // family: parallel rays displaced by +-delta along e_y, e_z; compare at equal s
    let delta = 1e-4;
    let end = |off: V3| trace_segment(&s, &(x0 + off), &d0, len, n, Method::Rk4).samples.last().unwrap().x;
    let dy = (end(V3::y() * delta) - end(-V3::y() * delta)) / (2.0 * delta);
    let dz = (end(V3::z() * delta) - end(-V3::z() * delta)) / (2.0 * delta);
    let last = base.samples.last().unwrap();
    let jf = signed_area(&last.v, &dy, &dz);
    assert!((jf - j.last().unwrap()).abs() / jf.abs() < 1e-4, "{} vs {}", jf, j.last().unwrap());
}
