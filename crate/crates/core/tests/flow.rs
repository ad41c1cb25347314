use flowibp::flow::{
    antidevelopment_increments, damped_transport, girsanov_log_density, perturbed_cylinder_points, restart_flow,
    simulate_flow, simulate_with, variation_flow, BrownianDraw, FlowOptions, GirsanovDrift, SdeSystem, TimeGrid,
};
use flowibp::functionals::CmProcess;
use flowibp::linalg::Vector;
use flowibp::stats::{McAccumulator, RngPolicy};
use flowibp::Error;

fn v(xs: &[f64]) -> Vector<f64> {
    Vector::from_slice(xs)
}

fn grid(horizon: f64, marked: &[f64]) -> TimeGrid<f64> {
    TimeGrid::uniform(horizon, 512, marked).unwrap().0
}

fn catalog() -> Vec<(SdeSystem<f64>, Vector<f64>)> {
    vec![
        (SdeSystem::euclidean_bm(2), v(&[0.3, -0.2])),
        (SdeSystem::euclidean_ou(2), v(&[0.3, -0.2])),
        (SdeSystem::circle_bm(), v(&[0.6, 0.8])),
        (SdeSystem::sphere2_bm(), v(&[1.0, 0.0, 0.0])),
        (SdeSystem::sphere2_drift("rotation").unwrap(), v(&[0.0, 0.6, 0.8])),
    ]
}

#[test]
fn euclidean_bm_is_additive_with_identity_derivative() {
    let sys = SdeSystem::<f64>::euclidean_bm(2);
    let g = grid(1.0, &[]);
    let draw = BrownianDraw::generate(&RngPolicy::new(3), 0, &g, 2);
    let b = *draw.cumulative().last().unwrap();
    let x0 = sys.manifold.point(v(&[1.0, 2.0])).unwrap();
    let path = simulate_flow(&sys, &x0, &g, draw).unwrap();
    assert!((*path.end() - (v(&[1.0, 2.0]) + b)).max_abs() < 1e-12);
    let e = v(&[0.4, -1.3]);
    assert_eq!(path.deriv_apply(512, &e), e);
}

#[test]
fn ou_derivative_flow_decays() {
    let sys = SdeSystem::<f64>::euclidean_ou(1);
    let g = grid(1.0, &[]);
    let x0 = sys.manifold.point(v(&[0.5])).unwrap();
    let path = simulate_flow(&sys, &x0, &g, BrownianDraw::generate(&RngPolicy::new(1), 0, &g, 1)).unwrap();
    let d = path.deriv_apply(512, &v(&[1.0]))[0];
    assert!((d - (-1.0f64).exp()).abs() <= 3e-3 * (-1.0f64).exp());
}

#[test]
fn sphere_paths_stay_on_the_sphere() {
    let sys = SdeSystem::<f64>::sphere2_bm();
    let g = grid(2.0, &[]);
    let x0 = sys.manifold.point(v(&[0.0, 0.0, 1.0])).unwrap();
    for i in 0..20 {
        let path = simulate_flow(&sys, &x0, &g, BrownianDraw::generate(&RngPolicy::new(9), i, &g, 3)).unwrap();
        for p in &path.points {
            assert!(sys.manifold.constraint_defect(p) <= 1e-12);
        }
        for (k, d) in path.deriv.iter().enumerate() {
            for c in d.columns() {
                assert!(c.dot(&path.points[k]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn restart_reproduces_the_tail_and_composes() {
    let g = grid(1.0, &[0.5]);
    let r = 256;
    for (sys, x) in catalog() {
        let x0 = sys.manifold.point(x).unwrap();
        let draw = BrownianDraw::generate(&RngPolicy::new(17), 4, &g, sys.noise_dim());
        let full = simulate_flow(&sys, &x0, &g, draw.clone()).unwrap();
        let mid = sys.manifold.point(full.points[r]).unwrap();
        let tail = restart_flow(&sys, &mid, &g, &draw, r, FlowOptions::ALL).unwrap();
        assert_eq!(&tail.points[..], &full.points[r..], "{}", sys.name);
        // D_T = D^r_T ∘ D_r
        let tol = if sys.name.starts_with("euclidean-ou") { 1e-10 } else { 1e-8 };
        for e in full.frame.columns() {
            let composed = tail.deriv_apply(512 - r, &full.deriv_apply(r, e));
            assert!((composed - full.deriv_apply(512, e)).max_abs() <= tol, "{}", sys.name);
        }
    }
}

#[test]
fn restart_edge_cases() {
    let sys = SdeSystem::<f64>::sphere2_bm();
    let g = grid(1.0, &[]);
    let x0 = sys.manifold.point(v(&[1.0, 0.0, 0.0])).unwrap();
    let draw = BrownianDraw::generate(&RngPolicy::new(2), 0, &g, 3);
    let full = simulate_flow(&sys, &x0, &g, draw.clone()).unwrap();
    let same = restart_flow(&sys, &x0, &g, &draw, 0, FlowOptions::ALL).unwrap();
    assert_eq!(same.points, full.points);
    let end = sys.manifold.point(*full.end()).unwrap();
    let last = restart_flow(&sys, &end, &g, &draw, 512, FlowOptions::ALL).unwrap();
    assert_eq!(last.points, vec![*full.end()]);
    assert!(matches!(restart_flow(&sys, &end, &g, &draw, 513, FlowOptions::ALL), Err(Error::GridMismatch(_))));
}

#[test]
fn derivative_flow_matches_finite_differences() {
    let g = grid(1.0, &[]);
    let eps = 1e-4;
    for (sys, x) in catalog() {
        let m = &sys.manifold;
        let x0 = m.point(x).unwrap();
        let frame = m.tangent_frame(&x);
        for i in 0..100 {
            let draw = BrownianDraw::generate(&RngPolicy::new(5), i, &g, sys.noise_dim());
            let base = simulate_flow(&sys, &x0, &g, draw.clone()).unwrap();
            for e in &frame[..m.intrinsic_dim()] {
                let moved = m.project_to_manifold(&x.axpy(eps, e)).unwrap();
                let pert = simulate_with(&sys, moved.coords(), g.times(), draw.clone(), FlowOptions::POINTS).unwrap();
                let fd = (*pert.end() - *base.end()).scale(1.0 / eps);
                let err = (fd - base.deriv_apply(512, e)).max_abs();
                assert!(err <= 1e-2, "{}: {err}", sys.name);
            }
        }
    }
}

#[test]
fn antidevelopment_examples() {
    let g = grid(1.0, &[]);
    let e = SdeSystem::<f64>::euclidean_bm(2);
    let x0 = e.manifold.point(v(&[0.0, 0.0])).unwrap();
    let draw = BrownianDraw::generate(&RngPolicy::new(8), 1, &g, 2);
    let path = simulate_flow(&e, &x0, &g, draw.clone()).unwrap();
    let inc = antidevelopment_increments(&path, &e);
    for (a, b) in inc.iter().zip(&draw.increments) {
        assert!((*a - *b).max_abs() < 1e-15);
    }

    let s = SdeSystem::<f64>::sphere2_bm();
    let x0 = s.manifold.point(v(&[0.0, 0.0, 1.0])).unwrap();
    let zero = simulate_flow(&s, &x0, &g, BrownianDraw::zeros(&g, 3)).unwrap();
    assert!(antidevelopment_increments(&zero, &s).iter().all(|d| d.max_abs() == 0.0));

    // Each intrinsic component of ΔB̃ has variance dt.
    let mut acc = [McAccumulator::<f64>::new(), McAccumulator::new()];
    for i in 0..200 {
        let path = simulate_flow(&s, &x0, &g, BrownianDraw::generate(&RngPolicy::new(8), i, &g, 3)).unwrap();
        for d in antidevelopment_increments(&path, &s) {
            for (a, c) in acc.iter_mut().zip(d.as_slice()) {
                a.accumulate(c * c * 512.0).unwrap();
            }
        }
    }
    for a in &acc {
        assert!((a.mean() - 1.0).abs() < 4.0 * a.std_error(), "{} ± {}", a.mean(), a.std_error());
    }
}

#[test]
fn damped_transport_closed_forms() {
    let g = grid(2.0, &[]);
    // (system, start, v0, decay rate of |W_t|)
    let cases = [
        (SdeSystem::euclidean_bm(2), v(&[0.0, 0.0]), v(&[1.0, -2.0]), 0.0),
        (SdeSystem::euclidean_ou(2), v(&[0.0, 0.0]), v(&[1.0, -2.0]), 1.0),
        (SdeSystem::sphere2_bm(), v(&[1.0, 0.0, 0.0]), v(&[0.0, 0.6, 0.8]), 0.5),
    ];
    for (sys, x, v0, rate) in cases {
        let x0 = sys.manifold.point(x).unwrap();
        let path =
            simulate_flow(&sys, &x0, &g, BrownianDraw::generate(&RngPolicy::new(4), 0, &g, sys.noise_dim())).unwrap();
        let w = damped_transport(&path, &sys, &v0);
        for (k, wk) in w.iter().enumerate() {
            let expect = (-rate * path.times[k]).exp() * v0.norm();
            assert!((wk.norm() - expect).abs() <= 1e-6 * expect, "{} at {k}", sys.name);
            assert!((path.damped_apply(k, &v0) - *wk).max_abs() < 1e-12);
            assert!(wk.dot(&path.points[k]).abs() < 1e-12 || !sys.manifold.is_compact());
        }
        if rate == 0.0 {
            assert!(w.iter().all(|wk| (*wk - v0).max_abs() < 1e-15));
        }
    }
}

#[test]
fn variation_flow_examples() {
    let e = SdeSystem::<f64>::euclidean_bm(2);
    let x = e.manifold.point(v(&[1.0, 1.0])).unwrap();
    let h = CmProcess::linear(v(&[0.5, -1.0]), 1.0);
    let y = variation_flow(&e, &h, 0.7, 0.8, &x).unwrap();
    assert!((*y.coords() - v(&[1.0 + 0.7 * 0.4, 1.0 - 0.7 * 0.8])).max_abs() < 1e-14);

    let s = SdeSystem::<f64>::sphere2_bm();
    let x = s.manifold.point(v(&[0.0, 0.0, 1.0])).unwrap();
    let h = CmProcess::linear(v(&[1.0, 0.0, 0.0]), 1.0);
    assert_eq!(variation_flow(&s, &h, 0.0, 1.0, &x).unwrap(), x);
    assert_eq!(variation_flow(&s, &CmProcess::zero(3), 2.0, 1.0, &x).unwrap(), x);
    // Along a great circle: ∂_τ H = proj(e1) moves at speed sin of the polar angle... integrate exactly:
    // with x = north pole and h = e1, θ' = cos θ so θ(τ) = gd(τ) (Gudermannian).
    let y = variation_flow(&s, &h, 1.0, 1.0, &x).unwrap();
    let theta = (1.0f64).sinh().atan();
    assert!((*y.coords() - v(&[theta.sin(), 0.0, theta.cos()])).max_abs() < 1e-9);
}

#[test]
fn perturbed_points_examples() {
    let g = grid(1.0, &[0.5, 1.0]);
    let e = SdeSystem::<f64>::euclidean_bm(1);
    let x = e.manifold.point(v(&[0.0])).unwrap();
    let h = CmProcess::linear(v(&[1.0]), 1.0);
    let draw = BrownianDraw::generate(&RngPolicy::new(6), 2, &g, 1);
    let cum = draw.cumulative();
    let pts = perturbed_cylinder_points(&e, &x, &h, 0.3, &[0.5, 1.0], &draw, &g).unwrap();
    assert!((pts[0][0] - (cum[256][0] + 0.15)).abs() < 1e-12);
    assert!((pts[1][0] - (cum[512][0] + 0.3)).abs() < 1e-12);

    let s = SdeSystem::<f64>::sphere2_bm();
    let x = s.manifold.point(v(&[1.0, 0.0, 0.0])).unwrap();
    let draw = BrownianDraw::generate(&RngPolicy::new(6), 2, &g, 3);
    let base = simulate_flow(&s, &x, &g, draw.clone()).unwrap();
    let h = CmProcess::linear(v(&[0.0, 1.0, 0.0]), 1.0);
    let pts = perturbed_cylinder_points(&s, &x, &h, 0.0, &[0.5, 1.0], &draw, &g).unwrap();
    assert_eq!(pts, vec![base.points[256], base.points[512]]);
    let pts = perturbed_cylinder_points(&s, &x, &CmProcess::zero(3), 0.4, &[0.5, 1.0], &draw, &g).unwrap();
    assert_eq!(pts, vec![base.points[256], base.points[512]]);
    assert!(matches!(perturbed_cylinder_points(&s, &x, &h, 0.1, &[0.3], &draw, &g), Err(Error::GridMismatch(_))));
}

#[test]
fn girsanov_log_density_examples() {
    let g = grid(1.0, &[]);
    let s = SdeSystem::<f64>::sphere2_bm();
    let x = s.manifold.point(v(&[1.0, 0.0, 0.0])).unwrap();
    let path = simulate_flow(&s, &x, &g, BrownianDraw::generate(&RngPolicy::new(1), 0, &g, 3)).unwrap();
    let h = CmProcess::linear(v(&[0.0, 1.0, 0.0]), 1.0);
    assert_eq!(girsanov_log_density(&path, &s, &h, 0.0).unwrap(), 0.0);
    assert_eq!(girsanov_log_density(&path, &s, &CmProcess::zero(3), 0.3).unwrap(), 0.0);

    // Euclidean(1), h_s = s: log-density = τ B_T - τ²/2 exactly in the discretization.
    let e = SdeSystem::<f64>::euclidean_bm(1);
    let x = e.manifold.point(v(&[0.0])).unwrap();
    let h = CmProcess::linear(v(&[1.0]), 1.0);
    let tau = 0.2;
    let drift = GirsanovDrift::new(&e, &h, tau, &x, g.times()).unwrap();
    let mut acc = McAccumulator::new();
    for i in 0..100_000 {
        let draw = BrownianDraw::generate(&RngPolicy::new(11), i, &g, 1);
        let bt = draw.cumulative()[512][0];
        let path = simulate_with(&e, x.coords(), g.times(), draw, FlowOptions::DERIVATIVE).unwrap();
        let ld = drift.log_density(&path, &e).unwrap();
        if i < 10 {
            assert!((ld - (tau * bt - 0.5 * tau * tau)).abs() < 1e-10);
        }
        acc.accumulate(ld.exp()).unwrap();
    }
    assert!((acc.mean() - 1.0).abs() <= 3.0 * acc.std_error());
}
