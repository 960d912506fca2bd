//! Property-based tests of the structural invariants.

mod common;

use common::*;
use kahlerlab::conditions::{check_nob, check_nqob, check_ric_nonneg, nqob_min_eigenvalue};
use kahlerlab::curvature::{curvature_profile, rho_norm_bounds, CurvaturePoint};
use kahlerlab::diagnostics::ball_average_scal;
use kahlerlab::perturbation::{alpha_window, c_bar_factor, construct_and_verify};
use kahlerlab::profiles::{make_analytic_profile, make_bump_cutoff, ProfileFamily, XiProfile};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

#[test]
fn cutoff_on_dense_grid() {
    let cut = make_bump_cutoff();
    let n = 100_000;
    let mut max_deriv = 0.0f64;
    for i in 0..=n {
        let t = -1.5 + 3.0 * i as f64 / n as f64;
        let v = cut.eval(t);
        assert!(v >= -1e-12 && v <= cut.c0() + 1e-12, "φ({t}) = {v}");
        if t.abs() >= 1.0 {
            assert_eq!(v, 0.0);
        }
        max_deriv = max_deriv.max(cut.eval_deriv(t).abs());
    }
    assert!(max_deriv <= 1.0 + 1e-9);
    assert_eq!(cut.eval_deriv(0.0), 1.0);
    assert!(cut.c0() > 0.0);
}

/// Random monotone tables ξ on a log-spaced r grid, rising from 0 to below 1.
fn monotone_table() -> impl Strategy<Value = XiProfile> {
    (prop::collection::vec(0.01f64..1.0, 8..20), 0.1f64..0.95).prop_map(|(steps, top)| {
        let total: f64 = steps.iter().sum();
        let mut r = vec![0.0];
        let mut xi = vec![0.0];
        let mut acc = 0.0;
        for (i, s) in steps.iter().enumerate() {
            acc += s;
            r.push(10f64.powf(-2.0 + 6.0 * (i + 1) as f64 / steps.len() as f64));
            xi.push(top * acc / total);
        }
        make_analytic_profile(&ProfileFamily::Tabulated { r, xi }).unwrap()
    })
}

fn curvature_triple() -> impl Strategy<Value = (f64, f64, f64, usize)> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 1usize..7)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn cutoff_bounds(t in -3.0f64..3.0) {
        let cut = make_bump_cutoff();
        let v = cut.eval(t);
        prop_assert!(v >= -1e-12 && v <= cut.c0() + 1e-12);
        prop_assert!(cut.eval_deriv(t).abs() <= 1.0 + 1e-9);
        if t.abs() >= 1.0 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn cutoff_derivative_matches_difference(t in -0.9f64..0.9) {
        let cut = make_bump_cutoff();
        let d = 1e-5;
        let fd = (cut.eval(t + d) - cut.eval(t - d)) / (2.0 * d);
        prop_assert!((fd - cut.eval_deriv(t)).abs() < 1e-6);
    }

    #[test]
    fn rational_profile_shape(a in 0.01f64..=1.0, r in 1e-6f64..1e8) {
        let p = rational(a);
        prop_assert_eq!(p.eval(0.0), 0.0);
        let xi = p.eval(r);
        prop_assert!(xi > 0.0 && xi < 1.0);
        prop_assert!(p.eval_deriv(r) > 0.0);
    }

    #[test]
    fn rational_derivative_matches_difference(a in 0.01f64..=1.0, r in 0.0f64..1e4) {
        let p = rational(a);
        let d = 1e-5 * r.max(1.0);
        let lo = (r - d).max(0.0);
        let fd = (p.eval(r + d) - p.eval(lo)) / (r + d - lo);
        let tol = if lo == 0.0 && r < d { 1e-4 } else { 1e-6 };
        prop_assert!(rel(fd, p.eval_deriv(r)) < tol, "fd {} vs {}", fd, p.eval_deriv(r));
    }

    #[test]
    fn scalar_curvature_identity((a, b, c, n) in curvature_triple()) {
        let p = CurvaturePoint::from_components(1.0, a, b, c, n);
        prop_assert!((p.scal - p.ric_rad - (n as f64 - 1.0) * p.ric_tan).abs() < 1e-12);
    }

    /// Positive bisectional ⊂ NOB ⊂ NQOB on single points.
    #[test]
    fn cone_nesting((a, b, c, n) in curvature_triple()) {
        let n = n.max(2);
        let p = CurvaturePoint::from_components(1.0, a, b, c, n);
        let nob = check_nob(&[p]);
        let nqob = check_nqob(&[p], n);
        if a > 0.0 && b > 0.0 && c > 0.0 {
            prop_assert!(nob.holds());
        }
        if nob.holds() {
            prop_assert!(nqob.holds());
            prop_assert!(nqob_min_eigenvalue(&p, n) >= -1e-10);
        }
    }

    #[test]
    fn report_margin_sign_matches_verdict(pts in prop::collection::vec(curvature_triple(), 1..12)) {
        let curv: Vec<CurvaturePoint> = pts
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c, _))| CurvaturePoint::from_components(i as f64, a, b, c, 3))
            .collect();
        for rep in [check_nob(&curv), check_ric_nonneg(&curv), check_nqob(&curv, 3)] {
            prop_assert_eq!(rep.margin < 0.0, !rep.holds());
            prop_assert_eq!(rep.first_violation_r.is_some(), !rep.holds());
        }
    }

    #[test]
    fn alpha_window_requires_proof_conditions(a in 0.01f64..=1.0, eps in 1e-4f64..0.5) {
        if let Some((lo, hi)) = alpha_window(a, eps) {
            prop_assert!(a - 2.0 * eps + a * eps - eps * eps > 0.0);
            prop_assert!(eps < a);
            prop_assert!(lo == eps && hi > lo && hi < 1.0);
            prop_assert!(c_bar_factor(a, eps) > 0.0);
        }
    }

    #[test]
    fn rho_bounds_are_ordered(s in -5.0f64..5.0, n in 1usize..8) {
        let b = rho_norm_bounds(&[s], n)[0];
        prop_assert_eq!(b.applicable, s >= 0.0);
        if b.applicable {
            prop_assert!(b.lower <= b.upper);
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn metric_monotonicity(p in prop_oneof![
        (0.05f64..=1.0).prop_map(rational),
        monotone_table(),
    ]) {
        let m = synth(&p, 1e4, 2);
        prop_assert_eq!(m.h()[0], 1.0);
        prop_assert!((m.f()[0] - 1.0).abs() < 1e-10);
        for i in 1..m.nodes().len() {
            prop_assert!(m.h()[i] <= m.h()[i - 1]);
            prop_assert!(m.big_h()[i] > m.big_h()[i - 1]);
            prop_assert!(m.f()[i] >= m.h()[i]);
        }
    }

    #[test]
    fn product_rule_on_random_profiles(a in 0.05f64..=1.0) {
        let m = synth(&rational(a), 1e4, 2);
        let rf: Vec<f64> = m.nodes().iter().zip(m.f()).map(|(r, f)| r * f).collect();
        let x: Vec<f64> = m.nodes().iter().map(|v| v.ln()).collect();
        for i in 3..m.nodes().len() - 2 {
            // Pinned nodes can sit very close to neighbours; skip lopsided stencils.
            let w = &m.nodes()[i - 2..=i + 2];
            let gaps: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();
            let (gmin, gmax) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), g| (lo.min(*g), hi.max(*g)));
            if gmin < 0.2 * gmax {
                continue;
            }
            let r = m.nodes()[i];
            let d = if r < 1.0 { derivs5(m.nodes(), &rf, i).0 } else { derivs5(&x, &rf, i).0 / r };
            prop_assert!(rel(d, m.h()[i]) < 1e-5, "r = {}", r);
        }
    }

    #[test]
    fn limit_monotonicity_and_identity(a in 0.05f64..=1.0) {
        let m = synth(&rational(a), 1e5, 2);
        let curv = curvature_profile(&m);
        let rep = kahlerlab::diagnostics::verify_limits(&m, &curv);
        prop_assert!(rep.monotonicity.holds, "min increment {}", rep.monotonicity.min_increment);
        prop_assert!(rep.ch_identity_max_deviation <= 1e-6);
        for (i, p) in curv.iter().enumerate().skip(1) {
            let (r, h, big) = (m.nodes()[i], m.h()[i], m.big_h()[i]);
            let rhs = 2.0 * (1.0 - r * h / big);
            prop_assert!((p.c * big - rhs).abs() / (p.c * big).max(1e-30) <= 1e-6);
        }
    }

    #[test]
    fn ball_volumes_increase(a in 0.05f64..=1.0, n in 1usize..5) {
        let m = synth(&rational(a), 1e5, n);
        let curv = curvature_profile(&m);
        let ball = ball_average_scal(&m, &curv).unwrap();
        prop_assert!(ball.volume.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(ball.k.iter().all(|k| *k >= 0.0));
        prop_assert!(!ball.scal_negative);
    }

    #[test]
    fn synthesis_is_deterministic(a in 0.05f64..=1.0) {
        let m1 = synth(&rational(a), 1e3, 3);
        let m2 = synth(&rational(a), 1e3, 3);
        prop_assert_eq!(m1.h().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), m2.h().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(m1.s_geo().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), m2.s_geo().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    /// ξ̄ = ξ off the window, h̄/h = 1 before it and constant after it.
    #[test]
    fn perturbation_is_local(radius in 5.0f64..60.0, frac in 0.05f64..0.95) {
        let eps = 0.1;
        let (lo, hi) = alpha_window(0.5, eps).unwrap();
        let alpha = lo + frac * (hi - lo);
        let c = construct_and_verify(&rational(0.5), alpha, radius, make_bump_cutoff(), &params(1e3), eps, 2).unwrap();
        let (base, pert) = (&c.base_metric, &c.metric);
        prop_assert_eq!(base.nodes(), pert.nodes());
        let beyond: Vec<f64> = base
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > radius + 1.0)
            .map(|(i, _)| pert.h()[i] / base.h()[i])
            .collect();
        for (i, &r) in base.nodes().iter().enumerate() {
            if r < radius - 1.0 || r > radius + 1.0 {
                prop_assert_eq!(pert.profile().eval(r).to_bits(), base.profile().eval(r).to_bits());
            }
            if r < radius - 1.0 {
                prop_assert_eq!(pert.h()[i], base.h()[i]);
            }
        }
        let first = beyond[0];
        prop_assert!(first > 1.0);
        prop_assert!(beyond.iter().all(|q| (q - first).abs() <= 1e-12 * first));
    }
}
