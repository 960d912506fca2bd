//! Fixtures and independent numerical helpers shared by the integration tests.
#![allow(dead_code)]

use kahlerlab::grid::GridParams;
use kahlerlab::perturbation::{grid_for_profile, search, SearchConfig, SearchResult};
use kahlerlab::profiles::{make_analytic_profile, make_bump_cutoff, ProfileFamily, XiProfile};
use kahlerlab::curvature::CurvaturePoint;
use kahlerlab::synthesis::MetricProfile;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rational(a: f64) -> XiProfile {
    make_analytic_profile(&ProfileFamily::Rational { a }).unwrap()
}

pub fn zero() -> XiProfile {
    make_analytic_profile(&ProfileFamily::Zero).unwrap()
}

/// Grid parameters with the standard pins, as the command line builds them.
pub fn params(r_max: f64) -> GridParams {
    let mut p = GridParams::with_r_max(r_max);
    p.pins = GridParams::standard_pins(r_max);
    p
}

pub fn synth(profile: &XiProfile, r_max: f64, n: usize) -> MetricProfile {
    let grid = grid_for_profile(&params(r_max), profile).unwrap();
    MetricProfile::synthesize(profile, &grid, n).unwrap()
}

/// The analytic fixtures, labelled.
pub fn analytic_fixtures() -> Vec<(String, XiProfile)> {
    let mut out = vec![("zero".to_string(), zero())];
    for a in [0.3, 0.5, 0.9, 1.0] {
        out.push((format!("rational({a})"), rational(a)));
    }
    out
}

/// A tabulated profile sampled from ξ = a·r/(1+r) with a = 0.6.
pub fn tabulated_fixture() -> XiProfile {
    let r: Vec<f64> = (0..=60).map(|i| if i == 0 { 0.0 } else { 10f64.powf(-2.0 + i as f64 * 0.1) }).collect();
    let xi = r.iter().map(|&x| 0.6 * x / (1.0 + x)).collect();
    make_analytic_profile(&ProfileFamily::Tabulated { r, xi }).unwrap()
}

/// The default perturbation search on rational(1/2) with r0 = 10.
pub fn perturbed_search(r_max: f64) -> SearchResult {
    let config = SearchConfig {
        grid: params(r_max),
        ..SearchConfig::default()
    };
    search(&rational(0.5), make_bump_cutoff(), &config).unwrap()
}

/// Closed forms for ξ = r/(2(1 + r)).
pub mod half {
    pub fn xi(r: f64) -> f64 {
        r / (2.0 * (1.0 + r))
    }
    pub fn h(r: f64) -> f64 {
        (1.0 + r).powf(-0.5)
    }
    /// 2√(1+r) − 2, written without cancellation.
    pub fn big_h(r: f64) -> f64 {
        2.0 * r / ((1.0 + r).sqrt() + 1.0)
    }
    pub fn f(r: f64) -> f64 {
        2.0 / ((1.0 + r).sqrt() + 1.0)
    }
    pub fn a(r: f64) -> f64 {
        0.5 * (1.0 + r).powf(-1.5)
    }
    pub fn b(r: f64) -> f64 {
        let big = big_h(r);
        (r * h(r) - (1.0 - xi(r)) * big) / (big * big)
    }
    pub fn c(r: f64) -> f64 {
        let big = big_h(r);
        2.0 * (big - r * h(r)) / (big * big)
    }
}

/// Closed forms for ξ = r/(1 + r).
pub mod one {
    pub fn h(r: f64) -> f64 {
        1.0 / (1.0 + r)
    }
    pub fn big_h(r: f64) -> f64 {
        r.ln_1p()
    }
    pub fn a(r: f64) -> f64 {
        1.0 / (1.0 + r)
    }
    /// ½∫₀^r (t(1+t))^{-1/2} dt.
    pub fn s_geo(r: f64) -> f64 {
        r.sqrt().asinh()
    }
}

pub fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1e-300)
}

/// Finite-difference weights for derivatives 0..=m at `x0` on arbitrary
/// stencil points (Fornberg's recursion). Returns `w[k][j]`.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives of sampled `ys` at node `i` from the
/// five-point stencil centred there.
pub fn derivs5(xs: &[f64], ys: &[f64], i: usize) -> (f64, f64) {
    let w = fd_weights(xs[i], &xs[i - 2..=i + 2], 2);
    let d1 = (0..5).map(|j| w[1][j] * ys[i - 2 + j]).sum();
    let d2 = (0..5).map(|j| w[2][j] * ys[i - 2 + j]).sum();
    (d1, d2)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let dx = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * dx);
    }
    s * dx / 3.0
}

pub fn unpinned(profile: &XiProfile, r_max: f64) -> MetricProfile {
    let grid = grid_for_profile(&GridParams::with_r_max(r_max), profile).unwrap();
    MetricProfile::synthesize(profile, &grid, 2).unwrap()
}

/// −(1/h)(r h′/h)′ and −2f′/f² from five-point differences of the h and f
/// grids. Above r = 1 the derivatives are taken in x = ln r, where the grid
/// is uniform and (r u′)′ = u_xx / r for u = ln h.
pub fn dual_forms(m: &MetricProfile, i: usize) -> (f64, f64) {
    let r = m.nodes()[i];
    let u: Vec<f64> = m.h().iter().map(|v| v.ln()).collect();
    let (a_dual, f_prime) = if r < 1.0 {
        let (u1, u2) = derivs5(m.nodes(), &u, i);
        let (f1, _) = derivs5(m.nodes(), m.f(), i);
        (-(u1 + r * u2) / m.h()[i], f1)
    } else {
        let x: Vec<f64> = m.nodes().iter().map(|v| v.ln()).collect();
        let (_, uxx) = derivs5(&x, &u, i);
        let (fx, _) = derivs5(&x, m.f(), i);
        (-uxx / (r * m.h()[i]), fx / r)
    };
    let f = m.f()[i];
    (a_dual, -2.0 * f_prime / (f * f))
}

/// Minimum over random vectors of Σᵢⱼ Mᵢⱼ(aᵢ − aⱼ)² / (2|Pa|²), where P
/// removes the mean; this is bounded below by the smallest eigenvalue on
/// the complement of the ones vector.
pub fn sampled_nqob_min(p: &CurvaturePoint, n: usize, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let m = p.bisectional_matrix(n);
    let mut best = f64::INFINITY;
    let mut a = vec![0.0; n];
    for _ in 0..samples {
        for v in a.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let mean = a.iter().sum::<f64>() / n as f64;
        let norm2: f64 = a.iter().map(|v| (v - mean).powi(2)).sum();
        if norm2 < 1e-12 {
            continue;
        }
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += m[i][j] * (a[i] - a[j]).powi(2);
            }
        }
        best = best.min(0.5 * q / norm2);
    }
    best
}

pub fn scale(p: &CurvaturePoint) -> f64 {
    p.a.abs().max(p.b.abs()).max(p.c.abs()).max(1e-300)
}

