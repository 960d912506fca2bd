//! Metric synthesis from a generating profile.
//!
//! h(r) = exp(−∫₀^r ξ(s)/s ds), H(r) = ∫₀^r h, f = H/r, the radial arc
//! length s(r) = ½∫₀^r √(h/t) dt and the auxiliary K(r) = ∫₀^r ξh, which
//! gives cancellation-free forms of the curvature numerators near the origin
//! (H − rh = K and rh − (1 − ξ)H = ξH − K).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::profiles::XiProfile;
use crate::quadrature::{cumulative_hermite, gauss_kronrod21, hermite, integrate, locate, ls_slope, QuadTolerance};

/// Per-panel tolerance for the ∫ξ/s prefix sums.
pub const H_PANEL_TOL: f64 = 1e-10;

/// Grid-sampled metric data for one profile. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MetricProfile {
    profile: XiProfile,
    grid: RadialGrid,
    dim: usize,
    xi: Vec<f64>,
    dxi: Vec<f64>,
    h: Vec<f64>,
    dh: Vec<f64>,
    big_h: Vec<f64>,
    f: Vec<f64>,
    xi_h: Vec<f64>,
    s_geo: Vec<f64>,
}

/// Metric quantities interpolated at an arbitrary radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub r: f64,
    pub xi: f64,
    pub dxi: f64,
    pub h: f64,
    pub big_h: f64,
    pub xi_h: f64,
    pub s_geo: f64,
}

/// h at every grid node.
pub fn compute_h(p: &XiProfile, grid: &RadialGrid) -> Result<Vec<f64>> {
    if !p.eval_deriv(0.0).is_finite() {
        return Err(Error::SingularOrigin);
    }
    let tol = QuadTolerance {
        abs: H_PANEL_TOL,
        ..QuadTolerance::default()
    };
    let nodes = grid.nodes();
    let integrand = |s: f64| p.ratio(s);
    let mut h = Vec::with_capacity(nodes.len());
    h.push(1.0);
    let mut log_sum = 0.0;
    for w in nodes.windows(2) {
        log_sum += integrate(&integrand, w[0], w[1], tol)?;
        h.push((-log_sum).exp());
    }
    Ok(h)
}

/// h' = −ξh/r, with the limit −ξ'(0) at the origin.
fn h_slopes(p: &XiProfile, nodes: &[f64], h: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .zip(h)
        .map(|(&r, &hv)| -p.ratio(r) * hv)
        .collect()
}

/// Prefix integral H = ∫₀^r h and f = H/r (f(0) = h(0) = 1).
///
/// Uses the panel-wise cubic Hermite rule, which needs h' at the nodes;
/// global error is O(Δ⁴).
pub fn compute_f(grid: &RadialGrid, h: &[f64], dh: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nodes = grid.nodes();
    let big_h = cumulative_hermite(nodes, h, dh);
    let f = nodes
        .iter()
        .zip(&big_h)
        .zip(h)
        .map(|((&r, &hh), &h0)| if r == 0.0 { h0 } else { hh / r })
        .collect();
    (big_h, f)
}

/// s(r) = ½∫₀^r √(h(t)/t) dt, integrated in u = √t so the origin is regular.
pub fn geodesic_radius(grid: &RadialGrid, h: &[f64], dh: &[f64]) -> Vec<f64> {
    let nodes = grid.nodes();
    let mut out = Vec::with_capacity(nodes.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 1..nodes.len() {
        let (r0, r1) = (nodes[i - 1], nodes[i]);
        let hi = |t: f64| hermite(r0, r1, h[i - 1], h[i], dh[i - 1], dh[i], t);
        let g = |u: f64| hi(u * u).max(0.0).sqrt();
        let (v, _) = gauss_kronrod21(&g, r0.sqrt(), r1.sqrt());
        acc += v;
        out.push(acc);
    }
    out
}

impl MetricProfile {
    /// Runs the full synthesis for complex dimension `dim`.
    pub fn synthesize(profile: &XiProfile, grid: &RadialGrid, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension n must be at least 1".into()));
        }
        let nodes = grid.nodes();
        let xi: Vec<f64> = nodes.iter().map(|&r| profile.eval(r)).collect();
        let dxi: Vec<f64> = nodes.iter().map(|&r| profile.eval_deriv(r)).collect();
        let h = compute_h(profile, grid)?;
        let dh = h_slopes(profile, nodes, &h);
        let (big_h, f) = compute_f(grid, &h, &dh);
        // K' = ξh, K'' = ξ'h + ξh'.
        let q: Vec<f64> = xi.iter().zip(&h).map(|(a, b)| a * b).collect();
        let dq: Vec<f64> = (0..nodes.len()).map(|i| dxi[i] * h[i] + xi[i] * dh[i]).collect();
        let xi_h = cumulative_hermite(nodes, &q, &dq);
        let s_geo = geodesic_radius(grid, &h, &dh);
        Ok(Self {
            profile: profile.clone(),
            grid: grid.clone(),
            dim,
            xi,
            dxi,
            h,
            dh,
            big_h,
            f,
            xi_h,
            s_geo,
        })
    }

    pub fn profile(&self) -> &XiProfile {
        &self.profile
    }
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }
    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
    pub fn dxi(&self) -> &[f64] {
        &self.dxi
    }
    pub fn h(&self) -> &[f64] {
        &self.h
    }
    pub fn dh(&self) -> &[f64] {
        &self.dh
    }
    /// H = ∫₀^r h = r·f.
    pub fn big_h(&self) -> &[f64] {
        &self.big_h
    }
    pub fn f(&self) -> &[f64] {
        &self.f
    }
    /// K = ∫₀^r ξh.
    pub fn xi_h(&self) -> &[f64] {
        &self.xi_h
    }
    pub fn s_geo(&self) -> &[f64] {
        &self.s_geo
    }

    /// Hermite interpolation of the metric data at `r` in [0, r_max].
    pub fn sample(&self, r: f64) -> MetricSample {
        let nodes = self.nodes();
        let r = r.clamp(0.0, self.grid.r_max());
        let i = locate(nodes, r);
        let (r0, r1) = (nodes[i], nodes[i + 1]);
        let h = hermite(r0, r1, self.h[i], self.h[i + 1], self.dh[i], self.dh[i + 1], r);
        let big_h = hermite(r0, r1, self.big_h[i], self.big_h[i + 1], self.h[i], self.h[i + 1], r);
        let q0 = self.xi[i] * self.h[i];
        let q1 = self.xi[i + 1] * self.h[i + 1];
        let xi_h = hermite(r0, r1, self.xi_h[i], self.xi_h[i + 1], q0, q1, r);
        // In u = √r the arc length is smooth with ds/du = √h.
        let s_geo = hermite(
            r0.sqrt(),
            r1.sqrt(),
            self.s_geo[i],
            self.s_geo[i + 1],
            self.h[i].sqrt(),
            self.h[i + 1].sqrt(),
            r.sqrt(),
        );
        MetricSample {
            r,
            xi: self.profile.eval(r),
            dxi: self.profile.eval_deriv(r),
            h,
            big_h,
            xi_h,
            s_geo,
        }
    }

    /// Ball volume V(r) = (πⁿ/n!)·(r f(r))ⁿ of {|z|² ≤ r}.
    pub fn ball_volume(&self, r: f64) -> f64 {
        volume_from_big_h(self.sample(r).big_h, self.dim)
    }

    /// Volume at every grid node.
    pub fn ball_volumes(&self) -> Vec<f64> {
        self.big_h.iter().map(|&b| volume_from_big_h(b, self.dim)).collect()
    }

    /// Radius r whose geodesic sphere has radius `rho`.
    pub fn radius_at_geodesic(&self, rho: f64) -> Result<f64> {
        let s = &self.s_geo;
        let max = *s.last().expect("nonempty");
        if !(rho >= 0.0) || rho > max {
            return Err(Error::OutOfRange { rho, max });
        }
        let nodes = self.nodes();
        let i = locate(s, rho);
        let (mut lo, mut hi) = (nodes[i], nodes[i + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.sample(mid).s_geo < rho {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub fn volume_from_big_h(big_h: f64, dim: usize) -> f64 {
    let mut c = 1.0;
    for k in 1..=dim {
        c *= std::f64::consts::PI / k as f64;
    }
    c * big_h.powi(dim as i32)
}

/// Growth classification of the completeness integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompletenessVerdict {
    Diverging,
    InconclusiveAtRMax,
}

/// Increments of I over successive doublings must not shrink below this
/// ratio for the integral to be called diverging.
pub const INCREMENT_RATIO_FLOOR: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessDiagnostic {
    pub radii: Vec<f64>,
    /// I(r) = ∫₀^r √(h/s) ds at each radius.
    pub partial_integrals: Vec<f64>,
    /// Least-squares slope of log I against log r over the upper half.
    pub growth_exponent: f64,
    /// Smallest ratio of consecutive dyadic increments among the last four.
    pub min_increment_ratio: f64,
    pub verdict: CompletenessVerdict,
}

/// Classifies a sequence I(2^k) of partial integrals.
pub fn classify_growth(radii: &[f64], values: &[f64]) -> (f64, f64, CompletenessVerdict) {
    let n = values.len();
    let half = n / 2;
    let xs: Vec<f64> = radii[half..].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values[half..].iter().map(|v| v.max(1e-300).ln()).collect();
    let exponent = ls_slope(&xs, &ys);
    let incr: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if incr.len() < 5 {
        return (exponent, f64::NAN, CompletenessVerdict::InconclusiveAtRMax);
    }
    let tail = &incr[incr.len() - 5..];
    let min_ratio = tail
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .fold(f64::INFINITY, f64::min);
    let verdict = if min_ratio >= INCREMENT_RATIO_FLOOR {
        CompletenessVerdict::Diverging
    } else {
        CompletenessVerdict::InconclusiveAtRMax
    };
    (exponent, min_ratio, verdict)
}

/// Partial completeness integrals at r = 2^k and their growth verdict.
pub fn completeness_diagnostic(metric: &MetricProfile) -> CompletenessDiagnostic {
    let r_max = metric.grid().r_max();
    let mut radii = Vec::new();
    let mut r = 1.0;
    while r <= r_max {
        radii.push(r);
        r *= 2.0;
    }
    let partial_integrals: Vec<f64> = radii.iter().map(|&r| 2.0 * metric.sample(r).s_geo).collect();
    let (growth_exponent, min_increment_ratio, verdict) = classify_growth(&radii, &partial_integrals);
    CompletenessDiagnostic {
        radii,
        partial_integrals,
        growth_exponent,
        min_increment_ratio,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;

    fn grid(r_max: f64) -> RadialGrid {
        let mut p = GridParams::with_r_max(r_max);
        p.pins = GridParams::standard_pins(r_max);
        RadialGrid::new(&p).unwrap()
    }

    #[test]
    fn zero_profile_is_euclidean() {
        let g = grid(1e4);
        let m = MetricProfile::synthesize(&XiProfile::Zero, &g, 2).unwrap();
        assert!(m.h().iter().all(|&v| v == 1.0));
        for (r, (hh, f)) in g.nodes().iter().zip(m.big_h().iter().zip(m.f())) {
            assert!((hh - r).abs() <= 1e-15 * r.max(1.0));
            assert!((f - 1.0).abs() <= 1e-15);
        }
        let i4 = g.index_of(4.0).unwrap();
        assert!((m.s_geo()[i4] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rational_half_closed_forms_at_three() {
        let g = grid(1e4);
        let m = MetricProfile::synthesize(&XiProfile::Rational { a: 0.5 }, &g, 1).unwrap();
        let i = g.index_of(3.0).unwrap();
        assert!((m.h()[i] - 0.5).abs() < 1e-12);
        assert!((m.big_h()[i] - 2.0).abs() < 1e-9);
        assert!((m.f()[i] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn rational_one_closed_forms_at_three() {
        let g = grid(1e4);
        let m = MetricProfile::synthesize(&XiProfile::Rational { a: 1.0 }, &g, 1).unwrap();
        let i1 = g.index_of(1.0).unwrap();
        assert!((m.h()[i1] - 0.5).abs() < 1e-12);
        let i = g.index_of(3.0).unwrap();
        assert!((m.big_h()[i] - 4f64.ln()).abs() < 1e-9);
        assert!((m.f()[i] - 4f64.ln() / 3.0).abs() < 1e-9);
    }

    #[test]
    fn rational_volume_examples() {
        let g = grid(1e3);
        let m1 = MetricProfile::synthesize(&XiProfile::Rational { a: 0.5 }, &g, 1).unwrap();
        assert!((m1.ball_volume(3.0) - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        let m2 = MetricProfile::synthesize(&XiProfile::Rational { a: 0.5 }, &g, 2).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((m2.ball_volume(3.0) - 2.0 * pi2).abs() < 1e-9);
        let z = MetricProfile::synthesize(&XiProfile::Zero, &g, 1).unwrap();
        assert!((z.ball_volume(3.0) - 3.0 * std::f64::consts::PI).abs() < 1e-12);
        let v = m2.ball_volumes();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn origin_values() {
        let g = grid(100.0);
        let m = MetricProfile::synthesize(&XiProfile::Rational { a: 0.3 }, &g, 2).unwrap();
        assert_eq!(m.h()[0], 1.0);
        assert!((m.f()[0] - 1.0).abs() <= 1e-10);
        assert_eq!(m.s_geo()[0], 0.0);
    }

    #[test]
    fn completeness_verdicts() {
        for p in [XiProfile::Zero, XiProfile::Rational { a: 0.5 }, XiProfile::Rational { a: 1.0 }] {
            let m = MetricProfile::synthesize(&p, &grid(1e6), 1).unwrap();
            let d = completeness_diagnostic(&m);
            assert_eq!(d.verdict, CompletenessVerdict::Diverging, "{p:?}");
            assert!(d.growth_exponent > 0.0);
        }
        let m = MetricProfile::synthesize(&XiProfile::Zero, &grid(1e6), 1).unwrap();
        let d = completeness_diagnostic(&m);
        for (r, i) in d.radii.iter().zip(&d.partial_integrals) {
            assert!((i - 2.0 * r.sqrt()).abs() < 1e-9 * r.sqrt());
        }
        assert!((d.growth_exponent - 0.5).abs() < 1e-6);
    }

    #[test]
    fn convergent_sequence_is_inconclusive() {
        let radii: Vec<f64> = (0..20).map(|k| 2f64.powi(k)).collect();
        let vals: Vec<f64> = radii.iter().map(|r| 3.0 - 1.0 / r.sqrt()).collect();
        let (_, ratio, verdict) = classify_growth(&radii, &vals);
        assert_eq!(verdict, CompletenessVerdict::InconclusiveAtRMax);
        assert!(ratio < INCREMENT_RATIO_FLOOR);
    }

    #[test]
    fn geodesic_inverse_roundtrip() {
        let m = MetricProfile::synthesize(&XiProfile::Rational { a: 0.5 }, &grid(1e4), 2).unwrap();
        for rho in [0.1, 1.0, 7.5, 18.0] {
            let r = m.radius_at_geodesic(rho).unwrap();
            assert!((m.sample(r).s_geo - rho).abs() < 1e-9 * rho);
        }
        assert!(m.radius_at_geodesic(1e9).is_err());
    }
}
