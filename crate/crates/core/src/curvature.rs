//! Curvature components of a U(n)-invariant metric in the unitary frame
//! {∂₁/√h, ∂ᵢ/√f} at (z₁, 0, …, 0).
//!
//! A = R₁₁̄₁₁̄ = ξ'/h, B = R₁₁̄ᵢᵢ̄ = [rh − (1 − ξ)H]/(rf)², C = Rᵢᵢ̄ᵢᵢ̄ =
//! 2(H − rh)/(rf)², and Rᵢᵢ̄ⱼⱼ̄ = C/2 for distinct tangential indices.

use serde::{Deserialize, Serialize};

use crate::synthesis::{MetricProfile, MetricSample};

/// Below this radius the B and C numerators are taken from the integral
/// forms ∫₀^r (ξ(r) − ξ(t))h(t) dt and ∫₀^r ξh.
pub const SMALL_R: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePoint {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Ric₁₁̄ = A + (n − 1)B.
    pub ric_rad: f64,
    /// Ricᵢᵢ̄ = B + nC/2.
    pub ric_tan: f64,
    /// A + 2(n − 1)B + n(n − 1)C/2.
    pub scal: f64,
}

impl CurvaturePoint {
    pub fn from_components(r: f64, a: f64, b: f64, c: f64, n: usize) -> Self {
        let nf = n as f64;
        let ric_rad = a + (nf - 1.0) * b;
        let ric_tan = b + 0.5 * nf * c;
        let scal = a + 2.0 * (nf - 1.0) * b + 0.5 * nf * (nf - 1.0) * c;
        Self {
            r,
            a,
            b,
            c,
            ric_rad,
            ric_tan,
            scal,
        }
    }

    /// The n×n matrix Mᵢⱼ = Rᵢᵢ̄ⱼⱼ̄ (radial index first).
    pub fn bisectional_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = match (i, j) {
                    (0, 0) => self.a,
                    (0, _) | (_, 0) => self.b,
                    _ if i == j => self.c,
                    _ => 0.5 * self.c,
                };
            }
        }
        m
    }
}

/// Curvature from metric data at one radius.
///
/// At r = 0 the Taylor limits A = ξ'(0), B = ξ'(0)/2, C = ξ'(0) are used.
pub fn curvature_at(s: &MetricSample, n: usize) -> CurvaturePoint {
    let r = s.r;
    if r == 0.0 {
        let d = s.dxi;
        return CurvaturePoint::from_components(0.0, d, 0.5 * d, d, n);
    }
    let a = s.dxi / s.h;
    let rf2 = s.big_h * s.big_h;
    let (num_b, num_c) = if r < SMALL_R {
        (s.xi * s.big_h - s.xi_h, s.xi_h)
    } else {
        (r * s.h - (1.0 - s.xi) * s.big_h, s.big_h - r * s.h)
    };
    CurvaturePoint::from_components(r, a, num_b / rf2, 2.0 * num_c / rf2, n)
}

fn node_sample(metric: &MetricProfile, i: usize) -> MetricSample {
    MetricSample {
        r: metric.nodes()[i],
        xi: metric.xi()[i],
        dxi: metric.dxi()[i],
        h: metric.h()[i],
        big_h: metric.big_h()[i],
        xi_h: metric.xi_h()[i],
        s_geo: metric.s_geo()[i],
    }
}

/// A, B, C and the Ricci/scalar traces at every grid node.
pub fn curvature_profile(metric: &MetricProfile) -> Vec<CurvaturePoint> {
    let n = metric.dim();
    (0..metric.nodes().len())
        .map(|i| curvature_at(&node_sample(metric, i), n))
        .collect()
}

/// Curvature at an arbitrary radius via interpolated metric data.
pub fn curvature_at_radius(metric: &MetricProfile, r: f64) -> CurvaturePoint {
    if let Some(i) = metric.grid().index_of(r) {
        return curvature_at(&node_sample(metric, i), metric.dim());
    }
    curvature_at(&metric.sample(r), metric.dim())
}

/// Admissible range of the Ricci-form norm from S/√n ≤ ‖ρ‖ ≤ S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoBounds {
    pub lower: f64,
    pub upper: f64,
    /// False where S < 0 and the sandwich does not apply.
    pub applicable: bool,
}

pub fn rho_norm_bounds(scal: &[f64], n: usize) -> Vec<RhoBounds> {
    let root = (n as f64).sqrt();
    scal.iter()
        .map(|&s| RhoBounds {
            lower: s / root,
            upper: s,
            applicable: s >= 0.0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridParams, RadialGrid};
    use crate::profiles::XiProfile;

    fn metric(p: XiProfile, n: usize) -> MetricProfile {
        let mut gp = GridParams::with_r_max(1e4);
        gp.pins = GridParams::standard_pins(1e4);
        MetricProfile::synthesize(&p, &RadialGrid::new(&gp).unwrap(), n).unwrap()
    }

    #[test]
    fn zero_profile_is_flat() {
        let curv = curvature_profile(&metric(XiProfile::Zero, 3));
        assert!(curv.iter().all(|c| c.a == 0.0 && c.b == 0.0 && c.c == 0.0 && c.scal == 0.0));
    }

    #[test]
    fn rational_half_at_three() {
        let m = metric(XiProfile::Rational { a: 0.5 }, 2);
        let c = curvature_at_radius(&m, 3.0);
        assert!((c.a - 0.0625).abs() < 1e-12);
        assert!((c.b - 0.0625).abs() < 1e-10);
        assert!((c.c - 0.25).abs() < 1e-10);
    }

    #[test]
    fn origin_limits_match_small_radius() {
        let m = metric(XiProfile::Rational { a: 0.5 }, 2);
        let c0 = curvature_profile(&m)[0];
        assert_eq!((c0.a, c0.b, c0.c), (0.5, 0.25, 0.5));
        let near = curvature_at(&m.sample(1e-6), 2);
        assert!((near.a - 0.5).abs() < 1e-5);
        assert!((near.b - 0.25).abs() < 1e-5);
        assert!((near.c - 0.5).abs() < 1e-5);
    }

    #[test]
    fn scal_is_trace_of_ricci() {
        for n in 1..6 {
            let c = CurvaturePoint::from_components(1.0, 0.3, -0.2, 0.7, n);
            let lhs = c.scal;
            let rhs = c.ric_rad + (n as f64 - 1.0) * c.ric_tan;
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_row_sums_are_ricci() {
        let c = CurvaturePoint::from_components(1.0, 0.3, 0.2, 0.7, 4);
        let m = c.bisectional_matrix(4);
        assert!((m[0].iter().sum::<f64>() - c.ric_rad).abs() < 1e-14);
        assert!((m[2].iter().sum::<f64>() - c.ric_tan).abs() < 1e-14);
    }

    #[test]
    fn rho_bounds_examples() {
        let b = rho_norm_bounds(&[0.0, 2.0, -1.0], 4);
        assert_eq!((b[0].lower, b[0].upper), (0.0, 0.0));
        assert_eq!((b[1].lower, b[1].upper), (1.0, 2.0));
        assert!(!b[2].applicable);
        let one = rho_norm_bounds(&[3.5], 1);
        assert_eq!((one[0].lower, one[0].upper), (3.5, 3.5));
    }
}
