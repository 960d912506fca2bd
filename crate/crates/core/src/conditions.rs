//! Classification of a curvature profile against the positivity cones.
//!
//! Every verdict is a statement about the grid only ("holds-on-grid"); the
//! behaviour beyond r_max is left to the diagnostics.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curvature::CurvaturePoint;
use crate::error::{Error, Result};
use crate::synthesis::{completeness_diagnostic, CompletenessVerdict, MetricProfile, INCREMENT_RATIO_FLOOR};

/// Eigenvalues of the NQOB form above this value count as nonnegative.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Tolerance for the curvature-form versus ξ-form comparison.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionId {
    Complete,
    PosBisectional,
    Nob,
    Nqob,
    RicNonneg,
    NobAndRic,
}

impl ConditionId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionId::Complete => "complete",
            ConditionId::PosBisectional => "pos-bisectional",
            ConditionId::Nob => "nob",
            ConditionId::Nqob => "nqob",
            ConditionId::RicNonneg => "ric-nonneg",
            ConditionId::NobAndRic => "nob-and-ric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnGrid,
    Fails,
}

/// Verdict plus the minimum of the defining quantity over the grid.
///
/// For the non-strict cones `margin < 0` exactly when the verdict fails; for
/// the strict ones (pos-bisectional) a zero margin already fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub verdict: Verdict,
    pub margin: f64,
    pub first_violation_r: Option<f64>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnGrid
    }

    fn from_quantities<I>(condition: ConditionId, strict: bool, points: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut margin = f64::INFINITY;
        let mut first = None;
        for (r, q) in points {
            margin = margin.min(q);
            let bad = if strict { !(q > 0.0) } else { !(q >= 0.0) };
            if bad && first.is_none() {
                first = Some(r);
            }
        }
        Self {
            condition,
            verdict: if first.is_some() {
                Verdict::Fails
            } else {
                Verdict::HoldsOnGrid
            },
            margin,
            first_violation_r: first,
        }
    }
}

/// A + C ≥ 0, B ≥ 0, C ≥ 0.
pub fn check_nob(curv: &[CurvaturePoint]) -> ConditionReport {
    ConditionReport::from_quantities(
        ConditionId::Nob,
        false,
        curv.iter().map(|p| (p.r, (p.a + p.c).min(p.b).min(p.c))),
    )
}

/// Ric ≥ 0 in the diagonal frame: ric_rad ≥ 0 and ric_tan ≥ 0.
pub fn check_ric_nonneg(curv: &[CurvaturePoint]) -> ConditionReport {
    ConditionReport::from_quantities(
        ConditionId::RicNonneg,
        false,
        curv.iter().map(|p| (p.r, p.ric_rad.min(p.ric_tan))),
    )
}

/// The four ξ-form quantities whose signs match A + C, A + (n − 1)B, B, C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiFormQuantities {
    pub a_plus_c: f64,
    pub a_plus_ric_b: f64,
    pub b_numerator: f64,
    pub c_numerator: f64,
}

/// Evaluates the ξ/h criteria directly from ξ, ξ', h and H at grid node `i`.
pub fn xi_form(metric: &MetricProfile, i: usize) -> XiFormQuantities {
    let r = metric.nodes()[i];
    let n = metric.dim() as f64;
    let (xi, dxi, h, big_h) = (metric.xi()[i], metric.dxi()[i], metric.h()[i], metric.big_h()[i]);
    if r == 0.0 {
        // Limits of the quotients as r → 0 (h = 1, (rf)² ~ r²).
        return XiFormQuantities {
            a_plus_c: 2.0 * dxi,
            a_plus_ric_b: dxi + 0.5 * (n - 1.0) * dxi,
            b_numerator: 0.0,
            c_numerator: 0.0,
        };
    }
    let b_num = r * h - (1.0 - xi) * big_h;
    let c_num = big_h - r * h;
    let rf2 = big_h * big_h;
    XiFormQuantities {
        a_plus_c: dxi + 2.0 * h / rf2 * c_num,
        a_plus_ric_b: dxi + (n - 1.0) * h / rf2 * b_num,
        b_numerator: b_num,
        c_numerator: c_num,
    }
}

fn agree(name: &str, r: f64, curvature_form: f64, xi_form: f64) -> Result<()> {
    let same_sign = (curvature_form >= 0.0) == (xi_form >= 0.0);
    let scale = curvature_form.abs().max(xi_form.abs()).max(1.0);
    if !same_sign && (curvature_form - xi_form).abs() > CROSS_CHECK_TOLERANCE * scale {
        return Err(Error::Consistency {
            quantity: name.into(),
            r,
            detail: format!("curvature form {curvature_form:e} vs xi form {xi_form:e}"),
        });
    }
    Ok(())
}

/// A + C ≥ 0, A + (n − 1)B ≥ 0, B ≥ 0, C ≥ 0, cross-checked against the
/// equivalent ξ-form inequalities at every node.
pub fn check_nob_ric(metric: &MetricProfile, curv: &[CurvaturePoint]) -> Result<ConditionReport> {
    let n = metric.dim() as f64;
    for (i, p) in curv.iter().enumerate() {
        let x = xi_form(metric, i);
        let big_h = metric.big_h()[i];
        let h = metric.h()[i];
        let rf2 = big_h * big_h;
        let (sb, sc) = if p.r == 0.0 { (0.0, 0.0) } else { (p.b * rf2, 0.5 * p.c * rf2) };
        agree("A+C", p.r, h * (p.a + p.c), x.a_plus_c)?;
        agree("A+(n-1)B", p.r, h * (p.a + (n - 1.0) * p.b), x.a_plus_ric_b)?;
        agree("B", p.r, sb, x.b_numerator)?;
        agree("C", p.r, sc, x.c_numerator)?;
    }
    Ok(ConditionReport::from_quantities(
        ConditionId::NobAndRic,
        false,
        curv.iter()
            .map(|p| (p.r, (p.a + p.c).min(p.a + (n - 1.0) * p.b).min(p.b).min(p.c))),
    ))
}

/// Orthonormal (Helmert) basis of the complement of (1, …, 1) in ℝⁿ, as columns.
fn helmert_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            q[(i, k - 1)] = 1.0 / norm;
        }
        q[(k, k - 1)] = -(k as f64) / norm;
    }
    q
}

/// Laplacian L = diag(row sums of M) − M, so that
/// Σᵢⱼ Mᵢⱼ(aᵢ − aⱼ)² = 2·aᵀLa.
pub fn nqob_laplacian(p: &CurvaturePoint, n: usize) -> DMatrix<f64> {
    let m = p.bisectional_matrix(n);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            m[i].iter().sum::<f64>() - m[i][i]
        } else {
            -m[i][j]
        }
    })
}

/// Smallest eigenvalue of L restricted to the complement of constants.
///
/// The constant vector is always in the kernel of L and the quadratic form is
/// invariant under a ↦ a + c·1, so the complement carries all information.
pub fn nqob_min_eigenvalue(p: &CurvaturePoint, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let q = helmert_basis(n);
    let reduced = q.transpose() * nqob_laplacian(p, n) * &q;
    SymmetricEigen::new(reduced)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Σ Rᵢᵢ̄ⱼⱼ̄(aᵢ − aⱼ)² ≥ 0 for all real a. Vacuous for n = 1.
pub fn check_nqob(curv: &[CurvaturePoint], n: usize) -> ConditionReport {
    ConditionReport::from_quantities(
        ConditionId::Nqob,
        false,
        curv.iter().map(|p| {
            let lam = nqob_min_eigenvalue(p, n);
            // Eigenvalues inside the round-off band are reported as zero.
            (p.r, if lam >= -PSD_TOLERANCE { lam.max(0.0) } else { lam })
        }),
    )
}

/// ξ' > 0 and 0 < ξ < 1 on the grid, cross-checked against A, B, C > 0.
pub fn check_positive_bisectional(metric: &MetricProfile, curv: &[CurvaturePoint]) -> Result<ConditionReport> {
    let nodes = metric.nodes();
    let report = ConditionReport::from_quantities(
        ConditionId::PosBisectional,
        true,
        (0..nodes.len()).map(|i| {
            let (xi, dxi) = (metric.xi()[i], metric.dxi()[i]);
            let q = if nodes[i] == 0.0 { dxi } else { dxi.min(xi).min(1.0 - xi) };
            (nodes[i], q)
        }),
    );
    let curvature_positive = curv.iter().all(|p| p.a > 0.0 && p.b > 0.0 && p.c > 0.0);
    if curvature_positive != report.holds() {
        let r = curv
            .iter()
            .find(|p| !(p.a > 0.0 && p.b > 0.0 && p.c > 0.0))
            .map(|p| p.r)
            .or(report.first_violation_r)
            .unwrap_or(f64::NAN);
        return Err(Error::Consistency {
            quantity: "pos-bisectional".into(),
            r,
            detail: format!(
                "xi criterion says {}, curvature signs say {}",
                report.holds(),
                curvature_positive
            ),
        });
    }
    Ok(report)
}

/// Completeness from the growth of ∫₀^r √(h/s) ds; the margin is the
/// smallest dyadic increment ratio minus [`INCREMENT_RATIO_FLOOR`].
pub fn check_complete(metric: &MetricProfile) -> ConditionReport {
    let d = completeness_diagnostic(metric);
    let margin = if d.min_increment_ratio.is_nan() {
        -INCREMENT_RATIO_FLOOR
    } else {
        d.min_increment_ratio - INCREMENT_RATIO_FLOOR
    };
    let holds = d.verdict == CompletenessVerdict::Diverging;
    ConditionReport {
        condition: ConditionId::Complete,
        verdict: if holds { Verdict::HoldsOnGrid } else { Verdict::Fails },
        margin,
        first_violation_r: if holds { None } else { Some(metric.grid().r_max()) },
    }
}

/// All six reports in a fixed order.
pub fn check_all(metric: &MetricProfile, curv: &[CurvaturePoint]) -> Result<Vec<ConditionReport>> {
    Ok(vec![
        check_complete(metric),
        check_positive_bisectional(metric, curv)?,
        check_nob(curv),
        check_nqob(curv, metric.dim()),
        check_ric_nonneg(curv),
        check_nob_ric(metric, curv)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::curvature_profile;
    use crate::grid::{GridParams, RadialGrid};
    use crate::profiles::XiProfile;

    fn run(p: XiProfile, n: usize) -> (MetricProfile, Vec<CurvaturePoint>) {
        let g = RadialGrid::new(&GridParams::with_r_max(1e4)).unwrap();
        let m = MetricProfile::synthesize(&p, &g, n).unwrap();
        let c = curvature_profile(&m);
        (m, c)
    }

    #[test]
    fn zero_profile_reports() {
        let (m, c) = run(XiProfile::Zero, 3);
        let nob = check_nob(&c);
        assert!(nob.holds());
        assert_eq!(nob.margin, 0.0);
        assert!(check_nob_ric(&m, &c).unwrap().holds());
        let nq = check_nqob(&c, 3);
        assert!(nq.holds() && nq.margin == 0.0);
        let pb = check_positive_bisectional(&m, &c).unwrap();
        assert!(!pb.holds());
        assert_eq!(pb.margin, 0.0);
    }

    #[test]
    fn rational_half_holds_everything() {
        let (m, c) = run(XiProfile::Rational { a: 0.5 }, 3);
        let all = check_all(&m, &c).unwrap();
        for rep in &all {
            assert!(rep.holds(), "{rep:?}");
            assert!(rep.first_violation_r.is_none());
        }
        assert!(all[2].margin > 0.0);
    }

    #[test]
    fn nqob_eigenvalues_closed_form() {
        // On the complement of constants the spectrum is {nB, B + (n−1)C/2}.
        let p = CurvaturePoint::from_components(1.0, -3.0, 0.4, 0.1, 5);
        let lam = nqob_min_eigenvalue(&p, 5);
        let expect = (5.0 * 0.4f64).min(0.4 + 2.0 * 0.1);
        assert!((lam - expect).abs() < 1e-12);
        let neg = CurvaturePoint::from_components(1.0, 0.0, 0.1, -0.5, 3);
        assert!(nqob_min_eigenvalue(&neg, 3) < 0.0);
        assert!(!check_nqob(&[neg], 3).holds());
    }

    #[test]
    fn margin_sign_matches_verdict() {
        let pts = [
            CurvaturePoint::from_components(1.0, 0.2, 0.1, 0.3, 2),
            CurvaturePoint::from_components(2.0, -0.5, 0.1, 0.3, 2),
        ];
        let rep = check_nob(&pts);
        assert!(!rep.holds());
        assert!(rep.margin < 0.0);
        assert_eq!(rep.first_violation_r, Some(2.0));
        let ric = check_ric_nonneg(&pts);
        assert!(!ric.holds() && (ric.margin + 0.4).abs() < 1e-12);
        assert!(check_ric_nonneg(&pts[..1]).margin > 0.0);
    }

    #[test]
    fn condition_ids_serialize_kebab() {
        let s = serde_json::to_string(&ConditionId::NobAndRic).unwrap();
        assert_eq!(s, "\"nob-and-ric\"");
        assert_eq!(ConditionId::PosBisectional.as_str(), "pos-bisectional");
        let v = serde_json::to_string(&Verdict::HoldsOnGrid).unwrap();
        assert_eq!(v, "\"holds-on-grid\"");
    }
}
