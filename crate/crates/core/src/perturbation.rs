//! Search for a compactly supported perturbation ξ̄ = ξ − β·φ(· − R) whose
//! metric keeps nonnegative orthogonal bisectional curvature while Ā(R) < 0.
//!
//! The search follows the inequality chain of the construction: pick ε, take
//! α in the admissible window, locate R where ξ'(R) < ε·h(R)·C(R), and then
//! resynthesize and verify every claimed inequality on the grid.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_at_radius, curvature_profile, CurvaturePoint};
use crate::error::{Error, Result};
use crate::grid::{GridParams, RadialGrid, Refinement};
use crate::profiles::{make_perturbed_profile, Cutoff, PerturbationSpec, XiProfile};
use crate::quadrature::{integrate, QuadTolerance};
use crate::synthesis::MetricProfile;

/// Slack values tried in order.
pub const DEFAULT_EPSILON_SCHEDULE: [f64; 4] = [0.1, 0.05, 0.02, 0.01];

/// Extra width refined on each side of a perturbation window.
pub const REFINE_MARGIN: f64 = 0.5;

/// Node spacing inside refined windows.
pub const REFINE_STEP: f64 = 0.02;

/// Relative tolerance on the envelope inequalities.
pub const ENVELOPE_TOLERANCE: f64 = 1e-12;

/// Relative tolerance of the two expressions of (r f̄)²·B̄.
pub const B_IDENTITY_TOLERANCE: f64 = 1e-5;

/// a − 2ε + aε − ε², which must be positive for the construction.
fn window_numerator(a: f64, eps: f64) -> f64 {
    a - 2.0 * eps + a * eps - eps * eps
}

/// Admissible α interval (ε, (1−ε)(a−2ε+aε−ε²)/((a+ε)(1+ε)²)).
pub fn alpha_window(a: f64, eps: f64) -> Option<(f64, f64)> {
    if !(eps > 0.0 && a > 0.0 && a <= 1.0) {
        return None;
    }
    let q = window_numerator(a, eps);
    if q <= 0.0 {
        return None;
    }
    let upper = (1.0 - eps) * q / ((a + eps) * (1.0 + eps).powi(2));
    (upper > eps).then_some((eps, upper))
}

/// Factor κ in the lower bound C̄(r) ≥ κ·C(R) on the perturbation window.
pub fn c_bar_factor(a: f64, eps: f64) -> f64 {
    window_numerator(a, eps) / ((a + eps) * (1.0 + eps).powi(2))
}

/// Base grid with every window `(centre, half_width)` refined and its ends
/// and centre pinned. The centre is pinned as given, not recomputed from the
/// ends, so it is always an exact node.
pub fn grid_with_windows(params: &GridParams, windows: &[(f64, f64)]) -> Result<RadialGrid> {
    let mut grid = RadialGrid::new(params)?;
    let mut pins = params.pins.clone();
    for &(centre, half_width) in windows {
        let (lo, hi) = (centre - half_width, centre + half_width);
        grid.refine(Refinement {
            lo: lo - REFINE_MARGIN,
            hi: hi + REFINE_MARGIN,
            step: REFINE_STEP,
        });
        pins.extend([lo, centre, hi]);
    }
    grid.insert_pins(&pins);
    Ok(grid)
}

/// Grid adapted to the features of `profile` (a no-op refinement for
/// unperturbed profiles).
pub fn grid_for_profile(params: &GridParams, profile: &XiProfile) -> Result<RadialGrid> {
    grid_with_windows(params, &profile.feature_windows())
}

/// Smallest grid radius R > r0 (and R ≥ 3) where ξ'(R) < ε·h(R)·C(R) and
/// the lower-bound estimates for C̄ are active on [R − 1, R + 1].
///
/// "Active" means C(R)·H(R) ≤ 2(a + ε) and C(r)·H(R) ≥ 2(a − 2ε + aε − ε²)/(1 + ε)²
/// for r in the window, which together give C(r) ≥ κ·C(R).
pub fn find_radius(base: &MetricProfile, eps: f64, r0: f64) -> Result<f64> {
    let a = base.profile().limit_a();
    let nodes = base.nodes();
    let r_max = base.grid().r_max();
    let lower = 2.0 * window_numerator(a, eps) / (1.0 + eps).powi(2);
    for (i, &r) in nodes.iter().enumerate() {
        if !(r > r0 && r >= 3.0) {
            continue;
        }
        if r + 1.0 + REFINE_MARGIN > r_max {
            break;
        }
        let c = curvature_at_radius(base, r).c;
        if !(base.dxi()[i] < eps * base.h()[i] * c) {
            continue;
        }
        let big_h = base.big_h()[i];
        if c * big_h > 2.0 * (a + eps) {
            continue;
        }
        let active = (0..=20).all(|k| {
            let t = r - 1.0 + 0.1 * k as f64;
            curvature_at_radius(base, t).c * big_h >= lower
        });
        if active {
            return Ok(r);
        }
    }
    Err(Error::RadiusNotFound { r0, r_max })
}

/// Largest admissible amplitude δ for β·c0 such that h ≤ h̄ ≤ (1 + ε)h.
///
/// h̄/h = exp(β∫φ(t − R)/t dt) beyond the window and is smaller inside it,
/// so the bound is c0·ln(1 + ε)/∫φ(t − R)/t dt.
pub fn envelope_delta(cutoff: &Cutoff, radius: f64, eps: f64) -> Result<f64> {
    let (lo, hi) = cutoff.support();
    let tol = QuadTolerance {
        abs: 1e-14,
        rel: 1e-12,
        max_depth: 30,
    };
    let mass = integrate(&|t: f64| cutoff.eval(t - radius) / t, radius + lo, radius + hi, tol)?;
    Ok(cutoff.c0() * (1.0 + eps).ln() / mass)
}

/// Named inequalities of the construction as they appear in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationItems {
    #[serde(rename = "A_at_R")]
    pub a_at_r: f64,
    #[serde(rename = "AC_min_on_window")]
    pub ac_min_on_window: f64,
    #[serde(rename = "B_min")]
    pub b_min: f64,
    #[serde(rename = "C_min")]
    pub c_min: f64,
    /// max over the grid of h̄/h and H̄/H.
    pub envelope_max_ratio: f64,
}

/// One verified inequality: its worst value and where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub item: String,
    pub passed: bool,
    pub value: f64,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub items: VerificationItems,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl VerificationRecord {
    pub fn check(&self, item: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.item == item)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Turns the first failing item into an error.
    pub fn into_result(self) -> Result<Self> {
        let failure = self.failures().next().map(|c| (c.item.clone(), c.radius.unwrap_or(f64::NAN)));
        match failure {
            Some((item, r)) => Err(Error::Verification { item, r }),
            None => Ok(self),
        }
    }
}

/// Minimum of `q` over the selected points, with its location.
fn arg_min<I: IntoIterator<Item = (f64, f64)>>(points: I) -> (f64, Option<f64>) {
    points.into_iter().fold((f64::INFINITY, None), |(best, at), (r, q)| {
        if q < best {
            (q, Some(r))
        } else {
            (best, at)
        }
    })
}

fn arg_max<I: IntoIterator<Item = (f64, f64)>>(points: I) -> (f64, Option<f64>) {
    let (v, at) = arg_min(points.into_iter().map(|(r, q)| (r, -q)));
    (-v, at)
}

/// Everything produced by one candidate (α, R).
#[derive(Debug, Clone)]
pub struct Construction {
    pub spec: PerturbationSpec,
    pub epsilon: f64,
    pub base_metric: MetricProfile,
    pub metric: MetricProfile,
    pub curvature: Vec<CurvaturePoint>,
    pub record: VerificationRecord,
}

/// Builds ξ̄ for (α, R), resynthesizes the metric on a grid refined around
/// the window and checks every inequality of the construction.
pub fn construct_and_verify(
    base: &XiProfile,
    alpha: f64,
    radius: f64,
    cutoff: Cutoff,
    grid_params: &GridParams,
    eps: f64,
    dim: usize,
) -> Result<Construction> {
    let grid = grid_with_windows(grid_params, &[(radius, 1.0)])?;
    let base_metric = MetricProfile::synthesize(base, &grid, dim)?;
    let i_r = grid
        .index_of(radius)
        .ok_or_else(|| Error::InvalidPerturbation(format!("R = {radius} is not a grid node")))?;
    let base_curv = curvature_profile(&base_metric);
    let spec = PerturbationSpec::new(
        base.clone(),
        alpha,
        radius,
        cutoff,
        base_metric.h()[i_r],
        base_curv[i_r].c,
    );
    let profile = make_perturbed_profile(spec.clone())?;
    let metric = MetricProfile::synthesize(&profile, &grid, dim)?;
    let curvature = curvature_profile(&metric);
    let record = verify(&base_metric, &base_curv, &metric, &curvature, radius, eps);
    Ok(Construction {
        spec,
        epsilon: eps,
        base_metric,
        metric,
        curvature,
        record,
    })
}

fn verify(
    base: &MetricProfile,
    base_curv: &[CurvaturePoint],
    metric: &MetricProfile,
    curv: &[CurvaturePoint],
    radius: f64,
    eps: f64,
) -> VerificationRecord {
    let nodes = metric.nodes();
    let in_window = |r: f64| (r - radius).abs() <= 1.0;
    let i_r = metric.grid().index_of(radius).expect("R is pinned");
    let mut checks = Vec::new();
    let mut push = |item: &str, passed: bool, value: f64, radius: Option<f64>| {
        checks.push(CheckOutcome {
            item: item.into(),
            passed,
            value,
            radius: if passed { None } else { radius },
        });
    };

    let a_at_r = curv[i_r].a;
    push("A_at_R_negative", a_at_r < 0.0, a_at_r, Some(radius));

    let (ac_win, ac_win_r) = arg_min(curv.iter().filter(|p| in_window(p.r)).map(|p| (p.r, p.a + p.c)));
    push("AC_positive_on_window", ac_win > 0.0, ac_win, ac_win_r);

    let (a_out, a_out_r) = arg_min(curv.iter().filter(|p| !in_window(p.r)).map(|p| (p.r, p.a)));
    push("A_positive_outside_window", a_out > 0.0, a_out, a_out_r);

    let (ac_all, ac_all_r) = arg_min(curv.iter().map(|p| (p.r, p.a + p.c)));
    push("AC_positive_full_grid", ac_all > 0.0, ac_all, ac_all_r);

    let (b_min, b_r) = arg_min(curv.iter().map(|p| (p.r, p.b)));
    push("B_positive", b_min > 0.0, b_min, b_r);

    let (c_min, c_r) = arg_min(curv.iter().map(|p| (p.r, p.c)));
    push("C_positive", c_min > 0.0, c_min, c_r);

    let envelope = |bar: &[f64], plain: &[f64]| {
        let ratios = || nodes.iter().enumerate().skip(1).map(move |(i, &r)| (r, bar[i] / plain[i]));
        (arg_min(ratios()), arg_max(ratios()))
    };
    let upper = (1.0 + eps) * (1.0 + ENVELOPE_TOLERANCE);
    let lower = 1.0 - ENVELOPE_TOLERANCE;
    let ((h_lo, h_lo_r), (h_hi, h_hi_r)) = envelope(metric.h(), base.h());
    let h_ok = h_lo >= lower && h_hi <= upper;
    push("h_envelope", h_ok, h_hi, if h_lo < lower { h_lo_r } else { h_hi_r });
    let ((bh_lo, bh_lo_r), (bh_hi, bh_hi_r)) = envelope(metric.big_h(), base.big_h());
    let bh_ok = bh_lo >= lower && bh_hi <= upper;
    push("H_envelope", bh_ok, bh_hi, if bh_lo < lower { bh_lo_r } else { bh_hi_r });

    // (r f̄)²·B̄ = r h̄ − (1 − ξ̄)H̄ against ∫₀^r (ξ̄(r) − ξ̄(t)) h̄(t) dt = ξ̄H̄ − K̄.
    let (b_id, b_id_r) = arg_max((1..nodes.len()).map(|i| {
        let (r, xi, h, big_h, k) = (nodes[i], metric.xi()[i], metric.h()[i], metric.big_h()[i], metric.xi_h()[i]);
        let direct = r * h - (1.0 - xi) * big_h;
        let integral = xi * big_h - k;
        let scale = direct.abs().max(integral.abs()).max(1e-300);
        (r, (direct - integral).abs() / scale)
    }));
    push("B_numerator_identity", b_id <= B_IDENTITY_TOLERANCE, b_id, b_id_r);

    let a = base.profile().limit_a();
    let bound = c_bar_factor(a, eps) * base_curv[i_r].c;
    let (c_ratio, c_ratio_r) = arg_min(curv.iter().filter(|p| in_window(p.r)).map(|p| (p.r, p.c / bound)));
    push("C_lower_bound", bound > 0.0 && c_ratio >= 1.0, c_ratio, c_ratio_r);

    let passed = checks.iter().all(|c| c.passed);
    VerificationRecord {
        items: VerificationItems {
            a_at_r,
            ac_min_on_window: ac_win,
            b_min,
            c_min,
            envelope_max_ratio: h_hi.max(bh_hi),
        },
        checks,
        passed,
    }
}

/// Parameters of [`search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub epsilons: Vec<f64>,
    pub r0: f64,
    pub grid: GridParams,
    pub dim: usize,
    /// Fixed α instead of the window midpoint.
    pub alpha_override: Option<f64>,
    /// Radii tried per ε: R from r0, then from 2R, and so on.
    pub radius_attempts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let grid = GridParams::with_r_max(1e4);
        Self {
            epsilons: DEFAULT_EPSILON_SCHEDULE.to_vec(),
            r0: 10.0,
            grid,
            dim: 2,
            alpha_override: None,
            radius_attempts: 4,
        }
    }
}

/// One candidate considered by the search, in evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchAttempt {
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub radius: Option<f64>,
    pub outcome: String,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub construction: Construction,
    pub alpha_window: (f64, f64),
    pub delta: f64,
    pub attempts: Vec<SearchAttempt>,
}

/// Runs the ε schedule until a candidate passes every check.
///
/// Candidates are visited in a fixed order, so the result is reproducible.
pub fn search(base: &XiProfile, cutoff: Cutoff, config: &SearchConfig) -> Result<SearchResult> {
    let grid = RadialGrid::new(&config.grid)?;
    let base_metric = MetricProfile::synthesize(base, &grid, config.dim)?;
    let a = base.limit_a();
    let mut attempts = Vec::new();
    let mut last_record = None;
    for &eps in &config.epsilons {
        let Some(window) = alpha_window(a, eps) else {
            attempts.push(SearchAttempt {
                epsilon: eps,
                alpha: None,
                radius: None,
                outcome: "empty alpha window".into(),
            });
            continue;
        };
        let alpha = config.alpha_override.unwrap_or(0.5 * (window.0 + window.1));
        let mut start = config.r0;
        for _ in 0..config.radius_attempts.max(1) {
            let radius = match find_radius(&base_metric, eps, start) {
                Ok(r) => r,
                Err(e) => {
                    attempts.push(SearchAttempt {
                        epsilon: eps,
                        alpha: Some(alpha),
                        radius: None,
                        outcome: e.to_string(),
                    });
                    break;
                }
            };
            start = 2.0 * radius;
            let delta = envelope_delta(&cutoff, radius, eps)?;
            let c = curvature_at_radius(&base_metric, radius).c;
            let beta = alpha * base_metric.sample(radius).h * c;
            if beta * cutoff.c0() > delta {
                attempts.push(SearchAttempt {
                    epsilon: eps,
                    alpha: Some(alpha),
                    radius: Some(radius),
                    outcome: format!("beta*c0 = {:e} exceeds delta = {delta:e}", beta * cutoff.c0()),
                });
                continue;
            }
            let construction = construct_and_verify(base, alpha, radius, cutoff, &config.grid, eps, config.dim)?;
            let passed = construction.record.passed;
            attempts.push(SearchAttempt {
                epsilon: eps,
                alpha: Some(alpha),
                radius: Some(radius),
                outcome: if passed {
                    "passed".into()
                } else {
                    let names: Vec<&str> = construction.record.failures().map(|c| c.item.as_str()).collect();
                    format!("failed: {}", names.join(", "))
                },
            });
            if passed {
                return Ok(SearchResult {
                    construction,
                    alpha_window: window,
                    delta,
                    attempts,
                });
            }
            last_record = Some(Box::new(construction.record));
        }
    }
    Err(Error::SearchExhausted {
        attempts: attempts.len(),
        last_record,
    })
}
