//! Asymptotic checks on synthesized metrics: the large-r limits of the
//! profile quantities, and ball averages of the scalar curvature together
//! with the decay tests for a curvature gap.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_at_radius, CurvaturePoint, SMALL_R};
use crate::error::Result;
use crate::quadrature::{aitken_limit, ls_slope};
use crate::synthesis::{classify_growth, CompletenessVerdict, MetricProfile};

/// Smallest allowed increment of rh − (1 − ξ)H between neighbouring nodes.
pub const MONOTONE_TOLERANCE: f64 = -1e-12;

/// Relative tolerance of C·H = 2(1 − rh/H) at every node.
pub const CH_IDENTITY_TOLERANCE: f64 = 1e-6;

/// Slack on the doubling bound V(ρ)/V(ρ/2) ≤ 2^{2n}.
pub const DOUBLING_SLACK: f64 = 1e-3;

/// A fitted power of ρ²k above this value means ρ²k does not decay.
pub const DECAY_EXPONENT_TOLERANCE: f64 = -0.05;

/// Samples of the geodesic-radius grid per doubling.
pub const RHO_PER_OCTAVE: usize = 8;

/// First geodesic radius of the ball-average grid.
pub const RHO_START: f64 = 1.0 / 16.0;

/// Powers of two from 1 up to `r_max`.
pub fn dyadic_radii(r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 1.0;
    while r <= r_max {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Estimated large-r limit of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub quantity: String,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Aitken/Richardson extrapolation of the last three dyadic values.
    pub extrapolated: f64,
    pub claimed: f64,
    /// |extrapolated − claimed| / max(|claimed|, 1e-30).
    pub deviation: f64,
    pub abs_deviation: f64,
    pub value_at_r_max: f64,
}

impl LimitEstimate {
    fn new(quantity: &str, radii: &[f64], values: Vec<f64>, claimed: f64, at_max: f64) -> Self {
        let extrapolated = aitken_limit(&values);
        let abs_deviation = (extrapolated - claimed).abs();
        Self {
            quantity: quantity.into(),
            radii: radii.to_vec(),
            values,
            extrapolated,
            claimed,
            deviation: abs_deviation / claimed.abs().max(1e-30),
            abs_deviation,
            value_at_r_max: at_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub holds: bool,
    pub min_increment: f64,
    pub first_violation_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsReport {
    pub a: f64,
    pub limits: Vec<LimitEstimate>,
    /// Increments of rh − (1 − ξ)H.
    pub monotonicity: MonotonicityCheck,
    /// Largest relative gap between C·H and 2(1 − rh/H).
    pub ch_identity_max_deviation: f64,
    pub ch_identity_holds: bool,
    pub big_h_growth_exponent: f64,
    pub big_h_diverging: bool,
}

fn b_numerator(metric: &MetricProfile, i: usize) -> f64 {
    let (r, xi, h, big_h) = (metric.nodes()[i], metric.xi()[i], metric.h()[i], metric.big_h()[i]);
    if r < SMALL_R {
        xi * big_h - metric.xi_h()[i]
    } else {
        r * h - (1.0 - xi) * big_h
    }
}

/// Limits rh/H → 1 − a, hC → 0, C·H → 2a (and h → 0 when a > 0), the
/// monotonicity of rh − (1 − ξ)H, and the divergence of H.
pub fn verify_limits(metric: &MetricProfile, curv: &[CurvaturePoint]) -> LimitsReport {
    let a = metric.profile().limit_a();
    let r_max = metric.grid().r_max();
    let radii = dyadic_radii(r_max);
    let at = |r: f64| {
        let s = metric.sample(r);
        let c = curvature_at_radius(metric, r).c;
        (s, c)
    };
    let samples: Vec<_> = radii.iter().map(|&r| at(r)).collect();
    let (last, c_last) = at(r_max);

    let rh_over_h = |r: f64, h: f64, big_h: f64| r * h / big_h;
    let mut limits = vec![
        LimitEstimate::new(
            "rh_over_H",
            &radii,
            samples.iter().map(|(s, _)| rh_over_h(s.r, s.h, s.big_h)).collect(),
            1.0 - a,
            rh_over_h(r_max, last.h, last.big_h),
        ),
        LimitEstimate::new(
            "hC",
            &radii,
            samples.iter().map(|(s, c)| s.h * c).collect(),
            0.0,
            last.h * c_last,
        ),
        LimitEstimate::new(
            "CH",
            &radii,
            samples.iter().map(|(s, c)| c * s.big_h).collect(),
            2.0 * a,
            c_last * last.big_h,
        ),
    ];
    if a > 0.0 {
        limits.push(LimitEstimate::new(
            "h",
            &radii,
            samples.iter().map(|(s, _)| s.h).collect(),
            0.0,
            last.h,
        ));
    }

    let nodes = metric.nodes();
    let mut min_increment = f64::INFINITY;
    let mut first_violation_r = None;
    for i in 1..nodes.len() {
        let d = b_numerator(metric, i) - b_numerator(metric, i - 1);
        min_increment = min_increment.min(d);
        if d < MONOTONE_TOLERANCE && first_violation_r.is_none() {
            first_violation_r = Some(nodes[i]);
        }
    }

    let ch_identity_max_deviation = curv
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, p)| {
            let big_h = metric.big_h()[i];
            let lhs = p.c * big_h;
            let rhs = 2.0 * (1.0 - nodes[i] * metric.h()[i] / big_h);
            (lhs - rhs).abs() / lhs.abs().max(1e-30)
        })
        .fold(0.0, f64::max);

    let big_h_dyadic: Vec<f64> = samples.iter().map(|(s, _)| s.big_h).collect();
    let (big_h_growth_exponent, _, verdict) = classify_growth(&radii, &big_h_dyadic);

    LimitsReport {
        a,
        limits,
        monotonicity: MonotonicityCheck {
            holds: first_violation_r.is_none(),
            min_increment,
            first_violation_r,
        },
        ch_identity_max_deviation,
        ch_identity_holds: ch_identity_max_deviation <= CH_IDENTITY_TOLERANCE,
        big_h_growth_exponent,
        big_h_diverging: verdict == CompletenessVerdict::Diverging,
    }
}

/// Ball averages of the scalar curvature on a grid of geodesic radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallAverages {
    pub dim: usize,
    pub rho: Vec<f64>,
    /// r = |z|² on the geodesic sphere of radius ρ.
    pub radius: Vec<f64>,
    /// Average of |S| over the geodesic ball.
    pub k: Vec<f64>,
    pub volume: Vec<f64>,
    /// J(ρ) = ∫₀^ρ s·k(s) ds.
    pub j: Vec<f64>,
    /// T(ρ) = ρ·∫_{2ρ}^{ρ_max} k(s) ds; zero once 2ρ passes ρ_max.
    pub t: Vec<f64>,
    /// V(ρ)/V(ρ/2).
    pub doubling_ratio: Vec<f64>,
    pub rho_max: f64,
    /// True when S < 0 somewhere and |S| was averaged instead.
    pub scal_negative: bool,
    /// Fitted decay power p in k ~ s^{−p} over the last octave.
    pub tail_exponent: f64,
    /// ∫_{ρ_max}^∞ k estimated from the fitted power; `None` when p ≤ 1.
    pub tail_mass: Option<f64>,
}

impl BallAverages {
    /// J at an arbitrary s ≤ ρ_max, consistent with the trapezoid rule in ln s.
    pub fn j_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let rho0 = self.rho[0];
        if s <= rho0 {
            return 0.5 * self.k[0] * s * s;
        }
        let i = crate::quadrature::locate(&self.rho, s.min(self.rho_max));
        let (s0, s1) = (self.rho[i], self.rho[i + 1]);
        let (y0, y1) = (s0 * s0 * self.k[i], s1 * s1 * self.k[i + 1]);
        let (l0, l1, l) = (s0.ln(), s1.ln(), s.ln());
        let ys = y0 + (y1 - y0) * (l - l0) / (l1 - l0);
        self.j[i] + 0.5 * (l - l0) * (y0 + ys)
    }
}

/// ρ_j = ρ_start·2^{j/8}, exact at every whole octave.
fn rho_grid(rho_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for j in 0.. {
        let octave = (j / RHO_PER_OCTAVE) as i32;
        let frac = (j % RHO_PER_OCTAVE) as f64 / RHO_PER_OCTAVE as f64;
        let rho = RHO_START * 2f64.powi(octave) * if frac == 0.0 { 1.0 } else { 2f64.powf(frac) };
        if rho > rho_max {
            break;
        }
        out.push(rho);
    }
    out
}

/// k(ρ) = ∫ |S| dμ / V over geodesic balls, with J, T and doubling ratios.
///
/// The radial weight is H^{n−1}h dr (up to the constant πⁿ/(n−1)!), whose
/// integral is Hⁿ/n.
pub fn ball_average_scal(metric: &MetricProfile, curv: &[CurvaturePoint]) -> Result<BallAverages> {
    let n = metric.dim();
    let nodes = metric.nodes();
    let weight = |big_h: f64, h: f64| big_h.powi(n as i32 - 1) * h;
    let scal_negative = curv.iter().any(|p| p.scal < 0.0);
    let g: Vec<f64> = (0..nodes.len())
        .map(|i| curv[i].scal.abs() * weight(metric.big_h()[i], metric.h()[i]))
        .collect();
    let mut cum = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        cum[i] = cum[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (g[i] + g[i - 1]);
    }

    let rho_max = *metric.s_geo().last().expect("nonempty");
    let rho = rho_grid(rho_max);
    let mut radius = Vec::with_capacity(rho.len());
    let mut k = Vec::with_capacity(rho.len());
    let mut volume = Vec::with_capacity(rho.len());
    let mut doubling_ratio = Vec::with_capacity(rho.len());
    for &p in &rho {
        let r = metric.radius_at_geodesic(p)?;
        let s = metric.sample(r);
        let i = crate::quadrature::locate(nodes, r);
        let g_r = curvature_at_radius(metric, r).scal.abs() * weight(s.big_h, s.h);
        let numer = cum[i] + 0.5 * (r - nodes[i]) * (g[i] + g_r);
        let denom = s.big_h.powi(n as i32) / n as f64;
        k.push(if denom > 0.0 { numer / denom } else { curv[0].scal.abs() });
        let v = metric.ball_volume(r);
        let v_half = metric.ball_volume(metric.radius_at_geodesic(0.5 * p)?);
        radius.push(r);
        volume.push(v);
        doubling_ratio.push(v / v_half);
    }

    // J by the trapezoid rule in ln s on s²k, starting from k(ρ₀)ρ₀²/2.
    let mut j = Vec::with_capacity(rho.len());
    let mut acc = 0.5 * k[0] * rho[0] * rho[0];
    j.push(acc);
    for i in 1..rho.len() {
        let y0 = rho[i - 1] * rho[i - 1] * k[i - 1];
        let y1 = rho[i] * rho[i] * k[i];
        acc += 0.5 * (rho[i] / rho[i - 1]).ln() * (y0 + y1);
        j.push(acc);
    }

    // Tail ∫_{s}^{ρ_max} k on s·k in ln s.
    let mut tail = vec![0.0; rho.len()];
    for i in (0..rho.len().saturating_sub(1)).rev() {
        let y0 = rho[i] * k[i];
        let y1 = rho[i + 1] * k[i + 1];
        tail[i] = tail[i + 1] + 0.5 * (rho[i + 1] / rho[i]).ln() * (y0 + y1);
    }
    let tail_from = |s: f64| -> f64 {
        if s >= rho_max || rho.len() < 2 {
            return 0.0;
        }
        let i = crate::quadrature::locate(&rho, s);
        let (s0, s1) = (rho[i], rho[i + 1]);
        let (l0, l1, l) = (s0.ln(), s1.ln(), s.ln());
        let (y0, y1) = (s0 * k[i], s1 * k[i + 1]);
        let ys = y0 + (y1 - y0) * (l - l0) / (l1 - l0);
        tail[i + 1] + 0.5 * (l1 - l) * (ys + y1)
    };
    let t: Vec<f64> = rho.iter().map(|&p| p * tail_from(2.0 * p)).collect();

    let m = rho.len();
    let lo = m.saturating_sub(RHO_PER_OCTAVE + 1);
    let xs: Vec<f64> = rho[lo..].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = k[lo..].iter().map(|v| v.max(1e-300).ln()).collect();
    let all_zero = k.iter().all(|v| *v == 0.0);
    let tail_exponent = if all_zero { f64::INFINITY } else { -ls_slope(&xs, &ys) };
    let tail_mass = if all_zero {
        Some(0.0)
    } else if tail_exponent > 1.0 {
        Some(k[m - 1] * rho[m - 1] / (tail_exponent - 1.0))
    } else {
        None
    };

    Ok(BallAverages {
        dim: n,
        rho,
        radius,
        k,
        volume,
        j,
        t,
        doubling_ratio,
        rho_max,
        scal_negative,
        tail_exponent,
        tail_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapVerdict {
    /// k vanishes identically.
    Flat,
    /// ρ²k does not decay, so k is not o(ρ^{−2}) and the metric is not flat.
    DecayHypothesisViolated,
    /// ρ²k decays on the tested range; no conclusion on the grid.
    Inconclusive,
}

/// Least-squares power of `ys` against ρ over samples with ρ in `[lo, hi]`.
pub fn fitted_power(rho: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    let (xs, ls): (Vec<f64>, Vec<f64>) = rho
        .iter()
        .zip(ys)
        .filter(|(r, y)| **r >= lo && **r <= hi && **y > 0.0)
        .map(|(r, y)| (r.ln(), y.ln()))
        .unzip();
    ls_slope(&xs, &ls)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub verdict: GapVerdict,
    /// Power of k against ρ over ρ ≥ 1.
    pub k_exponent: f64,
    /// Power of ρ²k over the upper half (in ln ρ) of the tested range.
    pub rho2k_exponent: f64,
    pub rho2k_sup: f64,
    pub rho2k_last: f64,
    /// ρ²k does not grow on the upper half of the range.
    pub rho2k_bounded: bool,
    pub j_over_log_last: f64,
    pub j_over_log_exponent: f64,
    pub j_over_log_bounded: bool,
    /// (ρ/2)²k(ρ/2) ≤ (2/3)·V(ρ)/V(ρ/2)·J(ρ) at every dyadic ρ.
    pub implication_holds: bool,
    pub implication_max_ratio: f64,
    pub doubling_max: f64,
    pub doubling_bound: f64,
    /// Some doubling ratio exceeds 2^{2n}(1 + 1e-3) although Ric ≥ 0 holds.
    pub doubling_flag: bool,
}

/// Decay tests for a curvature gap on one set of ball averages.
///
/// `ric_nonneg` states whether Ric ≥ 0 holds on the grid; only then is the
/// doubling bound expected.
pub fn gap_hypothesis_report(ball: &BallAverages, ric_nonneg: bool) -> GapReport {
    let rho = &ball.rho;
    let rho2k: Vec<f64> = rho.iter().zip(&ball.k).map(|(r, k)| r * r * k).collect();
    let flat = ball.k.iter().all(|k| k.abs() <= 1e-12);
    let upper_lo = if ball.rho_max > 1.0 { ball.rho_max.sqrt() } else { RHO_START };
    let k_exponent = fitted_power(rho, &ball.k, 1.0, ball.rho_max);
    let rho2k_exponent = fitted_power(rho, &rho2k, upper_lo, ball.rho_max);
    let rho2k_sup = rho2k.iter().copied().fold(0.0, f64::max);
    let rho2k_last = rho2k.last().copied().unwrap_or(0.0);

    let j_over_log: Vec<(f64, f64)> = rho
        .iter()
        .zip(&ball.j)
        .filter(|(r, _)| **r >= 2.0)
        .map(|(r, j)| (*r, j / r.ln()))
        .collect();
    let (jr, jv): (Vec<f64>, Vec<f64>) = j_over_log.iter().copied().unzip();
    let j_over_log_exponent = fitted_power(&jr, &jv, upper_lo, ball.rho_max);
    let j_over_log_last = jv.last().copied().unwrap_or(0.0);

    let mut implication_holds = true;
    let mut implication_max_ratio: f64 = 0.0;
    for (i, &p) in rho.iter().enumerate() {
        if i < RHO_PER_OCTAVE || (i % RHO_PER_OCTAVE) != 0 {
            continue;
        }
        let half = i - RHO_PER_OCTAVE;
        let lhs = rho[half] * rho[half] * ball.k[half];
        let rhs = (2.0 / 3.0) * ball.doubling_ratio[i] * ball.j[i];
        if lhs > 0.0 {
            implication_max_ratio = implication_max_ratio.max(lhs / rhs);
        }
        if lhs > rhs * (1.0 + 1e-6) {
            implication_holds = false;
        }
        let _ = p;
    }

    let doubling_bound = 4f64.powi(ball.dim as i32);
    let doubling_max = ball.doubling_ratio.iter().copied().fold(0.0, f64::max);
    let doubling_flag = ric_nonneg && doubling_max > doubling_bound * (1.0 + DOUBLING_SLACK);

    let rho2k_bounded = flat || !(rho2k_exponent > -DECAY_EXPONENT_TOLERANCE);
    let j_over_log_bounded = flat || !(j_over_log_exponent > -DECAY_EXPONENT_TOLERANCE);
    let verdict = if flat {
        GapVerdict::Flat
    } else if rho2k_exponent >= DECAY_EXPONENT_TOLERANCE {
        GapVerdict::DecayHypothesisViolated
    } else {
        GapVerdict::Inconclusive
    };
    GapReport {
        verdict,
        k_exponent,
        rho2k_exponent,
        rho2k_sup,
        rho2k_last,
        rho2k_bounded,
        j_over_log_last,
        j_over_log_exponent,
        j_over_log_bounded,
        implication_holds,
        implication_max_ratio,
        doubling_max,
        doubling_bound,
        doubling_flag,
    }
}

/// The three bracket terms T(ρ), J(2ρ) and J(ερ) at one dyadic radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlBoundTerms {
    pub rho: f64,
    pub tail: f64,
    pub j_double: f64,
    pub j_eps: f64,
    /// 2ρ lies beyond ρ_max, so the tail is empty and J(2ρ) is not sampled.
    pub truncated: bool,
}

/// Bracket terms at every dyadic ρ of the ball-average grid.
pub fn pl_bound_terms(ball: &BallAverages, eps: f64) -> Vec<PlBoundTerms> {
    ball.rho
        .iter()
        .enumerate()
        .filter(|(i, _)| i % RHO_PER_OCTAVE == 0)
        .map(|(i, &p)| {
            let truncated = 2.0 * p > ball.rho_max;
            PlBoundTerms {
                rho: p,
                tail: ball.t[i],
                j_double: if truncated { f64::NAN } else { ball.j_at(2.0 * p) },
                j_eps: ball.j_at(eps * p),
                truncated,
            }
        })
        .collect()
}
