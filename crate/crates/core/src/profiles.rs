//! Generating profiles ξ(r), the canonical cutoff and perturbed profiles.
//!
//! A metric is determined by a single function ξ on [0, ∞) with ξ(0) = 0.
//! Every other module only calls [`XiProfile::eval`], [`XiProfile::eval_deriv`]
//! and [`XiProfile::limit_a`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadTolerance};

/// Which construction produced a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    AnalyticFamily,
    Tabulated,
    Perturbed,
}

/// Description of a profile family as it appears in configs and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProfileFamily {
    /// ξ ≡ 0, the flat metric.
    Zero,
    /// ξ(r) = a·r / (1 + r).
    Rational { a: f64 },
    /// Monotone cubic through `(r, xi)` samples.
    Tabulated { r: Vec<f64>, xi: Vec<f64> },
}

impl ProfileFamily {
    /// Family description of a non-perturbed profile.
    pub fn from_profile(p: &XiProfile) -> Option<Self> {
        match p {
            XiProfile::Zero => Some(ProfileFamily::Zero),
            XiProfile::Rational { a } => Some(ProfileFamily::Rational { a: *a }),
            XiProfile::Tabulated(t) => {
                let (r, xi) = t.points();
                Some(ProfileFamily::Tabulated {
                    r: r.to_vec(),
                    xi: xi.to_vec(),
                })
            }
            XiProfile::Perturbed(_) => None,
        }
    }
}

/// Shape-preserving (Fritsch-Carlson) piecewise cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidProfile("table columns differ in length".into()));
        }
        if x.len() < 2 {
            return Err(Error::InvalidProfile("table needs at least two rows".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile(
                "table radii must be finite and strictly increasing".into(),
            ));
        }
        let n = x.len();
        let hs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / hs[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * hs[k] + hs[k - 1];
                    let w2 = hs[k] + 2.0 * hs[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = one_sided_slope(hs[0], hs[1], delta[0], delta[1]);
            d[n - 1] = one_sided_slope(hs[n - 2], hs[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    fn segment(&self, t: f64) -> usize {
        crate::quadrature::locate(&self.x, t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let last = self.x.len() - 1;
        if t >= self.x[last] {
            return self.y[last];
        }
        let i = self.segment(t);
        crate::quadrature::hermite(
            self.x[i],
            self.x[i + 1],
            self.y[i],
            self.y[i + 1],
            self.d[i],
            self.d[i + 1],
            t,
        )
    }

    pub fn eval_deriv(&self, t: f64) -> f64 {
        let last = self.x.len() - 1;
        if t > self.x[last] {
            return 0.0;
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let dh00 = (6.0 * s * s - 6.0 * s) / h;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s * s + 6.0 * s) / h;
        let dh11 = 3.0 * s * s - 2.0 * s;
        dh00 * self.y[i] + dh10 * self.d[i] + dh01 * self.y[i + 1] + dh11 * self.d[i + 1]
    }

    pub fn first_slope(&self) -> f64 {
        self.d[0]
    }

    pub fn last_value(&self) -> f64 {
        self.y[self.y.len() - 1]
    }

    pub fn points(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }
}

// Three-point one-sided endpoint slope, limited to preserve monotonicity.
fn one_sided_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Smooth cutoff φ with 0 ≤ φ ≤ c0, support inside [-1, 1], φ'(0) = 1 and
/// |φ'| ≤ 1.
///
/// φ' is a unit bump centred at 0 minus a disjoint unit bump centred at
/// `offset`, both of half-width `width`; φ itself is the running integral,
/// so it rises, plateaus at c0 and returns to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    width: f64,
    offset: f64,
    bump_mass: f64,
    c0: f64,
}

const CUTOFF_WIDTH: f64 = 0.3;
const CUTOFF_OFFSET: f64 = 0.65;

/// exp(1 - 1/(1 - x²)) on (-1, 1), zero outside; equals 1 at the origin.
pub fn unit_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

fn bump_tol() -> QuadTolerance {
    QuadTolerance {
        abs: 1e-16,
        rel: 1e-15,
        max_depth: 30,
    }
}

fn bump_integral(a: f64, b: f64) -> f64 {
    integrate(&unit_bump, a, b, bump_tol()).expect("bump is smooth on a compact interval")
}

/// Builds the canonical cutoff; c0 is located numerically.
pub fn make_bump_cutoff() -> Cutoff {
    let mass = bump_integral(-1.0, 1.0);
    let mut cut = Cutoff {
        width: CUTOFF_WIDTH,
        offset: CUTOFF_OFFSET,
        bump_mass: mass,
        c0: 0.0,
    };
    let lo = -cut.width;
    let hi = cut.offset + cut.width;
    let steps = 2000;
    let mut best = 0.0f64;
    for i in 0..=steps {
        let t = lo + (hi - lo) * i as f64 / steps as f64;
        best = best.max(cut.eval(t));
    }
    cut.c0 = best;
    cut
}

impl Cutoff {
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Support `[lo, hi]` of φ; always a subset of [-1, 1].
    pub fn support(&self) -> (f64, f64) {
        (-self.width, self.offset + self.width)
    }

    // ∫_{-1}^{x} unit_bump
    fn bump_cdf(&self, x: f64) -> f64 {
        if x <= -1.0 {
            0.0
        } else if x >= 1.0 {
            self.bump_mass
        } else if x <= 0.0 {
            bump_integral(-1.0, x)
        } else {
            self.bump_mass - bump_integral(x, 1.0)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo || t >= hi {
            return 0.0;
        }
        let w = self.width;
        let v = w * (self.bump_cdf(t / w) - self.bump_cdf((t - self.offset) / w));
        v.max(0.0)
    }

    pub fn eval_deriv(&self, t: f64) -> f64 {
        let w = self.width;
        unit_bump(t / w) - unit_bump((t - self.offset) / w)
    }
}

/// Parameters of the compactly supported perturbation
/// ξ̄(r) = ξ(r) − β·φ(r − R), β = α·h(R)·C(R).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub base: XiProfile,
    pub alpha: f64,
    pub radius: f64,
    pub cutoff: Cutoff,
    pub beta: f64,
}

impl PerturbationSpec {
    /// `h_at_r` and `c_at_r` are the base metric's h(R) and C(R).
    pub fn new(
        base: XiProfile,
        alpha: f64,
        radius: f64,
        cutoff: Cutoff,
        h_at_r: f64,
        c_at_r: f64,
    ) -> Self {
        let beta = alpha * h_at_r * c_at_r;
        Self {
            base,
            alpha,
            radius,
            cutoff,
            beta,
        }
    }

    /// Closed interval outside of which ξ̄ equals ξ.
    pub fn window(&self) -> (f64, f64) {
        (self.radius - 1.0, self.radius + 1.0)
    }
}

/// A generating profile. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum XiProfile {
    Zero,
    Rational { a: f64 },
    Tabulated(MonotoneCubic),
    Perturbed(Box<PerturbationSpec>),
}

impl XiProfile {
    pub fn kind(&self) -> ProfileKind {
        match self {
            XiProfile::Zero | XiProfile::Rational { .. } => ProfileKind::AnalyticFamily,
            XiProfile::Tabulated(_) => ProfileKind::Tabulated,
            XiProfile::Perturbed(_) => ProfileKind::Perturbed,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            XiProfile::Zero => 0.0,
            XiProfile::Rational { a } => a * r / (1.0 + r),
            XiProfile::Tabulated(t) => t.eval(r),
            XiProfile::Perturbed(p) => {
                let base = p.base.eval(r);
                if (r - p.radius).abs() >= 1.0 {
                    base
                } else {
                    base - p.beta * p.cutoff.eval(r - p.radius)
                }
            }
        }
    }

    pub fn eval_deriv(&self, r: f64) -> f64 {
        match self {
            XiProfile::Zero => 0.0,
            XiProfile::Rational { a } => a / ((1.0 + r) * (1.0 + r)),
            XiProfile::Tabulated(t) => {
                if r == 0.0 {
                    t.first_slope()
                } else {
                    t.eval_deriv(r)
                }
            }
            XiProfile::Perturbed(p) => {
                let base = p.base.eval_deriv(r);
                if (r - p.radius).abs() >= 1.0 {
                    base
                } else {
                    base - p.beta * p.cutoff.eval_deriv(r - p.radius)
                }
            }
        }
    }

    /// ξ(s)/s, continuously extended by ξ'(0) at s = 0.
    pub fn ratio(&self, s: f64) -> f64 {
        match self {
            XiProfile::Zero => 0.0,
            XiProfile::Rational { a } => a / (1.0 + s),
            XiProfile::Perturbed(p) if (s - p.radius).abs() >= 1.0 => p.base.ratio(s),
            _ if s == 0.0 => self.eval_deriv(0.0),
            _ => self.eval(s) / s,
        }
    }

    /// a = lim ξ(r) as r → ∞.
    pub fn limit_a(&self) -> f64 {
        match self {
            XiProfile::Zero => 0.0,
            XiProfile::Rational { a } => *a,
            XiProfile::Tabulated(t) => t.last_value(),
            XiProfile::Perturbed(p) => p.base.limit_a(),
        }
    }

    /// Windows `(centre, half_width)` where the grid should be refined to
    /// resolve the profile.
    pub fn feature_windows(&self) -> Vec<(f64, f64)> {
        match self {
            XiProfile::Perturbed(p) => {
                let mut w = p.base.feature_windows();
                w.push((p.radius, 1.0));
                w
            }
            _ => Vec::new(),
        }
    }
}

/// Builds a profile from a family description.
pub fn make_analytic_profile(family: &ProfileFamily) -> Result<XiProfile> {
    match family {
        ProfileFamily::Zero => Ok(XiProfile::Zero),
        ProfileFamily::Rational { a } => {
            if !(*a > 0.0 && *a <= 1.0) {
                return Err(Error::InvalidProfile(format!(
                    "rational family needs a in (0, 1], got {a}"
                )));
            }
            Ok(XiProfile::Rational { a: *a })
        }
        ProfileFamily::Tabulated { r, xi } => {
            if r.first() != Some(&0.0) || xi.first() != Some(&0.0) {
                return Err(Error::InvalidProfile(
                    "tabulated profile must start at (0, 0)".into(),
                ));
            }
            if let Some((i, v)) = xi.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidProfile(format!(
                    "tabulated xi = {v} at r = {} is outside [0, 1]",
                    r[i]
                )));
            }
            Ok(XiProfile::Tabulated(MonotoneCubic::new(r.clone(), xi.clone())?))
        }
    }
}

/// Builds ξ̄ = ξ − β·φ(· − R).
pub fn make_perturbed_profile(spec: PerturbationSpec) -> Result<XiProfile> {
    if !(spec.radius >= 3.0) {
        return Err(Error::InvalidPerturbation(format!(
            "center R = {} must be at least 3",
            spec.radius
        )));
    }
    if !(spec.beta >= 0.0) || !spec.beta.is_finite() {
        return Err(Error::InvalidPerturbation(format!(
            "amplitude beta = {} must be finite and nonnegative",
            spec.beta
        )));
    }
    let (lo, hi) = spec.window();
    let amplitude = spec.beta * spec.cutoff.c0();
    let samples = 2000;
    for i in 0..=samples {
        let r = lo + (hi - lo) * i as f64 / samples as f64;
        let xi = spec.base.eval(r);
        if spec.beta > 0.0 && amplitude >= xi {
            return Err(Error::InvalidPerturbation(format!(
                "beta*c0 = {amplitude} reaches xi({r}) = {xi}; perturbed profile would leave (0, 1)"
            )));
        }
    }
    Ok(XiProfile::Perturbed(Box::new(spec)))
}

/// Outcome of one grid property check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub holds: bool,
    pub first_violation_r: Option<f64>,
}

impl PropertyCheck {
    fn scan<I: IntoIterator<Item = (f64, bool)>>(points: I) -> Self {
        for (r, ok) in points {
            if !ok {
                return Self {
                    holds: false,
                    first_violation_r: Some(r),
                };
            }
        }
        Self {
            holds: true,
            first_violation_r: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// ξ(0) = 0.
    pub origin_zero: bool,
    /// 0 < ξ on the grid interior.
    pub positive: PropertyCheck,
    /// ξ < 1 on the grid interior.
    pub below_one: PropertyCheck,
    /// 0 ≤ ξ ≤ 1 and finite everywhere on the grid.
    pub closed_unit: PropertyCheck,
    /// ξ' > 0 on the grid.
    pub increasing: PropertyCheck,
    /// ξ ≡ 0 on the grid: the flat metric, not an error.
    pub degenerate_flat: bool,
}

impl ValidationReport {
    /// 0 < ξ < 1 on the interior with ξ(0) = 0; the completeness class.
    pub fn admissible(&self) -> bool {
        self.origin_zero && self.positive.holds && self.below_one.holds
    }

    /// Admissible and strictly increasing.
    pub fn positive_bisectional(&self) -> bool {
        self.admissible() && self.increasing.holds
    }

    /// Enough to run the synthesis pipeline (h nonincreasing, f > 0).
    pub fn synthesizable(&self) -> bool {
        self.origin_zero && self.closed_unit.holds
    }
}

/// Checks a profile on the given grid nodes (strictly increasing, from 0).
pub fn validate_profile(p: &XiProfile, grid: &[f64]) -> ValidationReport {
    let origin_zero = grid.first() == Some(&0.0) && p.eval(0.0) == 0.0;
    let interior = || grid.iter().copied().filter(|r| *r > 0.0);
    let positive = PropertyCheck::scan(interior().map(|r| (r, p.eval(r) > 0.0)));
    let below_one = PropertyCheck::scan(interior().map(|r| (r, p.eval(r) < 1.0)));
    let closed_unit = PropertyCheck::scan(grid.iter().map(|&r| {
        let v = p.eval(r);
        (r, (0.0..=1.0).contains(&v))
    }));
    let increasing = PropertyCheck::scan(grid.iter().map(|&r| (r, p.eval_deriv(r) > 0.0)));
    let degenerate_flat = grid.iter().all(|&r| p.eval(r) == 0.0);
    ValidationReport {
        origin_zero,
        positive,
        below_one,
        closed_unit,
        increasing,
        degenerate_flat,
    }
}
