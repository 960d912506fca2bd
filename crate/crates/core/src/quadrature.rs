//! Gauss-Kronrod quadrature, cubic Hermite helpers and sequence extrapolation.
//!
//! Everything downstream integrates smooth functions over short panels, so a
//! 21-point Kronrod rule with bisection is enough to reach round-off.

use crate::error::{Error, Result};

// 10-point Gauss / 21-point Kronrod abscissae and weights (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_452,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, ..., 9).
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// One application of the 21-point Kronrod rule on `[a, b]`.
///
/// Returns the Kronrod estimate and the absolute difference to the embedded
/// 10-point Gauss estimate.
pub fn gauss_kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-13,
            max_depth: 40,
        }
    }
}

/// Globally adaptive bisection on top of [`gauss_kronrod21`].
///
/// The subinterval with the largest error estimate is split until the summed
/// estimate drops below `max(abs, rel * |value|)`; `max_depth` bounds the
/// bisection depth of any subinterval.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: QuadTolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    struct Piece {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
        depth: u32,
    }
    let (value, err) = gauss_kronrod21(f, a, b);
    if !value.is_finite() {
        return Err(Error::Quadrature { a, b });
    }
    let mut pieces = vec![Piece { a, b, value, err, depth: 0 }];
    let mut total = value;
    let mut total_err = err;
    loop {
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(pieces.iter().map(|p| p.value).sum());
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("nonempty");
        let p = pieces.swap_remove(worst);
        if p.depth >= tol.max_depth {
            return Err(Error::Quadrature { a: p.a, b: p.b });
        }
        let mid = 0.5 * (p.a + p.b);
        let (lv, le) = gauss_kronrod21(f, p.a, mid);
        let (rv, re) = gauss_kronrod21(f, mid, p.b);
        if !(lv + rv).is_finite() {
            return Err(Error::Quadrature { a: p.a, b: p.b });
        }
        total += lv + rv - p.value;
        total_err += le + re - p.err;
        pieces.push(Piece { a: p.a, b: mid, value: lv, err: le, depth: p.depth + 1 });
        pieces.push(Piece { a: mid, b: p.b, value: rv, err: re, depth: p.depth + 1 });
        // Guard against drift in the running error sum.
        if total_err < 0.0 {
            total_err = pieces.iter().map(|p| p.err).sum();
        }
    }
}

/// Cubic Hermite interpolant on `[x0, x1]` from values and slopes.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let dx = x1 - x0;
    let t = (x - x0) / dx;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * dx * d0 + h01 * y1 + h11 * dx * d1
}

/// Exact integral of the cubic Hermite interpolant over `[x0, x1]`
/// (trapezoid plus the endpoint-slope correction).
pub fn hermite_integral(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let dx = x1 - x0;
    0.5 * dx * (y0 + y1) + dx * dx * (d0 - d1) / 12.0
}

/// Cumulative integral of a function known through its samples and
/// derivatives on `nodes`; first entry is zero.
pub fn cumulative_hermite(nodes: &[f64], values: &[f64], slopes: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..nodes.len() {
        acc += hermite_integral(
            nodes[i - 1],
            nodes[i],
            values[i - 1],
            values[i],
            slopes[i - 1],
            slopes[i],
        );
        out.push(acc);
    }
    out
}

/// Aitken delta-squared acceleration of the last three terms of a sequence.
///
/// Equivalent to Richardson extrapolation with the convergence order
/// estimated from the same three terms. Falls back to the last term when the
/// second difference vanishes or the sequence is too short.
pub fn aitken_limit(seq: &[f64]) -> f64 {
    match seq {
        [] => f64::NAN,
        [only] => *only,
        [.., a, b, c] => {
            let d1 = b - a;
            let d2 = c - b;
            let denom = d2 - d1;
            if denom.abs() <= 1e-300 || (d2 * d2 / denom).abs() > (c.abs() + d2.abs()) * 1e3 {
                *c
            } else {
                c - d2 * d2 / denom
            }
        }
        [.., last] => *last,
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..n {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    sxy / sxx
}

/// Index `i` with `nodes[i] <= x <= nodes[i + 1]`, clamped to the table.
pub fn locate(nodes: &[f64], x: f64) -> usize {
    match nodes.binary_search_by(|v| v.partial_cmp(&x).expect("finite nodes")) {
        Ok(i) => i.min(nodes.len() - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(nodes.len() - 2),
    }
}
