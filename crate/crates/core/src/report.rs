//! CSV and JSON emitters. Floats in CSV use 17 significant digits so every
//! value round-trips; files are written to a temporary name and renamed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::curvature::CurvaturePoint;
use crate::diagnostics::{BallAverages, PlBoundTerms};
use crate::error::Result;
use crate::synthesis::MetricProfile;

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn floats(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| fmt_f64(*v)).collect()
}

/// Columns r, h, H, f, s_geo.
pub fn metric_csv(metric: &MetricProfile) -> String {
    csv(
        &["r", "h", "H", "f", "s_geo"],
        (0..metric.nodes().len()).map(|i| {
            floats(&[
                metric.nodes()[i],
                metric.h()[i],
                metric.big_h()[i],
                metric.f()[i],
                metric.s_geo()[i],
            ])
        }),
    )
}

/// Columns r, A, B, C, ric_rad, ric_tan, scal.
pub fn curvature_csv(curv: &[CurvaturePoint]) -> String {
    csv(
        &["r", "A", "B", "C", "ric_rad", "ric_tan", "scal"],
        curv.iter()
            .map(|p| floats(&[p.r, p.a, p.b, p.c, p.ric_rad, p.ric_tan, p.scal])),
    )
}

/// Columns rho, k, V, J, T, doubling_ratio.
pub fn ball_averages_csv(ball: &BallAverages) -> String {
    csv(
        &["rho", "k", "V", "J", "T", "doubling_ratio"],
        (0..ball.rho.len()).map(|i| {
            floats(&[
                ball.rho[i],
                ball.k[i],
                ball.volume[i],
                ball.j[i],
                ball.t[i],
                ball.doubling_ratio[i],
            ])
        }),
    )
}

/// Columns rho, T, J_2rho, J_eps_rho, truncated.
pub fn pl_bounds_csv(terms: &[PlBoundTerms]) -> String {
    csv(
        &["rho", "T", "J_2rho", "J_eps_rho", "truncated"],
        terms.iter().map(|t| {
            let mut row = floats(&[t.rho, t.tail, t.j_double, t.j_eps]);
            row.push(t.truncated.to_string());
            row
        }),
    )
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON of a struct-like value with a leading `schema_version`.
pub fn versioned_json<T: Serialize>(body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Human-readable one-line summary, used on standard error.
pub fn summary_line(label: &str, pairs: &[(&str, String)]) -> String {
    let mut s = String::from(label);
    for (k, v) in pairs {
        let _ = write!(s, " {k}={v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5e-7, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.0625), "6.2500000000000000e-2");
    }

    #[test]
    fn versioned_json_leads_with_schema() {
        #[derive(Serialize)]
        struct Body {
            x: f64,
        }
        let s = versioned_json(&Body { x: 1.5 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["x"], 1.5);
        assert!(s.trim_start().starts_with("{\n  \"schema_version\": 1"));
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = std::env::temp_dir().join(format!("kahlerlab-report-{}", std::process::id()));
        let path = dir.join("a.csv");
        write_atomic(&path, "x\n1\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x\n1\n");
        assert!(!dir.join(".a.csv.tmp").exists());
        fs::remove_dir_all(&dir).unwrap();
    }
}
