//! Run configuration: a TOML file with nested sections, overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridParams;
use crate::perturbation::DEFAULT_EPSILON_SCHEDULE;
use crate::profiles::{
    make_analytic_profile, make_bump_cutoff, make_perturbed_profile, PerturbationSpec, ProfileFamily, XiProfile,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    /// `zero`, `rational`, `rational:<a>`, `table:<path>` or `perturbed:<spec.json>`.
    pub spec: String,
    /// Parameter a of the rational family.
    pub a: Option<f64>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            spec: "rational:0.5".into(),
            a: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub r0: f64,
    pub epsilons: Vec<f64>,
    pub alpha: Option<f64>,
    pub radius_attempts: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            r0: 10.0,
            epsilons: DEFAULT_EPSILON_SCHEDULE.to_vec(),
            alpha: None,
            radius_attempts: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSection {
    /// ε of the J(ερ) bound term.
    pub pl_epsilon: f64,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self { pl_epsilon: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSection,
    /// Complex dimension.
    pub n: usize,
    pub grid: GridParams,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub search: SearchSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileSection::default(),
            n: 2,
            grid: GridParams::default(),
            out: PathBuf::from("out"),
            format: OutputFormat::Both,
            search: SearchSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Checks the invariants that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.grid.r_max > 1.0) || !self.grid.r_max.is_finite() {
            return Err(Error::Config(format!("r_max must exceed 1, got {}", self.grid.r_max)));
        }
        Ok(())
    }

    /// Grid parameters with the standard pins merged in.
    pub fn grid_params(&self) -> GridParams {
        let mut g = self.grid.clone();
        g.pins.extend(GridParams::standard_pins(g.r_max));
        g.pins.sort_by(f64::total_cmp);
        g.pins.dedup();
        g
    }
}

/// Where a profile comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    Family(ProfileFamily),
    Table(PathBuf),
    Perturbed(PathBuf),
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("cannot parse {what} from '{s}'")))
}

fn existing(path: &str) -> Result<PathBuf> {
    let p = PathBuf::from(path);
    if !p.is_file() {
        return Err(Error::Config(format!("file not found: {path}")));
    }
    Ok(p)
}

/// Parses a profile string; `a` overrides the parameter of `rational:<a>`.
pub fn parse_profile_spec(spec: &str, a: Option<f64>) -> Result<ProfileSource> {
    let (head, arg) = match spec.split_once(':') {
        Some((h, rest)) => (h.trim(), Some(rest)),
        None => (spec.trim(), None),
    };
    match (head, arg) {
        ("zero", None) => Ok(ProfileSource::Family(ProfileFamily::Zero)),
        ("rational", arg) => {
            let a = match (a, arg) {
                (Some(a), _) => a,
                (None, Some(s)) => parse_number(s, "a")?,
                (None, None) => return Err(Error::Config("rational profile needs a value of a".into())),
            };
            Ok(ProfileSource::Family(ProfileFamily::Rational { a }))
        }
        ("table", Some(path)) => Ok(ProfileSource::Table(existing(path)?)),
        ("perturbed", Some(path)) => Ok(ProfileSource::Perturbed(existing(path)?)),
        _ => Err(Error::Config(format!("unknown profile '{spec}'"))),
    }
}

/// Reads a two-column (r, ξ) table; commas or whitespace separate columns
/// and `#` starts a comment.
pub fn read_table(path: &Path) -> Result<ProfileFamily> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Vec::new();
    let mut xi = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(Error::Config(format!(
                "{}:{}: expected two columns",
                path.display(),
                lineno + 1
            )));
        }
        r.push(parse_number(cols[0], "r")?);
        xi.push(parse_number(cols[1], "xi")?);
    }
    Ok(ProfileFamily::Tabulated { r, xi })
}

/// On-disk form of a perturbation spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub base: ProfileFamily,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub beta: f64,
    pub epsilon: f64,
}

pub fn read_spec_file(path: &Path) -> Result<SpecFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Rebuilds the perturbed profile recorded in a spec file.
pub fn profile_from_spec(spec: &SpecFile) -> Result<XiProfile> {
    let base = make_analytic_profile(&spec.base)?;
    make_perturbed_profile(PerturbationSpec {
        base,
        alpha: spec.alpha,
        radius: spec.radius,
        cutoff: make_bump_cutoff(),
        beta: spec.beta,
    })
}

pub fn load_profile(source: &ProfileSource) -> Result<XiProfile> {
    match source {
        ProfileSource::Family(f) => make_analytic_profile(f),
        ProfileSource::Table(p) => make_analytic_profile(&read_table(p)?),
        ProfileSource::Perturbed(p) => profile_from_spec(&read_spec_file(p)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_profile_strings() {
        assert_eq!(
            parse_profile_spec("zero", None).unwrap(),
            ProfileSource::Family(ProfileFamily::Zero)
        );
        assert_eq!(
            parse_profile_spec("rational:0.3", None).unwrap(),
            ProfileSource::Family(ProfileFamily::Rational { a: 0.3 })
        );
        assert_eq!(
            parse_profile_spec("rational:0.3", Some(0.9)).unwrap(),
            ProfileSource::Family(ProfileFamily::Rational { a: 0.9 })
        );
        assert!(parse_profile_spec("rational", None).is_err());
        assert!(parse_profile_spec("table:/definitely/missing.txt", None).is_err());
        assert!(parse_profile_spec("spline", None).is_err());
    }

    #[test]
    fn toml_sections_and_defaults() {
        let cfg = RunConfig::from_toml_str(
            r#"
            n = 3
            out = "results"
            format = "csv"
            [profile]
            spec = "rational:0.9"
            [grid]
            r_max = 1e4
            [search]
            r0 = 100.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.n, 3);
        assert_eq!(cfg.grid.r_max, 1e4);
        assert_eq!(cfg.grid.ratio, 1.01);
        assert_eq!(cfg.search.r0, 100.0);
        assert_eq!(cfg.search.epsilons, DEFAULT_EPSILON_SCHEDULE.to_vec());
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn reads_tables_with_comments() {
        let path = std::env::temp_dir().join(format!("kahlerlab-table-{}.txt", std::process::id()));
        fs::write(&path, "# r xi\n0 0\n1, 0.25\n4\t0.4\n").unwrap();
        let fam = read_table(&path).unwrap();
        assert_eq!(
            fam,
            ProfileFamily::Tabulated {
                r: vec![0.0, 1.0, 4.0],
                xi: vec![0.0, 0.25, 0.4]
            }
        );
        fs::remove_file(&path).unwrap();
    }
}
