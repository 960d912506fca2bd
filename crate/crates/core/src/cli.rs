//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 search
//! failure, 1 anything else.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::conditions::{check_all, check_ric_nonneg, ConditionReport};
use crate::config::{load_profile, parse_profile_spec, OutputFormat, ProfileSource, RunConfig};
use crate::curvature::curvature_profile;
use crate::diagnostics::{
    ball_average_scal, gap_hypothesis_report, pl_bound_terms, verify_limits, GapReport,
};
use crate::error::{Error, Result};
use crate::perturbation::{grid_for_profile, search, CheckOutcome, SearchAttempt, SearchConfig, VerificationItems};
use crate::profiles::{make_bump_cutoff, validate_profile, ProfileFamily, ValidationReport, XiProfile};
use crate::report::{
    ball_averages_csv, curvature_csv, fmt_f64, metric_csv, pl_bounds_csv, versioned_json, write_atomic,
};
use crate::synthesis::{completeness_diagnostic, CompletenessDiagnostic, MetricProfile};

#[derive(Debug, Parser)]
#[command(name = "kahlerlab", version, about = "Synthesize and classify U(n)-invariant Kähler metrics on C^n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// zero | rational[:a] | table:<path> | perturbed:<spec.json>
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Parameter a of the rational family.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Complex dimension.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "r-max", global = true)]
    pub r_max: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric and curvature tables.
    Synth,
    /// Curvature-cone verdicts.
    Check,
    /// Search for a perturbation with NOB but a negative radial curvature.
    PerturbSearch(SearchArgs),
    /// Large-r limits, ball averages and decay tests.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Lower bound for the perturbation centre R.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Slack schedule; repeat the flag for several values.
    #[arg(long = "epsilon")]
    pub epsilons: Vec<f64>,
    /// Fixed α instead of the window midpoint.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// ε of the J(ερ) bound term.
    #[arg(long = "pl-epsilon")]
    pub pl_epsilon: Option<f64>,
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidProfile(_)
        | Error::InvalidGrid(_)
        | Error::InvalidPerturbation(_)
        | Error::SingularOrigin => 2,
        Error::SearchExhausted { .. } | Error::RadiusNotFound { .. } => 3,
        _ => 1,
    }
}

/// Merges the config file and flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if let Some(p) = &c.profile {
        cfg.profile.spec = p.clone();
        cfg.profile.a = c.a;
    } else if c.a.is_some() {
        cfg.profile.a = c.a;
    }
    if let Some(n) = c.n {
        cfg.n = n;
    }
    if let Some(r) = c.r_max {
        cfg.grid.r_max = r;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(f) = c.format {
        cfg.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Both => OutputFormat::Both,
        };
    }
    match &cli.command {
        Command::PerturbSearch(s) => {
            if let Some(r0) = s.r0 {
                cfg.search.r0 = r0;
            }
            if !s.epsilons.is_empty() {
                cfg.search.epsilons = s.epsilons.clone();
            }
            if s.alpha.is_some() {
                cfg.search.alpha = s.alpha;
            }
        }
        Command::Diagnose(d) => {
            if let Some(e) = d.pl_epsilon {
                cfg.diagnose.pl_epsilon = e;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Files produced by a command, written only once everything succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            dir: cfg.out.clone(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn write(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (name, contents) in self.files {
            let path = self.dir.join(name);
            write_atomic(&path, &contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

struct Prepared {
    cfg: RunConfig,
    label: String,
    profile: XiProfile,
    metric: MetricProfile,
}

fn prepare(cfg: RunConfig) -> Result<Prepared> {
    let source = parse_profile_spec(&cfg.profile.spec, cfg.profile.a)?;
    let profile = load_profile(&source)?;
    let grid = grid_for_profile(&cfg.grid_params(), &profile)?;
    let validation = validate_profile(&profile, grid.nodes());
    if !validation.synthesizable() {
        eprintln!("{}", serde_json::to_string_pretty(&validation)?);
        return Err(Error::InvalidProfile("profile failed validation".into()));
    }
    let metric = MetricProfile::synthesize(&profile, &grid, cfg.n)?;
    let label = match &source {
        ProfileSource::Family(ProfileFamily::Rational { a }) => format!("rational:{a}"),
        _ => cfg.profile.spec.clone(),
    };
    Ok(Prepared {
        cfg,
        label,
        profile,
        metric,
    })
}

#[derive(Serialize)]
struct SynthSummary<'a> {
    profile: &'a str,
    n: usize,
    r_max: f64,
    nodes: usize,
    validation: ValidationReport,
    completeness: CompletenessDiagnostic,
}

fn cmd_synth(p: &Prepared) -> Result<Outputs> {
    let curv = curvature_profile(&p.metric);
    let mut out = Outputs::new(&p.cfg);
    if p.cfg.format.csv() {
        out.add("metric.csv", metric_csv(&p.metric));
        out.add("curvature.csv", curvature_csv(&curv));
    }
    if p.cfg.format.json() {
        out.add(
            "synth.json",
            versioned_json(&SynthSummary {
                profile: &p.label,
                n: p.metric.dim(),
                r_max: p.metric.grid().r_max(),
                nodes: p.metric.nodes().len(),
                validation: validate_profile(&p.profile, p.metric.nodes()),
                completeness: completeness_diagnostic(&p.metric),
            })?,
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct ConditionsFile<'a> {
    profile: &'a str,
    n: usize,
    r_max: f64,
    conditions: &'a [ConditionReport],
}

fn conditions_csv(reports: &[ConditionReport]) -> String {
    let mut s = String::from("condition,verdict,margin,first_violation_r\n");
    for r in reports {
        let verdict = if r.holds() { "holds-on-grid" } else { "fails" };
        let first = r.first_violation_r.map(fmt_f64).unwrap_or_default();
        s.push_str(&format!("{},{verdict},{},{first}\n", r.condition.as_str(), fmt_f64(r.margin)));
    }
    s
}

fn cmd_check(p: &Prepared) -> Result<Outputs> {
    let curv = curvature_profile(&p.metric);
    let reports = check_all(&p.metric, &curv)?;
    let mut out = Outputs::new(&p.cfg);
    out.add(
        "conditions.json",
        versioned_json(&ConditionsFile {
            profile: &p.label,
            n: p.metric.dim(),
            r_max: p.metric.grid().r_max(),
            conditions: &reports,
        })?,
    );
    if p.cfg.format.csv() {
        out.add("conditions.csv", conditions_csv(&reports));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SpecOutput<'a> {
    base: ProfileFamily,
    alpha: f64,
    #[serde(rename = "R")]
    radius: f64,
    beta: f64,
    epsilon: f64,
    r0: f64,
    c0: f64,
    delta: f64,
    alpha_window: [f64; 2],
    items: VerificationItems,
    checks: &'a [CheckOutcome],
    passed: bool,
    attempts: &'a [SearchAttempt],
}

fn cmd_perturb_search(cfg: RunConfig) -> Result<Outputs> {
    let source = parse_profile_spec(&cfg.profile.spec, cfg.profile.a)?;
    let ProfileSource::Family(family) = &source else {
        return Err(Error::Config("perturb-search needs an analytic base profile".into()));
    };
    let base = load_profile(&source)?;
    let family = family.clone();
    let search_cfg = SearchConfig {
        epsilons: cfg.search.epsilons.clone(),
        r0: cfg.search.r0,
        grid: cfg.grid_params(),
        dim: cfg.n,
        alpha_override: cfg.search.alpha,
        radius_attempts: cfg.search.radius_attempts,
    };
    let cutoff = make_bump_cutoff();
    let res = match search(&base, cutoff, &search_cfg) {
        Ok(res) => res,
        Err(e @ Error::SearchExhausted { .. }) => {
            if let Error::SearchExhausted {
                last_record: Some(rec), ..
            } = &e
            {
                eprintln!("{}", serde_json::to_string_pretty(rec)?);
            }
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let c = &res.construction;
    let mut out = Outputs::new(&cfg);
    out.add(
        "spec.json",
        versioned_json(&SpecOutput {
            base: family,
            alpha: c.spec.alpha,
            radius: c.spec.radius,
            beta: c.spec.beta,
            epsilon: c.epsilon,
            r0: cfg.search.r0,
            c0: cutoff.c0(),
            delta: res.delta,
            alpha_window: [res.alpha_window.0, res.alpha_window.1],
            items: c.record.items,
            checks: &c.record.checks,
            passed: c.record.passed,
            attempts: &res.attempts,
        })?,
    );
    if cfg.format.csv() {
        out.add("perturbed_metric.csv", metric_csv(&c.metric));
        out.add("perturbed_curvature.csv", curvature_csv(&c.curvature));
    }
    Ok(out)
}

#[derive(Serialize)]
struct GapFile<'a> {
    profile: &'a str,
    n: usize,
    ric_nonneg: bool,
    rho_max: f64,
    scal_negative: bool,
    tail_exponent: f64,
    tail_mass: Option<f64>,
    #[serde(flatten)]
    report: &'a GapReport,
}

fn cmd_diagnose(p: &Prepared) -> Result<Outputs> {
    let eps = p.cfg.diagnose.pl_epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("pl_epsilon must lie in (0, 1), got {eps}")));
    }
    let curv = curvature_profile(&p.metric);
    let limits = verify_limits(&p.metric, &curv);
    let ball = ball_average_scal(&p.metric, &curv)?;
    let ric = check_ric_nonneg(&curv);
    let gap = gap_hypothesis_report(&ball, ric.holds());
    let pl = pl_bound_terms(&ball, eps);
    let mut out = Outputs::new(&p.cfg);
    if p.cfg.format.json() {
        out.add("limits.json", versioned_json(&limits)?);
        out.add(
            "gap_report.json",
            versioned_json(&GapFile {
                profile: &p.label,
                n: ball.dim,
                ric_nonneg: ric.holds(),
                rho_max: ball.rho_max,
                scal_negative: ball.scal_negative,
                tail_exponent: ball.tail_exponent,
                tail_mass: ball.tail_mass,
                report: &gap,
            })?,
        );
    }
    if p.cfg.format.csv() {
        out.add("ball_averages.csv", ball_averages_csv(&ball));
        out.add("pl_bounds.csv", pl_bounds_csv(&pl));
    }
    Ok(out)
}

/// Runs one parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(cli)?;
    let outputs = match &cli.command {
        Command::PerturbSearch(_) => cmd_perturb_search(cfg)?,
        Command::Synth => cmd_synth(&prepare(cfg)?)?,
        Command::Check => cmd_check(&prepare(cfg)?)?,
        Command::Diagnose(_) => cmd_diagnose(&prepare(cfg)?)?,
    };
    outputs.write()
}
