//! The `sccw` command line: `stats`, `cdf`, `hist`, `limits` and `project`.
//!
//! Every command writes CSV into `--out`, optionally an SVG rendering, and a
//! `run_manifest` listing each effective constant and a SHA-256 of every
//! input file. Exit status is 0 on success, 2 for invalid input and 1 for
//! any other failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::abatement::{FeedbackMode, FeedbackOptions};
use crate::error::{Error, Result};
use crate::ingest::{self, CountryRecord, ScenarioSpec, SccEstimate};
use crate::scenario::{self, GrowthBound, GrowthRule, ProjectionParams, ProjectionResult, TaxShareRule};
use crate::stats::{self, WeightedSample};
use crate::svg::{self, Chart, Scale, Series, Style};
use crate::winsor::{self, PolicyKind, WinsorPolicy};

#[derive(Debug, Parser)]
#[command(name = "sccw", version, about = "Winsorize social cost of carbon estimates with country limits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean, standard error, standard deviation, mode and median per policy.
    Stats(RunArgs),
    /// Weighted cumulative distribution per policy.
    Cdf(RunArgs),
    /// Decade histogram of the raw sample.
    Hist(RunArgs),
    /// Country limits from the panel.
    Limits(RunArgs),
    /// Winsorized mean over time under a scenario.
    Project(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats(_) => "stats",
            Command::Cdf(_) => "cdf",
            Command::Hist(_) => "hist",
            Command::Limits(_) => "limits",
            Command::Project(_) => "project",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Stats(a) | Command::Cdf(a) | Command::Hist(a) | Command::Limits(a) | Command::Project(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub estimates: Option<PathBuf>,
    #[arg(long)]
    pub papers: Option<PathBuf>,
    #[arg(long)]
    pub countries: Option<PathBuf>,
    #[arg(long)]
    pub scenarios: Option<PathBuf>,

    /// Restrict to one policy; default is none, weitzman and hobbes.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    /// Enables the censor policy at this threshold (USD/tC).
    #[arg(long)]
    pub censor_threshold: Option<f64>,
    /// Scenario name; default is every scenario in the file.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub from: Option<i32>,
    #[arg(long)]
    pub to: Option<i32>,
    /// Impose the winsorized mean as a carbon tax and feed it back.
    #[arg(long)]
    pub with_tax: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
    /// Also write the CDF restricted to values at or above this one.
    #[arg(long)]
    pub tail_from: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,

    #[arg(long, default_value_t = ingest::BASE_YEAR)]
    pub base_year: i32,
    #[arg(long, default_value_t = ingest::DEFAULT_REBASE_GROWTH)]
    pub rebase_growth: f64,
    #[arg(long, default_value_t = scenario::DEFAULT_SCC_GROWTH)]
    pub scc_growth: f64,
    #[arg(long, default_value_t = scenario::DEFAULT_SCC_GROWTH_WITH_TAX)]
    pub scc_growth_tax: f64,
    #[arg(long, default_value_t = crate::abatement::DEFAULT_R_UNIT)]
    pub r_unit: f64,
    #[arg(long, default_value_t = 0.059)]
    pub growth_intercept: f64,
    #[arg(long, default_value_t = 0.005)]
    pub growth_slope: f64,
    #[arg(long, default_value_t = 0.01)]
    pub growth_bound: f64,
    #[arg(long, value_enum, default_value_t = GrowthBound::Floor)]
    pub growth_bound_kind: GrowthBound,
    #[arg(long, default_value_t = 0.026)]
    pub tax_intercept: f64,
    #[arg(long, default_value_t = 0.016)]
    pub tax_slope: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tax_reference_income: f64,
    #[arg(long, default_value_t = 0.6)]
    pub tax_cap: f64,
    #[arg(long, default_value_t = crate::abatement::DEFAULT_TOLERANCE)]
    pub feedback_tolerance: f64,
    #[arg(long, default_value_t = crate::abatement::DEFAULT_MAX_ITERATIONS)]
    pub feedback_max_iterations: usize,
    #[arg(long, value_enum, default_value_t = FeedbackMode::FixedPoint)]
    pub feedback_mode: FeedbackMode,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_scale: f64,
}

fn check(ok: bool, what: &str, value: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} out of range: {value}")))
    }
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v.is_finite() && v >= lo && v <= hi
}

impl RunArgs {
    /// Rejects constants outside their documented bounds.
    pub fn validate(&self) -> Result<()> {
        check((1980..=2100).contains(&self.base_year), "--base-year", self.base_year)?;
        check(in_range(self.rebase_growth, -0.5, 0.5), "--rebase-growth (within [-0.5, 0.5])", self.rebase_growth)?;
        check(in_range(self.scc_growth, -0.5, 0.5), "--scc-growth (within [-0.5, 0.5])", self.scc_growth)?;
        check(in_range(self.scc_growth_tax, -0.5, 0.5), "--scc-growth-tax (within [-0.5, 0.5])", self.scc_growth_tax)?;
        check(self.r_unit.is_finite() && self.r_unit > 0.0 && self.r_unit < 1.0, "--r-unit (within (0, 1))", self.r_unit)?;
        check(in_range(self.growth_intercept, -1.0, 1.0), "--growth-intercept (within [-1, 1])", self.growth_intercept)?;
        check(in_range(self.growth_slope, -1.0, 1.0), "--growth-slope (within [-1, 1])", self.growth_slope)?;
        check(in_range(self.growth_bound, -0.5, 0.5), "--growth-bound (within [-0.5, 0.5])", self.growth_bound)?;
        check(in_range(self.tax_intercept, -1.0, 1.0), "--tax-intercept (within [-1, 1])", self.tax_intercept)?;
        check(in_range(self.tax_slope, -1.0, 1.0), "--tax-slope (within [-1, 1])", self.tax_slope)?;
        check(
            self.tax_reference_income.is_finite() && self.tax_reference_income > 0.0,
            "--tax-reference-income (positive)",
            self.tax_reference_income,
        )?;
        check(self.tax_cap > 0.0 && self.tax_cap <= 1.0, "--tax-cap (within (0, 1])", self.tax_cap)?;
        check(
            self.feedback_tolerance > 0.0 && self.feedback_tolerance < 1.0,
            "--feedback-tolerance (within (0, 1))",
            self.feedback_tolerance,
        )?;
        check(
            (1..=10_000).contains(&self.feedback_max_iterations),
            "--feedback-max-iterations (1 to 10000)",
            self.feedback_max_iterations,
        )?;
        check(
            self.bandwidth_scale > 0.0 && self.bandwidth_scale <= 100.0,
            "--bandwidth-scale (within (0, 100])",
            self.bandwidth_scale,
        )?;
        if let Some(t) = self.censor_threshold {
            check(t.is_finite() && t > 0.0, "--censor-threshold (positive)", t)?;
        }
        if let Some(t) = self.tail_from {
            check(t.is_finite(), "--tail-from", t)?;
        }
        if let Some(n) = self.threads {
            check(n >= 1, "--threads", n)?;
        }
        if self.policy == Some(PolicyKind::Censor) && self.censor_threshold.is_none() {
            return Err(Error::Validation("--policy censor needs --censor-threshold".into()));
        }
        Ok(())
    }

    pub fn projection_params(&self) -> ProjectionParams {
        ProjectionParams {
            base_year: self.base_year,
            growth: GrowthRule {
                intercept: self.growth_intercept,
                slope: self.growth_slope,
                bound: self.growth_bound,
                bound_kind: self.growth_bound_kind,
            },
            tax_share: TaxShareRule {
                intercept: self.tax_intercept,
                slope: self.tax_slope,
                reference_income: self.tax_reference_income,
                cap: self.tax_cap,
            },
            scc_growth: self.scc_growth,
            scc_growth_with_tax: self.scc_growth_tax,
            feedback: FeedbackOptions {
                r_unit: self.r_unit,
                tolerance: self.feedback_tolerance,
                max_iterations: self.feedback_max_iterations,
                mode: self.feedback_mode,
            },
        }
    }

    /// The policies a command reports, in output order.
    pub fn policies(&self) -> Result<Vec<WinsorPolicy>> {
        if let Some(kind) = self.policy {
            let threshold = (kind == PolicyKind::Censor).then_some(self.censor_threshold).flatten();
            return Ok(vec![kind.with_threshold(threshold)?]);
        }
        let mut out = vec![WinsorPolicy::None, WinsorPolicy::Weitzman, WinsorPolicy::Hobbes];
        if let Some(t) = self.censor_threshold {
            out.push(WinsorPolicy::censor(t)?);
        }
        Ok(out)
    }

    fn constants(&self) -> Vec<(&'static str, String)> {
        vec![
            ("base_year", self.base_year.to_string()),
            ("rebase_growth", self.rebase_growth.to_string()),
            ("scc_growth", self.scc_growth.to_string()),
            ("scc_growth_tax", self.scc_growth_tax.to_string()),
            ("r_unit", self.r_unit.to_string()),
            ("growth_intercept", self.growth_intercept.to_string()),
            ("growth_slope", self.growth_slope.to_string()),
            ("growth_bound", self.growth_bound.to_string()),
            ("growth_bound_kind", format!("{:?}", self.growth_bound_kind).to_lowercase()),
            ("tax_intercept", self.tax_intercept.to_string()),
            ("tax_slope", self.tax_slope.to_string()),
            ("tax_reference_income", self.tax_reference_income.to_string()),
            ("tax_cap", self.tax_cap.to_string()),
            ("feedback_tolerance", self.feedback_tolerance.to_string()),
            ("feedback_max_iterations", self.feedback_max_iterations.to_string()),
            (
                "feedback_mode",
                match self.feedback_mode {
                    FeedbackMode::FixedPoint => "fixed-point".into(),
                    FeedbackMode::Picard => "picard".into(),
                    FeedbackMode::SinglePass => "single-pass".into(),
                },
            ),
            ("bandwidth_scale", self.bandwidth_scale.to_string()),
            ("mode_grid_points", stats::MODE_GRID_POINTS.to_string()),
        ]
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Validation(format!("{flag} is required for this command")))
}

fn load_estimates(args: &RunArgs) -> Result<Vec<SccEstimate>> {
    let (estimates, _) = ingest::parse_estimates(required(&args.estimates, "--estimates")?, required(&args.papers, "--papers")?)?;
    if estimates.is_empty() {
        return Err(Error::Empty("estimates file"));
    }
    Ok(estimates)
}

fn load_sample(args: &RunArgs) -> Result<WeightedSample> {
    ingest::weighted_sample(&load_estimates(args)?, args.rebase_growth)
}

fn load_countries(args: &RunArgs) -> Result<Vec<CountryRecord>> {
    ingest::parse_countries(required(&args.countries, "--countries")?)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn num(v: f64) -> String {
    v.to_string()
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        self.written.push(path);
        Ok(())
    }
}

fn winsorized(sample: &WeightedSample, countries: &[CountryRecord], policy: WinsorPolicy) -> Result<WeightedSample> {
    Ok(winsor::apply_policy(sample, countries, policy)?.1)
}

fn cmd_stats(args: &RunArgs, out: &mut Output) -> Result<()> {
    let sample = load_sample(args)?;
    let countries = load_countries(args)?;
    let mut rows = Vec::new();
    let mut bars = Vec::new();
    for policy in args.policies()? {
        let s = winsorized(&sample, &countries, policy)?;
        let st = stats::summarize(&s, args.bandwidth_scale)?;
        rows.push(vec![
            policy.name().to_string(),
            num(st.mean),
            num(st.std_error),
            num(st.std_dev),
            num(st.mode),
            num(st.median),
            num(st.effective_n),
        ]);
        bars.push((policy.name().to_string(), st.mean));
    }
    out.put(
        "stats.csv",
        &csv_bytes(&["policy", "mean", "se", "sd", "mode", "median", "effective_n"], &rows),
    )?;
    if args.svg {
        out.put("stats.svg", svg::bar_chart("Mean social cost of carbon", "USD/tC", &bars).as_bytes())?;
    }
    Ok(())
}

fn cmd_cdf(args: &RunArgs, out: &mut Output) -> Result<()> {
    let sample = load_sample(args)?;
    let countries = load_countries(args)?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for policy in args.policies()? {
        let s = winsorized(&sample, &countries, policy)?;
        let cdf = stats::ecdf(&s);
        rows.extend(cdf.iter().map(|&(v, f)| vec![policy.name().to_string(), num(v), num(f)]));
        series.push(Series {
            name: policy.name().to_string(),
            points: cdf,
            style: Style::Step,
        });
    }
    let header = ["policy", "value", "cumulative_fraction"];
    out.put("cdf.csv", &csv_bytes(&header, &rows))?;
    let tail: Option<Vec<Vec<String>>> = args.tail_from.map(|t| {
        rows.iter()
            .filter(|r| r[1].parse::<f64>().is_ok_and(|v| v >= t))
            .cloned()
            .collect()
    });
    if let Some(tail) = &tail {
        out.put("cdf_tail.csv", &csv_bytes(&header, tail))?;
    }
    if args.svg {
        let chart = Chart {
            title: "Cumulative distribution".into(),
            x_label: "USD/tC".into(),
            y_label: "cumulative share".into(),
            x_scale: Scale::Asinh,
            y_scale: Scale::Linear,
            series: series.clone(),
        };
        out.put("cdf.svg", chart.render().as_bytes())?;
        if let Some(t) = args.tail_from {
            let inset = Chart {
                title: format!("Cumulative distribution from {t}"),
                x_scale: Scale::Linear,
                series: series
                    .into_iter()
                    .map(|s| Series {
                        points: s.points.into_iter().filter(|p| p.0 >= t).collect(),
                        ..s
                    })
                    .collect(),
                ..chart
            };
            out.put("cdf_tail.svg", inset.render().as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_hist(args: &RunArgs, out: &mut Output) -> Result<()> {
    let sample = load_sample(args)?;
    let bins = stats::log_histogram(&sample);
    let rows: Vec<Vec<String>> = bins
        .iter()
        .map(|b| {
            vec![
                b.label(),
                b.lower.map_or_else(|| "-inf".to_string(), num),
                num(b.upper),
                num(b.share),
            ]
        })
        .collect();
    out.put("hist.csv", &csv_bytes(&["bin", "lower", "upper", "share"], &rows))?;
    if args.svg {
        let bars: Vec<(String, f64)> = bins.iter().map(|b| (tick(b.upper), b.share)).collect();
        out.put(
            "hist.svg",
            svg::bar_chart("Estimates by decade (upper bound, USD/tC)", "weighted share", &bars).as_bytes(),
        )?;
    }
    Ok(())
}

fn tick(v: f64) -> String {
    if v >= 1e4 {
        format!("1e{}", v.log10().round())
    } else {
        num(v)
    }
}

fn cmd_limits(args: &RunArgs, out: &mut Output) -> Result<()> {
    let countries = load_countries(args)?;
    let total = crate::numeric::sum(countries.iter().map(|c| c.emissions));
    let mut rows = Vec::new();
    let mut atp = Vec::new();
    let mut lev = Vec::new();
    for c in &countries {
        let share = c.emissions / total;
        let w = winsor::ability_to_pay(c)?;
        let h = winsor::leviathan_tax(c)?;
        rows.push(vec![c.country_code.clone(), num(share), num(w), num(h)]);
        atp.push((share, w));
        lev.push((share, h));
    }
    let (gw, gh) = scenario::global_limits(&countries);
    rows.push(vec!["WORLD".into(), num(1.0), num(gw), num(gh)]);
    out.put(
        "limits.csv",
        &csv_bytes(&["iso3", "emissions_share", "weitzman_limit", "hobbes_limit"], &rows),
    )?;
    if args.svg {
        let chart = Chart {
            title: "Limits by country".into(),
            x_label: "share of global emissions".into(),
            y_label: "USD/tC".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Asinh,
            series: vec![
                Series {
                    name: "ability to pay".into(),
                    points: atp,
                    style: Style::Points,
                },
                Series {
                    name: "Leviathan tax".into(),
                    points: lev,
                    style: Style::Points,
                },
            ],
        };
        out.put("limits.svg", chart.render().as_bytes())?;
    }
    Ok(())
}

fn select_scenarios(args: &RunArgs, all: Vec<ScenarioSpec>) -> Result<Vec<ScenarioSpec>> {
    match &args.scenario {
        None => Ok(all),
        Some(name) => all
            .into_iter()
            .find(|s| &s.name == name)
            .map(|s| vec![s])
            .ok_or_else(|| Error::UnknownScenario(name.clone())),
    }
}

fn cmd_project(args: &RunArgs, out: &mut Output) -> Result<()> {
    let sample = load_sample(args)?;
    let countries = load_countries(args)?;
    let specs = select_scenarios(args, ingest::parse_scenarios(required(&args.scenarios, "--scenarios")?)?)?;
    let params = args.projection_params();
    let mut results: Vec<ProjectionResult> = Vec::new();
    for spec in &specs {
        let from = args.from.unwrap_or(params.base_year + 1);
        let to = match args.to {
            Some(t) => t,
            None => spec.last_year().ok_or(Error::Empty("scenario"))?,
        };
        for policy in args.policies()? {
            results.push(scenario::project_mean_path(
                &sample,
                &countries,
                spec,
                policy,
                args.with_tax,
                from,
                to,
                &params,
            )?);
        }
    }
    let mut rows = Vec::new();
    for r in &results {
        for y in &r.years {
            rows.push(vec![
                r.scenario.clone(),
                r.policy.name().to_string(),
                (r.with_tax as u8).to_string(),
                y.year.to_string(),
                num(y.mean_scc),
                num(y.global_weitzman_limit),
                num(y.global_hobbes_limit),
                y.iterations.to_string(),
                num(y.global_reduction_rate),
            ]);
        }
    }
    out.put(
        "timeseries.csv",
        &csv_bytes(
            &[
                "scenario",
                "policy",
                "with_tax",
                "year",
                "mean_scc",
                "global_weitzman_limit",
                "global_hobbes_limit",
                "iterations",
                "global_reduction_rate",
            ],
            &rows,
        ),
    )?;
    if args.svg {
        let chart = Chart {
            title: "Mean social cost of carbon over time".into(),
            x_label: "year".into(),
            y_label: "USD/tC".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            series: results
                .iter()
                .map(|r| Series {
                    name: format!("{} {}{}", r.scenario, r.policy, if r.with_tax { " +tax" } else { "" }),
                    points: r.years.iter().map(|y| (f64::from(y.year), y.mean_scc)).collect(),
                    style: Style::Line,
                })
                .collect(),
        };
        out.put("timeseries.svg", chart.render().as_bytes())?;
    }
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn manifest(command: &Command, outputs: &[PathBuf]) -> Result<String> {
    let args = command.args();
    let mut m = String::new();
    let _ = writeln!(m, "command={}", command.name());
    for (k, v) in args.constants() {
        let _ = writeln!(m, "{k}={v}");
    }
    let policies: Vec<&str> = args.policies()?.iter().map(|p| p.name()).collect();
    let _ = writeln!(m, "policies={}", policies.join(","));
    if let Some(t) = args.censor_threshold {
        let _ = writeln!(m, "censor_threshold={t}");
    }
    if command.name() == "project" {
        let _ = writeln!(m, "with_tax={}", args.with_tax as u8);
        let _ = writeln!(m, "scenario={}", args.scenario.as_deref().unwrap_or("*"));
        if let Some(f) = args.from {
            let _ = writeln!(m, "from={f}");
        }
        if let Some(t) = args.to {
            let _ = writeln!(m, "to={t}");
        }
    }
    for (key, path) in [
        ("estimates", &args.estimates),
        ("papers", &args.papers),
        ("countries", &args.countries),
        ("scenarios", &args.scenarios),
    ] {
        if let Some(p) = path {
            let _ = writeln!(m, "input.{key}={}", p.display());
            let _ = writeln!(m, "input.{key}.sha256={}", sha256_file(p)?);
        }
    }
    for o in outputs {
        if let Some(name) = o.file_name() {
            let _ = writeln!(m, "output={}", name.to_string_lossy());
        }
    }
    Ok(m)
}

fn execute(command: &Command) -> Result<Vec<PathBuf>> {
    let args = command.args();
    args.validate()?;
    let mut out = Output::create(&args.out)?;
    match command {
        Command::Stats(a) => cmd_stats(a, &mut out)?,
        Command::Cdf(a) => cmd_cdf(a, &mut out)?,
        Command::Hist(a) => cmd_hist(a, &mut out)?,
        Command::Limits(a) => cmd_limits(a, &mut out)?,
        Command::Project(a) => cmd_project(a, &mut out)?,
    }
    let text = manifest(command, &out.written)?;
    out.put("run_manifest", text.as_bytes())?;
    Ok(out.written)
}

/// Run a parsed command, honouring `--threads`. Returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match cli.command.args().threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("cannot start thread pool: {e}")))?
            .install(|| execute(&cli.command)),
        None => execute(&cli.command),
    }
}

/// 0 on success, 2 for invalid input, 1 otherwise.
pub fn status(result: &Result<Vec<PathBuf>>) -> u8 {
    match result {
        Ok(_) => 0,
        Err(e) if e.is_validation() => 2,
        Err(_) => 1,
    }
}

pub fn main_from_env() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli);
    match &result {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(status(&result))
}
