//! Year-by-year projection of the country panel and the winsorized mean.
//!
//! Each year national growth is set by income (poorer countries grow
//! faster), then all growth factors are scaled by one number so the panel
//! reproduces the scenario's global GDP growth. Energy and carbon intensity
//! improve at the same rate everywhere. Tax shares rise with income. Every
//! estimate grows at a fixed rate, lower when the tax is imposed.

use std::collections::BTreeMap;

use crate::abatement::{self, FeedbackOptions};
use crate::error::{Error, Result};
use crate::ingest::{CountryRecord, ScenarioRow, ScenarioSpec, BASE_YEAR};
use crate::numeric::{self, NeumaierSum};
use crate::stats::{weighted_mean, WeightedSample};
use crate::winsor::{self, WinsorLimits, WinsorPolicy};

pub const DEFAULT_SCC_GROWTH: f64 = 0.0216;
pub const DEFAULT_SCC_GROWTH_WITH_TAX: f64 = 0.0195;

/// How the 1% bound combines with the income regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GrowthBound {
    /// `max(bound, formula)`: growth never falls below the bound.
    Floor,
    /// `min(bound, formula)`: growth never exceeds the bound.
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRule {
    pub intercept: f64,
    pub slope: f64,
    pub bound: f64,
    pub bound_kind: GrowthBound,
}

impl Default for GrowthRule {
    fn default() -> Self {
        Self {
            intercept: 0.059,
            slope: 0.005,
            bound: 0.01,
            bound_kind: GrowthBound::Floor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxShareRule {
    pub intercept: f64,
    pub slope: f64,
    /// Income unit inside the logarithm.
    pub reference_income: f64,
    pub cap: f64,
}

impl Default for TaxShareRule {
    fn default() -> Self {
        Self {
            intercept: 0.026,
            slope: 0.016,
            reference_income: 1.0,
            cap: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionParams {
    pub base_year: i32,
    pub growth: GrowthRule,
    pub tax_share: TaxShareRule,
    pub scc_growth: f64,
    pub scc_growth_with_tax: f64,
    pub feedback: FeedbackOptions,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self {
            base_year: BASE_YEAR,
            growth: GrowthRule::default(),
            tax_share: TaxShareRule::default(),
            scc_growth: DEFAULT_SCC_GROWTH,
            scc_growth_with_tax: DEFAULT_SCC_GROWTH_WITH_TAX,
            feedback: FeedbackOptions::default(),
        }
    }
}

impl ProjectionParams {
    pub fn scc_growth_for(&self, with_tax: bool) -> f64 {
        if with_tax {
            self.scc_growth_with_tax
        } else {
            self.scc_growth
        }
    }
}

pub fn national_growth_rate(y_prev: f64, rule: &GrowthRule) -> f64 {
    let formula = rule.intercept - rule.slope * y_prev.ln();
    match rule.bound_kind {
        GrowthBound::Floor => formula.max(rule.bound),
        GrowthBound::Cap => formula.min(rule.bound),
    }
}

/// Scale every growth factor `1 + g_c` by the single `λ` that makes the
/// GDP-weighted aggregate grow at `global_growth`. `rates` is aligned with
/// `countries`.
pub fn rescale_growth(rates: &[f64], countries: &[CountryRecord], global_growth: f64) -> Result<Vec<f64>> {
    if rates.len() != countries.len() {
        return Err(Error::Validation("growth rates and countries differ in length".into()));
    }
    if !(global_growth > -1.0) {
        return Err(Error::Validation(format!("global growth must exceed -1, got {global_growth}")));
    }
    let mut gdp = NeumaierSum::new();
    let mut grown = NeumaierSum::new();
    for (c, &g) in countries.iter().zip(rates) {
        if c.gdp > 0.0 {
            gdp.add(c.gdp);
            grown.add(c.gdp * (1.0 + g));
        }
    }
    if !(gdp.total() > 0.0 && grown.total() > 0.0) {
        return Err(Error::Validation("no country with positive GDP to rescale".into()));
    }
    let lambda = gdp.total() * (1.0 + global_growth) / grown.total();
    Ok(rates.iter().map(|g| (1.0 + g) * lambda - 1.0).collect())
}

/// One year of growth with uniform intensity improvements. Population is
/// fixed, so income per head moves with GDP. The tax share is left alone.
pub fn evolve_country(rec: &CountryRecord, row: &ScenarioRow, growth: f64) -> Result<CountryRecord> {
    let factor = 1.0 + growth;
    let next = CountryRecord {
        country_code: rec.country_code.clone(),
        gdp: rec.gdp * factor,
        emissions: rec.emissions * factor * (1.0 - row.energy_intensity_decline) * (1.0 - row.carbon_intensity_decline),
        tax_share: rec.tax_share,
        per_capita_income: rec.per_capita_income * factor,
    };
    if !(next.emissions > 0.0 && next.gdp > 0.0) {
        return Err(Error::Numeric(format!(
            "{} in {}: projected emissions or output not positive",
            rec.country_code, row.year
        )));
    }
    Ok(next)
}

pub fn evolve_tax_share(tax_prev: f64, y_prev: f64, rule: &TaxShareRule) -> f64 {
    if tax_prev <= 0.0 {
        return 0.0;
    }
    let growth = rule.intercept + rule.slope * (y_prev / rule.reference_income).ln();
    (tax_prev * (1.0 + growth)).clamp(0.0, rule.cap)
}

/// Advance the whole panel by one scenario row.
pub fn step_panel(panel: &[CountryRecord], row: &ScenarioRow, params: &ProjectionParams) -> Result<Vec<CountryRecord>> {
    let raw: Vec<f64> = panel
        .iter()
        .map(|c| national_growth_rate(c.per_capita_income, &params.growth))
        .collect();
    let rates = rescale_growth(&raw, panel, row.gdp_growth)?;
    panel
        .iter()
        .zip(rates)
        .map(|(c, g)| {
            let mut next = evolve_country(c, row, g)?;
            next.tax_share = evolve_tax_share(c.tax_share, c.per_capita_income, &params.tax_share);
            Ok(next)
        })
        .collect()
}

/// `s0` compounded at `growth` from `base_year` through `to_year`.
pub fn scc_path(s0: f64, growth: f64, base_year: i32, to_year: i32) -> BTreeMap<i32, f64> {
    (base_year..=to_year.max(base_year))
        .map(|y| (y, s0 * (1.0 + growth).powi(y - base_year)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearResult {
    pub year: i32,
    pub mean_scc: f64,
    pub limits: WinsorLimits,
    pub global_weitzman_limit: f64,
    pub global_hobbes_limit: f64,
    /// Zero when no tax feedback ran.
    pub iterations: usize,
    pub global_reduction_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub scenario: String,
    pub policy: WinsorPolicy,
    pub with_tax: bool,
    pub years: Vec<YearResult>,
}

/// Emission-weighted means of both limit families; fully abated countries
/// carry no weight.
pub fn global_limits(panel: &[CountryRecord]) -> (f64, f64) {
    let emitting = || panel.iter().filter(|c| c.emissions > 0.0);
    let total = numeric::sum(emitting().map(|c| c.emissions));
    if !(total > 0.0) {
        return (f64::INFINITY, f64::INFINITY);
    }
    let weitzman = numeric::sum(emitting().map(|c| c.gdp)) / total;
    let hobbes = numeric::sum(emitting().map(|c| c.tax_share * c.gdp)) / total;
    (weitzman, hobbes)
}

fn scaled(sample: &WeightedSample, factor: f64) -> Result<WeightedSample> {
    WeightedSample::new(sample.pairs().iter().map(|&(v, w)| (v * factor, w)).collect())
}

/// Project the mean over `from..=to`. The panel and sample describe
/// `params.base_year`; the scenario must cover every later year up to `to`.
#[allow(clippy::too_many_arguments)]
pub fn project_mean_path(
    sample: &WeightedSample,
    countries: &[CountryRecord],
    spec: &ScenarioSpec,
    policy: WinsorPolicy,
    with_tax_feedback: bool,
    from: i32,
    to: i32,
    params: &ProjectionParams,
) -> Result<ProjectionResult> {
    let base = params.base_year;
    if from < base || to < from {
        return Err(Error::Validation(format!(
            "horizon {from}-{to} must start at or after the base year {base}"
        )));
    }
    for year in base + 1..=to {
        if spec.row(year).is_none() {
            return Err(Error::Validation(format!("scenario {} has no row for {year}", spec.name)));
        }
    }
    let growth = params.scc_growth_for(with_tax_feedback);
    let mut panel = countries.to_vec();
    let mut years = Vec::with_capacity((to - from + 1) as usize);
    for year in base..=to {
        if year > base {
            let row = spec.row(year).expect("checked above");
            panel = step_panel(&panel, row, params)?;
        }
        if year < from {
            continue;
        }
        let factor = (1.0 + growth).powi(year - base);
        let sample_t = scaled(sample, factor)?;
        let result = if with_tax_feedback && policy.is_country_limited() {
            let out = abatement::apply_tax_feedback(&sample_t, &panel, policy, &params.feedback)?;
            let (global_weitzman_limit, global_hobbes_limit) = global_limits(&out.panel);
            YearResult {
                year,
                mean_scc: out.mean,
                limits: out.limits,
                global_weitzman_limit,
                global_hobbes_limit,
                iterations: out.iterations,
                global_reduction_rate: out.global_reduction_rate,
            }
        } else {
            let (limits, winsorized) = winsor::apply_policy(&sample_t, &panel, policy)?;
            let (global_weitzman_limit, global_hobbes_limit) = global_limits(&panel);
            YearResult {
                year,
                mean_scc: weighted_mean(&winsorized),
                limits,
                global_weitzman_limit,
                global_hobbes_limit,
                iterations: 0,
                global_reduction_rate: 0.0,
            }
        };
        years.push(result);
    }
    Ok(ProjectionResult {
        scenario: spec.name.clone(),
        policy,
        with_tax: with_tax_feedback,
        years,
    })
}
