//! Carbon-tax feedback on the winsorizing limits.
//!
//! Country `i` abates a fraction `R_i` of its uncontrolled emissions `E_i`
//! at a quadratic resource cost `0.5 α_i R_i² Y_i`, and pays the tax `τ` on
//! what it still emits. Minimizing the sum gives `R_i = τ E_i / (α_i Y_i)`.
//! With `α_i` proportional to carbon intensity, every country abates the same
//! fraction, `r_unit` per dollar of tax.
//!
//! Setting the tax to the winsorized mean lowers emissions more than output,
//! which raises the limits, which raises the winsorized mean. The fixed point
//! of that loop is found by plain iteration from below.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::CountryRecord;
use crate::numeric;
use crate::stats::{weighted_mean, WeightedSample};
use crate::winsor::{self, WinsorLimits, WinsorPolicy};

/// Global average reduction for a tax of one dollar per tonne of carbon.
pub const DEFAULT_R_UNIT: f64 = 0.00126;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct AbatementParams {
    /// Cost coefficient per country.
    pub alpha: BTreeMap<String, f64>,
    /// Reduction per USD/tC at the calibration intensity.
    pub r_unit: f64,
    /// Carbon tax, USD/tC.
    pub tax: f64,
}

impl AbatementParams {
    pub fn with_tax(&self, tax: f64) -> Self {
        Self { tax, ..self.clone() }
    }

    pub fn alpha_of(&self, code: &str) -> Result<f64> {
        self.alpha
            .get(code)
            .copied()
            .ok_or_else(|| Error::Validation(format!("no abatement coefficient for `{code}`")))
    }
}

/// Resource cost and tax payment of one country, USD per year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbatementCost {
    pub resource: f64,
    pub tax_payment: f64,
}

impl AbatementCost {
    pub fn total(&self) -> f64 {
        self.resource + self.tax_payment
    }
}

/// `α_i = (E_i / Y_i) / r_unit`.
///
/// This is the coefficient proportional to carbon intensity whose
/// emission-weighted mean equals the emission-weighted mean intensity over
/// `r_unit`; it makes every country's reduction `τ · r_unit`.
pub fn calibrate_alpha(countries: &[CountryRecord], r_unit: f64) -> Result<AbatementParams> {
    if countries.is_empty() {
        return Err(Error::Empty("country panel"));
    }
    if !(r_unit.is_finite() && r_unit > 0.0) {
        return Err(Error::Validation(format!("r_unit must be positive, got {r_unit}")));
    }
    let total_emissions = numeric::sum(countries.iter().map(|c| c.emissions));
    if !(total_emissions > 0.0) {
        return Err(Error::Numeric("cannot calibrate on a panel with zero total emissions".into()));
    }
    let alpha = countries
        .iter()
        .map(|c| {
            if !(c.gdp > 0.0) {
                return Err(Error::Validation(format!("{}: gdp must be positive", c.country_code)));
            }
            Ok((c.country_code.clone(), c.emissions / c.gdp / r_unit))
        })
        .collect::<Result<_>>()?;
    Ok(AbatementParams { alpha, r_unit, tax: 0.0 })
}

/// Cost-minimizing reduction, clamped to [0, 1].
pub fn reduction_rate(params: &AbatementParams, country: &CountryRecord) -> Result<f64> {
    let alpha = params.alpha_of(&country.country_code)?;
    let r = params.tax * country.emissions / (alpha * country.gdp);
    Ok(r.clamp(0.0, 1.0))
}

pub fn abatement_cost(params: &AbatementParams, country: &CountryRecord, reduction: f64) -> Result<AbatementCost> {
    let alpha = params.alpha_of(&country.country_code)?;
    Ok(AbatementCost {
        resource: 0.5 * alpha * reduction * reduction * country.gdp,
        tax_payment: params.tax * (1.0 - reduction) * country.emissions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FeedbackMode {
    /// Iterate until the mean stops moving, jumping ahead with Aitken
    /// extrapolation once the steps shrink at a steady rate.
    FixedPoint,
    /// Plain iteration, one map evaluation per step.
    Picard,
    /// One update from the no-feedback mean.
    SinglePass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackOptions {
    pub r_unit: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub mode: FeedbackMode,
}

impl Default for FeedbackOptions {
    fn default() -> Self {
        Self {
            r_unit: DEFAULT_R_UNIT,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            mode: FeedbackMode::FixedPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackOutcome {
    pub limits: WinsorLimits,
    pub mean: f64,
    pub iterations: usize,
    /// The tax sequence, starting with the no-feedback mean.
    pub iterates: Vec<f64>,
    /// Emission-weighted reduction at the final tax.
    pub global_reduction_rate: f64,
    /// Panel after abatement at the final tax.
    pub panel: Vec<CountryRecord>,
}

/// Panel and limits after every country responds to `params.tax`.
///
/// A country that abates everything has an unbounded limit and no weight.
pub fn abated_panel(
    countries: &[CountryRecord],
    params: &AbatementParams,
    policy: WinsorPolicy,
) -> Result<(Vec<CountryRecord>, WinsorLimits, f64)> {
    let mut panel = Vec::with_capacity(countries.len());
    let mut per_country = BTreeMap::new();
    let mut reduced = numeric::NeumaierSum::new();
    for c in countries {
        let r = reduction_rate(params, c)?;
        let cost = abatement_cost(params, c, r)?;
        reduced.add(c.emissions * r);
        let gdp = c.gdp - cost.resource;
        if !(gdp > 0.0) {
            return Err(Error::Numeric(format!(
                "{}: abatement cost exceeds output at tax {}",
                c.country_code, params.tax
            )));
        }
        let rec = CountryRecord {
            country_code: c.country_code.clone(),
            gdp,
            emissions: (1.0 - r) * c.emissions,
            tax_share: c.tax_share,
            per_capita_income: gdp / c.population(),
        };
        let limit = if rec.emissions > 0.0 {
            match policy {
                WinsorPolicy::Weitzman => winsor::ability_to_pay(&rec)?,
                WinsorPolicy::Hobbes => winsor::leviathan_tax(&rec)?,
                other => {
                    return Err(Error::Validation(format!("tax feedback needs weitzman or hobbes, got {other}")))
                }
            }
        } else {
            f64::INFINITY
        };
        per_country.insert(rec.country_code.clone(), limit);
        panel.push(rec);
    }
    let total = numeric::sum(countries.iter().map(|c| c.emissions));
    Ok((panel, WinsorLimits { per_country }, reduced.total() / total))
}

fn winsorized_mean(
    sample: &WeightedSample,
    limits: &WinsorLimits,
    panel: &[CountryRecord],
    baseline: &[CountryRecord],
    policy: WinsorPolicy,
) -> Result<f64> {
    // With every country fully abated all limits are infinite; weight by
    // uncontrolled emissions instead of an all-zero vector.
    let weights = if panel.iter().any(|c| c.emissions > 0.0) { panel } else { baseline };
    Ok(weighted_mean(&winsor::winsorize_sample(sample, limits, weights, policy)?))
}

struct Evaluation {
    panel: Vec<CountryRecord>,
    limits: WinsorLimits,
    global_reduction_rate: f64,
    mean: f64,
}

/// Iterate tax → abatement → limits → winsorized mean.
///
/// `iterations` counts evaluations of that map, including rejected
/// extrapolation probes, and is bounded by `opts.max_iterations`.
/// An extrapolated tax `c` is only kept when the map still pushes upward
/// there, `T(c) >= c`, so the recorded taxes never decrease.
pub fn apply_tax_feedback(
    sample: &WeightedSample,
    countries: &[CountryRecord],
    policy: WinsorPolicy,
    opts: &FeedbackOptions,
) -> Result<FeedbackOutcome> {
    if !policy.is_country_limited() {
        return Err(Error::Validation(format!("tax feedback needs weitzman or hobbes, got {policy}")));
    }
    let params = calibrate_alpha(countries, opts.r_unit)?;
    let limits = winsor::compute_limits(countries, policy, sample.max_value())?;
    let evaluate = |tax: f64| -> Result<Evaluation> {
        let (panel, limits, global_reduction_rate) = abated_panel(countries, &params.with_tax(tax), policy)?;
        let mean = winsorized_mean(sample, &limits, &panel, countries, policy)?;
        Ok(Evaluation {
            panel,
            limits,
            global_reduction_rate,
            mean,
        })
    };

    let mut tax = winsorized_mean(sample, &limits, countries, countries, policy)?;
    let mut iterates = vec![tax];
    let mut evaluations = 0;
    let mut pending: Option<Evaluation> = None;
    let mut last_move: Option<f64> = None;
    let mut last_ratio: Option<f64> = None;
    loop {
        let eval = match pending.take() {
            Some(e) => e,
            None if evaluations < opts.max_iterations => {
                evaluations += 1;
                evaluate(tax)?
            }
            None => break,
        };
        let next = eval.mean;
        iterates.push(next);
        let done = match opts.mode {
            FeedbackMode::SinglePass => true,
            FeedbackMode::FixedPoint | FeedbackMode::Picard => {
                (next - tax).abs() < opts.tolerance * tax.abs().max(1.0)
            }
        };
        if done {
            return Ok(FeedbackOutcome {
                limits: eval.limits,
                mean: next,
                iterations: evaluations,
                iterates,
                global_reduction_rate: eval.global_reduction_rate,
                panel: eval.panel,
            });
        }

        let moved = next - tax;
        let ratio = last_move.map(|m| moved / m);
        tax = next;
        last_move = Some(moved);
        last_ratio = match (opts.mode, ratio, last_ratio) {
            (FeedbackMode::FixedPoint, Some(q), Some(q_prev))
                if moved > 0.0 && q > 0.0 && q < 1.0 && (q - q_prev).abs() <= 0.1 * q
                    && evaluations < opts.max_iterations =>
            {
                let candidate = next + moved * q / (1.0 - q);
                evaluations += 1;
                // A probe far past the fixed point may price an economy out
                // of existence; that only means the probe is rejected.
                match evaluate(candidate) {
                    Ok(e) if e.mean >= candidate => {
                        iterates.push(candidate);
                        tax = candidate;
                        pending = Some(e);
                        last_move = None;
                        None
                    }
                    _ => None,
                }
            }
            _ => ratio,
        };
    }
    let n = iterates.len();
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        previous: iterates[n.saturating_sub(2)],
        last: iterates[n - 1],
    })
}
