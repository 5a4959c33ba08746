//! Country-level upper limits and the emission-weighted winsorizing transform.
//!
//! Each estimate `s` is replaced by the emission-weighted average over
//! countries of `min(s, W_c)`. Two limit families are provided:
//!
//! * ability to pay, `W_c = Y_c / E_c`, GDP per tonne of carbon;
//! * the Leviathan tax, `W_c = τ_c · Y_c / E_c`, the carbon tax that would
//!   raise the country's entire current tax take.
//!
//! Limits are in USD per tonne, so the ratio is output over emissions (the
//! reciprocal of carbon intensity). Only the upper tail is touched; negative
//! estimates pass through.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::CountryRecord;
use crate::numeric;
use crate::stats::WeightedSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WinsorPolicy {
    None,
    /// Ability to pay.
    Weitzman,
    /// Leviathan tax.
    Hobbes,
    /// Drop estimates above a single global threshold.
    Censor { threshold: f64 },
}

impl WinsorPolicy {
    pub fn censor(threshold: f64) -> Result<Self> {
        if threshold.is_finite() && threshold > 0.0 {
            Ok(WinsorPolicy::Censor { threshold })
        } else {
            Err(Error::Validation(format!("censor threshold must be positive, got {threshold}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WinsorPolicy::None => "none",
            WinsorPolicy::Weitzman => "weitzman",
            WinsorPolicy::Hobbes => "hobbes",
            WinsorPolicy::Censor { .. } => "censor",
        }
    }

    /// Policies whose limits come from the country panel.
    pub fn is_country_limited(&self) -> bool {
        matches!(self, WinsorPolicy::Weitzman | WinsorPolicy::Hobbes)
    }
}

impl fmt::Display for WinsorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses the kind only; `censor` needs its threshold attached separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum PolicyKind {
    None,
    Weitzman,
    Hobbes,
    Censor,
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PolicyKind::None),
            "weitzman" => Ok(PolicyKind::Weitzman),
            "hobbes" => Ok(PolicyKind::Hobbes),
            "censor" => Ok(PolicyKind::Censor),
            other => Err(Error::Validation(format!("unknown policy `{other}`"))),
        }
    }
}

impl PolicyKind {
    pub fn with_threshold(self, threshold: Option<f64>) -> Result<WinsorPolicy> {
        match (self, threshold) {
            (PolicyKind::None, None) => Ok(WinsorPolicy::None),
            (PolicyKind::Weitzman, None) => Ok(WinsorPolicy::Weitzman),
            (PolicyKind::Hobbes, None) => Ok(WinsorPolicy::Hobbes),
            (PolicyKind::Censor, Some(t)) => WinsorPolicy::censor(t),
            (PolicyKind::Censor, None) => Err(Error::Validation("censor policy needs a threshold".into())),
            (_, Some(_)) => Err(Error::Validation("a threshold only applies to the censor policy".into())),
        }
    }
}

/// Upper limit per country, in USD per tonne of carbon.
#[derive(Debug, Clone, PartialEq)]
pub struct WinsorLimits {
    pub per_country: BTreeMap<String, f64>,
}

impl WinsorLimits {
    /// Limits that never bind.
    pub fn unbounded(countries: &[CountryRecord]) -> Self {
        Self {
            per_country: countries
                .iter()
                .map(|c| (c.country_code.clone(), f64::INFINITY))
                .collect(),
        }
    }

    pub fn get(&self, country: &str) -> Option<f64> {
        self.per_country.get(country).copied()
    }

    pub fn min(&self) -> f64 {
        self.per_country.values().copied().fold(f64::INFINITY, f64::min)
    }
}

/// GDP per tonne of emissions, the ability to pay.
pub fn ability_to_pay(c: &CountryRecord) -> Result<f64> {
    if c.emissions <= 0.0 {
        return Err(Error::UndefinedIntensity(c.country_code.clone()));
    }
    Ok(c.gdp / c.emissions)
}

/// Tax share times the ability to pay.
pub fn leviathan_tax(c: &CountryRecord) -> Result<f64> {
    Ok(c.tax_share * ability_to_pay(c)?)
}

/// `s_max` is the largest estimate in the sample and becomes every limit
/// under the `none` and `censor` policies.
pub fn compute_limits(countries: &[CountryRecord], policy: WinsorPolicy, s_max: f64) -> Result<WinsorLimits> {
    if countries.is_empty() {
        return Err(Error::Empty("country panel"));
    }
    let per_country = countries
        .iter()
        .map(|c| {
            let w = match policy {
                WinsorPolicy::None | WinsorPolicy::Censor { .. } => {
                    ability_to_pay(c)?;
                    s_max
                }
                WinsorPolicy::Weitzman => ability_to_pay(c)?,
                WinsorPolicy::Hobbes => leviathan_tax(c)?,
            };
            Ok((c.country_code.clone(), w))
        })
        .collect::<Result<_>>()?;
    Ok(WinsorLimits { per_country })
}

/// Emission-weighted mean of the country limits.
pub fn global_limit(limits: &WinsorLimits, countries: &[CountryRecord]) -> Result<f64> {
    let total = numeric::sum(countries.iter().map(|c| c.emissions));
    if !(total > 0.0) {
        return Err(Error::Numeric("total emissions must be positive".into()));
    }
    let mut weighted = numeric::NeumaierSum::new();
    for c in countries {
        weighted.add(c.emissions * lookup(limits, &c.country_code)?);
    }
    Ok(weighted.total() / total)
}

fn lookup(limits: &WinsorLimits, code: &str) -> Result<f64> {
    limits
        .get(code)
        .ok_or_else(|| Error::Validation(format!("no limit for country `{code}`")))
}

/// Emission-weighted average of `min(s, W_c)`.
///
/// Returns `s` itself when no limit binds and the common clipped value when
/// every country clips to the same number, so those cases are exact.
pub fn winsorize_estimate(s: f64, limits: &WinsorLimits, countries: &[CountryRecord]) -> Result<f64> {
    if countries.is_empty() {
        return Err(Error::Empty("country panel"));
    }
    let mut total = numeric::NeumaierSum::new();
    let mut weighted = numeric::NeumaierSum::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in countries {
        let w = lookup(limits, &c.country_code)?;
        let clipped = s.min(w);
        if c.emissions > 0.0 {
            lo = lo.min(clipped);
            hi = hi.max(clipped);
        }
        total.add(c.emissions);
        weighted.add(c.emissions * clipped);
    }
    let total = total.total();
    if !(total > 0.0) {
        return Err(Error::Numeric("total emissions must be positive".into()));
    }
    if lo == hi {
        return Ok(lo);
    }
    Ok((weighted.total() / total).clamp(lo, hi))
}

/// Apply a policy to a weighted sample.
///
/// Winsorizing policies map every value and keep weights and order; `censor`
/// drops values above its threshold.
pub fn winsorize_sample(
    sample: &WeightedSample,
    limits: &WinsorLimits,
    countries: &[CountryRecord],
    policy: WinsorPolicy,
) -> Result<WeightedSample> {
    match policy {
        WinsorPolicy::Censor { threshold } => {
            let kept: Vec<(f64, f64)> = sample.pairs().iter().copied().filter(|p| p.0 <= threshold).collect();
            WeightedSample::new(kept)
        }
        WinsorPolicy::None | WinsorPolicy::Weitzman | WinsorPolicy::Hobbes => {
            let pairs = sample
                .pairs()
                .par_iter()
                .map(|&(v, w)| Ok((winsorize_estimate(v, limits, countries)?, w)))
                .collect::<Result<Vec<_>>>()?;
            WeightedSample::new(pairs)
        }
    }
}

/// Convenience: limits for `policy` from the panel, then the transformed sample.
pub fn apply_policy(
    sample: &WeightedSample,
    countries: &[CountryRecord],
    policy: WinsorPolicy,
) -> Result<(WinsorLimits, WeightedSample)> {
    let limits = compute_limits(countries, policy, sample.max_value())?;
    let out = winsorize_sample(sample, &limits, countries, policy)?;
    Ok((limits, out))
}
