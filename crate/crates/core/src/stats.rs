//! Weighted distributional statistics.
//!
//! Reductions use compensated summation in a fixed order, so every statistic
//! here is reproducible bit for bit. Quantiles are the generalized inverse of
//! the weighted ECDF: the smallest value whose cumulative weight reaches the
//! target. The mode is the peak of a weighted Gaussian kernel density fitted
//! on `asinh`-transformed values, which copes with negative estimates and a
//! spread of many orders of magnitude.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{self, NeumaierSum};

/// Points in the kernel density evaluation grid.
pub const MODE_GRID_POINTS: usize = 2048;

/// Value/weight pairs with finite entries, non-negative weights and a
/// positive total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pairs: Vec<(f64, f64)>,
}

impl WeightedSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("sample"));
        }
        for &(v, w) in &pairs {
            if !v.is_finite() {
                return Err(Error::Validation(format!("non-finite value {v} in sample")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Validation(format!("weight {w} is not a finite non-negative number")));
            }
        }
        let sample = Self { pairs };
        if sample.total_weight() <= 0.0 {
            return Err(Error::Validation("sample weights sum to zero".into()));
        }
        Ok(sample)
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_weight(&self) -> f64 {
        numeric::sum(self.pairs.iter().map(|p| p.1))
    }

    pub fn into_pairs(self) -> Vec<(f64, f64)> {
        self.pairs
    }

    /// Sorted by value with the weights of equal values merged.
    fn consolidated(&self) -> Vec<(f64, f64)> {
        let mut sorted = self.pairs.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, NeumaierSum)> = Vec::with_capacity(sorted.len());
        for (v, w) in sorted {
            match out.last_mut() {
                Some((last, acc)) if *last == v => acc.add(w),
                _ => {
                    let mut acc = NeumaierSum::new();
                    acc.add(w);
                    out.push((v, acc));
                }
            }
        }
        out.into_iter().map(|(v, acc)| (v, acc.total())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub std_dev: f64,
    pub std_error: f64,
    pub effective_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub std_error: f64,
    pub std_dev: f64,
    pub mode: f64,
    pub median: f64,
    pub effective_n: f64,
}

pub fn weighted_mean(s: &WeightedSample) -> f64 {
    let num = numeric::sum(s.pairs.iter().map(|&(v, w)| v * w));
    num / s.total_weight()
}

/// Population standard deviation, with the standard error taken over the
/// effective sample size `(Σw)² / Σw²`.
pub fn weighted_sd_se(s: &WeightedSample) -> Result<Spread> {
    let positive = s.pairs.iter().filter(|p| p.1 > 0.0).count();
    if positive < 2 {
        return Err(Error::Validation(format!(
            "standard deviation needs at least 2 positively weighted values, found {positive}"
        )));
    }
    let mean = weighted_mean(s);
    let total = s.total_weight();
    let ss = numeric::sum(s.pairs.iter().map(|&(v, w)| w * (v - mean) * (v - mean)));
    let sum_sq_w = numeric::sum(s.pairs.iter().map(|&(_, w)| w * w));
    let std_dev = (ss / total).sqrt();
    let effective_n = total * total / sum_sq_w;
    Ok(Spread {
        std_dev,
        std_error: std_dev / effective_n.sqrt(),
        effective_n,
    })
}

/// Smallest value whose cumulative normalized weight reaches `p`.
pub fn weighted_quantile(s: &WeightedSample, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("quantile level {p} outside [0, 1]")));
    }
    let target = p * s.total_weight();
    let mut cum = NeumaierSum::new();
    let mut last = None;
    for (v, w) in s.consolidated() {
        if w <= 0.0 {
            continue;
        }
        cum.add(w);
        last = Some(v);
        if cum.total() >= target {
            return Ok(v);
        }
    }
    // Rounding can leave the running total a hair below the full weight.
    last.ok_or(Error::Empty("sample"))
}

pub fn weighted_median(s: &WeightedSample) -> f64 {
    weighted_quantile(s, 0.5).expect("0.5 is a valid level")
}

/// Silverman's rule on the supplied (already transformed) points.
fn silverman_bandwidth(points: &WeightedSample) -> f64 {
    let sd = weighted_sd_se(points).map(|s| s.std_dev).unwrap_or(0.0);
    let q1 = weighted_quantile(points, 0.25).expect("valid level");
    let q3 = weighted_quantile(points, 0.75).expect("valid level");
    let iqr_scale = (q3 - q1) / 1.34;
    let spread = match (sd > 0.0, iqr_scale > 0.0) {
        (true, true) => sd.min(iqr_scale),
        (true, false) => sd,
        (false, true) => iqr_scale,
        (false, false) => 0.0,
    };
    let total = points.total_weight();
    let sum_sq = numeric::sum(points.pairs.iter().map(|p| p.1 * p.1));
    let n_eff = total * total / sum_sq;
    0.9 * spread * n_eff.powf(-0.2)
}

/// Peak of the weighted kernel density on the `asinh` scale, mapped back.
///
/// `bandwidth_scale` multiplies Silverman's bandwidth.
pub fn weighted_mode(s: &WeightedSample, bandwidth_scale: f64) -> f64 {
    let positive: Vec<(f64, f64)> = s.pairs.iter().copied().filter(|p| p.1 > 0.0).collect();
    let lo = positive.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = positive.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return lo;
    }
    let transformed = WeightedSample {
        pairs: positive.iter().map(|&(v, w)| (v.asinh(), w)).collect(),
    };
    let h = bandwidth_scale * silverman_bandwidth(&transformed);
    if !(h > 0.0) {
        return weighted_median(s);
    }
    let (t_lo, t_hi) = (lo.asinh(), hi.asinh());
    let step = (t_hi - t_lo) / (MODE_GRID_POINTS - 1) as f64;
    let density: Vec<f64> = (0..MODE_GRID_POINTS)
        .into_par_iter()
        .map(|i| {
            let x = t_lo + step * i as f64;
            numeric::sum(transformed.pairs.iter().map(|&(t, w)| {
                let z = (x - t) / h;
                w * (-0.5 * z * z).exp()
            }))
        })
        .collect();
    let mut best = 0;
    for (i, &d) in density.iter().enumerate() {
        if d > density[best] {
            best = i;
        }
    }
    match best {
        0 => lo,
        i if i == MODE_GRID_POINTS - 1 => hi,
        i => (t_lo + step * i as f64).sinh(),
    }
}

/// Sorted unique values with their cumulative weight share; ends at 1.
pub fn ecdf(s: &WeightedSample) -> Vec<(f64, f64)> {
    let total = s.total_weight();
    let mut cum = NeumaierSum::new();
    let mut out: Vec<(f64, f64)> = s
        .consolidated()
        .into_iter()
        .map(|(v, w)| {
            cum.add(w);
            (v, (cum.total() / total).min(1.0))
        })
        .collect();
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    out
}

/// Share of weight on values strictly below `threshold`.
pub fn share_below(s: &WeightedSample, threshold: f64) -> f64 {
    let below = numeric::sum(s.pairs.iter().filter(|p| p.0 < threshold).map(|p| p.1));
    below / s.total_weight()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistBin {
    /// Exclusive lower edge; `None` for the negative bucket.
    pub lower: Option<f64>,
    /// Inclusive upper edge; also the bin's label.
    pub upper: f64,
    pub share: f64,
}

impl HistBin {
    pub fn label(&self) -> String {
        match self.lower {
            None => "<0".to_string(),
            Some(lo) => format!("({lo},{}]", self.upper),
        }
    }
}

/// Decade index: 0 for [0, 1], k for (10^(k-1), 10^k].
fn decade(v: f64) -> i32 {
    if v <= 1.0 {
        return 0;
    }
    let mut k = v.log10().ceil() as i32;
    while 10f64.powi(k) < v {
        k += 1;
    }
    while k > 1 && 10f64.powi(k - 1) >= v {
        k -= 1;
    }
    k
}

/// Weighted shares in decade bins, labelled by their upper bound, with a
/// single bucket collecting all negative values. Bins run contiguously from
/// the lowest to the highest populated decade.
pub fn log_histogram(s: &WeightedSample) -> Vec<HistBin> {
    let total = s.total_weight();
    let mut negative = NeumaierSum::new();
    let mut has_negative = false;
    let mut decades: Vec<(i32, f64)> = Vec::with_capacity(s.len());
    for &(v, w) in &s.pairs {
        if v < 0.0 {
            has_negative = true;
            negative.add(w);
        } else {
            decades.push((decade(v), w));
        }
    }
    let mut bins = Vec::new();
    if has_negative {
        bins.push(HistBin {
            lower: None,
            upper: 0.0,
            share: negative.total() / total,
        });
    }
    if let (Some(lo), Some(hi)) = (
        decades.iter().map(|d| d.0).min(),
        decades.iter().map(|d| d.0).max(),
    ) {
        let mut acc = vec![NeumaierSum::new(); (hi - lo + 1) as usize];
        for &(k, w) in &decades {
            acc[(k - lo) as usize].add(w);
        }
        for (i, a) in acc.iter().enumerate() {
            let k = lo + i as i32;
            bins.push(HistBin {
                lower: Some(if k == 0 { 0.0 } else { 10f64.powi(k - 1) }),
                upper: 10f64.powi(k),
                share: a.total() / total,
            });
        }
    }
    bins
}

pub fn summarize(s: &WeightedSample, bandwidth_scale: f64) -> Result<SummaryStats> {
    let spread = weighted_sd_se(s)?;
    Ok(SummaryStats {
        mean: weighted_mean(s),
        std_error: spread.std_error,
        std_dev: spread.std_dev,
        mode: weighted_mode(s, bandwidth_scale),
        median: weighted_median(s),
        effective_n: spread.effective_n,
    })
}
