//! Reading and validating the four input tables.
//!
//! All files are UTF-8, comma separated, with a fixed header row. Numbers use
//! `.` as the decimal point and no thousands separators. For every table we
//! also provide a writer that emits the canonical form: a canonical file
//! parses and re-serializes to the same bytes.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::stats::WeightedSample;

pub const ESTIMATES_HEADER: [&str; 5] = [
    "paper_id",
    "estimate_id",
    "scc_usd2015_per_tC",
    "emission_year",
    "author_weight",
];
pub const PAPERS_HEADER: [&str; 4] = [
    "paper_id",
    "peer_reviewed",
    "marginal_correct",
    "plausible_scenario",
];
pub const COUNTRIES_HEADER: [&str; 5] = [
    "iso3",
    "gdp_usd2015",
    "emissions_tC",
    "tax_share",
    "income_per_capita",
];
pub const SCENARIOS_HEADER: [&str; 5] = [
    "scenario",
    "year",
    "gdp_growth",
    "energy_intensity_decline",
    "carbon_intensity_decline",
];

/// Year every estimate is rebased to, and the year of the country panel.
pub const BASE_YEAR: i32 = 2019;
/// Average growth rate of the social cost of carbon used for rebasing.
pub const DEFAULT_REBASE_GROWTH: f64 = 0.0201;

pub const MIN_EMISSION_YEAR: i32 = 1980;
pub const MAX_EMISSION_YEAR: i32 = 2100;
pub const MAX_INTENSITY_DECLINE: f64 = 0.2;

/// One published estimate, in 2015 US dollars per tonne of carbon.
#[derive(Debug, Clone, PartialEq)]
pub struct SccEstimate {
    pub paper_id: String,
    pub estimate_id: String,
    /// May be negative.
    pub value: f64,
    pub emission_year: i32,
    pub author_weight: f64,
    /// 1 to 4, derived from the paper's flags.
    pub quality_score: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub peer_reviewed: bool,
    pub marginal_correct: bool,
    pub plausible_scenario: bool,
}

impl PaperRecord {
    /// One point for existing plus one for each quality flag.
    pub fn quality_score(&self) -> u8 {
        1 + self.peer_reviewed as u8 + self.marginal_correct as u8 + self.plausible_scenario as u8
    }
}

/// One country in one year.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryRecord {
    pub country_code: String,
    /// USD(2015) per year.
    pub gdp: f64,
    /// Tonnes of carbon per year.
    pub emissions: f64,
    /// Tax revenue as a fraction of income.
    pub tax_share: f64,
    /// USD(2015) per person per year.
    pub per_capita_income: f64,
}

impl CountryRecord {
    pub fn validate(&self) -> Result<()> {
        let code = &self.country_code;
        if code.is_empty() {
            return Err(Error::Validation("empty country code".into()));
        }
        if !(self.gdp.is_finite() && self.gdp > 0.0) {
            return Err(Error::Validation(format!("{code}: gdp must be positive, got {}", self.gdp)));
        }
        if !(self.emissions.is_finite() && self.emissions > 0.0) {
            return Err(Error::Validation(format!(
                "{code}: emissions must be positive, got {}",
                self.emissions
            )));
        }
        if !(0.0..=1.0).contains(&self.tax_share) {
            return Err(Error::Validation(format!(
                "{code}: tax_share must lie in [0, 1], got {}",
                self.tax_share
            )));
        }
        if !(self.per_capita_income.is_finite() && self.per_capita_income > 0.0) {
            return Err(Error::Validation(format!(
                "{code}: income_per_capita must be positive, got {}",
                self.per_capita_income
            )));
        }
        Ok(())
    }

    /// Implied population, held fixed through projections.
    pub fn population(&self) -> f64 {
        self.gdp / self.per_capita_income
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioRow {
    pub year: i32,
    pub gdp_growth: f64,
    pub energy_intensity_decline: f64,
    pub carbon_intensity_decline: f64,
}

/// Global growth and intensity paths for one named scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub rows: Vec<ScenarioRow>,
}

impl ScenarioSpec {
    pub fn row(&self, year: i32) -> Option<&ScenarioRow> {
        let first = self.rows.first()?.year;
        let idx = usize::try_from(year.checked_sub(first)?).ok()?;
        self.rows.get(idx)
    }

    pub fn first_year(&self) -> Option<i32> {
        self.rows.first().map(|r| r.year)
    }

    pub fn last_year(&self) -> Option<i32> {
        self.rows.last().map(|r| r.year)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Validation(format!("scenario {} has no rows", self.name)));
        }
        for pair in self.rows.windows(2) {
            if pair[1].year != pair[0].year + 1 {
                return Err(Error::Validation(format!(
                    "scenario {}: years must be contiguous and increasing, found {} after {}",
                    self.name, pair[1].year, pair[0].year
                )));
            }
        }
        for row in &self.rows {
            if !(row.gdp_growth.is_finite() && row.gdp_growth > -1.0) {
                return Err(Error::Validation(format!(
                    "scenario {} {}: gdp_growth must exceed -1",
                    self.name, row.year
                )));
            }
            for (label, d) in [
                ("energy_intensity_decline", row.energy_intensity_decline),
                ("carbon_intensity_decline", row.carbon_intensity_decline),
            ] {
                if !(-MAX_INTENSITY_DECLINE..=MAX_INTENSITY_DECLINE).contains(&d) {
                    return Err(Error::Validation(format!(
                        "scenario {} {}: {label} must lie in [-0.2, 0.2], got {d}",
                        self.name, row.year
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Scale an estimate to the 2019 emission year with compound growth.
pub fn rebase_to_2019(e: &SccEstimate, growth: f64) -> SccEstimate {
    rebase(e, growth, BASE_YEAR)
}

pub fn rebase(e: &SccEstimate, growth: f64, target_year: i32) -> SccEstimate {
    let years = target_year - e.emission_year;
    SccEstimate {
        value: e.value * (1.0 + growth).powi(years),
        emission_year: target_year,
        ..e.clone()
    }
}

pub fn combined_weight(e: &SccEstimate) -> f64 {
    e.author_weight * f64::from(e.quality_score)
}

/// Rebase every estimate and pair it with its combined weight.
pub fn weighted_sample(estimates: &[SccEstimate], growth: f64) -> Result<WeightedSample> {
    WeightedSample::new(
        estimates
            .iter()
            .map(|e| (rebase_to_2019(e, growth).value, combined_weight(e)))
            .collect(),
    )
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Table<R: Read> {
    path: PathBuf,
    reader: csv::Reader<R>,
}

impl<R: Read> Table<R> {
    fn new(reader: R, path: &Path, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let found = reader.headers().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        let found: Vec<&str> = found.iter().map(str::trim).collect();
        if found != header {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            reader,
        })
    }

    /// Yields (line number, fields) for every data row.
    fn rows(&mut self, width: usize) -> Result<Vec<(u64, Vec<String>)>> {
        let mut out = Vec::new();
        for record in self.reader.records() {
            let record = record.map_err(|e| Error::Parse {
                path: self.path.clone(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != width {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    line,
                    message: format!("expected {width} fields, found {}", record.len()),
                });
            }
            out.push((line, record.iter().map(|f| f.trim().to_string()).collect()));
        }
        Ok(out)
    }

    fn err(&self, line: u64, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message,
        }
    }

    fn float(&self, line: u64, column: &str, raw: &str) -> Result<f64> {
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(line, format!("{column}: `{raw}` is not a finite number"))),
        }
    }

    fn int(&self, line: u64, column: &str, raw: &str) -> Result<i32> {
        raw.parse::<i32>()
            .map_err(|_| self.err(line, format!("{column}: `{raw}` is not an integer")))
    }

    fn flag(&self, line: u64, column: &str, raw: &str) -> Result<bool> {
        match raw {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(self.err(line, format!("{column}: expected 0 or 1, found `{raw}`"))),
        }
    }
}

pub fn parse_papers(path: &Path) -> Result<Vec<PaperRecord>> {
    read_papers(open(path)?, path)
}

pub fn read_papers<R: Read>(reader: R, path: &Path) -> Result<Vec<PaperRecord>> {
    let mut table = Table::new(reader, path, &PAPERS_HEADER)?;
    let mut seen = HashSet::new();
    let mut papers = Vec::new();
    for (line, f) in table.rows(PAPERS_HEADER.len())? {
        if f[0].is_empty() {
            return Err(table.err(line, "empty paper_id".into()));
        }
        let paper = PaperRecord {
            peer_reviewed: table.flag(line, "peer_reviewed", &f[1])?,
            marginal_correct: table.flag(line, "marginal_correct", &f[2])?,
            plausible_scenario: table.flag(line, "plausible_scenario", &f[3])?,
            paper_id: f[0].clone(),
        };
        if !seen.insert(paper.paper_id.clone()) {
            return Err(Error::Duplicate {
                kind: "paper",
                key: paper.paper_id,
            });
        }
        papers.push(paper);
    }
    Ok(papers)
}

/// Read the estimates table and join each row to its paper's quality score.
pub fn parse_estimates(estimates: &Path, papers: &Path) -> Result<(Vec<SccEstimate>, Vec<PaperRecord>)> {
    let papers = parse_papers(papers)?;
    let estimates = read_estimates(open(estimates)?, estimates, &papers)?;
    Ok((estimates, papers))
}

pub fn read_estimates<R: Read>(reader: R, path: &Path, papers: &[PaperRecord]) -> Result<Vec<SccEstimate>> {
    let quality: HashMap<&str, u8> = papers
        .iter()
        .map(|p| (p.paper_id.as_str(), p.quality_score()))
        .collect();
    let mut table = Table::new(reader, path, &ESTIMATES_HEADER)?;
    let mut estimates = Vec::new();
    for (line, f) in table.rows(ESTIMATES_HEADER.len())? {
        let value = table.float(line, "scc_usd2015_per_tC", &f[2])?;
        let emission_year = table.int(line, "emission_year", &f[3])?;
        if !(MIN_EMISSION_YEAR..=MAX_EMISSION_YEAR).contains(&emission_year) {
            return Err(table.err(
                line,
                format!("emission_year {emission_year} outside [{MIN_EMISSION_YEAR}, {MAX_EMISSION_YEAR}]"),
            ));
        }
        let author_weight = if f[4].is_empty() {
            1.0
        } else {
            table.float(line, "author_weight", &f[4])?
        };
        if author_weight < 0.0 {
            return Err(table.err(line, format!("author_weight must be non-negative, got {author_weight}")));
        }
        let Some(&quality_score) = quality.get(f[0].as_str()) else {
            return Err(Error::UnknownPaper {
                path: path.to_path_buf(),
                line,
                paper_id: f[0].clone(),
            });
        };
        estimates.push(SccEstimate {
            paper_id: f[0].clone(),
            estimate_id: f[1].clone(),
            value,
            emission_year,
            author_weight,
            quality_score,
        });
    }
    Ok(estimates)
}

pub fn parse_countries(path: &Path) -> Result<Vec<CountryRecord>> {
    read_countries(open(path)?, path)
}

pub fn read_countries<R: Read>(reader: R, path: &Path) -> Result<Vec<CountryRecord>> {
    let mut table = Table::new(reader, path, &COUNTRIES_HEADER)?;
    let mut seen = HashSet::new();
    let mut countries = Vec::new();
    for (line, f) in table.rows(COUNTRIES_HEADER.len())? {
        let record = CountryRecord {
            country_code: f[0].clone(),
            gdp: table.float(line, "gdp_usd2015", &f[1])?,
            emissions: table.float(line, "emissions_tC", &f[2])?,
            tax_share: table.float(line, "tax_share", &f[3])?,
            per_capita_income: table.float(line, "income_per_capita", &f[4])?,
        };
        if let Err(Error::Validation(msg)) = record.validate() {
            return Err(Error::Validation(format!("{}: line {line}: {msg}", path.display())));
        }
        if !seen.insert(record.country_code.clone()) {
            return Err(Error::Duplicate {
                kind: "country",
                key: record.country_code,
            });
        }
        countries.push(record);
    }
    if countries.is_empty() {
        return Err(Error::Empty("country panel"));
    }
    Ok(countries)
}

pub fn parse_scenarios(path: &Path) -> Result<Vec<ScenarioSpec>> {
    read_scenarios(open(path)?, path)
}

/// Scenarios keep the order in which their names first appear.
pub fn read_scenarios<R: Read>(reader: R, path: &Path) -> Result<Vec<ScenarioSpec>> {
    let mut table = Table::new(reader, path, &SCENARIOS_HEADER)?;
    let mut specs: Vec<ScenarioSpec> = Vec::new();
    for (line, f) in table.rows(SCENARIOS_HEADER.len())? {
        if f[0].is_empty() {
            return Err(table.err(line, "empty scenario name".into()));
        }
        let row = ScenarioRow {
            year: table.int(line, "year", &f[1])?,
            gdp_growth: table.float(line, "gdp_growth", &f[2])?,
            energy_intensity_decline: table.float(line, "energy_intensity_decline", &f[3])?,
            carbon_intensity_decline: table.float(line, "carbon_intensity_decline", &f[4])?,
        };
        match specs.iter_mut().find(|s| s.name == f[0]) {
            Some(spec) => spec.rows.push(row),
            None => specs.push(ScenarioSpec {
                name: f[0].clone(),
                rows: vec![row],
            }),
        }
    }
    for spec in &specs {
        spec.validate()?;
    }
    Ok(specs)
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(writer)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> std::io::Result<()> {
    w.flush()
}

fn bool01(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_estimates<W: Write>(writer: W, estimates: &[SccEstimate]) -> std::io::Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(ESTIMATES_HEADER)?;
    for e in estimates {
        w.write_record([
            e.paper_id.clone(),
            e.estimate_id.clone(),
            e.value.to_string(),
            e.emission_year.to_string(),
            e.author_weight.to_string(),
        ])?;
    }
    flush(w)
}

pub fn write_papers<W: Write>(writer: W, papers: &[PaperRecord]) -> std::io::Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(PAPERS_HEADER)?;
    for p in papers {
        w.write_record([
            p.paper_id.as_str(),
            bool01(p.peer_reviewed),
            bool01(p.marginal_correct),
            bool01(p.plausible_scenario),
        ])?;
    }
    flush(w)
}

pub fn write_countries<W: Write>(writer: W, countries: &[CountryRecord]) -> std::io::Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(COUNTRIES_HEADER)?;
    for c in countries {
        w.write_record([
            c.country_code.clone(),
            c.gdp.to_string(),
            c.emissions.to_string(),
            c.tax_share.to_string(),
            c.per_capita_income.to_string(),
        ])?;
    }
    flush(w)
}

pub fn write_scenarios<W: Write>(writer: W, scenarios: &[ScenarioSpec]) -> std::io::Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(SCENARIOS_HEADER)?;
    for s in scenarios {
        for r in &s.rows {
            w.write_record([
                s.name.clone(),
                r.year.to_string(),
                r.gdp_growth.to_string(),
                r.energy_intensity_decline.to_string(),
                r.carbon_intensity_decline.to_string(),
            ])?;
        }
    }
    flush(w)
}
