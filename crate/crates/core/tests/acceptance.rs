//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every tolerance is a named constant below.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scc_winsor::abatement::{self, FeedbackMode, FeedbackOptions, DEFAULT_R_UNIT};
use scc_winsor::cli::{self, Cli};
use scc_winsor::ingest;
use scc_winsor::scenario::{self, ProjectionParams};
use scc_winsor::stats::{self, WeightedSample};
use scc_winsor::winsor::{self, WinsorPolicy};
use scc_winsor::CountryRecord;

const SEED: u64 = 0x5CC_2019;

const LEVIATHAN_ABILITY: f64 = 11_571.0;
const LEVIATHAN_SHARE: f64 = 0.138;
const LEVIATHAN_TARGET: f64 = 1_594.0;
const LEVIATHAN_REL_TOL: f64 = 0.005;

const ORACLE_INSTANCES: usize = 1_000;
const ORACLE_REL_TOL: f64 = 1e-12;

const ORDERING_INSTANCES: usize = 1_000;

const CALIBRATION_TARGET: f64 = 0.00126;
const CALIBRATION_ABS_TOL: f64 = 1e-9;

const GRADIENT_INSTANCES: usize = 100;
const GRADIENT_REL_TOL: f64 = 1e-6;

const GROWTH_TARGET: f64 = 1.0216;
const GROWTH_ABS_TOL: f64 = 1e-12;

const FEEDBACK_PANELS: usize = 200;
const FEEDBACK_MAX_ITERATIONS: usize = 100;
const CLOSED_FORM_REL_TOL: f64 = 1e-9;
const CLOSED_FORM_SOLVER_TOLERANCE: f64 = 1e-14;
/// Below `1 / (2 r_unit)` USD/tC full abatement costs more than the whole
/// economy, so feedback panels are drawn above it.
const FEEDBACK_MIN_ABILITY: f64 = 400.0;
/// Extrapolated and plain iteration must land on the same fixed point.
const PLAIN_AGREEMENT_REL_TOL: f64 = 1e-4;

const MEDIAN_INSTANCES: usize = 1_000;

const DATA_MEAN: (f64, f64) = (2_434.0, 0.10);
const DATA_MEDIAN: (f64, f64) = (128.0, 5.0);
const DATA_WEITZMAN: (f64, f64) = (375.0, 0.15);
const DATA_HOBBES: (f64, f64) = (221.0, 0.15);
const DATA_BIN_100_1000: (f64, f64) = (0.544, 0.03);

const ONE_SECOND: Duration = Duration::from_secs(1);
const FIVE_SECONDS: Duration = Duration::from_secs(5);

enum Verdict {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Check = fn() -> Verdict;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_panel(rng: &mut ChaCha8Rng, max_countries: usize) -> Vec<CountryRecord> {
    panel_above(rng, max_countries, 50.0)
}

/// Panel whose countries all have ability to pay of at least `min_ability`.
fn panel_above(rng: &mut ChaCha8Rng, max_countries: usize, min_ability: f64) -> Vec<CountryRecord> {
    let n = rng.gen_range(1..=max_countries);
    (0..n)
        .map(|i| {
            let gdp = log_uniform(rng, 1e9, 2e13);
            let ability = log_uniform(rng, min_ability, 50_000.0);
            CountryRecord {
                country_code: format!("C{i:02}"),
                gdp,
                emissions: gdp / ability,
                tax_share: rng.gen_range(0.0..=1.0),
                per_capita_income: log_uniform(rng, 500.0, 90_000.0),
            }
        })
        .collect()
}

fn random_sample(rng: &mut ChaCha8Rng, max_estimates: usize) -> WeightedSample {
    let n = rng.gen_range(1..=max_estimates);
    let pairs = (0..n)
        .map(|_| {
            let magnitude = log_uniform(rng, 0.5, 2e5);
            let value = if rng.gen_bool(0.05) { -magnitude } else { magnitude };
            (value, rng.gen_range(0.05..3.0))
        })
        .collect();
    WeightedSample::new(pairs).expect("random sample is valid")
}

fn brute_force(s: f64, panel: &[CountryRecord], limit: impl Fn(&CountryRecord) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in panel {
        let w = limit(c);
        num += c.emissions * if s < w { s } else { w };
        den += c.emissions;
    }
    num / den
}

fn leviathan_anchor() -> Verdict {
    let world = CountryRecord {
        country_code: "WLD".into(),
        gdp: LEVIATHAN_ABILITY * 1e10,
        emissions: 1e10,
        tax_share: LEVIATHAN_SHARE,
        per_capita_income: 11_000.0,
    };
    let Ok(limits) = winsor::compute_limits(std::slice::from_ref(&world), WinsorPolicy::Hobbes, 1e9) else {
        return Verdict::Fail("limit computation failed".into());
    };
    let w = limits.get("WLD").unwrap_or(f64::NAN);
    let err = rel_err(w, LEVIATHAN_TARGET);
    let msg = format!("Hobbes limit {w:.2} USD/tC, {:.3}% from {LEVIATHAN_TARGET}", err * 100.0);
    if err <= LEVIATHAN_REL_TOL {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..ORACLE_INSTANCES {
        let panel = random_panel(&mut rng, 10);
        let sample = random_sample(&mut rng, 50);
        for policy in [WinsorPolicy::Weitzman, WinsorPolicy::Hobbes] {
            let limits = winsor::compute_limits(&panel, policy, sample.max_value()).unwrap();
            for &(s, _) in sample.pairs() {
                let got = winsor::winsorize_estimate(s, &limits, &panel).unwrap();
                let want = brute_force(s, &panel, |c| match policy {
                    WinsorPolicy::Weitzman => c.gdp / c.emissions,
                    _ => c.tax_share * c.gdp / c.emissions,
                });
                worst = worst.max(rel_err(got, want));
            }
        }
    }
    let msg = format!("{ORACLE_INSTANCES} instances x 2 policies, worst relative error {worst:.2e}");
    if worst <= ORACLE_REL_TOL {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn policy_ordering() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    for i in 0..ORDERING_INSTANCES {
        let panel = random_panel(&mut rng, 10);
        let sample = random_sample(&mut rng, 50);
        let raw = stats::weighted_mean(&sample);
        let mean = |p| stats::weighted_mean(&winsor::apply_policy(&sample, &panel, p).unwrap().1);
        let (weitzman, hobbes) = (mean(WinsorPolicy::Weitzman), mean(WinsorPolicy::Hobbes));
        if !(hobbes <= weitzman && weitzman <= raw) {
            return Verdict::Fail(format!("instance {i}: hobbes {hobbes} weitzman {weitzman} raw {raw}"));
        }
        let (_, none) = winsor::apply_policy(&sample, &panel, WinsorPolicy::None).unwrap();
        if none.pairs() != sample.pairs() {
            return Verdict::Fail(format!("instance {i}: policy none altered the sample"));
        }
    }
    Verdict::Pass(format!("{ORDERING_INSTANCES} instances ordered; none is the identity"))
}

fn fixture_panel() -> Vec<CountryRecord> {
    ingest::parse_countries(&fixtures().join("countries.csv")).expect("fixture panel")
}

fn calibration_anchor() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut panels = vec![fixture_panel()];
    panels.extend((0..50).map(|_| random_panel(&mut rng, 10)));
    let mut worst: f64 = 0.0;
    for panel in &panels {
        let params = abatement::calibrate_alpha(panel, DEFAULT_R_UNIT).unwrap().with_tax(1.0);
        let mut reduced = 0.0;
        let mut total = 0.0;
        for c in panel {
            reduced += c.emissions * abatement::reduction_rate(&params, c).unwrap();
            total += c.emissions;
        }
        worst = worst.max((reduced / total - CALIBRATION_TARGET).abs());
    }
    let msg = format!("{} panels, worst |R - {CALIBRATION_TARGET}| = {worst:.2e}", panels.len());
    if worst <= CALIBRATION_ABS_TOL {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn gradient_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst: f64 = 0.0;
    for _ in 0..GRADIENT_INSTANCES {
        let panel = random_panel(&mut rng, 1);
        let c = &panel[0];
        let tax = rng.gen_range(1.0..1.0 / DEFAULT_R_UNIT * 0.99);
        let mut params = abatement::calibrate_alpha(&panel, DEFAULT_R_UNIT).unwrap().with_tax(tax);
        let alpha = params.alpha_of(&c.country_code).unwrap() * rng.gen_range(0.5..2.0);
        params.alpha.insert(c.country_code.clone(), alpha);
        let r_star = abatement::reduction_rate(&params, c).unwrap();
        let cost = |r: f64| abatement::abatement_cost(&params, c, r).unwrap().total();
        let scale = tax * c.emissions;
        let h = 1e-4_f64.min(r_star / 2.0).min((1.0 - r_star) / 2.0);
        let fd = |r: f64| (cost(r + h) - cost(r - h)) / (2.0 * h);
        // Central differences at the optimum must vanish, and at an arbitrary
        // interior point must match the marginal cost minus the tax.
        worst = worst.max(fd(r_star).abs() / scale);
        let r = rng.gen_range(0.1..0.9);
        let analytic = alpha * r * c.gdp - tax * c.emissions;
        worst = worst.max((fd(r) - analytic).abs() / scale);
    }
    let msg = format!("{GRADIENT_INSTANCES} parameterizations, worst |error| / (tau E) = {worst:.2e}");
    if worst < GRADIENT_REL_TOL {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn fixture_sample() -> WeightedSample {
    let (estimates, _) =
        ingest::parse_estimates(&fixtures().join("estimates.csv"), &fixtures().join("papers.csv")).unwrap();
    ingest::weighted_sample(&estimates, ingest::DEFAULT_REBASE_GROWTH).unwrap()
}

fn geometric_growth() -> Verdict {
    let scenarios = ingest::parse_scenarios(&fixtures().join("scenarios.csv")).unwrap();
    let Some(ssp2) = scenarios.iter().find(|s| s.name == "SSP2") else {
        return Verdict::Fail("fixture has no SSP2".into());
    };
    let result = scenario::project_mean_path(
        &fixture_sample(),
        &fixture_panel(),
        ssp2,
        WinsorPolicy::None,
        false,
        2020,
        2050,
        &ProjectionParams::default(),
    )
    .unwrap();
    let worst = result
        .years
        .windows(2)
        .map(|w| (w[1].mean_scc / w[0].mean_scc - GROWTH_TARGET).abs())
        .fold(0.0, f64::max);
    let msg = format!("{} years, worst |ratio - {GROWTH_TARGET}| = {worst:.2e}", result.years.len());
    if result.years.len() == 31 && worst <= GROWTH_ABS_TOL {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

/// Interior root of `r (A I / 2 - 1) τ² + τ - A = 0` for one country, or the
/// estimate itself when the limit never catches up with it.
fn closed_form(s: f64, c: &CountryRecord, policy: WinsorPolicy, r: f64) -> f64 {
    let intensity = c.emissions / c.gdp;
    let a_lim = match policy {
        WinsorPolicy::Weitzman => c.gdp / c.emissions,
        _ => c.tax_share * c.gdp / c.emissions,
    };
    if s <= a_lim {
        return s;
    }
    let a = r * (0.5 * a_lim * intensity - 1.0);
    let disc = 1.0 + 4.0 * a * a_lim;
    if disc < 0.0 {
        return s;
    }
    s.min((-1.0 + disc.sqrt()) / (2.0 * a))
}

fn fixed_point() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let opts = FeedbackOptions::default();
    let single = FeedbackOptions {
        mode: FeedbackMode::SinglePass,
        ..opts
    };
    let plain = FeedbackOptions {
        mode: FeedbackMode::Picard,
        tolerance: 1e-13,
        max_iterations: 100_000,
        ..opts
    };
    let mut most_iterations = 0;
    let mut disagreement: f64 = 0.0;
    for i in 0..FEEDBACK_PANELS {
        let panel = panel_above(&mut rng, 10, FEEDBACK_MIN_ABILITY);
        let sample = random_sample(&mut rng, 50);
        for policy in [WinsorPolicy::Weitzman, WinsorPolicy::Hobbes] {
            let full = match abatement::apply_tax_feedback(&sample, &panel, policy, &opts) {
                Ok(o) => o,
                Err(e) => return Verdict::Fail(format!("panel {i} {policy}: {e}")),
            };
            most_iterations = most_iterations.max(full.iterations);
            if full.iterations > FEEDBACK_MAX_ITERATIONS {
                return Verdict::Fail(format!("panel {i} {policy}: {} iterations", full.iterations));
            }
            if full.iterates.windows(2).any(|w| w[1] < w[0]) {
                return Verdict::Fail(format!("panel {i} {policy}: iterates not monotone {:?}", full.iterates));
            }
            let one = abatement::apply_tax_feedback(&sample, &panel, policy, &single).unwrap();
            if full.mean < one.mean {
                return Verdict::Fail(format!("panel {i} {policy}: converged {} < single pass {}", full.mean, one.mean));
            }
            let slow = abatement::apply_tax_feedback(&sample, &panel, policy, &plain).unwrap();
            disagreement = disagreement.max(rel_err(full.mean, slow.mean));
        }
    }

    let tight = FeedbackOptions {
        tolerance: CLOSED_FORM_SOLVER_TOLERANCE,
        ..opts
    };
    let mut worst: f64 = 0.0;
    for _ in 0..FEEDBACK_PANELS {
        let panel = panel_above(&mut rng, 1, FEEDBACK_MIN_ABILITY);
        let s = log_uniform(&mut rng, 10.0, 50_000.0);
        let sample = WeightedSample::new(vec![(s, 1.0)]).unwrap();
        for policy in [WinsorPolicy::Weitzman, WinsorPolicy::Hobbes] {
            let out = match abatement::apply_tax_feedback(&sample, &panel, policy, &tight) {
                Ok(o) => o,
                Err(e) => return Verdict::Fail(format!("one-country case: {e}")),
            };
            worst = worst.max(rel_err(out.mean, closed_form(s, &panel[0], policy, DEFAULT_R_UNIT)));
        }
    }
    let msg = format!(
        "{FEEDBACK_PANELS} panels x 2 policies, at most {most_iterations} iterations, \
         {disagreement:.1e} from plain iteration; one-country worst relative error {worst:.2e}"
    );
    if worst <= CLOSED_FORM_REL_TOL && disagreement <= PLAIN_AGREEMENT_REL_TOL {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn median_invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut checked = 0;
    for i in 0..MEDIAN_INSTANCES {
        let mut panel = random_panel(&mut rng, 10);
        let sample = random_sample(&mut rng, 50);
        let median = stats::weighted_median(&sample);
        // Lift every limit above the median by raising GDP.
        let floor = median.abs().max(1.0) * rng.gen_range(1.0001..10.0);
        for c in &mut panel {
            let hobbes = c.tax_share * c.gdp / c.emissions;
            if hobbes <= floor {
                c.tax_share = c.tax_share.max(0.05);
                c.gdp = floor * c.emissions / c.tax_share * 1.01;
            }
        }
        for policy in [WinsorPolicy::Weitzman, WinsorPolicy::Hobbes] {
            let (limits, out) = winsor::apply_policy(&sample, &panel, policy).unwrap();
            if limits.min() <= median {
                return Verdict::Fail(format!("instance {i}: setup left a limit below the median"));
            }
            let got = stats::weighted_median(&out);
            if got != median {
                return Verdict::Fail(format!("instance {i} {policy}: median {got} != raw {median}"));
            }
            checked += 1;
        }
    }
    Verdict::Pass(format!("{checked} winsorized medians identical to the raw median"))
}

fn published_dataset() -> Verdict {
    let Some(dir) = std::env::var_os("SCC_DATA_DIR").map(PathBuf::from) else {
        return Verdict::NotRun("set SCC_DATA_DIR to a directory with estimates.csv, papers.csv, countries.csv".into());
    };
    let loaded = ingest::parse_estimates(&dir.join("estimates.csv"), &dir.join("papers.csv"))
        .and_then(|(e, _)| ingest::weighted_sample(&e, ingest::DEFAULT_REBASE_GROWTH))
        .and_then(|s| ingest::parse_countries(&dir.join("countries.csv")).map(|c| (s, c)));
    let (sample, panel) = match loaded {
        Ok(x) => x,
        Err(e) => return Verdict::Fail(format!("cannot load {}: {e}", dir.display())),
    };
    let mean_of = |p| stats::weighted_mean(&winsor::apply_policy(&sample, &panel, p).unwrap().1);
    let bin = stats::log_histogram(&sample)
        .into_iter()
        .find(|b| b.lower == Some(100.0) && b.upper == 1000.0)
        .map_or(0.0, |b| b.share);
    let checks = [
        ("mean", stats::weighted_mean(&sample), DATA_MEAN, true),
        ("median", stats::weighted_median(&sample), DATA_MEDIAN, false),
        ("weitzman", mean_of(WinsorPolicy::Weitzman), DATA_WEITZMAN, true),
        ("hobbes", mean_of(WinsorPolicy::Hobbes), DATA_HOBBES, true),
        ("bin(100,1000]", bin, DATA_BIN_100_1000, false),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, got, (want, tol), relative) in checks {
        let err = if relative { rel_err(got, want) } else { (got - want).abs() };
        ok &= err <= tol;
        parts.push(format!("{name} {got:.4} (target {want}, {})", if err <= tol { "ok" } else { "out" }));
    }
    let msg = parts.join("; ");
    if ok {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn run_all_commands(out: &Path, threads: usize) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let f = fixtures();
    let input = |name: &str| f.join(name).display().to_string();
    let invocations: [(&str, &[&str]); 6] = [
        ("stats", &["--censor-threshold", "1594"]),
        ("cdf", &["--tail-from", "1000"]),
        ("hist", &[]),
        ("limits", &[]),
        ("project", &["--to", "2035"]),
        ("project", &["--to", "2035", "--with-tax"]),
    ];
    let mut files = BTreeMap::new();
    for (i, (command, extra)) in invocations.iter().enumerate() {
        let dir = out.join(format!("{i}-{command}"));
        let mut argv: Vec<String> = vec!["sccw".into(), command.to_string()];
        for (flag, file) in [
            ("--estimates", "estimates.csv"),
            ("--papers", "papers.csv"),
            ("--countries", "countries.csv"),
            ("--scenarios", "scenarios.csv"),
        ] {
            argv.push(flag.into());
            argv.push(input(file));
        }
        argv.extend(["--out".into(), dir.display().to_string(), "--svg".into()]);
        argv.extend(["--threads".into(), threads.to_string()]);
        argv.extend(extra.iter().map(|s| s.to_string()));
        let parsed = Cli::try_parse_from(&argv).map_err(|e| e.to_string())?;
        let written = cli::run(&parsed).map_err(|e| format!("{command}: {e}"))?;
        for path in written {
            let key = format!("{i}-{command}/{}", path.file_name().unwrap().to_string_lossy());
            files.insert(key, fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn determinism() -> Verdict {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let mut runs = Vec::new();
    for (k, threads) in [1, 4, 1, 4].into_iter().enumerate() {
        match run_all_commands(&tmp.path().join(format!("run{k}")), threads) {
            Ok(files) => runs.push(files),
            Err(e) => return Verdict::Fail(e),
        }
    }
    let reference = &runs[0];
    for (k, run) in runs.iter().enumerate().skip(1) {
        if run.keys().ne(reference.keys()) {
            return Verdict::Fail(format!("run {k} wrote a different file set"));
        }
        for (name, bytes) in run {
            if bytes != &reference[name] {
                return Verdict::Fail(format!("run {k}: {name} differs"));
            }
        }
    }
    Verdict::Pass(format!(
        "{} files byte-identical across 4 runs (1 and 4 workers)",
        reference.len()
    ))
}

fn main() {
    let criteria: [(u8, &str, Duration, Check); 10] = [
        (1, "leviathan anchor", ONE_SECOND, leviathan_anchor),
        (2, "winsorizing oracle", FIVE_SECONDS, oracle_equivalence),
        (3, "policy ordering", FIVE_SECONDS, policy_ordering),
        (4, "calibration anchor", ONE_SECOND, calibration_anchor),
        (5, "gradient check", ONE_SECOND, gradient_check),
        (6, "geometric growth", ONE_SECOND, geometric_growth),
        (7, "fixed point", FIVE_SECONDS, fixed_point),
        (8, "median invariance", ONE_SECOND, median_invariance),
        (9, "published dataset", FIVE_SECONDS, published_dataset),
        (10, "determinism", FIVE_SECONDS, determinism),
    ];
    let mut failures = 0;
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let verdict = check();
        let elapsed = start.elapsed();
        let timing = format!("{:.3}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs());
        let slow = elapsed > limit;
        match verdict {
            Verdict::Pass(msg) if !slow => println!("PASS criterion {n} ({name}): {msg} [{timing}]"),
            Verdict::Pass(msg) => {
                failures += 1;
                println!("FAIL criterion {n} ({name}): over time limit; {msg} [{timing}]");
            }
            Verdict::Fail(msg) => {
                failures += 1;
                println!("FAIL criterion {n} ({name}): {msg} [{timing}]");
            }
            Verdict::NotRun(msg) => println!("NOT RUN criterion {n} ({name}): {msg}"),
        }
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
