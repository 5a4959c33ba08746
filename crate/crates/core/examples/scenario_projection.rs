//! Project the mean estimate along each socioeconomic scenario. Without a
//! limit the mean grows geometrically; with limits it follows the evolving
//! carbon intensity and tax shares of the panel.

use std::path::Path;

use scc_winsor::scenario::{self, ProjectionParams};
use scc_winsor::{ingest, WinsorPolicy};

fn main() -> scc_winsor::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (estimates, _) = ingest::parse_estimates(&fixtures.join("estimates.csv"), &fixtures.join("papers.csv"))?;
    let sample = ingest::weighted_sample(&estimates, ingest::DEFAULT_REBASE_GROWTH)?;
    let countries = ingest::parse_countries(&fixtures.join("countries.csv"))?;
    let scenarios = ingest::parse_scenarios(&fixtures.join("scenarios.csv"))?;
    let params = ProjectionParams::default();

    println!("{:<6} {:<9} {:>10} {:>10} {:>9}", "", "policy", "2020", "2050", "growth/yr");
    for spec in &scenarios {
        for policy in [WinsorPolicy::None, WinsorPolicy::Weitzman, WinsorPolicy::Hobbes] {
            let path = scenario::project_mean_path(&sample, &countries, spec, policy, false, 2020, 2050, &params)?;
            let (first, last) = (&path.years[0], &path.years[path.years.len() - 1]);
            let rate = (last.mean_scc / first.mean_scc).powf(1.0 / f64::from(last.year - first.year)) - 1.0;
            println!(
                "{:<6} {:<9} {:>10.1} {:>10.1} {:>8.2}%",
                spec.name,
                policy.name(),
                first.mean_scc,
                last.mean_scc,
                100.0 * rate
            );
        }
    }
    Ok(())
}
