//! Weighted mean, standard error, mode and median of the estimates under
//! every policy, the way `sccw stats` tabulates them.

use std::path::Path;

use scc_winsor::{ingest, stats, winsor, WinsorPolicy};

fn main() -> scc_winsor::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (estimates, _) = ingest::parse_estimates(&fixtures.join("estimates.csv"), &fixtures.join("papers.csv"))?;
    let sample = ingest::weighted_sample(&estimates, ingest::DEFAULT_REBASE_GROWTH)?;
    let countries = ingest::parse_countries(&fixtures.join("countries.csv"))?;

    let policies = [
        WinsorPolicy::None,
        WinsorPolicy::Weitzman,
        WinsorPolicy::Hobbes,
        WinsorPolicy::censor(1_594.0)?,
    ];
    println!("{:<9} {:>10} {:>9} {:>8} {:>8} {:>7}", "policy", "mean", "s.e.", "mode", "median", "n_eff");
    for policy in policies {
        let (_, transformed) = winsor::apply_policy(&sample, &countries, policy)?;
        let s = stats::summarize(&transformed, 1.0)?;
        println!(
            "{:<9} {:>10.1} {:>9.1} {:>8.1} {:>8.1} {:>7.1}",
            policy.name(),
            s.mean,
            s.std_error,
            s.mode,
            s.median,
            s.effective_n
        );
    }
    Ok(())
}
