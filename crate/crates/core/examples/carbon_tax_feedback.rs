//! Set a carbon tax equal to the winsorized mean, let countries abate, and
//! recompute the limits until the tax settles. Compares the fixed point with
//! a single update and with no feedback at all.

use std::path::Path;

use scc_winsor::abatement::{self, FeedbackMode, FeedbackOptions};
use scc_winsor::{ingest, stats, winsor, WinsorPolicy};

fn main() -> scc_winsor::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (estimates, _) = ingest::parse_estimates(&fixtures.join("estimates.csv"), &fixtures.join("papers.csv"))?;
    let sample = ingest::weighted_sample(&estimates, ingest::DEFAULT_REBASE_GROWTH)?;
    let countries = ingest::parse_countries(&fixtures.join("countries.csv"))?;

    for policy in [WinsorPolicy::Weitzman, WinsorPolicy::Hobbes] {
        let (_, static_sample) = winsor::apply_policy(&sample, &countries, policy)?;
        let fixed = abatement::apply_tax_feedback(&sample, &countries, policy, &FeedbackOptions::default())?;
        let single = abatement::apply_tax_feedback(
            &sample,
            &countries,
            policy,
            &FeedbackOptions {
                mode: FeedbackMode::SinglePass,
                ..FeedbackOptions::default()
            },
        )?;
        println!("{policy}:");
        println!("  no feedback   {:>9.2}", stats::weighted_mean(&static_sample));
        println!("  single pass   {:>9.2}", single.mean);
        println!(
            "  fixed point   {:>9.2} after {} evaluations, emissions cut {:.1}%",
            fixed.mean,
            fixed.iterations,
            100.0 * fixed.global_reduction_rate
        );
        let trail: Vec<String> = fixed.iterates.iter().map(|t| format!("{t:.2}")).collect();
        println!("  taxes         {}", trail.join(" -> "));
    }
    Ok(())
}
