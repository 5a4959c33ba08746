//! Load the estimate database, rebase every estimate to 2019 and show how
//! author weights and quality scores combine.
//!
//! ```text
//! cargo run --example rebase_and_weights
//! ```

use std::path::Path;

use scc_winsor::ingest::{self, DEFAULT_REBASE_GROWTH};

fn main() -> scc_winsor::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (estimates, papers) =
        ingest::parse_estimates(&fixtures.join("estimates.csv"), &fixtures.join("papers.csv"))?;
    println!("{} estimates from {} papers", estimates.len(), papers.len());

    println!("{:<8} {:>6} {:>14} {:>14} {:>8}", "id", "year", "as published", "in 2019", "weight");
    for e in estimates.iter().filter(|e| e.emission_year != ingest::BASE_YEAR).take(8) {
        let rebased = ingest::rebase_to_2019(e, DEFAULT_REBASE_GROWTH);
        println!(
            "{:<8} {:>6} {:>14.2} {:>14.2} {:>8.3}",
            e.estimate_id,
            e.emission_year,
            e.value,
            rebased.value,
            ingest::combined_weight(e)
        );
    }

    let sample = ingest::weighted_sample(&estimates, DEFAULT_REBASE_GROWTH)?;
    println!("total weight {:.3} over {} values", sample.total_weight(), sample.len());
    Ok(())
}
