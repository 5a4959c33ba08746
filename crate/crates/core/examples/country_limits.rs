//! Per-country upper limits: the ability to pay `Y/E` and the Leviathan
//! tax `τ·Y/E`, plus their emission-weighted world averages.

use std::path::Path;

use scc_winsor::winsor::{self, WinsorPolicy};

fn main() -> scc_winsor::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/countries.csv");
    let countries = scc_winsor::ingest::parse_countries(&path)?;

    let weitzman = winsor::compute_limits(&countries, WinsorPolicy::Weitzman, f64::INFINITY)?;
    let hobbes = winsor::compute_limits(&countries, WinsorPolicy::Hobbes, f64::INFINITY)?;
    let total: f64 = countries.iter().map(|c| c.emissions).sum();

    println!("{:<5} {:>9} {:>14} {:>14}", "iso3", "share", "ability", "leviathan");
    for c in &countries {
        let code = &c.country_code;
        println!(
            "{code:<5} {:>8.2}% {:>14.0} {:>14.0}",
            100.0 * c.emissions / total,
            weitzman.get(code).unwrap_or(f64::NAN),
            hobbes.get(code).unwrap_or(f64::NAN),
        );
    }
    println!(
        "{:<5} {:>9} {:>14.0} {:>14.0}",
        "WORLD",
        "",
        winsor::global_limit(&weitzman, &countries)?,
        winsor::global_limit(&hobbes, &countries)?
    );
    Ok(())
}
