//! The empirical distribution of the estimates: decade histogram, a few
//! ECDF points, and the share below notable thresholds. Writes an SVG of
//! the cumulative distribution to the system temp directory.

use std::path::Path;

use scc_winsor::svg::{Chart, Scale, Series, Style};
use scc_winsor::{ingest, stats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (estimates, _) = ingest::parse_estimates(&fixtures.join("estimates.csv"), &fixtures.join("papers.csv"))?;
    let sample = ingest::weighted_sample(&estimates, ingest::DEFAULT_REBASE_GROWTH)?;

    for bin in stats::log_histogram(&sample) {
        let bar = "#".repeat((bin.share * 60.0).round() as usize);
        println!("{:>22} {:>6.1}% {bar}", bin.label(), 100.0 * bin.share);
    }
    for t in [0.0, 100.0, 1_000.0, 10_000.0] {
        println!("share below {t:>7}: {:.3}", stats::share_below(&sample, t));
    }
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        println!("quantile {p:.2}: {:.1}", stats::weighted_quantile(&sample, p)?);
    }

    let chart = Chart {
        title: "Estimates, cumulative".into(),
        x_label: "USD/tC".into(),
        y_label: "cumulative share".into(),
        x_scale: Scale::Asinh,
        y_scale: Scale::Linear,
        series: vec![Series {
            name: "all".into(),
            points: stats::ecdf(&sample),
            style: Style::Step,
        }],
    };
    let out = std::env::temp_dir().join("scc_cdf.svg");
    std::fs::write(&out, chart.render())?;
    println!("wrote {}", out.display());
    Ok(())
}
