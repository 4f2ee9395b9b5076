//! Reads an arm-level CSV, prints the network layout and the baseline the
//! models would use.
//!
//! ```text
//! cargo run --example ingest_csv -- [file.csv]
//! ```

use std::path::PathBuf;

use tbnma::cli::ingest;
use tbnma::network::{network_summary, select_baseline, TreatmentId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/skeleton_58x19.csv")
        });
    let data = ingest(&path)?;
    let summary = network_summary(&data);

    println!(
        "{} studies, {} treatments, {} arms, {} connected component(s)",
        data.n_studies(),
        data.n_treatments(),
        data.n_arms(),
        summary.n_components()
    );
    println!(
        "time axis: 0 = {:.2}, 1 = {:.2}",
        data.to_calendar(0.0),
        data.to_calendar(1.0)
    );

    let mut order: Vec<usize> = (0..data.n_treatments()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(summary.occurrences[k]));
    println!("{:<8} {:>8}", "label", "studies");
    for k in order {
        println!(
            "{:<8} {:>8}",
            data.label(TreatmentId(k)),
            summary.occurrences[k]
        );
    }

    let baseline = select_baseline(&summary, None)?;
    println!("default baseline: {}", data.label(baseline));

    let multi: Vec<_> = data.studies().iter().filter(|s| s.arms.len() > 2).collect();
    println!("{} multi-arm studies", multi.len());
    for s in multi {
        let arms: Vec<&str> = s.arms.iter().map(|a| data.label(a.treatment)).collect();
        println!("  {} ({}): {}", s.key, s.date, arms.join(" / "));
    }
    Ok(())
}
