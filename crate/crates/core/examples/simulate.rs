//! Generates one dataset per default scenario on the bundled skeleton and
//! writes each in the ingestion format.
//!
//! ```text
//! cargo run --example simulate -- [out_dir] [seed]
//! ```

use std::path::PathBuf;

use tbnma::cli::{ingest, write_csv};
use tbnma::network::TreatmentId;
use tbnma::simgen::{default_scenarios, generate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "simulated".into()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2024);
    std::fs::create_dir_all(&out)?;

    let skeleton =
        ingest(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/skeleton_58x19.csv"))?
            .with_baseline_label("LIN")?;
    for scenario in default_scenarios("VAN", seed) {
        let (data, truth) = generate(&skeleton, &scenario)?;
        let path = out.join(format!("sim_{}.csv", scenario.shape.name()));
        write_csv(&data, &path)?;
        let events: u64 = data.records().iter().map(|r| r.events).sum();
        println!(
            "{:<10} effect at t=0 {:>6.3}, t=1 {:>6.3}, {} events -> {}",
            scenario.shape.name(),
            truth.effect(truth.target, 0.0),
            truth.effect(truth.target, 1.0),
            events,
            path.display()
        );
        for k in (0..data.n_treatments())
            .map(TreatmentId)
            .filter(|&k| k != truth.target)
            .take(3)
        {
            println!(
                "  {} constant effect {:.3}",
                data.label(k),
                truth.effect(k, 0.5)
            );
        }
    }
    Ok(())
}
