//! Fits the constant-effect model to an arm-level dataset and ranks the
//! treatments against the baseline.
//!
//! ```text
//! cargo run --release --example fit_bnma -- [file.csv] [baseline]
//! ```

use std::path::PathBuf;

use tbnma::cli::ingest;
use tbnma::model::{ModelKind, ModelSpec};
use tbnma::network::TreatmentId;
use tbnma::posterior::end_of_period;
use tbnma::sampler::{run, SamplerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/skeleton_58x19.csv")
    });
    let mut data = ingest(&path)?;
    if let Some(label) = args.next() {
        data = data.with_baseline_label(&label)?;
    }

    let spec = ModelSpec::new(ModelKind::Bnma, &data, &[])?;
    let config = SamplerConfig {
        n_iter: 6_000,
        burn_in: 3_000,
        thin: 5,
        ..SamplerConfig::default()
    };
    let samples = run(&data, &spec, &config)?;

    let mut rows = Vec::new();
    for k in (0..data.n_treatments()).map(TreatmentId) {
        if k != spec.baseline() {
            rows.push(end_of_period(&samples, &spec, &data, k)?);
        }
    }
    rows.sort_by(|a, b| b.mean.total_cmp(&a.mean));

    println!("log-odds ratios against {}", data.label(spec.baseline()));
    println!(
        "{:<8} {:>8} {:>8} {:>8} {:>8}",
        "label", "mean", "2.5%", "97.5%", "P(<0)"
    );
    for r in &rows {
        println!(
            "{:<8} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            r.label, r.mean, r.lower, r.upper, r.prob_negative
        );
    }
    let slow = samples.unconverged(1.05);
    if slow.is_empty() {
        println!("all monitored scalars have R-hat < 1.05");
    }
    for d in slow {
        println!("R-hat {:?} for {}", d.rhat, d.name);
    }
    Ok(())
}
