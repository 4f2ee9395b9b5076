//! Constant, quadratic and sigmoidal scenarios on the bundled 58-study
//! skeleton, each fitted with all three models.
//!
//! ```text
//! cargo run --release --example simulation_study -- [out_dir] [iters]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use tbnma::cli::{run_simstudy, SimStudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "simstudy_out".into()));
    let skeleton = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/skeleton_58x19.csv");
    let mut config = SimStudyConfig::new(skeleton, &out, 2024);
    if let Some(iters) = args.next() {
        config.sampler.n_iter = iters.parse()?;
        config.sampler.burn_in = config.sampler.n_iter / 2;
    }

    let start = Instant::now();
    let report = run_simstudy(&config)?;
    println!(
        "target {} against baseline {}, {:.1}s",
        report.target,
        report.baseline,
        start.elapsed().as_secs_f64()
    );
    println!(
        "{:<10} {:<6} {:>7} {:>9} {:>7} {:>9}",
        "scenario", "model", "rmse", "coverage", "width", "max_rhat"
    );
    for r in &report.runs {
        println!(
            "{:<10} {:<6} {:>7.3} {:>9.2} {:>7.3} {:>9.3}",
            r.scenario,
            r.model.to_string(),
            r.rmse,
            r.coverage,
            r.mean_width,
            r.max_rhat.unwrap_or(f64::NAN)
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("reports written to {}", out.display());
    Ok(())
}
