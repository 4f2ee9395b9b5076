//! Runs the adaptive sampler on a conjugate normal-means model and checks
//! the draws against the closed-form posterior with split R-hat and ESS.
//!
//! ```text
//! cargo run --release --example diagnostics
//! ```

use tbnma::sampler::diagnostics::{ess, split_rhat};
use tbnma::sampler::toy::NormalMeans;
use tbnma::sampler::{run_kernel, SamplerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = NormalMeans::new(
        vec![vec![1.2, 0.8, 1.9, 1.1], vec![-0.4, 0.3], vec![5.0; 10]],
        1.0,
        0.0,
        4.0,
    );
    let config = SamplerConfig {
        n_chains: 4,
        n_iter: 12_000,
        burn_in: 2_000,
        thin: 1,
        seed: 11,
        ..SamplerConfig::default()
    };
    let samples = run_kernel(&model, &config, None)?;

    println!(
        "{:<6} {:>9} {:>9} {:>9} {:>9} {:>7} {:>8}",
        "group", "exact", "sampled", "exact sd", "sd", "rhat", "ess"
    );
    for g in 0..model.groups.len() {
        let chains = samples.trace(|s| s[g]);
        let all: Vec<f64> = chains.iter().flatten().copied().collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let (m, v) = model.posterior(g);
        println!(
            "{:<6} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>7.4} {:>8.0}",
            g,
            m,
            mean,
            v.sqrt(),
            var.sqrt(),
            split_rhat(&chains)?,
            ess(&chains)?
        );
    }
    for b in &samples.acceptance {
        println!("acceptance {}: {:.3}", b.block, b.rate);
    }
    Ok(())
}
