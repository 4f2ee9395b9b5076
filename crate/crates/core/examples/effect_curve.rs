//! Simulates a sigmoidal effect path for the most common treatment, fits
//! all three models and prints their curves next to the truth.
//!
//! ```text
//! cargo run --release --example effect_curve
//! ```

use std::path::PathBuf;

use tbnma::cli::ingest;
use tbnma::model::{ModelKind, ModelSpec};
use tbnma::network::{network_summary, TreatmentId};
use tbnma::posterior::{compare_models, default_grid, effect_curve};
use tbnma::sampler::{run, PosteriorSamples, SamplerConfig};
use tbnma::simgen::{generate, Scenario, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let skeleton =
        ingest(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/skeleton_58x19.csv"))?;
    let occ = network_summary(&skeleton).occurrences;
    let mut ranked: Vec<usize> = (0..occ.len()).collect();
    ranked.sort_by_key(|&k| (std::cmp::Reverse(occ[k]), k));
    let skeleton = skeleton.with_baseline(TreatmentId(ranked[1]))?;
    let target = skeleton.label(TreatmentId(ranked[0])).to_string();

    let shape = Shape::Sigmoid {
        a: 0.8,
        h: -1.4,
        r: 12.0,
        t_mid: 0.5,
    };
    let (data, truth) = generate(&skeleton, &Scenario::new(shape, target.as_str(), 3))?;
    let k = truth.target;

    let config = SamplerConfig {
        n_iter: 8_000,
        burn_in: 4_000,
        thin: 5,
        ..SamplerConfig::default()
    };
    let grid = default_grid(11);
    let mut fits: Vec<(PosteriorSamples, ModelSpec)> = Vec::new();
    for kind in ModelKind::ALL {
        let tv: &[TreatmentId] = if kind == ModelKind::Bnma { &[] } else { &[k] };
        let spec = ModelSpec::new(kind, &data, tv)?;
        fits.push((run(&data, &spec, &config)?, spec));
    }

    println!("{target} against {}", data.label(data.baseline()));
    print!("{:>8} {:>7}", "year", "truth");
    for kind in ModelKind::ALL {
        print!(" {:>22}", kind.to_string());
    }
    println!();
    let curves = fits
        .iter()
        .map(|(s, spec)| effect_curve(s, spec, &data, k, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, &t) in grid.iter().enumerate() {
        print!("{:>8.1} {:>7.3}", data.to_calendar(t), truth.effect(k, t));
        for c in &curves {
            print!(
                " {:>6.3} [{:>6.3},{:>6.3}]",
                c.mean[i], c.q025[i], c.q975[i]
            );
        }
        println!();
    }
    for (kind, c) in ModelKind::ALL.iter().zip(&curves) {
        println!(
            "{kind}: rmse {:.3}, coverage {:.2}",
            c.rmse(|t| truth.effect(k, t)),
            c.coverage(|t| truth.effect(k, t))
        );
    }

    let runs: Vec<_> = fits.iter().map(|(s, spec)| (s, spec)).collect();
    let rows = compare_models(&runs, &data)?;
    println!("end-of-period effect of {target}:");
    for r in rows.iter().filter(|r| r.treatment == k) {
        println!(
            "  {:<6} {:>7.3} [{:.3}, {:.3}]",
            r.model.to_string(),
            r.mean,
            r.lower,
            r.upper
        );
    }
    Ok(())
}
