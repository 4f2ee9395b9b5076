//! Composite covariance on a treatment's study times, a prior draw of the
//! latent effect path and its GP interpolation onto a grid.
//!
//! ```text
//! cargo run --example kernels
//! ```

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tbnma::kernels::{build_covariance, gp_condition, mvn_logpdf, mvn_sample, KernelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let times = [0.05, 0.12, 0.3, 0.31, 0.55, 0.7, 0.92];
    let params = KernelParams {
        psi: 0.05,
        s_b: 0.3,
        s_l: 0.4,
        phi: 0.5,
        rho: 3.0,
    };
    params.validate()?;

    let cov = build_covariance(&params, &times)?;
    println!(
        "K ({}x{}), jitter {:.1e}",
        cov.dim(),
        cov.dim(),
        cov.jitter()
    );
    for row in cov.matrix().row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:6.3}")).collect();
        println!("  {}", cells.join(" "));
    }

    let mean = DVector::from_element(times.len(), 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draw = mvn_sample(&mean, &cov, &mut rng);
    println!(
        "log density of the draw: {:.4}",
        mvn_logpdf(&draw, &mean, &cov)?
    );

    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let pred = gp_condition(&times, draw.as_slice(), 0.2, &params, &grid)?;
    println!("{:>5} {:>8} {:>8}", "t", "mean", "sd");
    for (i, t) in grid.iter().enumerate() {
        println!(
            "{:>5.2} {:>8.4} {:>8.4}",
            t,
            pred.mean[i],
            pred.cov[(i, i)].max(0.0).sqrt()
        );
    }

    let exact = KernelParams { psi: 0.0, ..params };
    let pred = gp_condition(&times, draw.as_slice(), 0.2, &exact, &times)?;
    let gap = (pred.mean - &draw).amax();
    println!("noise-free interpolation error at the data: {gap:.2e}");
    Ok(())
}
