//! The sine-index design with many predictors, including d > n.
//!
//! cargo run --release --example high_dim_example2 -- [n] [d] [seed]

use std::time::Instant;

use splinesip::estimator::{fit_dataset, FitConfig};
use splinesip::montecarlo::{example2_theta0, gen_example2};

fn main() -> splinesip::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1000, |v| v.parse().expect("n"));
    let d: usize = args.next().map_or(200, |v| v.parse().expect("d"));
    let seed: u64 = args.next().map_or(0, |v| v.parse().expect("seed"));

    let data = gen_example2(n, d, 0.2, seed)?;
    let start = Instant::now();
    // Init::Auto starts from OLS when d < n and from the last axis otherwise
    let fit = fit_dataset(&data, &FitConfig::default())?;
    let elapsed = start.elapsed();

    let theta0 = example2_theta0(d);
    let est = fit.theta_original();
    let err = est
        .iter()
        .zip(&theta0)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    println!(
        "n {n}  d {d}  fitted in {elapsed:.2?} ({} iterations, converged {})",
        fit.iterations, fit.converged
    );
    println!("|theta_hat - theta0| = {err:.4}");
    for j in [0, 1, 2, d - 2, d - 1] {
        println!("  theta[{j:>3}]  {:>8.4}  (true {:.4})", est[j], theta0[j]);
    }
    Ok(())
}
