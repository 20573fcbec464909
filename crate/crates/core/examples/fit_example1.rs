//! Fit the two-predictor design and print the direction and a few link values.
//!
//! cargo run --release --example fit_example1 -- [n] [seed]

use splinesip::estimator::{fit_dataset, link_curve, FitConfig};
use splinesip::montecarlo::{example1_theta0, gen_example1};

fn main() -> splinesip::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(100, |v| v.parse().expect("n"));
    let seed: u64 = args.next().map_or(1, |v| v.parse().expect("seed"));

    let data = gen_example1(n, 0.0, 0.3, seed)?;
    let fit = fit_dataset(&data, &FitConfig::default())?;

    println!("theta0     {:?}", example1_theta0());
    println!("theta_hat  {:?}", fit.theta_original());
    println!(
        "risk {:.5}  knots {}  iterations {}  converged {}",
        fit.risk,
        fit.interior_knots(),
        fit.iterations,
        fit.converged
    );
    println!("standardized index  link");
    for (v, g) in link_curve(&fit, 9)? {
        println!("{v:>10.4}  {g:>10.4}");
    }
    Ok(())
}
