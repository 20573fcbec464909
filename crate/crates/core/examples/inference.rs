//! Sandwich standard errors and 95% intervals for one fit.
//!
//! cargo run --release --example inference -- [n] [seed]

use splinesip::estimator::{fit_dataset, FitConfig};
use splinesip::inference::covariance;
use splinesip::montecarlo::{example2_theta0, gen_example2};

fn main() -> splinesip::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |v| v.parse().expect("n"));
    let seed: u64 = args.next().map_or(3, |v| v.parse().expect("seed"));

    let data = gen_example2(n, 4, 0.2, seed)?;
    let fit = fit_dataset(&data, &FitConfig::default())?;
    let cov = covariance(&data, &fit)?;

    println!("Hessian of the profile risk:\n{}", cov.hessian);
    println!("sandwich covariance:\n{}", cov.sandwich);
    let theta0 = example2_theta0(4);
    for (j, (t, se)) in fit.theta_original().iter().zip(&cov.se_original).enumerate() {
        let (lo, hi) = (t - 1.96 * se, t + 1.96 * se);
        println!(
            "theta[{j}] {t:.4}  se {se:.4}  95% [{lo:.4}, {hi:.4}]  true {:.4}",
            theta0[j]
        );
    }
    Ok(())
}
