//! Replicated fits of the two-predictor design: bias, SD and MSE per coordinate.
//!
//! cargo run --release --example simulate_replications -- [reps] [seed]

use splinesip::estimator::FitConfig;
use splinesip::montecarlo::{run_replications, GeneratorSpec};

fn main() -> splinesip::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map_or(100, |v| v.parse().expect("reps"));
    let seed: u64 = args.next().map_or(0, |v| v.parse().expect("seed"));

    println!(
        "{:>5} {:>5} {:>4}  {:>10} {:>9} {:>9}  {:>10} {:>9} {:>9}  {:>9}",
        "delta", "sigma", "n", "bias1", "sd1", "mse1", "bias2", "sd2", "mse2", "avg"
    );
    for delta in [0.0, 1.0] {
        for sigma0 in [0.3, 0.5] {
            for n in [100, 300] {
                let spec = GeneratorSpec::Example1 { n, delta, sigma0 };
                let r = run_replications(&spec, reps, seed, &FitConfig::default())?;
                println!(
                    "{delta:>5} {sigma0:>5} {n:>4}  {:>10.5} {:>9.5} {:>9.2e}  {:>10.5} {:>9.5} {:>9.2e}  {:>9.2e}",
                    r.bias[0], r.sd[0], r.mse[0], r.bias[1], r.sd[1], r.mse[1], r.average_mse
                );
            }
        }
    }
    Ok(())
}
