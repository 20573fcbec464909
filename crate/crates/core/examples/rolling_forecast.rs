//! Out-of-sample one-step forecasts against a linear baseline.
//!
//! cargo run --release --example rolling_forecast -- [seed]

use nalgebra::{DMatrix, DVector};
use splinesip::estimator::FitConfig;
use splinesip::montecarlo::{gen_naarx, linear_forecast, rolling_forecast};
use splinesip::Dataset;

fn main() -> splinesip::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |v| v.parse().expect("seed"));
    let s = gen_naarx(1096, seed);

    // rows t = 1..T with predictors (y_{t-1}, x_t, x_{t-1})
    let rows = s.y.len() - 1;
    let x = DMatrix::from_fn(rows, 3, |i, j| match j {
        0 => s.y[i],
        1 => s.x[i + 1],
        _ => s.x[i],
    });
    let y = DVector::from_fn(rows, |i, _| s.y[i + 1]);
    let data = Dataset::new(x, y, vec!["y_lag1".into(), "x_lag0".into(), "x_lag1".into()])?;

    let split = 729;
    let (sip, fit) = rolling_forecast(&data, split, &FitConfig::default())?;
    let lin = linear_forecast(&data, split)?;
    println!("trained on {split} rows, forecasting {}", sip.rows.len());
    println!("direction {:?}", fit.theta_original());
    println!("mspe  sip {:.4}  linear {:.4}", sip.mspe, lin.mspe);
    for k in 0..5 {
        println!(
            "  row {}  actual {:>7.3}  sip {:>7.3}  linear {:>7.3}",
            sip.rows[k], sip.actual[k], sip.predictions[k], lin.predictions[k]
        );
    }
    Ok(())
}
