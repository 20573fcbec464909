//! BIC selection over lags of a response and an exogenous input.
//!
//! cargo run --release --example select_lags -- [length] [max_lag] [seed]

use splinesip::modelselect::{select_subset, CandidatePool, SelectConfig};
use splinesip::montecarlo::gen_naarx;

fn main() -> splinesip::Result<()> {
    let mut args = std::env::args().skip(1);
    let len: usize = args.next().map_or(600, |v| v.parse().expect("length"));
    let max_lag: usize = args.next().map_or(3, |v| v.parse().expect("max lag"));
    let seed: u64 = args.next().map_or(1, |v| v.parse().expect("seed"));

    // y depends on y_{t-1}, x_t and x_{t-1}
    let series = gen_naarx(len, seed);
    let pool = CandidatePool::from_series("y", &series.y, &[("x".to_string(), series.x)], max_lag)?;
    println!("{} candidates, {} rows", pool.len(), pool.data().n());

    let result = select_subset(&pool, &SelectConfig::default())?;
    for e in &result.trace {
        let bic = e.bic.map_or("failed".to_string(), |b| format!("{b:.2}"));
        println!(
            "{:?} step {} {:?} bic {bic}{}",
            e.phase,
            e.step,
            e.columns,
            if e.accepted { "  <- accepted" } else { "" }
        );
    }
    println!("chosen {:?} (bic {:.2})", result.chosen, result.bic);
    println!("direction {:?}", result.fit.theta_original());
    Ok(())
}
