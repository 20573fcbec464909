//! The building blocks: the index transform onto [0, 1] and a cubic B-spline fit.
//!
//! cargo run --example splines_and_transform

use splinesip::splines::{eval_basis, eval_spline, fit_ls_spline, SplineBasisSpec};
use splinesip::transform::{fd_cdf, fd_pdf};

fn main() -> splinesip::Result<()> {
    let (d, a) = (4, 2.5);
    println!("F_d and its density for d = {d}, a = {a}");
    for k in 0..=4 {
        let v = -a + k as f64 * a / 2.0;
        println!("  v {v:>6.2}  F {:.4}  f {:.4}", fd_cdf(v, d, a)?, fd_pdf(v, d, a)?);
    }

    let spec = SplineBasisSpec::cubic(3);
    println!("knots {:?}", spec.knots());
    println!("basis at 0.3: {:?}", eval_basis(0.3, &spec)?);

    let u: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
    let y: Vec<f64> = u.iter().map(|t| (6.0 * t).sin()).collect();
    let fit = fit_ls_spline(&u, &y, &spec)?;
    println!("rss {:.3e}", fit.rss);
    for t in [0.1, 0.5, 0.9] {
        println!(
            "  s({t}) = {:.4}  sin(6t) = {:.4}",
            eval_spline(&fit, t)?,
            (6.0 * t).sin()
        );
    }
    Ok(())
}
