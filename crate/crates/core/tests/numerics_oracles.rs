mod common;

use common::{inc_beta_oracle, Lcg};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use splinesip::numerics::{central_diff_grad, central_diff_hessian, reg_inc_beta, solve_spd, SpdSystem};

#[test]
fn incomplete_beta_matches_quadrature() {
    let v = reg_inc_beta(0.9, 1.5, 1.5).unwrap();
    assert!((v - inc_beta_oracle(0.9, 1.5, 1.5)).abs() <= 1e-10);
    for &(x, a, b) in &[
        (0.1, 0.5, 0.5),
        (0.3, 2.0, 5.0),
        (0.5, 3.0, 3.0),
        (0.77, 5.5, 5.5),
        (0.42, 25.5, 25.5),
        (0.95, 1.0, 7.0),
    ] {
        let got = reg_inc_beta(x, a, b).unwrap();
        let want = inc_beta_oracle(x, a, b);
        assert!((got - want).abs() <= 1e-12, "I_{x}({a},{b}) = {got}, oracle {want}");
    }
}

#[test]
fn incomplete_beta_closed_forms() {
    // I_x(1, 1) = x and I_x(a, 1) = x^a
    for x in [0.0, 0.2, 0.5, 0.93, 1.0] {
        assert!((reg_inc_beta(x, 1.0, 1.0).unwrap() - x).abs() < 1e-15);
        assert!((reg_inc_beta(x, 3.5, 1.0).unwrap() - x.powf(3.5)).abs() < 1e-14);
    }
}

#[test]
fn spd_residuals_up_to_200() {
    let mut rng = Lcg(99);
    for m in [1usize, 2, 7, 50, 200] {
        let a = DMatrix::from_fn(m + 3, m, |_, _| rng.symmetric());
        let gram = a.transpose() * &a + DMatrix::identity(m, m) * 0.1;
        let rhs = DVector::from_fn(m, |_, _| rng.symmetric());
        let w = solve_spd(&SpdSystem::new(gram.clone(), rhs.clone()).unwrap()).unwrap();
        let resid = (&gram * &w - &rhs).norm();
        assert!(resid <= 1e-10 * rhs.norm(), "m = {m}: residual {resid}");
        let explicit = gram.try_inverse().unwrap() * &rhs;
        assert!((w - explicit).amax() < 1e-8);
    }
}

#[test]
fn hessian_and_gradient_of_quadratic_form() {
    let q = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -0.5, 1.0, 3.0, 0.2, -0.5, 0.2, 2.0]);
    let f = |x: &[f64]| {
        let v = DVector::from_column_slice(x);
        Ok(0.5 * v.dot(&(&q * &v)) + v[0])
    };
    let x = [0.3, -0.1, 0.7];
    let h = central_diff_hessian(f, &x, 1e-4).unwrap();
    assert!((h - &q).amax() < 1e-6);
    let g = central_diff_grad(f, &x, 1e-5).unwrap();
    let exact = &q * DVector::from_column_slice(&x);
    for p in 0..3 {
        let want = exact[p] + if p == 0 { 1.0 } else { 0.0 };
        assert!((g[p] - want).abs() < 1e-8);
    }
}

proptest! {
    #[test]
    fn incomplete_beta_reflection(x in 0.0f64..=1.0, a in 0.5f64..60.0, b in 0.5f64..60.0) {
        let s = reg_inc_beta(x, a, b).unwrap() + reg_inc_beta(1.0 - x, b, a).unwrap();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn incomplete_beta_monotone(x in 0.0f64..0.99, dx in 0.0f64..0.01, a in 0.5f64..40.0, b in 0.5f64..40.0) {
        let lo = reg_inc_beta(x, a, b).unwrap();
        let hi = reg_inc_beta(x + dx, a, b).unwrap();
        prop_assert!(lo <= hi + 1e-15);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn spd_random_instances(seed in any::<u64>(), m in 1usize..40) {
        let mut rng = Lcg(seed);
        let a = DMatrix::from_fn(m + 2, m, |_, _| rng.symmetric());
        let gram = a.transpose() * &a + DMatrix::identity(m, m) * 1e-3;
        let rhs = DVector::from_fn(m, |_, _| rng.symmetric());
        let sys = SpdSystem::new(gram.clone(), rhs.clone()).unwrap();
        let w = solve_spd(&sys).unwrap();
        prop_assert!((&gram * &w - &rhs).norm() <= 1e-10 * rhs.norm().max(1e-300));
        prop_assert_eq!(w, solve_spd(&sys).unwrap());
    }
}
