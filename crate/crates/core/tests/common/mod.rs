//! Reference computations that share no code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_m`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 1..=m {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite 20-point Gauss–Legendre rule with `panels` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        total += rule.iter().map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h;
    }
    total
}

/// `I_x(a, b)` by quadrature after `t = sin²φ`, which removes the endpoint
/// singularities for shapes ≥ 1/2.
pub fn inc_beta_oracle(x: f64, a: f64, b: f64) -> f64 {
    let kernel = |phi: f64| 2.0 * phi.sin().powf(2.0 * a - 1.0) * phi.cos().powf(2.0 * b - 1.0);
    let upper = x.sqrt().asin();
    let half_pi = std::f64::consts::FRAC_PI_2;
    integrate(kernel, 0.0, upper, 200) / integrate(kernel, 0.0, half_pi, 200)
}

/// `F_d(v)` on `[-a, a]` via `t = a sin φ`: `∫ cos^d φ` normalized.
pub fn fd_cdf_oracle(v: f64, d: usize, a: f64) -> f64 {
    let v = v.clamp(-a, a);
    let kernel = |phi: f64| phi.cos().powi(d as i32);
    let half_pi = std::f64::consts::FRAC_PI_2;
    integrate(kernel, -half_pi, (v / a).asin(), 200) / integrate(kernel, -half_pi, half_pi, 200)
}

/// Clamped equally spaced knot vector of the given order.
pub fn knot_vector(order: usize, interior: usize) -> Vec<f64> {
    let mut t = vec![0.0; order];
    t.extend((1..=interior).map(|j| j as f64 / (interior as f64 + 1.0)));
    t.extend(vec![1.0; order]);
    t
}

/// Textbook Cox–de Boor recursion; the last nonempty interval is closed at 1.
pub fn bspline_oracle(i: usize, k: usize, t: &[f64], u: f64) -> f64 {
    if k == 1 {
        let last = t.iter().rposition(|&v| v < 1.0).unwrap();
        let inside = t[i] <= u && u < t[i + 1];
        let at_end = u == 1.0 && i == last;
        return if inside || at_end { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let w1 = t[i + k - 1] - t[i];
    if w1 > 0.0 {
        v += (u - t[i]) / w1 * bspline_oracle(i, k - 1, t, u);
    }
    let w2 = t[i + k] - t[i + 1];
    if w2 > 0.0 {
        v += (t[i + k] - u) / w2 * bspline_oracle(i + 1, k - 1, t, u);
    }
    v
}

pub fn basis_oracle(order: usize, interior: usize, u: f64) -> Vec<f64> {
    let t = knot_vector(order, interior);
    (0..interior + order).map(|i| bspline_oracle(i, order, &t, u)).collect()
}

/// Least squares via SVD of the dense design: `(coefficients, fitted, rss)`.
pub fn dense_ls_oracle(design: &DMatrix<f64>, y: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let yv = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&yv, 1e-12).unwrap();
    let fitted = design * &coef;
    let rss = (&yv - &fitted).norm_squared();
    (coef.iter().copied().collect(), fitted.iter().copied().collect(), rss)
}

/// Profile risk at `theta` computed from scratch on already standardized data.
pub fn risk_oracle(x_std: &DMatrix<f64>, y: &[f64], theta: &[f64], a: f64, interior: usize) -> f64 {
    let d = theta.len();
    let n = x_std.nrows();
    let u: Vec<f64> = (0..n)
        .map(|i| {
            let v: f64 = (0..d).map(|j| x_std[(i, j)] * theta[j]).sum();
            fd_cdf_oracle(v, d, a)
        })
        .collect();
    let design = DMatrix::from_fn(n, interior + 4, |i, j| basis_oracle(4, interior, u[i])[j]);
    dense_ls_oracle(&design, y).2 / n as f64
}

/// Small deterministic uniform stream for fixtures.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn uniform(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }
}
