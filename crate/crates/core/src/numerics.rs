//! Special functions and small dense linear-algebra kernels.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const BETA_CF_TOL: f64 = 1e-14;
const BETA_CF_MAX_ITER: usize = 300;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta function `I_x(alpha, beta)`.
///
/// Evaluated with the modified Lentz continued fraction. For
/// `x > (alpha + 1) / (alpha + beta + 2)` the symmetric relation
/// `I_x(a, b) = 1 - I_{1-x}(b, a)` is used so the fraction converges quickly.
pub fn reg_inc_beta(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "incomplete beta shapes must be finite and positive, got ({alpha}, {beta})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    Ok(reg_inc_beta_prepared(x, alpha, beta, ln_beta(alpha, beta)))
}

/// `I_x(alpha, beta)` for validated arguments with `ln B(alpha, beta)` supplied.
pub(crate) fn reg_inc_beta_prepared(x: f64, alpha: f64, beta: f64, ln_b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = alpha * x.ln() + beta * (1.0 - x).ln() - ln_b;
    let value = if x <= (alpha + 1.0) / (alpha + beta + 2.0) {
        ln_front.exp() * beta_cf(x, alpha, beta) / alpha
    } else {
        1.0 - ln_front.exp() * beta_cf(1.0 - x, beta, alpha) / beta
    };
    value.clamp(0.0, 1.0)
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

// Continued fraction for I_x(a, b) (without the x^a (1-x)^b / (a B(a,b)) prefactor).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_TOL {
            break;
        }
    }
    h
}

/// Symmetric positive (semi)definite linear system `(gram + ridge I) w = rhs`.
#[derive(Debug, Clone)]
pub struct SpdSystem {
    pub gram: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub ridge: f64,
}

impl SpdSystem {
    pub fn new(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        let m = gram.nrows();
        if m == 0 || gram.ncols() != m {
            return Err(Error::Invalid(format!(
                "Gram matrix must be square and non-empty, got {}x{}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        if rhs.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: rhs.len(),
            });
        }
        Ok(Self { gram, rhs, ridge: 0.0 })
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }
}

/// Solves an SPD system by Cholesky factorization.
///
/// If the factorization breaks down, it is retried once with an added
/// ridge of `1e-8 * trace(gram) / m` on top of the configured one.
pub fn solve_spd(system: &SpdSystem) -> Result<DVector<f64>> {
    if !(system.ridge >= 0.0) {
        return Err(Error::Domain(format!(
            "ridge must be nonnegative, got {}",
            system.ridge
        )));
    }
    let m = system.gram.nrows();
    if let Some(w) = cholesky_solve(&system.gram, &system.rhs, system.ridge) {
        return Ok(w);
    }
    let fallback = system.ridge + 1e-8 * system.gram.trace() / m as f64;
    if fallback > 0.0 {
        if let Some(w) = cholesky_solve(&system.gram, &system.rhs, fallback) {
            return Ok(w);
        }
    }
    Err(Error::NotPositiveDefinite { ridge: fallback })
}

// Returns None when a pivot is not safely positive.
fn cholesky_solve(gram: &DMatrix<f64>, rhs: &DVector<f64>, ridge: f64) -> Option<DVector<f64>> {
    let m = gram.nrows();
    let max_diag = (0..m).map(|i| gram[(i, i)] + ridge).fold(0.0, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return None;
    }
    let pivot_floor = 1e-13 * max_diag;

    let mut l = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let mut diag = gram[(j, j)] + ridge;
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > pivot_floor) {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..m {
            // Symmetrize on the fly so tiny asymmetries cannot bias the factor.
            let mut s = 0.5 * (gram[(i, j)] + gram[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }

    let mut z = rhs.clone();
    for i in 0..m {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..m).rev() {
        let mut s = z[i];
        for k in (i + 1)..m {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    if z.iter().all(|v| v.is_finite()) {
        Some(z)
    } else {
        None
    }
}

/// Default finite-difference step `1e-5 * max(1, ‖x‖∞)`.
pub fn default_step(x: &[f64]) -> f64 {
    1e-5 * x.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

/// Central-difference gradient of `f` at `x`.
pub fn central_diff_grad<F>(mut f: F, x: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for p in 0..x.len() {
        probe[p] = x[p] + step;
        let up = finite(f(&probe)?, "forward evaluation")?;
        probe[p] = x[p] - step;
        let down = finite(f(&probe)?, "backward evaluation")?;
        probe[p] = x[p];
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

/// Central-difference Hessian of `f` at `x`, symmetrized.
///
/// Diagonal entries use the three-point second difference, off-diagonal
/// entries the four-point cross difference.
pub fn central_diff_hessian<F>(mut f: F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let k = x.len();
    let mut probe = x.to_vec();
    let center = finite(f(x)?, "center evaluation")?;
    let h2 = step * step;
    let mut hess = DMatrix::zeros(k, k);
    for p in 0..k {
        probe[p] = x[p] + step;
        let up = finite(f(&probe)?, "Hessian evaluation")?;
        probe[p] = x[p] - step;
        let down = finite(f(&probe)?, "Hessian evaluation")?;
        probe[p] = x[p];
        hess[(p, p)] = (up - 2.0 * center + down) / h2;
        for q in 0..p {
            let mut corner = |sp: f64, sq: f64| -> Result<f64> {
                probe[p] = x[p] + sp * step;
                probe[q] = x[q] + sq * step;
                let v = f(&probe);
                probe[p] = x[p];
                probe[q] = x[q];
                finite(v?, "Hessian evaluation")
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * h2);
            hess[(p, q)] = v;
            hess[(q, p)] = v;
        }
    }
    Ok(hess)
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
