//! Predictor standardization, the rescaled-Beta index transform and detrending.
//!
//! The index `v = x'θ` of a standardized predictor is clamped to `[-a, a]`
//! and mapped to `[0, 1]` by the CDF of a centered Beta((d+1)/2, (d+1)/2)
//! variable rescaled to `[-a, a]`. For predictors spread over a ball of
//! radius `a` this makes the transformed index roughly uniform, which keeps
//! every equally spaced knot interval populated.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::estimator::HemisphereVector;
use crate::numerics::{ln_beta, reg_inc_beta_prepared};
use crate::splines::{fit_ls_spline, SplineBasisSpec};

/// Standardization and index-transform parameters fixed at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub d: usize,
    pub a: f64,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl TransformSpec {
    pub fn new(d: usize, a: f64, center: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {a}")));
        }
        if center.len() != d || scale.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: center.len().min(scale.len()),
            });
        }
        if scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Domain("all scales must be positive".into()));
        }
        Ok(Self { d, a, center, scale })
    }

    /// Standardizes one raw predictor row.
    pub fn standardize_row(&self, x_raw: &[f64]) -> Result<Vec<f64>> {
        if x_raw.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x_raw.len(),
            });
        }
        Ok(x_raw
            .iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(x, (c, s))| (x - c) / s)
            .collect())
    }

    /// Standardizes a raw predictor matrix with the stored center and scale.
    pub fn standardize_matrix(&self, x_raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x_raw.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x_raw.ncols(),
            });
        }
        let mut out = x_raw.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (c, s) = (self.center[j], self.scale[j]);
            col.iter_mut().for_each(|v| *v = (*v - c) / s);
        }
        Ok(out)
    }

    pub(crate) fn index_map(&self) -> IndexMap {
        IndexMap::new(self.d, self.a)
    }
}

/// Cached constants of `F_d` and its density for one `(d, a)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct IndexMap {
    pub a: f64,
    shape: f64,
    ln_b: f64,
    // rescales the lower tail so that F_d(0) = 1/2 despite rounding in ln B
    half_scale: f64,
    ln_pdf_const: f64,
    pdf_power: f64,
}

impl IndexMap {
    pub fn new(d: usize, a: f64) -> Self {
        let df = d as f64;
        let shape = (df + 1.0) / 2.0;
        let ln_b = ln_beta(shape, shape);
        Self {
            a,
            shape,
            ln_b,
            half_scale: 0.5 / reg_inc_beta_prepared(0.5, shape, shape, ln_b),
            ln_pdf_const: ln_gamma(df + 1.0) - 2.0 * ln_gamma(shape) - df * std::f64::consts::LN_2 - a.ln(),
            pdf_power: (df - 1.0) / 2.0,
        }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(-self.a, self.a)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let v = self.clamp(v);
        if v == 0.0 {
            return 0.5;
        }
        let lower = self.lower_tail(-v.abs());
        if v < 0.0 {
            lower
        } else {
            1.0 - lower
        }
    }

    fn lower_tail(&self, v: f64) -> f64 {
        let x = (1.0 + v / self.a) / 2.0;
        (reg_inc_beta_prepared(x, self.shape, self.shape, self.ln_b) * self.half_scale).min(0.5)
    }

    pub fn pdf(&self, v: f64) -> f64 {
        if v.abs() > self.a {
            return 0.0;
        }
        if self.pdf_power == 0.0 {
            return self.ln_pdf_const.exp();
        }
        let r = v / self.a;
        let base = 1.0 - r * r;
        if base <= 0.0 {
            return 0.0;
        }
        (self.ln_pdf_const + self.pdf_power * base.ln()).exp()
    }
}

/// Column-wise z-scores: returns the standardized matrix, column means and
/// column standard deviations (`n - 1` denominator).
pub fn standardize(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "standardization needs at least 2 rows, got {n}"
        )));
    }
    let mut center = Vec::with_capacity(x.ncols());
    let mut scale = Vec::with_capacity(x.ncols());
    for (j, col) in x.column_iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        let magnitude = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(sd > 1e-12 * magnitude.max(f64::MIN_POSITIVE)) {
            return Err(Error::ConstantColumn(format!("#{}", j + 1)));
        }
        center.push(mean);
        scale.push(sd);
    }
    let spec = TransformSpec {
        d: x.ncols(),
        a: 1.0,
        center,
        scale,
    };
    let z = spec.standardize_matrix(x)?;
    Ok((z, spec.center, spec.scale))
}

/// Nearest-rank empirical `quantile` of the row Euclidean norms.
pub fn select_radius(x_std: &DMatrix<f64>, quantile: f64) -> Result<f64> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::Domain(format!(
            "radius quantile must lie in (0, 1], got {quantile}"
        )));
    }
    let n = x_std.nrows();
    if n == 0 {
        return Err(Error::Invalid("radius needs at least one row".into()));
    }
    let mut norms: Vec<f64> = x_std.row_iter().map(|r| r.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let rank = ((quantile * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let a = norms[rank - 1];
    if a > 0.0 {
        Ok(a)
    } else {
        Err(Error::ZeroRadius)
    }
}

/// `F_d(v)`: rescaled centered Beta((d+1)/2, (d+1)/2) CDF on `[-a, a]`,
/// with `v` clamped to that interval.
pub fn fd_cdf(v: f64, d: usize, a: f64) -> Result<f64> {
    check_index_args(d, a)?;
    Ok(IndexMap::new(d, a).cdf(v))
}

/// Density of `F_d`; zero outside `[-a, a]`.
pub fn fd_pdf(v: f64, d: usize, a: f64) -> Result<f64> {
    check_index_args(d, a)?;
    Ok(IndexMap::new(d, a).pdf(v))
}

fn check_index_args(d: usize, a: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive, got {a}")));
    }
    Ok(())
}

/// Index values `X θ` for every row.
pub fn project_index(x_std: &DMatrix<f64>, theta: &HemisphereVector) -> Result<DVector<f64>> {
    if theta.dim() != x_std.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x_std.ncols(),
            got: theta.dim(),
        });
    }
    Ok(x_std * theta.to_dvector())
}

/// Removes a least-squares quadratic-spline trend fitted on time rescaled to
/// `[0, 1]`. Returns `(detrended, trend)`.
pub fn detrend_quadratic_spline(series: &[f64], interior_knots: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let t_len = series.len();
    if t_len < interior_knots + 3 || t_len < 2 {
        return Err(Error::Invalid(format!(
            "detrending with {interior_knots} interior knots needs at least {} points, got {t_len}",
            (interior_knots + 3).max(2)
        )));
    }
    let spec = SplineBasisSpec::new(3, interior_knots)?;
    let time: Vec<f64> = (0..t_len).map(|i| i as f64 / (t_len - 1) as f64).collect();
    let fit = fit_ls_spline(&time, series, &spec)?;
    let trend: Vec<f64> = time.iter().map(|&t| fit.value_unchecked(t)).collect();
    let detrended = series.iter().zip(&trend).map(|(s, t)| s - t).collect();
    Ok((detrended, trend))
}
