//! B-splines on equally spaced knots over `[0, 1]` and least-squares spline fits.
//!
//! Basis functions are indexed `0..N+k`; index `i` is supported on
//! `[knots[i], knots[i + k]]` of the clamped knot vector, which repeats each
//! boundary knot `k` times. The last knot interval is closed so `u = 1`
//! belongs to it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{solve_spd, SpdSystem};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasisSpec {
    order: usize,
    interior_knots: usize,
    knots: Vec<f64>,
}

impl SplineBasisSpec {
    pub fn new(order: usize, interior_knots: usize) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::Domain(format!("spline order must be 2, 3 or 4, got {order}")));
        }
        let h = 1.0 / (interior_knots as f64 + 1.0);
        let mut knots = Vec::with_capacity(interior_knots + 2 * order);
        knots.extend(std::iter::repeat_n(0.0, order));
        knots.extend((1..=interior_knots).map(|j| j as f64 * h));
        knots.extend(std::iter::repeat_n(1.0, order));
        Ok(Self {
            order,
            interior_knots,
            knots,
        })
    }

    /// Cubic (order 4) basis.
    pub fn cubic(interior_knots: usize) -> Self {
        Self::new(4, interior_knots).expect("order 4 is valid")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interior_knots(&self) -> usize {
        self.interior_knots
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Knot spacing `1 / (N + 1)`.
    pub fn spacing(&self) -> f64 {
        1.0 / (self.interior_knots as f64 + 1.0)
    }

    /// Number of basis functions, `N + k`.
    pub fn dim(&self) -> usize {
        self.interior_knots + self.order
    }

    fn check(&self, u: f64) -> Result<()> {
        if (0.0..=1.0).contains(&u) {
            Ok(())
        } else {
            Err(Error::Domain(format!("spline argument {u} outside [0, 1]")))
        }
    }

    // Knot-vector index `l` with knots[l] <= u < knots[l + 1] (closed at u = 1).
    fn span(&self, u: f64) -> usize {
        let k = self.order;
        let n = self.interior_knots;
        let mut j = ((u * (n as f64 + 1.0)).floor() as usize).min(n);
        while j > 0 && u < self.knots[k - 1 + j] {
            j -= 1;
        }
        while j < n && u >= self.knots[k + j] {
            j += 1;
        }
        k - 1 + j
    }

    /// Nonzero basis values at `u`: returns the index of the first nonzero
    /// function and the `k` values starting there.
    pub(crate) fn local(&self, u: f64) -> (usize, [f64; MAX_ORDER]) {
        let (first, values, _) = self.local_triangle(u, false);
        (first, values)
    }

    /// Nonzero basis values and first derivatives at `u`.
    pub(crate) fn local_with_deriv(&self, u: f64) -> (usize, [f64; MAX_ORDER], [f64; MAX_ORDER]) {
        self.local_triangle(u, true)
    }

    fn local_triangle(&self, u: f64, want_deriv: bool) -> (usize, [f64; MAX_ORDER], [f64; MAX_ORDER]) {
        let k = self.order;
        let l = self.span(u);
        let t = &self.knots;
        let mut vals = [0.0; MAX_ORDER];
        let mut lower = [0.0; MAX_ORDER];
        let mut left = [0.0; MAX_ORDER];
        let mut right = [0.0; MAX_ORDER];
        vals[0] = 1.0;
        for r in 1..k {
            if r == k - 1 {
                lower = vals;
            }
            left[r] = u - t[l + 1 - r];
            right[r] = t[l + r] - u;
            let mut saved = 0.0;
            for s in 0..r {
                let temp = vals[s] / (right[s + 1] + left[r - s]);
                vals[s] = saved + right[s + 1] * temp;
                saved = left[r - s] * temp;
            }
            vals[r] = saved;
        }
        let first = l + 1 - k;

        let mut deriv = [0.0; MAX_ORDER];
        if want_deriv {
            // B'_{i,k} = (k-1) [B_{i,k-1} / (t_{i+k-1} - t_i) - B_{i+1,k-1} / (t_{i+k} - t_{i+1})],
            // with lower-order terms that vanish on a zero-width support dropped.
            let km1 = (k - 1) as f64;
            for s in 0..k {
                let i = first + s;
                let mut d = 0.0;
                if s >= 1 {
                    let w = t[i + k - 1] - t[i];
                    if w > 0.0 {
                        d += lower[s - 1] / w;
                    }
                }
                if s + 1 < k {
                    let w = t[i + k] - t[i + 1];
                    if w > 0.0 {
                        d -= lower[s] / w;
                    }
                }
                deriv[s] = km1 * d;
            }
        }
        (first, vals, deriv)
    }
}

/// Number of interior knots `min(c1 * floor(n^(1/5.5)), c2)`.
pub fn knot_count(n: usize, c1: usize, c2: usize) -> usize {
    let base = (n as f64).powf(1.0 / 5.5).floor() as usize;
    (c1 * base).min(c2)
}

/// All `N + k` basis values at `u`.
pub fn eval_basis(u: f64, spec: &SplineBasisSpec) -> Result<Vec<f64>> {
    spec.check(u)?;
    let (first, vals) = spec.local(u);
    let mut out = vec![0.0; spec.dim()];
    out[first..first + spec.order].copy_from_slice(&vals[..spec.order]);
    Ok(out)
}

/// All `N + k` basis derivatives `d/du B_{j,k}(u)`.
pub fn eval_basis_deriv(u: f64, spec: &SplineBasisSpec) -> Result<Vec<f64>> {
    spec.check(u)?;
    let (first, _, deriv) = spec.local_with_deriv(u);
    let mut out = vec![0.0; spec.dim()];
    out[first..first + spec.order].copy_from_slice(&deriv[..spec.order]);
    Ok(out)
}

/// Cubic-basis derivatives; rejects specs of other orders.
pub fn eval_basis_order4_deriv(u: f64, spec: &SplineBasisSpec) -> Result<Vec<f64>> {
    if spec.order != 4 {
        return Err(Error::Domain(format!(
            "expected an order-4 basis, got order {}",
            spec.order
        )));
    }
    eval_basis_deriv(u, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineFit {
    pub spec: SplineBasisSpec,
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

impl SplineFit {
    pub fn new(spec: SplineBasisSpec, coefficients: Vec<f64>, rss: f64) -> Result<Self> {
        if coefficients.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: coefficients.len(),
            });
        }
        Ok(Self {
            spec,
            coefficients,
            rss,
        })
    }

    /// Spline value; `u` must already lie in `[0, 1]`.
    pub(crate) fn value_unchecked(&self, u: f64) -> f64 {
        let (first, vals) = self.spec.local(u);
        (0..self.spec.order)
            .map(|s| vals[s] * self.coefficients[first + s])
            .sum()
    }

    pub(crate) fn value_and_slope(&self, u: f64) -> (f64, f64) {
        let (first, vals, deriv) = self.spec.local_with_deriv(u);
        let mut v = 0.0;
        let mut dv = 0.0;
        for s in 0..self.spec.order {
            v += vals[s] * self.coefficients[first + s];
            dv += deriv[s] * self.coefficients[first + s];
        }
        (v, dv)
    }
}

pub fn eval_spline(fit: &SplineFit, u: f64) -> Result<f64> {
    fit.spec.check(u)?;
    Ok(fit.value_unchecked(u))
}

/// Local basis rows for a batch of points, kept for repeated fitting.
pub(crate) struct LocalDesign {
    pub first: Vec<usize>,
    pub values: Vec<[f64; MAX_ORDER]>,
}

impl LocalDesign {
    pub fn new(u: &[f64], spec: &SplineBasisSpec) -> Self {
        let mut first = Vec::with_capacity(u.len());
        let mut values = Vec::with_capacity(u.len());
        for &ui in u {
            let (f, v) = spec.local(ui);
            first.push(f);
            values.push(v);
        }
        Self { first, values }
    }
}

/// Least-squares coefficients and fitted values for a prepared design.
pub(crate) fn solve_local(design: &LocalDesign, y: &[f64], spec: &SplineBasisSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = spec.dim();
    let k = spec.order;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, (&f, v)) in design.first.iter().zip(&design.values).enumerate() {
        for a in 0..k {
            rhs[f + a] += v[a] * y[i];
            for b in 0..=a {
                gram[(f + a, f + b)] += v[a] * v[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let system = SpdSystem::new(gram, rhs)?;
    let coef = solve_spd(&system).map_err(|e| {
        Error::SingularDesign(format!(
            "spline normal equations could not be solved ({e}); the index values are too concentrated"
        ))
    })?;
    let fitted = design
        .first
        .iter()
        .zip(&design.values)
        .map(|(&f, v)| (0..k).map(|s| v[s] * coef[f + s]).sum())
        .collect();
    Ok((coef.as_slice().to_vec(), fitted))
}

/// Least-squares spline of `y` on `u` over the space spanned by `spec`.
pub fn fit_ls_spline(u: &[f64], y: &[f64], spec: &SplineBasisSpec) -> Result<SplineFit> {
    if u.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: y.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::Invalid("cannot fit a spline to zero points".into()));
    }
    for &ui in u {
        spec.check(ui)?;
    }
    let design = LocalDesign::new(u, spec);
    let (coefficients, fitted) = solve_local(&design, y, spec)?;
    let rss = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(SplineFit {
        spec: spec.clone(),
        coefficients,
        rss,
    })
}
