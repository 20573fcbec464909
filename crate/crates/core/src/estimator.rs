//! Single-index estimation: profile spline risk, its analytic gradient on the
//! upper hemisphere, and the end-to-end fit.
//!
//! For a unit direction `θ` with `θ_d > 0` the predictors are projected to
//! `v_i = X_i'θ`, mapped to `u_i = F_d(v_i)`, and a cubic spline is fitted
//! to `(u_i, Y_i)` by least squares. The mean squared residual is the
//! profile risk. It is minimized over the free coordinates `θ_{-d}`, with
//! `θ_d = sqrt(1 - |θ_{-d}|²)`.
//!
//! The gradient uses `∂P/∂θ_p = (I-P) Ḃ_p (B'B)⁻¹ B' + transpose`, which
//! reduces `Y' Ṗ_p Y` to `2 Σ_i r_i γ̂'(u_i) F_d'(v_i) X_ip` with residuals
//! `r` and fitted spline `γ̂`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result, StageExt};
use crate::numerics::{solve_spd, SpdSystem};
use crate::splines::{knot_count, solve_local, LocalDesign, SplineBasisSpec, SplineFit};
use crate::transform::{select_radius, standardize, IndexMap, TransformSpec};

/// Unit vector with positive last coordinate, parametrized by its first `d - 1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HemisphereVector {
    theta: Vec<f64>,
}

impl HemisphereVector {
    /// Lifts free coordinates `θ_{-d}` (norm < 1) to the hemisphere.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        let sq: f64 = free.iter().map(|v| v * v).sum();
        if !(sq < 1.0) || free.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "free coordinates must have norm < 1, got {}",
                sq.sqrt()
            )));
        }
        let mut theta = free.to_vec();
        theta.push((1.0 - sq).sqrt());
        Ok(Self { theta })
    }

    /// Normalizes an arbitrary direction and flips its sign so the last
    /// coordinate is positive.
    pub fn from_theta(direction: &[f64]) -> Result<Self> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        let last = *direction
            .last()
            .ok_or_else(|| Error::Domain("direction must be non-empty".into()))?;
        if !(norm > 0.0 && norm.is_finite()) || last == 0.0 {
            return Err(Error::Domain(
                "direction must be finite, nonzero and have a nonzero last coordinate".into(),
            ));
        }
        let sign = last.signum();
        let free: Vec<f64> = direction[..direction.len() - 1]
            .iter()
            .map(|v| sign * v / norm)
            .collect();
        Self::from_free(&free)
    }

    /// `(0, ..., 0, 1)`.
    pub fn last_axis(d: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        let mut theta = vec![0.0; d];
        theta[d - 1] = 1.0;
        Self { theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn free(&self) -> &[f64] {
        &self.theta[..self.theta.len() - 1]
    }

    pub fn last(&self) -> f64 {
        self.theta[self.theta.len() - 1]
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.theta)
    }

    /// Whether `θ_d ≥ sqrt(1 - c²)`, i.e. `|θ_{-d}| ≤ c`.
    pub fn in_cap(&self, cap_c: f64) -> bool {
        free_norm(self.free()) <= cap_c
    }
}

fn free_norm(free: &[f64]) -> f64 {
    free.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn project_to_ball(z: &mut [f64], radius: f64) {
    let norm = free_norm(z);
    if norm > radius {
        let s = radius / norm;
        z.iter_mut().for_each(|v| *v *= s);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Least squares direction when `d < n`, otherwise the last axis.
    Auto,
    Ols,
    LastAxis,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub c1: usize,
    pub c2: usize,
    /// Overrides the knot rule when set.
    pub interior_knots: Option<usize>,
    pub cap_c: f64,
    pub radius_quantile: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            c1: 1,
            c2: 5,
            interior_knots: None,
            cap_c: 0.995,
            radius_quantile: 0.95,
            grad_tol: 1e-8,
            max_iter: 200,
            init: Init::Auto,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c1 == 0 || self.c2 == 0 {
            return Err(Error::Invalid("knot constants c1, c2 must be positive".into()));
        }
        if !(self.cap_c > 0.0 && self.cap_c < 1.0) {
            return Err(Error::Invalid(format!("cap_c must lie in (0, 1), got {}", self.cap_c)));
        }
        if !(self.radius_quantile > 0.0 && self.radius_quantile <= 1.0) {
            return Err(Error::Invalid(format!(
                "radius quantile must lie in (0, 1], got {}",
                self.radius_quantile
            )));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Invalid("grad_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn knots_for(&self, n: usize) -> usize {
        self.interior_knots.unwrap_or_else(|| knot_count(n, self.c1, self.c2))
    }
}

/// Profile risk at one direction, with the pieces the gradient needs.
struct ProfileEval {
    risk: f64,
    index: DVector<f64>,
    u: Vec<f64>,
    coef: Vec<f64>,
    fitted: Vec<f64>,
}

/// Standardized data with a fixed index transform and spline basis.
pub struct SipProblem<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    spec: SplineBasisSpec,
    map: IndexMap,
}

impl<'a> SipProblem<'a> {
    pub fn new(data_std: &'a Dataset, spec: &SplineBasisSpec, transform: &TransformSpec) -> Result<Self> {
        Self::from_parts(data_std.x(), data_std.y(), spec, transform)
    }

    pub(crate) fn from_parts(
        x: &'a DMatrix<f64>,
        y: &'a DVector<f64>,
        spec: &SplineBasisSpec,
        transform: &TransformSpec,
    ) -> Result<Self> {
        if x.ncols() != transform.d {
            return Err(Error::DimensionMismatch {
                expected: transform.d,
                got: x.ncols(),
            });
        }
        if x.nrows() == 0 {
            return Err(Error::Invalid("empty dataset".into()));
        }
        Ok(Self {
            x,
            y,
            spec: spec.clone(),
            map: transform.index_map(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn spec(&self) -> &SplineBasisSpec {
        &self.spec
    }

    fn check_theta(&self, theta: &HemisphereVector) -> Result<()> {
        if theta.dim() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: theta.dim(),
            });
        }
        Ok(())
    }

    fn evaluate(&self, theta: &HemisphereVector) -> Result<ProfileEval> {
        self.check_theta(theta)?;
        let index = self.x * theta.to_dvector();
        let u: Vec<f64> = index.iter().map(|&v| self.map.cdf(v)).collect();
        let design = LocalDesign::new(&u, &self.spec);
        let (coef, fitted) = solve_local(&design, self.y.as_slice(), &self.spec)?;
        let rss: f64 = self.y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(ProfileEval {
            risk: rss / self.n() as f64,
            index,
            u,
            coef,
            fitted,
        })
    }

    /// Mean squared residual of the profiled spline fit at `theta`.
    pub fn risk(&self, theta: &HemisphereVector) -> Result<f64> {
        Ok(self.evaluate(theta)?.risk)
    }

    /// Profile risk as a function of the free coordinates.
    pub fn risk_free(&self, free: &[f64]) -> Result<f64> {
        self.risk(&HemisphereVector::from_free(free)?)
    }

    /// Fitted values `γ̂_θ(U_θ,i)` at `theta`.
    pub fn fitted(&self, theta: &HemisphereVector) -> Result<Vec<f64>> {
        Ok(self.evaluate(theta)?.fitted)
    }

    /// Spline fit of the response on the transformed index at `theta`.
    pub fn link_fit(&self, theta: &HemisphereVector) -> Result<SplineFit> {
        let eval = self.evaluate(theta)?;
        SplineFit::new(self.spec.clone(), eval.coef, eval.risk * self.n() as f64)
    }

    /// Analytic gradient of the profile risk with respect to `θ_{-d}`.
    pub fn score(&self, theta: &HemisphereVector) -> Result<Vec<f64>> {
        let eval = self.evaluate(theta)?;
        self.score_from(theta, &eval)
    }

    fn score_from(&self, theta: &HemisphereVector, eval: &ProfileEval) -> Result<Vec<f64>> {
        let d = self.d();
        if d == 1 {
            return Ok(Vec::new());
        }
        let fit = SplineFit::new(self.spec.clone(), eval.coef.clone(), 0.0)?;
        let weights = DVector::from_iterator(
            self.n(),
            (0..self.n()).map(|i| {
                let resid = self.y[i] - eval.fitted[i];
                let (_, slope) = fit.value_and_slope(eval.u[i]);
                resid * slope * self.map.pdf(eval.index[i])
            }),
        );
        // half of Y' Ṗ_p Y for every p = 1..d
        let half_quad = self.x.tr_mul(&weights);
        let n = self.n() as f64;
        let ratio = half_quad[d - 1] / theta.last();
        let th = theta.as_slice();
        let score: Vec<f64> = (0..d - 1).map(|p| -2.0 * (half_quad[p] - th[p] * ratio) / n).collect();
        if score.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(
                "score is not finite; the index piles up at the clamp boundary".into(),
            ));
        }
        Ok(score)
    }

    /// Risk and gradient from a single spline fit.
    pub fn risk_and_score(&self, theta: &HemisphereVector) -> Result<(f64, Vec<f64>)> {
        let eval = self.evaluate(theta)?;
        let s = self.score_from(theta, &eval)?;
        Ok((eval.risk, s))
    }

    /// Projected BFGS on `θ_{-d}` inside the cap `|θ_{-d}| ≤ cap_c`.
    pub fn minimize(&self, start: &HemisphereVector, config: &FitConfig) -> Result<Minimization> {
        self.check_theta(start)?;
        let radius = config.cap_c;
        let k = self.d() - 1;
        let mut z = start.free().to_vec();
        project_to_ball(&mut z, radius);
        let mut theta = HemisphereVector::from_free(&z)?;
        let (mut f, mut g) = self.risk_and_score(&theta)?;
        let mut trace = vec![f];
        let mut iterations = 0;
        let mut converged = k == 0 || sup_norm(&g) <= config.grad_tol;

        let mut h = DMatrix::<f64>::identity(k, k);
        let mut h_is_initial = true;
        let g_norm = free_norm(&g);
        if g_norm > 0.0 {
            h *= (0.1 / g_norm).min(1.0);
        }

        while !converged && iterations < config.max_iter {
            let gv = DVector::from_column_slice(&g);
            let mut p = -(&h * &gv);
            if p.dot(&gv) >= 0.0 {
                h = DMatrix::identity(k, k) * (0.1 / g_norm.max(1e-300)).min(1.0);
                h_is_initial = true;
                p = -(&h * &gv);
            }
            match self.line_search(&z, f, &g, p.as_slice(), radius)? {
                Some((z_new, theta_new, f_new)) => {
                    let g_new = self.score(&theta_new)?;
                    let s: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| a - b).collect();
                    let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                    bfgs_update(&mut h, &s, &yv, &mut h_is_initial);
                    z = z_new;
                    theta = theta_new;
                    f = f_new;
                    g = g_new;
                    trace.push(f);
                    iterations += 1;
                    converged = sup_norm(&g) <= config.grad_tol;
                }
                None if !h_is_initial => {
                    // Stale curvature: restart from a scaled steepest-descent step.
                    let g_norm = free_norm(&g);
                    h = DMatrix::identity(k, k) * (0.1 / g_norm.max(1e-300)).min(1.0);
                    h_is_initial = true;
                }
                None => break,
            }
        }

        Ok(Minimization {
            theta,
            risk: f,
            score: g,
            iterations,
            converged,
            trace,
        })
    }

    // Backtracking Armijo search along the projected path; None if no descent.
    #[allow(clippy::type_complexity)]
    fn line_search(
        &self,
        z: &[f64],
        f: f64,
        g: &[f64],
        p: &[f64],
        radius: f64,
    ) -> Result<Option<(Vec<f64>, HemisphereVector, f64)>> {
        let mut alpha = 1.0;
        for _ in 0..60 {
            let mut trial: Vec<f64> = z.iter().zip(p).map(|(a, b)| a + alpha * b).collect();
            project_to_ball(&mut trial, radius);
            let slope: f64 = trial.iter().zip(z).zip(g).map(|((t, a), gi)| (t - a) * gi).sum();
            if slope >= 0.0 {
                alpha *= 0.5;
                continue;
            }
            if let Ok(theta) = HemisphereVector::from_free(&trial) {
                match self.risk(&theta) {
                    Ok(f_new) if f_new <= f + 1e-4 * slope => return Ok(Some((trial, theta, f_new))),
                    Ok(_) | Err(Error::SingularDesign(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            alpha *= 0.5;
        }
        Ok(None)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn bfgs_update(h: &mut DMatrix<f64>, s: &[f64], y: &[f64], h_is_initial: &mut bool) {
    let sv = DVector::from_column_slice(s);
    let yv = DVector::from_column_slice(y);
    let sy = sv.dot(&yv);
    if !(sy > 1e-12 * sv.norm() * yv.norm()) {
        return;
    }
    if *h_is_initial {
        let k = s.len();
        *h = DMatrix::identity(k, k) * (sy / yv.dot(&yv));
        *h_is_initial = false;
    }
    let rho = 1.0 / sy;
    let hy = &*h * &yv;
    let yhy = yv.dot(&hy);
    // H+ = H - ρ(s (Hy)' + (Hy) s') + (ρ² y'Hy + ρ) s s'
    let coef = rho * rho * yhy + rho;
    *h -= (&sv * hy.transpose() + &hy * sv.transpose()) * rho;
    *h += &sv * sv.transpose() * coef;
}

/// Outcome of risk minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimization {
    pub theta: HemisphereVector,
    pub risk: f64,
    pub score: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Profile risk at the start and after every accepted step.
    pub trace: Vec<f64>,
}

/// Profile risk `n⁻¹ Σ (Y_i - γ̂_θ(U_θ,i))²` on standardized data.
pub fn empirical_risk(
    data_std: &Dataset,
    theta: &HemisphereVector,
    spec: &SplineBasisSpec,
    transform: &TransformSpec,
) -> Result<f64> {
    SipProblem::new(data_std, spec, transform)?.risk(theta)
}

/// Gradient of the profile risk with respect to `θ_{-d}`.
pub fn score(
    data_std: &Dataset,
    theta: &HemisphereVector,
    spec: &SplineBasisSpec,
    transform: &TransformSpec,
) -> Result<Vec<f64>> {
    SipProblem::new(data_std, spec, transform)?.score(theta)
}

/// Starting direction per `config.init`.
pub fn initial_direction(data_std: &Dataset, config: &FitConfig) -> Result<HemisphereVector> {
    let (n, d) = (data_std.n(), data_std.d());
    match &config.init {
        Init::LastAxis => Ok(HemisphereVector::last_axis(d)),
        Init::Explicit(v) => {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            HemisphereVector::from_theta(v).map_err(|e| Error::Initialization(e.to_string()))
        }
        Init::Ols => {
            if d >= n {
                return Err(Error::Initialization(format!(
                    "least squares start needs d < n, got d = {d}, n = {n}"
                )));
            }
            ols_direction(data_std)
        }
        Init::Auto if d < n => ols_direction(data_std).or_else(|_| Ok(HemisphereVector::last_axis(d))),
        Init::Auto => Ok(HemisphereVector::last_axis(d)),
    }
}

// No-intercept least squares on standardized predictors, last coordinate made positive.
fn ols_direction(data_std: &Dataset) -> Result<HemisphereVector> {
    let x = data_std.x();
    let gram = x.tr_mul(x);
    let rhs = x.tr_mul(data_std.y());
    let beta = solve_spd(&SpdSystem::new(gram, rhs)?)
        .map_err(|e| Error::Initialization(format!("least squares start failed: {e}")))?;
    let d = beta.len();
    if beta[d - 1] == 0.0 {
        let mut b = beta.as_slice().to_vec();
        b[d - 1] = f64::EPSILON * free_norm(&b).max(1.0);
        return HemisphereVector::from_theta(&b).map_err(|e| Error::Initialization(e.to_string()));
    }
    HemisphereVector::from_theta(beta.as_slice()).map_err(|e| Error::Initialization(e.to_string()))
}

/// Minimizes the profile risk from the configured start.
pub fn minimize_risk(
    data_std: &Dataset,
    spec: &SplineBasisSpec,
    transform: &TransformSpec,
    config: &FitConfig,
) -> Result<Minimization> {
    config.validate()?;
    let start = initial_direction(data_std, config)?;
    SipProblem::new(data_std, spec, transform)?.minimize(&start, config)
}

/// A fitted single-index prediction model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SipFit {
    pub names: Vec<String>,
    /// Index direction for standardized predictors.
    pub theta_hat: HemisphereVector,
    pub transform: TransformSpec,
    /// Link spline in transformed index coordinates `u ∈ [0, 1]`.
    pub link: SplineFit,
    pub risk: f64,
    pub n: usize,
    pub d: usize,
    pub iterations: usize,
    pub converged: bool,
    pub risk_trace: Vec<f64>,
    pub config: FitConfig,
}

impl SipFit {
    /// Index direction expressed for raw (unstandardized) predictors,
    /// normalized with a positive last coordinate.
    pub fn theta_original(&self) -> Vec<f64> {
        let v: Vec<f64> = self
            .theta_hat
            .as_slice()
            .iter()
            .zip(&self.transform.scale)
            .map(|(t, s)| t / s)
            .collect();
        let norm = free_norm(&v);
        v.iter().map(|x| x / norm).collect()
    }

    pub fn interior_knots(&self) -> usize {
        self.link.spec.interior_knots()
    }

    /// Standardized data this fit was estimated on.
    pub fn standardized(&self, data: &Dataset) -> Result<Dataset> {
        let x = self.transform.standardize_matrix(data.x())?;
        Dataset::new(x, data.y().clone(), data.names().to_vec())
    }

    /// Link value at an index value `v` (clamped to `[-a, a]`).
    pub fn link_at(&self, v: f64) -> f64 {
        let map = self.transform.index_map();
        self.link.value_unchecked(map.cdf(v))
    }

    pub fn index_of(&self, x_raw: &[f64]) -> Result<f64> {
        let z = self.transform.standardize_row(x_raw)?;
        Ok(z.iter().zip(self.theta_hat.as_slice()).map(|(a, b)| a * b).sum())
    }
}

/// Full pipeline: standardize, pick the radius and knots, minimize the
/// profile risk and refit the link at the minimizer.
pub fn fit_sip(x: &DMatrix<f64>, y: &DVector<f64>, config: &FitConfig) -> Result<SipFit> {
    let data = Dataset::unnamed(x.clone(), y.clone()).stage("input")?;
    fit_dataset(&data, config)
}

pub fn fit_dataset(data: &Dataset, config: &FitConfig) -> Result<SipFit> {
    config.validate().stage("config")?;
    let (n, d) = (data.n(), data.d());
    if d == 0 {
        return Err(Error::Invalid("no predictors".into()).at("input"));
    }
    let (x_std, center, scale) = standardize(data.x())
        .map_err(|e| match e {
            Error::ConstantColumn(c) => {
                let name = c
                    .trim_start_matches('#')
                    .parse::<usize>()
                    .ok()
                    .and_then(|j| data.names().get(j - 1).cloned())
                    .unwrap_or(c);
                Error::ConstantColumn(name)
            }
            other => other,
        })
        .stage("standardize")?;
    let a = select_radius(&x_std, config.radius_quantile).stage("radius")?;
    let transform = TransformSpec::new(d, a, center, scale).stage("radius")?;
    let knots = config.knots_for(n);
    let spec = SplineBasisSpec::cubic(knots);
    if n < spec.dim() {
        return Err(Error::Invalid(format!(
            "{n} observations cannot support {} spline coefficients",
            spec.dim()
        ))
        .at("knots"));
    }
    let data_std = Dataset::new(x_std, data.y().clone(), data.names().to_vec()).stage("standardize")?;
    let start = initial_direction(&data_std, config).stage("initialize")?;
    let problem = SipProblem::new(&data_std, &spec, &transform).stage("optimize")?;
    let min = problem.minimize(&start, config).stage("optimize")?;
    let link = problem.link_fit(&min.theta).stage("link")?;
    Ok(SipFit {
        names: data.names().to_vec(),
        theta_hat: min.theta,
        transform,
        link,
        risk: min.risk,
        n,
        d,
        iterations: min.iterations,
        converged: min.converged,
        risk_trace: min.trace,
        config: config.clone(),
    })
}

/// `ĝ(x'θ̂)` for one raw predictor vector.
pub fn predict(fit: &SipFit, x_raw: &[f64]) -> Result<f64> {
    Ok(fit.link_at(fit.index_of(x_raw)?))
}

/// Predictions for every row of a raw predictor matrix.
pub fn predict_matrix(fit: &SipFit, x_raw: &DMatrix<f64>) -> Result<Vec<f64>> {
    let z = fit.transform.standardize_matrix(x_raw)?;
    let index = z * fit.theta_hat.to_dvector();
    Ok(index.iter().map(|&v| fit.link_at(v)).collect())
}

/// `(ν, ĝ(ν))` on `grid_size` equally spaced index values over `[-a, a]`.
pub fn link_curve(fit: &SipFit, grid_size: usize) -> Result<Vec<(f64, f64)>> {
    if grid_size < 2 {
        return Err(Error::Invalid(format!("grid size must be at least 2, got {grid_size}")));
    }
    let a = fit.transform.a;
    Ok((0..grid_size)
        .map(|i| {
            let v = -a + 2.0 * a * i as f64 / (grid_size - 1) as f64;
            let v = if i == grid_size - 1 { a } else { v };
            (v, fit.link_at(v))
        })
        .collect())
}
