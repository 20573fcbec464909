//! Simulation designs, the replication harness and rolling forecasts.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{fit_dataset, predict_matrix, FitConfig, SipFit};
use crate::numerics::{solve_spd, SpdSystem};

/// Per-replication random stream.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw by inversion of an open-interval uniform.
pub fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    let bits = rng.random::<u64>() >> 11;
    let u = (bits as f64 + 0.5) / (1u64 << 53) as f64;
    Normal::standard().inverse_cdf(u)
}

/// Regression function of the first design.
pub fn example1_mean(x1: f64, x2: f64, delta: f64) -> f64 {
    let s = x1 + x2;
    s + 4.0 * (-s * s).exp() + delta * (x1 * x1 + x2 * x2).sqrt()
}

pub fn example1_theta0() -> Vec<f64> {
    vec![1.0 / SQRT_2, 1.0 / SQRT_2]
}

/// Bivariate standard normal truncated to `[-2.5, 2.5]²` by rejection,
/// `Y = m(X) + σ0 ε`.
pub fn gen_example1(n: usize, delta: f64, sigma0: f64, seed: u64) -> Result<Dataset> {
    if !delta.is_finite() || !(sigma0 >= 0.0) {
        return Err(Error::Invalid("delta must be finite and sigma0 nonnegative".into()));
    }
    let mut rng = rng_for(seed);
    let mut x = DMatrix::zeros(n, 2);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let (x1, x2) = loop {
            let a = std_normal(&mut rng);
            let b = std_normal(&mut rng);
            if a.abs() <= 2.5 && b.abs() <= 2.5 {
                break (a, b);
            }
        };
        x[(i, 0)] = x1;
        x[(i, 1)] = x2;
        y[i] = example1_mean(x1, x2, delta) + sigma0 * std_normal(&mut rng);
    }
    Dataset::unnamed(x, y)
}

/// `(1, 1, 0, ..., 0, 1) / √3`.
pub fn example2_theta0(d: usize) -> Vec<f64> {
    let mut t = vec![0.0; d];
    let c = 1.0 / 3f64.sqrt();
    t[0] = c;
    t[1] = c;
    t[d - 1] = c;
    t
}

pub fn example2_mean(x: &[f64], theta0: &[f64]) -> f64 {
    let v: f64 = x.iter().zip(theta0).map(|(a, b)| a * b).sum();
    (FRAC_PI_4 * v).sin()
}

pub fn example2_sigma(x: &[f64], sigma0: f64) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt() / (x.len() as f64).sqrt();
    let e = r.exp();
    sigma0 * (5.0 - e) / (5.0 + e)
}

/// Heteroscedastic sine-index design with iid standard normal predictors.
pub fn gen_example2(n: usize, d: usize, sigma0: f64, seed: u64) -> Result<Dataset> {
    if d < 3 {
        return Err(Error::Invalid(format!("the second design needs d >= 3, got {d}")));
    }
    if !(sigma0 >= 0.0) {
        return Err(Error::Invalid("sigma0 must be nonnegative".into()));
    }
    let theta0 = example2_theta0(d);
    let mut rng = rng_for(seed);
    let mut x = DMatrix::zeros(n, d);
    let mut y = DVector::zeros(n);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for (j, v) in row.iter_mut().enumerate() {
            *v = std_normal(&mut rng);
            x[(i, j)] = *v;
        }
        y[i] = example2_mean(&row, &theta0) + example2_sigma(&row, sigma0) * std_normal(&mut rng);
    }
    Dataset::unnamed(x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Example1 { n: usize, delta: f64, sigma0: f64 },
    Example2 { n: usize, d: usize, sigma0: f64 },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        match *self {
            GeneratorSpec::Example1 { n, delta, sigma0 } => gen_example1(n, delta, sigma0, seed),
            GeneratorSpec::Example2 { n, d, sigma0 } => gen_example2(n, d, sigma0, seed),
        }
    }

    pub fn theta0(&self) -> Vec<f64> {
        match *self {
            GeneratorSpec::Example1 { .. } => example1_theta0(),
            GeneratorSpec::Example2 { d, .. } => example2_theta0(d),
        }
    }

    pub fn d(&self) -> usize {
        match *self {
            GeneratorSpec::Example1 { .. } => 2,
            GeneratorSpec::Example2 { d, .. } => d,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            GeneratorSpec::Example1 { n, .. } | GeneratorSpec::Example2 { n, .. } => n,
        }
    }
}

/// BIAS / SD / MSE summary of replicated direction estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub generator: GeneratorSpec,
    pub theta0: Vec<f64>,
    pub base_seed: u64,
    pub replications: usize,
    /// Seeds of successful replications, aligned with `estimates`.
    pub seeds: Vec<u64>,
    /// Raw-scale direction estimates, one row per successful replication.
    pub estimates: Vec<Vec<f64>>,
    pub failures: Vec<(u64, String)>,
    pub bias: Vec<f64>,
    pub sd: Vec<f64>,
    pub mse: Vec<f64>,
    pub average_mse: f64,
}

impl McReport {
    /// Summarizes estimates against `theta0`; SD uses the `R - 1` denominator.
    pub fn from_estimates(
        generator: GeneratorSpec,
        base_seed: u64,
        replications: usize,
        seeds: Vec<u64>,
        estimates: Vec<Vec<f64>>,
        failures: Vec<(u64, String)>,
    ) -> Result<Self> {
        let theta0 = generator.theta0();
        let d = theta0.len();
        let r = estimates.len();
        if r < 2 {
            return Err(Error::Degenerate(format!(
                "only {r} successful replications; at least 2 are needed"
            )));
        }
        let rf = r as f64;
        let mut bias = vec![0.0; d];
        let mut sd = vec![0.0; d];
        let mut mse = vec![0.0; d];
        for p in 0..d {
            let mean = estimates.iter().map(|e| e[p]).sum::<f64>() / rf;
            let ss = estimates.iter().map(|e| (e[p] - mean).powi(2)).sum::<f64>();
            bias[p] = mean - theta0[p];
            sd[p] = (ss / (rf - 1.0)).sqrt();
            mse[p] = bias[p] * bias[p] + sd[p] * sd[p] * (rf - 1.0) / rf;
        }
        let average_mse = mse.iter().sum::<f64>() / d as f64;
        Ok(Self {
            generator,
            theta0,
            base_seed,
            replications,
            seeds,
            estimates,
            failures,
            bias,
            sd,
            mse,
            average_mse,
        })
    }
}

/// Fits every replication `r` on data drawn with seed `base_seed + r`.
/// Failed fits are excluded from the summary and listed in `failures`.
pub fn run_replications(
    generator: &GeneratorSpec,
    replications: usize,
    base_seed: u64,
    config: &FitConfig,
) -> Result<McReport> {
    if replications < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    config.validate()?;
    let outcomes: Vec<(u64, Result<Vec<f64>>)> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r);
            let est = generator
                .generate(seed)
                .and_then(|ds| fit_dataset(&ds, config))
                .map(|fit| fit.theta_original());
            (seed, est)
        })
        .collect();
    let mut seeds = Vec::new();
    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for (seed, out) in outcomes {
        match out {
            Ok(e) => {
                seeds.push(seed);
                estimates.push(e);
            }
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    McReport::from_estimates(generator.clone(), base_seed, replications, seeds, estimates, failures)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// Row indices (into the full design) of the forecast targets.
    pub rows: Vec<usize>,
    pub predictions: Vec<f64>,
    pub actual: Vec<f64>,
    pub mspe: f64,
}

impl Forecast {
    fn new(rows: Vec<usize>, predictions: Vec<f64>, actual: Vec<f64>) -> Self {
        let mspe = predictions
            .iter()
            .zip(&actual)
            .map(|(p, a)| (p - a) * (p - a))
            .sum::<f64>()
            / predictions.len() as f64;
        Self {
            rows,
            predictions,
            actual,
            mspe,
        }
    }
}

fn check_split(n: usize, split: usize) -> Result<()> {
    if split == 0 || split >= n {
        return Err(Error::Invalid(format!("split must lie in 1..{n}, got {split}")));
    }
    Ok(())
}

/// Fits on rows `0..split` and predicts every later row from its observed
/// predictors. With lagged responses among the predictors this is the
/// one-step-ahead rolling forecast.
pub fn rolling_forecast(data: &Dataset, split: usize, config: &FitConfig) -> Result<(Forecast, SipFit)> {
    check_split(data.n(), split)?;
    let train = data.rows(0..split);
    let test = data.rows(split..data.n());
    let fit = fit_dataset(&train, config)?;
    let predictions = predict_matrix(&fit, test.x())?;
    let forecast = Forecast::new(
        (split..data.n()).collect(),
        predictions,
        test.y().iter().copied().collect(),
    );
    Ok((forecast, fit))
}

/// Same protocol with an ordinary least squares fit including an intercept.
pub fn linear_forecast(data: &Dataset, split: usize) -> Result<Forecast> {
    check_split(data.n(), split)?;
    let d = data.d();
    let design = |rows: std::ops::Range<usize>| {
        DMatrix::from_fn(rows.len(), d + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                data.x()[(rows.start + i, j - 1)]
            }
        })
    };
    let xt = design(0..split);
    let yt = data.y().rows(0, split).into_owned();
    let beta = solve_spd(&SpdSystem::new(xt.tr_mul(&xt), xt.tr_mul(&yt))?)
        .map_err(|e| Error::SingularDesign(format!("linear baseline: {e}")))?;
    let xh = design(split..data.n());
    let predictions = (xh * beta).iter().copied().collect();
    let actual = data.y().rows(split, data.n() - split).iter().copied().collect();
    Ok(Forecast::new((split..data.n()).collect(), predictions, actual))
}

/// Synthetic nonlinear autoregression with an exogenous input.
///
/// `x_t = 0.5 x_{t-1} + e_t` and
/// `y_t = g(v_t) + 0.3 ε_t` with `v_t = (0.5 y_{t-1} + x_t + 0.5 x_{t-1}) / √1.5`
/// and `g(v) = 2 sin(1.2 v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaarxSeries {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

pub const NAARX_BURN_IN: usize = 100;

pub fn naarx_link(v: f64) -> f64 {
    2.0 * (1.2 * v).sin()
}

pub fn gen_naarx(len: usize, seed: u64) -> NaarxSeries {
    let mut rng = rng_for(seed);
    let total = len + NAARX_BURN_IN;
    let mut x = vec![0.0; total];
    let mut y = vec![0.0; total];
    let norm = 1.5f64.sqrt();
    for t in 1..total {
        x[t] = 0.5 * x[t - 1] + std_normal(&mut rng);
        let v = (0.5 * y[t - 1] + x[t] + 0.5 * x[t - 1]) / norm;
        y[t] = naarx_link(v) + 0.3 * std_normal(&mut rng);
    }
    NaarxSeries {
        y: y[NAARX_BURN_IN..].to_vec(),
        x: x[NAARX_BURN_IN..].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_mean_values() {
        assert_eq!(example1_mean(0.0, 0.0, 0.0), 4.0);
        assert!((example1_mean(1.0, -1.0, 1.0) - (4.0 + SQRT_2)).abs() < 1e-15);
    }

    #[test]
    fn example2_values() {
        let t = example2_theta0(5);
        assert!((t.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((example2_mean(&t, &t) - FRAC_PI_4.sin()).abs() < 1e-15);
        assert!((example2_sigma(&[0.0; 4], 0.2) - 0.2 * 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn generators_are_deterministic_and_truncated() {
        let a = gen_example1(300, 0.0, 0.3, 9).unwrap();
        let b = gen_example1(300, 0.0, 0.3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.x().iter().all(|v| v.abs() <= 2.5));
        let bound = 4.0 / (300f64).sqrt();
        for j in 0..2 {
            assert!(a.x().column(j).mean().abs() < bound);
        }
        assert_ne!(a, gen_example1(300, 0.0, 0.3, 10).unwrap());
        assert!(gen_example2(10, 2, 0.2, 1).is_err());
    }

    #[test]
    fn report_decomposition() {
        let g = GeneratorSpec::Example1 {
            n: 10,
            delta: 0.0,
            sigma0: 0.3,
        };
        let est = vec![vec![0.70, 0.71], vec![0.72, 0.69], vec![0.705, 0.709]];
        let rep = McReport::from_estimates(g, 0, 3, vec![0, 1, 2], est, vec![]).unwrap();
        for p in 0..2 {
            let direct = rep.bias[p].powi(2) + rep.sd[p].powi(2) * 2.0 / 3.0;
            assert!((rep.mse[p] - direct).abs() < 1e-12);
            let raw: f64 = rep
                .estimates
                .iter()
                .map(|e| (e[p] - rep.theta0[p]).powi(2))
                .sum::<f64>()
                / 3.0;
            assert!((rep.mse[p] - raw).abs() < 1e-12);
        }
        assert_eq!(rep.average_mse, (rep.mse[0] + rep.mse[1]) / 2.0);
    }

    #[test]
    fn split_bounds() {
        let ds = gen_example1(20, 0.0, 0.3, 1).unwrap();
        assert!(linear_forecast(&ds, 0).is_err());
        assert!(linear_forecast(&ds, 20).is_err());
        assert_eq!(linear_forecast(&ds, 19).unwrap().predictions.len(), 1);
    }

    #[test]
    fn linear_baseline_recovers_linear_series() {
        let x = DMatrix::from_fn(30, 2, |i, j| ((i * (j + 3)) % 7) as f64 + i as f64 * 0.1);
        let y = DVector::from_iterator(30, (0..30).map(|i| 1.0 + 2.0 * x[(i, 0)] - x[(i, 1)]));
        let ds = Dataset::unnamed(x, y).unwrap();
        assert!(linear_forecast(&ds, 20).unwrap().mspe < 1e-20);
    }
}
