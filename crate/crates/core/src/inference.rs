//! Plug-in sandwich covariance for the free index coordinates.
//!
//! `Ĥ` is a finite-difference Hessian of the profile risk at `θ̂_{-d}`;
//! `Ψ̂` is the mean outer product of `η̂_i = 2 ∂γ̂(U_i)/∂θ_{-d} (γ̂(U_i) - Y_i)`,
//! with the derivative of the fitted values taken by central differences of
//! the profiled spline refit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result, StageExt};
use crate::estimator::{HemisphereVector, SipFit, SipProblem};
use crate::numerics::central_diff_hessian;

/// Finite-difference step on the free coordinates.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub hessian: DMatrix<f64>,
    pub meat: DMatrix<f64>,
    pub sandwich: DMatrix<f64>,
    /// `sqrt(diag(Σ̂) / n)` for the standardized-scale `θ̂_{-d}`.
    pub se: Vec<f64>,
    /// Delta-method standard errors of all `d` coordinates of the raw-scale direction.
    pub se_original: Vec<f64>,
}

fn problem_data(data: &Dataset, fit: &SipFit) -> Result<Dataset> {
    if data.d() != fit.d || data.n() != fit.n {
        return Err(Error::DimensionMismatch {
            expected: fit.d,
            got: data.d(),
        });
    }
    fit.standardized(data)
}

fn check_interior(fit: &SipFit) -> Result<()> {
    if fit.d < 2 {
        return Err(Error::Invalid("inference needs at least two predictors".into()));
    }
    let margin = fit.config.cap_c - fit.theta_hat.free().iter().map(|v| v * v).sum::<f64>().sqrt();
    if margin <= FD_STEP * (fit.d as f64).sqrt() {
        return Err(Error::Domain(
            "θ̂ lies on the cap boundary; finite differences are not defined".into(),
        ));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Central-difference Hessian of the profile risk at `θ̂_{-d}`.
/// `data` is the raw dataset the fit was estimated on.
pub fn hessian_rstar(data: &Dataset, fit: &SipFit) -> Result<DMatrix<f64>> {
    check_interior(fit)?;
    let std = problem_data(data, fit)?;
    let problem = SipProblem::new(&std, &fit.link.spec, &fit.transform)?;
    let h = central_diff_hessian(|z| problem.risk_free(z), fit.theta_hat.free(), FD_STEP)?;
    Ok(symmetrize(&h))
}

/// `n × (d-1)` matrix of `η̂_i`.
fn eta(problem: &SipProblem, y: &DVector<f64>, theta: &HemisphereVector) -> Result<DMatrix<f64>> {
    let n = problem.n();
    let k = theta.dim() - 1;
    let fitted = problem.fitted(theta)?;
    let mut out = DMatrix::zeros(n, k);
    let mut z = theta.free().to_vec();
    for p in 0..k {
        let orig = z[p];
        z[p] = orig + FD_STEP;
        let plus = problem.fitted(&HemisphereVector::from_free(&z)?)?;
        z[p] = orig - FD_STEP;
        let minus = problem.fitted(&HemisphereVector::from_free(&z)?)?;
        z[p] = orig;
        for i in 0..n {
            let deriv = (plus[i] - minus[i]) / (2.0 * FD_STEP);
            out[(i, p)] = 2.0 * deriv * (fitted[i] - y[i]);
        }
    }
    Ok(out)
}

/// `Ψ̂ = n⁻¹ Σ η̂_i η̂_i'`.
pub fn psi_hat(data: &Dataset, fit: &SipFit) -> Result<DMatrix<f64>> {
    check_interior(fit)?;
    let std = problem_data(data, fit)?;
    let problem = SipProblem::new(&std, &fit.link.spec, &fit.transform)?;
    let e = eta(&problem, std.y(), &fit.theta_hat)?;
    Ok(symmetrize(&(e.tr_mul(&e) / std.n() as f64)))
}

/// `Ĥ⁻¹ Ψ̂ Ĥ⁻¹`, rejecting (near-)singular `Ĥ`.
pub fn sandwich(hessian: &DMatrix<f64>, meat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(hessian.clone());
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0)
        || eig
            .eigenvalues
            .iter()
            .any(|v| v.abs() <= 1e-10 * scale || !v.is_finite())
    {
        return Err(Error::SingularHessian {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
        });
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    Ok(symmetrize(&(&inv * meat * &inv)))
}

// Jacobian of the raw-scale direction with respect to the standardized free coordinates.
fn original_jacobian(fit: &SipFit) -> Result<DMatrix<f64>> {
    let d = fit.d;
    let k = d - 1;
    let theta = fit.theta_hat.as_slice();
    let scale = &fit.transform.scale;
    let v: Vec<f64> = theta.iter().zip(scale).map(|(t, s)| t / s).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w = DVector::from_iterator(d, v.iter().map(|x| x / norm));
    // dθ/dz: identity on the free part, -z/θ_d on the last coordinate
    let mut dtheta = DMatrix::zeros(d, k);
    for p in 0..k {
        dtheta[(p, p)] = 1.0;
        dtheta[(d - 1, p)] = -theta[p] / theta[d - 1];
    }
    let dv = DMatrix::from_diagonal(&DVector::from_iterator(d, scale.iter().map(|s| 1.0 / s))) * dtheta;
    let proj = (DMatrix::identity(d, d) - &w * w.transpose()) / norm;
    Ok(proj * dv)
}

/// Sandwich covariance and standard errors at the fitted direction.
pub fn covariance(data: &Dataset, fit: &SipFit) -> Result<CovarianceEstimate> {
    let hessian = hessian_rstar(data, fit).stage("hessian")?;
    let meat = psi_hat(data, fit).stage("meat")?;
    let sw = sandwich(&hessian, &meat).stage("sandwich")?;
    let n = fit.n as f64;
    let se = (0..sw.nrows()).map(|p| (sw[(p, p)].max(0.0) / n).sqrt()).collect();
    let j = original_jacobian(fit)?;
    let orig = &j * &sw * j.transpose();
    let se_original = (0..orig.nrows()).map(|p| (orig[(p, p)].max(0.0) / n).sqrt()).collect();
    Ok(CovarianceEstimate {
        hessian,
        meat,
        sandwich: sw,
        se,
        se_original,
    })
}
