//! Self-describing JSON model document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FitConfig, HemisphereVector, SipFit};
use crate::inference::CovarianceEstimate;
use crate::splines::{SplineBasisSpec, SplineFit};
use crate::transform::TransformSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub column: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSpec {
    pub interior_knots: usize,
    pub c1: usize,
    pub c2: usize,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    /// Free coordinates `θ_1..θ_{d-1}` on the standardized scale.
    pub se: Vec<NamedValue>,
    /// All coordinates of the raw-scale direction.
    pub se_original: Vec<NamedValue>,
    pub sandwich: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: String,
    pub seed: Option<u64>,
    pub config: FitConfig,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub schema_version: u32,
    pub response: String,
    pub columns: Vec<String>,
    pub theta_hat: Vec<NamedValue>,
    pub theta_original: Vec<NamedValue>,
    pub transform: TransformSpec,
    pub knots: KnotSpec,
    pub link_coefficients: Vec<f64>,
    pub link_rss: f64,
    pub risk: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub se: Option<StandardErrors>,
    pub provenance: Provenance,
}

fn named(names: &[String], values: &[f64]) -> Vec<NamedValue> {
    names
        .iter()
        .zip(values)
        .map(|(c, v)| NamedValue {
            column: c.clone(),
            value: *v,
        })
        .collect()
}

impl FitArtifact {
    pub fn from_fit(
        fit: &SipFit,
        response: &str,
        cov: Option<&CovarianceEstimate>,
        input: &str,
        seed: Option<u64>,
    ) -> Self {
        let se = cov.map(|c| StandardErrors {
            se: named(&fit.names[..fit.d - 1], &c.se),
            se_original: named(&fit.names, &c.se_original),
            sandwich: c.sandwich.row_iter().map(|r| r.iter().copied().collect()).collect(),
        });
        Self {
            schema_version: SCHEMA_VERSION,
            response: response.to_string(),
            columns: fit.names.clone(),
            theta_hat: named(&fit.names, fit.theta_hat.as_slice()),
            theta_original: named(&fit.names, &fit.theta_original()),
            transform: fit.transform.clone(),
            knots: KnotSpec {
                interior_knots: fit.interior_knots(),
                c1: fit.config.c1,
                c2: fit.config.c2,
                order: fit.link.spec.order(),
            },
            link_coefficients: fit.link.coefficients.clone(),
            link_rss: fit.link.rss,
            risk: fit.risk,
            n: fit.n,
            iterations: fit.iterations,
            converged: fit.converged,
            se,
            provenance: Provenance {
                input: input.to_string(),
                seed,
                config: fit.config.clone(),
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    /// Rebuilds the fitted model (without the optimizer trace).
    pub fn to_fit(&self) -> Result<SipFit> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let d = self.columns.len();
        if self.theta_hat.len() != d || self.transform.d != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.theta_hat.len(),
            });
        }
        let theta: Vec<f64> = self.theta_hat.iter().map(|v| v.value).collect();
        let theta_hat = HemisphereVector::from_free(&theta[..d - 1])?;
        let spec = SplineBasisSpec::new(self.knots.order, self.knots.interior_knots)?;
        let link = SplineFit::new(spec, self.link_coefficients.clone(), self.link_rss)?;
        let transform = TransformSpec::new(
            d,
            self.transform.a,
            self.transform.center.clone(),
            self.transform.scale.clone(),
        )?;
        Ok(SipFit {
            names: self.columns.clone(),
            theta_hat,
            transform,
            link,
            risk: self.risk,
            n: self.n,
            d,
            iterations: self.iterations,
            converged: self.converged,
            risk_trace: Vec::new(),
            config: self.provenance.config.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("malformed model artifact: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
