//! BIC subset selection over lagged candidate predictors.
//!
//! `BIC = n log R̂ + q log n` with `q = (N + 4) + (|S| - 1)`: spline
//! coefficients plus free index parameters. Candidate fits use a fixed
//! number of interior knots (3 by default); the final fit on the chosen
//! subset uses the regular knot rule.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{fit_dataset, FitConfig, SipFit};

/// Largest pool for which exhaustive search is allowed.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Aligned design of lagged candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    data: Dataset,
    response: String,
    /// Leading observations dropped to make room for the largest lag.
    dropped: usize,
}

impl CandidatePool {
    /// Response lags `1..=max_lag` named `{response}_lag{l}`, then each
    /// exogenous series at lags `0..=max_lag` named `{name}_lag{l}`.
    pub fn from_series(response: &str, y: &[f64], exogenous: &[(String, Vec<f64>)], max_lag: usize) -> Result<Self> {
        if max_lag == 0 {
            return Err(Error::Invalid("max lag must be at least 1".into()));
        }
        let t = y.len();
        for (name, s) in exogenous {
            if s.len() != t {
                return Err(Error::Invalid(format!(
                    "series `{name}` has {} values, the response has {t}",
                    s.len()
                )));
            }
        }
        if t <= max_lag {
            return Err(Error::Invalid(format!(
                "series of length {t} leaves no rows after dropping {max_lag} lags"
            )));
        }
        let rows = t - max_lag;
        let mut names = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for l in 1..=max_lag {
            names.push(format!("{response}_lag{l}"));
            cols.push((max_lag..t).map(|i| y[i - l]).collect());
        }
        for (name, s) in exogenous {
            for l in 0..=max_lag {
                names.push(format!("{name}_lag{l}"));
                cols.push((max_lag..t).map(|i| s[i - l]).collect());
            }
        }
        let x = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
        let yy = DVector::from_iterator(rows, y[max_lag..].iter().copied());
        Ok(Self {
            data: Dataset::new(x, yy, names)?,
            response: response.to_string(),
            dropped: max_lag,
        })
    }

    /// Uses the columns of `data` directly as candidates.
    pub fn from_dataset(data: Dataset, response: &str) -> Self {
        Self {
            data,
            response: response.to_string(),
            dropped: 0,
        }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn names(&self) -> &[String] {
        self.data.names()
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.data.d()
    }

    pub fn is_empty(&self) -> bool {
        self.data.d() == 0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    /// Configuration of the final fit; its knot settings are replaced by
    /// `selection_knots` for candidate fits.
    pub fit: FitConfig,
    pub selection_knots: usize,
    pub exhaustive: bool,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            selection_knots: 3,
            exhaustive: false,
        }
    }
}

/// `n log R̂ + ((N + 4) + (d - 1)) log n`.
pub fn bic_value(n: usize, risk: f64, interior_knots: usize, d: usize) -> Result<f64> {
    if !(risk > 0.0) {
        return Err(Error::Degenerate(format!(
            "BIC is undefined for risk {risk}; the fit is perfect"
        )));
    }
    let q = (interior_knots + 4 + d - 1) as f64;
    let nf = n as f64;
    Ok(nf * risk.ln() + q * nf.ln())
}

pub fn bic(fit: &SipFit) -> Result<f64> {
    bic_value(fit.n, fit.risk, fit.interior_knots(), fit.d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Forward,
    Backward,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub phase: Phase,
    pub step: usize,
    pub columns: Vec<String>,
    pub bic: Option<f64>,
    pub accepted: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: Vec<String>,
    pub chosen_indices: Vec<usize>,
    /// BIC of the chosen subset under the selection knots.
    pub bic: f64,
    pub trace: Vec<TraceEntry>,
    /// Fit on the chosen subset with the regular knot rule.
    pub fit: SipFit,
}

struct Evaluator<'a> {
    pool: &'a CandidatePool,
    config: FitConfig,
    cache: BTreeMap<Vec<usize>, std::result::Result<f64, String>>,
}

impl<'a> Evaluator<'a> {
    fn new(pool: &'a CandidatePool, config: &SelectConfig) -> Self {
        Self {
            pool,
            config: FitConfig {
                interior_knots: Some(config.selection_knots),
                ..config.fit.clone()
            },
            cache: BTreeMap::new(),
        }
    }

    fn score_one(&self, subset: &[usize]) -> std::result::Result<f64, String> {
        let ds = self.pool.data().select_columns(subset);
        fit_dataset(&ds, &self.config)
            .and_then(|fit| bic(&fit))
            .map_err(|e| e.to_string())
    }

    /// BICs for each subset, computed in parallel, returned in input order.
    fn score_all(&mut self, subsets: &[Vec<usize>]) -> Vec<std::result::Result<f64, String>> {
        let missing: Vec<&Vec<usize>> = subsets.iter().filter(|s| !self.cache.contains_key(*s)).collect();
        let computed: Vec<_> = missing.par_iter().map(|s| self.score_one(s)).collect();
        for (s, r) in missing.into_iter().zip(computed) {
            self.cache.insert(s.clone(), r);
        }
        subsets.iter().map(|s| self.cache[s].clone()).collect()
    }

    fn names(&self, subset: &[usize]) -> Vec<String> {
        subset.iter().map(|&j| self.pool.names()[j].clone()).collect()
    }
}

// Ordering of candidate moves: lower BIC, then fewer columns, then lexicographic indices.
fn better(a: (f64, &[usize]), b: (f64, &[usize])) -> bool {
    if a.0 != b.0 {
        return a.0 < b.0;
    }
    if a.1.len() != b.1.len() {
        return a.1.len() < b.1.len();
    }
    a.1 < b.1
}

fn record(
    trace: &mut Vec<TraceEntry>,
    eval: &Evaluator,
    phase: Phase,
    step: usize,
    subsets: &[Vec<usize>],
    results: &[std::result::Result<f64, String>],
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if let Ok(b) = r {
            if best.is_none_or(|k| better((*b, &subsets[i]), (*results[k].as_ref().unwrap(), &subsets[k]))) {
                best = Some(i);
            }
        }
    }
    for (s, r) in subsets.iter().zip(results) {
        trace.push(TraceEntry {
            phase: phase.clone(),
            step,
            columns: eval.names(s),
            bic: r.as_ref().ok().copied(),
            accepted: false,
            warning: r.as_ref().err().map(|e| format!("candidate skipped: {e}")),
        });
    }
    best
}

fn mark_accepted(trace: &mut [TraceEntry], offset: usize, index: usize) {
    trace[offset + index].accepted = true;
}

/// Greedy forward selection from the empty set followed by backward
/// pruning, or exhaustive search when `config.exhaustive` is set.
pub fn select_subset(pool: &CandidatePool, config: &SelectConfig) -> Result<SelectionResult> {
    if pool.is_empty() {
        return Err(Error::Invalid("candidate pool is empty".into()));
    }
    config.fit.validate()?;
    let mut eval = Evaluator::new(pool, config);
    let mut trace = Vec::new();
    let (chosen, best_bic) = if config.exhaustive {
        exhaustive(&mut eval, &mut trace)?
    } else {
        greedy(&mut eval, &mut trace)?
    };
    let ds = pool.data().select_columns(&chosen);
    let fit = fit_dataset(&ds, &config.fit)?;
    Ok(SelectionResult {
        chosen: eval.names(&chosen),
        chosen_indices: chosen,
        bic: best_bic,
        trace,
        fit,
    })
}

fn greedy(eval: &mut Evaluator, trace: &mut Vec<TraceEntry>) -> Result<(Vec<usize>, f64)> {
    let m = eval.pool.len();
    let mut current: Vec<usize> = Vec::new();
    let mut current_bic = f64::INFINITY;
    let mut step = 0;
    loop {
        let subsets: Vec<Vec<usize>> = (0..m)
            .filter(|j| !current.contains(j))
            .map(|j| {
                let mut s = current.clone();
                s.push(j);
                s.sort_unstable();
                s
            })
            .collect();
        if subsets.is_empty() {
            break;
        }
        let results = eval.score_all(&subsets);
        let offset = trace.len();
        match record(trace, eval, Phase::Forward, step, &subsets, &results) {
            Some(k) if *results[k].as_ref().unwrap() < current_bic => {
                mark_accepted(trace, offset, k);
                current = subsets[k].clone();
                current_bic = *results[k].as_ref().unwrap();
            }
            _ => break,
        }
        step += 1;
    }
    if current.is_empty() {
        return Err(Error::Degenerate("every single-candidate fit failed".into()));
    }
    loop {
        if current.len() < 2 {
            break;
        }
        let subsets: Vec<Vec<usize>> = (0..current.len())
            .map(|i| {
                let mut s = current.clone();
                s.remove(i);
                s
            })
            .collect();
        let results = eval.score_all(&subsets);
        let offset = trace.len();
        match record(trace, eval, Phase::Backward, step, &subsets, &results) {
            // the smaller model wins ties
            Some(k) if *results[k].as_ref().unwrap() <= current_bic => {
                mark_accepted(trace, offset, k);
                current = subsets[k].clone();
                current_bic = *results[k].as_ref().unwrap();
            }
            _ => break,
        }
        step += 1;
    }
    Ok((current, current_bic))
}

fn exhaustive(eval: &mut Evaluator, trace: &mut Vec<TraceEntry>) -> Result<(Vec<usize>, f64)> {
    let m = eval.pool.len();
    if m > EXHAUSTIVE_LIMIT {
        return Err(Error::Invalid(format!(
            "exhaustive search allows at most {EXHAUSTIVE_LIMIT} candidates, got {m}"
        )));
    }
    let subsets: Vec<Vec<usize>> = (1u32..(1 << m))
        .map(|mask| (0..m).filter(|j| mask & (1 << j) != 0).collect())
        .collect();
    let results = eval.score_all(&subsets);
    let offset = trace.len();
    let k = record(trace, eval, Phase::Exhaustive, 0, &subsets, &results)
        .ok_or_else(|| Error::Degenerate("every candidate subset failed to fit".into()))?;
    mark_accepted(trace, offset, k);
    Ok((subsets[k].clone(), *results[k].as_ref().unwrap()))
}

/// BIC of `subset` and of every neighbor that adds, drops or swaps one column,
/// under the selection knots. Failed fits are omitted.
pub fn neighborhood_bics(
    pool: &CandidatePool,
    subset: &[usize],
    config: &SelectConfig,
) -> (Option<f64>, Vec<(Vec<usize>, f64)>) {
    let m = pool.len();
    let mut base: Vec<usize> = subset.to_vec();
    base.sort_unstable();
    let mut neighbors: Vec<Vec<usize>> = Vec::new();
    for j in (0..m).filter(|j| !base.contains(j)) {
        let mut s = base.clone();
        s.push(j);
        s.sort_unstable();
        neighbors.push(s);
        for i in 0..base.len() {
            let mut s = base.clone();
            s[i] = j;
            s.sort_unstable();
            neighbors.push(s);
        }
    }
    if base.len() > 1 {
        for i in 0..base.len() {
            let mut s = base.clone();
            s.remove(i);
            neighbors.push(s);
        }
    }
    let mut eval = Evaluator::new(pool, config);
    let own = eval.score_all(std::slice::from_ref(&base)).remove(0).ok();
    let results = eval.score_all(&neighbors);
    let out = neighbors
        .into_iter()
        .zip(results)
        .filter_map(|(s, r)| r.ok().map(|b| (s, b)))
        .collect();
    (own, out)
}
