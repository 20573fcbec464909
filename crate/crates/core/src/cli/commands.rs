use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::artifact::{FitArtifact, SCHEMA_VERSION};
use super::table::{fmt_f64, is_label, write_csv_file, Table};
use super::{CliError, FitArgs, ForecastArgs, PredictArgs, SelectArgs, SimulateArgs};
use crate::data::Dataset;
use crate::estimator::{fit_dataset, predict_matrix, FitConfig, SipFit};
use crate::inference::covariance;
use crate::modelselect::{select_subset, CandidatePool, SelectConfig, TraceEntry};
use crate::montecarlo::{linear_forecast, rolling_forecast, run_replications, GeneratorSpec};
use crate::splines::knot_count;
use crate::transform::detrend_quadratic_spline;

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| CliError::input(format!("cannot write summary: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn input_err(e: crate::Error) -> CliError {
    CliError::input(e.to_string())
}

fn matrix_from_columns(cols: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Response plus every non-label column other than the response.
fn training_data(table: &Table, response: &str) -> Result<Dataset, CliError> {
    let y = table.numeric_by_name(response)?;
    let names: Vec<String> = table
        .headers
        .iter()
        .filter(|h| *h != response && !is_label(h))
        .cloned()
        .collect();
    if names.is_empty() {
        return Err(CliError::input("no predictor columns besides the response"));
    }
    if y.is_empty() {
        return Err(CliError::input("input has no data rows"));
    }
    let cols = names
        .iter()
        .map(|n| table.numeric_by_name(n))
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(matrix_from_columns(&cols, y.len()), DVector::from_vec(y), names).map_err(input_err)
}

fn fit_summary(out: &mut dyn Write, fit: &SipFit, response: &str) -> Result<(), CliError> {
    say(out, format!("response: {response}"))?;
    say(
        out,
        format!("n: {}  d: {}  interior knots: {}", fit.n, fit.d, fit.interior_knots()),
    )?;
    say(out, "theta (raw scale, standardized scale):")?;
    for ((name, raw), std) in fit.names.iter().zip(fit.theta_original()).zip(fit.theta_hat.as_slice()) {
        say(out, format!("  {name}  {raw:.6}  {std:.6}"))?;
    }
    say(out, format!("risk: {}", fmt_f64(fit.risk)))?;
    say(
        out,
        format!("iterations: {}  converged: {}", fit.iterations, fit.converged),
    )?;
    if !fit.converged {
        eprintln!(
            "warning: optimizer stopped after {} iterations without reaching the gradient tolerance",
            fit.iterations
        );
    }
    Ok(())
}

pub fn fit(a: &FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let table = Table::read(&a.input)?;
    let data = training_data(&table, &a.response)?;
    let config = FitConfig {
        c1: a.c1,
        c2: a.c2,
        cap_c: a.cap_c,
        radius_quantile: a.radius_q,
        ..FitConfig::default()
    };
    config.validate().map_err(input_err)?;
    let fit = fit_dataset(&data, &config).map_err(CliError::from_fit_error)?;
    let cov = if a.se {
        Some(covariance(&data, &fit).map_err(|e| CliError::fit(format!("inference: {e}")))?)
    } else {
        None
    };
    fit_summary(out, &fit, &a.response)?;
    if let Some(c) = &cov {
        say(out, "standard errors (raw scale):")?;
        for (name, se) in fit.names.iter().zip(&c.se_original) {
            say(out, format!("  {name}  {se:.6}"))?;
        }
    }
    if let Some(path) = &a.out {
        let art = FitArtifact::from_fit(&fit, &a.response, cov.as_ref(), &a.input.to_string_lossy(), None);
        write_text(path, &art.to_json())?;
    }
    Ok(())
}

pub fn predict(a: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let art = FitArtifact::read(&a.model).map_err(input_err)?;
    let fit = art.to_fit().map_err(input_err)?;
    let table = Table::read(&a.input)?;
    let missing: Vec<&String> = art.columns.iter().filter(|c| !table.headers.contains(c)).collect();
    let extra: Vec<&String> = table
        .headers
        .iter()
        .filter(|h| !art.columns.contains(h) && **h != art.response && !is_label(h))
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(CliError::input(format!(
            "input columns do not match the model: missing {missing:?}, extra {extra:?}"
        )));
    }
    let cols = art
        .columns
        .iter()
        .map(|c| table.numeric_by_name(c))
        .collect::<Result<Vec<_>, _>>()?;
    let x = matrix_from_columns(&cols, table.n_rows());
    let preds = predict_matrix(&fit, &x).map_err(input_err)?;
    let rows: Vec<Vec<String>> = preds
        .iter()
        .enumerate()
        .map(|(i, p)| vec![i.to_string(), fmt_f64(*p)])
        .collect();
    write_csv_file(&a.out, &["row", "prediction"], &rows)?;
    say(out, format!("predicted {} rows", rows.len()))
}

pub fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = match a.example {
        1 => {
            let d = a.d.unwrap_or(2);
            if d != 2 {
                return Err(CliError::input(format!("example 1 is bivariate; got --d {d}")));
            }
            GeneratorSpec::Example1 {
                n: a.n,
                delta: a.delta.unwrap_or(0.0),
                sigma0: a.sigma0.unwrap_or(0.3),
            }
        }
        _ => {
            let d = a.d.ok_or_else(|| CliError::input("example 2 needs --d"))?;
            if d < 3 {
                return Err(CliError::input(format!("example 2 needs d >= 3, got {d}")));
            }
            if a.delta.is_some() {
                return Err(CliError::input("--delta applies to example 1 only"));
            }
            GeneratorSpec::Example2 {
                n: a.n,
                d,
                sigma0: a.sigma0.unwrap_or(0.2),
            }
        }
    };
    if let GeneratorSpec::Example1 { delta, .. } = spec {
        if !delta.is_finite() {
            return Err(CliError::input("--delta must be finite"));
        }
    }
    let sigma0 = match spec {
        GeneratorSpec::Example1 { sigma0, .. } | GeneratorSpec::Example2 { sigma0, .. } => sigma0,
    };
    if !(sigma0.is_finite() && sigma0 >= 0.0) {
        return Err(CliError::input("--sigma0 must be a nonnegative number"));
    }
    if a.reps < 2 {
        return Err(CliError::input(format!("--reps must be at least 2, got {}", a.reps)));
    }
    let config = FitConfig::default();
    let min_n = knot_count(a.n.max(1), config.c1, config.c2) + 4;
    if a.n < min_n {
        return Err(CliError::input(format!("--n must be at least {min_n}")));
    }
    let report = run_replications(&spec, a.reps, a.seed, &config).map_err(|e| CliError::fit(e.to_string()))?;
    for (seed, msg) in &report.failures {
        eprintln!("warning: replication with seed {seed} failed: {msg}");
    }
    let failed = report.failures.len().to_string();
    match spec {
        GeneratorSpec::Example1 { n, delta, sigma0 } => {
            let rows: Vec<Vec<String>> = (0..2)
                .map(|p| {
                    vec![
                        "1".into(),
                        n.to_string(),
                        "2".into(),
                        fmt_f64(delta),
                        fmt_f64(sigma0),
                        a.reps.to_string(),
                        failed.clone(),
                        format!("theta{}", p + 1),
                        fmt_f64(report.bias[p]),
                        fmt_f64(report.sd[p]),
                        fmt_f64(report.mse[p]),
                        fmt_f64(report.average_mse),
                    ]
                })
                .collect();
            write_csv_file(
                &a.out,
                &[
                    "example",
                    "n",
                    "d",
                    "delta",
                    "sigma0",
                    "reps",
                    "failed",
                    "coordinate",
                    "bias",
                    "sd",
                    "mse",
                    "average_mse",
                ],
                &rows,
            )?;
        }
        GeneratorSpec::Example2 { n, d, sigma0 } => {
            let row = vec![
                "2".into(),
                n.to_string(),
                d.to_string(),
                fmt_f64(sigma0),
                a.reps.to_string(),
                failed.clone(),
                fmt_f64(report.average_mse),
            ];
            write_csv_file(
                &a.out,
                &["example", "n", "d", "sigma0", "reps", "failed", "average_mse"],
                &[row],
            )?;
        }
    }
    say(out, format!("replications: {} (failed {failed})", a.reps))?;
    say(out, format!("average MSE: {}", fmt_f64(report.average_mse)))
}

#[derive(Serialize)]
struct SelectionDocument<'a> {
    schema_version: u32,
    response: &'a str,
    max_lag: usize,
    detrend: bool,
    exogenous: &'a [String],
    candidates: &'a [String],
    chosen: &'a [String],
    bic: f64,
    trace: &'a [TraceEntry],
    fit: FitArtifact,
}

fn response_series(table: &Table, response: &str, detrend: bool) -> Result<Vec<f64>, CliError> {
    let y = table.numeric_by_name(response)?;
    if !detrend {
        return Ok(y);
    }
    let knots = knot_count(y.len().max(1), 1, 5);
    detrend_quadratic_spline(&y, knots)
        .map(|(d, _)| d)
        .map_err(|e| CliError::input(format!("detrending: {e}")))
}

pub fn select(a: &SelectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let table = Table::read(&a.input)?;
    if a.max_lag == 0 {
        return Err(CliError::input("--max-lag must be at least 1"));
    }
    if a.exogenous.iter().any(|e| e == &a.response) {
        return Err(CliError::input("the response cannot also be exogenous"));
    }
    let y = response_series(&table, &a.response, a.detrend)?;
    if a.max_lag >= y.len() {
        return Err(CliError::input(format!(
            "--max-lag {} leaves no rows in a series of length {}",
            a.max_lag,
            y.len()
        )));
    }
    let exo = a
        .exogenous
        .iter()
        .map(|n| Ok((n.clone(), table.numeric_by_name(n)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let pool = CandidatePool::from_series(&a.response, &y, &exo, a.max_lag).map_err(input_err)?;
    let config = SelectConfig {
        exhaustive: a.exhaustive,
        ..SelectConfig::default()
    };
    let rows = pool.data().n();
    let needed = (config.selection_knots + 4).max(knot_count(rows, config.fit.c1, config.fit.c2) + 4) + 1;
    if rows < needed {
        return Err(CliError::input(format!(
            "{rows} rows remain after lag alignment; at least {needed} are needed"
        )));
    }
    if a.exhaustive && pool.len() > crate::modelselect::EXHAUSTIVE_LIMIT {
        return Err(CliError::input(format!(
            "--exhaustive allows at most {} candidates, the pool has {}",
            crate::modelselect::EXHAUSTIVE_LIMIT,
            pool.len()
        )));
    }
    let result = select_subset(&pool, &config).map_err(CliError::from_fit_error)?;
    for w in result.trace.iter().filter_map(|t| t.warning.as_ref()) {
        eprintln!("warning: {w}");
    }
    let doc = SelectionDocument {
        schema_version: SCHEMA_VERSION,
        response: &a.response,
        max_lag: a.max_lag,
        detrend: a.detrend,
        exogenous: &a.exogenous,
        candidates: pool.names(),
        chosen: &result.chosen,
        bic: result.bic,
        trace: &result.trace,
        fit: FitArtifact::from_fit(&result.fit, &a.response, None, &a.input.to_string_lossy(), None),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("selection serializes");
    text.push('\n');
    write_text(&a.out, &text)?;
    say(out, format!("chosen: {}", result.chosen.join(", ")))?;
    say(out, format!("bic: {}", fmt_f64(result.bic)))
}

/// Splits `name_lagK` into `(name, K)`.
fn parse_lag_name(s: &str) -> Option<(&str, usize)> {
    let pos = s.rfind("_lag")?;
    let lag = s[pos + 4..].parse().ok()?;
    Some((&s[..pos], lag))
}

pub fn forecast(a: &ForecastArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let table = Table::read(&a.input)?;
    let y = table.numeric_by_name(&a.response)?;
    let t = y.len();
    let mut specs = Vec::new();
    for name in &a.model_cols {
        let (col, lag) = parse_lag_name(name)
            .ok_or_else(|| CliError::input(format!("model column `{name}` is not of the form <column>_lag<k>")))?;
        if is_label(col) {
            return Err(CliError::input(format!("label column `{col}` cannot be a predictor")));
        }
        if col == a.response && lag == 0 {
            return Err(CliError::input(format!("`{name}` is the response itself")));
        }
        let series = table.numeric_by_name(col)?;
        specs.push((name.clone(), series, lag));
    }
    let max_lag = specs.iter().map(|s| s.2).max().unwrap_or(0);
    let split = match a.split.parse::<usize>() {
        Ok(v) => v,
        Err(_) => {
            let j = table
                .label_column()
                .ok_or_else(|| CliError::input("--split is not an integer and the input has no date/time column"))?;
            table.rows.iter().position(|r| r[j] == a.split).ok_or_else(|| {
                CliError::input(format!(
                    "--split value `{}` not found in column `{}`",
                    a.split, table.headers[j]
                ))
            })?
        }
    };
    if split <= max_lag || split >= t {
        return Err(CliError::input(format!(
            "--split {split} outside range {}..{}",
            max_lag + 1,
            t.saturating_sub(1)
        )));
    }
    let rows = t - max_lag;
    let x = DMatrix::from_fn(rows, specs.len(), |i, j| specs[j].1[i + max_lag - specs[j].2]);
    let yy = DVector::from_iterator(rows, y[max_lag..].iter().copied());
    let names = specs.iter().map(|s| s.0.clone()).collect();
    let data = Dataset::new(x, yy, names).map_err(input_err)?;
    let local_split = split - max_lag;
    let fc = if a.linear {
        linear_forecast(&data, local_split).map_err(|e| CliError::fit(e.to_string()))?
    } else {
        rolling_forecast(&data, local_split, &FitConfig::default())
            .map_err(CliError::from_fit_error)?
            .0
    };
    let label = table.label_column();
    let mut headers = vec!["row"];
    if let Some(j) = label {
        headers.push(table.headers[j].as_str());
    }
    headers.extend(["prediction", "actual", "error"]);
    let out_rows: Vec<Vec<String>> = fc
        .rows
        .iter()
        .zip(fc.predictions.iter().zip(&fc.actual))
        .map(|(&r, (p, act))| {
            let row = r + max_lag;
            let mut v = vec![row.to_string()];
            if let Some(j) = label {
                v.push(table.rows[row][j].clone());
            }
            v.extend([fmt_f64(*p), fmt_f64(*act), fmt_f64(act - p)]);
            v
        })
        .collect();
    write_csv_file(&a.out, &headers, &out_rows)?;
    say(out, format!("model: {}", if a.linear { "linear" } else { "sip" }))?;
    say(out, format!("forecasts: {}", out_rows.len()))?;
    say(out, format!("mspe: {}", fmt_f64(fc.mspe)))
}
