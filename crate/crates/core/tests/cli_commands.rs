use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splinesip::cli::artifact::FitArtifact;
use splinesip::estimator::predict;
use splinesip::montecarlo::{gen_example1, gen_naarx};
use tempfile::TempDir;

fn sip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sip")).args(args).output().unwrap()
}

fn sip_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sip"))
        .args(args)
        .env("SIP_THREADS", threads)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

fn example1_csv(dir: &TempDir, n: usize, seed: u64) -> PathBuf {
    let ds = gen_example1(n, 0.0, 0.3, seed).unwrap();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![ds.x()[(i, 0)], ds.x()[(i, 1)], ds.y()[i]])
        .collect();
    let p = dir.path().join(format!("ex1_{seed}.csv"));
    write_csv(&p, &["x1", "x2", "y"], &rows);
    p
}

fn naarx_csv(dir: &TempDir, len: usize, seed: u64) -> PathBuf {
    let s = gen_naarx(len, seed);
    let rows: Vec<Vec<f64>> = (0..len).map(|t| vec![t as f64, s.y[t], s.x[t]]).collect();
    let p = dir.path().join(format!("naarx_{seed}.csv"));
    write_csv(&p, &["time", "flow", "rain"], &rows);
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn fit_writes_artifact_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = example1_csv(&dir, 100, 2024);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o1 = sip(&["fit", "--input", s(&input), "--response", "y", "--se", "--out", s(&a)]);
    assert!(o1.status.success(), "{}", stderr(&o1));
    let o2 = sip(&["fit", "--input", s(&input), "--response", "y", "--se", "--out", s(&b)]);
    assert_eq!(read(&a), read(&b));
    assert_eq!(o1.stdout, o2.stdout);
    let summary = String::from_utf8(o1.stdout).unwrap();
    assert!(summary.contains("x1") && summary.contains("risk:") && summary.contains("converged"));

    let art = FitArtifact::read(&a).unwrap();
    assert_eq!(art.columns, vec!["x1", "x2"]);
    // reference estimate from one unavailable draw; any θ̂ near θ0 lands within 0.05 of it
    let reference = [0.69016, 0.72365];
    let th = &art.theta_original;
    let dist = th
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a.value - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(dist <= 0.05, "{th:?}");
    assert!(art.se.is_some());
}

#[test]
fn artifact_round_trip_is_byte_stable() {
    let dir = TempDir::new().unwrap();
    let input = example1_csv(&dir, 80, 5);
    let a = dir.path().join("a.json");
    assert!(sip(&["fit", "--input", s(&input), "--response", "y", "--out", s(&a)])
        .status
        .success());
    let text = String::from_utf8(read(&a)).unwrap();
    let art = FitArtifact::from_json(&text).unwrap();
    assert_eq!(art.to_json(), text);
    let fit = art.to_fit().unwrap();
    let again = FitArtifact::from_fit(&fit, &art.response, None, &art.provenance.input, art.provenance.seed);
    assert_eq!(again.to_json(), text);
}

#[test]
fn constant_column_is_malformed_input() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("c.csv");
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.1, 3.0, (i as f64).sin()]).collect();
    write_csv(&p, &["x1", "flat", "y"], &rows);
    let o = sip(&["fit", "--input", s(&p), "--response", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flat"), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "x1,x2,y\n1.0,2.0,3.0\n1.5,,2.0\n").unwrap();
    assert_eq!(
        sip(&["fit", "--input", s(&p), "--response", "y"]).status.code(),
        Some(2)
    );
    std::fs::write(&p, "x1,x2,y\n1.0,NaN,3.0\n").unwrap();
    assert_eq!(
        sip(&["fit", "--input", s(&p), "--response", "y"]).status.code(),
        Some(2)
    );
    let good = example1_csv(&dir, 40, 1);
    assert_eq!(
        sip(&["fit", "--input", s(&good), "--response", "z"]).status.code(),
        Some(2)
    );
    assert_eq!(
        sip(&["fit", "--input", "/nonexistent/file.csv", "--response", "y"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(sip(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sip(&["fit"]).status.code(), Some(2));
}

#[test]
fn predict_matches_library() {
    let dir = TempDir::new().unwrap();
    let input = example1_csv(&dir, 100, 9);
    let model = dir.path().join("m.json");
    let preds = dir.path().join("p.csv");
    assert!(
        sip(&["fit", "--input", s(&input), "--response", "y", "--out", s(&model)])
            .status
            .success()
    );
    let o = sip(&[
        "predict",
        "--model",
        s(&model),
        "--input",
        s(&input),
        "--out",
        s(&preds),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = FitArtifact::read(&model).unwrap().to_fit().unwrap();
    let ds = gen_example1(100, 0.0, 0.3, 9).unwrap();
    let text = String::from_utf8(read(&preds)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,prediction"));
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let (row, value) = line.split_once(',').unwrap();
        assert_eq!(row.parse::<usize>().unwrap(), i);
        let want = predict(&fit, &[ds.x()[(i, 0)], ds.x()[(i, 1)]]).unwrap();
        assert!((value.parse::<f64>().unwrap() - want).abs() <= 1e-12);
        count += 1;
    }
    assert_eq!(count, 100);

    let again = dir.path().join("p2.csv");
    sip(&[
        "predict",
        "--model",
        s(&model),
        "--input",
        s(&input),
        "--out",
        s(&again),
    ]);
    assert_eq!(read(&preds), read(&again));
}

#[test]
fn predict_edge_cases() {
    let dir = TempDir::new().unwrap();
    let input = example1_csv(&dir, 60, 3);
    let model = dir.path().join("m.json");
    assert!(
        sip(&["fit", "--input", s(&input), "--response", "y", "--out", s(&model)])
            .status
            .success()
    );

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "x1,x2\n").unwrap();
    let out = dir.path().join("e.csv");
    let o = sip(&["predict", "--model", s(&model), "--input", s(&empty), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(read(&out)).unwrap();
    assert!(text.lines().nth(1).is_none());

    let far = dir.path().join("far.csv");
    write_csv(&far, &["x1", "x2"], &[vec![1e3, -1e3], vec![0.0, 0.0]]);
    let o = sip(&["predict", "--model", s(&model), "--input", s(&far), "--out", s(&out)]);
    assert!(o.status.success());
    let text = String::from_utf8(read(&out)).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.split(',').nth(1).unwrap().parse::<f64>().unwrap().is_finite());
    }

    let wrong = dir.path().join("wrong.csv");
    write_csv(&wrong, &["x1", "x3"], &[vec![0.0, 0.0]]);
    let o = sip(&["predict", "--model", s(&model), "--input", s(&wrong), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("x2") && msg.contains("x3"), "{msg}");
}

#[test]
fn simulate_small_tables() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "simulate".to_string(),
            "--example".into(),
            "1".into(),
            "--n".into(),
            "100".into(),
            "--sigma0".into(),
            "0.3".into(),
            "--reps".into(),
            "2".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            s(p).into(),
        ]
    };
    let argv: Vec<String> = args(&a);
    let o = sip(&argv.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", stderr(&o));
    let argv: Vec<String> = args(&b);
    sip(&argv.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(read(&a), read(&b));
    let text = String::from_utf8(read(&a)).unwrap();
    assert!(text.starts_with("example,n,d,delta,sigma0,reps,failed,coordinate,bias,sd,mse,average_mse"));
    assert_eq!(text.lines().count(), 3);

    let c = dir.path().join("c.csv");
    let o = sip(&[
        "simulate",
        "--example",
        "2",
        "--n",
        "60",
        "--d",
        "5",
        "--reps",
        "2",
        "--out",
        s(&c),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(read(&c))
        .unwrap()
        .starts_with("example,n,d,sigma0,reps,failed,average_mse"));

    let bad = sip(&[
        "simulate",
        "--example",
        "1",
        "--n",
        "50",
        "--d",
        "3",
        "--reps",
        "2",
        "--out",
        s(&c),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = sip(&["simulate", "--example", "3", "--n", "50", "--out", s(&c)]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = sip(&["simulate", "--example", "1", "--n", "50", "--reps", "1", "--out", s(&c)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn select_picks_the_autoregressive_lag() {
    let dir = TempDir::new().unwrap();
    let input = naarx_csv(&dir, 400, 4);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let run = |p: &Path| {
        sip(&[
            "select",
            "--input",
            s(&input),
            "--response",
            "flow",
            "--max-lag",
            "2",
            "--exogenous",
            "rain",
            "--out",
            s(p),
        ])
    };
    let o = run(&a);
    assert!(o.status.success(), "{}", stderr(&o));
    run(&b);
    assert_eq!(read(&a), read(&b));
    let doc: serde_json::Value = serde_json::from_slice(&read(&a)).unwrap();
    let chosen: Vec<&str> = doc["chosen"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(chosen.contains(&"flow_lag1"), "{chosen:?}");

    let short = dir.path().join("short.csv");
    write_csv(
        &short,
        &["flow", "rain"],
        &[vec![1.0, 2.0], vec![1.5, 0.3], vec![0.2, 0.9]],
    );
    let o = sip(&[
        "select",
        "--input",
        s(&short),
        "--response",
        "flow",
        "--max-lag",
        "5",
        "--out",
        s(&a),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn forecast_beats_linear_on_benchmark() {
    let dir = TempDir::new().unwrap();
    let input = naarx_csv(&dir, 500, 6);
    let cols = "flow_lag1,rain_lag0,rain_lag1";
    let sipf = dir.path().join("sip.csv");
    let lin = dir.path().join("lin.csv");
    let o = sip(&[
        "forecast",
        "--input",
        s(&input),
        "--response",
        "flow",
        "--split",
        "350",
        "--model-cols",
        cols,
        "--out",
        s(&sipf),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sip_summary = String::from_utf8(o.stdout).unwrap();
    let o = sip(&[
        "forecast",
        "--input",
        s(&input),
        "--response",
        "flow",
        "--split",
        "350",
        "--model-cols",
        cols,
        "--linear",
        "--out",
        s(&lin),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lin_summary = String::from_utf8(o.stdout).unwrap();
    let mspe = |t: &str| -> f64 {
        t.lines()
            .find_map(|l| l.strip_prefix("mspe: "))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!(mspe(&sip_summary) < mspe(&lin_summary));
    let text = String::from_utf8(read(&sipf)).unwrap();
    assert!(text.starts_with("row,time,prediction,actual,error"));
    assert_eq!(text.lines().count(), 1 + 150);

    // a time label works as the split too
    let by_label = dir.path().join("label.csv");
    let o = sip(&[
        "forecast",
        "--input",
        s(&input),
        "--response",
        "flow",
        "--split",
        "350.0",
        "--model-cols",
        cols,
        "--out",
        s(&by_label),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&by_label), read(&sipf));
}

#[test]
fn forecast_split_bounds() {
    let dir = TempDir::new().unwrap();
    let input = naarx_csv(&dir, 120, 8);
    let out = dir.path().join("f.csv");
    let o = sip(&[
        "forecast",
        "--input",
        s(&input),
        "--response",
        "flow",
        "--split",
        "119",
        "--model-cols",
        "flow_lag1,rain_lag0",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(read(&out)).unwrap().lines().count(), 2);
    for bad in ["120", "0", "5000", "abc"] {
        let o = sip(&[
            "forecast",
            "--input",
            s(&input),
            "--response",
            "flow",
            "--split",
            bad,
            "--model-cols",
            "flow_lag1",
            "--out",
            s(&out),
        ]);
        assert_eq!(o.status.code(), Some(2), "split {bad}");
    }
    let o = sip(&[
        "forecast",
        "--input",
        s(&input),
        "--response",
        "flow",
        "--split",
        "60",
        "--model-cols",
        "flow_lagx",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| -> Vec<String> {
        [
            "simulate",
            "--example",
            "2",
            "--n",
            "80",
            "--d",
            "4",
            "--reps",
            "6",
            "--seed",
            "3",
            "--out",
            s(p),
        ]
        .iter()
        .map(|v| v.to_string())
        .collect()
    };
    let argv = args(&a);
    assert!(sip_env(&argv.iter().map(String::as_str).collect::<Vec<_>>(), "1")
        .status
        .success());
    let argv = args(&b);
    assert!(sip_env(&argv.iter().map(String::as_str).collect::<Vec<_>>(), "4")
        .status
        .success());
    assert_eq!(read(&a), read(&b));
    let argv = args(&b);
    assert_eq!(
        sip_env(&argv.iter().map(String::as_str).collect::<Vec<_>>(), "zero")
            .status
            .code(),
        Some(2)
    );
}
