use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deconv-cdf"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// The single JSON error line on stderr.
fn error_line(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    serde_json::from_str(lines[0]).unwrap()
}

const LAPLACE: &str = r#"{"kind":"laplace","loc":0,"scale":0.5}"#;

const SMALL_SCENARIO: &str = r#"{
  "noise": {"kind": "laplace", "loc": 0, "scale": 0.5},
  "target": {"kind": "custom", "law": {"kind": "gaussian", "mean": 0, "variance": 1}},
  "scenario": {"n": 300, "reps": 4, "t0_points": 5, "master_seed": 3},
  "estimators": [{"kind": "edf"}, {"kind": "fixed_lambda", "lambda": 2.5}]
}"#;

#[test]
fn help_and_version_succeed() {
    assert!(run(bin().arg("--help")).status.success());
    assert!(run(bin().arg("--version")).status.success());
}

#[test]
fn usage_errors_exit_two_with_a_json_line() {
    let out = run(bin().arg("no-such-command"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"]["kind"], "usage");

    let out = run(bin().args(["estimate-cdf", "--lambda", "1"]));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"]["kind"], "usage");
}

#[test]
fn runtime_errors_exit_one_with_their_kind() {
    let dir = scratch("runtime_errors");
    let missing = dir.join("missing.csv");
    let out = run(bin().args(["estimate-cdf", "--noise", LAPLACE, "--lambda", "1", "--t0", "0", "--data"]).arg(&missing));
    assert_eq!(out.status.code(), Some(1));
    let e = error_line(&out);
    assert_eq!(e["error"]["kind"], "io");
    assert!(e["error"]["message"].as_str().unwrap().contains("missing.csv"));

    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, r#"{"noise": {"kind": "laplace", "loc": 0, "scale": 0.5}, "typo": 1}"#).unwrap();
    let out = run(bin().args(["simulate", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"]["kind"], "json");

    let out = run(bin().args(["rates", "--alpha", "1", "--beta=-1", "--n", "100"]));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"]["kind"], "numerical");
}

#[test]
fn estimate_cdf_writes_one_row_per_point() {
    let dir = scratch("estimate_cdf");
    let data = dir.join("y.csv");
    std::fs::write(&data, "y\n-0.4\n0.1\n0.3\n1.2\n").unwrap();
    let out = run(bin()
        .args(["estimate-cdf", "--noise", LAPLACE, "--lambda", "2", "--t0", "-1,0,1", "--data"])
        .arg(&data));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t0,lambda,n,value_raw,value_clipped");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[2], 4.0);
        assert!((0.0..=1.0).contains(&f[4]));
    }
}

#[test]
fn simulate_output_is_byte_identical_across_runs() {
    let dir = scratch("simulate");
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, SMALL_SCENARIO).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let rows = dir.join(format!("rows{k}.csv"));
        let summary = dir.join(format!("summary{k}.csv"));
        let out = run(bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&rows)
            .arg("--summary")
            .arg(&summary));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read(rows).unwrap(), std::fs::read(summary).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let rows = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(rows.starts_with("estimator_id,rep,t0,estimate,truth,error,abs_error,status\n"));
    assert_eq!(rows.lines().count(), 1 + 2 * 5 * 4);
    let summary = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(summary.starts_with("estimator_id,statistic,index,value\n"));
    assert!(summary.contains("fixed_lambda_2.5,rep_max_median,"));
}

#[test]
fn affine_reads_the_bundle_it_wrote() {
    let dir = scratch("bundle");
    let cfg = dir.join("config.json");
    std::fs::write(
        &cfg,
        r#"{
  "noise": {"kind": "laplace", "loc": 0, "scale": 0.5},
  "target": {"kind": "custom", "law": {"kind": "gaussian", "mean": 0, "variance": 1}},
  "scenario": {"n": 500},
  "affine": {"signal_range": [-3, 3], "signal_bins": 8, "observation_bins": 10}
}"#,
    )
    .unwrap();
    let bundle = dir.join("problem");
    let from_config = run(bin()
        .args(["affine", "--lipschitz", "0.5", "--t0", "0.2", "--config"])
        .arg(&cfg)
        .arg("--write-bundle")
        .arg(&bundle));
    assert!(from_config.status.success(), "{}", String::from_utf8_lossy(&from_config.stderr));
    for f in ["signal_edges.csv", "observation_edges.csv", "channel.csv", "functional.csv", "meta.csv"] {
        assert!(bundle.join(f).is_file(), "{f}");
    }
    let from_bundle = run(bin()
        .args(["affine", "--lipschitz", "0.5", "--noise", LAPLACE, "--bundle"])
        .arg(&bundle));
    assert!(from_bundle.status.success(), "{}", String::from_utf8_lossy(&from_bundle.stderr));
    assert_eq!(stdout(&from_config), stdout(&from_bundle));
    let text = stdout(&from_bundle);
    assert!(text.starts_with("class,s_bar,nu,h_residual,iterations,converged,c,estimate,selected\n"));
    assert!(text.contains("lipschitz_0.5,"));
}

#[test]
fn affine_adapt_marks_one_selected_class() {
    let dir = scratch("adapt");
    let data = dir.join("y.csv");
    let ys: String = (0..200).map(|k| format!("{}\n", -2.0 + 4.0 * k as f64 / 199.0)).collect();
    std::fs::write(&data, ys).unwrap();
    let cfg = dir.join("config.json");
    std::fs::write(
        &cfg,
        r#"{
  "noise": {"kind": "laplace", "loc": 0, "scale": 0.5},
  "target": {"kind": "custom", "law": {"kind": "gaussian", "mean": 0, "variance": 1}},
  "scenario": {"n": 200},
  "affine": {"signal_range": [-3, 3], "signal_bins": 6, "observation_bins": 8}
}"#,
    )
    .unwrap();
    let out = run(bin()
        .args(["affine-adapt", "--lipschitz", "0.05,0.2,1", "--t0", "0", "--config"])
        .arg(&cfg)
        .arg("--data")
        .arg(&data));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().filter(|r| r[8] == "1").count(), 1);
    assert!(rows.iter().all(|r| r[7].parse::<f64>().is_ok()));
}

#[test]
fn rates_table_lists_each_sample_size() {
    let out = run(bin().args(["rates", "--alpha", "1", "--beta", "2", "--n", "100,1000"]));
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,zone,log_factor,lambda,rate,lower_bound");
    assert_eq!(lines.len(), 3);
    // λ(n) = n^{1/(2α+2β)} = 100^{1/6}
    let lambda: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((lambda - 100f64.powf(1.0 / 6.0)).abs() <= 1e-12);
}

#[test]
fn verify_noise_reports_a_pass_for_a_preset() {
    let out = run(bin().args(["verify-noise", "--noise", LAPLACE]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "e1_pass,e2_pass,worst_ratio_low,worst_ratio_high,e2_worst_ratio,grid_points"
    );
    assert!(lines.next().unwrap().starts_with("true,true,"));
}
