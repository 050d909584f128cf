use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vbkreg::cli::load_sample_csv;
use vbkreg::estimators::nw_estimate;
use vbkreg::simulate::{cv_grid, nw_cv_bandwidth};
use vbkreg::{BandwidthPlan, ClipSpec, Kernel, VbFit};

fn vbkreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vbkreg")).args(args).env("VBKREG_THREADS", "2").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn fit_single_point_window() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("two.csv");
    fs::write(&data, "x,y\n0,1\n1,2\n").unwrap();
    let out = dir.path().join("fit.csv");
    let o = vbkreg(&["fit", "-i", path(&data), "-o", path(&out), "--grid", "0", "--h2", "1e-7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["t", "vkre", "nwe", "vkre_ok", "nwe_ok"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[0][3], "true");
}

#[test]
fn fit_constant_response_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flat.csv");
    let mut text = String::from("x,y\n");
    for i in 0..150 {
        text.push_str(&format!("{},{}\n", (i as f64 * 0.37).sin() * 3.0, 2.5));
    }
    fs::write(&data, text).unwrap();
    let out = dir.path().join("fit.csv");
    let o = vbkreg(&["fit", "-i", path(&data), "-o", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 200);
    let mut ok_rows = 0;
    for r in &rows {
        if r[3] == "true" {
            assert!((r[1].parse::<f64>().unwrap() - 2.5).abs() < 1e-12, "{r:?}");
            ok_rows += 1;
        }
    }
    assert!(ok_rows > 150);
}

#[test]
fn fit_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut text = String::from("x,y\n");
    for i in 0..300 {
        let x = -2.0 + 4.0 * ((i * 7919) % 300) as f64 / 299.0;
        text.push_str(&format!("{x},{}\n", 1.0 / (1.0 + x * x) + 0.05 * (i as f64 * 1.7).sin()));
    }
    fs::write(&data, text).unwrap();
    let out = dir.path().join("fit.csv");
    let o = vbkreg(&["fit", "-i", path(&data), "-o", path(&out), "--grid", "-1.5:1.5:31"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let sample = load_sample_csv(&data).unwrap();
    let fit =
        VbFit::two_stage(&sample, BandwidthPlan::default_for(300), Kernel::TRICUBE, &ClipSpec::default()).unwrap();
    let nw_h = nw_cv_bandwidth(&sample, Kernel::GAUSSIAN_TRUNCATED, &cv_grid(&sample, 20)).unwrap();
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 31);
    for r in rows {
        let t: f64 = r[0].parse().unwrap();
        let vk: f64 = r[1].parse().unwrap();
        let nw: f64 = r[2].parse().unwrap();
        assert_eq!(vk.to_bits(), fit.estimate(t).value.to_bits());
        assert_eq!(nw.to_bits(), nw_estimate(&sample, t, nw_h, Kernel::GAUSSIAN_TRUNCATED).value.to_bits());
        // 17 significant digits reproduce the value as well
        assert_eq!(format!("{vk:.16e}").parse::<f64>().unwrap(), vk);
    }
}

#[test]
fn errors_go_to_stderr_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "x,y\n0,abc\n").unwrap();
    let o = vbkreg(&["fit", "-i", path(&data), "-o", path(&dir.path().join("f.csv"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    fs::write(&data, "x,y\n0,1\n1,2\n").unwrap();
    let o = vbkreg(&["fit", "-i", path(&data), "-o", "/nonexistent-dir/sub/fit.csv"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nonexistent-dir"));

    let o = vbkreg(&["fit", "-i", path(&dir.path().join("missing.csv"))]);
    assert!(!o.status.success());
    let o = vbkreg(&["simulate", "--scenario", "table9", "-o", path(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown scenario"));
    let o = vbkreg(&["simulate", "--kernel", "box"]);
    assert!(!o.status.success());
}

#[test]
fn simulate_emits_both_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["simulate", "--scenario", "table1-row1", "--n", "1000", "--reps", "20", "--seed", "11"];
    for d in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["-o", path(d)]);
        let o = vbkreg(&full);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("NWE RMSE") && text.contains("VKRE RMSE"));
    }
    let csv_a = fs::read(a.join("table1-row1.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("table1-row1.csv")).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.join("table1-row1.json")).unwrap()).unwrap();
    let report = &json["rows"][0]["report"];
    assert_eq!(report["scenario"]["n"], 1000);
    assert!(report["vkre_rmse"].as_f64().unwrap() > 0.0);
}

#[test]
fn table3_sweep_decreases_in_n() {
    let dir = tempfile::tempdir().unwrap();
    let o = vbkreg(&[
        "simulate",
        "--scenario",
        "table3",
        "--rows",
        "1,2,3",
        "--reps",
        "20",
        "--seed",
        "3",
        "-o",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("table3.csv"));
    assert_eq!(header, ["label", "nwe_rmse", "vkre_rmse"]);
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["500", "1000", "2000"]);
    let vkre: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(vkre.windows(2).all(|w| w[1] < w[0]), "{vkre:?}");
}

#[test]
fn mse_points_at_given_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = vbkreg(&[
        "mse-points",
        "--scenario",
        "table4",
        "--n",
        "300",
        "--reps",
        "4",
        "--grid",
        "-1,0.5,2",
        "-o",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("table4.csv"));
    assert_eq!(header, ["label", "t", "nwe_mse", "vkre_mse", "nwe_count", "vkre_count"]);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[3][0], "unbounded");
    assert_eq!(rows[4][1], "0.5");
}

#[test]
fn config_file_runs_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.json");
    let text = format!(
        r#"{{"subcommand":"simulate","output_path":{:?},
             "scenario":{{"reg":1,"x_dist":{{"kind":"normal","mu":0.0,"sd":1.0}},"n":200,"reps":3}},
             "overrides":{{"seed":4}}}}"#,
        path(&out)
    );
    fs::write(&cfg, text).unwrap();
    let o = vbkreg(&["--config", path(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("custom.json").is_file() && out.join("custom.csv").is_file());

    // flags after the subcommand override the file
    let o = vbkreg(&["--config", path(&cfg), "simulate", "--reps", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("custom.json")).unwrap()).unwrap();
    assert_eq!(json["rows"][0]["report"]["scenario"]["reps"], 2);

    fs::write(&cfg, r#"{"subcommand":"simulate","output_path":"o","verbose":true}"#).unwrap();
    let o = vbkreg(&["--config", path(&cfg)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("verbose"), "{}", stderr(&o));
}

#[test]
fn check_subcommands_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    for (args, stem) in [
        (vec!["theory-report"], "theory-report"),
        (vec!["expansion-check", "--grid", "0.4,0.2,0.1"], "expansion-check"),
        (vec!["bias-check", "--n", "5000", "--estimator", "nw"], "bias-check"),
        (vec!["clt-check", "--n", "500", "--reps", "20"], "clt-check"),
    ] {
        let mut full = args.clone();
        full.extend(["-o", d]);
        let o = vbkreg(&full);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        assert!(dir.path().join(format!("{stem}.json")).is_file());
        assert!(dir.path().join(format!("{stem}.csv")).is_file());
    }
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("theory-report.json")).unwrap()).unwrap();
    assert!(json["optimal_bandwidth"].as_f64().unwrap() > 0.0);
    let (_, z) = read_csv(&dir.path().join("clt-check.csv"));
    assert_eq!(z.len(), 20);
}
