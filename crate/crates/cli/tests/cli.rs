// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gkcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkcp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = gkcp(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn generated_and_dumped_data_give_identical_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let gen = [
        "--n", "120", "--d", "6", "--tau", "60", "--delta", "1.5", "--seed", "17",
    ];
    let mut args = vec!["gen", "--family", "gaussian_type1", "-o", path_str(&csv)];
    args.extend(gen);
    assert!(gkcp(&args).status.success());

    for method in ["fgkcp1", "gkcp"] {
        let common = ["--method", method, "--n-perm", "99"];
        let mut a = vec!["test", "--gen", "gaussian_type1"];
        a.extend(gen);
        a.extend(common);
        let from_gen = ok_json(&a);
        let mut b = vec!["test", "--input", path_str(&csv), "--seed", "17"];
        b.extend(common);
        let from_csv = ok_json(&b);
        assert_eq!(from_gen["result"], from_csv["result"], "{method}");
        assert_eq!(from_gen["config"], from_csv["config"], "{method}");
        assert_eq!(from_gen["input"]["source"], "generator");
        assert_eq!(from_csv["input"]["source"], "csv");
    }
}

#[test]
fn report_embeds_schema_and_resolved_config() {
    let v = ok_json(&[
        "test",
        "--gen",
        "gaussian_type1",
        "--n",
        "100",
        "--d",
        "3",
        "--n0",
        "0.1",
        "--seed",
        "5",
    ]);
    assert_eq!(v["schema"], "gkcp-report");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "test");
    let c = &v["config"];
    assert_eq!(c["n0"], 10);
    assert_eq!(c["n1"], 90);
    assert_eq!(c["alpha"], 0.05);
    assert_eq!(c["seed"], 5);
    assert!(c["bandwidth"].as_f64().unwrap() > 0.0);
    assert_eq!(v["input"]["spec"]["n"], 100);
    let p = v["result"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn planted_change_is_found_and_curve_written() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let report = dir.path().join("report.json");
    let out = gkcp(&[
        "test",
        "--gen",
        "gaussian_type1",
        "--n",
        "150",
        "--d",
        "5",
        "--tau",
        "75",
        "--delta",
        "3",
        "--method",
        "fgkcp2",
        "--simes",
        "--curve",
        path_str(&curve),
        "-o",
        path_str(&report),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["result"]["rejected"], true);
    assert_eq!(v["config"]["combination"], "simes");
    let t = v["result"]["estimated_change"]["point"].as_u64().unwrap();
    assert!(t.abs_diff(75) <= 5, "{t}");
    let text = std::fs::read_to_string(&curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,Z_D,Z_W12,Z_W08,GKCP"));
    // n0 = 7, n1 = 143
    assert_eq!(lines.count(), 137);
}

#[test]
fn interval_test_reports_an_interval() {
    let v = ok_json(&[
        "test",
        "--gen",
        "gaussian_type1",
        "--n",
        "60",
        "--d",
        "3",
        "--interval",
        "--method",
        "fgkcp1",
    ]);
    assert!(v["result"]["statistics"]["argmax"]["interval"]["start"].is_u64());
}

#[test]
fn kernel_input_matches_observation_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    assert!(gkcp(&[
        "gen",
        "--n",
        "40",
        "--d",
        "3",
        "--seed",
        "2",
        "-o",
        path_str(&csv)
    ])
    .status
    .success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let seq = gkcp::Sequence::from_rows(&rows).unwrap();
    let g = gkcp::gaussian_gram(&seq, Some(1.7)).unwrap();
    let kernel: String = (0..40)
        .map(|i| {
            let row: Vec<String> = g.row(i).iter().map(|x| x.to_string()).collect();
            row.join(",") + "\n"
        })
        .collect();
    let gram = write(dir.path(), "k.csv", &kernel);
    let a = ok_json(&["test", "--input", path_str(&csv), "--bandwidth", "1.7"]);
    let b = ok_json(&["test", "--gram", path_str(&gram)]);
    let (za, zb) = (&a["result"]["statistics"], &b["result"]["statistics"]);
    assert_eq!(za["argmax"], zb["argmax"]);
    let close = |x: &Value, y: &Value| (x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-9;
    assert!(close(&za["max_gkcp"], &zb["max_gkcp"]));
    assert!(close(&a["result"]["p_value"], &b["result"]["p_value"]));
    assert_eq!(b["config"]["bandwidth_source"], "kernel_input");
}

#[test]
fn header_is_skipped_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    assert!(gkcp(&[
        "gen",
        "--n",
        "30",
        "--d",
        "2",
        "--header",
        "-o",
        path_str(&csv)
    ])
    .status
    .success());
    assert_eq!(
        gkcp(&["test", "--input", path_str(&csv)]).status.code(),
        Some(2)
    );
    let v = ok_json(&["test", "--input", path_str(&csv), "--skip-header"]);
    assert_eq!(v["input"]["n"], 30);
}

#[test]
fn ragged_row_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..10 {
        text += &format!("{i},1.0,2.0\n");
    }
    text += "7,8\n";
    let p = write(dir.path(), "bad.csv", &text);
    let out = gkcp(&["test", "--input", path_str(&p)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 11"), "{err}");
}

#[test]
fn non_numeric_cell_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.csv", "1,2\n3,4\n5,abc\n6,7\n8,9\n");
    let out = gkcp(&["test", "--input", path_str(&p)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("column 2"), "{err}");
}

#[test]
fn missing_input_file_exits_2() {
    assert_eq!(
        gkcp(&["test", "--input", "/nonexistent/x.csv"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_errors_exit_3() {
    let base = ["test", "--gen", "gaussian_type1", "--n", "50", "--d", "2"];
    for extra in [
        &["--n0", "30", "--n1", "10"][..],
        &["--alpha", "1.5"],
        &["--bandwidth", "-1"],
        &["--method", "nope"],
        &["--n0", "1.5"],
        &["--r", "0"],
    ] {
        let mut a = base.to_vec();
        a.extend(extra);
        assert_eq!(gkcp(&a).status.code(), Some(3), "{extra:?}");
    }
    assert_eq!(gkcp(&["test"]).status.code(), Some(3));
    assert_eq!(gkcp(&["gen", "--family", "nope"]).status.code(), Some(3));
    assert_eq!(
        gkcp(&["segment", "--gen", "gaussian_type1", "--threshold", "2"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn output_file_is_replaced_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let report = write(dir.path(), "r.json", "stale");
    let out = gkcp(&[
        "test",
        "--gen",
        "gaussian_type1",
        "--n",
        "40",
        "--d",
        "2",
        "-o",
        path_str(&report),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["command"], "test");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn null_data_rarely_rejects() {
    let mut small = 0;
    for seed in 0..20 {
        let s = seed.to_string();
        let v = ok_json(&[
            "test",
            "--gen",
            "gaussian_type1",
            "--n",
            "200",
            "--d",
            "5",
            "--method",
            "fgkcp2",
            "--seed",
            &s,
        ]);
        if v["result"]["p_value"].as_f64().unwrap() <= 0.05 {
            small += 1;
        }
    }
    assert!(small <= 4, "{small} of 20 null p-values at or below 0.05");
}

#[test]
fn gkcp_mean_change_rejects_at_a_moderate_rate() {
    let mut rejections = 0;
    for seed in 0..20 {
        let s = seed.to_string();
        let v = ok_json(&[
            "test",
            "--gen",
            "gaussian_type1",
            "--d",
            "100",
            "--delta",
            "1.2",
            "--tau",
            "100",
            "--method",
            "gkcp",
            "--n-perm",
            "200",
            "--seed",
            &s,
        ]);
        assert_eq!(v["result"]["permutation"]["n_perm"], 200);
        if v["result"]["rejected"] == true {
            rejections += 1;
        }
    }
    // about 0.7 expected
    assert!((7..=20).contains(&rejections), "{rejections}");
}

#[test]
fn segmentation_finds_two_changes() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    let mut state: u64 = 99;
    for i in 0..240 {
        let level = (i / 80) as f64 * 2.0;
        let row: Vec<String> = (0..4)
            .map(|_| {
                // xorshift noise, uniform on (-1, 1)
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let u = (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
                (level + u).to_string()
            })
            .collect();
        text += &(row.join(",") + "\n");
    }
    let p = write(dir.path(), "three.csv", &text);
    let v = ok_json(&["segment", "--input", path_str(&p), "--seed", "3"]);
    assert_eq!(v["command"], "segment");
    let cps: Vec<u64> = v["result"]["change_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    assert_eq!(cps.len(), 2, "{cps:?}");
    assert!(
        cps[0].abs_diff(80) <= 3 && cps[1].abs_diff(160) <= 3,
        "{cps:?}"
    );
    assert_eq!(v["config"]["segmentation"]["threshold"], 0.001);
    assert_eq!(
        gkcp(&["segment", "--gram", path_str(&p)]).status.code(),
        Some(3)
    );
}

#[test]
fn bench_studies_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (rec, sum) = (dir.path().join("rec.jsonl"), dir.path().join("sum.csv"));
    let v = ok_json(&[
        "bench",
        "size",
        "--n",
        "60",
        "--d",
        "4",
        "--replicates",
        "6",
        "--n-perm",
        "50",
        "--tests",
        "fgkcp1,gkcp",
        "--records",
        path_str(&rec),
        "--summary",
        path_str(&sum),
    ]);
    assert_eq!(v["command"], "bench size");
    assert_eq!(v["result"]["results"].as_array().unwrap().len(), 2);
    assert_eq!(std::fs::read_to_string(&rec).unwrap().lines().count(), 6);
    assert!(std::fs::read_to_string(&sum).unwrap().starts_with("test,"));

    let v = ok_json(&[
        "bench",
        "power",
        "--n",
        "60",
        "--d",
        "4",
        "--delta",
        "3",
        "--replicates",
        "4",
        "--tests",
        "fgkcp2",
    ]);
    assert_eq!(v["result"]["spec"]["tau"], 30);
    assert_eq!(v["result"]["results"][0]["rejections"], 4);

    let cv = dir.path().join("cv.csv");
    let v = ok_json(&[
        "bench",
        "critical-value",
        "--n",
        "80",
        "--d",
        "5",
        "--n0",
        "10",
        "--n-perm",
        "100",
        "--stats",
        "zd,zw1.2",
        "--csv",
        path_str(&cv),
    ]);
    assert_eq!(v["result"].as_array().unwrap().len(), 2);
    assert_eq!(std::fs::read_to_string(&cv).unwrap().lines().count(), 3);

    let v = ok_json(&[
        "bench", "runtime", "--n", "40,80", "--d", "3", "--runs", "1", "--tests", "fgkcp2",
    ]);
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 2);
    assert!(v["result"]["scaling"][0]["exponent"].is_f64());
}
