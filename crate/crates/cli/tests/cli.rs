use std::process::{Command, Output};

fn hyplyap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyplyap")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = hyplyap(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn hodge_json() {
    let text = stdout(&["hodge", "--alpha", "0,1/10,1/4", "--beta", "2/5,3/5,4/5"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["h"], serde_json::json!([1, 1, 1]));
    assert_eq!(v["f_alpha"], serde_json::json!([1, 2, 3]));
    assert_eq!(v["f_beta"], serde_json::json!([2, 1, 0]));
    assert_eq!(v["signature"], serde_json::json!([1, 2]));
    let sum: f64 = v["deg_par"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!(sum.abs() < 1e-12);
}

#[test]
fn cy_mu_json() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["cy-mu", "--c", "46", "--d", "1"])).unwrap();
    assert!((v["mu1"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-9);
    assert!((v["mu2"].as_f64().unwrap() - 5.0 / 12.0).abs() < 1e-9);
}

#[test]
fn lyap_json_has_documented_fields() {
    let text = stdout(&["--digits", "20000", "--seed", "5", "lyap", "--alpha", "0.1,0.2", "--beta", "0,0.55"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["exponents", "stderr", "sum_positive", "time", "digits"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["digits"], serde_json::json!(20000));
    assert_eq!(text, stdout(&["--digits", "20000", "--seed", "5", "lyap", "--alpha", "0.1,0.2", "--beta", "0,0.55"]));
}

#[test]
fn n2_csv_to_file_via_config() {
    let dir = std::env::temp_dir().join(format!("hyplyap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let conf = dir.join("run.conf");
    let out = dir.join("n2.csv");
    std::fs::write(&conf, format!("digits = 20000\nwindows = 4\nout = {}\n", out.display())).unwrap();
    stdout(&["--config", conf.to_str().unwrap(), "n2", "--r", "0.1", "--x", "0.35:0.65:3"]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("experiment,point,r,x,zone,lambda_1"));
    assert!(lines[1..].iter().all(|l| l.starts_with("n2,") && l.ends_with(",20000,1")));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn debug_dumps() {
    let digits = stdout(&["--seed", "4", "digits", "--count", "40"]);
    assert_eq!(digits.lines().next(), Some("index,digit,letter,roofTime,refreshed"));
    assert_eq!(digits.lines().count(), 41);
    let winding = stdout(&["--seed", "4", "winding", "--count", "40"]);
    assert_eq!(winding.lines().next(), Some("runIndex,letter,runLength,cusp,turns"));
    // run lengths are the digits
    for (d, w) in digits.lines().skip(1).zip(winding.lines().skip(1)) {
        assert_eq!(d.split(',').nth(1), w.split(',').nth(2));
    }
}

#[test]
fn walls_and_bad_input_fail_cleanly() {
    let out = hyplyap(&["--digits", "1000", "n2", "--r", "0.1", "--x", "0.2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("chamber wall"));
    let out = hyplyap(&["hodge", "--alpha", "0.1,x", "--beta", "0,0.5"]);
    assert!(!out.status.success());
    let out = hyplyap(&["--workers", "0", "cy-table"]);
    assert!(!out.status.success());
}
