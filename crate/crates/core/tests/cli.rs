use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gsscm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsscm")).args(args).output().expect("spawn")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sscm_of_the_cross_around_origin() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cross.csv");
    fs::write(&input, "x,y\n1,0\n-1,0\n0,1\n0,-1\n").unwrap();
    let out = gsscm(&["estimate", "--method", "sscm", "--location", "fixed=0,0", "--input", path(&input)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0.5,0\n0,0.5\n");
}

#[test]
fn estimate_json_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    let rows: Vec<String> = (0..40).map(|i| format!("{},{},{}", (i as f64 * 0.37).sin() * 3.0, (i as f64 * 1.3).cos(), i % 7)).collect();
    fs::write(&input, rows.join("\n")).unwrap();
    let out = gsscm(&["estimate", "--method", "lr", "--location", "lts", "--k", "5", "--input", path(&input), "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["method"], "lr");
    assert_eq!(doc["eigenvalues"].as_array().unwrap().len(), 3);

    let target = dir.path().join("s.csv");
    let out = gsscm(&["estimate", "--input", path(&input), "--output", path(&target), "--normalize", "on"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let m = gsscm::io::read_csv_path(&target).unwrap().data;
    assert_eq!(m.shape(), (3, 3));
    assert_eq!(m, m.transpose());
}

#[test]
fn too_few_rows_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tiny.csv");
    fs::write(&input, "1,2,3\n4,5,7\n").unwrap();
    let out = gsscm(&["estimate", "--method", "ball", "--input", path(&input)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[sample-too-small]:"), "{}", stderr(&out));
}

#[test]
fn malformed_cell_names_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "a,b\n1,2\n3,oops\n").unwrap();
    let out = gsscm(&["estimate", "--input", path(&input)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.starts_with("error[parse]:") && msg.contains("row 3") && msg.contains("column 2"), "{msg}");
}

#[test]
fn usage_errors() {
    for args in [
        vec!["estimate"],
        vec!["estimate", "--input", "x.csv", "--unknown"],
        vec!["estimate", "--input", "x.csv", "--method", "median"],
        vec!["estimate", "--input", "x.csv", "--normalize", "maybe"],
        vec!["frobnicate"],
        vec!["influence", "--method", "lr", "--steps", "1"],
    ] {
        let out = gsscm(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr(&out).starts_with("error["), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(gsscm(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_from_config_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(&cfg, "n = 30\np = 3\nsettings = [\"linear\"]\neps = [0.0, 0.2]\ngammas = [8]\nreplications = 5\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (target, threads) in [(&a, "1"), (&b, "4")] {
        let out = gsscm(&["--threads", threads, "simulate", "--config", path(&cfg), "--seed", "42", "--output", path(target)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "method,setting,eps,gamma,mean_kldiv,mean_kldivshape,n_fail,replications,seed");
    assert_eq!(lines.count(), 2 * 6);

    fs::write(&cfg, "replications = 0\n").unwrap();
    assert_eq!(gsscm(&["simulate", "--config", path(&cfg)]).status.code(), Some(2));
}

#[test]
fn pca_writes_three_tables() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    let rows: Vec<String> = (0..60)
        .map(|i| {
            let t = i as f64;
            format!("{},{},{},{}", (t * 0.7).sin() * 5.0, (t * 0.3).cos() * 3.0, (t * 1.1).sin(), (t * 2.3).cos() * 0.2)
        })
        .collect();
    fs::write(&input, rows.join("\n")).unwrap();
    let out_dir = dir.path().join("pca");
    let out = gsscm(&["pca", "--method", "winsor", "--components", "2", "--input", path(&input), "--output", path(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let scores = gsscm::io::read_csv_path(&out_dir.join("scores.csv")).unwrap();
    assert_eq!(scores.data.shape(), (60, 2));
    assert_eq!(scores.header.unwrap(), vec!["pc1", "pc2"]);
    let map = fs::read_to_string(out_dir.join("outlier_map.csv")).unwrap();
    assert!(map.starts_with("index,sd,od,sd_cutoff,od_cutoff,flag\n"));
    assert_eq!(map.lines().count(), 61);
}

#[test]
fn influence_breakdown_and_coga_commands() {
    let out = gsscm(&["influence", "--method", "sscm", "--direction", "axis", "--z-min", "1", "--z-max", "3", "--steps", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "z,method,s11,s12,s22,normalized");
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[1], f[3], f[4]), ("sscm", "0.0", "-1.0"), "{line}");
    }

    let out = gsscm(&["breakdown", "--n", "40", "--p", "3", "--m", "10", "--method", "shell"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,p,m,magnitude,method,placement,seed,lambda_max,lambda_min,trace,location_shift\n40,3,10,"));

    let out = gsscm(&["coga-check", "--dims", "2,3", "--settings", "linear", "--samples", "2000"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 2 * 3);
}
