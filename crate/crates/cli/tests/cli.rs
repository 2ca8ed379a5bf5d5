use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tdi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdi")).args(args).output().unwrap()
}

/// Writes `files` into a fresh directory and returns it with the config path.
fn workspace(config: &str, files: &[(&str, &str)]) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in files {
        fs::write(dir.path().join(name), body).unwrap();
    }
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, config).unwrap();
    (dir, cfg)
}

fn run_cmd(cmd: &str, cfg: &Path, out: &Path) -> Output {
    let out = tdi(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

const ONE_HOLE: &str = "patient_id,time,variable,value\n\
p1,0,a,1\np1,0,b,10\n\
p1,1,a,2\n\
p1,2,a,3\np1,2,b,30\n\
p2,0,a,4\np2,0,b,40\n";

const MEAN_CONFIG: &str = "seed = 1\n[input]\nlong_csv = \"data.csv\"\n[[imputers]]\nkind = \"mean\"\n";

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn mean_impute_changes_only_the_missing_cell() {
    let (dir, cfg) = workspace(MEAN_CONFIG, &[("data.csv", ONE_HOLE)]);
    let out = dir.path().join("out");
    run_cmd("impute", &cfg, &out);

    let input = read_rows(&dir.path().join("data.csv"));
    let imputed = read_rows(&out.join("imputed.csv"));
    assert_eq!(imputed.len(), input.len() + 1);
    let new: Vec<_> = imputed.iter().filter(|r| !input.contains(r)).collect();
    assert_eq!(new.len(), 1);
    assert_eq!(&new[0][..3], ["p1", "1", "b"]);
    assert!((new[0][3].parse::<f64>().unwrap() - 80.0 / 3.0).abs() < 1e-12);
    assert_eq!(fs::read_to_string(dir.path().join("data.csv")).unwrap(), ONE_HOLE);

    let provenance = read_rows(&out.join("provenance.csv"));
    let estimated: Vec<_> = provenance.iter().filter(|r| r[3] != "observed").collect();
    assert_eq!(estimated.len(), 1);
    assert_eq!(&estimated[0][..3], ["p1", "1", "b"]);
}

fn synthetic_config(extra: &str) -> String {
    format!(
        "seed = 5\n[synthetic]\nn_patients = 12\nn_timepoints = 10\nn_variables = 3\n\
         temporal_corr = 0.8\ncross_corr = 0.4\nmissing_profile = [0.4]\n{extra}"
    )
}

#[test]
fn multiple_imputation_writes_one_file_per_seed() {
    let (dir, cfg) = workspace(&synthetic_config("[impute]\nm = 3\n[tdi]\nseed = 40\n"), &[]);
    let out = dir.path().join("out");
    run_cmd("impute", &cfg, &out);
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "imputed_seed40.csv",
            "imputed_seed41.csv",
            "imputed_seed42.csv",
            "provenance.csv",
            "variance_summary.csv"
        ]
    );
    let summary = read_rows(&out.join("variance_summary.csv"));
    assert!(summary.iter().any(|r| r[4].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn reruns_are_byte_identical() {
    let config = synthetic_config(
        "[[imputers]]\nkind = \"mean\"\n[[imputers]]\nkind = \"tdi\"\n[masking]\np = 0.2\n",
    );
    let (dir, cfg) = workspace(&config, &[]);
    for cmd in ["impute", "mask-eval", "ffill-eval", "stats", "synth"] {
        let (a, b) = (dir.path().join(format!("{cmd}-a")), dir.path().join(format!("{cmd}-b")));
        run_cmd(cmd, &cfg, &a);
        run_cmd(cmd, &cfg, &b);
        let mut files: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(!files.is_empty());
        for f in files {
            assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{cmd}: {f:?}");
        }
    }
}

#[test]
fn seed_flag_changes_the_masking() {
    let (dir, cfg) = workspace(&synthetic_config("[[imputers]]\nkind = \"mean\"\n"), &[]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_cmd("mask-eval", &cfg, &a);
    let out = tdi(&["mask-eval", "--config", cfg.to_str().unwrap(), "--seed", "6", "--out", b.to_str().unwrap()]);
    assert!(out.status.success());
    assert_ne!(fs::read(a.join("mask_eval.json")).unwrap(), fs::read(b.join("mask_eval.json")).unwrap());
}

#[test]
fn mask_eval_reports_one_block_per_method() {
    let config = synthetic_config(
        "[[imputers]]\nkind = \"mean\"\n[[imputers]]\nkind = \"median\"\n[[imputers]]\nkind = \"tdi\"\n[masking]\np = 0.1\n",
    );
    let (dir, cfg) = workspace(&config, &[]);
    let out = dir.path().join("out");
    run_cmd("mask-eval", &cfg, &out);
    let rows = read_rows(&out.join("mask_eval.csv"));
    let mut methods: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    methods.dedup();
    assert_eq!(methods, ["mean", "median", "tdi"]);
    for m in methods {
        let block: Vec<_> = rows.iter().filter(|r| r[0] == m).collect();
        let (overall, vars): (Vec<&Vec<String>>, Vec<_>) = block.into_iter().partition(|r| r[1] == "__overall__");
        assert_eq!(overall.len(), 1);
        for col in 2..5 {
            let mean = vars.iter().map(|r| r[col].parse::<f64>().unwrap()).sum::<f64>() / vars.len() as f64;
            let got: f64 = overall[0][col].parse().unwrap();
            assert!((got - mean).abs() <= 1e-12 * mean.abs().max(1.0), "{m} column {col}");
        }
    }
}

#[test]
fn stats_missing_rates() {
    let mut data = String::from("patient_id,time,variable,value\n");
    for t in 0..10 {
        data += &format!("p1,{t},full,{t}\n");
        if t % 5 == 0 {
            data += &format!("p1,{t},sparse,{}\n", t * 2);
        }
    }
    let (dir, cfg) = workspace("[input]\nlong_csv = \"data.csv\"\n", &[("data.csv", &data)]);
    let out = dir.path().join("out");
    run_cmd("stats", &cfg, &out);
    let rows = read_rows(&out.join("stats.csv"));
    let rate = |name: &str| rows.iter().find(|r| r[0] == name).unwrap()[4].parse::<f64>().unwrap();
    assert_eq!(rate("full"), 0.0);
    assert!((rate("sparse") - 0.8).abs() < 1e-12);
    let sparse = rows.iter().find(|r| r[0] == "sparse").unwrap();
    assert_eq!(sparse[1], "2");
    assert!((sparse[5].parse::<f64>().unwrap() - 0.2).abs() < 1e-12);
    assert_eq!(sparse[6].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn missing_input_fails_without_output() {
    let (dir, cfg) = workspace(MEAN_CONFIG, &[]);
    let out_dir = dir.path().join("out");
    let out = tdi(&["mask-eval", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data.csv"));
    assert!(!out_dir.exists());
}

#[test]
fn exit_codes_follow_error_class() {
    let (dir, cfg) = workspace("seed = 1\nbogus = 2\n", &[]);
    let out = tdi(&["stats", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let bad = "patient_id,time,variable\np1,0,a\n";
    let (dir, cfg) = workspace(MEAN_CONFIG, &[("data.csv", bad)]);
    let out = tdi(&["impute", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("o").exists());

    let out = tdi(&["impute", "--config", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
