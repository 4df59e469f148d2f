//! The `noisy-ica` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisy-ica"))
        .args(args)
        .current_dir(dir)
        .env_remove("NOISY_ICA_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = bin(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_demix_score_meta_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("model.toml"),
        "k = 3\nrho = 0.1\nseed = 4\nsources = [{ kind = \"uniform\" }, { kind = \"uniform\" }, { kind = \"laplace\", scale = 1.0 }]\n",
    )
    .unwrap();
    ok(
        &[
            "gen",
            "--config",
            "model.toml",
            "-n",
            "20000",
            "--seed",
            "1",
            "--out",
            "x.csv",
            "--mixing-out",
            "b.csv",
        ],
        d,
    );

    ok(
        &[
            "demix",
            "--data",
            "x.csv",
            "--contrast",
            "cgf",
            "--out",
            "demix.json",
            "--demixer-out",
            "w.csv",
        ],
        d,
    );
    let demix: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("demix.json")).unwrap()).unwrap();
    assert!(demix.get("b_hat").is_some());

    let score: serde_json::Value = serde_json::from_str(&ok(
        &[
            "score",
            "--data",
            "x.csv",
            "--demixer",
            "w.csv",
            "--probes",
            "20",
        ],
        d,
    ))
    .unwrap();
    assert!(score["mean"].as_f64().unwrap().is_finite());
    assert_eq!(score["num_probes"], 20);

    let meta = ok(
        &[
            "meta",
            "--data",
            "x.csv",
            "--candidates",
            "chf",
            "--candidate-file",
            "mine=w.csv",
            "--truth",
            "b.csv",
            "--probes",
            "20",
        ],
        d,
    );
    let meta: serde_json::Value = serde_json::from_str(&meta).unwrap();
    let names: Vec<&str> = meta["per_candidate"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["chf", "mine"]);
    assert!(meta["per_candidate"][1]["amari"].as_f64().unwrap() < 0.2);
}

#[test]
fn experiment_output_goes_to_file_and_respects_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("interp.toml"),
        "experiment = \"interpolation_score\"\nruns = 1\nn = 1000\nprobes = 5\nepsilons = [0.8, 1.0]\nseed = 1\n",
    )
    .unwrap();
    ok(&["interp", "--config", "interp.toml", "--out", "a.csv"], d);
    let a = std::fs::read_to_string(d.join("a.csv")).unwrap();
    assert!(a.starts_with(
        "# noisy-ica-kit v0.1.0 interpolation_score\nepsilon,amari,score_mean,score_std\n"
    ));
    assert_eq!(a.lines().count(), 4);

    let same = ok(&["interp", "--config", "interp.toml", "--seed", "1"], d);
    assert_eq!(same, a);
    let other = ok(&["interp", "--config", "interp.toml", "--seed", "2"], d);
    assert_ne!(other, a);
    let env = Command::new(env!("CARGO_BIN_EXE_noisy-ica"))
        .args(["interp", "--config", "interp.toml"])
        .current_dir(d)
        .env("NOISY_ICA_SEED", "2")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), other);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("bad.toml"),
        "experiment = \"table_kurtosis\"\ncandidates = [\"nope\"]\n",
    )
    .unwrap();
    let out = bin(&["table", "--config", "bad.toml"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    std::fs::write(
        d.join("typo.toml"),
        "experiment = \"landscape\"\nresolutoin = 9\n",
    )
    .unwrap();
    assert!(!bin(&["landscape", "--config", "typo.toml"], d)
        .status
        .success());

    // a landscape config handed to the sweep subcommand
    std::fs::write(d.join("land.toml"), "experiment = \"landscape\"\n").unwrap();
    assert!(!bin(&["sweep", "--config", "land.toml"], d).status.success());

    assert!(!bin(&["meta", "--data", "missing.csv"], d).status.success());
    assert!(!bin(
        &["meta", "--data", "x.csv", "--candidate-file", "noequals"],
        d
    )
    .status
    .success());
}
