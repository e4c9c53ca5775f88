use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trajeval_cli::manifest::RunManifest;
use trajeval_core::mobility::write_csv;
use trajeval_testkit::fixtures::{
    default_city, mia_fixture, tul_fixture, write_city_fixture, CityFiles,
};

fn trajeval(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajeval"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn trajeval")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn city(dir: &Path) -> CityFiles {
    write_city_fixture(dir, &default_city())
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn evaluate(out: &Path, f: &CityFiles, preset: &str) -> Output {
    trajeval(
        out,
        &[
            "evaluate",
            "--dataset",
            s(&f.dataset),
            "--syn",
            s(&f.dataset),
            "--preset",
            preset,
            "--layers",
            s(&f.layers),
        ],
    )
}

#[test]
fn evaluate_identity_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let f = city(dir.path());
    for preset in ["use-case-a", "use-case-b"] {
        // the command line is part of the manifest, so rerun into the same directory
        let out = dir.path().join(preset);
        let o = evaluate(&out, &f, preset);
        assert!(o.status.success(), "{preset}: {}", stderr(&o));
        let first = RunManifest::read(&out).unwrap();
        let report = std::fs::read(out.join("report.json")).unwrap();
        let o = evaluate(&out, &f, preset);
        assert!(o.status.success(), "{preset}: {}", stderr(&o));
        let second = RunManifest::read(&out).unwrap();
        assert!(first.same_run(&second), "{first:?}\n{second:?}");
        assert!(first.outputs.contains_key("report.json"));
        assert_eq!(report, std::fs::read(out.join("report.json")).unwrap());
    }
}

#[test]
fn unknown_preset_lists_the_known_ones() {
    let dir = tempfile::tempdir().unwrap();
    let f = city(dir.path());
    let o = evaluate(&dir.path().join("out"), &f, "use-case-z");
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("use-case-a") && e.contains("use-case-b"), "{e}");
}

#[test]
fn constrained_metrics_need_layers() {
    let dir = tempfile::tempdir().unwrap();
    let f = city(dir.path());
    let o = trajeval(
        &dir.path().join("out"),
        &[
            "evaluate",
            "--dataset",
            s(&f.dataset),
            "--syn",
            s(&f.dataset),
            "--preset",
            "use-case-b",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--layers"), "{}", stderr(&o));
}

#[test]
fn failed_metrics_exit_partial_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let f = city(dir.path());
    let tiny = dir.path().join("tiny.csv");
    std::fs::write(
        &tiny,
        "user_id,traj_id,timestamp,x,y,category\nu,t,1704097007,0,2998,home\n",
    )
    .unwrap();
    let args = [
        "evaluate",
        "--dataset",
        s(&f.dataset),
        "--syn",
        s(&tiny),
        "--preset",
        "use-case-a",
        "--layers",
        s(&f.layers),
    ];
    let o = trajeval(&dir.path().join("a"), &args);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(dir.path().join("a/report.json").exists());
    let mut allowed = args.to_vec();
    allowed.push("--allow-partial");
    let o = trajeval(&dir.path().join("b"), &allowed);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn missing_required_argument_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = city(dir.path());
    let o = trajeval(
        &dir.path().join("out"),
        &["grid", "sweep", "--dataset", s(&f.dataset)],
    );
    assert_eq!(o.status.code(), Some(2));
}

fn mia_files(dir: &Path) -> [PathBuf; 4] {
    let m = mia_fixture(11);
    let paths = ["train", "target", "holdout", "aux"].map(|n| dir.join(format!("mia_{n}.csv")));
    for (d, p) in [&m.d_train, &m.q_target, &m.holdout, &m.d_aux]
        .iter()
        .zip(&paths)
    {
        write_csv(d, p).unwrap();
    }
    paths
}

#[test]
fn mia_identity_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let [train, target, holdout, aux] = mia_files(dir.path());
    let out = dir.path().join("mia");
    let o = trajeval(
        &out,
        &[
            "--seed",
            "5",
            "attack",
            "mia",
            "--dataset",
            s(&train),
            "--target",
            s(&target),
            "--holdout",
            s(&holdout),
            "--aux",
            s(&aux),
            "--model",
            "identity",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("mia.json")).unwrap()).unwrap();
    let mean = v["mean"].as_f64().unwrap();
    assert!(mean >= 0.95, "{v}");
    assert!(RunManifest::read(&out).unwrap().seeds.contains(&5));

    let plot = dir.path().join("plot");
    let o = trajeval(&plot, &["plot", s(&out.join("mia_scores.csv"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(plot.join("histogram.svg")).unwrap();
    assert!(svg.contains(r#"class="tau""#));
}

#[test]
fn released_only_rejects_auxiliary_data() {
    let dir = tempfile::tempdir().unwrap();
    let [train, target, holdout, aux] = mia_files(dir.path());
    let o = trajeval(
        &dir.path().join("out"),
        &[
            "attack",
            "mia",
            "--dataset",
            s(&train),
            "--target",
            s(&target),
            "--holdout",
            s(&holdout),
            "--aux",
            s(&aux),
            "--model",
            "identity",
            "--scenario",
            "released-only",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("aux"), "{}", stderr(&o));
}

#[test]
fn tul_identity_has_no_gap() {
    let dir = tempfile::tempdir().unwrap();
    let f = tul_fixture(30, 3, 3, 300.0, 1);
    let (train, target) = (dir.path().join("train.csv"), dir.path().join("target.csv"));
    write_csv(&f.d_train, &train).unwrap();
    write_csv(&f.q_target, &target).unwrap();
    let out = dir.path().join("tul");
    let o = trajeval(
        &out,
        &[
            "attack",
            "tul",
            "--dataset",
            s(&train),
            "--target",
            s(&target),
            "--model",
            "identity",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("tul.json")).unwrap()).unwrap();
    for p in ["legacy", "fixed"] {
        assert!(v[p]["gap_pp"].as_f64().unwrap().abs() <= 1.0, "{v}");
    }
}

#[test]
fn malformed_score_row_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("scores.csv");
    std::fs::write(&bad, "seed,set,score\n0,member,0.1\n0,member,oops\n").unwrap();
    let o = trajeval(&dir.path().join("out"), &["plot", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn profile_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let f = city(dir.path());
    let out = dir.path().join("out");
    let o = trajeval(
        &out,
        &["profile", "--dataset", s(&f.dataset), "--format", "csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("profile.csv").exists());
}
