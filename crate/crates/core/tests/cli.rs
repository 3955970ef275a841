use std::path::Path;
use std::process::{Command, Output};

fn rollpass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollpass"))
        .args(args)
        .env_remove("ROLLPASS_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    let o = rollpass(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for cmd in [
        "gen-rolls",
        "gen-dataset",
        "split",
        "augment",
        "estimate",
        "evaluate",
        "plan",
    ] {
        assert!(stdout(&o).contains(cmd), "help lists {cmd}");
    }
    assert_eq!(rollpass(&["--version"]).status.code(), Some(0));
    assert_eq!(rollpass(&["plan", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(rollpass(&[]).status.code(), Some(1));
    assert_eq!(rollpass(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        rollpass(&["gen-dataset", "--count", "x", "--out", "d"]).status.code(),
        Some(1)
    );
    assert_eq!(
        rollpass(&["gen-dataset", "--count", "1", "--alpha", "1.5", "--out", "d"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        rollpass(&["evaluate", "--estimator", "magic", "--dataset", "d", "--report", "r"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let o = rollpass(&["split", "--dataset", path(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn dataset_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    let o = rollpass(&["gen-dataset", "--count", "6", "--seed", "3", "--out", path(&ds)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = std::fs::read_dir(ds.join("samples")).unwrap().count();
    assert_eq!(dirs, 12);

    let o = rollpass(&[
        "split",
        "--dataset",
        path(&ds),
        "--train",
        "0.5",
        "--val",
        "0",
        "--eval",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("train 6 / val 0 / eval 6"), "{}", stdout(&o));

    let report = tmp.path().join("r.csv");
    let hist = tmp.path().join("h.csv");
    let o = rollpass(&[
        "evaluate",
        "--estimator",
        "flow",
        "--dataset",
        path(&ds),
        "--split",
        "all",
        "--closure",
        "full",
        "--report",
        path(&report),
        "--histogram",
        path(&hist),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("on 6 samples, mean jaccard 1.000000, 0 failures"),
        "{}",
        stdout(&o)
    );
    assert_eq!(std::fs::read_to_string(&report).unwrap().lines().count(), 7);
    assert!(std::fs::read_to_string(&hist).unwrap().ends_with("0.95,6\n"));

    let o = rollpass(&["augment", "--dataset", path(&ds), "--split", "train", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("train now holds 42 samples"), "{}", stdout(&o));
    // Splitting again would mix augmented variants into other splits.
    let o = rollpass(&["split", "--dataset", path(&ds)]);
    assert_eq!(o.status.code(), Some(2));

    let sample = ds.join("samples").join("s000000a");
    let out = tmp.path().join("est.pbm");
    let o = rollpass(&[
        "estimate",
        "--estimator",
        "flow",
        "--sample",
        path(&sample),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("jaccard 1.000000 vs outlet.pbm"), "{}", stdout(&o));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(sample.join("outlet.pbm")).unwrap()
    );
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, jobs) in [(&a, "1"), (&b, "2")] {
        let o = rollpass(&[
            "--jobs",
            jobs,
            "gen-rolls",
            "--count",
            "3",
            "--seed",
            "9",
            "--out",
            path(dir),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(a.join("rolls.json")).unwrap(),
        std::fs::read(b.join("rolls.json")).unwrap()
    );

    let ds = tmp.path().join("ds");
    assert_eq!(
        rollpass(&["gen-dataset", "--count", "2", "--seed", "4", "--out", path(&ds)])
            .status
            .code(),
        Some(0)
    );
    let sample = ds.join("samples").join("s000001a");
    let (inlet, target) = (sample.join("inlet.pbm"), sample.join("outlet.pbm"));
    let plans: Vec<Vec<u8>> = ["p1.json", "p2.json"]
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let o = rollpass(&[
                "plan",
                "--inlet",
                path(&inlet),
                "--target",
                path(&target),
                "--estimator",
                "flow",
                "-n",
                "2",
                "-d",
                "2",
                "--seed",
                "5",
                "--out",
                path(&out),
            ]);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(plans[0], plans[1]);
    let plan: serde_json::Value = serde_json::from_slice(&plans[0]).unwrap();
    assert_eq!(plan["seed"], 5);
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &Path, env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rollpass"));
        cmd.env_remove("ROLLPASS_SEED")
            .args(["gen-rolls", "--count", "1", "--out", path(dir)]);
        if let Some(s) = env {
            cmd.env("ROLLPASS_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("rolls.json")).unwrap()).unwrap();
        v["seed"].as_u64().unwrap()
    };
    assert_eq!(run(&tmp.path().join("a"), None, None), 0);
    assert_eq!(run(&tmp.path().join("b"), Some("17"), None), 17);
    assert_eq!(run(&tmp.path().join("c"), Some("17"), Some("3")), 3);
}
