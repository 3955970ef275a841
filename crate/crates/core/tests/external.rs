use std::path::Path;
use std::time::Duration;

use rollpass::estimators::{Baseline1, Estimator, EstimatorError, EstimatorInput, External};
use rollpass::raster::{rasterize_scenario, RasterConfig};
use rollpass::rollgen::{scenario_at, GenConfig};

fn input() -> EstimatorInput {
    let sc = scenario_at(12, 0, &GenConfig::default()).unwrap();
    EstimatorInput::try_from(rasterize_scenario(&sc, 1.0, RasterConfig::default()).unwrap()).unwrap()
}

fn script(dir: &Path, name: &str, body: &str) -> External {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    External::new(&format!("sh {}", path.display()))
}

#[test]
fn identity_script_returns_the_inlet() {
    let tmp = tempfile::tempdir().unwrap();
    let ext = script(tmp.path(), "copy.sh", r#"cp "$1/inlet.pbm" "$1/outlet.pbm""#);
    let inp = input();
    assert_eq!(ext.estimate(&inp).unwrap(), inp.inlet);
}

#[test]
fn script_sees_the_protocol_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ext = script(
        tmp.path(),
        "b1.sh",
        // Fails unless the version file and all three inputs are present.
        r#"grep -q '^rollpass-ext/1$' "$1/PROTOCOL" && test -s "$1/over.pbm" && test -s "$1/under.pbm" && cp "$1/inlet.pbm" "$1/outlet.pbm""#,
    );
    ext.estimate(&input()).unwrap();
}

#[test]
fn nonzero_exit_keeps_the_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let ext = script(tmp.path(), "fail.sh", "echo broken >&2; exit 3");
    match ext.estimate(&input()) {
        Err(EstimatorError::ExternalFailure { code, dir, .. }) => {
            assert_eq!(code, Some(3));
            assert!(dir.join("inlet.pbm").is_file());
            assert!(std::fs::read_to_string(dir.join("stderr.log"))
                .unwrap()
                .contains("broken"));
            std::fs::remove_dir_all(dir).unwrap();
        }
        other => panic!("expected an external failure, got {other:?}"),
    }
}

#[test]
fn missing_or_malformed_outlet_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, body) in [("none.sh", "true"), ("junk.sh", r#"echo junk > "$1/outlet.pbm""#)] {
        let ext = script(tmp.path(), name, body);
        match ext.estimate(&input()) {
            Err(EstimatorError::ExternalFailure { dir, .. }) => std::fs::remove_dir_all(dir).unwrap(),
            other => panic!("{name}: expected an external failure, got {other:?}"),
        }
    }
}

#[test]
fn slow_command_times_out() {
    let tmp = tempfile::tempdir().unwrap();
    let ext = script(tmp.path(), "slow.sh", "sleep 5").with_timeout(Duration::from_millis(200));
    let start = std::time::Instant::now();
    match ext.estimate(&input()) {
        Err(EstimatorError::Timeout { dir, .. }) => std::fs::remove_dir_all(dir).unwrap(),
        other => panic!("expected a timeout, got {other:?}"),
    }
    assert!(start.elapsed() < Duration::from_secs(4));
}

#[test]
fn external_baseline_matches_in_process() {
    let tmp = tempfile::tempdir().unwrap();
    // An outlet written by the script must be accepted bit for bit: here the
    // script hands back a precomputed baseline result.
    let inp = input();
    let expected = Baseline1.estimate(&inp).unwrap();
    let pre = tmp.path().join("pre.pbm");
    rollpass::raster::write_pbm_file(&expected, &pre).unwrap();
    let ext = script(
        tmp.path(),
        "pre.sh",
        &format!(r#"cp "{}" "$1/outlet.pbm""#, pre.display()),
    );
    assert_eq!(ext.estimate(&inp).unwrap(), expected);
}
