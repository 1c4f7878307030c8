use std::io::Write;
use std::process::{Command, Output};

fn quiltfloer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quiltfloer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scenario_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".qfs").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn torus_scenario_has_one_generator() {
    let o = quiltfloer(&["run", "torus-basic"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("1 generators"));
    assert!(out.contains("HF rank = 1"));
}

#[test]
fn bundled_example_ends_with_twisted_rank() {
    let o = quiltfloer(&["run", "section5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("HF^b rank = 2\n"));
}

#[test]
fn undefined_curve_is_a_parse_failure() {
    let f = scenario_file(
        "quiltfloer-scenario v1\nsurface T torus 1 1\ntasks\n  complex CF = A B\nend\n",
    );
    let o = quiltfloer(&["run", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("line 4: undefined curve `A`"));
}

#[test]
fn failed_expectation_exits_with_one() {
    let f = scenario_file(
        "quiltfloer-scenario v1\nsurface T torus 1 1\ncurve A on T\n  path 0 0,1/3 1,1/3\nend\n\
         curve B on T\n  path 0 1/3,0 1/3,1\nend\ntasks\n  complex CF = A B\n  expect rank CF = 2\nend\n",
    );
    let o = quiltfloer(&["run", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL: rank 1, expected 2"));
}

#[test]
fn check_reports_ok() {
    let o = quiltfloer(&["check", "section5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.ends_with("OK\n"));
    assert!(out.contains("composable"));
}

#[test]
fn out_and_svg_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.txt");
    let pics = dir.path().join("svg");
    let o = quiltfloer(&[
        "run",
        "torus-basic",
        "--out",
        report.to_str().unwrap(),
        "--svg",
        pics.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&report)
        .unwrap()
        .contains("HF rank = 1"));
    assert!(std::fs::read_to_string(pics.join("CF.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn reports_do_not_depend_on_evaluation_order() {
    let a = quiltfloer(&["run", "section5"]);
    let b = quiltfloer(&["run", "section5", "--sequential"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_twist_reading_is_rejected() {
    let o = quiltfloer(&["run", "torus-basic", "--twist-reading", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
}
