use std::fs;
use std::process::{Command, Output};

fn genoweave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genoweave"))
        .args(args)
        .env("GENOWEAVE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn construct_then_simulate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let eq = dir.path().join("eq.csv");
    let out = genoweave(&[
        "construct",
        "--n",
        "64",
        "--delta",
        "1%",
        "--samples",
        "200",
        "--seed",
        "7",
        "--out",
        eq.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&eq).unwrap();
    assert!(text.starts_with("# seed=7 n=64 delta=0.01 "));
    assert_eq!(text.lines().nth(1), Some("index,equivocation"));

    let out = genoweave(&[
        "simulate",
        "--n",
        "64",
        "--delta",
        "0.01",
        "--errors",
        "deletion",
        "--pools",
        "20",
        "--seed",
        "7",
        "--code",
        eq.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# seed=7"));
    assert_eq!(lines[1], "n,delta,error_kind,pools,failures,code_rate,seed");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("64,0.01,deletion,20,"));
}

#[test]
fn outputs_are_byte_identical() {
    for args in [
        &[
            "simulate",
            "--n",
            "32",
            "--delta",
            "2%,0.1",
            "--errors",
            "insertion",
            "--pools",
            "10",
            "--samples",
            "100",
        ][..],
        &[
            "figures",
            "--which",
            "all2",
            "--ns",
            "16,64",
            "--points",
            "4",
            "--samples",
            "50",
        ][..],
        &[
            "construct",
            "--n",
            "32",
            "--delta",
            "0.05",
            "--samples",
            "100",
            "--seed",
            "3",
        ][..],
    ] {
        let a = genoweave(args);
        let b = genoweave(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "args {args:?}");
    }
}

#[test]
fn worker_cap_does_not_change_results() {
    let args = [
        "simulate",
        "--n",
        "32",
        "--delta",
        "5%",
        "--pools",
        "12",
        "--samples",
        "100",
    ];
    let one = Command::new(env!("CARGO_BIN_EXE_genoweave"))
        .args(args)
        .env("GENOWEAVE_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_genoweave"))
        .args(args)
        .env("GENOWEAVE_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        genoweave(&["simulate", "--n", "48", "--delta", "0.01"]).status.code(),
        Some(2)
    );
    assert_eq!(genoweave(&["rates", "--q", "5"]).status.code(), Some(2));
    assert_eq!(
        genoweave(&["construct", "--n", "64", "--delta", "150%"]).status.code(),
        Some(2)
    );
    assert_eq!(
        genoweave(&[
            "simulate",
            "--n",
            "64",
            "--delta",
            "0.01",
            "--code",
            "/nonexistent/eq.csv"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(genoweave(&[]).status.code(), Some(2));
}

#[test]
fn figure_series_match_captions() {
    let series = |which: &str, extra: &[&str]| -> Vec<String> {
        let mut args = vec![
            "figures",
            "--which",
            which,
            "--points",
            "3",
            "--samples",
            "20",
            "--ns",
            "16,64",
        ];
        args.extend_from_slice(extra);
        let text = stdout(&genoweave(&args));
        let mut names: Vec<String> = text
            .lines()
            .skip(2)
            .map(|l| l.split(',').next().unwrap().to_string())
            .collect();
        names.dedup();
        names
    };
    assert_eq!(
        series("scalar", &[]),
        ["lower_bound", "implicit", "binary_explicit", "quaternary_explicit"]
    );
    assert_eq!(
        series("concat2", &["--d-max", "3"]),
        ["explicit", "implicit", "putative"]
    );
    assert_eq!(
        series("concat4", &["--d-max", "3"]),
        ["explicit", "implicit", "putative"]
    );
    assert_eq!(
        series("all2", &[]),
        [
            "envelope_explicit",
            "envelope_implicit",
            "envelope_putative",
            "capacity_bsc",
            "polar_n16",
            "polar_n64"
        ]
    );
    assert_eq!(
        series("all4", &[]),
        [
            "envelope_explicit",
            "envelope_implicit",
            "envelope_putative",
            "capacity_qsc",
            "capacity_bsc",
            "polar_n16",
            "polar_n64"
        ]
    );
    assert_eq!(series("equiv", &[]), ["16", "64"]);
}

#[test]
fn percent_and_decimal_deltas_agree() {
    let a = genoweave(&["rates", "--delta-min", "0.1%", "--delta-max", "20%", "--points", "5"]);
    let b = genoweave(&["rates", "--delta-min", "0.001", "--delta-max", "0.2", "--points", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
