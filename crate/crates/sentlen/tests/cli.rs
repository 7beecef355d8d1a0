//! End-to-end runs of the `sentlen` binary.

use std::path::Path;
use std::process::{Command, Output};

fn sentlen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentlen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = sentlen(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TRUE_MODEL: &str = "\
order = 1
component.0.k = 3
component.0.alpha = 1
component.0.p[-1] = 0.5
component.0.p[0] = 0.25
component.0.p[1] = 0.25
";

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(sentlen(&["--help"]).status.code(), Some(0));
    assert_eq!(sentlen(&["--version"]).status.code(), Some(0));
    assert_eq!(sentlen(&[]).status.code(), Some(1));
    assert_eq!(sentlen(&["stats"]).status.code(), Some(1));
    assert_eq!(
        sentlen(&["fit", "x.tsv", "--model", "9.k1", "--out", "o"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        sentlen(&["compare", "x.tsv", "--fitted", "d", "--tolerance", "-1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.txt");
    let o = sentlen(&["stats", s(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("none.txt"));

    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "length\tcount\n3\t2\n4\tmany\n").unwrap();
    let o = sentlen(&["stats", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "\n\n").unwrap();
    assert_eq!(sentlen(&["stats", s(&empty)]).status.code(), Some(1));

    let bad_model = dir.path().join("bad.model");
    std::fs::write(&bad_model, TRUE_MODEL.replace("0.25\n", "0.35\n")).unwrap();
    assert_eq!(
        sentlen(&["sample", "--model", s(&bad_model), "--count", "5"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn stats_of_a_text_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    std::fs::write(&corpus, "one two three\n\nfour five\nsix\n").unwrap();
    let out = ok(&["stats", s(&corpus)]);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("size\tmean\tp999\tmax\tlow_mass\thigh_mass")
    );
    assert_eq!(lines.next(), Some("3\t2.0000\t3\t3\t1.000000\t0.000000"));
    assert!(lines.next().unwrap().contains("skipped_empty=1"));
}

#[test]
fn sample_fit_compare_mdl_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let model = d.join("truth.model");
    std::fs::write(&model, TRUE_MODEL).unwrap();

    let lengths = d.join("lengths.tsv");
    let table = ok(&[
        "sample",
        "--model",
        s(&model),
        "--count",
        "20000",
        "--seed",
        "3",
        "--ordered",
    ]);
    assert_eq!(table.lines().count(), 20001);
    std::fs::write(&lengths, &table).unwrap();
    assert_eq!(
        table,
        ok(&[
            "sample",
            "--model",
            s(&model),
            "--count",
            "20000",
            "--seed",
            "3",
            "--ordered"
        ])
    );

    let noise = ok(&["noise", s(&lengths)]);
    let delta: f64 = noise
        .lines()
        .nth(1)
        .unwrap()
        .split('\t')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(delta > 0.0 && delta < 0.05, "{noise}");

    let fitted = d.join("fitted");
    let fits = ok(&[
        "fit",
        s(&lengths),
        "--model",
        "1.k3",
        "--model",
        "2.k4",
        "--model",
        "1.k1",
        "--out",
        s(&fitted),
    ]);
    assert!(fits.starts_with("model_id\tobjective\titers\tconverged"));
    assert_eq!(fits.lines().count(), 4);
    for f in [
        "1.k3.model",
        "2.k4.model",
        "1.k1.model",
        "fits.tsv",
        "manifest.txt",
    ] {
        assert!(fitted.join(f).exists(), "{f} missing");
    }
    let manifest = std::fs::read_to_string(fitted.join("manifest.txt")).unwrap();
    assert!(manifest.contains("command = fit"));
    assert!(manifest.contains("templates = 1.k3,2.k4,1.k1"));

    let report_dir = d.join("cmp");
    let cmp = ok(&[
        "compare",
        s(&lengths),
        "--fitted",
        s(&fitted),
        "--out",
        s(&report_dir),
    ]);
    let header = cmp.lines().next().unwrap();
    assert!(header.starts_with(
        "model_id\td_prime\tgkl\ttolerable\tln_vol\tln_det_model\tln_det_aux\ttotal@1k"
    ));
    assert!(header.ends_with("total@inf"));
    assert!(cmp.contains("# winner n=inf with_tolerance=1.k3 "), "{cmp}");
    assert!(cmp.contains("# winner n=1M with_tolerance=1.k3 "), "{cmp}");
    assert_eq!(
        std::fs::read_to_string(report_dir.join("compare.tsv")).unwrap(),
        cmp
    );
    let manifest = std::fs::read_to_string(report_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("tolerance_source = measured"));

    // Same inputs, same bytes.
    assert_eq!(cmp, ok(&["compare", s(&lengths), "--fitted", s(&fitted)]));

    let strict = ok(&[
        "compare",
        s(&lengths),
        "--fitted",
        s(&fitted),
        "--tolerance",
        "0",
        "--n-grid",
        "10k,inf",
    ]);
    assert!(strict
        .lines()
        .next()
        .unwrap()
        .ends_with("total@10k\ttotal@inf"));
    assert!(strict.contains("# tolerance=0.000000e0"));

    let mdl = ok(&["mdl", s(&lengths), "--fitted", s(&fitted)]);
    assert!(mdl.starts_with("model_id\tmq\tnq\ttb\tpct_size\n"));
    assert!(mdl.contains("# winner 1.k3"), "{mdl}");
}

#[test]
fn unfittable_template_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("short.tsv");
    std::fs::write(&data, "1\t5\n2\t3\n3\t1\n").unwrap();
    let out = ok(&[
        "fit",
        s(&data),
        "--model",
        "1.k1",
        "--model",
        "1.k5",
        "--out",
        s(&dir.path().join("f")),
    ]);
    let row = out.lines().find(|l| l.starts_with("1.k5\t")).unwrap();
    assert!(row.contains("NA"), "{row}");

    let o = sentlen(&[
        "fit",
        s(&data),
        "--model",
        "1.k5",
        "--out",
        s(&dir.path().join("g")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

/// Reduced-scale replication: 20k walks of 1.k3 through the whole pipeline.
#[test]
fn validate_fast_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["validate", "--count", "20000", "--out", s(dir.path())]);
    let mut rows = out.lines();
    let header: Vec<&str> = rows.next().unwrap().split('\t').collect();
    assert_eq!(header, ["setting", "1k", "10k", "100k", "1M", "1G", "inf"]);
    let with_tol: Vec<&str> = rows.next().unwrap().split('\t').collect();
    assert_eq!(with_tol[0], "with tolerance");
    for (n, w) in header.iter().zip(&with_tol).skip(2) {
        assert_eq!(*w, "1.k3", "winner at {n}:\n{out}");
    }
    assert!(out.contains("# mdl_winner=1.k3 "), "{out}");
    assert!(out.contains("# true_model=1.k3"));
    for f in [
        "validation.tsv",
        "fits.tsv",
        "compare.tsv",
        "compare_without_true.tsv",
        "mdl.tsv",
        "noise.tsv",
        "lengths.tsv",
        "truth.model",
        "fitted/1.k3.model",
        "manifest.txt",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let fits = std::fs::read_to_string(dir.path().join("fits.tsv")).unwrap();
    assert_eq!(fits.lines().count(), 94);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("command = validate") && manifest.contains("count = 20000"));
}
