use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn doq(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = doq_cli::run(
        std::iter::once("doq").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn ok(args: &[&str]) -> String {
    let o = doq(args);
    assert_eq!(o.code, 0, "doq {args:?} failed: {}", o.stderr);
    o.stdout
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CORPUS_A: &str =
    "The car drove at 90 km/h on the highway. An elephant weighs about 4,000 kg.\n\
The cat weighs 4 kg. The car was not 300 km/h fast.\n";
const CORPUS_B: &str = "A car cruised at 99.7 km/h. The elephant weighed 5000 kg.\n\
The cat weighs 3.5 kg. My car reached 110 km/h.\n";

fn corpus(dir: &TempDir) -> (PathBuf, PathBuf) {
    (write(dir, "a.txt", CORPUS_A), write(dir, "b.txt", CORPUS_B))
}

fn lines_with(out: &str, key: &str) -> String {
    out.lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_default()
        .to_string()
}

#[test]
fn query_reports_median_and_decade_range() {
    let dir = TempDir::new().unwrap();
    let (a, b) = corpus(&dir);
    let table = dir.path().join("t.tsv");
    ok(&["build", "-o", s(&table), s(&a), s(&b)]);
    let out = ok(&[
        "query",
        "--table",
        s(&table),
        "--object",
        "car",
        "--dim",
        "speed",
        "--unit",
        "km/h",
    ]);
    assert_eq!(lines_with(&out, "count"), "count 3");
    assert_eq!(lines_with(&out, "median"), "median 99.7 km/h");
    assert_eq!(lines_with(&out, "range"), "range 10–100 km/h");

    let json = ok(&[
        "--format",
        "records",
        "query",
        "--table",
        s(&table),
        "--object",
        "car",
        "--dim",
        "SPEED",
    ]);
    let v: serde_json::Value = serde_json::from_str(json.trim()).unwrap();
    assert_eq!(v["count"], 3);
    assert_eq!(v["unit"], "meter per second");
}

#[test]
fn compare_nouns_from_table() {
    let dir = TempDir::new().unwrap();
    let (a, b) = corpus(&dir);
    let table = dir.path().join("t.tsv");
    ok(&["build", "-o", s(&table), s(&a), s(&b)]);
    assert_eq!(
        ok(&[
            "compare",
            "--table",
            s(&table),
            "--noun",
            "elephant",
            "cat",
            "--dim",
            "mass"
        ]),
        ">\n"
    );
    assert_eq!(
        ok(&[
            "compare",
            "--table",
            s(&table),
            "--noun",
            "cat",
            "elephant",
            "--dim",
            "mass"
        ]),
        "<\n"
    );
    assert_eq!(
        ok(&[
            "compare",
            "--table",
            s(&table),
            "--noun",
            "unicorn",
            "griffin",
            "--dim",
            "mass"
        ]),
        "=\n"
    );
    let o = doq(&[
        "compare",
        "--table",
        s(&table),
        "--adj",
        "fast",
        "slow",
        "--dim",
        "speed",
    ]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("no shared heads"));
}

#[test]
fn sharded_pipeline_matches_single_build() {
    let dir = TempDir::new().unwrap();
    let (a, b) = corpus(&dir);
    let p = |n: &str| dir.path().join(n);
    for (input, name) in [(&a, "a"), (&b, "b")] {
        ok(&[
            "extract",
            "--distance",
            "10",
            "-o",
            s(&p(&format!("{name}.rec"))),
            s(input),
        ]);
        ok(&[
            "aggregate",
            "-o",
            s(&p(&format!("{name}.part"))),
            s(&p(&format!("{name}.rec"))),
        ]);
        ok(&[
            "finalize",
            "--min-count",
            "1",
            "-o",
            s(&p(&format!("{name}.fin"))),
            s(&p(&format!("{name}.part"))),
        ]);
    }
    ok(&[
        "merge",
        "-o",
        s(&p("merged.tsv")),
        s(&p("a.fin")),
        s(&p("b.fin")),
    ]);
    ok(&[
        "build",
        "--distance",
        "10",
        "-o",
        s(&p("single.tsv")),
        s(&a),
        s(&b),
    ]);
    assert_eq!(
        fs::read(p("merged.tsv")).unwrap(),
        fs::read(p("single.tsv")).unwrap()
    );

    // thresholds above one are applied after merging partial tables
    ok(&[
        "merge",
        "-o",
        s(&p("partial.tsv")),
        s(&p("b.part")),
        s(&p("a.part")),
    ]);
    ok(&[
        "finalize",
        "--min-count",
        "3",
        "-o",
        s(&p("thresholded.tsv")),
        s(&p("partial.tsv")),
    ]);
    ok(&[
        "build",
        "--distance",
        "10",
        "--min-count",
        "3",
        "-o",
        s(&p("single3.tsv")),
        s(&a),
        s(&b),
    ]);
    assert_eq!(
        fs::read(p("thresholded.tsv")).unwrap(),
        fs::read(p("single3.tsv")).unwrap()
    );

    // records from different distance settings cannot be combined
    ok(&["extract", "-o", s(&p("sentence.rec")), s(&a)]);
    let o = doq(&["aggregate", s(&p("a.rec")), s(&p("sentence.rec"))]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("max_distance"), "{}", o.stderr);
}

#[test]
fn extract_writes_record_stream_to_stdout() {
    let dir = TempDir::new().unwrap();
    let (a, _) = corpus(&dir);
    let out = ok(&["extract", "--distance", "3", s(&a)]);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("doq-records\t1\t"));
    assert!(out.contains("elephant\t\tUNKNOWN\tMASS\t4000.0"));
    assert!(!out.contains("300.0"), "negated sentence leaked");
}

#[test]
fn audit_flags_transitive_pair() {
    let dir = TempDir::new().unwrap();
    let train = write(
        &dir,
        "train.tsv",
        "person\tfox\tweight\t>\nfox\tgoose\tweight\t>\n",
    );
    let dev = write(
        &dir,
        "dev.tsv",
        "object1\tobject2\tdimension\tlabel\nperson\tgoose\tweight\t>\nswan\tcow\tweight\t<\n",
    );
    let out = ok(&["audit", s(&train), s(&dev)]);
    assert_eq!(lines_with(&out, "transitive_flags"), "transitive_flags 1");
    assert_eq!(lines_with(&out, "object_flags"), "object_flags 1");
    assert!(out.contains("transitive person\tgoose\tMASS\t>"));
}

#[test]
fn split_then_audit_is_clean() {
    let dir = TempDir::new().unwrap();
    let data = write(
        &dir,
        "all.tsv",
        "a\tb\tweight\t>\nb\tc\tweight\t>\nd\te\tsize\t<\nf\tg\tspeed\t=\nh\ti\tweight\t>\nj\tk\tsize\t<\n",
    );
    let out_dir = dir.path().join("splits");
    let out = ok(&[
        "split",
        s(&data),
        "--ratios",
        "0.5,0.25,0.25",
        "--seed",
        "3",
        "--out-dir",
        s(&out_dir),
    ]);
    assert!(out.starts_with("train 3 "), "{out}");
    for held in ["dev.tsv", "test.tsv"] {
        let report = ok(&[
            "audit",
            s(&out_dir.join("train.tsv")),
            s(&out_dir.join(held)),
        ]);
        assert_eq!(
            lines_with(&report, "transitive_flags"),
            "transitive_flags 0"
        );
        assert_eq!(lines_with(&report, "object_flags"), "object_flags 0");
    }
    let again = dir.path().join("again");
    ok(&[
        "split",
        s(&data),
        "--ratios",
        "0.5,0.25,0.25",
        "--seed",
        "3",
        "--out-dir",
        s(&again),
    ]);
    assert_eq!(
        fs::read(out_dir.join("test.tsv")).unwrap(),
        fs::read(again.join("test.tsv")).unwrap()
    );

    let clique = write(&dir, "clique.tsv", "a\tb\tweight\t>\nb\tc\tweight\t>\n");
    assert_eq!(
        doq(&["split", s(&clique), "--out-dir", s(&out_dir)]).code,
        2
    );
}

#[test]
fn eval_and_plot_export() {
    let dir = TempDir::new().unwrap();
    let (a, b) = corpus(&dir);
    let table = dir.path().join("t.tsv");
    ok(&["build", "-o", s(&table), s(&a), s(&b)]);
    let data = write(&dir, "pairs.tsv", "elephant\tcat\tweight\t>\ncat\telephant\tweight\t<\ncar\tcat\tstrength\t>\ndoll\tdragon\tspeed\tNA\n");
    let out = ok(&["eval", "--table", s(&table), "--dataset", s(&data)]);
    assert_eq!(lines_with(&out, "accuracy"), "accuracy 1.0000");
    assert_eq!(lines_with(&out, "out_of_coverage"), "out_of_coverage 1");
    assert_eq!(lines_with(&out, "not_comparable"), "not_comparable 1");

    let plot = ok(&[
        "plot-export",
        "--table",
        s(&table),
        "--object",
        "elephant",
        "--dim",
        "mass",
    ]);
    let mut rows = plot.lines();
    assert_eq!(rows.next(), Some("bucket_center\tdensity\tcount"));
    let counts: u64 = rows
        .map(|r| r.rsplit('\t').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(counts, 2);
    let json = ok(&[
        "--format",
        "records",
        "plot-export",
        "--table",
        s(&table),
        "--object",
        "elephant",
        "--dim",
        "mass",
    ]);
    for line in json.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["center"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(doq(&["--help"]).code, 0);
    assert_eq!(doq(&[]).code, 1);
    assert_eq!(doq(&["extract", "--bogus", "x"]).code, 1);
    assert_eq!(doq(&["extract", "--distance", "0", "x"]).code, 1);
    assert_eq!(doq(&["extract", "--distance", "101", "x"]).code, 1);
    assert_eq!(doq(&["compare", "--table", "t", "--dim", "mass"]).code, 1);
    assert_eq!(
        doq(&["query", "--table", "t", "--object", "x", "--dim", "colour"]).code,
        1
    );

    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.txt");
    let o = doq(&["extract", s(&missing)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("missing.txt"));

    let bad = write(&dir, "bad.tsv", "a\tb\tweight\t>\nc\td\tweight\t<<\n");
    let o = doq(&["audit", s(&bad), s(&bad)]);
    assert_eq!(o.code, 2);
    assert!(
        o.stderr.contains("bad.tsv") && o.stderr.contains("line 2"),
        "{}",
        o.stderr
    );

    let truncated = write(&dir, "t.tsv", "doq-table\t1\tbuckets_per_decade=10\n");
    let o = doq(&[
        "query",
        "--table",
        s(&truncated),
        "--object",
        "x",
        "--dim",
        "mass",
    ]);
    assert_eq!(o.code, 2);

    let (a, _) = corpus(&dir);
    let table = dir.path().join("ok.tsv");
    ok(&["build", "-o", s(&table), s(&a)]);
    let o = doq(&[
        "query",
        "--table",
        s(&table),
        "--object",
        "car",
        "--dim",
        "speed",
        "--unit",
        "kg",
    ]);
    assert_eq!(o.code, 1);
    let o = doq(&[
        "query",
        "--table",
        s(&table),
        "--object",
        "zebra",
        "--dim",
        "speed",
    ]);
    assert_eq!(o.code, 2);
}

#[test]
fn annotated_input_and_custom_registry() {
    let dir = TempDir::new().unwrap();
    let conll = write(
        &dir,
        "c.conll",
        "1\tfast\tADJ\t2\n2\tcar\tNOUN\t3\n3\tdid\tVERB\t0\n4\t90\tNUM\t5\n5\tmph\tNOUN\t3\n\n\
         1\tslow\tADJ\t2\n2\tcar\tNOUN\t3\n3\tdid\tVERB\t0\n4\t20\tNUM\t5\n5\tmph\tNOUN\t3\n",
    );
    let table = dir.path().join("t.tsv");
    ok(&["build", "--annotated", "-o", s(&table), s(&conll)]);
    assert_eq!(
        ok(&[
            "compare",
            "--table",
            s(&table),
            "--adj",
            "fast",
            "slow",
            "--dim",
            "speed"
        ]),
        ">\n"
    );
    let out = ok(&[
        "query",
        "--table",
        s(&table),
        "--object",
        "fast",
        "--head",
        "car",
        "--dim",
        "speed",
        "--unit",
        "mph",
    ]);
    assert_eq!(lines_with(&out, "median"), "median 90 mph");

    let units = write(
        &dir,
        "units.tsv",
        "furlong per fortnight|fpf\tSPEED\t0.0001663\t0\tfalse\n",
    );
    let text = write(&dir, "x.txt", "The glacier moved 3 fpf.\n");
    let out = ok(&["--units", s(&units), "extract", s(&text)]);
    assert!(out.contains("glacier\t\tUNKNOWN\tSPEED"));
    let bad_units = write(&dir, "bad_units.tsv", "broken line\n");
    let o = doq(&["--units", s(&bad_units), "extract", s(&text)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("bad_units.tsv"));
}
