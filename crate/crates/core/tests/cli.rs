use std::path::Path;
use std::process::{Command, Output};

use gaussdag::cli::{parse_dataset, Dataset};
use gaussdag::dag::Dag;
use gaussdag::prior::NormalWishartPrior;
use gaussdag::score::dag_log_score;

fn gaussdag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussdag")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    dag: String,
    params: String,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let dag = write(dir.path(), "g.dag", "# chain with an isolated node\nA -> B\nnode C\n");
    let params = write(
        dir.path(),
        "p.txt",
        "A: intercept=0 variance=1\nB: intercept=1 variance=0.5 A=2\nC: intercept=-1 variance=2\n",
    );
    Fixture { dir, dag, params }
}

#[test]
fn sample_then_score_matches_the_library() {
    let f = fixture();
    let csv = f.dir.path().join("d.csv");
    let o = gaussdag(&["sample", "--dag", &f.dag, "--params", &f.params, "--rows", "300", "--seed", "3", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let data = parse_dataset(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!((data.m(), data.n()), (300, 3));

    let o = gaussdag(&["score", "--data", csv.to_str().unwrap(), "--dag", &f.dag]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let g = Dag::parse("A -> B\nnode C\n").unwrap();
    let expect = dag_log_score(&NormalWishartPrior::default_for(3), &data.rows, &g).unwrap();
    let got = report_value(&text, "log_score");
    assert!((got - expect).abs() < 1e-9 * expect.abs());
    assert!(text.contains("B A "));
    assert!(text.contains("# input data"));
}

#[test]
fn sampled_values_round_trip_exactly() {
    let f = fixture();
    let o = gaussdag(&["sample", "--dag", &f.dag, "--from-prior", "--rows", "50", "--seed", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let first = parse_dataset(&stdout(&o)).unwrap();
    let again = Dataset { names: first.names.clone(), rows: first.rows.clone() };
    assert_eq!(parse_dataset(&again.to_csv()).unwrap(), first);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let f = fixture();
    let csv = f.dir.path().join("d.csv");
    let csv = csv.to_str().unwrap();
    gaussdag(&["sample", "--dag", &f.dag, "--params", &f.params, "--rows", "400", "--seed", "1", "--out", csv]);
    for args in [
        vec!["learn", "--data", csv, "--restarts", "2", "--seed", "5"],
        vec!["posterior", "--data", csv],
        vec!["characterize", "--mode", "normal-wishart", "--n", "3", "--samples", "10000", "--seed", "2"],
        vec!["characterize", "--mode", "local", "--n", "2", "--samples", "10000", "--seed", "2"],
    ] {
        let a = gaussdag(&args);
        let b = gaussdag(&args);
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn learn_recovers_the_generating_skeleton() {
    let f = fixture();
    let csv = f.dir.path().join("d.csv");
    let csv = csv.to_str().unwrap();
    gaussdag(&["sample", "--dag", &f.dag, "--params", &f.params, "--rows", "2000", "--seed", "11", "--out", csv]);
    let text = stdout(&gaussdag(&["learn", "--data", csv]));
    let dag_text: String = text
        .lines()
        .skip_while(|l| *l != "# best dag")
        .skip(1)
        .take_while(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let g = Dag::parse(&dag_text).unwrap();
    assert_eq!(g.arc_count(), 1);
    assert!(g.adjacent(0, 1));
    let trace_lines: Vec<&str> = text.lines().skip_while(|l| *l != "# trace").skip(1).collect();
    assert!(trace_lines[0].starts_with("add "));
    assert_eq!(trace_lines[0].split(' ').count(), 3);
}

#[test]
fn posterior_table_sums_to_one() {
    let f = fixture();
    let csv = f.dir.path().join("d.csv");
    let csv = csv.to_str().unwrap();
    gaussdag(&["sample", "--dag", &f.dag, "--params", &f.params, "--rows", "100", "--seed", "2", "--out", csv]);
    let text = stdout(&gaussdag(&["posterior", "--data", csv]));
    assert!((report_value(&text, "sum") - 1.0).abs() < 1e-12);
    assert_eq!(text.lines().skip_while(|l| *l != "# dag posterior").skip(1).take_while(|l| !l.starts_with('#')).count(), 25);
}

#[test]
fn equiv_and_classes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.dag", "X1 -> X2\nX2 -> X3\n");
    let b = write(dir.path(), "b.dag", "X3 -> X2\nX2 -> X1\n");
    let c = write(dir.path(), "c.dag", "X1 -> X2\nX3 -> X2\n");
    assert!(stdout(&gaussdag(&["equiv", "--dag", &a, "--dag2", &b])).contains("equivalent = true\n"));
    let diff = stdout(&gaussdag(&["equiv", "--dag", &a, "--dag2", &c]));
    assert!(diff.contains("equivalent = false\n"));
    assert!(diff.contains("v_structures_only_in_dag2 = X1->X2<-X3\n"));
    let classes = stdout(&gaussdag(&["classes", "--n", "3"]));
    assert!(classes.contains("dags = 25\n") && classes.contains("classes = 11\n"));
}

#[test]
fn exit_codes() {
    let f = fixture();
    let dir = f.dir.path();
    // usage errors
    assert_eq!(gaussdag(&[]).status.code(), Some(1));
    assert_eq!(gaussdag(&["score", "--data", "x.csv"]).status.code(), Some(1));
    assert_eq!(gaussdag(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gaussdag(&["sample", "--dag", &f.dag, "--rows", "3", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(gaussdag(&["--help"]).status.code(), Some(0));
    // input validation
    let missing = write(dir, "missing.csv", "A,B,C\n1,2,\n");
    let o = gaussdag(&["score", "--data", &missing, "--dag", &f.dag]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1, column 3"));
    let nonfinite = write(dir, "nan.csv", "A,B,C\n1,NaN,3\n");
    assert_eq!(gaussdag(&["score", "--data", &nonfinite, "--dag", &f.dag]).status.code(), Some(2));
    let wrong_vars = write(dir, "w.csv", "A,B,D\n1,2,3\n");
    assert_eq!(gaussdag(&["score", "--data", &wrong_vars, "--dag", &f.dag]).status.code(), Some(2));
    let cyclic = write(dir, "cyc.dag", "A -> B\nB -> A\n");
    assert_eq!(gaussdag(&["sample", "--dag", &cyclic, "--from-prior", "--rows", "3", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(gaussdag(&["classes", "--n", "6"]).status.code(), Some(2));
    assert_eq!(gaussdag(&["characterize", "--mode", "wishart", "--n", "3", "--samples", "100"]).status.code(), Some(2));
    assert_eq!(gaussdag(&["characterize", "--mode", "bogus", "--n", "3"]).status.code(), Some(2));
    // numerical failure: an indefinite prior matrix
    write(dir, "t.csv", "1,2,0\n2,1,0\n0,0,1\n");
    let prior = write(dir, "prior.cfg", "alpha = 6\nT = file:t.csv\n");
    let good = write(dir, "ok.csv", "A,B,C\n1,2,3\n");
    assert_eq!(gaussdag(&["score", "--data", &good, "--dag", &f.dag, "--prior", &prior]).status.code(), Some(3));
}

#[test]
fn header_only_dataset_scores_zero() {
    let f = fixture();
    let empty = write(f.dir.path(), "e.csv", "A,B,C\n");
    let text = stdout(&gaussdag(&["score", "--data", &empty, "--dag", &f.dag]));
    assert_eq!(report_value(&text, "log_score"), 0.0);
}

#[test]
fn characterize_partition_flag() {
    let o = gaussdag(&["characterize", "--mode", "wishart", "--n", "3", "--partition", "X1,X3", "--samples", "10000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("W11.2[1,3]"));
    assert!(text.contains("W22[2,2]"));
    let bad = gaussdag(&["characterize", "--mode", "wishart", "--n", "3", "--partition", "X1,X2,X3", "--samples", "10000"]);
    assert_eq!(bad.status.code(), Some(2));
}
