use std::path::Path;
use std::process::{Command, Output};

fn ionet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionet")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

const THREE_NODES: &str = "#kind=value;period=2022\n,a,b,c\na,0,2,0\nb,1,0,3\nc,0,0,4\n";

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), THREE_NODES).unwrap();
    dir
}

#[test]
fn netstats_three_nodes() {
    let dir = fixture();
    let out = stdout(&ionet(dir.path(), &["netstats", "--matrix", "m.csv"]));
    let expected = format!(
        "density,avg_degree,avg_strength,avg_weight,reciprocity,transitivity,assortativity,n_total,n_active,n_edges\n\
         {},{},{},2.5,{},0,NA,3,3,4\n",
        4.0 / 9.0,
        4.0 / 3.0,
        10.0 / 3.0,
        2.0 / 3.0
    );
    assert_eq!(out, expected);
}

#[test]
fn zero_truncation_changes_nothing() {
    let dir = fixture();
    let plain = stdout(&ionet(dir.path(), &["netstats", "--matrix", "m.csv"]));
    let truncated = stdout(&ionet(dir.path(), &["netstats", "--matrix", "m.csv", "--truncate", "0"]));
    assert_eq!(plain, truncated);
}

#[test]
fn out_flag_matches_stdout() {
    let dir = fixture();
    let plain = stdout(&ionet(dir.path(), &["centrality", "--matrix", "m.csv"]));
    stdout(&ionet(dir.path(), &["centrality", "--matrix", "m.csv", "--out", "c.csv"]));
    assert_eq!(std::fs::read_to_string(dir.path().join("c.csv")).unwrap(), plain);
    assert!(plain.starts_with("rank,code,value,description\n"));
    assert_eq!(plain.lines().count(), 4);
}

#[test]
fn usage_errors_exit_two() {
    let dir = fixture();
    let o = ionet(dir.path(), &["netstats", "--matrix", "m.csv", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ionet(dir.path(), &["plfit", "--values", "v.csv"]);
    assert_eq!(o.status.code(), Some(2), "missing --seed");
}

#[test]
fn data_errors_exit_one_with_one_line() {
    let dir = fixture();
    let o = ionet(dir.path(), &["netstats", "--matrix", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("error: "));
    assert_eq!(err.lines().count(), 1);

    let o = ionet(dir.path(), &["diff", "--a", "m.csv", "--b", "m.csv", "--metric", "proportional", "--include-zero"]);
    assert_eq!(o.status.code(), Some(1), "include-zero without a floor");
}

#[test]
fn build_writes_one_file_per_period() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = "period,payer_sic,payee_sic,value_gbp,count\n\
                  2022-01,01110,10110,10.00,2\n\
                  2022-02,10110,01110,5.50,1\n\
                  2023-01,01110,10110,1.00,1\n";
    std::fs::write(dir.path().join("l.csv"), ledger).unwrap();
    stdout(&ionet(dir.path(), &["build", "--ledger", "l.csv", "--granularity", "sic5", "--out", "out"]));
    let y22 = std::fs::read_to_string(dir.path().join("out/2022.csv")).unwrap();
    assert_eq!(y22, "#kind=value;period=2022\n,01110,10110\n01110,0,5.5\n10110,10,0\n");
    assert!(dir.path().join("out/2023.csv").exists());
}

#[test]
fn plfit_values_file() {
    let dir = tempfile::tempdir().unwrap();
    let values: String = (1..=200).map(|k| format!("{}\n", 1.0 / (k as f64 / 201.0).powf(2.0))).collect();
    std::fs::write(dir.path().join("v.csv"), format!("value\n{values}")).unwrap();
    let out = stdout(&ionet(dir.path(), &["plfit", "--values", "v.csv", "--reps", "100", "--seed", "3", "--year", "2022"]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("year,weight_kind,filter,gamma,xmin,loglik,ks,p,n_tail,reps,seed"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "2022");
    assert_eq!(row[9], "100");
    assert_eq!(row[10], "3");
}

#[test]
fn plfit_values_quantile_truncate() {
    let dir = tempfile::tempdir().unwrap();
    let values: String = (1..=100).map(|k| format!("{k}\n")).collect();
    std::fs::write(dir.path().join("v.csv"), format!("value\n{values}")).unwrap();
    let out = stdout(&ionet(dir.path(), &["plfit", "--values", "v.csv", "--reps", "100", "--seed", "1", "--quantile-truncate", "0.5"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let xmin: f64 = row[4].parse().unwrap();
    assert!(xmin >= 50.5, "{xmin}");
}
