use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fastcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastcp")).args(args).output().expect("spawn fastcp")
}

fn ok(args: &[&str]) -> String {
    let out = fastcp(args);
    assert!(out.status.success(), "fastcp {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["gen", "--dims", "5,6,7", "--rank", "3", "--nu", "0.5", "--seed", "9", "--snr", "20", "--out", p(out)]);
    }
    for suffix in [".cptn", ".noisy.cptn", ".truth0.cptn", ".truth2.cptn"] {
        let read = |x: &Path| fs::read(format!("{}{suffix}", x.display())).unwrap();
        assert_eq!(read(&a), read(&b), "{suffix} differs");
    }
}

#[test]
fn gen_complex_writes_complex_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z");
    ok(&["gen", "--dims", "4,4,4", "--rank", "2", "--nu", "1", "--complex", "--out", p(&out)]);
    let bytes = fs::read(dir.path().join("z.cptn")).unwrap();
    assert_eq!(&bytes[..4], b"CPTN");
    assert_eq!(bytes[8], 1);
    assert!(fs::read_to_string(dir.path().join("z.meta")).unwrap().contains("kind=complex"));
}

#[test]
fn gen_hits_requested_snr() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n");
    let stdout = ok(&["gen", "--dims", "30,30,30", "--rank", "3", "--nu", "0.5", "--snr", "25", "--out", p(&out)]);
    let measured: f64 = stdout.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((measured - 25.0).abs() < 0.3, "{stdout}");
}

#[test]
fn fit_exact_tensor_to_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let fit = dir.path().join("f");
    ok(&["gen", "--dims", "8,9,10", "--rank", "3", "--nu", "0.5", "--seed", "2", "--out", p(&data)]);
    ok(&[
        "fit",
        p(&dir.path().join("d.cptn")),
        "--rank",
        "3",
        "--meta",
        p(&dir.path().join("d.meta")),
        "--out",
        p(&fit),
    ]);
    let rows = csv_rows(&dir.path().join("f.csv"));
    assert_eq!(rows.len(), 2);
    let col = |name: &str| rows[1][rows[0].iter().position(|h| h == name).unwrap()].clone();
    assert!(col("final_relerr").parse::<f64>().unwrap() < 1e-8);
    assert_eq!(col("stop_reason"), "tol");
    assert!(col("medsae_first_db").parse::<f64>().unwrap() < -100.0);
    assert!(dir.path().join("f.factor2.cptn").exists());
}

#[test]
fn oracle_refuses_large_problems() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("big");
    ok(&["gen", "--dims", "60,60,60", "--rank", "2", "--nu", "1", "--out", p(&data)]);
    let out = fastcp(&[
        "fit",
        p(&dir.path().join("big.cptn")),
        "--rank",
        "2",
        "--algo",
        "dgn-oracle",
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn flm_variants_agree_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&["gen", "--dims", "7,7,7", "--rank", "3", "--nu", "0.5", "--seed", "4", "--snr", "30", "--out", p(&data)]);
    let mut errs = Vec::new();
    for algo in ["flm-a", "flm-b"] {
        let out = dir.path().join(algo);
        ok(&[
            "fit",
            p(&dir.path().join("d.noisy.cptn")),
            "--rank",
            "3",
            "--algo",
            algo,
            "--max-iters",
            "30",
            "--out",
            p(&out),
        ]);
        let rows = csv_rows(&dir.path().join(format!("{algo}.csv")));
        errs.push(rows[1][8].parse::<f64>().unwrap());
    }
    assert!((errs[0] - errs[1]).abs() <= 1e-8 * errs[0].max(1e-12), "{errs:?}");
}

fn bench(dir: &Path, name: &str) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let out = dir.join(format!("{name}.csv"));
    ok(&[
        "bench", "--nu", "0.5,1", "--rank", "2", "--size", "6", "--seeds", "10", "--max-iters", "200", "--threads", "2",
        "--out", p(&out),
    ]);
    (csv_rows(&out), csv_rows(&dir.join(format!("{name}.summary.csv"))))
}

#[test]
fn bench_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, sa) = bench(dir.path(), "a");
    let (b, _) = bench(dir.path(), "b");
    assert_eq!(a.len(), 1 + 2 * 10 * 2);
    assert_eq!(sa.len(), 1 + 2 * 2);
    let time = a[0].iter().position(|h| h == "time_ms").unwrap();
    let strip = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().enumerate().filter(|&(i, _)| i != time).map(|(_, v)| v.clone()).collect()).collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn verify_passes_and_perturbation_fails() {
    let out = fastcp(&["verify", "--seeds", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = fastcp(&["verify", "--seeds", "4", "--perturb"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn spectrum_feasibility() {
    let stdout = ok(&["spectrum", "--size", "100", "--rank", "15", "--nu", "0.1", "--snr", "20,inf"]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].ends_with("infeasible"));
    assert!(lines[1].ends_with("-> feasible"));
    let all_inf = ok(&["spectrum", "--size", "20", "--rank", "5", "--nu", "0.01,0.1,1,4"]);
    assert!(all_inf.lines().all(|l| l.ends_with("-> feasible")));
}
