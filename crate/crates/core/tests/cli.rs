use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sumsys(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sumsys"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("SUMSYS_THREADS", n);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn shale_requires_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sumsys(&["shale", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn invalid_values_exit_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(code(&sumsys(&["units", "--h", "0.3", "--out", dir], None)), 2);
    assert_eq!(code(&sumsys(&["kernel", "--alpha", "0.5", "--out", dir], None)), 2);
    assert_eq!(code(&sumsys(&["invariants", "--bogus"], None)), 2);

    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "depht = 3\n").unwrap();
    assert_eq!(code(&sumsys(&["invariants", "--config", cfg.to_str().unwrap(), "--out", dir], None)), 2);
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&sumsys(&["invariants", "--config", missing.to_str().unwrap(), "--out", dir], None)), 2);
}

#[test]
fn exceeded_hard_limit_exits_with_quality_code_and_still_writes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("units");
    let args = ["units", "--h", "0.03125", "--n-max", "256", "--hard-limit", "0", "--out", dir.to_str().unwrap()];
    let out = sumsys(&args, None);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("pairing.csv").exists());
    let verdicts = fs::read_to_string(dir.join("verdicts.json")).unwrap();
    assert!(verdicts.contains("\"quality\""));
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("inv.toml");
    fs::write(&cfg, "h = 0.015625\ndepth = 2\nkeep = 0.5\nalphas = [2.0]\n").unwrap();
    let dir = tmp.path().join("inv");
    let args = ["invariants", "--config", cfg.to_str().unwrap(), "--depth", "3", "--out", dir.to_str().unwrap()];
    let out = sumsys(&args, None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.join("contrast.csv")).unwrap();
    assert!(table.lines().any(|l| l == "# depth = 3"), "{table}");
    assert!(table.lines().any(|l| l == "# h = 0.015625"), "{table}");
    let rows = table.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 4);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = [("a", None), ("b", None), ("c", Some("1"))];
    for (name, threads) in runs {
        let dir = tmp.path().join(name);
        let args = ["shale", "--seed", "11", "--dims", "1,2", "--pairs", "3", "--cutoffs", "6,8", "--vacuum-cutoff", "20"];
        let mut args: Vec<&str> = args.to_vec();
        args.extend(["--out", dir.to_str().unwrap()]);
        let out = sumsys(&args, threads);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = csvs(&tmp.path().join("a"));
    assert!(!a.is_empty());
    assert_eq!(a, csvs(&tmp.path().join("b")));
    assert_eq!(a, csvs(&tmp.path().join("c")));
}

#[test]
fn different_seeds_change_the_random_tables() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        let dir = tmp.path().join(seed);
        let args = ["shale", "--seed", seed, "--dims", "1", "--pairs", "2", "--cutoffs", "6", "--vacuum-cutoff", "10"];
        let mut args: Vec<&str> = args.to_vec();
        args.extend(["--out", dir.to_str().unwrap()]);
        assert_eq!(code(&sumsys(&args, None)), 0);
    }
    let one = fs::read(tmp.path().join("1/functoriality.csv")).unwrap();
    let two = fs::read(tmp.path().join("2/functoriality.csv")).unwrap();
    assert_ne!(one, two);
}
