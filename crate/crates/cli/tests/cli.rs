use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "seed = 3\nout = res\n\n[stream]\nchunks = 2\nrate = 20000\nrates = 2000, 4000, 6000, 9000, 12000, 16000, 20000, 30000\n\n[predictor]\nhidden = 8\nepochs = 2\n";

fn secom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secom")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_chunk(dir: &Path) {
    let text: String = (0..30).map(|i| format!("{},{},0.5\n", (i as f64 * 0.2).sin(), i as f64 * 0.01)).collect();
    std::fs::write(dir.join("chunk.csv"), text).unwrap();
}

#[test]
fn missing_key_names_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.cfg"), "[stream]\nq = 40\n").unwrap();
    let out = secom(tmp.path(), &["simulate", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bad.cfg:2:") && err.contains('q'), "{err}");

    std::fs::write(tmp.path().join("norate.cfg"), "[stream]\nchunks = 1\n").unwrap();
    let out = secom(tmp.path(), &["simulate", "--config", "norate.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rate"), "{}", stderr(&out));

    let out = secom(tmp.path(), &["sweep"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_scheme_and_rate() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("exp.cfg"), SMALL).unwrap();
    let out = secom(tmp.path(), &["sweep", "--config", "exp.cfg"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(tmp.path().join("res/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("scheme,rate_bps,budget_bits,Nf,mean_psnr_db"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 24);
    for scheme in ["full", "no-prediction", "no-selection"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{scheme},"))).count(), 8);
    }
}

#[test]
fn encode_decode_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    write_chunk(tmp.path());
    let enc = secom(
        tmp.path(),
        &["encode", "--input", "chunk.csv", "--output", "c.nfsc", "--q", "12", "--m-dyn", "2", "--budget-bits", "100000"],
    );
    assert!(enc.status.success(), "{}", stderr(&enc));
    let dec = secom(tmp.path(), &["decode", "--input", "c.nfsc", "--output", "d.csv"]);
    assert!(dec.status.success(), "{}", stderr(&dec));
    let parse = |p: &str| -> Vec<Vec<f64>> {
        std::fs::read_to_string(tmp.path().join(p))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| l.split(',').map(|x| x.trim().parse().unwrap()).collect())
            .collect()
    };
    let (orig, back) = (parse("chunk.csv"), parse("d.csv"));
    assert_eq!(orig.len(), back.len());
    for (a, b) in orig.iter().zip(&back) {
        for d in 0..2 {
            assert!((a[d] - b[d]).abs() < 1e-3, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn runtime_failures_leave_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    write_chunk(tmp.path());
    let out = secom(
        tmp.path(),
        &["encode", "--input", "chunk.csv", "--output", "fresh/c.nfsc", "--q", "8", "--m-dyn", "1", "--budget-bits", "4"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("fresh").exists());

    std::fs::write(tmp.path().join("junk.nfsc"), b"XXXX0000000000").unwrap();
    let out = secom(tmp.path(), &["decode", "--input", "junk.nfsc", "--output", "j.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("j.csv").exists());
}

#[test]
fn seed_flag_changes_and_reproduces_output() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("exp.cfg"), SMALL).unwrap();
    let run = |seed: &str, out: &str| {
        let o = secom(tmp.path(), &["simulate", "--config", "exp.cfg", "--seed", seed, "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(tmp.path().join(out).join("frames.csv")).unwrap()
    };
    let a = run("7", "a");
    assert_eq!(a, run("7", "b"));
    assert_ne!(a, run("8", "c"));
}
