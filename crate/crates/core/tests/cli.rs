use std::path::Path;
use std::process::{Command, Output};

use framesync::bitvec::{read_bit_file, write_bit_file, BitVec};
use framesync::framing::read_truth_csv;
use framesync::harness::{read_csv, CSV_HEADER};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framesync"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_marker_is_deterministic() {
    let a = ok(&["gen-marker", "--l", "32", "--seed", "9"]);
    let b = ok(&["gen-marker", "--l", "32", "--seed", "9"]);
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(text.trim().len(), 32);
    assert!(text.trim().chars().all(|c| c == '0' || c == '1'));

    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m.bin");
    ok(&["gen-marker", "--l", "32", "--seed", "9", "--out", p(&f)]);
    assert_eq!(read_bit_file(&f).unwrap().to_text(), text.trim());
}

#[test]
fn frame_then_deframe_recovers_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let payload = dir.path().join("payload.txt");
    let data = BitVec::random(4 * 64, &mut ChaCha8Rng::seed_from_u64(3));
    write_bit_file(&payload, &data).unwrap();
    let stream = dir.path().join("stream.bin");
    let truth = dir.path().join("truth.csv");
    let common = [
        "--l",
        "32",
        "--k",
        "6",
        "--threshold",
        "28",
        "--marker-seed",
        "5",
    ];

    let mut args = vec!["frame"];
    args.extend(common);
    args.extend([
        "--payload",
        p(&payload),
        "--payload-len",
        "64",
        "--gap",
        "random",
        "--gap-max",
        "40",
        "--seed",
        "11",
        "--out",
        p(&stream),
        "--truth",
        p(&truth),
    ]);
    ok(&args);
    let starts = read_truth_csv(&truth).unwrap();
    assert_eq!(starts.len(), 4);

    let out = dir.path().join("out.txt");
    let index = dir.path().join("index.csv");
    let trace = dir.path().join("trace.csv");
    let mut args = vec!["deframe"];
    args.extend(common);
    args.extend([
        "--stream",
        p(&stream),
        "--payload-len",
        "64",
        "--out",
        p(&out),
        "--index",
        p(&index),
        "--trace",
        p(&trace),
    ]);
    ok(&args);
    assert_eq!(read_bit_file(&out).unwrap(), data);

    let index = std::fs::read_to_string(&index).unwrap();
    let found: Vec<usize> = index
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(found, starts);
    let trace = std::fs::read_to_string(&trace).unwrap();
    assert!(trace.starts_with("trigger_cycle,detect_cycle,m,sum_m,payload_start_bit,status,valid"));
    assert_eq!(trace.lines().count(), 5);

    let dir_out = dir.path().join("payloads");
    let mut args = vec!["deframe"];
    args.extend(common);
    args.extend([
        "--stream",
        p(&stream),
        "--payload-len",
        "64",
        "--out-dir",
        p(&dir_out),
    ]);
    ok(&args);
    let second = read_bit_file(&dir_out.join("payload_00001.txt")).unwrap();
    assert_eq!(second, data.slice(64, 64));
}

#[test]
fn fser_sweep_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "l = 32\nk = 6\nthreshold = 27\npayload_len = 64\nframes_per_point = 40\n\
         channel = \"bsc\"\npoints = [0.0, 0.2]\nseed = 3\nbatch_size = 8\n",
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["fser-sweep", "--config", p(&cfg), "--out", p(&a)]);
    ok(&[
        "fser-sweep",
        "--config",
        p(&cfg),
        "--out",
        p(&b),
        "--threads",
        "1",
    ]);
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert!(String::from_utf8(text).unwrap().starts_with(CSV_HEADER));
    let points = read_csv(&a).unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0].sync_errors, 0);
    assert_eq!(points[0].frames, 40);

    // Flags override the file.
    let c = dir.path().join("c.csv");
    ok(&[
        "fser-sweep",
        "--config",
        p(&cfg),
        "--ber",
        "0.01",
        "--out",
        p(&c),
    ]);
    assert_eq!(read_csv(&c).unwrap().len(), 1);
}

#[test]
fn selftest_exits_zero() {
    let out = ok(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0101x").unwrap();
    let out = run(&[
        "deframe",
        "--l",
        "8",
        "--k",
        "3",
        "--threshold",
        "7",
        "--marker-bits",
        "10001110",
        "--stream",
        p(&bad),
        "--payload-len",
        "8",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("position 4"));
    assert!(!run(&["gen-marker", "--l", "2"]).status.success());
}
