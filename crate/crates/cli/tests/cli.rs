use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clonedetect_cli::bench::{read_csv, write_csv};
use clonedetect_cli::{BenchRow, JsonReport, SOURCE_RGB, TARGET_RGB};
use clonedetect_core::{load_image, Method, Sidecar};
use proptest::prelude::*;
use tempfile::TempDir;

fn clonedetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clonedetect"))
        .args(args)
        .env("CLONEDETECT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn forge(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["forge", "--size", "96x96", "--seed", "11", "--out", s(&out)];
    args.extend_from_slice(extra);
    let run = clonedetect(&args);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    out
}

fn detect(dir: &Path, input: &Path, method: &str, extra: &[&str]) -> (Output, PathBuf, PathBuf) {
    let mask = dir.join(format!("{method}.mask.png"));
    let report = dir.join(format!("{method}.json"));
    let mut args = vec![
        "detect",
        "--method",
        method,
        "--out-mask",
        s(&mask),
        "--out-report",
        s(&report),
    ];
    args.extend_from_slice(extra);
    args.push(s(input));
    (clonedetect(&args), mask, report)
}

fn read_report(path: &Path) -> JsonReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn forge_writes_image_and_truth() {
    let dir = TempDir::new().unwrap();
    let img = forge(
        dir.path(),
        "f.png",
        &["--src", "8,8,24,24", "--dst", "50,40"],
    );
    let sidecar: Sidecar =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("f.truth.json")).unwrap())
            .unwrap();
    assert_eq!((sidecar.shift.dx, sidecar.shift.dy), (42, 32));
    assert_eq!(sidecar.ground_truth().unwrap().mask.labeled(), 2 * 24 * 24);
    let loaded = load_image(&img).unwrap();
    assert_eq!((loaded.width(), loaded.height()), (96, 96));
}

#[test]
fn forge_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.png");
    for extra in [
        ["--src", "8,8,24,24", "--dst", "20,20"],
        ["--src", "8,8,24,24", "--dst", "90,90"],
        ["--src", "8,8,0,24", "--dst", "50,50"],
    ] {
        let mut args = vec!["forge", "--size", "96x96", "--out", s(&out)];
        args.extend_from_slice(&extra);
        assert_eq!(clonedetect(&args).status.code(), Some(2), "{extra:?}");
    }
    assert!(!out.exists());
}

#[test]
fn dwtsvd_flags_planted_clone() {
    let dir = TempDir::new().unwrap();
    let img = forge(
        dir.path(),
        "f.png",
        &["--src", "8,8,24,24", "--dst", "50,40"],
    );
    let (run, mask, report) = detect(dir.path(), &img, "dwtsvd", &[]);
    assert!(run.status.success());
    let r = read_report(&report);
    assert!(r.tampering_detected);
    assert_eq!(r.shift_bins.len(), 1);
    assert_eq!((r.shift_bins[0].dx, r.shift_bins[0].dy), (42, 32));
    assert_eq!(r.mask_path, s(&mask));

    let m = load_image(&mask).unwrap();
    assert_eq!(m.pixel(10, 10), SOURCE_RGB);
    assert_eq!(m.pixel(52, 42), TARGET_RGB);
    let [g, g2, g3] = m.pixel(90, 5);
    assert!(g == g2 && g2 == g3, "untouched pixels stay gray");
}

#[test]
fn clean_image_reports_nothing() {
    let dir = TempDir::new().unwrap();
    let img = forge(
        dir.path(),
        "f.png",
        &["--src", "0,0,2,2", "--dst", "50,50", "--offset", "1"],
    );
    for method in ["sobm", "dct", "pca", "dwt"] {
        let (run, _, report) = detect(dir.path(), &img, method, &[]);
        assert!(run.status.success());
        let r = read_report(&report);
        assert!(!r.tampering_detected, "{method}");
        assert!(r.shift_bins.is_empty());
        assert_eq!(r.matched_block_count, 0);
    }
}

#[test]
fn detect_exit_codes() {
    let dir = TempDir::new().unwrap();
    let img = forge(
        dir.path(),
        "f.png",
        &["--src", "8,8,24,24", "--dst", "50,40"],
    );
    let (run, _, _) = detect(dir.path(), &img, "dct", &["--block-size", "3"]);
    assert_eq!(run.status.code(), Some(2));
    let (run, _, _) = detect(dir.path(), &img, "dctsvd", &["--block-size", "5"]);
    assert_eq!(run.status.code(), Some(2));
    let (run, _, _) = detect(dir.path(), &img, "wavelet", &[]);
    assert_eq!(run.status.code(), Some(2));
    let (run, _, _) = detect(dir.path(), &img, "sobm", &["--quant-step", "0"]);
    assert_eq!(run.status.code(), Some(2));
    let (run, _, _) = detect(dir.path(), &dir.path().join("absent.png"), "sobm", &[]);
    assert_eq!(run.status.code(), Some(1));

    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    let (run, _, _) = detect(dir.path(), &junk, "sobm", &[]);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_usage_error() {
    let run = Command::new(env!("CARGO_BIN_EXE_clonedetect"))
        .args(["bench", "--out-csv", "x.csv", "missing.png"])
        .env("CLONEDETECT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn dwt_warns_about_minimum_clone() {
    let dir = TempDir::new().unwrap();
    let img = forge(
        dir.path(),
        "f.png",
        &["--src", "8,8,24,24", "--dst", "50,40"],
    );
    let (run, _, _) = detect(dir.path(), &img, "dwt", &[]);
    assert!(String::from_utf8_lossy(&run.stderr).contains("8x8"));
    let (run, _, _) = detect(dir.path(), &img, "sobm", &[]);
    assert!(run.stderr.is_empty());
}

#[test]
fn per_channel_reports_channel_counts() {
    let dir = TempDir::new().unwrap();
    let img = forge(
        dir.path(),
        "f.png",
        &["--src", "8,8,24,24", "--dst", "50,40"],
    );
    let (run, _, report) = detect(dir.path(), &img, "sobm", &["--per-channel"]);
    assert!(run.status.success());
    let r = read_report(&report);
    let counts = r.channel_counts.expect("per-channel counts");
    assert!(counts.iter().all(|&c| c == counts[0] && c > 0));
}

#[test]
fn bench_rows_cover_every_cell() {
    let dir = TempDir::new().unwrap();
    let inputs: Vec<PathBuf> = (0..4)
        .map(|i| {
            let dst = format!("{},50", 40 + 2 * i);
            forge(
                dir.path(),
                &format!("fx{i}.png"),
                &["--src", "4,4,20,20", "--dst", &dst],
            )
        })
        .collect();
    let csv = dir.path().join("bench/out.csv");
    let mut args = vec![
        "bench",
        "--methods",
        "all",
        "--repeat",
        "1",
        "--out-csv",
        s(&csv),
    ];
    args.extend(inputs.iter().map(|p| s(p)));
    let run = clonedetect(&args);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 28);
    for m in Method::ALL {
        assert_eq!(rows.iter().filter(|r| r.method == m).count(), 4);
    }
    assert!(rows
        .iter()
        .all(|r| r.total_time >= 0.0 && r.block_size == 4));
    let table = String::from_utf8(run.stdout).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.lines().next().unwrap().contains("dwtsvd"));
}

fn bench_row() -> impl Strategy<Value = BenchRow> {
    let method = proptest::sample::select(Method::ALL.to_vec());
    let time = 0.0f64..1e3;
    (
        "[a-z0-9_ ,\"-]{1,12}",
        method,
        2usize..32,
        0usize..100_000,
        [time.clone(), time.clone(), time.clone(), time.clone(), time],
    )
        .prop_map(|(image, method, block_size, count, t)| BenchRow {
            image,
            method,
            block_size,
            matched_block_count: count,
            total_time: t[0],
            feature_time: t[1],
            sort_time: t[2],
            match_time: t[3],
            filter_time: t[4],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn csv_rows_round_trip(rows in proptest::collection::vec(bench_row(), 1..8)) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("rows.csv");
        write_csv(&rows, &path).unwrap();
        prop_assert_eq!(read_csv(&path).unwrap(), rows);
    }
}
