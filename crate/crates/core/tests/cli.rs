use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use corrcomm::ingest::window_count;

fn corrcomm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrcomm"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = corrcomm(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth(dir: &Path, steps: usize) -> PathBuf {
    let prices = dir.join("prices.csv");
    let truth = dir.join("truth.csv");
    ok(&[
        "synth",
        "--blocks",
        "10,10,10",
        "--steps",
        &steps.to_string(),
        "--seed",
        "3",
        "--out",
        prices.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
    ]);
    prices
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn weighted_only_skips_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), 400);
    let out = tmp.path().join("out");
    ok(&[
        "detect",
        "--prices",
        prices.to_str().unwrap(),
        "--representation",
        "weighted",
        "--algorithm",
        "louvain",
        "--restarts",
        "5",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(out.join("detect_louvain_weighted.json").exists());
    assert!(out.join("partition_louvain_weighted.csv").exists());
    assert!(!out.join("compare_louvain.json").exists());
    assert!(!out.join("table.csv").exists());
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["schema_version"], 1);
    assert!(manifest["outputs"]["detect_louvain_weighted.json"].is_number());
}

#[test]
fn full_width_window_matches_detect() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), 400);
    let p = prices.to_str().unwrap();
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    let common = [
        "--prices",
        p,
        "--algorithm",
        "potts",
        "--restarts",
        "5",
        "--seed",
        "2",
        "--out-dir",
        o,
    ];
    ok(&[&["detect"], &common[..]].concat());
    ok(&[
        &["sliding", "--width", "400", "--stride", "400"],
        &common[..],
    ]
    .concat());

    let compare = read_json(&out.join("compare_potts.json"));
    let csv = std::fs::read_to_string(out.join("sliding_potts.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let (start, vi) = rows[0].split_once(',').unwrap();
    assert_eq!(start, "0");
    assert_eq!(
        vi.parse::<f64>().unwrap(),
        compare["frequent"]["report"]["vi"].as_f64().unwrap()
    );
}

#[test]
fn planted_windows_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), 700);
    let out = tmp.path().join("out");
    ok(&[
        "sliding",
        "--prices",
        prices.to_str().unwrap(),
        "--algorithm",
        "louvain",
        "--restarts",
        "5",
        "--width",
        "600",
        "--stride",
        "2",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(out.join("sliding_louvain.csv")).unwrap();
    let vis: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    assert_eq!(vis.len(), window_count(700, 600).div_ceil(2));
    assert_eq!(vis.len(), 51);
    assert!(vis.iter().all(|&v| v <= 0.1), "{vis:?}");
}

#[test]
fn window_count_convention() {
    assert_eq!(window_count(2500, 600), 1901);
    assert_eq!(window_count(600, 600), 1);
    assert_eq!(window_count(599, 600), 0);
}

#[test]
fn oversized_window_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), 300);
    let out = corrcomm(&[
        "sliding",
        "--prices",
        prices.to_str().unwrap(),
        "--width",
        "301",
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds series length"));
}

#[test]
fn shuffle_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), 400);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&[
            "shuffle",
            "--prices",
            prices.to_str().unwrap(),
            "--seed",
            "4",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        let sidecar = read_json(&out.join("spectrum_binary_shuffled.json"));
        assert!(sidecar["lambda_plus"].as_f64().unwrap() > 1.0);
        std::fs::read(out.join("spectrum_weighted_shuffled.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn compare_identical_partitions() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), 200);
    let truth = tmp.path().join("truth.csv");
    let report = tmp.path().join("vi.json");
    let t = truth.to_str().unwrap();
    ok(&[
        "compare",
        "--first",
        t,
        "--second",
        t,
        "--out",
        report.to_str().unwrap(),
    ]);
    let v = read_json(&report);
    assert_eq!(v["report"]["vi"], 0.0);
    assert_eq!(v["report"]["switching_fraction"], 0.0);
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), 300);
    let out = tmp.path().join("out");
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "prices = {:?}\nrepresentation = \"binary\"\nbins = 12\nout_dir = {:?}\n",
            prices.to_str().unwrap(),
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    ok(&[
        "spectrum",
        "--config",
        config.to_str().unwrap(),
        "--bins",
        "15",
    ]);
    let csv = std::fs::read_to_string(out.join("spectrum_binary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(!out.join("spectrum_weighted.csv").exists());
}

#[test]
fn errors_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.csv");
    let out = corrcomm(&["detect", "--prices", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"));
    assert!(stderr.contains("stage 'ingest'"), "{stderr}");
}

#[test]
fn conversions_keep_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), 100);
    let returns = tmp.path().join("r.csv");
    let signs = tmp.path().join("b.csv");
    ok(&[
        "returns",
        "--prices",
        prices.to_str().unwrap(),
        "--out",
        returns.to_str().unwrap(),
    ]);
    ok(&[
        "binarize",
        "--prices",
        prices.to_str().unwrap(),
        "--out",
        signs.to_str().unwrap(),
    ]);
    let r = std::fs::read_to_string(&returns).unwrap();
    let b = std::fs::read_to_string(&signs).unwrap();
    assert_eq!(r.lines().count(), 101);
    assert_eq!(r.lines().next(), b.lines().next());
    for (rl, bl) in r.lines().zip(b.lines()).skip(1) {
        let rv: Vec<&str> = rl.split(',').collect();
        let bv: Vec<&str> = bl.split(',').collect();
        assert_eq!(rv[0], bv[0]);
        for (x, s) in rv[1..].iter().zip(&bv[1..]) {
            let x: f64 = x.parse().unwrap();
            assert_eq!(
                s.parse::<f64>().unwrap(),
                x.signum() * f64::from(u8::from(x != 0.0))
            );
        }
    }
}
