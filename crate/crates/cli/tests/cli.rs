//! End-to-end runs of the `nudge-lab` binary on 16² grids.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str =
    "resolution = 16, 16\nmodes = 8\nc_interp = 200\nt_end = 0.5\nrecord_every = 1\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nudge-lab"))
        .current_dir(dir)
        .env_remove("NUDGE_LAB_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Simulates `config` into `out` and returns the stream path.
fn simulate(dir: &Path, config: &str, out: &str) -> PathBuf {
    let conf = write(dir, &format!("{out}.conf"), config);
    let o = run(
        dir,
        &["simulate", "--config", conf.to_str().unwrap(), "--out", out],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join(out).join("observations.bin")
}

#[test]
fn unknown_key_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let conf = write(
        d.path(),
        "bad.conf",
        "resolution = 16, 16\nno_such_key = 1\n",
    );
    let o = run(
        d.path(),
        &["simulate", "--config", conf.to_str().unwrap(), "--out", "x"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("no_such_key"));
}

#[test]
fn missing_output_directory_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nudge-lab"))
        .current_dir(d.path())
        .env("NUDGE_LAB_THREADS", "0")
        .args(["analyze", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_csv_exits_with_csv_code() {
    let d = TempDir::new().unwrap();
    write(d.path(), "empty.csv", "");
    write(d.path(), "ragged.csv", "t,a\n0,1\n1\n");
    for f in ["empty.csv", "ragged.csv"] {
        let o = run(d.path(), &["analyze", f]);
        assert_eq!(o.status.code(), Some(5), "{f}: {}", stderr(&o));
    }
}

#[test]
fn mismatched_stream_exits_with_mismatch_code() {
    let d = TempDir::new().unwrap();
    let stream = simulate(d.path(), SMALL, "sim");
    let stream = stream.to_str().unwrap();
    for (name, conf) in [
        (
            "modes6.conf",
            "resolution = 16, 16\nmodes = 6\nc_interp = 200\n",
        ),
        ("grid32.conf", "resolution = 32, 32\nc_interp = 200\n"),
    ] {
        let c = write(d.path(), name, conf);
        let o = run(
            d.path(),
            &[
                "check-condition",
                "--config",
                c.to_str().unwrap(),
                "--stream",
                stream,
            ],
        );
        assert_eq!(o.status.code(), Some(4), "{name}: {}", stderr(&o));
    }
}

#[test]
fn quiescent_stream_satisfies_condition_with_interval() {
    let d = TempDir::new().unwrap();
    let conf = format!("{SMALL}u_l2 = 0\ntheta_l2 = 0\n");
    let stream = simulate(d.path(), &conf, "zero");
    let c = write(d.path(), "zero_check.conf", &conf);
    let o = run(
        d.path(),
        &[
            "check-condition",
            "--config",
            c.to_str().unwrap(),
            "--stream",
            stream.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let (verdict, json) = text.split_once('\n').unwrap();
    assert!(
        verdict.starts_with("SATISFIED (sync): mu in ["),
        "{verdict}"
    );
    let report: serde_json::Value = serde_json::from_str(json).unwrap();
    assert!(report.is_object());
    assert_eq!(report["records"], 101);
}

#[test]
fn failing_condition_is_reported_but_not_an_error() {
    let d = TempDir::new().unwrap();
    // c_interp = 1 makes h exceed h0.
    let conf = "resolution = 16, 16\nt_end = 0.1\n";
    let stream = simulate(d.path(), conf, "c1");
    let c = write(d.path(), "c1_check.conf", conf);
    let o = run(
        d.path(),
        &[
            "check-condition",
            "--config",
            c.to_str().unwrap(),
            "--stream",
            stream.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("NOT SATISFIED (sync):"));
    let o = run(
        d.path(),
        &["assimilate", "--config", c.to_str().unwrap(), "--out", "a"],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn override_outside_interval_warns_and_runs() {
    let d = TempDir::new().unwrap();
    let c = write(d.path(), "small.conf", SMALL);
    let o = run(
        d.path(),
        &[
            "assimilate",
            "--config",
            c.to_str().unwrap(),
            "--out",
            "twin",
            "--override-mu",
            "1000",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("outside the admissible interval"));
    let out = stdout(&o);
    assert!(out.contains("running with mu = 1.000000e3"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("decay: ")));
    for f in ["series.csv", "condition.json", "decay.json", "summary.json"] {
        assert!(d.path().join("twin").join(f).exists(), "{f}");
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn same_seed_gives_identical_outputs() {
    let d = TempDir::new().unwrap();
    simulate(d.path(), SMALL, "a");
    simulate(d.path(), SMALL, "b");
    let (a, b) = (
        dir_bytes(&d.path().join("a")),
        dir_bytes(&d.path().join("b")),
    );
    assert_eq!(a.len(), b.len());
    for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs");
    }
    let other = simulate(d.path(), &format!("{SMALL}seed = 9\n"), "c");
    assert_ne!(
        std::fs::read(other).unwrap(),
        std::fs::read(d.path().join("a/observations.bin")).unwrap()
    );
}

#[test]
fn analyze_reproduces_recorded_integrals() {
    let d = TempDir::new().unwrap();
    simulate(d.path(), SMALL, "sim");
    let o = run(d.path(), &["analyze", "sim/series.csv", "--out", "an"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.path().join("an/series.analysis.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let acc = report["accumulators"].as_array().unwrap();
    assert_eq!(acc.len(), 4);
    for a in acc {
        assert!(a["deviation"].as_f64().unwrap() <= 1e-10, "{a}");
    }
}
