//! Replays the fuzz corpus through the same checks as the fuzz targets, plus
//! cheap deterministic mutations (truncation, byte flips) so that the
//! decoders are exercised on malformed input in every `cargo test` run.

use std::path::PathBuf;

use nudge_lab::analysis::ErrorSeries;
use nudge_lab::io::{
    decode_records, encode_records, stream_from_parts, Checkpoint, ExperimentConfig, StreamSidecar,
};

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus {target}");
    out
}

/// Truncations at a few offsets and single-byte flips along the input.
fn mutations(data: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for cut in [
        0,
        1,
        4,
        8,
        9,
        12,
        13,
        16,
        24,
        40,
        data.len() / 2,
        data.len().saturating_sub(1),
    ] {
        out.push(data[..cut.min(data.len())].to_vec());
    }
    let step = (data.len() / 64).max(1);
    for i in (0..data.len()).step_by(step) {
        for x in [0x01, 0x80, 0xff] {
            let mut m = data.to_vec();
            m[i] ^= x;
            out.push(m);
        }
    }
    out
}

fn check_config(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}

fn check_checkpoint(data: &[u8]) {
    if let Ok(c) = Checkpoint::decode(data) {
        assert_eq!(c.encode(), data);
    }
}

fn check_records(data: &[u8]) {
    if let Ok(r) = decode_records(data) {
        assert_eq!(encode_records(&r), data);
    }
}

fn check_sidecar(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = StreamSidecar::parse(text) {
        let _ = stream_from_parts(&s, Vec::new());
    }
}

fn check_csv(data: &[u8]) {
    if let Ok(s) = ErrorSeries::read_csv(data) {
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(ErrorSeries::read_csv(out.as_slice()).unwrap(), s);
    }
}

fn replay(target: &str, check: fn(&[u8]), seed_valid: impl Fn(&[u8]) -> bool) {
    for (name, data) in corpus(target) {
        assert!(seed_valid(&data), "seed {name} does not decode");
        check(&data);
        for m in mutations(&data) {
            check(&m);
        }
    }
}

#[test]
fn config_corpus() {
    replay("config_parse", check_config, |d| {
        ExperimentConfig::parse(std::str::from_utf8(d).unwrap()).is_ok()
    });
}

#[test]
fn checkpoint_corpus() {
    replay("checkpoint_decode", check_checkpoint, |d| {
        Checkpoint::decode(d).is_ok()
    });
}

#[test]
fn stream_records_corpus() {
    replay("stream_records", check_records, |d| {
        decode_records(d).is_ok()
    });
}

#[test]
fn stream_sidecar_corpus() {
    replay("stream_sidecar", check_sidecar, |d| {
        StreamSidecar::parse(std::str::from_utf8(d).unwrap()).is_ok()
    });
}

#[test]
fn series_csv_corpus() {
    replay("series_csv", check_csv, |d| {
        ErrorSeries::read_csv(d).is_ok()
    });
}

#[test]
fn stored_seed_streams_rebuild() {
    let records = corpus("stream_records");
    for (name, side) in corpus("stream_sidecar") {
        let sidecar = StreamSidecar::parse(std::str::from_utf8(&side).unwrap()).unwrap();
        let stem = if name.contains("modal") {
            "modal"
        } else {
            "volume"
        };
        let (_, bin) = records.iter().find(|(n, _)| n.contains(stem)).unwrap();
        let stream = stream_from_parts(&sidecar, decode_records(bin).unwrap()).unwrap();
        assert_eq!(stream.len(), sidecar.records);
    }
}
